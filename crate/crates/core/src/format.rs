//! JSON tensor files.
//!
//! Two layouts are accepted:
//!
//! ```json
//! {"dims": [2, 2], "coo": [[1, 1, 3.0], [2, 1, -1.5]]}
//! {"dims": [2, 2], "dense": [3.0, 0.0, -1.5, 0.0]}
//! ```
//!
//! `coo` indices are 1-based and unlisted entries are zero; `dense` is
//! row-major. The writer always emits `coo`, sorted lexicographically and
//! skipping zeros.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::tensor::{increment, Tensor};

#[derive(Debug, Serialize, Deserialize)]
struct TensorFile {
    dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coo: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dense: Option<Vec<f64>>,
}

pub fn parse_tensor(text: &str) -> Result<Tensor> {
    let file: TensorFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("tensor file: {e}")))?;
    match (file.coo, file.dense) {
        (Some(coo), None) => from_coo(file.dims, &coo),
        (None, Some(dense)) => Tensor::from_vec(file.dims, dense).map_err(|e| Error::Parse(e.to_string())),
        _ => Err(Error::Parse(
            "tensor file needs exactly one of \"coo\" or \"dense\"".into(),
        )),
    }
}

fn from_coo(dims: Vec<usize>, coo: &[Vec<Value>]) -> Result<Tensor> {
    let d = dims.len();
    let mut t = Tensor::zeros(dims).map_err(|e| Error::Parse(e.to_string()))?;
    let mut idx = vec![0; d];
    for (row, entry) in coo.iter().enumerate() {
        if entry.len() != d + 1 {
            return Err(Error::Parse(format!(
                "coo entry {row} has {} fields, expected {}",
                entry.len(),
                d + 1
            )));
        }
        for k in 0..d {
            let i = entry[k]
                .as_u64()
                .ok_or_else(|| Error::Parse(format!("coo entry {row}: index {k} is not a positive integer")))?
                as usize;
            if i == 0 || i > t.dims()[k] {
                return Err(Error::Parse(format!(
                    "coo entry {row}: index {i} out of range 1..={}",
                    t.dims()[k]
                )));
            }
            idx[k] = i - 1;
        }
        let v = entry[d]
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("coo entry {row}: value is not a number")))?;
        t.set(&idx, v);
    }
    Ok(t)
}

pub fn write_tensor(t: &Tensor) -> String {
    let mut coo = Vec::new();
    let mut idx = vec![0; t.order()];
    for &v in t.data() {
        if v != 0.0 {
            let mut entry: Vec<Value> = idx.iter().map(|i| Value::from(i + 1)).collect();
            entry.push(Value::from(v));
            coo.push(entry);
        }
        increment(&mut idx, t.dims());
    }
    let file = TensorFile {
        dims: t.dims().to_vec(),
        coo: Some(coo),
        dense: None,
    };
    serde_json::to_string(&file).expect("tensor file serializes")
}
