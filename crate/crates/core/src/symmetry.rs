//! Symmetrization, index transposes, block stacking and the scaling
//! constructions that relate multilinear and polynomial problems.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::norms::lp_norm;
use crate::tensor::{checked_len, increment, Tensor, DEFAULT_MAX_ENTRIES};

/// Consecutive index ranges of lengths `n₁, …, n_d` covering `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockPartition {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::shape("block sizes must be non-empty and positive"));
        }
        let offsets = dims
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n;
                Some(o)
            })
            .collect();
        Ok(BlockPartition {
            dims: dims.to_vec(),
            offsets,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j] + self.dims[j]
    }
}

fn check_permutation(pi: &[usize], d: usize) -> Result<()> {
    if pi.len() != d {
        return Err(Error::domain(format!(
            "permutation has length {}, order is {d}",
            pi.len()
        )));
    }
    let mut seen = vec![false; d];
    for &k in pi {
        if k >= d || std::mem::replace(&mut seen[k], true) {
            return Err(Error::domain(format!("{pi:?} is not a permutation of 0..{d}")));
        }
    }
    Ok(())
}

/// The `π`-transpose: `result[i_{π₁}, …, i_{π_d}] = A[i₁, …, i_d]`, with
/// `pi` 0-based. Result dims are `(n_{π₁}, …, n_{π_d})`.
pub fn pi_transpose(a: &Tensor, pi: &[usize]) -> Result<Tensor> {
    check_permutation(pi, a.order())?;
    let dims: Vec<usize> = pi.iter().map(|&k| a.dims()[k]).collect();
    let mut out = Tensor::zeros(dims)?;
    let mut idx = vec![0; a.order()];
    let mut dst = vec![0; a.order()];
    for &v in a.data() {
        for (slot, &k) in dst.iter_mut().zip(pi) {
            *slot = idx[k];
        }
        out.set(&dst, v);
        increment(&mut idx, a.dims());
    }
    Ok(out)
}

/// `sym(A)`: the cubical order-`d` tensor of side `N = Σ nⱼ` whose
/// `(χ₁, …, χ_d)` block is `A^χ` when `χ` is a permutation and zero
/// otherwise. Satisfies `f_{sym(A)}(stack(x)) = d!·F_A(x¹, …, x^d)`.
pub fn symmetrize(a: &Tensor) -> Result<Tensor> {
    symmetrize_with_cap(a, DEFAULT_MAX_ENTRIES)
}

pub fn symmetrize_with_cap(a: &Tensor, cap: usize) -> Result<Tensor> {
    let d = a.order();
    if d < 2 {
        return Err(Error::domain("symmetrize needs order >= 2"));
    }
    let part = BlockPartition::new(a.dims())?;
    let n_total = part.total();
    let side = vec![n_total; d];
    checked_len(&side, cap)?;
    let mut out = Tensor::zeros_with_cap(side, cap)?;
    let perms: Vec<Vec<usize>> = (0..d).permutations(d).collect();
    let mut idx = vec![0; d];
    let mut dst = vec![0; d];
    for &v in a.data() {
        if v != 0.0 {
            for chi in &perms {
                // block χ holds A^χ, so slot k carries original index χ_k
                for (k, &c) in chi.iter().enumerate() {
                    dst[k] = part.offsets[c] + idx[c];
                }
                out.set(&dst, v);
            }
        }
        increment(&mut idx, a.dims());
    }
    Ok(out)
}

/// Concatenates block vectors.
pub fn stack<V: AsRef<[f64]>>(xs: &[V]) -> Vec<f64> {
    xs.iter().flat_map(|x| x.as_ref().iter().copied()).collect()
}

/// Inverse of [`stack`].
pub fn split(z: &[f64], partition: &BlockPartition) -> Result<Vec<Vec<f64>>> {
    if z.len() != partition.total() {
        return Err(Error::shape(format!(
            "vector of length {} does not match partition total {}",
            z.len(),
            partition.total()
        )));
    }
    Ok((0..partition.blocks())
        .map(|j| z[partition.range(j)].to_vec())
        .collect())
}

/// Order-`d` tensor of dims `(1, …, 1, m, n)` carrying `B` in its last two
/// slots, so that `F(z₁, …, z_{d-2}, x, y) = (∏ zᵢ)·xᵀBy`.
pub fn embed_matrix(b: &Tensor, d: usize) -> Result<Tensor> {
    if b.order() != 2 {
        return Err(Error::shape("embed_matrix expects a matrix"));
    }
    if d < 2 {
        return Err(Error::domain("embedding order must be >= 2"));
    }
    let mut dims = vec![1; d - 2];
    dims.extend_from_slice(b.dims());
    Tensor::from_vec(dims, b.data().to_vec())
}

/// Maximum deviation `|‖zⁱ‖_p − 1|` at which [`rebalance_blocks`] stops.
pub const REBALANCE_TOL: f64 = 1e-10;
const REBALANCE_MAX_STEPS: usize = 100_000;

/// Rescales block vectors to unit `p`-norm without decreasing a positive
/// multilinear value.
///
/// For finite `p` the input is first scaled uniformly to total mass
/// `Σ‖zⁱ‖_p^p = d`. Then the block with the largest mass deviation `θ` is
/// scaled by `θ^{-1/p}` and every other block by `((d−1)/(d−θ))^{1/p}`; this
/// keeps the total mass at `d` and multiplies `F` by
/// `(d−1)^{(d−1)/p}·((d−θ)^{d−1}θ)^{-1/p} ≥ 1`. Steps repeat until every
/// block norm is within [`REBALANCE_TOL`] of one.
///
/// For `p = ∞` each block is scaled to unit max-norm independently; `F`
/// does not decrease when the input blocks were feasible (`‖zⁱ‖_∞ ≤ 1`).
///
/// Inputs with `F ≤ 0` are accepted but the monotonicity claim only covers
/// `F > 0`; flip one block first if needed.
pub fn rebalance_blocks(zs: &[Vec<f64>], p: f64) -> Result<Vec<Vec<f64>>> {
    let d = zs.len();
    if d == 0 {
        return Err(Error::shape("no blocks to rebalance"));
    }
    if p < 2.0 {
        return Err(Error::domain(format!("rebalance needs p >= 2, got {p}")));
    }
    let norms: Vec<f64> = zs.iter().map(|z| lp_norm(z, p)).collect();
    if let Some(j) = norms.iter().position(|n| *n == 0.0) {
        return Err(Error::degenerate(format!("block {j} is zero")));
    }
    let mut out = zs.to_vec();
    if p.is_infinite() {
        for (z, n) in out.iter_mut().zip(&norms) {
            z.iter_mut().for_each(|v| *v /= n);
        }
        return Ok(out);
    }
    if d == 1 {
        out[0].iter_mut().for_each(|v| *v /= norms[0]);
        return Ok(out);
    }
    let df = d as f64;
    let total: f64 = norms.iter().map(|n| n.powf(p)).sum();
    let pre = (df / total).powf(1.0 / p);
    for z in out.iter_mut() {
        z.iter_mut().for_each(|v| *v *= pre);
    }

    for _ in 0..REBALANCE_MAX_STEPS {
        let mass: Vec<f64> = out.iter().map(|z| lp_norm(z, p).powf(p)).collect();
        let (j, dev) = mass
            .iter()
            .map(|m| (m.powf(1.0 / p) - 1.0).abs())
            .enumerate()
            .fold((0, 0.0), |best, (i, dv)| if dv > best.1 { (i, dv) } else { best });
        if dev <= REBALANCE_TOL {
            return Ok(out);
        }
        // the others carry d − θ in exact arithmetic; use their actual mass
        let rest_mass: f64 = mass.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, m)| m).sum();
        let own = mass[j].powf(-1.0 / p);
        let rest = ((df - 1.0) / rest_mass).powf(1.0 / p);
        for (i, z) in out.iter_mut().enumerate() {
            let s = if i == j { own } else { rest };
            z.iter_mut().for_each(|v| *v *= s);
        }
    }
    Err(Error::Invariant(format!(
        "block rebalancing did not settle within {REBALANCE_MAX_STEPS} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: Vec<usize>, rng: &mut ChaCha8Rng) -> Tensor {
        Tensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn transpose_matrix() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = pi_transpose(&a, &[1, 0]).unwrap();
        let expect = Tensor::from_rows(&[vec![1.0, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]]).unwrap();
        assert_eq!(t, expect);
        assert_eq!(pi_transpose(&a, &[0, 1]).unwrap(), a);
    }

    #[test]
    fn transpose_order_three_by_index_bookkeeping() {
        let a = Tensor::from_fn(vec![2, 3, 4], |i| (100 * i[0] + 10 * i[1] + i[2]) as f64).unwrap();
        // π = (3,1,2) in 1-based notation
        let t = pi_transpose(&a, &[2, 0, 1]).unwrap();
        assert_eq!(t.dims(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(t.get(&[k, i, j]), a.get(&[i, j, k]));
                }
            }
        }
    }

    #[test]
    fn transpose_rejects_non_permutations() {
        let a = Tensor::zeros(vec![2, 2]).unwrap();
        assert!(matches!(pi_transpose(&a, &[0, 0]), Err(Error::Domain(_))));
        assert!(matches!(pi_transpose(&a, &[0]), Err(Error::Domain(_))));
        assert!(matches!(pi_transpose(&a, &[0, 2]), Err(Error::Domain(_))));
    }

    #[test]
    fn symmetrize_matrix_block_form() {
        let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = symmetrize(&a).unwrap();
        let expect = Tensor::from_rows(&[
            vec![0.0, 0.0, 1.0, 2.0],
            vec![0.0, 0.0, 3.0, 4.0],
            vec![1.0, 3.0, 0.0, 0.0],
            vec![2.0, 4.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(s, expect);
    }

    #[test]
    fn symmetrize_zero_and_caps() {
        let z = Tensor::zeros(vec![1, 2, 3]).unwrap();
        let s = symmetrize(&z).unwrap();
        assert_eq!(s.dims(), &[6, 6, 6]);
        assert!(s.is_zero());
        assert!(matches!(symmetrize_with_cap(&z, 100), Err(Error::Resource(_))));
        assert!(symmetrize(&Tensor::from_vec(vec![3], vec![1.0; 3]).unwrap()).is_err());
    }

    #[test]
    fn symmetrize_is_supersymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dims in [vec![2, 3], vec![1, 2, 2], vec![2, 1, 3], vec![1, 1, 2, 1]] {
            let s = symmetrize(&random_tensor(dims, &mut rng)).unwrap();
            assert!(s.is_supersymmetric(1e-12));
        }
    }

    #[test]
    fn symmetrization_identity_small_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_tensor(vec![1, 1, 2], &mut rng);
        let s = symmetrize(&a).unwrap();
        for _ in 0..20 {
            let xs: Vec<Vec<f64>> = a.dims().iter().map(|&n| random_vec(n, &mut rng)).collect();
            let lhs = s.eval_poly(&stack(&xs)).unwrap();
            let rhs = 6.0 * a.eval_multilinear(&xs).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn stack_and_split() {
        assert_eq!(stack(&[vec![1.0, 2.0], vec![3.0]]), vec![1.0, 2.0, 3.0]);
        let part = BlockPartition::new(&[2, 2]).unwrap();
        assert_eq!(
            split(&[1.0, 2.0, 3.0, 4.0], &part).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
        assert!(matches!(split(&[1.0], &part), Err(Error::Shape(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<Vec<f64>> = [3, 1, 4].iter().map(|&n| random_vec(n, &mut rng)).collect();
        let part = BlockPartition::new(&[3, 1, 4]).unwrap();
        assert_eq!(split(&stack(&xs), &part).unwrap(), xs);
    }

    #[test]
    fn embed_matrix_examples() {
        let one = Tensor::from_rows(&[vec![1.0]]).unwrap();
        let e = embed_matrix(&one, 3).unwrap();
        assert_eq!(e.dims(), &[1, 1, 1]);
        assert_eq!(e.data(), &[1.0]);

        let b = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let e = embed_matrix(&b, 4).unwrap();
        assert_eq!(e.dims(), &[1, 1, 2, 2]);
        let v = e
            .eval_multilinear(&[vec![1.0], vec![-1.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        assert_eq!(v, -2.0);
        assert_eq!(embed_matrix(&b, 2).unwrap(), b);
    }

    #[test]
    fn rebalance_two_blocks_closed_form() {
        // d = 2, p = 2, θ = ‖z¹‖² = 0.5, ‖z²‖² = 1.5
        let b = Tensor::from_rows(&[vec![1.0, 0.5], vec![0.25, 1.0]]).unwrap();
        let z1 = vec![0.5, 0.5];
        let z2 = vec![1.5f64.sqrt(), 0.0];
        let before = b.eval_multilinear(&[&z1, &z2]).unwrap();
        let out = rebalance_blocks(&[z1.clone(), z2.clone()], 2.0).unwrap();
        let after = b.eval_multilinear(&out).unwrap();
        // (d−1)^{(d−1)/p}((d−θ)^{d−1}θ)^{−1/p} with d=2, p=2, θ=0.5
        let factor = (1.5f64 * 0.5).powf(-0.5);
        assert!((factor - 1.1547005383792515).abs() < 1e-15);
        assert!((after / before - factor).abs() < 1e-12);
        for (z, orig, s) in [(&out[0], &z1, 0.5f64.powf(-0.5)), (&out[1], &z2, (1.0f64 / 1.5).sqrt())] {
            for (a, b) in z.iter().zip(orig.iter()) {
                assert!((a - s * b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rebalance_fixed_point() {
        let zs = vec![vec![0.6, 0.8], vec![1.0, 0.0, 0.0]];
        let out = rebalance_blocks(&zs, 2.0).unwrap();
        for (a, b) in out.iter().flatten().zip(zs.iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rebalance_three_blocks_p4() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = 4.0;
        for _ in 0..20 {
            let a = random_tensor(vec![2, 3, 2], &mut rng);
            let mut zs: Vec<Vec<f64>> = a.dims().iter().map(|&n| random_vec(n, &mut rng)).collect();
            // normalize to total mass d
            let mass: f64 = zs.iter().map(|z| lp_norm(z, p).powf(p)).sum();
            let s = (3.0 / mass).powf(1.0 / p);
            zs.iter_mut().for_each(|z| z.iter_mut().for_each(|v| *v *= s));
            let mut before = a.eval_multilinear(&zs).unwrap();
            if before < 0.0 {
                zs[0].iter_mut().for_each(|v| *v = -*v);
                before = -before;
            }
            let out = rebalance_blocks(&zs, p).unwrap();
            for z in &out {
                assert!((lp_norm(z, p) - 1.0).abs() <= 1e-10);
            }
            let after = a.eval_multilinear(&out).unwrap();
            assert!(after >= before * (1.0 - 1e-12), "{after} < {before}");
        }
    }

    #[test]
    fn rebalance_infinity_and_errors() {
        let out = rebalance_blocks(&[vec![0.5, -0.25], vec![0.1]], f64::INFINITY).unwrap();
        assert_eq!(out, vec![vec![1.0, -0.5], vec![1.0]]);
        assert!(matches!(
            rebalance_blocks(&[vec![0.0], vec![1.0]], 3.0),
            Err(Error::Degenerate(_))
        ));
        assert!(rebalance_blocks(&[vec![1.0]], 1.5).is_err());
    }

    #[test]
    fn permutation_expansion_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = random_tensor(vec![2, 1, 2], &mut rng);
        let part = BlockPartition::new(a.dims()).unwrap();
        let s = symmetrize(&a).unwrap();
        let zs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(part.total(), &mut rng)).collect();
        let blocks: Vec<Vec<Vec<f64>>> = zs.iter().map(|z| split(z, &part).unwrap()).collect();
        let mut expansion = 0.0;
        for pi in (0..3).permutations(3) {
            let args: Vec<&Vec<f64>> = (0..3).map(|j| &blocks[pi[j]][j]).collect();
            expansion += a.eval_multilinear(&args).unwrap();
        }
        let lhs = s.eval_multilinear(&zs).unwrap();
        assert!((lhs - expansion).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}
