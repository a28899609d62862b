//! Randomized approximation of `max F_A(x¹, …, x^d)` and `max f_A(x)` over
//! products of unit `L_p` balls, `p ∈ (2, ∞]`.

pub mod config;
pub mod error;
pub mod format;
pub mod hpopt;
pub mod mlopt;
pub mod norms;
pub mod oracle;
pub mod pqnorm;
pub mod sampler;
pub mod symmetry;
pub mod tensor;

pub use config::{RoundingStrategy, SolverConfig};
pub use error::{Error, Result};
pub use hpopt::{solve_hp, HpCertificate, HpInstance, Parity};
pub use mlopt::{solve_ml, solve_ml_d2, MlCertificate, MlInstance};
pub use norms::Exponent;
pub use oracle::{OracleMethod, OracleResult};
pub use pqnorm::{estimate_pq_norm, GramSolution, PqNormEstimate, RoundedPair};
pub use tensor::{ContractionSpec, SymmetricTensor, Tensor};
