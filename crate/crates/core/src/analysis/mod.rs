//! Executable versions of the recovery guarantees: the inpainting error
//! bound, the variation/SVD identity and its consequences, and the K-norm
//! used to reason about anomaly detection.

mod bound;
mod knorm;
pub mod suite;
mod variation;

pub use bound::{inpainting_bound, verify_inpainting_bound, BoundCheck, BoundReport};
pub use knorm::{residual_decomposition, KNormOperator, OutlierModel, ResidualDecomposition};
pub use variation::{nuclear_tv_bound, subspace_smoothness_bound, tv_svd_terms, Inequality};
