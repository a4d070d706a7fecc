//! Graph signal recovery by minimizing the quadratic graph total variation.
//!
//! The crate covers the graph substrate ([`graph`], [`spectral`]), proximal
//! operators ([`prox`]), the recovery solvers ([`solvers`]), executable
//! bounds and identities ([`analysis`]) and graph construction, synthetic
//! data and file formats ([`data`]).

pub mod analysis;
pub mod data;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod mask;
pub mod prox;
pub mod solvers;
pub mod spectral;

pub use error::{GsrError, Result};
pub use graph::{
    matrix_variation, normalize_shift, partition_blocks, quadratic_variation, tilde_shift, Blocks,
    GraphShift,
};
pub use mask::IndexMask;
pub use spectral::{gft, igft, spectral_decomposition, SpectralBasis};

/// `N x L` real matrix whose columns are graph signals.
pub type SignalMatrix = nalgebra::DMatrix<f64>;
