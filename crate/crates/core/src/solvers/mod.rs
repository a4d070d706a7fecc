//! Recovery algorithms built on the quadratic graph total variation.
//!
//! * [`gtvm`], [`gtvr`]: closed-form inpainting, plus the noise-budget form
//!   [`gtv_constrained`].
//! * [`gmcm`], [`gmcr`]: matrix completion by (projected) proximal gradient.
//! * [`anomaly_detect`], [`anomaly_detect_constrained`]: ℓ1 outlier
//!   detection.
//! * [`gsr_admm`], [`rgtvr`]: ADMM for the general and the robust
//!   inpainting problems.

mod admm;
mod anomaly;
mod completion;
mod inpaint;
mod prox_gradient;

pub use admm::{gsr_admm, rgtvr};
pub use anomaly::{anomaly_detect, anomaly_detect_constrained};
pub use completion::{gmcm, gmcr};

pub use inpaint::{gtv_constrained, gtvm, gtvr};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::prox::StepSearchConfig;

/// ADMM feasibility target, relative to `1 + ‖T‖_F`.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Shared solver parameters.
///
/// `epsilon` is the noise budget of the measurement model. The ADMM solver
/// treats `epsilon == 0` as the noiseless model (`W ≡ 0`); any positive
/// value enables the penalized noise block `‖W‖_F²`. Likewise `gamma == 0`
/// removes the outlier block (`E ≡ 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// ADMM penalty.
    pub penalty: f64,
    pub tol_outer: f64,
    pub tol_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub step: StepSearchConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            epsilon: 1.0,
            penalty: 1.0,
            tol_outer: 1e-8,
            tol_inner: 1e-8,
            max_outer: 10_000,
            max_inner: 100,
            step: StepSearchConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_weights(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(GsrError::InvalidParameter(format!("{name} = {v}")));
            }
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(GsrError::InvalidParameter(format!(
                "penalty = {}",
                self.penalty
            )));
        }
        if !(self.tol_outer > 0.0 && self.tol_inner > 0.0) {
            return Err(GsrError::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(GsrError::InvalidParameter(
                "iteration caps must be positive".into(),
            ));
        }
        self.step.validate()
    }
}

/// Output of the iterative solvers.
///
/// Blocks a solver does not use stay zero. `trace[k]` is the objective after
/// iteration `k + 1`; `initial_objective` is its value at the starting point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryResult {
    #[serde(with = "matrix_rows")]
    pub x: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub w: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub e: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub z: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub c: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub y1: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub y2: DMatrix<f64>,
    pub initial_objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when a line search ran out of halvings.
    pub step_exhausted: bool,
    /// Threads used by the dense kernels; solvers run single-threaded.
    pub threads: usize,
}

impl RecoveryResult {
    pub(crate) fn zeros(nrows: usize, ncols: usize) -> Self {
        let z = DMatrix::zeros(nrows, ncols);
        Self {
            x: z.clone(),
            w: z.clone(),
            e: z.clone(),
            z: z.clone(),
            c: z.clone(),
            y1: z.clone(),
            y2: z,
            initial_objective: 0.0,
            trace: Vec::new(),
            iterations: 0,
            converged: false,
            step_exhausted: false,
            threads: 1,
        }
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().copied().unwrap_or(self.initial_objective)
    }

    /// Turns a non-converged run into `NonConvergence`.
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(GsrError::NonConvergence(self.iterations))
        }
    }
}

/// Serializes matrices as a list of rows.
pub mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}

pub(crate) fn check_measurements(t: &DMatrix<f64>) -> Result<()> {
    if !crate::linalg::all_finite(t) {
        return Err(GsrError::NonFinite("measurements".into()));
    }
    Ok(())
}
