//! Proximal operators, mask projection, Armijo backtracking and the
//! symmetric (pseudo)inverse solve shared by all solvers.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::linalg;
use crate::mask::IndexMask;

/// Singular values below `PINV_CUTOFF * σ_max` are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Elementwise soft threshold. Entries with `|x| <= tau` map to zero.
pub fn shrink(x: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(GsrError::NegativeThreshold(tau));
    }
    Ok(x.map(|v| shrink_scalar(v, tau)))
}

#[inline]
pub fn shrink_scalar(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Singular value thresholding `U shrink(Σ, τ) Qᵀ`, the prox of `τ‖·‖_*`.
pub fn svt(x: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if tau.is_nan() || tau < 0.0 {
        return Err(GsrError::NegativeThreshold(tau));
    }
    if tau == 0.0 {
        return Ok(x.clone());
    }
    let d = linalg::svd(x);
    let shrunk = d.singular_values.map(|s| (s - tau).max(0.0));
    if shrunk.iter().all(|&s| s == 0.0) {
        return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
    }
    Ok(d.recompose(&shrunk))
}

/// Takes `target` on the accessible set and `x` elsewhere.
pub fn project_mask(
    x: &DMatrix<f64>,
    target: &DMatrix<f64>,
    mask: &IndexMask,
) -> Result<DMatrix<f64>> {
    mask.check_shape(x, "signal")?;
    mask.check_shape(target, "target")?;
    let mut out = x.clone();
    for (r, c) in mask.entries() {
        out[(r, c)] = target[(r, c)];
    }
    Ok(out)
}

/// Armijo backtracking parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepSearchConfig {
    pub t0: f64,
    /// Shrink factor applied after each rejected step.
    pub rho: f64,
    /// Sufficient-decrease constant.
    pub c: f64,
    pub max_halvings: usize,
}

impl Default for StepSearchConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            rho: 0.5,
            c: 1e-4,
            max_halvings: 50,
        }
    }
}

impl StepSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(GsrError::InvalidParameter(format!("t0 = {}", self.t0)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(GsrError::InvalidParameter(format!("rho = {}", self.rho)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(GsrError::InvalidParameter(format!("c = {}", self.c)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub step: f64,
    pub point: DMatrix<f64>,
    /// Set when no tried step met the Armijo condition; `step` is then the
    /// smallest one tried.
    pub exhausted: bool,
}

/// Armijo backtracking along the negative gradient: accepts the first
/// `t = t0 ρᵏ` with `f(x − t g) ≤ f(x) − c t ‖g‖²`.
pub fn backtrack<F, G>(
    f: F,
    grad: G,
    x: &DMatrix<f64>,
    cfg: &StepSearchConfig,
) -> Result<StepOutcome>
where
    F: Fn(&DMatrix<f64>) -> f64,
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    cfg.validate()?;
    let fx = f(x);
    let g = grad(x);
    if !fx.is_finite() || !linalg::all_finite(&g) {
        return Err(GsrError::NonFiniteObjective);
    }
    let g2 = g.norm_squared();
    if g2 == 0.0 {
        return Ok(StepOutcome {
            step: cfg.t0,
            point: x.clone(),
            exhausted: false,
        });
    }
    let mut t = cfg.t0;
    for h in 0..=cfg.max_halvings {
        let trial = x - &g * t;
        let ft = f(&trial);
        if ft.is_finite() && ft <= fx - cfg.c * t * g2 {
            return Ok(StepOutcome {
                step: t,
                point: trial,
                exhausted: false,
            });
        }
        if h == cfg.max_halvings {
            log::warn!("backtracking exhausted after {h} halvings at t = {t:e}");
            return Ok(StepOutcome {
                step: t,
                point: trial,
                exhausted: true,
            });
        }
        t *= cfg.rho;
    }
    unreachable!()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Pseudoinverse,
}

/// Solves `H y = b` for symmetric PSD `H` through its eigendecomposition.
///
/// `Exact` fails on (numerically) singular `H`; `Pseudoinverse` returns the
/// minimum-norm least-squares solution, dropping eigenvalues below
/// [`PINV_CUTOFF`] times the largest.
pub fn regularized_solve(
    h: &DMatrix<f64>,
    b: &DMatrix<f64>,
    mode: SolveMode,
) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    if h.ncols() != n || b.nrows() != n {
        return Err(GsrError::DimensionMismatch(format!(
            "system matrix {}x{} with right-hand side {}x{}",
            h.nrows(),
            h.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let scale = h.amax().max(1.0);
    if linalg::asymmetry(h) > 1e-10 * scale {
        return Err(GsrError::InvalidParameter(
            "system matrix is not symmetric".into(),
        ));
    }
    let eig = SymmetricEigen::new(h.clone());
    let lmax = eig.eigenvalues.amax();
    let cutoff = PINV_CUTOFF * lmax;
    let singular = lmax == 0.0 || eig.eigenvalues.iter().any(|l| l.abs() <= cutoff);
    if singular && mode == SolveMode::Exact {
        return Err(GsrError::SingularMatrix);
    }
    let inv = eig.eigenvalues.map(|l| {
        if l.abs() > cutoff && lmax > 0.0 {
            1.0 / l
        } else {
            0.0
        }
    });
    let mut coeffs = eig.eigenvectors.transpose() * b;
    for (i, w) in inv.iter().enumerate() {
        coeffs.row_mut(i).scale_mut(*w);
    }
    Ok(&eig.eigenvectors * coeffs)
}
