use nalgebra::DMatrix;

use super::prox_gradient::{minimize, Composite};
use super::{check_measurements, RecoveryResult, SolverConfig};
use crate::error::{GsrError, Result};
use crate::graph::{tilde_shift, GraphShift};
use crate::linalg::nuclear_norm;
use crate::mask::IndexMask;
use crate::prox::{project_mask, svt};

fn check_completion(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    cfg: &SolverConfig,
) -> Result<()> {
    cfg.validate()?;
    a.require_normalized()?;
    mask.check_shape(t, "measurement")?;
    a.check_signal(t)?;
    check_measurements(t)
}

/// `S₂(X) + β‖X‖_*` over `{X : X_M = T_M}`.
struct Minimization<'a> {
    tilde: DMatrix<f64>,
    beta: f64,
    target: &'a DMatrix<f64>,
    mask: &'a IndexMask,
}

impl Composite for Minimization<'_> {
    fn smooth(&self, x: &DMatrix<f64>) -> f64 {
        (x.transpose() * &self.tilde * x).trace()
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.tilde * x * 2.0
    }

    fn nonsmooth(&self, x: &DMatrix<f64>) -> f64 {
        if self.beta == 0.0 {
            0.0
        } else {
            self.beta * nuclear_norm(x)
        }
    }

    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        project_mask(&svt(x, step * self.beta)?, self.target, self.mask)
    }

    fn guard_descent(&self) -> bool {
        true
    }
}

/// Graph signal matrix completion by minimization: projected proximal
/// gradient on `S₂(X) + β‖X‖_*` with `X_M = T_M` held at every iterate.
pub fn gmcm(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_completion(t, mask, a, cfg)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(GsrError::InvalidParameter(format!("beta = {beta}")));
    }
    if mask.is_empty() {
        return Err(GsrError::EmptyAccessibleSet);
    }
    let problem = Minimization {
        tilde: tilde_shift(a),
        beta,
        target: t,
        mask,
    };
    let x0 = project_mask(&DMatrix::zeros(t.nrows(), t.ncols()), t, mask)?;
    let run = minimize(&problem, x0, &cfg.step, cfg.tol_outer, cfg.max_outer)?;
    Ok(run.into_result())
}

/// `‖(X − T)_M‖_F² + α S₂(X) + β‖X‖_*`.
struct Regularization<'a> {
    tilde: DMatrix<f64>,
    alpha: f64,
    beta: f64,
    target: &'a DMatrix<f64>,
    mask: &'a IndexMask,
}

impl Regularization<'_> {
    fn masked_residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mask.restrict(&(x - self.target))
    }
}

impl Composite for Regularization<'_> {
    fn smooth(&self, x: &DMatrix<f64>) -> f64 {
        let fit = self.masked_residual(x).norm_squared();
        if self.alpha == 0.0 {
            fit
        } else {
            fit + self.alpha * (x.transpose() * &self.tilde * x).trace()
        }
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = self.masked_residual(x) * 2.0;
        if self.alpha != 0.0 {
            g += &self.tilde * x * (2.0 * self.alpha);
        }
        g
    }

    fn nonsmooth(&self, x: &DMatrix<f64>) -> f64 {
        if self.beta == 0.0 {
            0.0
        } else {
            self.beta * nuclear_norm(x)
        }
    }

    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        svt(x, step * self.beta)
    }
}

/// Graph signal matrix completion by regularization: proximal gradient on
/// `‖(X − T)_M‖_F² + α S₂(X) + β‖X‖_*`. With `α = 0` this is plain
/// nuclear-norm regularized completion.
pub fn gmcr(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    alpha: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_completion(t, mask, a, cfg)?;
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(GsrError::InvalidParameter(format!("{name} = {v}")));
        }
    }
    let problem = Regularization {
        tilde: tilde_shift(a),
        alpha,
        beta,
        target: t,
        mask,
    };
    let x0 = project_mask(&DMatrix::zeros(t.nrows(), t.ncols()), t, mask)?;
    let run = minimize(&problem, x0, &cfg.step, cfg.tol_outer, cfg.max_outer)?;
    Ok(run.into_result())
}
