use nalgebra::{Cholesky, DMatrix, Dyn};

use super::prox_gradient::{minimize, Composite};
use super::{check_measurements, RecoveryResult, SolverConfig, FEASIBILITY_TOL};
use crate::error::{GsrError, Result};
use crate::graph::{tilde_shift, GraphShift};
use crate::linalg::{l1_norm, nuclear_norm};
use crate::mask::IndexMask;
use crate::prox::{shrink, svt};

/// X block: `η/2 ‖X − P‖² + η/2 ‖X − Q‖² + β‖X‖_*`.
struct LowRankBlock<'a> {
    p: &'a DMatrix<f64>,
    q: &'a DMatrix<f64>,
    eta: f64,
    beta: f64,
}

impl Composite for LowRankBlock<'_> {
    fn smooth(&self, x: &DMatrix<f64>) -> f64 {
        0.5 * self.eta * ((x - self.p).norm_squared() + (x - self.q).norm_squared())
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        (x * 2.0 - self.p - self.q) * self.eta
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

/// E block: `η/2 ‖E − R‖² + γ‖E‖₁`.
struct SparseBlock<'a> {
    r: &'a DMatrix<f64>,
    eta: f64,
    gamma: f64,
}

impl Composite for SparseBlock<'_> {
    fn smooth(&self, e: &DMatrix<f64>) -> f64 {
        0.5 * self.eta * (e - self.r).norm_squared()
    }

    fn gradient(&self, e: &DMatrix<f64>) -> DMatrix<f64> {
        (e - self.r) * self.eta
    }

    fn nonsmooth(&self, e: &DMatrix<f64>) -> f64 {
        self.gamma * l1_norm(e)
    }

    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        shrink(x, step * self.gamma)
    }
}

/// Factor of `I + 2α/η Ã`, or `None` when `α = 0`.
fn smoothing_factor(
    tilde: &DMatrix<f64>,
    alpha: f64,
    eta: f64,
) -> Result<Option<Cholesky<f64, Dyn>>> {
    if alpha == 0.0 {
        return Ok(None);
    }
    let n = tilde.nrows();
    let m = DMatrix::identity(n, n) + tilde * (2.0 * alpha / eta);
    m.cholesky().map(Some).ok_or(GsrError::SingularMatrix)
}

fn smooth_solve(factor: &Option<Cholesky<f64, Dyn>>, rhs: DMatrix<f64>) -> DMatrix<f64> {
    match factor {
        Some(f) => f.solve(&rhs),
        None => rhs,
    }
}

fn variation(tilde: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (x.transpose() * tilde * x).trace()
}

/// Sets the accessible entries to zero.
fn zero_accessible(mask: &IndexMask, mut c: DMatrix<f64>) -> DMatrix<f64> {
    for (i, j) in mask.entries() {
        c[(i, j)] = 0.0;
    }
    c
}

fn check_admm(
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

/// General graph signal recovery by ADMM.
///
/// Minimizes `‖W‖_F² + α S₂(X) + β‖X‖_* + γ‖E‖₁` subject to
/// `T_M = (X + W + E)_M`, with the weights taken from `cfg`. The noise block
/// `W` is dropped when `cfg.epsilon == 0` and the outlier block `E` when
/// `cfg.gamma == 0`. The run stops once the objective changes by less than
/// `cfg.tol_outer`; it counts as converged when, in addition, both
/// constraint residuals are within [`FEASIBILITY_TOL`]` · (1 + ‖T‖_F)`.
pub fn gsr_admm(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_admm(t, mask, a, cfg)?;
    let (n, l) = t.shape();
    let eta = cfg.penalty;
    let (alpha, beta, gamma) = (cfg.alpha, cfg.beta, cfg.gamma);
    let with_noise = cfg.epsilon > 0.0;
    let with_outliers = gamma > 0.0;
    let tilde = tilde_shift(a);
    let factor = smoothing_factor(&tilde, alpha, eta)?;

    let objective = |x: &DMatrix<f64>, w: &DMatrix<f64>, e: &DMatrix<f64>| {
        let mut f = alpha * variation(&tilde, x);
        if with_noise {
            f += w.norm_squared();
        }
        if beta > 0.0 {
            f += beta * nuclear_norm(x);
        }
        if with_outliers {
            f += gamma * l1_norm(e);
        }
        f
    };

    let mut out = RecoveryResult::zeros(n, l);
    out.x = mask.restrict(t);
    let feas_tol = FEASIBILITY_TOL * (1.0 + t.norm());
    let mut obj = objective(&out.x, &out.w, &out.e);
    out.initial_objective = obj;

    for _ in 0..cfg.max_outer {
        let RecoveryResult {
            x,
            w,
            e,
            z,
            c,
            y1,
            y2,
            step_exhausted,
            ..
        } = &mut out;

        let p = t - &*w - &*e - &*c - &*y1 / eta;
        let q = &*z + &*y2 / eta;
        let block = LowRankBlock {
            p: &p,
            q: &q,
            eta,
            beta,
        };
        let run = minimize(&block, x.clone(), &cfg.step, cfg.tol_inner, cfg.max_inner)?;
        *step_exhausted |= run.exhausted;
        *x = run.x;

        if with_noise {
            *w = (t - &*x - &*e - &*c - &*y1 / eta) * (eta / (eta + 2.0));
        }

        if with_outliers {
            let r = t - &*x - &*w - &*c - &*y1 / eta;
            let block = SparseBlock { r: &r, eta, gamma };
            let run = minimize(&block, e.clone(), &cfg.step, cfg.tol_inner, cfg.max_inner)?;
            *step_exhausted |= run.exhausted;
            *e = run.x;
        }

        *z = smooth_solve(&factor, &*x - &*y2 / eta);
        *c = zero_accessible(mask, t - &*x - &*w - &*e - &*y1 / eta);

        let r1 = t - &*x - &*w - &*e - &*c;
        let r2 = &*x - &*z;
        *y1 -= &r1 * eta;
        *y2 -= &r2 * eta;

        let next = objective(x, w, e);
        if !next.is_finite() {
            return Err(GsrError::NonFiniteObjective);
        }
        let diff = (obj - next).abs();
        obj = next;
        out.trace.push(obj);
        if diff < cfg.tol_outer && r1.norm() <= feas_tol && r2.norm() <= feas_tol {
            out.converged = true;
            break;
        }
    }
    out.iterations = out.trace.len();
    if !out.converged {
        log::warn!(
            "ADMM stopped after {} iterations without converging",
            out.iterations
        );
    }
    Ok(out)
}

/// Robust inpainting: minimizes `‖(t − x − e)_M‖² + α S₂(x) + γ‖e‖₁` by
/// ADMM. Outliers among the accessible measurements land in `e`; `λ` is
/// returned in `y1`.
pub fn rgtvr(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    alpha: f64,
    gamma: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_admm(t, mask, a, cfg)?;
    mask.require_node_mask()?;
    if mask.is_empty() {
        return Err(GsrError::EmptyAccessibleSet);
    }
    for (name, v) in [("alpha", alpha), ("gamma", gamma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(GsrError::InvalidParameter(format!("{name} = {v}")));
        }
    }
    let (n, l) = t.shape();
    let eta = cfg.penalty;
    let tilde = tilde_shift(a);
    let factor = smoothing_factor(&tilde, alpha, eta)?;
    let objective = |x: &DMatrix<f64>, e: &DMatrix<f64>| {
        mask.restrict(&(t - x - e)).norm_squared()
            + alpha * variation(&tilde, x)
            + gamma * l1_norm(e)
    };

    let mut out = RecoveryResult::zeros(n, l);
    out.x = mask.restrict(t);
    let feas_tol = FEASIBILITY_TOL * (1.0 + t.norm());
    let mut obj = objective(&out.x, &out.e);
    out.initial_objective = obj;

    for _ in 0..cfg.max_outer {
        let RecoveryResult {
            x,
            w,
            e,
            c,
            y1: lambda,
            ..
        } = &mut out;
        *x = smooth_solve(&factor, t - &*e - &*w - &*c - &*lambda / eta);
        *w = (t - &*x - &*e - &*c - &*lambda / eta) * (eta / (eta + 2.0));
        *e = shrink(&(t - &*x - &*w - &*c - &*lambda / eta), gamma / eta)?;
        let r = t - &*x - &*e - &*w - &*c;
        *lambda -= &r * eta;
        *c = zero_accessible(mask, t - &*x - &*w - &*e - &*lambda / eta);

        let residual = (t - &*x - &*e - &*w - &*c).norm();
        let next = objective(x, e);
        if !next.is_finite() {
            return Err(GsrError::NonFiniteObjective);
        }
        let diff = (obj - next).abs();
        obj = next;
        out.trace.push(obj);
        if diff < cfg.tol_outer && residual <= feas_tol {
            out.converged = true;
            break;
        }
    }
    out.iterations = out.trace.len();
    if !out.converged {
        log::warn!(
            "RGTVR stopped after {} iterations without converging",
            out.iterations
        );
    }
    Ok(out)
}
