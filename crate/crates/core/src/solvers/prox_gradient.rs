//! Proximal gradient with backtracking, shared by the completion, anomaly
//! detection and ADMM inner solvers.

use nalgebra::DMatrix;

use super::RecoveryResult;
use crate::error::{GsrError, Result};
use crate::prox::StepSearchConfig;

/// Composite objective `f(x) + h(x)` with smooth `f` and prox-friendly `h`.
pub(crate) trait Composite {
    fn smooth(&self, x: &DMatrix<f64>) -> f64;
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    fn nonsmooth(&self, x: &DMatrix<f64>) -> f64;
    /// Prox of `step * h`, followed by any feasibility projection.
    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>>;
    /// Require the full objective to decrease on every accepted step. Needed
    /// when `prox` includes a projection that is not part of `h`.
    fn guard_descent(&self) -> bool {
        false
    }
}

pub(crate) struct Run {
    pub x: DMatrix<f64>,
    pub initial_objective: f64,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub exhausted: bool,
}

impl Run {
    pub(crate) fn into_result(self) -> RecoveryResult {
        let mut out = RecoveryResult::zeros(self.x.nrows(), self.x.ncols());
        out.x = self.x;
        out.initial_objective = self.initial_objective;
        out.iterations = self.trace.len();
        out.trace = self.trace;
        out.converged = self.converged;
        out.step_exhausted = self.exhausted;
        out
    }
}

/// Iterates `x ← prox_t(x − t ∇f(x))` until the objective changes by less
/// than `tol` between iterations. Each step size starts from `step.t0` and
/// shrinks by `step.rho` until the curvature condition
/// `⟨∇f(x⁺) − ∇f(x), x⁺ − x⟩ ≤ ‖x⁺ − x‖² / t` holds. Every smooth part in
/// this crate is a convex quadratic, for which this is the same as the upper
/// bound `f(x⁺) ≤ f(x) + ⟨∇f(x), x⁺ − x⟩ + ‖x⁺ − x‖² / 2t`, but it avoids
/// the cancellation in `f(x⁺) − f(x)` near the optimum.
pub(crate) fn minimize<P: Composite>(
    problem: &P,
    x0: DMatrix<f64>,
    step: &StepSearchConfig,
    tol: f64,
    max_iter: usize,
) -> Result<Run> {
    let mut x = x0;
    let mut obj = problem.smooth(&x) + problem.nonsmooth(&x);
    if !obj.is_finite() {
        return Err(GsrError::NonFiniteObjective);
    }
    let initial_objective = obj;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut exhausted = false;
    let mut g = problem.gradient(&x);

    for _ in 0..max_iter {
        let mut t = step.t0;
        let mut accepted = None;
        for _ in 0..=step.max_halvings {
            let candidate = problem.prox(&(&x - &g * t), t)?;
            let d = &candidate - &x;
            let g_c = problem.gradient(&candidate);
            let curvature = (&g_c - &g).dot(&d);
            let d2 = d.norm_squared();
            let mut ok = curvature <= d2 / t * (1.0 + 1e-10);
            let obj_c = problem.smooth(&candidate) + problem.nonsmooth(&candidate);
            ok &= obj_c.is_finite();
            if ok && problem.guard_descent() {
                ok = obj_c <= obj;
            }
            if ok {
                accepted = Some((candidate, g_c, obj_c));
                break;
            }
            t *= step.rho;
        }
        let (next, g_next, obj_next) = match accepted {
            Some(v) => v,
            None => {
                // no admissible step: stay put, which ends the run below
                exhausted = true;
                (x.clone(), g.clone(), obj)
            }
        };
        let diff = (obj - obj_next).abs();
        x = next;
        g = g_next;
        obj = obj_next;
        trace.push(obj);
        if diff < tol {
            converged = true;
            break;
        }
    }
    if exhausted {
        log::warn!("proximal gradient line search exhausted");
    }
    Ok(Run {
        x,
        initial_objective,
        trace,
        converged,
        exhausted,
    })
}
