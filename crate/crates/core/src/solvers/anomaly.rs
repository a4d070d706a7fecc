use nalgebra::DMatrix;

use super::prox_gradient::{minimize, Composite};
use super::{check_measurements, RecoveryResult, SolverConfig};
use crate::error::{GsrError, Result};
use crate::graph::{tilde_shift, GraphShift};
use crate::linalg::{l1_norm, svd};
use crate::prox::shrink;

/// Bisection steps over `log β` in the constrained form.
const BISECTION_STEPS: usize = 40;
/// Lower end of the bisection bracket, relative to the smallest `β` with a
/// zero solution.
const BETA_FLOOR: f64 = 1e-8;
/// Relative slack on the smoothness budget.
const BUDGET_SLACK: f64 = 1e-6;
/// Singular values of `I − A` below this (relative) span the smooth subspace.
const NULL_TOL: f64 = 1e-10;

/// `S₂(t − e) + β‖e‖₁` as a function of `e`.
struct Detection<'a> {
    tilde: &'a DMatrix<f64>,
    t: &'a DMatrix<f64>,
    beta: f64,
}

impl Composite for Detection<'_> {
    fn smooth(&self, e: &DMatrix<f64>) -> f64 {
        let r = self.t - e;
        (r.transpose() * self.tilde * &r).trace()
    }

    fn gradient(&self, e: &DMatrix<f64>) -> DMatrix<f64> {
        self.tilde * (self.t - e) * -2.0
    }

    fn nonsmooth(&self, e: &DMatrix<f64>) -> f64 {
        self.beta * l1_norm(e)
    }

    fn prox(&self, x: &DMatrix<f64>, step: f64) -> Result<DMatrix<f64>> {
        shrink(x, step * self.beta)
    }
}

fn check_detection(t: &DMatrix<f64>, a: &GraphShift, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    a.require_normalized()?;
    a.check_signal(t)?;
    check_measurements(t)
}

fn detect(
    t: &DMatrix<f64>,
    tilde: &DMatrix<f64>,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    let problem = Detection { tilde, t, beta };
    let run = minimize(
        &problem,
        DMatrix::zeros(t.nrows(), t.ncols()),
        &cfg.step,
        cfg.tol_outer,
        cfg.max_outer,
    )?;
    let mut out = run.into_result();
    out.e = std::mem::replace(&mut out.x, t.clone());
    out.x -= &out.e;
    Ok(out)
}

/// Separates `t` into a smooth part and sparse anomalies by minimizing
/// `S₂(t − e) + β‖e‖₁` with proximal gradient. Returns the anomalies in
/// `e` and the smooth part `t − e` in `x`.
pub fn anomaly_detect(
    t: &DMatrix<f64>,
    a: &GraphShift,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_detection(t, a, cfg)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(GsrError::InvalidParameter(format!("beta = {beta}")));
    }
    detect(t, &tilde_shift(a), beta, cfg)
}

fn variation(tilde: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (x.transpose() * tilde * x).trace()
}

/// Sparsest anomaly vector under a smoothness budget: minimizes `‖e‖₁`
/// subject to `S₂(t − e) ≤ η²`. Works by bisection over `β` in
/// [`anomaly_detect`], keeping the largest `β` whose solution meets the
/// budget. `η = 0` is solved directly as an ℓ1 fit onto the zero-variation
/// subspace.
pub fn anomaly_detect_constrained(
    t: &DMatrix<f64>,
    a: &GraphShift,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_detection(t, a, cfg)?;
    if t.ncols() != 1 {
        return Err(GsrError::DimensionMismatch(format!(
            "constrained detection takes a single signal, got {} columns",
            t.ncols()
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(GsrError::InvalidParameter(format!("eta = {eta}")));
    }
    let tilde = tilde_shift(a);
    let budget = eta * eta;
    let s_t = variation(&tilde, t);
    if s_t <= budget {
        let mut out = RecoveryResult::zeros(t.nrows(), 1);
        out.x = t.clone();
        out.initial_objective = 0.0;
        out.converged = true;
        return Ok(out);
    }
    if eta == 0.0 {
        return Ok(smooth_subspace_fit(t, a));
    }

    let slack = BUDGET_SLACK * budget.max(s_t);
    let feasible = |r: &RecoveryResult| variation(&tilde, &r.x) <= budget + slack;
    let beta_max = 2.0 * (&tilde * t).amax();
    let mut lo = beta_max * BETA_FLOOR;
    let mut hi = beta_max;
    let mut best = detect(t, &tilde, lo, cfg)?;
    if !feasible(&best) {
        log::warn!("smallest bracketed beta misses the smoothness budget, using the exact fit");
        return Ok(smooth_subspace_fit(t, a));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = (lo * hi).sqrt();
        let r = detect(t, &tilde, mid, cfg)?;
        if feasible(&r) {
            lo = mid;
            best = r;
        } else {
            hi = mid;
        }
    }
    if !best.x.iter().all(|v| v.is_finite()) {
        return Err(GsrError::Infeasible(
            "bisection produced a non-finite solution".into(),
        ));
    }
    Ok(best)
}

/// `argmin ‖t − x‖₁` over `x` with `(I − A)x = 0`.
fn smooth_subspace_fit(t: &DMatrix<f64>, a: &GraphShift) -> RecoveryResult {
    let n = t.nrows();
    let residual_op = DMatrix::identity(n, n) - a.weights();
    let dec = svd(&residual_op);
    let cutoff = NULL_TOL * dec.singular_values.max().max(1.0);
    let basis_rows: Vec<usize> = (0..dec.singular_values.len())
        .filter(|&i| dec.singular_values[i] <= cutoff)
        .collect();
    let x = match basis_rows.len() {
        0 => DMatrix::zeros(n, 1),
        1 => {
            let v = dec.v_t.row(basis_rows[0]).transpose();
            let c = weighted_median(t, &v);
            DMatrix::from_column_slice(n, 1, (v * c).as_slice())
        }
        _ => {
            let basis = DMatrix::from_fn(n, basis_rows.len(), |i, j| dec.v_t[(basis_rows[j], i)]);
            l1_regression(&basis, t)
        }
    };
    let mut out = RecoveryResult::zeros(n, 1);
    out.e = t - &x;
    out.initial_objective = l1_norm(t);
    out.trace = vec![l1_norm(&out.e)];
    out.iterations = 1;
    out.converged = true;
    out.x = x;
    out
}

/// Minimizer of `Σ |tᵢ − c vᵢ|` over scalar `c`.
fn weighted_median(t: &DMatrix<f64>, v: &nalgebra::DVector<f64>) -> f64 {
    let mut pts: Vec<(f64, f64)> = (0..t.nrows())
        .filter(|&i| v[i].abs() > 0.0)
        .map(|i| (t[(i, 0)] / v[i], v[i].abs()))
        .collect();
    if pts.is_empty() {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(c, w) in &pts {
        acc += w;
        if acc >= 0.5 * total {
            return c;
        }
    }
    pts[pts.len() - 1].0
}

/// Least absolute deviations fit `argmin ‖t − B c‖₁` by iteratively
/// reweighted least squares. Returns `B c`.
fn l1_regression(basis: &DMatrix<f64>, t: &DMatrix<f64>) -> DMatrix<f64> {
    let floor = 1e-12 * t.amax().max(1.0);
    let mut weights = vec![1.0; t.nrows()];
    let mut fit = DMatrix::zeros(t.nrows(), 1);
    for _ in 0..500 {
        let bw = DMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| {
            basis[(i, j)] * weights[i]
        });
        let normal = basis.transpose() * &bw;
        let rhs = bw.transpose() * t;
        let Some(c) = normal.cholesky().map(|ch| ch.solve(&rhs)) else {
            break;
        };
        let next = basis * c;
        let change = (&next - &fit).amax();
        fit = next;
        for (w, r) in weights.iter_mut().zip((t - &fit).iter()) {
            *w = 1.0 / r.abs().max(floor);
        }
        if change <= 1e-13 * t.amax().max(1.0) {
            break;
        }
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike() -> DMatrix<f64> {
        DMatrix::from_column_slice(4, 1, &[1.0, 1.0, 6.0, 1.0])
    }

    fn restricted_objective(
        t: &DMatrix<f64>,
        tilde: &DMatrix<f64>,
        beta: f64,
        support: &[usize],
    ) -> f64 {
        // fixed-step ISTA on the given support
        let mut e = DMatrix::zeros(t.nrows(), 1);
        let step = 1.0 / (2.0 * 4.0);
        for _ in 0..20_000 {
            let g = tilde * (t - &e) * -2.0;
            let mut next = DMatrix::zeros(t.nrows(), 1);
            for &i in support {
                let v = e[(i, 0)] - step * g[(i, 0)];
                next[(i, 0)] = v.signum() * (v.abs() - step * beta).max(0.0);
            }
            e = next;
        }
        let r = t - &e;
        (r.transpose() * tilde * &r)[(0, 0)] + beta * e.abs().sum()
    }

    #[test]
    fn smooth_and_zero_signals_have_no_anomalies() {
        let a = GraphShift::cycle(5);
        let cfg = SolverConfig::default();
        for t in [DMatrix::from_element(5, 1, 2.5), DMatrix::zeros(5, 1)] {
            let r = anomaly_detect(&t, &a, 0.1, &cfg).unwrap();
            assert_eq!(r.e, DMatrix::zeros(5, 1));
            assert_eq!(r.x, t);
        }
    }

    #[test]
    fn spike_support_matches_brute_force() {
        let a = GraphShift::cycle(4);
        let tilde = tilde_shift(&a);
        let t = spike();
        let beta = 2.0;
        let r = anomaly_detect(&t, &a, beta, &SolverConfig::default()).unwrap();
        let support: Vec<usize> = (0..4).filter(|&i| r.e[(i, 0)].abs() > 1e-6).collect();

        let mut candidates: Vec<Vec<usize>> = vec![vec![]];
        for i in 0..4 {
            candidates.push(vec![i]);
            for j in i + 1..4 {
                candidates.push(vec![i, j]);
            }
        }
        let best = candidates
            .iter()
            .map(|s| (restricted_objective(&t, &tilde, beta, s), s))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        // {2} and any superset reach the same optimum; the sparsest wins
        assert_eq!(support, vec![2]);
        assert!(
            (r.final_objective() - best.0).abs() < 1e-6,
            "{} vs {}",
            r.final_objective(),
            best.0
        );
        assert!(r.e[(2, 0)] > 0.0);
    }

    #[test]
    fn trace_is_monotone_and_fixed_point_holds() {
        let a = GraphShift::cycle(7);
        let tilde = tilde_shift(&a);
        let t = DMatrix::from_fn(7, 1, |i, _| {
            (i as f64 * 0.9).sin() + if i == 4 { 3.0 } else { 0.0 }
        });
        let beta = 0.5;
        let cfg = SolverConfig {
            tol_outer: 1e-12,
            ..SolverConfig::default()
        };
        let r = anomaly_detect(&t, &a, beta, &cfg).unwrap();
        let mut prev = r.initial_objective;
        for &v in &r.trace {
            assert!(v <= prev + 1e-10);
            prev = v;
        }
        let step = 0.1;
        let grad = &tilde * (&t - &r.e) * -2.0;
        let fixed = shrink(&(&r.e - grad * step), step * beta).unwrap();
        assert!((fixed - &r.e).amax() < 1e-6);
    }

    #[test]
    fn generous_budget_keeps_signal() {
        let a = GraphShift::cycle(4);
        let t = spike();
        let s = variation(&tilde_shift(&a), &t);
        let r =
            anomaly_detect_constrained(&t, &a, s.sqrt() * 1.01, &SolverConfig::default()).unwrap();
        assert_eq!(r.e, DMatrix::zeros(4, 1));
    }

    #[test]
    fn zero_budget_takes_median_offset() {
        let a = GraphShift::cycle(5);
        let t = DMatrix::from_column_slice(5, 1, &[0.3, -1.0, 4.0, 0.7, 0.2]);
        let r = anomaly_detect_constrained(&t, &a, 0.0, &SolverConfig::default()).unwrap();
        // 1-D scan over constant offsets
        let cost = |c: f64| t.iter().map(|v| (v - c).abs()).sum::<f64>();
        let (mut best_c, mut best) = (0.0, f64::INFINITY);
        for k in -50_000..=50_000 {
            let c = k as f64 * 1e-4;
            if cost(c) < best {
                best = cost(c);
                best_c = c;
            }
        }
        assert!((l1_norm(&r.e) - best).abs() < 1e-9);
        for i in 0..5 {
            assert!((r.x[(i, 0)] - best_c).abs() < 1e-3);
        }
    }

    #[test]
    fn budget_from_true_smooth_part_recovers_spike() {
        let a = GraphShift::cycle(4);
        let r = anomaly_detect_constrained(&spike(), &a, 0.0, &SolverConfig::default()).unwrap();
        let support: Vec<usize> = (0..4).filter(|&i| r.e[(i, 0)].abs() > 1e-9).collect();
        assert_eq!(support, vec![2]);
        assert!((r.e[(2, 0)] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn positive_budget_is_met_and_sparse() {
        let a = GraphShift::cycle(8);
        let tilde = tilde_shift(&a);
        let smooth = DMatrix::from_fn(8, 1, |i, _| (std::f64::consts::TAU * i as f64 / 8.0).cos());
        let mut t = smooth.clone();
        t[(5, 0)] += 4.0;
        let eta = variation(&tilde, &smooth).sqrt();
        let r = anomaly_detect_constrained(&t, &a, eta, &SolverConfig::default()).unwrap();
        let s = variation(&tilde, &r.x);
        assert!(s <= eta * eta * (1.0 + 1e-6) + 1e-6 * variation(&tilde, &t));
        let peak = (0..8)
            .max_by(|&i, &j| r.e[(i, 0)].abs().total_cmp(&r.e[(j, 0)].abs()))
            .unwrap();
        assert_eq!(peak, 5);
        assert!(l1_norm(&r.e) < 4.0 + 1e-6);
    }
}
