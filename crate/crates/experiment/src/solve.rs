//! Uniform entry point over the recovery solvers.

use gsr_core::solvers::{
    anomaly_detect, gmcm, gmcr, gsr_admm, gtv_constrained, gtvm, gtvr, rgtvr, RecoveryResult,
    SolverConfig,
};
use gsr_core::{GraphShift, IndexMask};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baseline::{laplacian_baseline, laplacian_from_shift};
use crate::error::{Result, StageExt};

/// Solver selection. Weights come from the [`SolverConfig`]:
///
/// | solver | parameters |
/// |---|---|
/// | `gtvm` | none |
/// | `gtvr` | `alpha` |
/// | `gtv-constrained` | `epsilon` |
/// | `gmcm` | `beta` |
/// | `gmcr` | `alpha`, `beta` |
/// | `admm` | all |
/// | `rgtvr` | `alpha`, `gamma` |
/// | `anomaly` | `beta` |
/// | `lapr` | `alpha` |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    Gtvm,
    Gtvr,
    GtvConstrained,
    Gmcm,
    Gmcr,
    Admm,
    Rgtvr,
    Anomaly,
    Lapr,
}

impl SolverId {
    pub fn name(self) -> &'static str {
        match self {
            SolverId::Gtvm => "gtvm",
            SolverId::Gtvr => "gtvr",
            SolverId::GtvConstrained => "gtv-constrained",
            SolverId::Gmcm => "gmcm",
            SolverId::Gmcr => "gmcr",
            SolverId::Admm => "admm",
            SolverId::Rgtvr => "rgtvr",
            SolverId::Anomaly => "anomaly",
            SolverId::Lapr => "lapr",
        }
    }

    /// Solvers that act on one graph signal at a time; they are applied
    /// column by column to signal matrices.
    fn per_column(self) -> bool {
        matches!(
            self,
            SolverId::Gtvm | SolverId::Gtvr | SolverId::GtvConstrained | SolverId::Rgtvr
        )
    }
}

/// Estimate plus run statistics. Closed-form solvers report zero iterations
/// and `converged = true`.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: DMatrix<f64>,
    /// Estimated outliers, for solvers that model them.
    pub e: Option<DMatrix<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective trace; per-column runs are concatenated.
    pub trace: Vec<f64>,
}

impl Solution {
    fn closed_form(x: DMatrix<f64>) -> Self {
        Self {
            x,
            e: None,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
        }
    }

    fn iterative(r: RecoveryResult, with_e: bool) -> Self {
        Self {
            e: with_e.then(|| r.e.clone()),
            x: r.x,
            iterations: r.iterations,
            converged: r.converged,
            trace: r.trace,
        }
    }
}

fn column_mask(mask: &IndexMask, j: usize) -> IndexMask {
    let mut m = IndexMask::empty(mask.nrows(), 1);
    for i in 0..mask.nrows() {
        if mask.contains(i, j) {
            m.set(i, 0, true);
        }
    }
    m
}

fn solve_column(
    id: SolverId,
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let stage = id.name();
    Ok(match id {
        SolverId::Gtvm => Solution::closed_form(gtvm(t, mask, a).stage(stage)?),
        SolverId::Gtvr => Solution::closed_form(gtvr(t, mask, a, cfg.alpha).stage(stage)?),
        SolverId::GtvConstrained => {
            Solution::closed_form(gtv_constrained(t, mask, a, cfg.epsilon).stage(stage)?)
        }
        SolverId::Rgtvr => Solution::iterative(
            rgtvr(t, mask, a, cfg.alpha, cfg.gamma, cfg).stage(stage)?,
            true,
        ),
        _ => unreachable!("{stage} is not a per-column solver"),
    })
}

/// Runs `id` on measurements `t` with accessible entries `mask`.
///
/// Per-column solvers skip columns without accessible entries and leave them
/// at zero.
pub fn solve(
    id: SolverId,
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let stage = id.name();
    if id.per_column() {
        mask.check_shape(t, "measurement").stage(stage)?;
        let (n, l) = t.shape();
        let mut out = Solution::closed_form(DMatrix::zeros(n, l));
        let mut e = DMatrix::zeros(n, l);
        for j in 0..l {
            let m = column_mask(mask, j);
            if m.is_empty() {
                log::warn!("{stage}: column {j} has no accessible entries");
                continue;
            }
            let col = DMatrix::from_column_slice(n, 1, t.column(j).as_slice());
            let s = solve_column(id, &col, &m, a, cfg)?;
            out.x.set_column(j, &s.x.column(0));
            if let Some(ej) = &s.e {
                e.set_column(j, &ej.column(0));
            }
            out.iterations += s.iterations;
            out.converged &= s.converged;
            out.trace.extend(s.trace);
        }
        if id == SolverId::Rgtvr {
            out.e = Some(e);
        }
        return Ok(out);
    }
    Ok(match id {
        SolverId::Gmcm => Solution::iterative(gmcm(t, mask, a, cfg.beta, cfg).stage(stage)?, false),
        SolverId::Gmcr => Solution::iterative(
            gmcr(t, mask, a, cfg.alpha, cfg.beta, cfg).stage(stage)?,
            false,
        ),
        SolverId::Admm => {
            let with_e = cfg.gamma > 0.0;
            Solution::iterative(gsr_admm(t, mask, a, cfg).stage(stage)?, with_e)
        }
        SolverId::Anomaly => {
            // detection sees the whole matrix; the mask is not used
            Solution::iterative(anomaly_detect(t, a, cfg.beta, cfg).stage(stage)?, true)
        }
        SolverId::Lapr => Solution::closed_form(laplacian_baseline(
            t,
            mask,
            &laplacian_from_shift(a),
            cfg.alpha,
        )?),
        _ => unreachable!(),
    })
}
