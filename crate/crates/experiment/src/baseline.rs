//! Graph Laplacian regularization, the undirected comparison method.

use gsr_core::linalg::asymmetry;
use gsr_core::prox::{regularized_solve, SolveMode};
use gsr_core::{GraphShift, IndexMask};
use nalgebra::DMatrix;

use crate::error::{ExperimentError, Result, StageExt};

/// Laplacian `D − W` of the symmetrized weights `W = (A + Aᵀ) / 2`.
pub fn laplacian_from_shift(a: &GraphShift) -> DMatrix<f64> {
    let w = (a.weights() + a.weights().transpose()) * 0.5;
    let mut lap = -w.clone();
    for i in 0..w.nrows() {
        lap[(i, i)] += w.row(i).sum();
    }
    lap
}

/// Minimizes `‖(x − t)_M‖² + α xᵀ L x` column by column:
/// `x = (D_M + α L)⁺ t_M`.
pub fn laplacian_baseline(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    lap: &DMatrix<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let n = lap.nrows();
    if lap.ncols() != n || t.nrows() != n {
        return Err(ExperimentError::DimensionMismatch(format!(
            "Laplacian is {}x{}, signal has {} rows",
            n,
            lap.ncols(),
            t.nrows()
        )));
    }
    mask.check_shape(t, "measurement")
        .stage("laplacian baseline")?;
    let skew = asymmetry(lap);
    if skew > 1e-10 * lap.amax().max(1.0) {
        return Err(ExperimentError::NonSymmetricLaplacian(skew));
    }
    if alpha.is_nan() || alpha < 0.0 || alpha.is_infinite() {
        return Err(ExperimentError::Config(format!("alpha = {alpha}")));
    }
    let mut out = DMatrix::zeros(n, t.ncols());
    for j in 0..t.ncols() {
        let mut h = lap * alpha;
        let mut rhs = DMatrix::zeros(n, 1);
        for i in 0..n {
            if mask.contains(i, j) {
                h[(i, i)] += 1.0;
                rhs[(i, 0)] = t[(i, j)];
            }
        }
        let x =
            regularized_solve(&h, &rhs, SolveMode::Pseudoinverse).stage("laplacian baseline")?;
        out.set_column(j, &x.column(0));
    }
    Ok(out)
}
