//! Accuracy and error metrics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// ±1 labels; estimates are thresholded at zero before ACC is taken.
    Classification,
    #[default]
    Regression,
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// Maps `v > 0` to `+1` and everything else, zero included, to `−1`.
pub fn quantize(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// ACC is the fraction of exact matches, after thresholding both sides for
/// classification. MSE, RMSE and MAE use the raw values.
pub fn metrics(x_true: &[f64], x_est: &[f64], kind: TaskKind) -> Result<Metrics> {
    if x_true.len() != x_est.len() {
        return Err(ExperimentError::DimensionMismatch(format!(
            "{} true values, {} estimates",
            x_true.len(),
            x_est.len()
        )));
    }
    let n = x_true.len();
    if n == 0 {
        return Err(ExperimentError::DimensionMismatch(
            "no entries to score".into(),
        ));
    }
    let mut hits = 0usize;
    let mut se = 0.0;
    let mut ae = 0.0;
    for (&t, &e) in x_true.iter().zip(x_est) {
        let hit = match kind {
            TaskKind::Classification => quantize(t) == quantize(e),
            TaskKind::Regression => t == e,
        };
        hits += usize::from(hit);
        se += (t - e) * (t - e);
        ae += (t - e).abs();
    }
    let mse = se / n as f64;
    Ok(Metrics {
        acc: hits as f64 / n as f64,
        mse,
        rmse: mse.sqrt(),
        mae: ae / n as f64,
    })
}

/// Scores the listed entries of two matrices.
pub fn score_entries(
    x_true: &DMatrix<f64>,
    x_est: &DMatrix<f64>,
    entries: &[(usize, usize)],
    kind: TaskKind,
) -> Result<Metrics> {
    if x_true.shape() != x_est.shape() {
        return Err(ExperimentError::DimensionMismatch(format!(
            "truth is {:?}, estimate is {:?}",
            x_true.shape(),
            x_est.shape()
        )));
    }
    let truth: Vec<f64> = entries.iter().map(|&e| x_true[e]).collect();
    let est: Vec<f64> = entries.iter().map(|&e| x_est[e]).collect();
    metrics(&truth, &est, kind)
}

/// Aggregate of several metric rows: mean ACC, MSE and MAE, with RMSE taken
/// as the root of the mean MSE so that every row satisfies `RMSE² = MSE`.
pub fn mean_metrics(rows: &[Metrics]) -> Metrics {
    let n = rows.len().max(1) as f64;
    let mean = |f: fn(&Metrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let mse = mean(|m| m.mse);
    Metrics {
        acc: mean(|m| m.acc),
        mse,
        rmse: mse.sqrt(),
        mae: mean(|m| m.mae),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_are_perfect() {
        let x = [0.5, -2.0, 3.0];
        for kind in [TaskKind::Classification, TaskKind::Regression] {
            let m = metrics(&x, &x, kind).unwrap();
            assert_eq!(
                m,
                Metrics {
                    acc: 1.0,
                    mse: 0.0,
                    rmse: 0.0,
                    mae: 0.0
                }
            );
        }
    }

    #[test]
    fn one_mismatch_of_two() {
        let m = metrics(&[1.0, -1.0], &[1.0, 1.0], TaskKind::Classification).unwrap();
        assert_eq!(m.acc, 0.5);
    }

    #[test]
    fn hand_computed_errors() {
        let m = metrics(&[0.0, 0.0], &[3.0, 4.0], TaskKind::Regression).unwrap();
        assert!((m.mse - 12.5).abs() < 1e-15);
        assert!((m.rmse - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((m.mae - 3.5).abs() < 1e-15);
        assert_eq!(m.acc, 0.0);
    }

    #[test]
    fn zero_thresholds_to_minus_one() {
        assert_eq!(quantize(0.0), -1.0);
        assert_eq!(quantize(1e-300), 1.0);
        let m = metrics(&[-1.0, 1.0], &[0.0, 0.2], TaskKind::Classification).unwrap();
        assert_eq!(m.acc, 1.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(matches!(
            metrics(&[1.0], &[1.0, 2.0], TaskKind::Regression),
            Err(ExperimentError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rmse_and_mae_relations() {
        let t = [0.3, -1.2, 4.0, 2.2, 0.0];
        let e = [1.0, -0.2, 3.1, 2.2, -0.7];
        let m = metrics(&t, &e, TaskKind::Regression).unwrap();
        assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
        assert!(m.mae <= m.rmse);
    }

    #[test]
    fn aggregate_keeps_row_invariants() {
        let rows = [
            metrics(&[0.0, 1.0], &[1.0, 1.0], TaskKind::Regression).unwrap(),
            metrics(&[0.0, 0.0], &[3.0, 4.0], TaskKind::Regression).unwrap(),
        ];
        let m = mean_metrics(&rows);
        assert!((m.rmse * m.rmse - m.mse).abs() < 1e-12);
        assert!(m.mae <= m.rmse);
        assert!((m.mse - (0.5 + 12.5) / 2.0).abs() < 1e-15);
    }
}
