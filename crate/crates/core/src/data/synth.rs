use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{choose_indices, stream_rng, Stream};
use crate::error::{GsrError, Result};
use crate::graph::{tilde_shift, GraphShift};

/// How the smooth ground truth is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SmoothRecipe {
    /// Gaussian combinations of the `modes` eigenvectors of `Ã` with the
    /// smallest eigenvalues; `None` means `max(2, N / 10)`.
    Eigen { modes: Option<usize> },
    /// `steps` applications of the shift to white noise.
    Diffusion { steps: usize },
}

impl Default for SmoothRecipe {
    fn default() -> Self {
        SmoothRecipe::Eigen { modes: None }
    }
}

/// Units of the outlier magnitude range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierScale {
    #[default]
    Absolute,
    /// Multiples of the column's range `max − min` of the smooth signal.
    SignalRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub signals: usize,
    pub recipe: SmoothRecipe,
    pub noise_std: f64,
    /// Outliers per column.
    pub outliers: usize,
    pub outlier_range: (f64, f64),
    pub outlier_scale: OutlierScale,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            nodes: 50,
            signals: 1,
            recipe: SmoothRecipe::default(),
            noise_std: 0.0,
            outliers: 0,
            outlier_range: (1.0, 2.0),
            outlier_scale: OutlierScale::Absolute,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.signals == 0 {
            return Err(GsrError::InvalidParameter(
                "nodes and signals must be positive".into(),
            ));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(GsrError::InvalidParameter(format!(
                "noise_std = {}",
                self.noise_std
            )));
        }
        if self.outliers > self.nodes {
            return Err(GsrError::InvalidParameter(format!(
                "{} outliers per column on {} nodes",
                self.outliers, self.nodes
            )));
        }
        let (lo, hi) = self.outlier_range;
        if self.outliers > 0 && !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(GsrError::InvalidParameter(format!(
                "outlier range ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Ground truth, noise, outliers and measurements `t = x0 + w + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticInstance {
    pub x0: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

fn gaussian<R: Rng>(rng: &mut R, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, ncols, |_, _| rng.sample(StandardNormal))
}

fn smooth_signals(spec: &SyntheticSpec, a: &GraphShift) -> DMatrix<f64> {
    let (n, l) = (spec.nodes, spec.signals);
    let mut rng = stream_rng(spec.seed, Stream::Signal);
    match spec.recipe {
        SmoothRecipe::Eigen { modes } => {
            let r = modes.unwrap_or((n / 10).max(2)).clamp(1, n);
            let eig = nalgebra::linalg::SymmetricEigen::new(tilde_shift(a));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| {
                eig.eigenvalues[i]
                    .total_cmp(&eig.eigenvalues[j])
                    .then(i.cmp(&j))
            });
            let basis = DMatrix::from_fn(n, r, |i, j| eig.eigenvectors[(i, order[j])]);
            basis * gaussian(&mut rng, r, l)
        }
        SmoothRecipe::Diffusion { steps } => {
            let mut x = gaussian(&mut rng, n, l);
            for _ in 0..steps {
                x = a.weights() * x;
            }
            x
        }
    }
}

/// Draws a synthetic instance on graph `a`. Each random component has its
/// own stream, so e.g. changing the noise level leaves the ground truth and
/// the outlier positions unchanged.
pub fn synth_instance(spec: &SyntheticSpec, a: &GraphShift) -> Result<SyntheticInstance> {
    spec.validate()?;
    if a.size() != spec.nodes {
        return Err(GsrError::DimensionMismatch(format!(
            "spec has {} nodes, graph has {}",
            spec.nodes,
            a.size()
        )));
    }
    let (n, l) = (spec.nodes, spec.signals);
    let x0 = smooth_signals(spec, a);

    let mut w = DMatrix::zeros(n, l);
    if spec.noise_std > 0.0 {
        let mut rng = stream_rng(spec.seed, Stream::Noise);
        w = gaussian(&mut rng, n, l) * spec.noise_std;
    }

    let mut e = DMatrix::zeros(n, l);
    if spec.outliers > 0 {
        let mut rng = stream_rng(spec.seed, Stream::Outliers);
        let (lo, hi) = spec.outlier_range;
        for j in 0..l {
            let unit = match spec.outlier_scale {
                OutlierScale::Absolute => 1.0,
                OutlierScale::SignalRange => {
                    let col = x0.column(j);
                    (col.max() - col.min()).max(f64::MIN_POSITIVE)
                }
            };
            for i in choose_indices(&mut rng, n, spec.outliers) {
                let magnitude = if hi > lo {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                };
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                e[(i, j)] = sign * magnitude * unit;
            }
        }
    }
    let t = &x0 + &w + &e;
    Ok(SyntheticInstance { x0, w, e, t })
}
