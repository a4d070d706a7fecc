//! Combining ±1 opinions of several experts into one labeling.

use gsr_core::data::rng::{choose_indices, stream_rng, Stream};
use gsr_core::solvers::{gmcr, gtvr, SolverConfig};
use gsr_core::{normalize_shift, GraphShift, IndexMask};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result, StageExt};
use crate::metrics::quantize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMethod {
    /// Majority vote.
    Avg,
    /// Denoise every expert's column with `gtvr` (weight `alpha`), then vote.
    GtvrDenoise,
    /// Denoise the whole matrix with `gmcr` (`alpha`, `beta`), then vote.
    #[default]
    GmcrDenoise,
}

impl CombineMethod {
    pub fn name(self) -> &'static str {
        match self {
            CombineMethod::Avg => "avg",
            CombineMethod::GtvrDenoise => "gtvr-denoise",
            CombineMethod::GmcrDenoise => "gmcr-denoise",
        }
    }
}

/// Labels and run statistics of one combination.
#[derive(Clone, Debug)]
pub struct Combined {
    pub labels: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

fn check_binary(t: &DMatrix<f64>) -> Result<()> {
    for j in 0..t.ncols() {
        for i in 0..t.nrows() {
            let v = t[(i, j)];
            if v != 1.0 && v != -1.0 {
                return Err(ExperimentError::NonBinaryInput {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Sign of each row mean; a zero mean maps to `+1`.
fn vote(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(
        x.nrows(),
        |i, _| if x.row(i).sum() >= 0.0 { 1.0 } else { -1.0 },
    )
}

/// Combines the columns of `t` (one expert each, entries ±1) on graph `a`.
pub fn combine_opinions(
    t: &DMatrix<f64>,
    a: &GraphShift,
    method: CombineMethod,
    cfg: &SolverConfig,
) -> Result<Combined> {
    check_binary(t)?;
    if t.nrows() != a.size() {
        return Err(ExperimentError::DimensionMismatch(format!(
            "{} items, graph has {} nodes",
            t.nrows(),
            a.size()
        )));
    }
    let (n, k) = t.shape();
    let (denoised, iterations, converged, trace) = match method {
        CombineMethod::Avg => (t.clone(), 0, true, Vec::new()),
        CombineMethod::GtvrDenoise => {
            let full = IndexMask::full(n, 1);
            let mut x = DMatrix::zeros(n, k);
            for j in 0..k {
                let col = DMatrix::from_column_slice(n, 1, t.column(j).as_slice());
                let d = gtvr(&col, &full, a, cfg.alpha).stage("gtvr-denoise")?;
                x.set_column(j, &d.column(0));
            }
            (x, 0, true, Vec::new())
        }
        CombineMethod::GmcrDenoise => {
            let r = gmcr(t, &IndexMask::full(n, k), a, cfg.alpha, cfg.beta, cfg)
                .stage("gmcr-denoise")?;
            (r.x, r.iterations, r.converged, r.trace)
        }
    };
    Ok(Combined {
        labels: vote(&denoised),
        iterations,
        converged,
        trace,
    })
}

/// Synthetic opinion-combination instance: items in two label classes
/// linked mostly within their class, and experts who are right with one
/// probability on easy items and another on hard ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertSpec {
    pub items: usize,
    pub experts: usize,
    pub easy_fraction: f64,
    pub easy_accuracy: f64,
    pub hard_accuracy: f64,
    /// Out-links per item.
    pub links: usize,
    /// Probability that a link stays within the item's class.
    pub homophily: f64,
    pub seed: u64,
}

impl Default for ExpertSpec {
    fn default() -> Self {
        Self {
            items: 200,
            experts: 20,
            easy_fraction: 0.75,
            easy_accuracy: 0.9,
            hard_accuracy: 0.3,
            links: 8,
            homophily: 0.9,
            seed: 0,
        }
    }
}

impl ExpertSpec {
    pub fn validate(&self) -> Result<()> {
        if self.items < 2 || self.experts == 0 || self.links == 0 {
            return Err(ExperimentError::Config(
                "need at least two items, one expert and one link".into(),
            ));
        }
        if self.links >= self.items {
            return Err(ExperimentError::Config(format!(
                "{} links per item on {} items",
                self.links, self.items
            )));
        }
        for (name, p) in [
            ("easy_fraction", self.easy_fraction),
            ("easy_accuracy", self.easy_accuracy),
            ("hard_accuracy", self.hard_accuracy),
            ("homophily", self.homophily),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ExperimentError::Config(format!("{name} = {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ExpertInstance {
    pub graph: GraphShift,
    pub truth: DVector<f64>,
    /// `items x experts`, entries ±1.
    pub opinions: DMatrix<f64>,
    pub easy: Vec<bool>,
}

/// Draws an instance. Labels are split evenly between the classes; each
/// item links to `links` distinct other items, inside its class with
/// probability `homophily`. Row `n` of the shift averages the labels of the
/// items `n` links to.
pub fn synth_experts(spec: &ExpertSpec) -> Result<ExpertInstance> {
    spec.validate()?;
    let n = spec.items;
    let mut rng = stream_rng(spec.seed, Stream::Experts);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut truth = DVector::from_element(n, -1.0);
    for &i in &order[..n / 2] {
        truth[i] = 1.0;
    }
    let n_easy = (spec.easy_fraction * n as f64).round() as usize;
    let mut easy = vec![false; n];
    for i in choose_indices(&mut rng, n, n_easy) {
        easy[i] = true;
    }

    let mut graph_rng = stream_rng(spec.seed, Stream::Graph);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let same: Vec<usize> = (0..n).filter(|&m| m != i && truth[m] == truth[i]).collect();
        let other: Vec<usize> = (0..n).filter(|&m| truth[m] != truth[i]).collect();
        let mut placed = 0;
        while placed < spec.links {
            let pool = if other.is_empty()
                || (!same.is_empty() && graph_rng.random::<f64>() < spec.homophily)
            {
                &same
            } else {
                &other
            };
            let m = pool[graph_rng.random_range(0..pool.len())];
            if w[(i, m)] == 0.0 {
                w[(i, m)] = 1.0;
                placed += 1;
            }
        }
    }
    for i in 0..n {
        let s = w.row(i).sum();
        w.row_mut(i).scale_mut(1.0 / s);
    }
    let graph =
        normalize_shift(&GraphShift::new(w).stage("expert graph")?).stage("expert graph")?;

    let mut opinions = DMatrix::zeros(n, spec.experts);
    for k in 0..spec.experts {
        for i in 0..n {
            let p = if easy[i] {
                spec.easy_accuracy
            } else {
                spec.hard_accuracy
            };
            opinions[(i, k)] = if rng.random::<f64>() < p {
                truth[i]
            } else {
                -truth[i]
            };
        }
    }
    Ok(ExpertInstance {
        graph,
        truth,
        opinions,
        easy,
    })
}

/// Fraction of items whose label matches the truth.
pub fn label_accuracy(truth: &DVector<f64>, labels: &DVector<f64>) -> f64 {
    let hits = truth
        .iter()
        .zip(labels.iter())
        .filter(|(t, l)| quantize(**t) == quantize(**l))
        .count();
    hits as f64 / truth.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::with_weights(1.0, 0.1, 0.0)
    }

    #[test]
    fn identical_experts_reproduce_their_labeling() {
        let a = GraphShift::cycle(6);
        let col = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0];
        let t = DMatrix::from_fn(6, 4, |i, _| col[i]);
        for method in [
            CombineMethod::Avg,
            CombineMethod::GtvrDenoise,
            CombineMethod::GmcrDenoise,
        ] {
            let out = combine_opinions(&t, &a, method, &SolverConfig::with_weights(0.1, 0.01, 0.0))
                .unwrap();
            assert_eq!(out.labels.as_slice(), &col, "{}", method.name());
        }
    }

    #[test]
    fn majority_vote() {
        let a = GraphShift::cycle(1);
        let t = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, -1.0]);
        let out = combine_opinions(&t, &a, CombineMethod::Avg, &cfg()).unwrap();
        assert_eq!(out.labels[0], 1.0);
    }

    #[test]
    fn tie_maps_to_plus_one() {
        let a = GraphShift::cycle(1);
        let t = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let out = combine_opinions(&t, &a, CombineMethod::Avg, &cfg()).unwrap();
        assert_eq!(out.labels[0], 1.0);
    }

    #[test]
    fn non_binary_rejected() {
        let a = GraphShift::cycle(2);
        let t = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        assert!(matches!(
            combine_opinions(&t, &a, CombineMethod::Avg, &cfg()),
            Err(ExperimentError::NonBinaryInput { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn synthetic_instance_shape_and_rates() {
        let spec = ExpertSpec {
            items: 400,
            experts: 50,
            seed: 3,
            ..ExpertSpec::default()
        };
        let inst = synth_experts(&spec).unwrap();
        assert_eq!(inst.opinions.shape(), (400, 50));
        assert_eq!(inst.easy.iter().filter(|e| **e).count(), 300);
        assert_eq!(inst.truth.iter().filter(|t| **t > 0.0).count(), 200);
        let mut right = [0usize; 2];
        let mut total = [0usize; 2];
        for i in 0..400 {
            let g = usize::from(inst.easy[i]);
            for k in 0..50 {
                total[g] += 1;
                right[g] += usize::from(inst.opinions[(i, k)] == inst.truth[i]);
            }
        }
        let hard = right[0] as f64 / total[0] as f64;
        let easy = right[1] as f64 / total[1] as f64;
        assert!((easy - 0.9).abs() < 0.02, "easy {easy}");
        assert!((hard - 0.3).abs() < 0.03, "hard {hard}");
        for i in 0..400 {
            assert!((inst.graph.weights().row(i).sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn synthetic_instance_is_seeded() {
        let spec = ExpertSpec::default();
        let a = synth_experts(&spec).unwrap();
        let b = synth_experts(&spec).unwrap();
        assert_eq!(a.opinions, b.opinions);
        assert_eq!(a.graph.weights(), b.graph.weights());
    }
}
