//! Hyperparameter selection by hold-out validation on the accessible set.

use gsr_core::data::rng::{stream_rng, Stream};
use gsr_core::solvers::SolverConfig;
use gsr_core::{GraphShift, IndexMask};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::metrics::{score_entries, TaskKind};
use crate::solve::{solve, SolverId};

/// Fraction of the accessible entries used for training.
pub const DEFAULT_SPLIT: f64 = 0.8;

/// Cartesian grid over the solver weights. An empty axis keeps the base
/// configuration's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub epsilon: Vec<f64>,
}

impl GridSpec {
    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
            && self.beta.is_empty()
            && self.gamma.is_empty()
            && self.epsilon.is_empty()
    }

    /// Grid points in lexicographic order (alpha slowest, epsilon fastest).
    pub fn expand(&self, base: &SolverConfig) -> Vec<SolverConfig> {
        let axis = |v: &Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v.clone() };
        let mut out = Vec::new();
        for &alpha in &axis(&self.alpha, base.alpha) {
            for &beta in &axis(&self.beta, base.beta) {
                for &gamma in &axis(&self.gamma, base.gamma) {
                    for &epsilon in &axis(&self.epsilon, base.epsilon) {
                        out.push(SolverConfig {
                            alpha,
                            beta,
                            gamma,
                            epsilon,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// Index of the selected grid point.
    pub best: usize,
    pub config: SolverConfig,
    /// Validation MSE per grid point; empty when the grid has one point.
    pub scores: Vec<f64>,
}

/// Splits the accessible entries into training and validation parts,
/// deterministically in `seed`.
pub fn split_mask(
    mask: &IndexMask,
    split: f64,
    seed: u64,
) -> Result<(IndexMask, Vec<(usize, usize)>)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(ExperimentError::Config(format!("split fraction {split}")));
    }
    let mut entries: Vec<(usize, usize)> = mask.entries().collect();
    if entries.len() < 2 {
        return Err(ExperimentError::Data(format!(
            "{} accessible entries cannot be split for validation",
            entries.len()
        )));
    }
    let mut rng = stream_rng(seed, Stream::Split);
    entries.shuffle(&mut rng);
    let n_train = ((split * entries.len() as f64).round() as usize).clamp(1, entries.len() - 1);
    let (train, valid) = entries.split_at(n_train);
    let train_mask = IndexMask::from_entries(mask.nrows(), mask.ncols(), train.iter().copied())?;
    let mut valid = valid.to_vec();
    valid.sort_unstable_by_key(|&(i, j)| (j, i));
    Ok((train_mask, valid))
}

/// Picks the grid point with the smallest validation MSE; ties go to the
/// smallest index. A grid of one is returned without solving.
pub fn cross_validate(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    a: &GraphShift,
    solver: SolverId,
    grid: &[SolverConfig],
    split: f64,
    seed: u64,
) -> Result<CvOutcome> {
    match grid {
        [] => return Err(ExperimentError::EmptyGrid),
        [only] => {
            return Ok(CvOutcome {
                best: 0,
                config: only.clone(),
                scores: Vec::new(),
            })
        }
        _ => {}
    }
    let (train, valid) = split_mask(mask, split, seed)?;
    let scores = grid
        .par_iter()
        .map(|cfg| {
            let s = solve(solver, t, &train, a, cfg)?;
            Ok(score_entries(t, &s.x, &valid, TaskKind::Regression)?.mse)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        let current = if scores[best].is_nan() {
            f64::INFINITY
        } else {
            scores[best]
        };
        if s < current {
            best = k;
        }
    }
    Ok(CvOutcome {
        best,
        config: grid[best].clone(),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsr_core::data::sample_mask;

    fn instance() -> (GraphShift, DMatrix<f64>, IndexMask) {
        let a = GraphShift::cycle(12);
        let t = DMatrix::from_fn(12, 1, |i, _| (i as f64 * std::f64::consts::PI / 6.0).cos());
        let mask = sample_mask(12, 1, 0.75, 3).unwrap();
        (a, t, mask)
    }

    #[test]
    fn empty_grid_rejected() {
        let (a, t, mask) = instance();
        assert!(matches!(
            cross_validate(&t, &mask, &a, SolverId::Gtvr, &[], DEFAULT_SPLIT, 0),
            Err(ExperimentError::EmptyGrid)
        ));
    }

    #[test]
    fn single_point_returned() {
        let (a, t, mask) = instance();
        let cfg = SolverConfig::with_weights(0.3, 0.0, 0.0);
        let out = cross_validate(
            &t,
            &mask,
            &a,
            SolverId::Gtvr,
            std::slice::from_ref(&cfg),
            DEFAULT_SPLIT,
            0,
        )
        .unwrap();
        assert_eq!(out.best, 0);
        assert_eq!(out.config, cfg);
    }

    #[test]
    fn exact_reconstruction_wins() {
        // constants are in the Laplacian null space, so a heavy weight
        // reproduces them; alpha = 0 leaves validation entries at zero
        let a = GraphShift::cycle(10);
        let t = DMatrix::from_element(10, 1, 2.0);
        let mask = IndexMask::full(10, 1);
        let none = SolverConfig::with_weights(0.0, 0.0, 0.0);
        let heavy = SolverConfig::with_weights(1e3, 0.0, 0.0);
        let out = cross_validate(
            &t,
            &mask,
            &a,
            SolverId::Lapr,
            &[none, heavy.clone()],
            DEFAULT_SPLIT,
            5,
        )
        .unwrap();
        assert_eq!(out.best, 1);
        assert_eq!(out.config, heavy);
        assert!(out.scores[1] < 1e-18);
        assert!((out.scores[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let (a, t, mask) = instance();
        let cfg = SolverConfig::with_weights(0.5, 0.0, 0.0);
        let out = cross_validate(
            &t,
            &mask,
            &a,
            SolverId::Gtvr,
            &[cfg.clone(), cfg],
            DEFAULT_SPLIT,
            1,
        )
        .unwrap();
        assert_eq!(out.best, 0);
    }

    #[test]
    fn repeatable_under_seed() {
        let (a, t, mask) = instance();
        let grid = GridSpec {
            alpha: vec![0.01, 0.1, 1.0, 10.0],
            ..GridSpec::default()
        }
        .expand(&SolverConfig::default());
        let first = cross_validate(&t, &mask, &a, SolverId::Gtvr, &grid, DEFAULT_SPLIT, 9).unwrap();
        let second =
            cross_validate(&t, &mask, &a, SolverId::Gtvr, &grid, DEFAULT_SPLIT, 9).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn split_partitions_accessible_entries() {
        let mask = sample_mask(20, 3, 0.5, 4).unwrap();
        let (train, valid) = split_mask(&mask, 0.8, 2).unwrap();
        assert_eq!(train.len() + valid.len(), mask.len());
        assert_eq!(train.len(), (0.8 * mask.len() as f64).round() as usize);
        for &(i, j) in &valid {
            assert!(mask.contains(i, j) && !train.contains(i, j));
        }
    }

    #[test]
    fn grid_expansion_order() {
        let g = GridSpec {
            alpha: vec![1.0, 2.0],
            beta: vec![0.1, 0.2, 0.3],
            ..GridSpec::default()
        };
        let pts = g.expand(&SolverConfig::default());
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].alpha, pts[0].beta), (1.0, 0.1));
        assert_eq!((pts[1].alpha, pts[1].beta), (1.0, 0.2));
        assert_eq!((pts[5].alpha, pts[5].beta), (2.0, 0.3));
    }
}
