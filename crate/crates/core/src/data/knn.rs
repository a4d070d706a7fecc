use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::graph::{normalize_shift, GraphShift};

/// Node features, or precomputed distances between nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    features: DMatrix<f64>,
    /// `present[(i, j)]` is false where feature `j` of node `i` is missing.
    present: Option<DMatrix<bool>>,
    distances: Option<DMatrix<f64>>,
}

impl FeatureTable {
    /// `N x d` features, one row per node.
    pub fn new(features: DMatrix<f64>) -> Result<Self> {
        if !features.iter().all(|v| v.is_finite()) {
            return Err(GsrError::NonFinite("features".into()));
        }
        Ok(Self {
            features,
            present: None,
            distances: None,
        })
    }

    /// Features with missing entries. Values at missing positions are ignored.
    pub fn with_missing(features: DMatrix<f64>, present: DMatrix<bool>) -> Result<Self> {
        if features.shape() != present.shape() {
            return Err(GsrError::DimensionMismatch(
                "feature and presence shapes differ".into(),
            ));
        }
        if features
            .iter()
            .zip(present.iter())
            .any(|(v, p)| *p && !v.is_finite())
        {
            return Err(GsrError::NonFinite("features".into()));
        }
        let features = features.zip_map(&present, |v, p| if p { v } else { 0.0 });
        Ok(Self {
            features,
            present: Some(present),
            distances: None,
        })
    }

    /// Symmetric `N x N` distances with zero diagonal.
    pub fn from_distances(distances: DMatrix<f64>) -> Result<Self> {
        let n = distances.nrows();
        if distances.ncols() != n {
            return Err(GsrError::DimensionMismatch(
                "distance matrix must be square".into(),
            ));
        }
        if !distances.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(GsrError::InvalidParameter(
                "distances must be finite and nonnegative".into(),
            ));
        }
        let scale = distances.amax().max(1.0);
        for i in 0..n {
            if distances[(i, i)] > 1e-12 * scale {
                return Err(GsrError::InvalidParameter(format!(
                    "nonzero self-distance at node {i}"
                )));
            }
            for j in i + 1..n {
                if (distances[(i, j)] - distances[(j, i)]).abs() > 1e-12 * scale {
                    return Err(GsrError::InvalidParameter(format!(
                        "distance ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(Self {
            features: DMatrix::zeros(n, 0),
            present: None,
            distances: Some(distances),
        })
    }

    pub fn nodes(&self) -> usize {
        self.features.nrows()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn distances(&self) -> Option<&DMatrix<f64>> {
        self.distances.as_ref()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    L1,
    /// Use the table's precomputed distances (e.g. geodesic).
    Precomputed,
}

/// How to scale the pruned kernel weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Rows sum to one; constant signals have zero variation.
    #[default]
    Row,
    /// Columns sum to one.
    Column,
    /// Only the final spectral-radius scaling.
    None,
}

/// Distance between two nodes that share no observed feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Mean of the distances of all pairs that do share features.
    #[default]
    MeanImpute,
    /// Never connect the pair.
    Exclude,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphBuildSpec {
    pub k: usize,
    pub metric: Metric,
    pub normalization: Normalization,
    /// Average the pruned weights with their transpose before normalizing.
    pub symmetrize: bool,
    pub missing: MissingPolicy,
}

impl Default for GraphBuildSpec {
    fn default() -> Self {
        Self {
            k: 8,
            metric: Metric::L2,
            normalization: Normalization::Row,
            symmetrize: false,
            missing: MissingPolicy::MeanImpute,
        }
    }
}

/// All pairwise distances under `metric`. With missing features, a pair is
/// compared on the features both nodes have, rescaled by `d / shared` so
/// that pairs with different overlaps are comparable; pairs with no overlap
/// get the policy's value (`∞` for [`MissingPolicy::Exclude`]).
pub fn pairwise_distances(
    table: &FeatureTable,
    metric: Metric,
    missing: MissingPolicy,
) -> Result<DMatrix<f64>> {
    if metric == Metric::Precomputed {
        return table.distances.clone().ok_or_else(|| {
            GsrError::InvalidParameter("precomputed metric needs a distance matrix".into())
        });
    }
    if table.distances.is_some() && table.features.ncols() == 0 {
        return Err(GsrError::InvalidParameter(format!(
            "{metric:?} metric needs features"
        )));
    }
    let f = &table.features;
    let (n, d) = f.shape();
    let mut dist = DMatrix::zeros(n, n);
    let mut unresolved = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut acc = 0.0;
            let mut shared = 0usize;
            for c in 0..d {
                if let Some(p) = &table.present {
                    if !(p[(i, c)] && p[(j, c)]) {
                        continue;
                    }
                }
                let diff = f[(i, c)] - f[(j, c)];
                acc += match metric {
                    Metric::L1 => diff.abs(),
                    _ => diff * diff,
                };
                shared += 1;
            }
            let value = if shared == 0 && d > 0 {
                unresolved.push((i, j));
                0.0
            } else {
                let scaled = if shared > 0 {
                    acc * d as f64 / shared as f64
                } else {
                    0.0
                };
                match metric {
                    Metric::L1 => scaled,
                    _ => scaled.sqrt(),
                }
            };
            dist[(i, j)] = value;
            dist[(j, i)] = value;
        }
    }
    if !unresolved.is_empty() {
        let fill = match missing {
            MissingPolicy::Exclude => f64::INFINITY,
            MissingPolicy::MeanImpute => {
                let resolved = n * (n - 1) / 2 - unresolved.len();
                let total: f64 = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .map(|(i, j)| dist[(i, j)])
                    .sum();
                if resolved == 0 {
                    0.0
                } else {
                    total / resolved as f64
                }
            }
        };
        for (i, j) in unresolved {
            dist[(i, j)] = fill;
            dist[(j, i)] = fill;
        }
    }
    Ok(dist)
}

/// Builds a directed k-nearest-neighbor graph shift.
///
/// Weights follow the kernel `P[i, j] = exp(−N² d(i, j) / Σ d)`, with the sum
/// over all pairs taken before pruning. Node `n` receives edges from its `k`
/// nearest other nodes (ties go to the lower index), so row `n` of the
/// pruned matrix has exactly `k` nonzeros. The result is normalized per
/// `spec.normalization` and then scaled to spectral radius 1.
pub fn build_knn_graph(table: &FeatureTable, spec: &GraphBuildSpec) -> Result<GraphShift> {
    let n = table.nodes();
    if spec.k == 0 || spec.k >= n {
        return Err(GsrError::KTooLarge { k: spec.k, n });
    }
    let dist = pairwise_distances(table, spec.metric, spec.missing)?;
    let total: f64 = dist.iter().filter(|v| v.is_finite()).sum();
    if total <= 0.0 {
        return Err(GsrError::DegenerateDistances);
    }
    let scale = (n * n) as f64 / total;

    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut others: Vec<usize> = (0..n)
            .filter(|&j| j != i && dist[(i, j)].is_finite())
            .collect();
        others.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        if others.len() < spec.k {
            log::warn!("node {i} has only {} comparable neighbors", others.len());
        }
        for &j in others.iter().take(spec.k) {
            // strictly positive so the sparsity pattern is exactly k per row
            w[(i, j)] = (-scale * dist[(i, j)]).exp().max(f64::MIN_POSITIVE);
        }
    }
    if spec.symmetrize {
        w = (&w + w.transpose()) * 0.5;
    }
    match spec.normalization {
        Normalization::Row => {
            for mut row in w.row_iter_mut() {
                let s = row.sum();
                if s > 0.0 {
                    row /= s;
                }
            }
        }
        Normalization::Column => {
            for mut col in w.column_iter_mut() {
                let s = col.sum();
                if s > 0.0 {
                    col /= s;
                }
            }
        }
        Normalization::None => {}
    }
    normalize_shift(&GraphShift::new(w)?)
}
