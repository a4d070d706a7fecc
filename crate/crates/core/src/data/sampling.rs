use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{choose_indices, stream_rng, Stream};
use crate::error::{GsrError, Result};
use crate::mask::IndexMask;

/// Uniformly samples `round(ratio · N · L)` accessible entries.
pub fn sample_mask(n: usize, l: usize, ratio: f64, seed: u64) -> Result<IndexMask> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(GsrError::InvalidParameter(format!(
            "labeling ratio {ratio}"
        )));
    }
    let total = n * l;
    let count = (ratio * total as f64).round() as usize;
    if count == 0 {
        return Err(GsrError::EmptyMask);
    }
    let mut rng = stream_rng(seed, Stream::Mask);
    let mut picked = choose_indices(&mut rng, total, count);
    picked.sort_unstable();
    // column-major linear index
    IndexMask::from_entries(n, l, picked.into_iter().map(|k| (k % n, k / n)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    /// ±1 labels; corruption flips the sign.
    #[default]
    Classification,
    /// Real values; corruption adds ±5 standard deviations.
    Regression,
}

/// Corrupted measurements and the altered entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Corruption {
    pub t: DMatrix<f64>,
    pub altered: Vec<(usize, usize)>,
}

/// Corrupts `round(fraction · |M|)` accessible entries chosen uniformly.
/// Regression perturbations are `±5σ` with `σ` the standard deviation of the
/// accessible values (or 1 if they are constant), with random sign.
pub fn corrupt_labels(
    t: &DMatrix<f64>,
    mask: &IndexMask,
    fraction: f64,
    kind: LabelKind,
    seed: u64,
) -> Result<Corruption> {
    mask.check_shape(t, "measurement")?;
    if !(0.0..1.0).contains(&fraction) {
        return Err(GsrError::InvalidParameter(format!(
            "corruption fraction {fraction}"
        )));
    }
    let entries: Vec<(usize, usize)> = mask.entries().collect();
    let count = (fraction * entries.len() as f64).round() as usize;
    let mut rng = stream_rng(seed, Stream::Corruption);
    let mut picked = choose_indices(&mut rng, entries.len(), count);
    picked.sort_unstable();

    let values: Vec<f64> = entries.iter().map(|&(i, j)| t[(i, j)]).collect();
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len().max(1) as f64;
    let std = if var > 0.0 { var.sqrt() } else { 1.0 };

    let mut out = t.clone();
    let mut altered = Vec::with_capacity(count);
    for k in picked {
        let (i, j) = entries[k];
        match kind {
            LabelKind::Classification => out[(i, j)] = -out[(i, j)],
            LabelKind::Regression => {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                out[(i, j)] += sign * 5.0 * std;
            }
        }
        altered.push((i, j));
    }
    Ok(Corruption { t: out, altered })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_sizes_and_determinism() {
        assert!(sample_mask(4, 3, 1.0, 1).unwrap().is_full());
        assert_eq!(sample_mask(5, 2, 0.5, 1).unwrap().len(), 5);
        assert_eq!(
            sample_mask(40, 3, 0.3, 8).unwrap(),
            sample_mask(40, 3, 0.3, 8).unwrap()
        );
        assert!(matches!(
            sample_mask(10, 1, 0.01, 1),
            Err(GsrError::EmptyMask)
        ));
        assert!(sample_mask(10, 1, 0.0, 1).is_err());
    }

    #[test]
    fn corruption_counts_and_stays_in_mask() {
        let t = DMatrix::from_fn(10, 1, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
        let mask = IndexMask::from_nodes(10, &[0, 1, 3, 4, 7, 9]).unwrap();
        let c = corrupt_labels(&t, &mask, 1.0 / 3.0, LabelKind::Classification, 4).unwrap();
        assert_eq!(c.altered.len(), 2);
        let changed: Vec<usize> = (0..10).filter(|&i| c.t[(i, 0)] != t[(i, 0)]).collect();
        assert_eq!(changed.len(), 2);
        assert!(changed.iter().all(|&i| mask.contains(i, 0)));
        for &i in &changed {
            assert_eq!(c.t[(i, 0)], -t[(i, 0)]);
        }
        let none = corrupt_labels(&t, &mask, 0.0, LabelKind::Regression, 4).unwrap();
        assert_eq!(none.t, t);
    }

    #[test]
    fn regression_perturbation_size() {
        let t = DMatrix::from_fn(8, 1, |i, _| i as f64);
        let mask = IndexMask::full(8, 1);
        let c = corrupt_labels(&t, &mask, 0.25, LabelKind::Regression, 2).unwrap();
        let std = (t.iter().map(|v| (v - 3.5).powi(2)).sum::<f64>() / 8.0).sqrt();
        for &(i, j) in &c.altered {
            assert!(((c.t[(i, j)] - t[(i, j)]).abs() - 5.0 * std).abs() < 1e-12);
        }
    }
}
