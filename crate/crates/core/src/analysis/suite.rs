//! Seeded randomized checks of the identities and bounds. Draw `i` of a
//! suite uses seed `base + i`, so rows are reproducible one by one and the
//! draws run in parallel.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nuclear_tv_bound, subspace_smoothness_bound, tv_svd_terms, verify_inpainting_bound};
use crate::error::Result;
use crate::graph::{matrix_variation, normalize_shift, tilde_shift, GraphShift};
use crate::mask::IndexMask;
use crate::solvers::gtv_constrained;

/// One draw: both sides of the checked relation and `margin`, which is
/// nonnegative when the draw passes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Random graph shift on `n` nodes: a weighted directed ring plus random
/// extra edges, optionally symmetrized, scaled to spectral radius 1.
pub fn random_shift<R: Rng>(rng: &mut R, n: usize, symmetric: bool) -> Result<GraphShift> {
    let density = 0.3;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        if n > 1 {
            w[(i, (i + n - 1) % n)] = rng.random_range(0.5..1.5);
        }
        for j in 0..n {
            if i != j && rng.random::<f64>() < density {
                w[(i, j)] = rng.random_range(0.1..1.0);
            }
        }
    }
    if n == 1 {
        w[(0, 0)] = 1.0;
    }
    if symmetric {
        w = (&w + w.transpose()) * 0.5;
    }
    normalize_shift(&GraphShift::new(w)?)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, ncols, |_, _| rng.sample(StandardNormal))
}

fn run<F>(draws: usize, base_seed: u64, f: F) -> Result<Vec<SuiteRow>>
where
    F: Fn(u64, &mut ChaCha8Rng) -> Result<(f64, f64, f64)> + Sync,
{
    (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (lhs, rhs, margin) = f(seed, &mut rng)?;
            Ok(SuiteRow {
                seed,
                lhs,
                rhs,
                margin,
            })
        })
        .collect()
}

/// `S₂(X)` against the sum of its SVD terms, `N ≤ max_n`. Margin is
/// `1e-8 (1 + S₂) − |difference|`.
pub fn tv_svd_identity_suite(draws: usize, base_seed: u64, max_n: usize) -> Result<Vec<SuiteRow>> {
    run(draws, base_seed, |_, rng| {
        let n = rng.random_range(2..=max_n.max(2));
        let l = rng.random_range(1..=n.min(10));
        let symmetric = rng.random();
        let a = random_shift(rng, n, symmetric)?;
        let x = gaussian_matrix(rng, n, l);
        let lhs = matrix_variation(&x, &a)?;
        let rhs: f64 = tv_svd_terms(&x, &a)?.iter().sum();
        Ok((lhs, rhs, 1e-8 * (1.0 + lhs) - (lhs - rhs).abs()))
    })
}

/// `S₂(X) ≤ S₂(U) ‖X‖_*²` on random low-rank matrices.
pub fn nuclear_tv_suite(draws: usize, base_seed: u64, max_n: usize) -> Result<Vec<SuiteRow>> {
    run(draws, base_seed, |_, rng| {
        let n = rng.random_range(2..=max_n.max(2));
        let l = rng.random_range(1..=n.min(10));
        let r = rng.random_range(1..=l);
        let symmetric = rng.random();
        let a = random_shift(rng, n, symmetric)?;
        let x = gaussian_matrix(rng, n, r) * gaussian_matrix(rng, r, l);
        let b = nuclear_tv_bound(&x, &a)?;
        Ok((b.lhs, b.rhs, b.margin()))
    })
}

/// `S₂(U a) ≤ S₂(U) ‖a‖²` with random orthonormal `U`.
pub fn subspace_suite(draws: usize, base_seed: u64, max_n: usize) -> Result<Vec<SuiteRow>> {
    run(draws, base_seed, |_, rng| {
        let n = rng.random_range(2..=max_n.max(2));
        let r = rng.random_range(1..=n);
        let symmetric = rng.random();
        let a = random_shift(rng, n, symmetric)?;
        let u = gaussian_matrix(rng, n, r).qr().q();
        let coeffs = DVector::from_fn(r, |_, _| rng.sample(StandardNormal));
        let b = subspace_smoothness_bound(&u, &coeffs, &a)?;
        Ok((b.lhs, b.rhs, b.margin()))
    })
}

/// Parameters of the inpainting bound suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InpaintingSuite {
    pub nodes: usize,
    pub observed_fraction: f64,
    /// Number of smoothest modes mixed into the true signal; 0 draws a
    /// white (non-smooth) signal.
    pub smooth_modes: usize,
    pub noise_std: f64,
}

impl Default for InpaintingSuite {
    fn default() -> Self {
        Self {
            nodes: 30,
            observed_fraction: 0.5,
            smooth_modes: 3,
            noise_std: 0.05,
        }
    }
}

/// Error on the inaccessible nodes (`lhs`) against the bound (`rhs`) for
/// noise-budget inpainting on random symmetric graphs. Masks are redrawn
/// until `q < 2`.
pub fn inpainting_bound_suite(
    draws: usize,
    base_seed: u64,
    cfg: &InpaintingSuite,
) -> Result<Vec<SuiteRow>> {
    let n = cfg.nodes;
    let observed = ((cfg.observed_fraction * n as f64).round() as usize).clamp(1, n);
    run(draws, base_seed, |_, rng| {
        let a = random_shift(rng, n, true)?;
        let x0 = if cfg.smooth_modes == 0 {
            gaussian_matrix(rng, n, 1)
        } else {
            let eig = nalgebra::linalg::SymmetricEigen::new(tilde_shift(&a));
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let mut x = DMatrix::zeros(n, 1);
            for &k in order.iter().take(cfg.smooth_modes.min(n)) {
                let c: f64 = rng.sample(StandardNormal);
                x += eig.eigenvectors.column(k) * c;
            }
            x
        };
        let mut mask = None;
        for _ in 0..100 {
            let mut nodes: Vec<usize> = (0..n).collect();
            for i in 0..observed {
                let j = rng.random_range(i..n);
                nodes.swap(i, j);
            }
            let m = IndexMask::from_nodes(n, &nodes[..observed])?;
            if super::inpainting_bound(&a, &m, 0.0, 0.0)?.q < 2.0 {
                mask = Some(m);
                break;
            }
        }
        let mask = mask.ok_or(crate::error::GsrError::BoundNotApplicable(2.0))?;
        let noise = gaussian_matrix(rng, n, 1) * cfg.noise_std;
        let t = mask.restrict(&(&x0 + noise));
        let epsilon = mask.restrict(&(&x0 - &t)).norm();
        let x_hat = gtv_constrained(&t, &mask, &a, epsilon)?;
        let check = verify_inpainting_bound(&a, &mask, &x0, &t, &x_hat)?;
        Ok((check.error, check.bound, check.margin))
    })
}

/// Writes `seed,lhs,rhs,margin` rows with a header.
pub fn write_suite_csv<W: Write>(rows: &[SuiteRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_are_reproducible() {
        let a = nuclear_tv_suite(8, 42, 12).unwrap();
        let b = nuclear_tv_suite(8, 42, 12).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[3].seed, 45);
    }

    #[test]
    fn small_suites_pass() {
        for row in tv_svd_identity_suite(20, 1, 15).unwrap() {
            assert!(row.margin >= 0.0, "{row:?}");
        }
        for row in subspace_suite(20, 1, 15).unwrap() {
            assert!(row.margin >= -1e-10, "{row:?}");
        }
        for row in inpainting_bound_suite(5, 1, &InpaintingSuite::default()).unwrap() {
            assert!(row.margin >= 0.0, "{row:?}");
        }
    }

    #[test]
    fn symmetric_shift_keeps_q_at_most_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = random_shift(&mut rng, 12, true).unwrap();
            let m = IndexMask::from_nodes(12, &[0, 3, 5, 8]).unwrap();
            assert!(super::super::inpainting_bound(&a, &m, 0.0, 0.0).unwrap().q <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = [SuiteRow {
            seed: 1,
            lhs: 0.5,
            rhs: 1.0,
            margin: 0.5,
        }];
        let mut buf = Vec::new();
        write_suite_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "seed,lhs,rhs,margin\n1,0.5,1.0,0.5\n");
    }
}
