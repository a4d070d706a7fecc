//! Graph shifts and the quadratic graph total variation.
//!
//! Orientation: `A[n, m]` is the weight of the edge from node `m` into node
//! `n`, so `(A x)[n]` aggregates the neighbors of `n`. A row-stochastic shift
//! therefore averages over in-neighbors and leaves constant signals unchanged.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::mask::IndexMask;

/// Spectral radii below this are treated as zero.
pub const RADIUS_TOL: f64 = 1e-12;
/// Above this size the spectral radius is estimated by power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 10_000;
const SCHUR_MAX_ITERS: usize = 10_000;

/// Weighted adjacency matrix acting as the elementary graph filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphShift {
    weights: DMatrix<f64>,
    normalized: bool,
    /// |λ_max| before normalization, set by [`normalize_shift`].
    spectral_radius: Option<f64>,
}

impl GraphShift {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(GsrError::DimensionMismatch(format!(
                "graph shift must be square, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if weights.nrows() == 0 {
            return Err(GsrError::InvalidParameter(
                "graph shift needs at least one node".into(),
            ));
        }
        if !weights.iter().all(|w| w.is_finite()) {
            return Err(GsrError::NonFinite("graph shift weights".into()));
        }
        Ok(Self {
            weights,
            normalized: false,
            spectral_radius: None,
        })
    }

    /// Wraps weights that are claimed to be normalized already; the claim is
    /// checked against a fresh spectral radius computation.
    pub fn new_normalized(weights: DMatrix<f64>) -> Result<Self> {
        let mut shift = Self::new(weights)?;
        let radius = spectral_radius(&shift.weights);
        if (radius - 1.0).abs() > 1e-9 {
            return Err(GsrError::InvalidParameter(format!(
                "shift marked normalized has spectral radius {radius}"
            )));
        }
        shift.normalized = true;
        shift.spectral_radius = Some(1.0);
        Ok(shift)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            weights: DMatrix::identity(n, n),
            normalized: true,
            spectral_radius: Some(1.0),
        }
    }

    /// Cyclic permutation `(A x)[n] = x[n - 1 mod N]`.
    pub fn cycle(n: usize) -> Self {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            w[(i, (i + n - 1) % n)] = 1.0;
        }
        Self {
            weights: w,
            normalized: true,
            spectral_radius: Some(1.0),
        }
    }

    pub fn size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn spectral_radius(&self) -> Option<f64> {
        self.spectral_radius
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        crate::linalg::asymmetry(&self.weights) <= tol
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        if !self.normalized {
            return Err(GsrError::InvalidParameter(
                "graph shift must be normalized (see normalize_shift)".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_signal(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.size() {
            return Err(GsrError::DimensionMismatch(format!(
                "signal has {} rows, graph has {} nodes",
                x.nrows(),
                self.size()
            )));
        }
        Ok(())
    }
}

/// |λ_max(A)|: dense eigensolve up to [`DENSE_EIGEN_LIMIT`] nodes, power
/// iteration above. The real Schur iteration can stall on permutation-like
/// matrices, so it is bounded and backed by a complex Schur form and then by
/// power iteration.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.nrows() > DENSE_EIGEN_LIMIT {
        return power_iteration_radius(a);
    }
    if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITERS) {
        return schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    let complex = a.map(|v| Complex64::new(v, 0.0));
    if let Some(schur) = Schur::try_new(complex, f64::EPSILON, SCHUR_MAX_ITERS) {
        let (_, t) = schur.unpack();
        return t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    power_iteration_radius(a)
}

/// Estimates the spectral radius as the geometric-mean growth rate of
/// `‖Aᵏx‖`. Averaging over two steps handles conjugate dominant pairs.
pub(crate) fn power_iteration_radius(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i % 7) as f64 * 0.1);
    x /= x.norm();
    let mut prev = f64::INFINITY;
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y = a * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let z = a * (&y / ny);
        let nz = z.norm();
        if nz == 0.0 {
            return 0.0;
        }
        estimate = (ny * nz).sqrt();
        x = z / nz;
        if (estimate - prev).abs() <= POWER_TOL * estimate.max(1.0) {
            break;
        }
        prev = estimate;
    }
    estimate
}

/// Scales `A` by `1/|λ_max(A)|`.
pub fn normalize_shift(a: &GraphShift) -> Result<GraphShift> {
    let radius = spectral_radius(&a.weights);
    if radius.is_nan() || radius < RADIUS_TOL {
        return Err(GsrError::ZeroSpectralRadius(radius));
    }
    Ok(GraphShift {
        weights: &a.weights / radius,
        normalized: true,
        spectral_radius: Some(radius),
    })
}

/// `(I - A) X`.
pub fn shift_residual(x: &DMatrix<f64>, a: &GraphShift) -> Result<DMatrix<f64>> {
    a.check_signal(x)?;
    Ok(x - a.weights() * x)
}

/// `S₂(x) = ‖x − A x‖₂²` for a single signal.
pub fn quadratic_variation(x: &DMatrix<f64>, a: &GraphShift) -> Result<f64> {
    if x.ncols() != 1 {
        return Err(GsrError::DimensionMismatch(format!(
            "expected a single signal, got {} columns",
            x.ncols()
        )));
    }
    matrix_variation(x, a)
}

/// `S₂(X) = ‖X − A X‖_F²`, the sum of per-column variations.
pub fn matrix_variation(x: &DMatrix<f64>, a: &GraphShift) -> Result<f64> {
    Ok(shift_residual(x, a)?.norm_squared())
}

/// `Ã = (I − A)ᵀ(I − A)`, symmetric positive semidefinite.
pub fn tilde_shift(a: &GraphShift) -> DMatrix<f64> {
    let n = a.size();
    let d = DMatrix::identity(n, n) - a.weights();
    let mut t = d.transpose() * &d;
    // exact symmetry; the product is symmetric only up to rounding
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (t[(i, j)] + t[(j, i)]);
            t[(i, j)] = v;
            t[(j, i)] = v;
        }
    }
    t
}

/// Square matrix split into accessible/inaccessible blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks {
    pub mm: DMatrix<f64>,
    pub mu: DMatrix<f64>,
    pub um: DMatrix<f64>,
    pub uu: DMatrix<f64>,
    pub accessible: Vec<usize>,
    pub inaccessible: Vec<usize>,
}

impl Blocks {
    /// Inverse of [`partition_blocks`].
    pub fn reassemble(&self) -> DMatrix<f64> {
        let n = self.accessible.len() + self.inaccessible.len();
        let mut out = DMatrix::zeros(n, n);
        let parts = [
            (&self.accessible, &self.accessible, &self.mm),
            (&self.accessible, &self.inaccessible, &self.mu),
            (&self.inaccessible, &self.accessible, &self.um),
            (&self.inaccessible, &self.inaccessible, &self.uu),
        ];
        for (rows, cols, block) in parts {
            for (bi, &i) in rows.iter().enumerate() {
                for (bj, &j) in cols.iter().enumerate() {
                    out[(i, j)] = block[(bi, bj)];
                }
            }
        }
        out
    }
}

pub(crate) fn submatrix(mat: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| mat[(rows[i], cols[j])])
}

/// Reorders `mat` into `[MM MU; UM UU]` blocks under a node mask.
pub fn partition_blocks(mat: &DMatrix<f64>, mask: &IndexMask) -> Result<Blocks> {
    mask.require_node_mask()?;
    if mat.nrows() != mask.nrows() || mat.ncols() != mask.nrows() {
        return Err(GsrError::DimensionMismatch(format!(
            "matrix is {}x{}, mask covers {} nodes",
            mat.nrows(),
            mat.ncols(),
            mask.nrows()
        )));
    }
    let m = mask.accessible_nodes();
    let u = mask.inaccessible_nodes();
    Ok(Blocks {
        mm: submatrix(mat, &m, &m),
        mu: submatrix(mat, &m, &u),
        um: submatrix(mat, &u, &m),
        uu: submatrix(mat, &u, &u),
        accessible: m,
        inaccessible: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn normalize_scalar_matrix() {
        let a = GraphShift::new(DMatrix::identity(3, 3) * 2.0).unwrap();
        let n = normalize_shift(&a).unwrap();
        assert!((n.weights() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
        assert!((n.spectral_radius().unwrap() - 2.0).abs() < 1e-12);
        assert!(n.is_normalized());
    }

    #[test]
    fn normalize_permutation_unchanged() {
        let c = GraphShift::cycle(3);
        let raw = GraphShift::new(c.weights().clone()).unwrap();
        let n = normalize_shift(&raw).unwrap();
        assert!((n.weights() - c.weights()).norm() < 1e-12);
    }

    #[test]
    fn cycle_radius_terminates() {
        for n in [4, 8, 16, 31] {
            let r = spectral_radius(GraphShift::cycle(n).weights());
            assert!((r - 1.0).abs() < 1e-9, "n = {n}: {r}");
        }
    }

    #[test]
    fn nilpotent_rejected() {
        let a = GraphShift::new(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0])).unwrap();
        assert!(matches!(
            normalize_shift(&a),
            Err(GsrError::ZeroSpectralRadius(_))
        ));
    }

    #[test]
    fn power_iteration_matches_dense() {
        let a = DMatrix::from_fn(12, 12, |i, j| {
            if (i + 1) % 12 == j || (i + 5) % 12 == j || i == j {
                0.3 + 0.05 * ((i * j + i) % 4) as f64
            } else {
                0.0
            }
        });
        let dense = spectral_radius(&a);
        let power = power_iteration_radius(&a);
        assert!((dense - power).abs() < 1e-6 * dense, "{dense} vs {power}");
    }

    #[test]
    fn variation_examples() {
        let a = GraphShift::cycle(3);
        assert!(
            quadratic_variation(&col(&[1.0, 1.0, 1.0]), &a)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!((quadratic_variation(&col(&[1.0, 0.0, 0.0]), &a).unwrap() - 2.0).abs() < 1e-15);
        let id = GraphShift::identity(3);
        assert_eq!(
            quadratic_variation(&col(&[3.0, -1.0, 2.0]), &id).unwrap(),
            0.0
        );
        assert!(quadratic_variation(&col(&[1.0, 2.0]), &a).is_err());
    }

    #[test]
    fn matrix_variation_is_column_additive() {
        let a = GraphShift::cycle(3);
        let x = col(&[1.0, 0.0, 2.0]);
        let xx = DMatrix::from_columns(&[x.column(0), x.column(0)]);
        let single = quadratic_variation(&x, &a).unwrap();
        assert!((matrix_variation(&xx, &a).unwrap() - 2.0 * single).abs() < 1e-14);
        assert_eq!(matrix_variation(&DMatrix::zeros(3, 4), &a).unwrap(), 0.0);
    }

    #[test]
    fn tilde_shift_examples() {
        assert_eq!(tilde_shift(&GraphShift::identity(4)), DMatrix::zeros(4, 4));
        let c = GraphShift::cycle(3);
        let expected = DMatrix::identity(3, 3) * 2.0 - c.weights() - c.weights().transpose();
        assert!((tilde_shift(&c) - expected).norm() < 1e-14);
        let s = GraphShift::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let d = DMatrix::identity(2, 2) - s.weights();
        assert!((tilde_shift(&s) - &d * &d).norm() < 1e-14);
    }

    #[test]
    fn blocks_shapes_and_round_trip() {
        let mat = DMatrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let mask = IndexMask::from_nodes(3, &[0]).unwrap();
        let b = partition_blocks(&mat, &mask).unwrap();
        assert_eq!(b.mm.shape(), (1, 1));
        assert_eq!(b.mu.shape(), (1, 2));
        assert_eq!(b.um.shape(), (2, 1));
        assert_eq!(b.uu.shape(), (2, 2));
        assert_eq!(b.reassemble(), mat);

        let full = IndexMask::full(3, 1);
        let b = partition_blocks(&mat, &full).unwrap();
        assert_eq!(b.mm, mat);
        assert_eq!(b.uu.shape(), (0, 0));
        assert_eq!(b.mu.shape(), (3, 0));
    }
}
