//! Eigendecomposition `A = V Λ V⁻¹` of a real graph shift and the graph
//! Fourier transform `x̃ = V⁻¹ x`.
//!
//! Eigenvectors come from a complex Schur form `A = Q T Q*`: the
//! eigenvectors of the triangular factor are found by back substitution and
//! mapped back through `Q`. Defective shifts produce nearly parallel
//! eigenvectors and are rejected by the conditioning test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GsrError, Result};
use crate::graph::GraphShift;

/// Eigenvector matrices with condition number above this are treated as
/// defective.
pub const MAX_EIGVEC_CONDITION: f64 = 1e10;

const SCHUR_MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct SpectralBasis {
    /// Unit-norm eigenvectors as columns.
    pub vectors: DMatrix<Complex64>,
    pub values: DVector<Complex64>,
    pub inverse: DMatrix<Complex64>,
    /// 2-norm condition number of `vectors`.
    pub condition: f64,
}

impl SpectralBasis {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    /// `V Λ V⁻¹`.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let mut vl = self.vectors.clone();
        for (j, lambda) in self.values.iter().enumerate() {
            vl.column_mut(j).iter_mut().for_each(|v| *v *= lambda);
        }
        vl * &self.inverse
    }
}

pub(crate) fn to_complex(x: &DMatrix<f64>) -> DMatrix<Complex64> {
    x.map(|v| Complex64::new(v, 0.0))
}

/// Computes `A = V Λ V⁻¹`, failing with `NotDiagonalizable` when the
/// eigenvector matrix is too ill-conditioned or the reconstruction misses
/// its tolerance.
pub fn spectral_decomposition(a: &GraphShift) -> Result<SpectralBasis> {
    let n = a.size();
    let ac = to_complex(a.weights());
    let schur = nalgebra::Schur::try_new(ac, f64::EPSILON, SCHUR_MAX_ITERS)
        .ok_or(GsrError::NotDiagonalizable(f64::INFINITY))?;
    let (q, t) = schur.unpack();

    let tnorm = t.norm().max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * tnorm;
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for i in (j + 1)..=k {
                s += t[(j, i)] * y[(i, k)];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            y[(j, k)] = -s / d;
        }
    }
    let mut vectors = q * y;
    for mut c in vectors.column_iter_mut() {
        let nrm = c.norm();
        if nrm > 0.0 && nrm.is_finite() {
            c.unscale_mut(nrm);
        }
    }
    let values = DVector::from_fn(n, |i, _| t[(i, i)]);

    let sv = vectors.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin_v = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin_v > 0.0 {
        smax / smin_v
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > MAX_EIGVEC_CONDITION {
        return Err(GsrError::NotDiagonalizable(condition));
    }
    let inverse = vectors
        .clone()
        .try_inverse()
        .ok_or(GsrError::NotDiagonalizable(condition))?;

    let basis = SpectralBasis {
        vectors,
        values,
        inverse,
        condition,
    };
    let a_norm = a.weights().norm();
    let recon_err = (basis.reconstruct() - to_complex(a.weights())).norm();
    let ident_err = (&basis.vectors * &basis.inverse - DMatrix::<Complex64>::identity(n, n)).norm();
    if recon_err > 1e-8 * a_norm.max(f64::MIN_POSITIVE) || ident_err > 1e-8 * (n as f64).sqrt() {
        return Err(GsrError::NotDiagonalizable(condition));
    }
    Ok(basis)
}

/// Graph Fourier transform of a single signal.
pub fn gft(x: &DMatrix<f64>, basis: &SpectralBasis) -> Result<DVector<Complex64>> {
    if x.ncols() != 1 || x.nrows() != basis.size() {
        return Err(GsrError::DimensionMismatch(format!(
            "expected a {}x1 signal, got {}x{}",
            basis.size(),
            x.nrows(),
            x.ncols()
        )));
    }
    let xc = DVector::from_fn(x.nrows(), |i, _| Complex64::new(x[(i, 0)], 0.0));
    Ok(&basis.inverse * xc)
}

/// Inverse transform; returns the real part of `V x̃`.
pub fn igft(coeffs: &DVector<Complex64>, basis: &SpectralBasis) -> Result<DMatrix<f64>> {
    if coeffs.len() != basis.size() {
        return Err(GsrError::DimensionMismatch(format!(
            "expected {} coefficients, got {}",
            basis.size(),
            coeffs.len()
        )));
    }
    let x = &basis.vectors * coeffs;
    Ok(DMatrix::from_fn(x.len(), 1, |i, _| x[i].re))
}
