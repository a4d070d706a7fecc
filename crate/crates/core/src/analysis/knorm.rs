use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::graph::GraphShift;
use crate::spectral::{gft, igft, spectral_decomposition, SpectralBasis};

/// Hermitian form `K = (I − Λ)* V* V (I − Λ)` on graph Fourier coefficients.
/// For `x = V a`, `‖a‖_K² = a* K a = S₂(x)`.
#[derive(Clone, Debug)]
pub struct KNormOperator {
    pub k: DMatrix<Complex64>,
    pub basis: SpectralBasis,
    /// Radius of the ball `{a : ‖a‖_K ≤ eta}`.
    pub eta: f64,
}

impl KNormOperator {
    pub fn new(basis: SpectralBasis, eta: f64) -> Self {
        let n = basis.size();
        let mut scaled = basis.vectors.clone();
        for j in 0..n {
            let f = Complex64::new(1.0, 0.0) - basis.values[j];
            scaled.column_mut(j).iter_mut().for_each(|v| *v *= f);
        }
        let mut k = scaled.adjoint() * &scaled;
        // exact Hermitian symmetry
        for i in 0..n {
            k[(i, i)].im = 0.0;
            for j in i + 1..n {
                let avg = (k[(i, j)] + k[(j, i)].conj()) * 0.5;
                k[(i, j)] = avg;
                k[(j, i)] = avg.conj();
            }
        }
        Self { k, basis, eta }
    }

    pub fn from_shift(a: &GraphShift, eta: f64) -> Result<Self> {
        Ok(Self::new(spectral_decomposition(a)?, eta))
    }

    /// `√(a* K a)`, clamped at zero against round-off.
    pub fn norm(&self, coeffs: &DVector<Complex64>) -> Result<f64> {
        if coeffs.len() != self.k.nrows() {
            return Err(GsrError::DimensionMismatch(format!(
                "{} coefficients for a {}-node basis",
                coeffs.len(),
                self.k.nrows()
            )));
        }
        let q = (coeffs.adjoint() * &self.k * coeffs)[(0, 0)].re;
        Ok(q.max(0.0).sqrt())
    }

    /// Whether `coeffs` lies in the K-ball of radius `eta`.
    pub fn contains(&self, coeffs: &DVector<Complex64>) -> Result<bool> {
        Ok(self.norm(coeffs)? <= self.eta)
    }
}

/// Sparse outliers `e⁰ = Σ_{i∈ℰ} bᵢ δᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierModel {
    support: Vec<usize>,
    magnitudes: Vec<f64>,
}

impl OutlierModel {
    pub fn new(n: usize, support: Vec<usize>, magnitudes: Vec<f64>) -> Result<Self> {
        if support.len() != magnitudes.len() {
            return Err(GsrError::DimensionMismatch(format!(
                "{} outlier nodes, {} magnitudes",
                support.len(),
                magnitudes.len()
            )));
        }
        let mut seen = vec![false; n];
        for (&i, &b) in support.iter().zip(&magnitudes) {
            if i >= n || seen[i] {
                return Err(GsrError::InvalidParameter(format!("outlier node {i}")));
            }
            if b == 0.0 || !b.is_finite() {
                return Err(GsrError::InvalidParameter(format!(
                    "outlier magnitude {b} at node {i}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self {
            support,
            magnitudes,
        })
    }

    /// Reads the nonzero entries of a single signal.
    pub fn from_signal(e: &DMatrix<f64>) -> Result<Self> {
        let (support, magnitudes) = e
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .unzip();
        Self::new(e.len(), support, magnitudes)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn to_signal(&self, n: usize) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(n, 1);
        for (&i, &b) in self.support.iter().zip(&self.magnitudes) {
            e[(i, 0)] = b;
        }
        e
    }
}

/// The detected outliers `ê = t − x̂` split into a spectral part
/// `V(a⁰ − â)` and the true outliers `Σ bᵢ δᵢ`.
#[derive(Clone, Debug)]
pub struct ResidualDecomposition {
    pub e_hat: DMatrix<f64>,
    pub spectral_part: DMatrix<f64>,
    pub outlier_part: DMatrix<f64>,
    /// `‖ê − spectral_part − outlier_part‖₂`.
    pub residual: f64,
}

/// Splits the detected outliers of an anomaly detection run on
/// `t = x⁰ + e⁰`. Fails with `InconsistentInputs` if `e_hat ≠ t − x_hat` or
/// the split does not reproduce `e_hat`, both to `1e-8 (1 + ‖ê‖)`.
pub fn residual_decomposition(
    x0: &DMatrix<f64>,
    x_hat: &DMatrix<f64>,
    e_hat: &DMatrix<f64>,
    outliers: &OutlierModel,
    basis: &SpectralBasis,
) -> Result<ResidualDecomposition> {
    let n = basis.size();
    for (what, m) in [
        ("true signal", x0),
        ("estimate", x_hat),
        ("outliers", e_hat),
    ] {
        if m.shape() != (n, 1) {
            return Err(GsrError::DimensionMismatch(format!(
                "{what} must be {n}x1, got {:?}",
                m.shape()
            )));
        }
    }
    if outliers.support.iter().any(|&i| i >= n) {
        return Err(GsrError::DimensionMismatch(
            "outlier support outside the graph".into(),
        ));
    }
    let tol = 1e-8 * (1.0 + e_hat.norm());
    let outlier_part = outliers.to_signal(n);
    let t = x0 + &outlier_part;
    let gap = (&t - x_hat - e_hat).norm();
    if gap > tol {
        return Err(GsrError::InconsistentInputs(format!(
            "e_hat differs from t - x_hat by {gap:e}"
        )));
    }
    let diff = gft(x0, basis)? - gft(x_hat, basis)?;
    let spectral_part = igft(&diff, basis)?;
    let residual = (e_hat - &spectral_part - &outlier_part).norm();
    if residual > tol {
        return Err(GsrError::InconsistentInputs(format!(
            "decomposition residual {residual:e}"
        )));
    }
    Ok(ResidualDecomposition {
        e_hat: e_hat.clone(),
        spectral_part,
        outlier_part,
        residual,
    })
}
