use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::graph::{matrix_variation, shift_residual, GraphShift};
use crate::linalg::{nuclear_norm, svd};

/// Relative cutoff below which singular values count as zero.
const RANK_TOL: f64 = 1e-12;
/// Allowed deviation of `UᵀU` from the identity.
const ORTHONORMAL_TOL: f64 = 1e-8;

/// Both sides of an inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// Left singular vectors of `x` with nonzero singular values.
fn left_factor(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let dec = svd(x);
    let r = dec.rank(RANK_TOL);
    (
        dec.u.columns(0, r).into_owned(),
        dec.singular_values.rows(0, r).into_owned(),
    )
}

/// Per-component variation terms `σᵢ² ‖(I − A) uᵢ‖²`, one for each nonzero
/// singular triplet of `x`. They sum to `S₂(x)`.
pub fn tv_svd_terms(x: &DMatrix<f64>, a: &GraphShift) -> Result<Vec<f64>> {
    a.require_normalized()?;
    a.check_signal(x)?;
    let (u, sigma) = left_factor(x);
    let r = shift_residual(&u, a)?;
    Ok((0..sigma.len())
        .map(|i| sigma[i] * sigma[i] * r.column(i).norm_squared())
        .collect())
}

/// `S₂(X) ≤ S₂(U) ‖X‖_*²`, where `U` holds the left singular vectors of `X`
/// for its nonzero singular values.
pub fn nuclear_tv_bound(x: &DMatrix<f64>, a: &GraphShift) -> Result<Inequality> {
    a.require_normalized()?;
    a.check_signal(x)?;
    let (u, _) = left_factor(x);
    let nuc = nuclear_norm(x);
    Ok(Inequality {
        lhs: matrix_variation(x, a)?,
        rhs: matrix_variation(&u, a)? * nuc * nuc,
    })
}

/// `S₂(U a) ≤ S₂(U) ‖a‖₂²` for a signal in the span of orthonormal columns.
pub fn subspace_smoothness_bound(
    u: &DMatrix<f64>,
    coeffs: &DVector<f64>,
    a: &GraphShift,
) -> Result<Inequality> {
    a.require_normalized()?;
    a.check_signal(u)?;
    if coeffs.len() != u.ncols() {
        return Err(GsrError::DimensionMismatch(format!(
            "{} coefficients for {} basis vectors",
            coeffs.len(),
            u.ncols()
        )));
    }
    let gram = u.transpose() * u;
    let dev = (gram - DMatrix::identity(u.ncols(), u.ncols())).amax();
    if dev > ORTHONORMAL_TOL {
        return Err(GsrError::NonOrthonormalBasis(dev));
    }
    let x = u * coeffs;
    let x = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    Ok(Inequality {
        lhs: matrix_variation(&x, a)?,
        rhs: matrix_variation(u, a)? * coeffs.norm_squared(),
    })
}
