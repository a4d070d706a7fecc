use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GsrError, Result};
use crate::graph::{quadratic_variation, submatrix, GraphShift};
use crate::linalg::spectral_norm;
use crate::mask::IndexMask;

/// Constants of the inpainting error bound for one graph and sampling set.
///
/// `p` and `q` are the spectral norms of the columns of `I + A` indexed by
/// the accessible and inaccessible nodes. The bound on the inaccessible
/// error, `(2p|ε| + 2|η|) / (2 − q)`, exists only when `q < 2`; the bound on
/// the full error has the same value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: f64,
    pub q: f64,
    pub epsilon: f64,
    pub eta_smooth: f64,
    pub full_bound: Option<f64>,
    pub inaccessible_bound: Option<f64>,
    /// No inaccessible nodes; `q` is 0 by convention.
    pub degenerate_mask: bool,
}

/// Outcome of checking the inaccessible-part bound on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    /// `‖(x⁰ − x̂)_U‖₂`.
    pub error: f64,
    pub bound: f64,
    pub margin: f64,
    pub report: BoundReport,
}

/// Computes `p`, `q` and the error bounds for noise level `epsilon` and
/// smoothness `eta_smooth = √S₂(x⁰)`.
pub fn inpainting_bound(
    a: &GraphShift,
    mask: &IndexMask,
    epsilon: f64,
    eta_smooth: f64,
) -> Result<BoundReport> {
    a.require_normalized()?;
    mask.require_node_mask()?;
    if mask.nrows() != a.size() {
        return Err(GsrError::DimensionMismatch(format!(
            "mask has {} nodes, graph has {}",
            mask.nrows(),
            a.size()
        )));
    }
    let n = a.size();
    let plus = DMatrix::identity(n, n) + a.weights();
    let rows: Vec<usize> = (0..n).collect();
    let accessible = mask.accessible_nodes();
    let inaccessible = mask.inaccessible_nodes();
    let norm_of = |cols: &[usize]| {
        if cols.is_empty() {
            0.0
        } else {
            spectral_norm(&submatrix(&plus, &rows, cols))
        }
    };
    let p = norm_of(&accessible);
    let q = norm_of(&inaccessible);
    let bound = (q < 2.0).then(|| (2.0 * p * epsilon.abs() + 2.0 * eta_smooth.abs()) / (2.0 - q));
    Ok(BoundReport {
        p,
        q,
        epsilon,
        eta_smooth,
        full_bound: bound,
        inaccessible_bound: bound,
        degenerate_mask: inaccessible.is_empty(),
    })
}

/// Checks the inaccessible-part bound for a recovered signal `x_hat`, with
/// `ε = ‖(x⁰ − t)_M‖₂` and `η = √S₂(x⁰)` taken from the instance. The bound
/// is stated for the solution of the noise-budget inpainting problem at that
/// `ε` (see [`crate::solvers::gtv_constrained`]).
pub fn verify_inpainting_bound(
    a: &GraphShift,
    mask: &IndexMask,
    x0: &DMatrix<f64>,
    t: &DMatrix<f64>,
    x_hat: &DMatrix<f64>,
) -> Result<BoundCheck> {
    for (what, m) in [("true signal", x0), ("measurement", t), ("estimate", x_hat)] {
        a.check_signal(m)?;
        if m.ncols() != 1 {
            return Err(GsrError::DimensionMismatch(format!(
                "{what} must be a single signal"
            )));
        }
    }
    let epsilon = mask.restrict(&(x0 - t)).norm();
    let eta = quadratic_variation(x0, a)?.sqrt();
    let report = inpainting_bound(a, mask, epsilon, eta)?;
    let bound = report
        .inaccessible_bound
        .ok_or(GsrError::BoundNotApplicable(report.q))?;
    let error = mask.complement().restrict(&(x0 - x_hat)).norm();
    Ok(BoundCheck {
        holds: error <= bound,
        error,
        bound,
        margin: bound - error,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::gtvm;

    #[test]
    fn three_cycle_constants_match_direct_svd() {
        let a = GraphShift::cycle(3);
        let mask = IndexMask::from_nodes(3, &[0, 1]).unwrap();
        let r = inpainting_bound(&a, &mask, 0.1, 0.2).unwrap();
        // I + A for A[i, i-1] = 1
        let plus = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let pm: f64 = plus.columns(0, 2).into_owned().singular_values().max();
        let qm: f64 = plus.column(2).norm();
        assert!((r.p - pm).abs() < 1e-12);
        assert!((r.q - qm).abs() < 1e-12);
        assert!((r.q - 2f64.sqrt()).abs() < 1e-12);
        let expect = (2.0 * r.p * 0.1 + 0.4) / (2.0 - r.q);
        assert!((r.inaccessible_bound.unwrap() - expect).abs() < 1e-12);
        assert!(!r.degenerate_mask);
    }

    #[test]
    fn full_mask_is_degenerate() {
        let r = inpainting_bound(&GraphShift::cycle(4), &IndexMask::full(4, 1), 0.5, 0.0).unwrap();
        assert_eq!(r.q, 0.0);
        assert!(r.degenerate_mask);
        assert!((r.inaccessible_bound.unwrap() - r.p * 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_signal_on_stochastic_shift_is_recovered_exactly() {
        // symmetric, row-stochastic
        let mut w = DMatrix::zeros(6, 6);
        for i in 0..6 {
            w[(i, (i + 1) % 6)] = 0.25;
            w[(i, (i + 5) % 6)] = 0.25;
            w[(i, (i + 3) % 6)] = 0.5;
        }
        let a = GraphShift::new_normalized(w).unwrap();
        let x0 = DMatrix::from_element(6, 1, 3.0);
        let mask = IndexMask::from_nodes(6, &[0, 2, 3]).unwrap();
        let x_hat = gtvm(&x0, &mask, &a).unwrap();
        let check = verify_inpainting_bound(&a, &mask, &x0, &x0, &x_hat).unwrap();
        assert!(check.bound.abs() < 1e-12);
        assert!(check.error < 1e-9);
    }

    #[test]
    fn bound_not_applicable_when_q_reaches_two() {
        // the unobserved node feeds every node, so its column of I + A is
        // (1, 1, 2) with norm √6
        let mut w = DMatrix::zeros(3, 3);
        w[(0, 2)] = 1.0;
        w[(1, 2)] = 1.0;
        w[(2, 2)] = 1.0;
        let a = crate::graph::normalize_shift(&GraphShift::new(w).unwrap()).unwrap();
        let mask = IndexMask::from_nodes(3, &[0, 1]).unwrap();
        let x = DMatrix::from_element(3, 1, 1.0);
        let r = inpainting_bound(&a, &mask, 0.0, 0.0).unwrap();
        assert!(r.q >= 2.0);
        assert!(r.inaccessible_bound.is_none());
        assert!(matches!(
            verify_inpainting_bound(&a, &mask, &x, &x, &x),
            Err(GsrError::BoundNotApplicable(_))
        ));
    }
}
