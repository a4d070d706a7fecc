//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Thin SVD `X = U diag(s) Vᵀ` with singular values sorted descending and a
/// fixed sign convention: the first significant component of every left
/// singular vector is nonnegative.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * smax)
            .count()
    }

    pub fn recompose(&self, singular_values: &DVector<f64>) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * &self.v_t
    }
}

pub fn svd(x: &DMatrix<f64>) -> Svd {
    let (n, l) = x.shape();
    let k = n.min(l);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(n, 0),
            singular_values: DVector::zeros(0),
            v_t: DMatrix::zeros(0, l),
        };
    }
    let raw = x.clone().svd(true, true);
    let u_raw = raw.u.expect("left singular vectors requested");
    let vt_raw = raw.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        raw.singular_values[b]
            .partial_cmp(&raw.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut u = DMatrix::zeros(n, k);
    let mut v_t = DMatrix::zeros(k, l);
    let mut s = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        let col = u_raw.column(src);
        let scale = col.amax();
        let sign = col
            .iter()
            .find(|c| c.abs() > 1e-12 * scale)
            .map_or(1.0, |c| if *c < 0.0 { -1.0 } else { 1.0 });
        u.set_column(dst, &(col * sign));
        v_t.set_row(dst, &(vt_raw.row(src) * sign));
        s[dst] = raw.singular_values[src];
    }
    Svd {
        u,
        singular_values: s,
        v_t,
    }
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(x: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    x.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    x.singular_values().sum()
}

pub fn l1_norm(x: &DMatrix<f64>) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// Largest absolute asymmetry `|H_ij - H_ji|`.
pub fn asymmetry(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

pub fn all_finite(x: &DMatrix<f64>) -> bool {
    x.iter().all(|v| v.is_finite())
}
