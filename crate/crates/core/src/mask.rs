use nalgebra::DMatrix;

use crate::error::{GsrError, Result};

/// Accessible entries `M` of an `N x L` signal matrix. The inaccessible set
/// `U` is the complement. A mask with a single column is a node mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMask {
    nrows: usize,
    ncols: usize,
    // column-major, same layout as nalgebra storage
    accessible: Vec<bool>,
}

impl IndexMask {
    /// Mask with no accessible entries.
    pub fn empty(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            accessible: vec![false; nrows * ncols],
        }
    }

    pub fn full(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            accessible: vec![true; nrows * ncols],
        }
    }

    pub fn from_entries<I>(nrows: usize, ncols: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut mask = Self::empty(nrows, ncols);
        for (r, c) in entries {
            if r >= nrows || c >= ncols {
                return Err(GsrError::DimensionMismatch(format!(
                    "mask entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            mask.set(r, c, true);
        }
        Ok(mask)
    }

    /// Node mask over `n` nodes with the given accessible nodes.
    pub fn from_nodes(n: usize, nodes: &[usize]) -> Result<Self> {
        Self::from_entries(n, 1, nodes.iter().map(|&i| (i, 0)))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_node_mask(&self) -> bool {
        self.ncols == 1
    }

    #[inline]
    pub fn contains(&self, r: usize, c: usize) -> bool {
        self.accessible[r + c * self.nrows]
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.accessible[r + c * self.nrows] = value;
    }

    /// Number of accessible entries.
    pub fn len(&self) -> usize {
        self.accessible.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.accessible.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.accessible.iter().all(|&b| b)
    }

    /// Accessible entries in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nrows = self.nrows;
        self.accessible
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k % nrows, k / nrows))
    }

    /// Inaccessible entries in column-major order.
    pub fn complement_entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nrows = self.nrows;
        self.accessible
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(move |(k, _)| (k % nrows, k / nrows))
    }

    pub fn complement(&self) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            accessible: self.accessible.iter().map(|b| !b).collect(),
        }
    }

    /// Accessible rows of a node mask, ascending.
    pub fn accessible_nodes(&self) -> Vec<usize> {
        (0..self.nrows).filter(|&r| self.contains(r, 0)).collect()
    }

    /// Inaccessible rows of a node mask, ascending.
    pub fn inaccessible_nodes(&self) -> Vec<usize> {
        (0..self.nrows).filter(|&r| !self.contains(r, 0)).collect()
    }

    /// 0/1 indicator matrix of the accessible set.
    pub fn indicator(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |r, c| {
            if self.contains(r, c) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Copy of `x` with inaccessible entries zeroed.
    pub fn restrict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows, self.ncols, |r, c| {
            if self.contains(r, c) {
                x[(r, c)]
            } else {
                0.0
            }
        })
    }

    pub fn check_shape(&self, x: &DMatrix<f64>, what: &str) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(GsrError::DimensionMismatch(format!(
                "{what} is {}x{} but mask is {}x{}",
                x.nrows(),
                x.ncols(),
                self.nrows,
                self.ncols
            )));
        }
        Ok(())
    }

    pub(crate) fn require_node_mask(&self) -> Result<()> {
        if !self.is_node_mask() {
            return Err(GsrError::DimensionMismatch(format!(
                "expected a node mask, got {} columns",
                self.ncols
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_partitions_entries() {
        let m = IndexMask::from_entries(3, 2, [(0, 0), (2, 1)]).unwrap();
        assert_eq!(m.len(), 2);
        let c = m.complement();
        assert_eq!(c.len(), 4);
        for r in 0..3 {
            for col in 0..2 {
                assert_ne!(m.contains(r, col), c.contains(r, col));
            }
        }
        assert_eq!(m.entries().collect::<Vec<_>>(), vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn out_of_range_entry_rejected() {
        assert!(IndexMask::from_entries(2, 2, [(2, 0)]).is_err());
        assert!(IndexMask::from_nodes(3, &[3]).is_err());
    }

    #[test]
    fn node_lists() {
        let m = IndexMask::from_nodes(4, &[1, 3]).unwrap();
        assert_eq!(m.accessible_nodes(), vec![1, 3]);
        assert_eq!(m.inaccessible_nodes(), vec![0, 2]);
        assert!(m.is_node_mask());
    }
}
