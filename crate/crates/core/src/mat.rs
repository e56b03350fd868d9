//! Symmetric matrix storage shared by the estimators.
//!
//! Symmetry is structural: a `SymMat` keeps a single cell per unordered
//! index pair (packed upper triangle, row major), so `get(i, j)` and
//! `get(j, i)` read the same memory and can never disagree. Solvers that
//! need cache-friendly row scans work on a mirrored dense copy and pack
//! back at the end.

use crate::error::{Error, Result};

/// Packed symmetric `p x p` matrix: upper triangle including the diagonal,
/// row major, `p (p + 1) / 2` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    p: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(p: usize) -> Self {
        assert!(p > 0, "matrix dimension must be positive");
        SymMat {
            p,
            data: vec![0.0; p * (p + 1) / 2],
        }
    }

    pub fn identity(p: usize) -> Self {
        let mut m = SymMat::zeros(p);
        for i in 0..p {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from a dense row-major `p*p` slice, averaging nothing: the
    /// upper-triangle entry is taken as-is, so the caller is responsible
    /// for the input being symmetric if that matters.
    pub fn from_dense_upper(dense: &[f64], p: usize) -> Self {
        assert_eq!(dense.len(), p * p, "dense buffer has wrong length");
        let mut m = SymMat::zeros(p);
        for i in 0..p {
            for j in i..p {
                m.set(i, j, dense[i * p + j]);
            }
        }
        m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.p && j < self.p);
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // row a starts after a full rows of decreasing length p, p-1, ...
        a * self.p - a * (a + 1) / 2 + b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// Dense row-major copy; the two mirrored cells of every pair are
    /// bit-identical because they come from the same packed entry.
    pub fn to_dense(&self) -> Vec<f64> {
        let p = self.p;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                let v = self.get(i, j);
                out[i * p + j] = v;
                out[j * p + i] = v;
            }
        }
        out
    }

    /// Iterates the stored triangle: `(i, j, value)` with `i <= j`.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = self.p;
        (0..p).flat_map(move |i| (i..p).map(move |j| (i, j, self.get(i, j))))
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &SymMat) -> f64 {
        assert_eq!(self.p, other.p, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.p).map(|i| self.get(i, i)).collect()
    }

    /// Sum of |entries| over the strict upper triangle.
    pub fn offdiag_abs_sum(&self) -> f64 {
        self.iter_upper()
            .filter(|&(i, j, _)| i != j)
            .map(|(_, _, v)| v.abs())
            .sum()
    }

    /// Count of nonzero strict-upper-triangle entries.
    pub fn offdiag_nonzero_count(&self) -> usize {
        self.iter_upper()
            .filter(|&(i, j, v)| i != j && v != 0.0)
            .count()
    }

    pub(crate) fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Sample covariance `S = (1/n) Y'Y` together with the sample size that
/// produced it.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    mat: SymMat,
    n: usize,
}

impl CovMatrix {
    pub fn new(mat: SymMat, n: usize) -> Self {
        CovMatrix { mat, n }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.mat.p()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mat(&self) -> &SymMat {
        &self.mat
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.mat.to_dense()
    }

    /// Largest |s_ij| over the strict upper triangle.
    pub fn max_abs_offdiag(&self) -> f64 {
        self.mat
            .iter_upper()
            .filter(|&(i, j, _)| i != j)
            .map(|(_, _, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Symmetric precision (inverse-covariance) estimate with a strictly
/// positive diagonal. Off-diagonal entries may be anything, including
/// values that make the matrix indefinite: the estimators deliberately do
/// not force positive definiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    mat: SymMat,
}

impl PrecisionEstimate {
    pub fn new(mat: SymMat) -> Result<Self> {
        for i in 0..mat.p() {
            let v = mat.get(i, i);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveDiagonal { index: i, value: v });
            }
        }
        Ok(PrecisionEstimate { mat })
    }

    pub fn identity(p: usize) -> Self {
        PrecisionEstimate {
            mat: SymMat::identity(p),
        }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let mut m = SymMat::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        PrecisionEstimate::new(m)
    }

    pub fn from_dense_upper(dense: &[f64], p: usize) -> Result<Self> {
        PrecisionEstimate::new(SymMat::from_dense_upper(dense, p))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.mat.p()
    }

    pub fn mat(&self) -> &SymMat {
        &self.mat
    }

    pub fn to_dense(&self) -> Vec<f64> {
        self.mat.to_dense()
    }

    pub fn diag(&self) -> Vec<f64> {
        self.mat.diag()
    }

    pub fn max_abs_diff(&self, other: &PrecisionEstimate) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_indexing_round_trips() {
        let p = 5;
        let mut m = SymMat::zeros(p);
        let mut v = 1.0;
        for i in 0..p {
            for j in i..p {
                m.set(i, j, v);
                v += 1.0;
            }
        }
        for i in 0..p {
            for j in 0..p {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        let dense = m.to_dense();
        for i in 0..p {
            for j in 0..p {
                assert_eq!(dense[i * p + j], m.get(i, j));
                assert_eq!(dense[i * p + j].to_bits(), dense[j * p + i].to_bits());
            }
        }
    }

    #[test]
    fn precision_estimate_rejects_nonpositive_diagonal() {
        let mut m = SymMat::identity(3);
        m.set(1, 1, 0.0);
        assert!(matches!(
            PrecisionEstimate::new(m),
            Err(Error::NonPositiveDiagonal { index: 1, .. })
        ));
    }

    #[test]
    fn mirrored_writes_stay_consistent() {
        let mut m = SymMat::zeros(4);
        m.set(2, 1, -3.5);
        assert_eq!(m.get(1, 2), -3.5);
        m.set(1, 2, 7.0);
        assert_eq!(m.get(2, 1), 7.0);
    }
}
