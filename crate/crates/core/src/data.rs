//! Observation matrices, standardization, and the sample covariance.

use crate::error::{Error, Result};
use crate::mat::{CovMatrix, SymMat};

/// How the columns of a [`Dataset`] were rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    /// Mean zero, population (1/n) standard deviation one. With this
    /// convention the sample covariance `S = (1/n) Y'Y` has unit diagonal
    /// exactly.
    StdDev,
    /// Mean zero, median absolute deviation one (no consistency constant).
    Mad,
    /// Columns taken as-is.
    None,
}

/// An `n x p` observation matrix (rows = observations, columns =
/// variables), held column-major so per-variable inner products run over
/// contiguous memory. Standardization parameters are recorded so the
/// transform can be inverted.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Column-major values: entry `(k, i)` lives at `values[i * n + k]`.
    values: Vec<f64>,
    n: usize,
    p: usize,
    scale_mode: ScaleMode,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
}

impl Dataset {
    /// Wraps a row-major matrix without any rescaling.
    pub fn from_rows(rows: &[f64], n: usize, p: usize) -> Result<Self> {
        check_shape(rows, n, p)?;
        let mut values = vec![0.0; n * p];
        for k in 0..n {
            for i in 0..p {
                values[i * n + k] = rows[k * p + i];
            }
        }
        Ok(Dataset {
            values,
            n,
            p,
            scale_mode: ScaleMode::None,
            column_means: vec![0.0; p],
            column_scales: vec![1.0; p],
        })
    }

    /// Centers and rescales a row-major matrix per `mode`.
    ///
    /// `StdDev` divides by the population (1/n) standard deviation; `Mad`
    /// by `median(|x - median(x)|)`. Both center by the mean. Columns with
    /// zero dispersion are rejected.
    pub fn standardize(rows: &[f64], n: usize, p: usize, mode: ScaleMode) -> Result<Self> {
        check_shape(rows, n, p)?;
        if n < 2 {
            return Err(Error::InvalidInput(
                "standardization needs at least 2 observations".into(),
            ));
        }
        let mut ds = Dataset::from_rows(rows, n, p)?;
        if matches!(mode, ScaleMode::None) {
            return Ok(ds);
        }
        let mut means = vec![0.0; p];
        let mut scales = vec![1.0; p];
        for i in 0..p {
            let col = &mut ds.values[i * n..(i + 1) * n];
            let mean = col.iter().sum::<f64>() / n as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
            let scale = match mode {
                ScaleMode::StdDev => (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt(),
                ScaleMode::Mad => {
                    let mut abs: Vec<f64> = col.iter().map(|v| v.abs()).collect();
                    median_in_place(&mut abs)
                }
                ScaleMode::None => unreachable!(),
            };
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::DegenerateColumn(i));
            }
            for v in col.iter_mut() {
                *v /= scale;
            }
            means[i] = mean;
            scales[i] = scale;
        }
        ds.scale_mode = mode;
        ds.column_means = means;
        ds.column_scales = scales;
        Ok(ds)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn scale_mode(&self) -> ScaleMode {
        self.scale_mode
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    /// Column `i` as a contiguous slice of length `n`.
    #[inline]
    pub fn col(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.values[i * self.n + k]
    }

    /// Row-major copy (one row per observation).
    pub fn to_rows(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.p];
        for i in 0..self.p {
            for k in 0..self.n {
                out[k * self.p + i] = self.values[i * self.n + k];
            }
        }
        out
    }

    /// New dataset from a subset of observation indices, columns taken
    /// as-is (no re-standardization).
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("row subset is empty".into()));
        }
        let m = rows.len();
        let mut values = vec![0.0; m * self.p];
        for i in 0..self.p {
            let col = self.col(i);
            for (kk, &k) in rows.iter().enumerate() {
                if k >= self.n {
                    return Err(Error::InvalidInput(format!(
                        "row index {k} out of bounds for n = {}",
                        self.n
                    )));
                }
                values[i * m + kk] = col[k];
            }
        }
        Ok(Dataset {
            values,
            n: m,
            p: self.p,
            scale_mode: ScaleMode::None,
            column_means: vec![0.0; self.p],
            column_scales: vec![1.0; self.p],
        })
    }

    /// Permutes the variables: column `i` of the result is column
    /// `perm[i]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Dataset> {
        if perm.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "permutation length {} != p {}",
                perm.len(),
                self.p
            )));
        }
        let mut values = vec![0.0; self.n * self.p];
        for (i, &src) in perm.iter().enumerate() {
            values[i * self.n..(i + 1) * self.n].copy_from_slice(self.col(src));
        }
        Ok(Dataset {
            values,
            n: self.n,
            p: self.p,
            scale_mode: self.scale_mode,
            column_means: perm.iter().map(|&s| self.column_means[s]).collect(),
            column_scales: perm.iter().map(|&s| self.column_scales[s]).collect(),
        })
    }
}

fn check_shape(rows: &[f64], n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if rows.len() != n * p {
        return Err(Error::DimensionMismatch(format!(
            "buffer length {} != n*p = {}",
            rows.len(),
            n * p
        )));
    }
    if let Some(v) = rows.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite entry {v}")));
    }
    Ok(())
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Median of a sample (for MAD computations in tests and preprocessing).
pub fn median(v: &[f64]) -> f64 {
    let mut w = v.to_vec();
    median_in_place(&mut w)
}

/// Sample covariance `S = (1/n) Y'Y` of the dataset columns.
pub fn sample_covariance(data: &Dataset) -> CovMatrix {
    let p = data.p();
    let n = data.n();
    let inv_n = 1.0 / n as f64;
    let mut s = SymMat::zeros(p);
    for i in 0..p {
        let ci = data.col(i);
        for j in i..p {
            let cj = data.col(j);
            let dot: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            s.set(i, j, dot * inv_n);
        }
    }
    CovMatrix::new(s, n)
}

/// Soft-thresholding kernel `sign(x) (|x| - eta)+`. Exact ties at the
/// threshold map to zero.
#[inline]
pub fn soft_threshold(x: f64, eta: f64) -> f64 {
    debug_assert!(eta >= 0.0);
    if x > eta {
        x - eta
    } else if x < -eta {
        x + eta
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn standardize_std_dev_gives_unit_population_sd() {
        let rows = [1.0, 10.0, 2.0, 14.0, 3.0, 30.0, 4.0, 20.0];
        let ds = Dataset::standardize(&rows, 4, 2, ScaleMode::StdDev).unwrap();
        for i in 0..2 {
            let col = ds.col(i);
            let mean = col.iter().sum::<f64>() / 4.0;
            let var = col.iter().map(|v| v * v).sum::<f64>() / 4.0;
            assert!(close(mean, 0.0, 1e-12));
            assert!(close(var, 1.0, 1e-12));
        }
        let s = sample_covariance(&ds);
        assert!(close(s.get(0, 0), 1.0, 1e-10));
        assert!(close(s.get(1, 1), 1.0, 1e-10));
    }

    #[test]
    fn standardize_is_idempotent() {
        let rows = [0.3, -1.0, 2.0, 0.5, -0.7, 1.25, 0.0, 3.0, -2.0];
        let once = Dataset::standardize(&rows, 3, 3, ScaleMode::StdDev).unwrap();
        let twice = Dataset::standardize(&once.to_rows(), 3, 3, ScaleMode::StdDev).unwrap();
        for i in 0..3 {
            for (a, b) in once.col(i).iter().zip(twice.col(i)) {
                assert!(close(*a, *b, 1e-12));
            }
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let rows = [1.0, 5.0, 2.0, 5.0, 3.0, 5.0];
        match Dataset::standardize(&rows, 3, 2, ScaleMode::StdDev) {
            Err(Error::DegenerateColumn(1)) => {}
            other => panic!("expected DegenerateColumn(1), got {other:?}"),
        }
    }

    #[test]
    fn mad_mode_recenters_to_unit_mad() {
        let rows: Vec<f64> = (0..50)
            .flat_map(|k| {
                let x = (k as f64 * 0.37).sin() * 3.0 + 1.0;
                let y = (k as f64 * 0.11).cos() * 0.2 - 4.0;
                [x, y]
            })
            .collect();
        let ds = Dataset::standardize(&rows, 50, 2, ScaleMode::Mad).unwrap();
        for i in 0..2 {
            let col = ds.col(i);
            let abs: Vec<f64> = col.iter().map(|v| v.abs()).collect();
            assert!(close(median(&abs), 1.0, 1e-9));
        }
    }

    #[test]
    fn sample_covariance_matches_brute_force() {
        let rows = [1.0, 0.0, 0.0, 1.0];
        let ds = Dataset::from_rows(&rows, 2, 2).unwrap();
        let s = sample_covariance(&ds);
        assert_eq!(s.get(0, 0), 0.5);
        assert_eq!(s.get(1, 1), 0.5);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn soft_threshold_formula() {
        assert_eq!(soft_threshold(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0); // exact tie -> 0
    }
}
