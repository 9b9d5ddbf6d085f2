//! Dense complex matrices and the handful of Hermitian operations the
//! detector needs: conjugate transpose, Gram products, trace, and inversion
//! of Hermitian positive-definite matrices through a Cholesky factor.
//!
//! Everything here is small (M ≤ 8 rows, a few hundred columns), so the
//! layout is a flat row-major `Vec` and the algorithms are the textbook ones.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Antenna snapshots: one row per element, one column per time sample.
pub type SnapshotMatrix = ComplexMatrix;

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equal-length column vectors side by side.
    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} in a matrix with {rows} rows",
                bad.len()
            )));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Copies the contiguous column range `[start, end)`.
    pub fn column_range(&self, start: usize, end: usize) -> ComplexMatrix {
        assert!(start <= end && end <= self.cols, "column range out of bounds");
        let width = end - start;
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..end]);
        }
        Self {
            rows: self.rows,
            cols: width,
            data,
        }
    }

    /// Copies the listed columns, in the order given.
    pub fn select_columns(&self, indices: &[usize]) -> ComplexMatrix {
        Self::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])])
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> ComplexMatrix {
        self.map(|z| z * c)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self[(i, p)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rhs_row = rhs.row(p);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Conjugate transpose.
pub fn hermitian(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// `A·Aᴴ`. Only the upper triangle is accumulated; the lower one is
/// mirrored so the result is exactly Hermitian with a real diagonal.
pub fn gram(a: &ComplexMatrix) -> ComplexMatrix {
    let m = a.rows;
    let mut out = ComplexMatrix::zeros(m, m);
    for i in 0..m {
        let ri = a.row(i);
        out[(i, i)] = Complex64::new(ri.iter().map(|z| z.norm_sqr()).sum(), 0.0);
        for j in i + 1..m {
            let rj = a.row(j);
            let s: Complex64 = ri.iter().zip(rj).map(|(x, y)| x * y.conj()).sum();
            out[(i, j)] = s;
            out[(j, i)] = s.conj();
        }
    }
    out
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::NonSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    Ok((0..a.rows).map(|i| a[(i, i)]).sum())
}

/// Diagonal loading applied before Hermitian inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpdInverseOptions {
    /// Non-negative amount added to every diagonal entry.
    pub loading_epsilon: f64,
    /// When set, `loading_epsilon` is relative: the added amount is
    /// `loading_epsilon × mean(diag(R))`.
    #[serde(default)]
    pub relative_to_mean_diagonal: bool,
}

impl HpdInverseOptions {
    /// No loading at all.
    pub const fn exact() -> Self {
        Self {
            loading_epsilon: 0.0,
            relative_to_mean_diagonal: false,
        }
    }

    pub const fn absolute(loading_epsilon: f64) -> Self {
        Self {
            loading_epsilon,
            relative_to_mean_diagonal: false,
        }
    }

    pub const fn relative(factor: f64) -> Self {
        Self {
            loading_epsilon: factor,
            relative_to_mean_diagonal: true,
        }
    }

    fn loading_for(&self, r: &ComplexMatrix) -> f64 {
        if self.relative_to_mean_diagonal {
            let n = r.rows.max(1) as f64;
            let mean: f64 = (0..r.rows).map(|i| r[(i, i)].re).sum::<f64>() / n;
            self.loading_epsilon * mean
        } else {
            self.loading_epsilon
        }
    }
}

impl Default for HpdInverseOptions {
    fn default() -> Self {
        Self::exact()
    }
}

/// Lower-triangular `L` with `R = L·Lᴴ` and a positive real diagonal.
pub fn cholesky(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !r.is_square() {
        return Err(Error::NonSquare {
            rows: r.rows,
            cols: r.cols,
        });
    }
    let n = r.rows;
    let max_diag = (0..n).map(|i| r[(i, i)].re.abs()).fold(0.0, f64::max);
    // pivots at rounding level relative to the largest diagonal entry mean rank deficiency
    let floor = f64::EPSILON * n as f64 * max_diag;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = r[(j, j)].re;
        for p in 0..j {
            d -= l[(j, p)].norm_sqr();
        }
        if !d.is_finite() || d <= floor {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = r[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `(R + εI)⁻¹` for Hermitian positive-definite `R`.
///
/// Computes `L⁻¹` by forward substitution and returns `L⁻ᴴ·L⁻¹`, filling the
/// lower triangle from the upper so the result is exactly Hermitian.
pub fn hpd_inverse(r: &ComplexMatrix, opts: &HpdInverseOptions) -> Result<ComplexMatrix> {
    if !r.is_square() {
        return Err(Error::NonSquare {
            rows: r.rows,
            cols: r.cols,
        });
    }
    let n = r.rows;
    let eps = opts.loading_for(r);
    let loaded;
    let r = if eps != 0.0 {
        let mut m = r.clone();
        for i in 0..n {
            m[(i, i)] += eps;
        }
        loaded = m;
        &loaded
    } else {
        r
    };
    let l = cholesky(r)?;

    // forward substitution: L · X = I, X lower triangular
    let mut linv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        linv[(col, col)] = Complex64::new(1.0 / l[(col, col)].re, 0.0);
        for i in col + 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for p in col..i {
                s += l[(i, p)] * linv[(p, col)];
            }
            linv[(i, col)] = -s / l[(i, i)].re;
        }
    }

    // R⁻¹ = L⁻ᴴ L⁻¹ ; entry (i, j) = Σ_p conj(X[p][i]) X[p][j], p ≥ max(i, j)
    let mut inv = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = Complex64::new(0.0, 0.0);
            for p in j..n {
                s += linv[(p, i)].conj() * linv[(p, j)];
            }
            if i == j {
                inv[(i, i)] = Complex64::new(s.re, 0.0);
            } else {
                inv[(i, j)] = s;
                inv[(j, i)] = s.conj();
            }
        }
    }
    Ok(inv)
}
