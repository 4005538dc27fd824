//! Small dense complex linear algebra used by the capacity objective.
//!
//! Matrices here are at most a few dozen rows, evaluated millions of times
//! inside selection loops, so everything works on flat row-major buffers
//! without pulling in a general-purpose matrix library.

use num_complex::Complex64;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
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

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Copies the listed rows, in order, into a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Returned when a Cholesky pivot is not safely positive.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is not numerically positive definite (pivot {pivot} at row {row})")]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

/// In-place lower Cholesky factorization of an `n × n` Hermitian matrix.
///
/// The input is symmetrized as `(A + A^H) / 2` first. Pivots at or below
/// `rel_tol` times the largest diagonal entry are rejected. On success the
/// lower triangle of `a` holds `L` and the strict upper triangle is zeroed.
pub fn cholesky_in_place(a: &mut [Complex64], n: usize, rel_tol: f64) -> Result<(), NotPositiveDefinite> {
    debug_assert_eq!(a.len(), n * n);
    for i in 0..n {
        a[i * n + i] = Complex64::new(a[i * n + i].re, 0.0);
        for j in 0..i {
            let avg = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = avg;
            a[j * n + i] = Complex64::new(0.0, 0.0);
        }
    }
    let scale = (0..n).map(|i| a[i * n + i].re).fold(0.0_f64, f64::max);
    let floor = rel_tol * scale.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d -= a[j * n + k].norm_sqr();
        }
        if !(d > floor) {
            return Err(NotPositiveDefinite { row: j, pivot: d });
        }
        let ljj = d.sqrt();
        a[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k].conj();
            }
            a[i * n + j] = s / ljj;
        }
    }
    Ok(())
}

/// `log2 det(A)` for a Hermitian positive-definite `n × n` matrix.
pub fn hermitian_log2_det(a: &mut [Complex64], n: usize) -> Result<f64, NotPositiveDefinite> {
    cholesky_in_place(a, n, 1e-14)?;
    Ok((0..n).map(|i| 2.0 * a[i * n + i].re.log2()).sum())
}

/// Diagonal of `A^{-1}` for a Hermitian positive-definite matrix.
///
/// Uses `diag(A^{-1})_r = Σ_k |(L^{-1})_{kr}|²` with `A = L L^H`.
pub fn hermitian_inverse_diagonal(
    a: &mut [Complex64],
    n: usize,
    rel_tol: f64,
) -> Result<Vec<f64>, NotPositiveDefinite> {
    cholesky_in_place(a, n, rel_tol)?;
    let mut diag = vec![0.0; n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    // Column r of L^{-1} by forward substitution on e_r.
    for r in 0..n {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for i in r..n {
            let mut s = if i == r {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in r..i {
                s -= a[i * n + k] * col[k];
            }
            col[i] = s / a[i * n + i].re;
        }
        diag[r] = col[r..].iter().map(|z| z.norm_sqr()).sum();
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs_input() {
        let a = CMatrix::from_row_major(
            3,
            3,
            vec![
                c(4.0, 0.0),
                c(1.0, 1.0),
                c(0.0, -2.0),
                c(1.0, -1.0),
                c(5.0, 0.0),
                c(0.5, 0.0),
                c(0.0, 2.0),
                c(0.5, 0.0),
                c(6.0, 0.0),
            ],
        );
        let mut l = a.as_slice().to_vec();
        cholesky_in_place(&mut l, 3, 1e-14).unwrap();
        let l = CMatrix::from_row_major(3, 3, l);
        let back = l.mul(&l.conj_transpose());
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_singular() {
        let mut a = vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        assert!(cholesky_in_place(&mut a, 2, 1e-12).is_err());
    }

    #[test]
    fn inverse_diagonal_of_diagonal_matrix() {
        let mut a = vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(8.0, 0.0)];
        let d = hermitian_inverse_diagonal(&mut a, 2, 1e-12).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15);
        assert!((d[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn inverse_diagonal_matches_explicit_2x2() {
        // [[a, b], [b*, d]]^{-1} has diagonal (d, a) / (ad - |b|²).
        let (a0, b0, d0) = (3.0, c(1.0, -0.5), 2.0);
        let mut m = vec![c(a0, 0.0), b0, b0.conj(), c(d0, 0.0)];
        let det = a0 * d0 - b0.norm_sqr();
        let diag = hermitian_inverse_diagonal(&mut m, 2, 1e-12).unwrap();
        assert!((diag[0] - d0 / det).abs() < 1e-14);
        assert!((diag[1] - a0 / det).abs() < 1e-14);
    }
}
