//! Small dense matrices over any [`Scalar`].

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn matmul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows);
        let mut out: Matrix<S> = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: &S) -> Matrix<S> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v.clone() * s.clone()).collect() }
    }

    pub fn add(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    /// Column sums of absolute values.
    pub fn column_abs_sums(&self) -> Vec<S> {
        (0..self.cols)
            .map(|j| (0..self.rows).fold(S::zero(), |acc, i| acc + self.get(i, j).abs()))
            .collect()
    }

    /// Induced 1-norm (maximal absolute column sum).
    pub fn norm1(&self) -> S {
        self.column_abs_sums().into_iter().fold(S::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| if i == j { self.get(i, j).is_one() } else { self.get(i, j).is_zero() })
            })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|v| v.to_f64())
    }

    /// Row-echelon reduction in place; returns pivot columns and the determinant sign/product.
    fn eliminate(&mut self) -> (Vec<usize>, S) {
        let mut det = S::one();
        let mut pivots = Vec::new();
        let mut r = 0;
        let tol = S::pivot_tolerance();
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            // partial pivoting by magnitude (exact: any nonzero works, the largest is fine)
            let mut best = None;
            let mut best_abs = tol.clone();
            for i in r..self.rows {
                let a = self.get(i, c).abs();
                if a > best_abs || (S::EXACT && best.is_none() && !a.is_zero()) {
                    best_abs = a;
                    best = Some(i);
                }
            }
            let Some(p) = best else {
                det = S::zero();
                continue;
            };
            if p != r {
                for j in 0..self.cols {
                    self.data.swap(p * self.cols + j, r * self.cols + j);
                }
                det = -det;
            }
            let piv = self.get(r, c).clone();
            det = det * piv.clone();
            for i in r + 1..self.rows {
                let f = self.get(i, c).clone() / piv.clone();
                if f.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = self.get(i, j).clone() - f.clone() * self.get(r, j).clone();
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        if pivots.len() < self.rows.min(self.cols) {
            det = S::zero();
        }
        (pivots, det)
    }

    pub fn determinant(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        if self.rows == 0 {
            return S::one();
        }
        let mut m = self.clone();
        let (pivots, det) = m.eliminate();
        if pivots.len() < self.rows {
            S::zero()
        } else {
            det
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.eliminate().0.len()
    }

    /// Reduced row-echelon form and pivot columns.
    pub fn rref(&self) -> (Matrix<S>, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        let tol = S::pivot_tolerance();
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let mut best = None;
            let mut best_abs = tol.clone();
            for i in r..m.rows {
                let a = m.get(i, c).abs();
                if a > best_abs || (S::EXACT && best.is_none() && !a.is_zero()) {
                    best_abs = a;
                    best = Some(i);
                }
            }
            let Some(p) = best else { continue };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let piv = m.get(r, c).clone();
            for j in 0..m.cols {
                let v = m.get(r, j).clone() / piv.clone();
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m.get(i, j).clone() - f.clone() * m.get(r, j).clone();
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Basis of the right null space, one vector per free column.
    pub fn kernel(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r.get(row, f).clone();
                }
                v
            })
            .collect()
    }

    /// Solves `self * x = b` for square invertible `self`.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let aug = Matrix::from_fn(n, n + 1, |i, j| if j < n { self.get(i, j).clone() } else { b[i].clone() });
        let (r, pivots) = aug.rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(k, &p)| p != k) {
            return None;
        }
        Some((0..n).map(|i| r.get(i, n).clone()).collect())
    }

    /// Some solution of a possibly rectangular system (free variables set to zero).
    pub fn solve_any(&self, b: &[S]) -> Option<Vec<S>> {
        let (m, n) = (self.rows, self.cols);
        let aug = Matrix::from_fn(m, n + 1, |i, j| if j < n { self.get(i, j).clone() } else { b[i].clone() });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&n) {
            return None;
        }
        let mut x = vec![S::zero(); n];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(row, n).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix<S>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let aug = Matrix::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Matrix::from_fn(n, n, |i, j| r.get(i, n + j).clone()))
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        self.matmul(rhs)
    }
}

impl Matrix<Rational> {
    /// Characteristic polynomial coefficients `c[0] + c[1] x + ... + x^n` (Faddeev–LeVerrier).
    pub fn characteristic_polynomial(&self) -> Vec<Rational> {
        let n = self.rows;
        let mut coeffs = vec![Rational::from_integer(0.into()); n + 1];
        coeffs[n] = Rational::from_integer(1.into());
        let mut m = Matrix::<Rational>::zeros(n, n);
        let id = Matrix::<Rational>::identity(n);
        for k in 1..=n {
            m = self.matmul(&m).add(&id.scale(&coeffs[n - k + 1]));
            let am = self.matmul(&m);
            let mut tr = Rational::from_integer(0.into());
            for i in 0..n {
                tr += am.get(i, i).clone();
            }
            coeffs[n - k] = -tr / Rational::from_integer((k as i64).into());
        }
        coeffs
    }
}

impl Matrix<f64> {
    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Spectral radius from the complex eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        let m = self.to_nalgebra();
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    #[test]
    fn exact_determinant_and_inverse() {
        let m = Matrix::from_rows(vec![vec![rat(1, 2), rat(0, 1)], vec![rat(1, 4), rat_int(1)]]);
        assert_eq!(m.determinant(), rat(1, 2));
        let inv = m.inverse().unwrap();
        assert!(m.matmul(&inv).is_identity());
        let sing = Matrix::from_rows(vec![vec![rat(2, 9), rat(1, 3)], vec![rat(2, 9), rat(1, 3)]]);
        assert_eq!(sing.determinant(), rat_int(0));
        assert_eq!(sing.rank(), 1);
        assert!(sing.inverse().is_none());
        let k = sing.kernel();
        assert_eq!(k.len(), 1);
        assert!(sing.mul_vec(&k[0]).iter().all(|v| *v == rat_int(0)));
    }

    #[test]
    fn char_poly_of_small_matrix() {
        // [[0,1],[1,0]] has x^2 - 1
        let m = Matrix::from_rows(vec![vec![rat_int(0), rat_int(1)], vec![rat_int(1), rat_int(0)]]);
        assert_eq!(m.characteristic_polynomial(), vec![rat_int(-1), rat_int(0), rat_int(1)]);
    }

    #[test]
    fn float_solve() {
        let m: Matrix<f64> = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = m.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!((m.determinant() - 5.0).abs() < 1e-12);
    }
}
