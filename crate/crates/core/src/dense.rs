//! Small dense complex matrices.
//!
//! Row-major storage. Only what the solver, its builders and the reference
//! oracle need; nothing here is tuned for speed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::Zero;

use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![C64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row-major data; panics if the length is wrong.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "from_rows: wrong data length");
        Mat { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Mat::from_rows(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable access to two distinct rows.
    pub fn two_rows_mut(&mut self, i: usize, j: usize) -> (&mut [C64], &mut [C64]) {
        assert!(i < j);
        let c = self.cols;
        let (a, b) = self.data.split_at_mut(j * c);
        (&mut a[i * c..(i + 1) * c], &mut b[..c])
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Mat {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||A^H A - I||_inf` for a square matrix.
    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &Mat::identity(self.cols)).norm_inf()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Largest modulus strictly below the `band`-th subdiagonal.
    pub fn below_band(&self, band: usize) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i > j + band {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[(x, k)].norm().total_cmp(&a[(y, k)].norm())).unwrap();
            if a[(p, k)].is_zero() {
                return C64::zero();
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                det = -det;
            }
            let piv = a[(k, k)];
            det *= piv;
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                if f.is_zero() {
                    continue;
                }
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        det
    }

    /// Solves `self * X = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` for an exactly singular matrix.
    pub fn solve(&self, b: &Mat) -> Option<Mat> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
            if a[(p, k)].is_zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                for j in 0..x.cols {
                    let t = x[(k, j)];
                    x[(k, j)] = x[(p, j)];
                    x[(p, j)] = t;
                }
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
                for j in 0..x.cols {
                    let t = x[(k, j)];
                    x[(i, j)] -= f * t;
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..x.cols {
                let mut s = x[(k, j)];
                for l in k + 1..n {
                    s -= a[(k, l)] * x[(l, j)];
                }
                x[(k, j)] = s / a[(k, k)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat> {
        self.solve(&Mat::identity(self.rows))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, b: &Mat) -> Mat {
        assert_eq!(self.cols, b.rows, "matrix product dimension mismatch");
        let mut c = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                let brow = b.row(l);
                let crow = c.row_mut(i);
                for (cj, &bj) in crow.iter_mut().zip(brow) {
                    *cj += a * bj;
                }
            }
        }
        c
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, b: &Mat) -> Mat {
        assert!(self.rows == b.rows && self.cols == b.cols);
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&b.data).map(|(x, y)| x + y).collect() }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, b: &Mat) -> Mat {
        assert!(self.rows == b.rows && self.cols == b.cols);
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&b.data).map(|(x, y)| x - y).collect() }
    }
}

/// Householder vector `v` (with `v[0] = 1`), scalar `tau` and real `beta` such
/// that `(I - tau v v^H) x = beta e_0`.
/// Returns `None` when `x[1..]` is exactly zero.
pub fn householder(x: &[C64]) -> Option<(Vec<C64>, C64, C64)> {
    let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
    if tail == 0.0 {
        return None;
    }
    let alpha = x[0];
    let xnorm = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scaled: f64 = x.iter().map(|z| (z / xnorm).norm_sqr()).sum::<f64>().sqrt() * xnorm;
    let beta = if alpha.re >= 0.0 { -scaled } else { scaled };
    let tau = C64::new((beta - alpha.re) / beta, alpha.im / beta);
    let denom = alpha - beta;
    let mut v = Vec::with_capacity(x.len());
    v.push(C64::new(1.0, 0.0));
    for z in &x[1..] {
        v.push(z / denom);
    }
    Some((v, tau, C64::new(beta, 0.0)))
}

/// Applies `H = I - tau v v^H` from the left to rows `r0..r0+len(v)` of `a`,
/// restricted to columns `c0..`.
pub fn reflect_left(a: &mut Mat, v: &[C64], tau: C64, r0: usize, c0: usize) {
    for j in c0..a.cols() {
        let mut w = C64::zero();
        for (t, vt) in v.iter().enumerate() {
            w += vt.conj() * a[(r0 + t, j)];
        }
        w *= tau;
        for (t, vt) in v.iter().enumerate() {
            a[(r0 + t, j)] -= vt * w;
        }
    }
}

/// Multiplies columns `c0..c0+len(v)` of `a` from the right by `H^H`, where
/// `H = I - tau v v^H`; paired with `reflect_left` this is the similarity `H a H^H`.
pub fn reflect_right(a: &mut Mat, v: &[C64], tau: C64, c0: usize) {
    let tc = tau.conj();
    for i in 0..a.rows() {
        let mut w = C64::zero();
        for (t, vt) in v.iter().enumerate() {
            w += a[(i, c0 + t)] * vt;
        }
        w *= tc;
        for (t, vt) in v.iter().enumerate() {
            a[(i, c0 + t)] -= w * vt.conj();
        }
    }
}

/// Thin QR of a tall matrix by Householder reflections: returns `(Q, R)` with
/// `Q` of size `m x k` having orthonormal columns and `R` upper triangular `k x k`.
pub fn qr_thin(a: &Mat) -> (Mat, Mat) {
    let (m, k) = (a.rows(), a.cols());
    assert!(m >= k);
    let mut r = a.clone();
    let mut refl = Vec::with_capacity(k);
    for j in 0..k {
        let x: Vec<C64> = (j..m).map(|i| r[(i, j)]).collect();
        match householder(&x) {
            Some((v, tau, _)) => {
                reflect_left(&mut r, &v, tau, j, j);
                refl.push(Some((v, tau)));
            }
            None => refl.push(None),
        }
    }
    let mut q = Mat::zeros(m, k);
    for j in 0..k {
        q[(j, j)] = C64::new(1.0, 0.0);
    }
    // A = H_0^H ... H_{k-1}^H R
    for j in (0..k).rev() {
        if let Some((v, tau)) = &refl[j] {
            reflect_left(&mut q, v, tau.conj(), j, 0);
        }
    }
    let mut rk = r.submatrix(0, k, 0, k);
    for i in 0..k {
        for j in 0..i {
            rk[(i, j)] = C64::zero();
        }
    }
    (q, rk)
}
