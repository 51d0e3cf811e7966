//! Rotation-chain containers for the three factors of `A_hat = L (Q + T Z^H) R`.
//!
//! Layout (`N = n + k`, indices are active rows):
//!
//! * `L = A_0 A_1 ... A_{k-1}`, each `A_j` ascending (product order runs from
//!   high to low index) over indices `j .. j+n-1`.
//! * `Q = chain(q_k, ..., q_{N-2}) * diag(dhat)`, the chain descending.
//! * `R = C_0 C_1 ... C_{k-1}`, each `C_m` descending over `k-1-m .. N-2`.
//!
//! All stored rotations are canonical.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::rotation::{turnover_hat, turnover_v, Core, Rotation};
use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Indices decrease left to right in the product.
    Ascending,
    /// Indices increase left to right in the product.
    Descending,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `k`-lower Hessenberg, built from ascending layers.
    Lower,
    /// `k`-upper Hessenberg, built from descending layers.
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// The rotation enters on the left of the factor and leaves on the right.
    LeftToRight,
    /// The rotation enters on the right of the factor and leaves on the left.
    RightToLeft,
}

/// Rotations at consecutive indices `first .. first + len`, stored by index.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationChain {
    pub first: usize,
    pub rots: Vec<Rotation>,
    pub orientation: Orientation,
    pub size: usize,
}

impl RotationChain {
    pub fn new(first: usize, rots: Vec<Rotation>, orientation: Orientation, size: usize) -> Self {
        debug_assert!(rots.iter().enumerate().all(|(t, g)| g.i == first + t));
        debug_assert!(rots.is_empty() || first + rots.len() < size);
        RotationChain { first, rots, orientation, size }
    }

    pub fn identity(first: usize, len: usize, orientation: Orientation, size: usize) -> Self {
        let rots = (0..len).map(|t| Rotation::identity(first + t)).collect();
        RotationChain::new(first, rots, orientation, size)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rots.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rots.is_empty()
    }

    /// One past the last covered index.
    #[inline]
    pub fn end(&self) -> usize {
        self.first + self.rots.len()
    }

    #[inline]
    pub fn covers(&self, i: usize) -> bool {
        i >= self.first && i < self.end()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &Rotation {
        &self.rots[i - self.first]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize) -> &mut Rotation {
        &mut self.rots[i - self.first]
    }

    /// Rotations in product order, leftmost first.
    pub fn product_order(&self) -> impl DoubleEndedIterator<Item = &Rotation> + '_ {
        let asc = self.orientation == Orientation::Ascending;
        let fwd = (!asc).then(|| self.rots.iter());
        let rev = asc.then(|| self.rots.iter().rev());
        fwd.into_iter().flatten().chain(rev.into_iter().flatten())
    }

    pub fn materialize(&self) -> Mat {
        let mut m = Mat::identity(self.size);
        self.mul_right(&mut m);
        m
    }

    /// `m <- m * chain`.
    pub fn mul_right(&self, m: &mut Mat) {
        for g in self.product_order() {
            rmul_cols(m, g.i, g.core());
        }
    }

    /// `m <- chain * m`.
    pub fn mul_left(&self, m: &mut Mat) {
        for g in self.product_order().rev() {
            lmul_rows(m, g.i, g.core());
        }
    }

    /// `m <- chain^H * m`.
    pub fn adjoint_mul_left(&self, m: &mut Mat) {
        for g in self.product_order() {
            lmul_rows(m, g.i, g.core().inverse());
        }
    }

    /// Row vector `v <- v * chain`.
    pub fn row_times(&self, v: &mut [C64]) {
        for g in self.product_order() {
            let (x, y) = g.core().apply_right(v[g.i], v[g.i + 1]);
            v[g.i] = x;
            v[g.i + 1] = y;
        }
    }

    /// Column vector `w <- chain * w`.
    pub fn times_col(&self, w: &mut [C64]) {
        for g in self.product_order().rev() {
            let (x, y) = g.core().apply(w[g.i], w[g.i + 1]);
            w[g.i] = x;
            w[g.i + 1] = y;
        }
    }

    /// Moves a core through the chain by one turnover with the two stored
    /// rotations it overlaps; returns the emergent core and its index.
    pub fn transport(&mut self, k: Core, p: usize, dir: Direction) -> (Core, usize) {
        use Direction::*;
        use Orientation::*;
        match (self.orientation, dir) {
            (Ascending, LeftToRight) => {
                // k_p g_{p+1} g_p = h1(p+1) h2(p) h3(p+1)
                self.check(p, p + 1);
                let (h1, h2, h3) = turnover_v(k, self.get(p + 1).core(), self.get(p).core());
                *self.get_mut(p + 1) = h1.project(p + 1);
                *self.get_mut(p) = h2.project(p);
                (h3, p + 1)
            }
            (Ascending, RightToLeft) => {
                // g_p g_{p-1} k_p = h1(p-1) h2(p) h3(p-1)
                self.check(p - 1, p);
                let (h1, h2, h3) = turnover_hat(self.get(p).core(), self.get(p - 1).core(), k);
                *self.get_mut(p) = h2.project(p);
                *self.get_mut(p - 1) = h3.project(p - 1);
                (h1, p - 1)
            }
            (Descending, RightToLeft) => {
                // g_p g_{p+1} k_p = h1(p+1) h2(p) h3(p+1)
                self.check(p, p + 1);
                let (h1, h2, h3) = turnover_v(self.get(p).core(), self.get(p + 1).core(), k);
                *self.get_mut(p) = h2.project(p);
                *self.get_mut(p + 1) = h3.project(p + 1);
                (h1, p + 1)
            }
            (Descending, LeftToRight) => {
                // k_p g_{p-1} g_p = h1(p-1) h2(p) h3(p-1)
                self.check(p - 1, p);
                let (h1, h2, h3) = turnover_hat(k, self.get(p - 1).core(), self.get(p).core());
                *self.get_mut(p - 1) = h1.project(p - 1);
                *self.get_mut(p) = h2.project(p);
                (h3, p - 1)
            }
        }
    }

    fn check(&self, a: usize, b: usize) {
        assert!(
            self.covers(a) && self.covers(b),
            "transport: indices {a},{b} outside chain {}..{}",
            self.first,
            self.end()
        );
    }
}

/// Unitary `k`-Hessenberg matrix as a product of `k` layers.
#[derive(Clone, Debug, PartialEq)]
pub struct KHessenbergFactor {
    pub layers: Vec<RotationChain>,
    pub shape: Shape,
    pub size: usize,
    pub k: usize,
}

impl KHessenbergFactor {
    pub fn materialize(&self) -> Mat {
        let mut m = Mat::identity(self.size);
        for layer in &self.layers {
            layer.mul_right(&mut m);
        }
        m
    }

    /// `m <- factor^H * m`.
    pub fn adjoint_mul_left(&self, m: &mut Mat) {
        for layer in &self.layers {
            layer.adjoint_mul_left(m);
        }
    }

    /// `m <- factor * m`.
    pub fn mul_left(&self, m: &mut Mat) {
        for layer in self.layers.iter().rev() {
            layer.mul_left(m);
        }
    }

    /// Row `r` of the materialized factor, `O(size * k)`.
    pub fn row(&self, r: usize) -> Vec<C64> {
        let mut v = vec![C64::zero(); self.size];
        v[r] = C64::one();
        for layer in &self.layers {
            layer.row_times(&mut v);
        }
        v
    }

    /// Column `c` of the materialized factor, `O(size * k)`.
    pub fn col(&self, c: usize) -> Vec<C64> {
        let mut w = vec![C64::zero(); self.size];
        w[c] = C64::one();
        for layer in self.layers.iter().rev() {
            layer.times_col(&mut w);
        }
        w
    }

    /// Passes a core at index `i` through all layers with `k` turnovers.
    ///
    /// For `LeftToRight`, `g_in * F_old = F_new * g_out`; for `RightToLeft`,
    /// `F_old * g_in = g_out * F_new`. The emergent index differs from `i` by `k`.
    pub fn pass_through(&mut self, g: Core, i: usize, dir: Direction) -> (Core, usize) {
        let (mut g, mut p) = (g, i);
        let k = self.layers.len();
        let idx: Vec<usize> = match dir {
            Direction::LeftToRight => (0..k).collect(),
            Direction::RightToLeft => (0..k).rev().collect(),
        };
        for j in idx {
            let (h, q) = self.layers[j].transport(g, p, dir);
            g = h;
            p = q;
        }
        (g, p)
    }

    /// Modulus of the outermost entry: `|l_{i,i+k}|` for a lower factor,
    /// `|r_{i+k,i}|` for an upper one, as a product of layer sines.
    pub fn outermost(&self, i: usize) -> f64 {
        let k = self.layers.len();
        match self.shape {
            Shape::Lower => (0..k).map(|j| self.layers[j].get(i + j).s).product(),
            Shape::Upper => (0..k).map(|m| self.layers[k - 1 - m].get(i + m).s).product(),
        }
    }
}

/// `F = Q + T Z^H` with `Q = blockdiag(I_k, Q_hat) diag(dhat)` and `T = [T_k; 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MiddleFactor {
    pub qhat: RotationChain,
    pub dhat: Vec<C64>,
    pub t_k: Mat,
    pub z: Mat,
}

impl MiddleFactor {
    pub fn q_materialize(&self) -> Mat {
        let mut q = self.qhat.materialize();
        let size = q.rows();
        for i in 0..size {
            for j in 0..size {
                q[(i, j)] *= self.dhat[j];
            }
        }
        q
    }

    pub fn t_full(&self) -> Mat {
        let k = self.t_k.rows();
        let mut t = Mat::zeros(self.dhat.len(), k);
        t.set_submatrix(0, 0, &self.t_k);
        t
    }

    pub fn materialize(&self) -> Mat {
        &self.q_materialize() + &(&self.t_full() * &self.z.adjoint())
    }

    /// Row vector `v <- v * Q` (length `N`).
    pub fn row_times_q(&self, v: &mut [C64]) {
        self.qhat.row_times(v);
        for (x, d) in v.iter_mut().zip(&self.dhat) {
            *x *= d;
        }
    }

    /// Column vector `w <- Q * w`.
    pub fn q_times_col(&self, w: &mut [C64]) {
        for (x, d) in w.iter_mut().zip(&self.dhat) {
            *x *= d;
        }
        self.qhat.times_col(w);
    }

    /// Multiplies `phase` into position `pos` of the diagonal after moving it
    /// right through the chain until it meets an identity rotation or the end.
    pub fn push_phase(&mut self, mut pos: usize, phase: C64) {
        while self.qhat.covers(pos) && !self.qhat.get(pos).is_identity() {
            self.qhat.get_mut(pos).c *= phase;
            pos += 1;
        }
        self.dhat[pos] *= phase;
    }

    /// Moves `diag(dhat)` through a core at index `p` sitting on its right:
    /// `diag(dhat) K = K' diag(dhat')`.
    pub fn pass_diag(&mut self, k: Core, p: usize) -> Core {
        let out = k.pass_diag_from_left(self.dhat[p], self.dhat[p + 1]);
        self.dhat.swap(p, p + 1);
        out
    }
}

/// The full compressed representation.
#[derive(Clone, Debug, PartialEq)]
pub struct LfrState {
    pub l: KHessenbergFactor,
    pub f: MiddleFactor,
    pub r: KHessenbergFactor,
    pub n: usize,
    pub k: usize,
    /// Active window `[lo, hi)` on the leading `n x n` block.
    pub lo: usize,
    pub hi: usize,
    /// `K = 1 / |det T_k|`.
    pub k_const: f64,
    /// When false, the stored `Z` is stale and is recovered from `L` and `Q`.
    pub z_explicit: bool,
}

impl LfrState {
    #[inline]
    pub fn size(&self) -> usize {
        self.n + self.k
    }

    pub fn materialize(&self) -> Mat {
        let mut f = if self.z_explicit {
            self.f.materialize()
        } else {
            let mut mf = self.f.clone();
            mf.z = recover_z(&self.l, &self.f, self.n);
            mf.materialize()
        };
        self.l.mul_left(&mut f);
        let mut a = f;
        for layer in &self.r.layers {
            layer.mul_right(&mut a);
        }
        a
    }

    /// `Z^H w` using the stored `Z` or, in implicit mode, `L(n:N, :) Q w`.
    fn z_adjoint_times(&self, w: &[C64]) -> Vec<C64> {
        let k = self.k;
        if self.z_explicit {
            (0..k)
                .map(|j| {
                    let mut s = C64::zero();
                    for (i, wi) in w.iter().enumerate() {
                        s += self.f.z[(i, j)].conj() * wi;
                    }
                    s
                })
                .collect()
        } else {
            let mut qw = w.to_vec();
            self.f.q_times_col(&mut qw);
            (0..k)
                .map(|j| {
                    let lr = self.l.row(self.n + j);
                    lr.iter().zip(&qw).map(|(a, b)| a * b).sum()
                })
                .collect()
        }
    }

    /// Dense sub-block `rows x cols` of the materialized matrix.
    ///
    /// Each requested row costs one row of `L` pushed through `Q` and each
    /// column one column of `R`, so the cost is `O((#rows + #cols) N k)`.
    pub fn window(&self, rows: core::ops::Range<usize>, cols: core::ops::Range<usize>) -> Result<Mat> {
        let size = self.size();
        for rg in [&rows, &cols] {
            if rg.start > rg.end || rg.end > size {
                return Err(Error::Range { lo: rg.start, hi: rg.end, size });
            }
        }
        let k = self.k;
        let row_parts: Vec<(Vec<C64>, Vec<C64>)> = rows
            .clone()
            .map(|r| {
                let u = self.l.row(r);
                let g: Vec<C64> = (0..k).map(|j| (0..=j).map(|i| u[i] * self.f.t_k[(i, j)]).sum()).collect();
                let mut y = u;
                self.f.qhat.row_times(&mut y);
                (y, g)
            })
            .collect();
        let col_parts: Vec<(Vec<C64>, Vec<C64>)> = cols
            .clone()
            .map(|c| {
                let w = self.r.col(c);
                let h = self.z_adjoint_times(&w);
                let x: Vec<C64> = w.iter().zip(&self.f.dhat).map(|(a, d)| a * d).collect();
                (x, h)
            })
            .collect();
        let mut out = Mat::zeros(rows.len(), cols.len());
        for (a, (y, g)) in row_parts.iter().enumerate() {
            for (b, (x, h)) in col_parts.iter().enumerate() {
                let mut s: C64 = y.iter().zip(x).map(|(p, q)| p * q).sum();
                s += g.iter().zip(h).map(|(p, q)| p * q).sum::<C64>();
                out[(a, b)] = s;
            }
        }
        Ok(out)
    }

    /// Single entry of the materialized matrix.
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.window(i..i + 1, j..j + 1).map(|m| m[(0, 0)]).unwrap_or_else(|e| panic!("{e}"))
    }

    /// `(prod_i |l_{i,i+k}|, prod_i |r_{i+k,i}|)` over `i = 0..n`.
    pub fn outermost_products(&self) -> (f64, f64) {
        let pl = (0..self.n).map(|i| self.l.outermost(i)).product();
        let pr = (0..self.n).map(|i| self.r.outermost(i)).product();
        (pl, pr)
    }

    /// Subdiagonal entry `a_{i+1,i}` of the leading block from the three
    /// outermost entries `q_{i+k+1,i+k} r_{i+k,i} / conj(l_{i+1,i+k+1})`.
    ///
    /// Unlike [`LfrState::window`], which sums `O(1)` products, this keeps full
    /// relative accuracy when the entry is tiny.
    pub fn subdiagonal(&self, i: usize) -> C64 {
        let k = self.k;
        let q = -self.f.qhat.get(i + k).s * self.f.dhat[i + k];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        q * (sign * self.r.outermost(i) / self.l.outermost(i + 1))
    }

    /// Sine of the middle-factor rotation coupling rows `i` and `i+1` of the
    /// leading block, i.e. the one at active index `i + k`.
    #[inline]
    pub fn coupling(&self, i: usize) -> &Rotation {
        self.f.qhat.get(i + self.k)
    }
}

/// `Z` from `Z^H = L(n:N, :) Q`.
pub fn recover_z(l: &KHessenbergFactor, f: &MiddleFactor, n: usize) -> Mat {
    let size = l.size;
    let k = size - n;
    let mut z = Mat::zeros(size, k);
    for j in 0..k {
        let mut v = l.row(n + j);
        f.row_times_q(&mut v);
        for i in 0..size {
            z[(i, j)] = v[i].conj();
        }
    }
    z
}

/// Rewrites a product of cores (given in product order) as canonical
/// rotations followed by a unitary diagonal.
pub fn canonicalize_push_right(seq: &[(usize, Core)], size: usize) -> (Vec<Rotation>, Vec<C64>) {
    let mut d = vec![C64::one(); size];
    let mut out = Vec::with_capacity(seq.len());
    for &(i, k) in seq {
        let k = k.pass_diag_from_left(d[i], d[i + 1]);
        d.swap(i, i + 1);
        let (g, ph) = k.split_right(i);
        d[i] *= ph.d1;
        d[i + 1] *= ph.d2;
        out.push(g);
    }
    (out, d)
}

/// Rewrites `cores * diag(trailing)` as a unitary diagonal followed by
/// canonical rotations (same index sequence).
pub fn canonicalize_push_left(seq: &[(usize, Core)], trailing: Vec<C64>) -> (Vec<C64>, Vec<Rotation>) {
    let mut d = trailing;
    let mut out = Vec::with_capacity(seq.len());
    for &(i, k) in seq.iter().rev() {
        let k = k.pass_diag_from_right(d[i], d[i + 1]);
        d.swap(i, i + 1);
        let (ph, g) = k.split_left(i);
        d[i] *= ph.d1;
        d[i + 1] *= ph.d2;
        out.push(g);
    }
    out.reverse();
    (d, out)
}

#[inline]
pub(crate) fn lmul_rows(m: &mut Mat, i: usize, k: Core) {
    let (x, y) = m.two_rows_mut(i, i + 1);
    k.lmul(x, y);
}

pub(crate) fn rmul_cols(m: &mut Mat, i: usize, k: Core) {
    for r in 0..m.rows() {
        let (x, y) = k.apply_right(m[(r, i)], m[(r, i + 1)]);
        m[(r, i)] = x;
        m[(r, i + 1)] = y;
    }
}
