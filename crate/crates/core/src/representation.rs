//! Input problems, the `(n+k)`-dimensional embedding, Hessenberg reduction and
//! construction of the compressed `L (Q + T Z^H) R` representation.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::dense::{householder, qr_thin, reflect_left, reflect_right, Mat};
use crate::error::{Error, Result};
use crate::factors::{
    canonicalize_push_left, canonicalize_push_right, lmul_rows, KHessenbergFactor, LfrState, MiddleFactor, Orientation,
    RotationChain, Shape,
};
use crate::rotation::{make_rotation, Core};
use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

/// Structure of the unitary part.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitaryKind {
    Dense,
    Diagonal,
    Hessenberg,
}

/// `A = U + X Y^H` with `U` unitary `n x n` and `X`, `Y` of size `n x k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInput {
    pub u: Mat,
    pub x: Mat,
    pub y: Mat,
    pub kind: UnitaryKind,
}

/// Default tolerance on `||U^H U - I||_inf`.
pub const UNITARY_TOL: f64 = 1e-8;
/// Relative threshold below which a rank part counts as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

impl ProblemInput {
    pub fn new(u: Mat, x: Mat, y: Mat, kind: UnitaryKind) -> Result<Self> {
        let p = ProblemInput { u, x, y, kind };
        p.validate()?;
        Ok(p)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.u.rows()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.x.cols()
    }

    pub fn assemble(&self) -> Mat {
        &self.u + &(&self.x * &self.y.adjoint())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.u.rows();
        if self.u.cols() != n || self.x.rows() != n || self.y.rows() != n || self.x.cols() != self.y.cols() {
            return Err(Error::Dimension(format!(
                "U is {}x{}, X is {}x{}, Y is {}x{}",
                self.u.rows(),
                self.u.cols(),
                self.x.rows(),
                self.x.cols(),
                self.y.rows(),
                self.y.cols()
            )));
        }
        if n == 0 || self.x.cols() == 0 || self.x.cols() > n {
            return Err(Error::Dimension(format!("need 1 <= k <= n, got n = {n}, k = {}", self.x.cols())));
        }
        let defect = self.u.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(Error::NotUnitary(defect));
        }
        check_rank(&self.x, "X")?;
        check_rank(&self.y, "Y")?;
        Ok(())
    }
}

/// Ratio of smallest to largest diagonal modulus of the triangular QR factor.
fn rank_ratio(m: &Mat) -> f64 {
    let (_, r) = qr_thin(m);
    let d: Vec<f64> = (0..r.rows()).map(|i| r[(i, i)].norm()).collect();
    let mx = d.iter().cloned().fold(0.0, f64::max);
    let mn = d.iter().cloned().fold(f64::INFINITY, f64::min);
    if mx == 0.0 {
        0.0
    } else {
        mn / mx
    }
}

fn check_rank(m: &Mat, which: &'static str) -> Result<()> {
    let ratio = rank_ratio(m);
    if !(ratio > RANK_TOL) {
        return Err(Error::RankDeficient { which, ratio });
    }
    Ok(())
}

/// `(X R^H, Q)` where `Y = Q R` with `R` having a positive real diagonal.
pub fn normalize_rank_part(x: &Mat, y: &Mat) -> Result<(Mat, Mat)> {
    check_rank(y, "Y")?;
    let (mut q, mut r) = qr_thin(y);
    for j in 0..r.rows() {
        let d = r[(j, j)];
        let ph = if d.norm() == 0.0 { C64::one() } else { d / d.norm() };
        for i in 0..q.rows() {
            q[(i, j)] *= ph;
        }
        for c in 0..r.cols() {
            r[(j, c)] *= ph.conj();
        }
    }
    Ok((x * &r.adjoint(), q))
}

/// `A_hat = U_hat + X_hat Y_hat^H` of size `N = n + k` whose last `k` rows vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedProblem {
    pub u_hat: Mat,
    pub x_hat: Mat,
    pub y_hat: Mat,
    pub n: usize,
    pub k: usize,
}

impl EmbeddedProblem {
    #[inline]
    pub fn size(&self) -> usize {
        self.n + self.k
    }

    pub fn assemble(&self) -> Mat {
        &self.u_hat + &(&self.x_hat * &self.y_hat.adjoint())
    }
}

pub fn embed(p: &ProblemInput) -> Result<EmbeddedProblem> {
    let (n, k) = (p.n(), p.k());
    let (xt, yt) = normalize_rank_part(&p.x, &p.y)?;
    let b = &p.u * &yt;
    let size = n + k;
    let mut u_hat = Mat::zeros(size, size);
    u_hat.set_submatrix(0, 0, &(&p.u - &(&b * &yt.adjoint())));
    u_hat.set_submatrix(0, n, &b);
    u_hat.set_submatrix(n, 0, &yt.adjoint());
    let mut x_hat = Mat::zeros(size, k);
    x_hat.set_submatrix(0, 0, &(&xt + &b));
    for j in 0..k {
        x_hat[(n + j, j)] = -C64::one();
    }
    let mut y_hat = Mat::zeros(size, k);
    y_hat.set_submatrix(0, 0, &yt);
    Ok(EmbeddedProblem { u_hat, x_hat, y_hat, n, k })
}

/// Reduces the leading `n x n` block of `U + X Y^H` (with `U` possibly larger)
/// to upper Hessenberg form by Householder similarities applied to `U`, `X`
/// and `Y` together. Returns the accumulated unitary `H` (`n x n`) with
/// `A_new = H A H^H`.
fn reduce_block(u: &mut Mat, x: &mut Mat, y: &mut Mat, n: usize) -> Mat {
    let mut h = Mat::identity(n);
    let k = x.cols();
    if n < 3 {
        return h;
    }
    for j in 0..n - 2 {
        // column j of the current A, rows j+1..n
        let col: Vec<C64> = (j + 1..n)
            .map(|i| {
                let mut s = u[(i, j)];
                for c in 0..k {
                    s += x[(i, c)] * y[(j, c)].conj();
                }
                s
            })
            .collect();
        let Some((v, tau, _)) = householder(&col) else {
            continue;
        };
        reflect_left(u, &v, tau, j + 1, 0);
        reflect_right(u, &v, tau, j + 1);
        reflect_left(x, &v, tau, j + 1, 0);
        reflect_left(y, &v, tau, j + 1, 0);
        reflect_left(&mut h, &v, tau, j + 1, 0);
    }
    h
}

/// Hessenberg reduction of an embedded problem; only the leading `n x n` block
/// is touched. Returns the reduced problem and `H` with `A_new = H A H^H`.
pub fn hessenberg_reduce(e: &EmbeddedProblem) -> (EmbeddedProblem, Mat) {
    let mut out = e.clone();
    let h = reduce_block(&mut out.u_hat, &mut out.x_hat, &mut out.y_hat, e.n);
    (out, h)
}

/// Hessenberg reduction acting directly on `(U, X, Y)`.
pub fn hessenberg_reduce_input(p: &ProblemInput) -> (ProblemInput, Mat) {
    let mut out = p.clone();
    let h = reduce_block(&mut out.u, &mut out.x, &mut out.y, p.n());
    if out.kind == UnitaryKind::Diagonal && h != Mat::identity(p.n()) {
        out.kind = UnitaryKind::Dense;
    }
    (out, h)
}

/// Threshold on `|det T_k|` relative to `||X_hat||^k` below which the
/// embedding is considered corrupted.
const DET_TOL: f64 = 1e-300;

/// Builds `L (Q + T Z^H) R` from an embedded problem whose assembled matrix
/// is upper Hessenberg.
pub fn build_lfr(e: &EmbeddedProblem) -> Result<LfrState> {
    let (n, k) = (e.n, e.k);
    let size = n + k;
    if n < 1 {
        return Err(Error::Dimension(format!("n = {n}")));
    }

    // L^H X_hat = T by k sweeps; sweep j zeroes column j below row j. The
    // inverses in application order are L in product order.
    let mut xh = e.x_hat.clone();
    let mut lseq: Vec<(usize, Core)> = Vec::with_capacity(n * k);
    for j in 0..k {
        for p in (j + 1..=n + j).rev() {
            let (g, _) = make_rotation(xh[(p - 1, j)], xh[(p, j)]);
            lmul_rows(&mut xh, p - 1, g.core());
            lseq.push((p - 1, g.core().inverse()));
        }
    }
    let (lrots, _) = canonicalize_push_right(&lseq, size);
    let mut layers = Vec::with_capacity(k);
    for j in 0..k {
        let mut rots: Vec<_> = lrots[j * n..(j + 1) * n].to_vec();
        rots.reverse(); // stored by index
        layers.push(RotationChain::new(j, rots, Orientation::Ascending, size));
    }
    let l = KHessenbergFactor { layers, shape: Shape::Lower, size, k };

    // T and V from the canonical L
    let mut t = e.x_hat.clone();
    l.adjoint_mul_left(&mut t);
    let mut t_k = t.submatrix(0, k, 0, k);
    for i in 0..k {
        for j in 0..i {
            t_k[(i, j)] = C64::zero();
        }
    }
    let det: f64 = (0..k).map(|i| t_k[(i, i)].norm()).product();
    let xnorm = e.x_hat.norm_inf().max(1.0);
    if !(det > DET_TOL * xnorm.powi(k as i32)) || !det.is_finite() {
        return Err(Error::RankDeficient { which: "X_hat", ratio: det });
    }
    let mut v = e.u_hat.clone();
    l.adjoint_mul_left(&mut v);

    // V = Q R1: zero the (k+1)-th subdiagonal from the top
    let mut qseq: Vec<(usize, Core)> = Vec::with_capacity(n.saturating_sub(1));
    {
        let mut w = v.clone();
        for j in 0..n.saturating_sub(1) {
            let (g, _) = make_rotation(w[(j + k, j)], w[(j + k + 1, j)]);
            lmul_rows(&mut w, j + k, g.core());
            qseq.push((j + k, g.core().inverse()));
        }
    }
    let (qrots, _) = canonicalize_push_right(&qseq, size);
    let qhat = RotationChain::new(k, qrots, Orientation::Descending, size);
    let mut r1 = v;
    qhat.adjoint_mul_left(&mut r1);

    // R1 = D C_0 ... C_{k-1}: peel the outermost subdiagonals
    let mut rseq: Vec<(usize, Core)> = Vec::new();
    for m in 0..k {
        let d = k - m;
        for j in 0..size - d {
            let (g, _) = make_rotation(r1[(j + d - 1, j)], r1[(j + d, j)]);
            lmul_rows(&mut r1, j + d - 1, g.core());
            rseq.push((j + d - 1, g.core().inverse()));
        }
    }
    let trailing: Vec<C64> = (0..size)
        .map(|i| {
            let z = r1[(i, i)];
            z / z.norm()
        })
        .collect();
    let (dhat, rrots) = canonicalize_push_left(&rseq, trailing);
    let mut rlayers = Vec::with_capacity(k);
    let mut off = 0;
    for m in 0..k {
        let first = k - 1 - m;
        let len = size - 1 - first;
        rlayers.push(RotationChain::new(first, rrots[off..off + len].to_vec(), Orientation::Descending, size));
        off += len;
    }
    let r = KHessenbergFactor { layers: rlayers, shape: Shape::Upper, size, k };

    // Z = C Y_hat
    let mut z = e.y_hat.clone();
    r.mul_left(&mut z);

    let k_const = 1.0 / det;
    Ok(LfrState { l, f: MiddleFactor { qhat, dhat, t_k, z }, r, n, k, lo: 0, hi: n, k_const, z_explicit: true })
}

/// Full preprocessing: embed, reduce to Hessenberg form and factor.
/// Returns the state and `H` (`n x n`) with `A_hess = H A H^H`.
pub fn prepare(p: &ProblemInput) -> Result<(LfrState, Mat)> {
    let e = embed(p)?;
    let (e, h) = hessenberg_reduce(&e);
    Ok((build_lfr(&e)?, h))
}
