//! Dense reference eigensolver and error metrics.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::dense::{householder, reflect_left, reflect_right, Mat};
use crate::error::{Error, Result};
use crate::rotation::make_rotation;
use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

/// Reduces a square matrix to upper Hessenberg form in place.
pub fn hessenberg(a: &mut Mat) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        let col: Vec<C64> = (j + 1..n).map(|i| a[(i, j)]).collect();
        if let Some((v, tau, beta)) = householder(&col) {
            reflect_left(a, &v, tau, j + 1, j);
            reflect_right(a, &v, tau, j + 1);
            a[(j + 1, j)] = beta;
            for i in j + 2..n {
                a[(i, j)] = C64::zero();
            }
        }
    }
}

/// Eigenvalues of a dense complex matrix by Hessenberg reduction and
/// Wilkinson-shifted single-shift QR.
pub fn dense_eig(a: &Mat) -> Result<Vec<C64>> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::Dimension(alloc::format!(
            "dense_eig needs a square nonempty matrix, got {}x{}",
            n,
            a.cols()
        )));
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut eig = vec![C64::zero(); n];
    let eps = f64::EPSILON;
    let budget = 30 * n;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { h.max_abs() } else { s };
            if h[(l, l - 1)].norm() <= eps * s {
                h[(l, l - 1)] = C64::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= budget {
            return Err(Error::NoConvergence { lo: l, hi: hi + 1, sweeps: total, converged: Vec::new() });
        }
        total += 1;
        its += 1;
        let mu = if its % 11 == 0 {
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.25 * h[(hi, hi - 1)].norm())
        } else {
            wilkinson_2x2(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        // implicit single-shift sweep on rows/cols l..=hi
        let (mut x, mut y) = (h[(l, l)] - mu, h[(l + 1, l)]);
        for j in l..hi {
            let (g, _) = make_rotation(x, y);
            let gc = g.core();
            let c0 = if j > l { j - 1 } else { l };
            for c in c0..=hi {
                let (u, v) = gc.apply(h[(j, c)], h[(j + 1, c)]);
                h[(j, c)] = u;
                h[(j + 1, c)] = v;
            }
            let gi = gc.inverse();
            for r in l..=(j + 2).min(hi) {
                let (u, v) = gi.apply_right(h[(r, j)], h[(r, j + 1)]);
                h[(r, j)] = u;
                h[(r, j + 1)] = v;
            }
            if j > l {
                h[(j + 1, j - 1)] = C64::zero();
            }
            if j + 2 <= hi {
                x = h[(j + 1, j)];
                y = h[(j + 2, j)];
            }
        }
    }
    Ok(eig)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`; ties go to the larger
/// imaginary part, then the larger real part.
pub fn wilkinson_2x2(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let (l1, l2) = eig_2x2(a, b, c, d);
    let (d1, d2) = ((l1 - d).norm(), (l2 - d).norm());
    let tol = 4.0 * f64::EPSILON * (l1.norm() + l2.norm());
    if (d1 - d2).abs() <= tol {
        if (l1.im - l2.im).abs() > tol {
            return if l1.im > l2.im { l1 } else { l2 };
        }
        return if l1.re >= l2.re { l1 } else { l2 };
    }
    if d1 < d2 {
        l1
    } else {
        l2
    }
}

/// Both eigenvalues of a 2x2 matrix.
pub fn eig_2x2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m = (a + d) * 0.5;
    let l1 = m + disc;
    let l2 = m - disc;
    // recover the smaller one from the determinant when cancellation hits
    let det = a * d - b * c;
    if l1.norm() >= l2.norm() && !l1.is_zero() {
        (l1, det / l1)
    } else if !l2.is_zero() {
        (det / l2, l2)
    } else {
        (l1, l2)
    }
}

/// Minimal-cost pairing of `computed` with `reference` on `|a - b|`: exact
/// (Hungarian) for up to 64 values, greedy beyond. Returns the mean relative
/// error `|l - l_hat| / max(1, |l|)` and `pairing[i]` = reference index paired
/// with `computed[i]`.
pub fn match_spectra(computed: &[C64], reference: &[C64]) -> Result<(f64, Vec<usize>)> {
    let n = computed.len();
    if reference.len() != n {
        return Err(Error::Dimension(alloc::format!("{} computed vs {} reference values", n, reference.len())));
    }
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let pairing = if n <= 64 { hungarian(computed, reference) } else { greedy(computed, reference) };
    let err = pairing
        .iter()
        .enumerate()
        .map(|(i, &j)| (computed[i] - reference[j]).norm() / reference[j].norm().max(1.0))
        .sum::<f64>()
        / n as f64;
    Ok((err, pairing))
}

fn greedy(a: &[C64], b: &[C64]) -> Vec<usize> {
    let n = a.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut left = n;
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !used[j] {
            out[i] = j;
            used[j] = true;
            left -= 1;
            if left == 0 {
                break;
            }
        }
    }
    out
}

/// Shortest augmenting path assignment, `O(n^3)`.
fn hungarian(a: &[C64], b: &[C64]) -> Vec<usize> {
    let n = a.len();
    let cost = |i: usize, j: usize| (a[i] - b[j]).norm();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[p[j] - 1] = j - 1;
    }
    out
}

/// `||P1^H A P1 - A_final||_inf / ||A||_inf`.
pub fn backward_error_matrix(a: &Mat, p1: &Mat, a_final: &Mat) -> f64 {
    let sim = &(&p1.adjoint() * a) * p1;
    (&sim - a_final).norm_inf() / a.norm_inf()
}

/// Double-word real number `hi + lo`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dw {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const C: f64 = 134217729.0; // 2^27 + 1
    let t = C * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dw {
    pub fn from_f64(x: f64) -> Dw {
        Dw { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dw) -> Dw {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dw { hi, lo }
    }

    pub fn neg(self) -> Dw {
        Dw { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul_f64(self, b: f64) -> Dw {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = two_sum(p, e);
        Dw { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Double-word complex number.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DwC {
    pub re: Dw,
    pub im: Dw,
}

impl DwC {
    pub fn from_c64(z: C64) -> DwC {
        DwC { re: Dw::from_f64(z.re), im: Dw::from_f64(z.im) }
    }

    pub fn add(self, o: DwC) -> DwC {
        DwC { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn sub(self, o: DwC) -> DwC {
        DwC { re: self.re.add(o.re.neg()), im: self.im.add(o.im.neg()) }
    }

    pub fn mul_c64(self, z: C64) -> DwC {
        DwC {
            re: self.re.mul_f64(z.re).add(self.im.mul_f64(z.im).neg()),
            im: self.re.mul_f64(z.im).add(self.im.mul_f64(z.re)),
        }
    }

    pub fn to_c64(self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn norm(self) -> f64 {
        self.to_c64().norm()
    }
}

/// Coefficients of `prod (x - r_i)`, highest degree first, in double-word
/// arithmetic.
pub fn expand_roots_dw(roots: &[C64]) -> Vec<DwC> {
    let mut c = vec![DwC::default(); roots.len() + 1];
    c[0] = DwC::from_c64(C64::new(1.0, 0.0));
    for (m, &r) in roots.iter().enumerate() {
        // multiply the degree-m polynomial c[0..=m] by (x - r)
        for i in (1..=m + 1).rev() {
            c[i] = c[i].sub(c[i - 1].mul_c64(r));
        }
    }
    c
}

/// [`expand_roots_dw`] rounded to `f64`.
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    expand_roots_dw(roots).into_iter().map(DwC::to_c64).collect()
}

/// `max_i |p_i - p_hat_i| / max_i |p_i|` where `p` is monic (highest first)
/// and `p_hat` has exactly the given roots.
pub fn backward_error_poly(p: &[C64], roots: &[C64]) -> f64 {
    assert!(!p.is_empty());
    let lead = p[0];
    let monic: Vec<C64> = p.iter().map(|c| c / lead).collect();
    let phat = expand_roots_dw(roots);
    let scale = monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    monic.iter().zip(&phat).map(|(a, b)| DwC::from_c64(*a).sub(*b).norm()).fold(0.0, f64::max) / scale
}
