//! Complex Givens rotations, fusion and turnover.
//!
//! Every rotation is a 2x2 special unitary matrix
//!
//! ```text
//! [  a      b   ]
//! [ -conj(b) conj(a) ]
//! ```
//!
//! acting on rows `i, i+1`. A [`Rotation`] is the canonical case `b = s >= 0`
//! real, so its matrix is `[[c, s], [-s, conj(c)]]`. A [`Core`] has a complex
//! `b`; it only appears transiently while a misfit rotation is being chased.

use num_traits::One;
#[cfg(test)]
use num_traits::Zero;

use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

/// Canonical rotation `[[c, s], [-s, conj(c)]]` with real `s >= 0`, acting on
/// rows/columns `i` and `i + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub c: C64,
    pub s: f64,
    pub i: usize,
}

/// General 2x2 special unitary `[[a, b], [-conj(b), conj(a)]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Core {
    pub a: C64,
    pub b: C64,
}

/// Unit-modulus phases `diag(d1, d2)` left over by fusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePair {
    pub d1: C64,
    pub d2: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Rows `(x, y) <- G (x, y)`.
    Left,
    /// Columns `[x y] <- [x y] G^H`.
    Right,
}

impl PhasePair {
    pub const ONE: PhasePair = PhasePair { d1: C64::new(1.0, 0.0), d2: C64::new(1.0, 0.0) };
}

impl Rotation {
    pub fn identity(i: usize) -> Self {
        Rotation { c: C64::one(), s: 0.0, i }
    }

    pub fn new(c: C64, s: f64, i: usize) -> Self {
        Rotation { c, s, i }
    }

    pub fn at(self, i: usize) -> Self {
        Rotation { i, ..self }
    }

    #[inline]
    pub fn core(self) -> Core {
        Core { a: self.c, b: C64::new(self.s, 0.0) }
    }

    /// Exactly the identity, as left behind by deflation.
    #[inline]
    pub fn is_identity(&self) -> bool {
        self.s == 0.0 && self.c == C64::one()
    }

    /// Below the trivial floor: the matrix is a phase diagonal up to `eps`.
    #[inline]
    pub fn is_trivial(&self) -> bool {
        self.s < crate::EPS
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.core().matrix()
    }

    /// `| |c|^2 + s^2 - 1 |`.
    pub fn norm_defect(&self) -> f64 {
        (self.c.norm_sqr() + self.s * self.s - 1.0).abs()
    }
}

impl Core {
    pub const IDENTITY: Core = Core { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0) };

    pub fn new(a: C64, b: C64) -> Self {
        Core { a, b }
    }

    #[inline]
    pub fn inverse(self) -> Core {
        Core { a: self.a.conj(), b: -self.b }
    }

    /// Elementwise conjugate; this is the mirror image of the core under the
    /// signed reversal used to map hat-shaped triples onto V-shaped ones.
    #[inline]
    pub fn conj(self) -> Core {
        Core { a: self.a.conj(), b: self.b.conj() }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [[self.a, self.b], [-self.b.conj(), self.a.conj()]]
    }

    /// Rescales onto the unit sphere.
    #[inline]
    pub fn normalized(self) -> Core {
        let n = self.a.norm().hypot(self.b.norm());
        if n == 0.0 {
            return Core::IDENTITY;
        }
        Core { a: self.a / n, b: self.b / n }
    }

    /// Product `self * other` on the same row pair.
    #[inline]
    pub fn mul(self, o: Core) -> Core {
        Core { a: self.a * o.a - self.b * o.b.conj(), b: self.a * o.b + self.b * o.a.conj() }
    }

    /// Drops a rounding-level phase on `b`, giving the nearest canonical rotation.
    /// Only valid when `b` is known to be real nonnegative in exact arithmetic.
    #[inline]
    pub fn project(self, i: usize) -> Rotation {
        // keeping `a` bounds the change by the imaginary part of `b`; rotating
        // `a` by the phase of a tiny `b` would amplify its rounding error
        let s = self.b.norm();
        let n = self.a.norm().hypot(s);
        Rotation { c: self.a / n, s: s / n, i }
    }

    /// `K = G diag(conj(e), e)` with `G` canonical.
    #[inline]
    pub fn split_right(self, i: usize) -> (Rotation, PhasePair) {
        let s = self.b.norm();
        if s == 0.0 {
            return (Rotation { c: self.a, s: 0.0, i }, PhasePair::ONE);
        }
        let e = self.b / s;
        (Rotation { c: self.a * e, s, i }, PhasePair { d1: e.conj(), d2: e })
    }

    /// `K = diag(e, conj(e)) G` with `G` canonical.
    #[inline]
    pub fn split_left(self, i: usize) -> (PhasePair, Rotation) {
        let s = self.b.norm();
        if s == 0.0 {
            return (PhasePair::ONE, Rotation { c: self.a, s: 0.0, i });
        }
        let e = self.b / s;
        (PhasePair { d1: e, d2: e.conj() }, Rotation { c: self.a * e.conj(), s, i })
    }

    /// `diag(p, q) K = K' diag(q, p)`.
    #[inline]
    pub fn pass_diag_from_left(self, p: C64, q: C64) -> Core {
        Core { a: p * self.a * q.conj(), b: self.b }
    }

    /// `K diag(p, q) = diag(q, p) K'`.
    #[inline]
    pub fn pass_diag_from_right(self, p: C64, q: C64) -> Core {
        Core { a: self.a * p * q.conj(), b: self.b }
    }

    /// Rows `(x, y) <- K (x, y)`.
    #[inline]
    pub fn lmul(&self, x: &mut [C64], y: &mut [C64]) {
        let (a, b) = (self.a, self.b);
        let (ac, bc) = (a.conj(), b.conj());
        for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
            let (u, v) = (*xi, *yi);
            *xi = a * u + b * v;
            *yi = ac * v - bc * u;
        }
    }

    /// Columns `[x y] <- [x y] K`.
    #[inline]
    pub fn rmul(&self, x: &mut [C64], y: &mut [C64]) {
        let (a, b) = (self.a, self.b);
        let (ac, bc) = (a.conj(), b.conj());
        for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
            let (u, v) = (*xi, *yi);
            *xi = u * a - v * bc;
            *yi = u * b + v * ac;
        }
    }

    /// Scalar version of [`Core::lmul`].
    #[inline]
    pub fn apply(&self, u: C64, v: C64) -> (C64, C64) {
        (self.a * u + self.b * v, self.a.conj() * v - self.b.conj() * u)
    }

    /// Scalar version of [`Core::rmul`] for a row vector `(u, v)`.
    #[inline]
    pub fn apply_right(&self, u: C64, v: C64) -> (C64, C64) {
        (u * self.a - v * self.b.conj(), u * self.b + v * self.a.conj())
    }
}

impl From<Rotation> for Core {
    fn from(g: Rotation) -> Core {
        g.core()
    }
}

/// Canonical rotation `G` and `r` with `G (a, b)^T = (r, 0)^T`.
///
/// Scaled by the larger modulus so that neither overflow nor underflow occurs
/// before the final multiply. `(0, 0)` gives the identity and `r = 0`.
pub fn make_rotation(a: C64, b: C64) -> (Rotation, C64) {
    if b.re == 0.0 && b.im == 0.0 {
        return (Rotation::identity(0), a);
    }
    let scale = a.re.abs().max(a.im.abs()).max(b.re.abs()).max(b.im.abs());
    let (a, b) = (a / scale, b / scale);
    let (an, bn) = (a.norm(), b.norm());
    let rho = an.hypot(bn);
    let ub = b / bn;
    let s = bn / rho;
    let c = a.conj() * ub / rho;
    (Rotation { c, s, i: 0 }, ub * (rho * scale))
}

/// Canonical `G'` and phases with `G' diag(d1, d2) = g1 g2`.
pub fn fusion(g1: &Rotation, g2: &Rotation) -> (Rotation, PhasePair) {
    debug_assert_eq!(g1.i, g2.i, "fusion of rotations on different rows");
    fuse_cores(g1.core(), g2.core(), g1.i)
}

/// [`fusion`] for general cores.
pub fn fuse_cores(k1: Core, k2: Core, i: usize) -> (Rotation, PhasePair) {
    k1.mul(k2).normalized().split_right(i)
}

/// `ga(i) gb(i+1) gc(i) = h1(i+1) h2(i) h3(i+1)`, unnormalized `b` phases kept.
///
/// `h2` always has a real nonnegative `b`. If `gb` and `gc` are canonical so is
/// `h1`; if `ga` and `gb` are canonical so is `h3`.
pub fn turnover_v(ga: Core, gb: Core, gc: Core) -> (Core, Core, Core) {
    let (aa, ba) = (ga.a, ga.b);
    let (ab, bb) = (gb.a, gb.b);
    let (ac, bc) = (gc.a, gc.b);
    let (aac, bac) = (aa.conj(), ba.conj());
    let bbc = bb.conj();

    // first column of the product
    let t = -(ab * bc.conj());
    let v0 = aa * ac + ba * t;
    let v1 = aac * t - bac * ac;
    let v2 = bbc * bc.conj();

    let s2 = v1.norm().hypot(v2.norm());
    let n2 = v0.norm().hypot(s2);
    let (a2, s2) = (v0 / n2, s2 / n2);
    let h2 = Core { a: a2, b: C64::new(s2, 0.0) };
    let h1 = if s2 == 0.0 {
        Core::IDENTITY
    } else {
        let (v1, v2) = (v1 / n2, v2 / n2);
        Core { a: -v1 / s2, b: (v2 / s2).conj() }.normalized()
    };

    // columns 1 and 2 of the product
    let w = ab * ac.conj();
    let m01 = aa * bc + ba * w;
    let m11 = aac * w - bac * bc;
    let m21 = -(bbc * ac.conj());
    let m02 = ba * bb;
    let m12 = aac * bb;
    let m22 = ab.conj();

    // h3 = first row of (h1 h2)^H M on rows/cols 1..2
    let p0 = C64::new(s2, 0.0);
    let p1 = h1.a * a2.conj();
    let p2 = -(h1.b.conj() * a2.conj());
    let a3 = p0.conj() * m01 + p1.conj() * m11 + p2.conj() * m21;
    let mut b3 = p0.conj() * m02 + p1.conj() * m12 + p2.conj() * m22;
    // entry (0, 2) gives b2 b3 = ba bb, which keeps a small b3 accurate to
    // high relative precision; the sum above only has absolute accuracy
    let prod = ba * bb;
    if s2 > 0.0 && prod.norm() <= s2 * s2 {
        b3 = prod / s2;
    }
    let h3 = Core { a: a3, b: b3 }.normalized();
    (h1, h2, h3)
}

/// `ga(i+1) gb(i) gc(i+1) = h1(i) h2(i+1) h3(i)`.
pub fn turnover_hat(ga: Core, gb: Core, gc: Core) -> (Core, Core, Core) {
    let (h1, h2, h3) = turnover_v(ga.conj(), gb.conj(), gc.conj());
    (h1.conj(), h2.conj(), h3.conj())
}

/// Turnover of three canonical rotations in either shape.
///
/// A V-shaped triple `(i, i+1, i)` becomes a hat `(i+1, i, i+1)` and vice versa.
/// Panics if the indices form neither shape.
pub fn turnover(ga: &Rotation, gb: &Rotation, gc: &Rotation) -> (Rotation, Rotation, Rotation) {
    assert_eq!(ga.i, gc.i, "turnover: outer rotations must share an index");
    let out = if gb.i == ga.i + 1 {
        let (h1, h2, h3) = turnover_v(ga.core(), gb.core(), gc.core());
        (h1.project(ga.i + 1), h2.project(ga.i), h3.project(ga.i + 1))
    } else if ga.i == gb.i + 1 {
        let (h1, h2, h3) = turnover_hat(ga.core(), gb.core(), gc.core());
        (h1.project(gb.i), h2.project(ga.i), h3.project(gb.i))
    } else {
        panic!("turnover: indices {} {} {} form neither shape", ga.i, gb.i, gc.i);
    };
    debug_assert!(
        !(ga.s > 0.0 && gb.s > 0.0 && gc.s > 0.0) || (out.0.s > 0.0 && out.1.s > 0.0 && out.2.s > 0.0),
        "turnover produced a trivial rotation from nontrivial inputs"
    );
    out
}

/// In-place update of two rows (left) or two columns (right) by `g`.
pub fn apply_rotation(g: &Rotation, x: &mut [C64], y: &mut [C64], side: Side) {
    assert_eq!(x.len(), y.len(), "apply_rotation: slices differ in length");
    match side {
        Side::Left => g.core().lmul(x, y),
        Side::Right => g.core().inverse().rmul(x, y),
    }
}

#[cfg(test)]
mod near_trivial {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat3(v: &[(usize, Core)]) -> [[C64; 3]; 3] {
        let mut x = [[C64::zero(); 3]; 3];
        for (i, row) in x.iter_mut().enumerate() {
            row[i] = C64::one();
        }
        for &(i, k) in v {
            let km = k.matrix();
            for row in x.iter_mut() {
                let (u, w) = (row[i], row[i + 1]);
                row[i] = u * km[0][0] + w * km[1][0];
                row[i + 1] = u * km[0][1] + w * km[1][1];
            }
        }
        x
    }

    // tiny sines leave the outputs' b entries dominated by rounding; the
    // stored canonical rotations must still reproduce the product
    #[test]
    fn turnover_with_tiny_sines() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut worst = 0.0f64;
        for t in 0..40000 {
            let mut mk = |scale: f64| {
                let s = scale * rng.random::<f64>();
                let ph = C64::from_polar(1.0, rng.random::<f64>() * core::f64::consts::TAU);
                Core { a: ph * (1.0 - s * s).sqrt(), b: C64::new(s, 0.0) }
            };
            let scales = [1e-12, 1e-5, 1.0, 1.0];
            let ga = mk(scales[t % 4]);
            let gb = mk(scales[(t / 4) % 4]);
            let gc = Core {
                a: C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                b: C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            }
            .normalized();
            let (h1, h2, h3) = turnover_v(ga, gb, gc);
            let a = mat3(&[(0, ga), (1, gb), (0, gc)]);
            let b = mat3(&[(1, h1), (0, h2.project(0).core()), (1, h3.project(1).core())]);
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((a[i][j] - b[i][j]).norm());
                }
            }
        }
        assert!(worst <= 16.0 * f64::EPSILON, "{worst:e}");
    }
}
