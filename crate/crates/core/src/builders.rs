//! Test problems: companion and block companion linearizations, random
//! unitary-plus-rank-k matrices and the classic polynomial test suite.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::dense::{qr_thin, Mat};
use crate::error::{Error, Result};
use crate::oracle::poly_from_roots;
use crate::representation::{ProblemInput, UnitaryKind};
use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

/// Generator behind every seeded builder; recorded in bench output.
pub const RNG_NAME: &str = "ChaCha20Rng::seed_from_u64";

/// Scalar polynomial, coefficients from the highest degree down.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarPoly {
    pub coeffs: Vec<C64>,
}

/// Matrix polynomial `sum P_i x^i`, `k x k` blocks from the highest degree down.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    pub coeffs: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolySpec {
    Scalar(ScalarPoly),
    Matrix(MatrixPoly),
}

impl ScalarPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Dimension(format!(
                "polynomial degree must be at least 1, got {} coefficients",
                coeffs.len()
            )));
        }
        if coeffs[0].is_zero() {
            return Err(Error::Config(String::from("leading coefficient is zero")));
        }
        Ok(ScalarPoly { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        ScalarPoly { coeffs: poly_from_roots(roots) }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs[0] == C64::one()
    }

    /// Coefficients divided by the leading one, highest degree first.
    pub fn monic(&self) -> Vec<C64> {
        let lead = self.coeffs[0];
        self.coeffs.iter().map(|c| c / lead).collect()
    }
}

impl MatrixPoly {
    pub fn new(coeffs: Vec<Mat>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Dimension(format!(
                "matrix polynomial degree must be at least 1, got {} blocks",
                coeffs.len()
            )));
        }
        let k = coeffs[0].rows();
        if k == 0 || coeffs.iter().any(|b| b.rows() != k || b.cols() != k) {
            return Err(Error::Dimension(String::from("coefficient blocks must all be k x k with k >= 1")));
        }
        Ok(MatrixPoly { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn block_size(&self) -> usize {
        self.coeffs[0].rows()
    }
}

/// Phase of the corner entry of the cyclic shift. `+1` unless that would make
/// the first entry of the correction smaller than one in modulus, which can
/// make `X` vanish (e.g. `x^2 - 1`).
fn corner_phase(a0: C64) -> C64 {
    if a0.re >= 0.0 {
        C64::one()
    } else {
        -C64::one()
    }
}

/// Companion linearization of a scalar polynomial as a rank-one correction
/// of a cyclic shift. The assembled matrix is the Frobenius companion of the
/// monic polynomial.
pub fn companion(p: &ScalarPoly) -> Result<ProblemInput> {
    let n = p.degree();
    if p.coeffs[0].is_zero() {
        return Err(Error::Config(String::from("leading coefficient is zero")));
    }
    let m = p.monic();
    // a[i] is the coefficient of x^i
    let a: Vec<C64> = (0..n).map(|i| m[n - i]).collect();
    let g = corner_phase(a[0]);
    let mut u = Mat::zeros(n, n);
    for i in 1..n {
        u[(i, i - 1)] = C64::one();
    }
    u[(0, n - 1)] += g;
    let mut x = Mat::zeros(n, 1);
    for i in 0..n {
        x[(i, 0)] = -a[i];
    }
    x[(0, 0)] -= g;
    let mut y = Mat::zeros(n, 1);
    y[(n - 1, 0)] = C64::one();
    ProblemInput::new(u, x, y, UnitaryKind::Hessenberg)
}

/// Block companion linearization of a matrix polynomial. `n = k d`; the
/// leading block is inverted.
pub fn block_companion(p: &MatrixPoly) -> Result<ProblemInput> {
    let d = p.degree();
    let k = p.block_size();
    let n = k * d;
    let lead_inv =
        p.coeffs[0].inverse().ok_or_else(|| Error::Config(String::from("leading coefficient block is singular")))?;
    // q[i] = P_d^{-1} P_i for i < d
    let q: Vec<Mat> = (0..d).map(|i| &lead_inv * &p.coeffs[d - i]).collect();
    let tr0: C64 = (0..k).map(|r| q[0][(r, r)]).sum();
    let first = corner_phase(tr0);
    let mut last_err = None;
    for g in [first, -first, C64::i(), -C64::i()] {
        let mut u = Mat::zeros(n, n);
        for b in 0..d - 1 {
            for r in 0..k {
                u[((b + 1) * k + r, b * k + r)] = C64::one();
            }
        }
        for r in 0..k {
            u[(r, (d - 1) * k + r)] += g;
        }
        let mut x = Mat::zeros(n, k);
        for (b, qb) in q.iter().enumerate() {
            for r in 0..k {
                for c in 0..k {
                    x[(b * k + r, c)] = -qb[(r, c)];
                }
            }
        }
        for r in 0..k {
            x[(r, r)] -= g;
        }
        let mut y = Mat::zeros(n, k);
        for r in 0..k {
            y[((d - 1) * k + r, r)] = C64::one();
        }
        let kind = if k == 1 { UnitaryKind::Hessenberg } else { UnitaryKind::Dense };
        match ProblemInput::new(u, x, y, kind) {
            Ok(pi) => return Ok(pi),
            Err(e @ Error::RankDeficient { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn gaussian(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Mat {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary from the phase-corrected QR of a Gaussian matrix.
fn haar_unitary(rng: &mut ChaCha20Rng, n: usize) -> Mat {
    let (mut q, r) = qr_thin(&gaussian(rng, n, n));
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.is_zero() { C64::one() } else { d / d.norm() };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Scales `X` so that `||U + X Y^H||_inf` hits `target`. When the target is
/// below `||U||_inf` it cannot be reached; the rank part alone is then scaled
/// to `target`.
fn scale_to_norm(u: &Mat, x: &Mat, y: &Mat, target: f64) -> Mat {
    let xy = x * &y.adjoint();
    let base = xy.norm_inf();
    let unorm = u.norm_inf();
    if !(target > unorm) || base == 0.0 {
        return x.scale(C64::new(target / base, 0.0));
    }
    let norm_at = |a: f64| (u + &xy.scale(C64::new(a, 0.0))).norm_inf();
    // ||U + a XY|| lies within ||U|| of a ||XY||, so the root is bracketed here
    let mut lo = ((target - unorm) / base).max(0.0);
    let mut hi = (target + unorm) / base;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    x.scale(C64::new(0.5 * (lo + hi), 0.0))
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return Err(Error::Dimension(format!("need 1 <= k < n, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// Haar unitary plus a Gaussian rank-`k` term, scaled towards `target_norm`.
pub fn random_unitary_plus_rank_k(n: usize, k: usize, target_norm: f64, seed: u64) -> Result<ProblemInput> {
    check_sizes(n, k)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let u = haar_unitary(&mut rng, n);
    let x = gaussian(&mut rng, n, k);
    let y = gaussian(&mut rng, n, k);
    let x = scale_to_norm(&u, &x, &y, target_norm);
    ProblemInput::new(u, x, y, UnitaryKind::Dense)
}

/// Diagonal of random unit-modulus phases plus a Gaussian rank-`k` term.
pub fn unitary_diag_plus_rank_k(n: usize, k: usize, target_norm: f64, seed: u64) -> Result<ProblemInput> {
    check_sizes(n, k)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let phases: Vec<C64> =
        (0..n).map(|_| C64::from_polar(1.0, rng.random_range(0.0..core::f64::consts::TAU))).collect();
    let u = Mat::diag(&phases);
    let x = gaussian(&mut rng, n, k);
    let y = gaussian(&mut rng, n, k);
    let x = scale_to_norm(&u, &x, &y, target_norm);
    ProblemInput::new(u, x, y, UnitaryKind::Diagonal)
}

/// Monic matrix polynomial of degree `d` with `k x k` Gaussian coefficients
/// scaled to Frobenius norm `coeff_norm`.
pub fn random_matrix_poly(k: usize, d: usize, coeff_norm: f64, seed: u64) -> Result<MatrixPoly> {
    if k == 0 || d == 0 {
        return Err(Error::Dimension(format!("need k >= 1 and d >= 1, got k = {k}, d = {d}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut coeffs = vec![Mat::identity(k)];
    for _ in 0..d {
        let g = gaussian(&mut rng, k, k);
        let f = g.norm_fro();
        coeffs.push(g.scale(C64::new(coeff_norm / f, 0.0)));
    }
    MatrixPoly::new(coeffs)
}

/// The scalar polynomial test suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestPoly {
    /// Roots `1, 2, ..., n`.
    Wilkinson,
    /// Roots `-2.1, -1.9, ..., -2.1 + 0.2 (n - 1)`.
    ScaledShiftedWilkinson,
    /// Roots `1, 1/2, ..., 1/n`.
    ReverseWilkinson,
    /// Roots `2^-m, ..., 2^m`, degree `2m + 1`; the size argument is `m`.
    PrescribedRoots,
    /// Roots `2^-m - 3, ..., 2^m - 3`; the size argument is `m`.
    PrescribedRootsShifted,
    /// Chebyshev polynomial of the first kind.
    Chebyshev,
    /// `1 + x + ... + x^n`.
    GeometricSum,
}

impl TestPoly {
    pub const ALL: [TestPoly; 7] = [
        TestPoly::Wilkinson,
        TestPoly::ScaledShiftedWilkinson,
        TestPoly::ReverseWilkinson,
        TestPoly::PrescribedRoots,
        TestPoly::PrescribedRootsShifted,
        TestPoly::Chebyshev,
        TestPoly::GeometricSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestPoly::Wilkinson => "wilkinson",
            TestPoly::ScaledShiftedWilkinson => "scaled-wilkinson",
            TestPoly::ReverseWilkinson => "reverse-wilkinson",
            TestPoly::PrescribedRoots => "prescribed",
            TestPoly::PrescribedRootsShifted => "prescribed-shifted",
            TestPoly::Chebyshev => "chebyshev",
            TestPoly::GeometricSum => "geometric",
        }
    }

    pub fn from_name(s: &str) -> Option<TestPoly> {
        TestPoly::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Exact roots for the given size parameter.
    pub fn roots(self, n: usize) -> Vec<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            TestPoly::Wilkinson => (1..=n).map(|j| r(j as f64)).collect(),
            TestPoly::ScaledShiftedWilkinson => (0..n).map(|j| r(-2.1 + 0.2 * j as f64)).collect(),
            TestPoly::ReverseWilkinson => (1..=n).map(|j| r(1.0 / j as f64)).collect(),
            TestPoly::PrescribedRoots | TestPoly::PrescribedRootsShifted => {
                let shift = if self == TestPoly::PrescribedRoots { 0.0 } else { -3.0 };
                let m = n as i32;
                (-m..=m).map(|e| r(2f64.powi(e) + shift)).collect()
            }
            TestPoly::Chebyshev => {
                (1..=n).map(|j| r(((2 * j - 1) as f64 * core::f64::consts::PI / (2 * n) as f64).cos())).collect()
            }
            TestPoly::GeometricSum => {
                (1..=n).map(|j| C64::from_polar(1.0, core::f64::consts::TAU * j as f64 / (n + 1) as f64)).collect()
            }
        }
    }

    /// Monic coefficients, highest degree first.
    pub fn poly(self, n: usize) -> ScalarPoly {
        match self {
            TestPoly::Chebyshev => {
                // T_{j+1} = 2x T_j - T_{j-1}, coefficients lowest degree first
                let mut prev = vec![1.0];
                let mut cur = vec![0.0, 1.0];
                if n == 0 {
                    cur = prev.clone();
                }
                for _ in 1..n {
                    let mut next = vec![0.0; cur.len() + 1];
                    for (i, c) in cur.iter().enumerate() {
                        next[i + 1] += 2.0 * c;
                    }
                    for (i, c) in prev.iter().enumerate() {
                        next[i] -= c;
                    }
                    prev = core::mem::replace(&mut cur, next);
                }
                let lead = cur[n];
                ScalarPoly { coeffs: cur.iter().rev().map(|c| C64::new(c / lead, 0.0)).collect() }
            }
            TestPoly::GeometricSum => ScalarPoly { coeffs: vec![C64::one(); n + 1] },
            _ => ScalarPoly::from_roots(&self.roots(n)),
        }
    }
}
