//! Implicit single-shift QR on the compressed representation.
//!
//! One step on the active window `[lo, hi)`:
//!
//! 1. A rotation `U` at `lo` is chosen from the shifted first column.
//! 2. `U^H` goes left to right through `L` and is fused into `Q`.
//! 3. `U` goes right to left through `R` (updating `Z`), through `diag(dhat)`
//!    and turns over with `Q`, which pushes a rotation out on the left.
//! 4. That rotation goes right to left through `L` and comes out as the next
//!    similarity rotation one index lower, which again enters `R` from the
//!    right. The bulge reaches the bottom, where it is fused into `Q`.

use alloc::vec::Vec;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::factors::{recover_z, rmul_cols, Direction, LfrState};
use crate::oracle::{backward_error_matrix, wilkinson_2x2};
use crate::representation::{prepare, ProblemInput};
use crate::rotation::{fuse_cores, Core, Rotation};
use crate::C64;
#[allow(unused_imports)]
use num_traits::Float;

/// How `Z` is kept during the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMode {
    /// Every right-side rotation is applied to the stored `Z`.
    Explicit,
    /// `Z` is never touched and is recovered from `L` and `Q` on demand.
    Implicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftStrategy {
    /// Eigenvalue of the trailing 2x2 block closest to the last diagonal entry.
    Wilkinson,
    /// Last diagonal entry.
    Rayleigh,
    /// Always zero.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    /// Deflation threshold relative to `K = 1 / |det T_k|`.
    pub tol_deflate: f64,
    pub max_sweeps_per_eig: usize,
    pub z_mode: ZMode,
    /// Accumulate the similarity `P1` and report the backward error.
    pub accumulate_transform: bool,
    pub shift_strategy: ShiftStrategy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_deflate: f64::EPSILON,
            max_sweeps_per_eig: 30,
            z_mode: ZMode::Explicit,
            accumulate_transform: false,
            shift_strategy: ShiftStrategy::Wilkinson,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_deflate > 0.0) || !self.tol_deflate.is_finite() {
            return Err(Error::Config(alloc::format!("tol_deflate must be positive, got {}", self.tol_deflate)));
        }
        if self.max_sweeps_per_eig == 0 {
            return Err(Error::Config(alloc::string::String::from("max_sweeps_per_eig must be at least 1")));
        }
        Ok(())
    }
}

/// Sweeps without a deflation after which an exceptional shift is used.
pub const EXCEPTIONAL_AFTER: usize = 15;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub eigenvalues: Vec<C64>,
    /// Total number of QR steps.
    pub sweeps: usize,
    /// `(index, sweep)` of every deflation, in order.
    pub deflations: Vec<(usize, usize)>,
    pub zero_shift_steps: usize,
    pub exceptional_shifts: usize,
    /// `P1` with `P1^H A P1 = A_final`, when accumulated.
    pub transform: Option<Mat>,
    /// Leading `n x n` block of the final materialized matrix, when accumulated.
    pub final_matrix: Option<Mat>,
    /// `||P1^H A P1 - A_final||_inf / ||A||_inf`, when accumulated.
    pub backward_error: Option<f64>,
}

/// Canonical rotation whose first column is parallel to `(x, y)`.
pub fn shift_rotation(x: C64, y: C64, i: usize) -> Rotation {
    let ay = y.norm();
    if ay == 0.0 {
        let ax = x.norm();
        let c = if ax == 0.0 { C64::one() } else { x / ax };
        return Rotation { c, s: 0.0, i };
    }
    let scale = x.norm().max(ay);
    let (xs, ys) = (x / scale, y / scale);
    let rho = xs.norm().hypot(ys.norm());
    let c = -(xs * ys.conj()) / (ys.norm() * rho);
    Rotation { c, s: ys.norm() / rho, i }
}

fn check_window(s: &LfrState) -> Result<()> {
    if s.hi > s.n || s.lo > s.hi {
        return Err(Error::Range { lo: s.lo, hi: s.hi, size: s.n });
    }
    if s.hi - s.lo < 2 {
        return Err(Error::WindowTooSmall(s.hi - s.lo));
    }
    Ok(())
}

/// Eigenvalue of the trailing 2x2 block of the active window closest to its
/// last diagonal entry.
pub fn wilkinson_shift(s: &LfrState) -> Result<C64> {
    check_window(s)?;
    let w = s.window(s.hi - 2..s.hi, s.hi - 2..s.hi)?;
    Ok(wilkinson_2x2(w[(0, 0)], w[(0, 1)], s.subdiagonal(s.hi - 2), w[(1, 1)]))
}

/// One implicit QR step with shift `mu` on the active window. `p1`, when
/// given, is multiplied on the right by every similarity rotation.
pub fn qr_step(s: &mut LfrState, mu: C64, mut p1: Option<&mut Mat>) -> Result<()> {
    check_window(s)?;
    let (lo, hi) = (s.lo, s.hi);
    let u = initial_core(s, mu)?;

    // left: U^H L = L' Y, then Y q = G diag(d1, d2)
    let (y, p) = s.l.pass_through(u.inverse(), lo, Direction::LeftToRight);
    let (g, ph) = fuse_cores(y, s.f.qhat.get(p).core(), p);
    *s.f.qhat.get_mut(p) = g;
    s.f.dhat[p] *= ph.d1;
    s.f.push_phase(p + 1, ph.d2);

    let mut w = u;
    let mut i = lo;
    loop {
        if let Some(m) = p1.as_deref_mut() {
            rmul_cols(m, i, w);
        }
        let (wr, p) = s.r.pass_through(w, i, Direction::RightToLeft);
        if s.z_explicit {
            let inv = wr.inverse();
            let (zp, zq) = s.f.z.two_rows_mut(p, p + 1);
            inv.lmul(zp, zq);
        }
        let wd = s.f.pass_diag(wr, p);
        if i + 2 == hi {
            let (g, ph) = fuse_cores(s.f.qhat.get(p).core(), wd, p);
            *s.f.qhat.get_mut(p) = g;
            s.f.dhat[p] *= ph.d1;
            s.f.dhat[p + 1] *= ph.d2;
            return Ok(());
        }
        let (b, pb) = s.f.qhat.transport(wd, p, Direction::RightToLeft);
        let (x, px) = s.l.pass_through(b, pb, Direction::RightToLeft);
        debug_assert_eq!(px, i + 1);
        w = x;
        i += 1;
    }
}

/// `qr_step` with `mu = 0`.
pub fn zero_shift_step(s: &mut LfrState, p1: Option<&mut Mat>) -> Result<()> {
    qr_step(s, C64::zero(), p1)
}

/// Replaces every middle-factor rotation in the active window whose sine is
/// below `tol * K` by its phase diagonal. Returns the deflated row indices
/// `i` (coupling rows `i` and `i + 1`), bottom first.
pub fn deflate_scan(s: &mut LfrState, tol: f64) -> Vec<usize> {
    let thresh = tol * s.k_const;
    let mut out = Vec::new();
    if s.hi < s.lo + 2 {
        return out;
    }
    for i in (s.lo..s.hi - 1).rev() {
        let pos = i + s.k;
        let g = *s.f.qhat.get(pos);
        if g.is_identity() || !(g.s < thresh) {
            continue;
        }
        let m = g.c.norm();
        assert!(m > 0.0, "deflation: rotation with zero cosine below threshold");
        let ph = g.c / m;
        *s.f.qhat.get_mut(pos) = Rotation::identity(pos);
        s.f.dhat[pos] *= ph;
        s.f.push_phase(pos + 1, ph.conj());
        out.push(i);
    }
    out
}

/// Whether rows `i` and `i + 1` of the leading block are decoupled.
#[inline]
fn split_at(s: &LfrState, i: usize) -> bool {
    s.coupling(i).is_identity()
}

/// Smallest outermost entry of `R` over the active window relative to `K`;
/// tiny values mean the active block is numerically singular.
fn singular_in_window(s: &LfrState) -> bool {
    let floor = f64::EPSILON * s.k_const;
    (s.lo..s.hi).any(|i| s.r.outermost(i) < floor)
}

/// Diagonal entries of the leading `n x n` block.
fn diagonal(s: &LfrState) -> Vec<C64> {
    (0..s.n).map(|i| s.entry(i, i)).collect()
}

/// Full pipeline: embed, reduce, factor and iterate to convergence.
pub fn solve(p: &ProblemInput, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let (mut s, h) = prepare(p)?;
    let p1 = cfg.accumulate_transform.then(|| h.adjoint());
    let mut report = iterate(&mut s, p1, cfg)?;
    if let Some(pm) = &report.transform {
        let full = s.materialize();
        let fin = full.submatrix(0, s.n, 0, s.n);
        report.backward_error = Some(backward_error_matrix(&p.assemble(), pm, &fin));
        report.final_matrix = Some(fin);
    }
    Ok(report)
}

/// Points in the driver loop at which an observer sees the state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    /// Window `[lo, hi)` is set and about to be scanned for deflations.
    BeforeScan,
    /// A step with shift `mu` has just completed.
    AfterStep { mu: C64 },
}

/// Runs the driver loop on a prepared state. The whole leading block is
/// processed regardless of the incoming window.
pub fn iterate(s: &mut LfrState, p1: Option<Mat>, cfg: &SolveConfig) -> Result<SolveReport> {
    iterate_observed(s, p1, cfg, &mut |_, _| {})
}

/// [`iterate`] with a callback invoked at every [`Event`].
pub fn iterate_observed(
    s: &mut LfrState,
    mut p1: Option<Mat>,
    cfg: &SolveConfig,
    observe: &mut dyn FnMut(Event, &LfrState),
) -> Result<SolveReport> {
    cfg.validate()?;
    s.z_explicit = cfg.z_mode == ZMode::Explicit;
    let n = s.n;
    let budget = cfg.max_sweeps_per_eig * n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut report = SolveReport {
        eigenvalues: Vec::new(),
        sweeps: 0,
        deflations: Vec::new(),
        zero_shift_steps: 0,
        exceptional_shifts: 0,
        transform: None,
        final_matrix: None,
        backward_error: None,
    };
    let mut hi = n;
    let mut stall = 0usize;
    while hi > 0 {
        // deflate inside the bottom unreduced block and locate its top
        s.lo = 0;
        s.hi = hi;
        let mut lo = hi - 1;
        while lo > 0 && !split_at(s, lo - 1) {
            lo -= 1;
        }
        s.lo = lo;
        observe(Event::BeforeScan, s);
        let found = deflate_scan(s, cfg.tol_deflate);
        for &i in &found {
            report.deflations.push((i, report.sweeps));
        }
        if !found.is_empty() {
            stall = 0;
            continue;
        }
        if hi - lo == 1 {
            hi -= 1;
            continue;
        }
        if report.sweeps >= budget {
            if !s.z_explicit {
                s.f.z = recover_z(&s.l, &s.f, n);
                s.z_explicit = true;
            }
            let d = diagonal(s);
            let converged = (hi..n).map(|i| (i, d[i])).collect();
            return Err(Error::NoConvergence { lo, hi, sweeps: report.sweeps, converged });
        }
        let mu = if singular_in_window(s) || cfg.shift_strategy == ShiftStrategy::Zero {
            report.zero_shift_steps += (cfg.shift_strategy != ShiftStrategy::Zero) as usize;
            C64::zero()
        } else {
            let base = match cfg.shift_strategy {
                ShiftStrategy::Wilkinson => wilkinson_shift(s)?,
                ShiftStrategy::Rayleigh => s.entry(hi - 1, hi - 1),
                ShiftStrategy::Zero => unreachable!(),
            };
            if stall > 0 && stall % EXCEPTIONAL_AFTER == 0 {
                report.exceptional_shifts += 1;
                let sub = s.subdiagonal(hi - 2).norm();
                let theta = rng.random_range(0.0..core::f64::consts::TAU);
                base + C64::from_polar(sub.max(f64::EPSILON * base.norm()), theta)
            } else {
                base
            }
        };
        qr_step(s, mu, p1.as_mut())?;
        observe(Event::AfterStep { mu }, s);
        report.sweeps += 1;
        stall += 1;
    }
    s.lo = 0;
    s.hi = 0;
    if !s.z_explicit {
        s.f.z = recover_z(&s.l, &s.f, n);
        s.z_explicit = true;
    }
    report.eigenvalues = diagonal(s);
    report.transform = p1;
    Ok(report)
}

/// Rotation whose first column is parallel to the first column of
/// `A - mu I` restricted to the active window.
pub fn initial_core(s: &LfrState, mu: C64) -> Result<Core> {
    check_window(s)?;
    let d = s.window(s.lo..s.lo + 1, s.lo..s.lo + 1)?;
    Ok(shift_rotation(d[(0, 0)] - mu, s.subdiagonal(s.lo), s.lo).core())
}
