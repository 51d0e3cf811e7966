//! Measurable structural properties of the representation, used by tests
//! and by the acceptance harness. Everything here materializes dense
//! matrices and is meant for small sizes.

use alloc::vec::Vec;

use num_traits::Zero;

use crate::dense::Mat;
use crate::error::Result;
use crate::factors::{recover_z, LfrState};
use crate::qr::{initial_core, qr_step, Event, SolveConfig};
use crate::C64;

/// Residuals of the structural identities, each relative to `||A_hat||_inf`
/// unless noted.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    /// Largest entry below the first subdiagonal.
    pub hessenberg: f64,
    /// Largest entry of the last `k` rows.
    pub zero_tail: f64,
    /// Largest `|conj(l_{i+1,i+k+1}) a_{i+1,i} - q_{i+k+1,i+k} r_{i+k,i}|`
    /// with `a` materialized. Stated without dividing by `l`: the zero tail is
    /// only zero to rounding, and dividing by `|l| >= K` would amplify that by
    /// up to `1 / K`.
    pub subdiagonal_identity: f64,
    /// `max |L(n:N, 0:k) + T_k^{-1}|`, absolute.
    pub l_tail: f64,
    /// Gap between the stored `Z` and the one recovered from `L` and `Q`;
    /// zero when `Z` is kept implicitly.
    pub z_consistency: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.hessenberg, self.zero_tail, self.subdiagonal_identity, self.l_tail, self.z_consistency]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

pub fn residuals(s: &LfrState) -> Residuals {
    let (n, k, size) = (s.n, s.k, s.size());
    let a = s.materialize();
    let scale = a.norm_inf().max(f64::MIN_POSITIVE);
    let subdiagonal_identity = (0..n.saturating_sub(1))
        .map(|i| s.l.outermost(i + 1) * (s.subdiagonal(i) - a[(i + 1, i)]).norm())
        .fold(0.0, f64::max);
    let l = s.l.materialize();
    let l_tail = match s.f.t_k.inverse() {
        Some(ti) => (&l.submatrix(n, size, 0, k) + &ti).max_abs(),
        None => f64::INFINITY,
    };
    let z_consistency = if s.z_explicit { (&recover_z(&s.l, &s.f, n) - &s.f.z).max_abs() / scale } else { 0.0 };
    Residuals {
        hessenberg: a.below_band(1) / scale,
        zero_tail: a.submatrix(n, size, 0, size).max_abs() / scale,
        subdiagonal_identity: subdiagonal_identity / scale,
        l_tail,
        z_consistency,
    }
}

/// Relative drift of both outermost products with respect to a reference.
pub fn product_drift(s: &LfrState, reference: (f64, f64)) -> f64 {
    let (pl, pr) = s.outermost_products();
    let rel = |x: f64, r: f64| if r == 0.0 { x.abs() } else { (x - r).abs() / r.abs() };
    rel(pl, reference.0).max(rel(pr, reference.1))
}

/// Runs one step with shift `mu` on a copy of `s` while accumulating the
/// similarity, and returns how far its first column is from the first
/// column of the initial shift rotation. Zero means the rest of the step
/// never touched that column.
pub fn first_column_defect(s: &LfrState, mu: C64) -> Result<f64> {
    let n = s.n;
    let u = initial_core(s, mu)?.matrix();
    let mut t = s.clone();
    let mut p = Mat::identity(n);
    qr_step(&mut t, mu, Some(&mut p))?;
    let mut want = alloc::vec![C64::zero(); n];
    want[s.lo] = u[0][0];
    want[s.lo + 1] = u[1][0];
    Ok((0..n).map(|i| (p[(i, s.lo)] - want[i]).norm()).fold(0.0, f64::max))
}

/// Collected measurements from an observed solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Audit {
    /// Worst [`Residuals`] over all steps.
    pub worst: Residuals,
    /// Worst drift of the outermost products over all steps.
    pub product_drift: f64,
    /// Worst `|a_{i+1,i}|` (outermost-entry formula) over all rotations that
    /// the next scan is about to replace.
    pub deflated_subdiagonal: f64,
    /// Worst materialized `|a_{i+1,i}|` after replacement, relative to `||A||`.
    pub after_deflation: f64,
    pub steps: usize,
    pub deflations: usize,
}

/// Solves on `s` while checking the invariants after every step and every
/// deflation.
pub fn audit_solve(s: &mut LfrState, cfg: &SolveConfig) -> Result<Audit> {
    let base = s.outermost_products();
    let mut audit = Audit::default();
    let mut pending: Vec<usize> = Vec::new();
    let thresh = cfg.tol_deflate * s.k_const;
    let mut observe = |ev: Event, st: &LfrState| {
        // the previous scan's replacements are visible now
        if !pending.is_empty() {
            let a = st.materialize();
            let scale = a.norm_inf().max(f64::MIN_POSITIVE);
            for &i in &pending {
                audit.after_deflation = audit.after_deflation.max(a[(i + 1, i)].norm() / scale);
            }
            pending.clear();
        }
        match ev {
            Event::BeforeScan => {
                if st.hi < st.lo + 2 {
                    return;
                }
                for i in st.lo..st.hi - 1 {
                    let g = st.coupling(i);
                    if !g.is_identity() && g.s < thresh {
                        audit.deflated_subdiagonal = audit.deflated_subdiagonal.max(st.subdiagonal(i).norm());
                        audit.deflations += 1;
                        pending.push(i);
                    }
                }
            }
            Event::AfterStep { .. } => {
                audit.steps += 1;
                let r = residuals(st);
                let w = &mut audit.worst;
                w.hessenberg = w.hessenberg.max(r.hessenberg);
                w.zero_tail = w.zero_tail.max(r.zero_tail);
                w.subdiagonal_identity = w.subdiagonal_identity.max(r.subdiagonal_identity);
                w.l_tail = w.l_tail.max(r.l_tail);
                w.z_consistency = w.z_consistency.max(r.z_consistency);
                audit.product_drift = audit.product_drift.max(product_drift(st, base));
            }
        }
    };
    crate::qr::iterate_observed(s, None, cfg, &mut observe)?;
    // replacements from the final scans
    if !pending.is_empty() {
        let a = s.materialize();
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        for &i in &pending {
            audit.after_deflation = audit.after_deflation.max(a[(i + 1, i)].norm() / scale);
        }
    }
    Ok(audit)
}

/// `true` when every entry is finite and `|c|^2 + s^2 = 1` holds for all
/// rotations of all factors within `tol`.
pub fn rotations_normalized(s: &LfrState, tol: f64) -> bool {
    let chains = s.l.layers.iter().chain(s.r.layers.iter()).chain(core::iter::once(&s.f.qhat));
    let ok_rot = chains.flat_map(|c| c.product_order()).all(|g| g.s >= 0.0 && g.norm_defect() <= tol);
    let ok_diag = s.f.dhat.iter().all(|d| (d.norm() - 1.0).abs() <= tol);
    ok_rot && ok_diag && !s.f.z.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{companion, random_unitary_plus_rank_k, unitary_diag_plus_rank_k, TestPoly};
    use crate::qr::ZMode;
    use crate::representation::prepare;

    #[test]
    fn fresh_states_satisfy_identities() {
        for (n, k, seed) in [(6, 1, 1u64), (8, 3, 2), (12, 5, 3)] {
            let (s, _) = prepare(&random_unitary_plus_rank_k(n, k, 3.0, seed).unwrap()).unwrap();
            let r = residuals(&s);
            assert!(r.max() <= 1e-13, "{r:?}");
            assert!(rotations_normalized(&s, 4.0 * f64::EPSILON));
        }
    }

    #[test]
    fn audited_solve_keeps_invariants() {
        for (n, k, seed) in [(10, 2, 4u64), (16, 4, 5), (9, 1, 6)] {
            for z_mode in [ZMode::Explicit, ZMode::Implicit] {
                let p = unitary_diag_plus_rank_k(n, k, 10.0, seed).unwrap();
                let (mut s, _) = prepare(&p).unwrap();
                let cfg = SolveConfig { z_mode, ..SolveConfig::default() };
                let a = audit_solve(&mut s, &cfg).unwrap();
                assert!(a.steps > 0 && a.deflations >= n - 1, "{a:?}");
                assert!(a.worst.hessenberg <= 1e-12 && a.worst.zero_tail <= 1e-12, "{a:?}");
                assert!(a.worst.subdiagonal_identity <= 1e-12 && a.worst.z_consistency <= 1e-12, "{a:?}");
                assert!(a.worst.l_tail <= 1e-10, "{a:?}");
                assert!(a.product_drift <= 1e-10, "{a:?}");
                assert!(a.deflated_subdiagonal <= cfg.tol_deflate, "{a:?}");
                assert!(a.after_deflation <= 1e-13, "{a:?}");
            }
        }
    }

    #[test]
    fn first_column_is_only_touched_by_the_shift_rotation() {
        let (s, _) = prepare(&companion(&TestPoly::Chebyshev.poly(9)).unwrap()).unwrap();
        for mu in [C64::new(0.2, 0.1), C64::zero(), C64::new(-3.0, 0.0)] {
            assert!(first_column_defect(&s, mu).unwrap() <= 4.0 * f64::EPSILON);
        }
        let (mut s, _) = prepare(&random_unitary_plus_rank_k(10, 3, 2.0, 7).unwrap()).unwrap();
        s.lo = 3;
        s.hi = 8;
        assert!(first_column_defect(&s, C64::new(0.5, 0.5)).unwrap() <= 4.0 * f64::EPSILON);
    }
}
