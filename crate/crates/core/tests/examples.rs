//! Worked examples for the solver pipeline, checked against known roots,
//! hand-derived values and the dense reference solver.

use structeig_core::builders::{
    block_companion, companion, random_matrix_poly, random_unitary_plus_rank_k, unitary_diag_plus_rank_k, ScalarPoly,
    TestPoly,
};
use structeig_core::factors::recover_z;
use structeig_core::oracle::{backward_error_poly, dense_eig, match_spectra};
use structeig_core::qr::{deflate_scan, iterate, qr_step, wilkinson_shift, zero_shift_step};
use structeig_core::representation::prepare;
use structeig_core::{solve, SolveConfig, C64, EPS};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn accumulate() -> SolveConfig {
    SolveConfig { accumulate_transform: true, ..SolveConfig::default() }
}

#[test]
fn wilkinson_10_backward_errors() {
    let p = TestPoly::Wilkinson.poly(10);
    let r = solve(&companion(&p).unwrap(), &accumulate()).unwrap();
    assert!(r.backward_error.unwrap() <= 1e-13, "{:e}", r.backward_error.unwrap());
    let bp = backward_error_poly(&p.coeffs, &r.eigenvalues);
    assert!(bp <= 1e-12, "{bp:e}");
    let (fw, _) = match_spectra(&r.eigenvalues, &TestPoly::Wilkinson.roots(10)).unwrap();
    assert!(fw <= 1e-8, "{fw:e}");
}

#[test]
fn geometric_sum_roots_on_the_unit_circle() {
    let r = solve(&companion(&TestPoly::GeometricSum.poly(20)).unwrap(), &SolveConfig::default()).unwrap();
    let want: Vec<C64> = (1..=20).map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 21.0)).collect();
    let (_, pairing) = match_spectra(&r.eigenvalues, &want).unwrap();
    let worst = pairing.iter().enumerate().map(|(i, &j)| (r.eigenvalues[i] - want[j]).norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn zero_shift_removes_a_zero_root() {
    // x^2 - x = x (x - 1)
    let p = companion(&ScalarPoly::from_real(&[1.0, -1.0, 0.0]).unwrap()).unwrap();
    let (mut s, _) = prepare(&p).unwrap();
    zero_shift_step(&mut s, None).unwrap();
    // the zero root ends up in the trailing position, exactly decoupled
    deflate_scan(&mut s, EPS);
    assert!(s.coupling(0).is_identity());
    let a = s.materialize();
    assert!(a[(1, 1)].norm() <= 1e-15 && (a[(0, 0)] - c(1.0)).norm() <= 1e-15, "{} {}", a[(0, 0)], a[(1, 1)]);
}

#[test]
fn zero_shift_on_a_nonsingular_matrix_is_a_plain_step() {
    let p = random_unitary_plus_rank_k(9, 2, 3.0, 21).unwrap();
    let (mut s, _) = prepare(&p).unwrap();
    let before = dense_eig(&s.materialize().submatrix(0, 9, 0, 9)).unwrap();
    zero_shift_step(&mut s, None).unwrap();
    let after = dense_eig(&s.materialize().submatrix(0, 9, 0, 9)).unwrap();
    assert!(match_spectra(&after, &before).unwrap().0 <= 1e-12);
}

#[test]
fn triple_zero_root() {
    let p = companion(&ScalarPoly::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
    let r = solve(&p, &SolveConfig::default()).unwrap();
    // eigenvalue condition grows like eps^(1/3)
    assert!(r.eigenvalues.iter().all(|e| e.norm() <= 1e-5), "{:?}", r.eigenvalues);
}

#[test]
fn converged_state_deflates_everywhere() {
    let p = random_unitary_plus_rank_k(8, 2, 2.0, 3).unwrap();
    let (mut s, _) = prepare(&p).unwrap();
    iterate(&mut s, None, &SolveConfig::default()).unwrap();
    for i in 0..7 {
        assert!(s.coupling(i).is_identity(), "position {i} still coupled");
    }
    assert_eq!(s.hi - s.lo, 0);
    // a deflated trailing block is upper triangular
    s.lo = 0;
    s.hi = 8;
    let w = s.window(6..8, 6..8).unwrap();
    assert!(w[(1, 0)].norm() <= 1e-14 * p.assemble().norm_inf());
}

#[test]
fn small_random_cases_and_large_rank() {
    let r = solve(&random_unitary_plus_rank_k(50, 2, 1.0, 1).unwrap(), &accumulate()).unwrap();
    assert!(r.backward_error.unwrap() <= 1e-13, "{:e}", r.backward_error.unwrap());
    let r = solve(&unitary_diag_plus_rank_k(50, 1, 1.0, 1).unwrap(), &accumulate()).unwrap();
    assert!(r.backward_error.unwrap() <= 1e-13, "{:e}", r.backward_error.unwrap());
    let p = unitary_diag_plus_rank_k(50, 25, 1.0, 1).unwrap();
    let r = solve(&p, &accumulate()).unwrap();
    assert_eq!(r.eigenvalues.len(), 50);
    assert!(r.backward_error.unwrap() <= 1e-12, "{:e}", r.backward_error.unwrap());
}

#[test]
fn random_block_companion_k5_d10() {
    let p = block_companion(&random_matrix_poly(5, 10, 1.0, 2).unwrap()).unwrap();
    let r = solve(&p, &accumulate()).unwrap();
    let (fw, _) = match_spectra(&r.eigenvalues, &dense_eig(&p.assemble()).unwrap()).unwrap();
    assert!(fw <= 1e-12, "{fw:e}");
    assert!(r.backward_error.unwrap() <= 1e-13, "{:e}", r.backward_error.unwrap());
}

#[test]
fn products_are_conserved_and_z_tracks_l_and_q() {
    let p = unitary_diag_plus_rank_k(12, 3, 20.0, 8).unwrap();
    let (mut s, _) = prepare(&p).unwrap();
    let (pl, pr) = s.outermost_products();
    let scale = p.assemble().norm_inf();
    for step in 0..10 {
        let mu = wilkinson_shift(&s).unwrap();
        qr_step(&mut s, mu, None).unwrap();
        if step == 4 {
            let (ql, qr) = s.outermost_products();
            assert!((ql - pl).abs() <= 1e-10 * pl && (qr - pr).abs() <= 1e-10 * pr);
        }
    }
    let z = recover_z(&s.l, &s.f, s.n);
    assert!((&z - &s.f.z).max_abs() <= 1e-10 * scale);
}

#[test]
fn polynomial_backward_error_by_hand() {
    // (x - 1 - d)(x + 1) = x^2 - d x - (1 + d)
    let p = [c(1.0), c(0.0), c(-1.0)];
    let r = 1.0 + 1e-10;
    let d = r - 1.0;
    let e = backward_error_poly(&p, &[c(r), c(-1.0)]);
    assert!((e - d).abs() <= 1e-22, "{e:e} vs {d:e}");
    assert!(backward_error_poly(&p, &[c(1.0), c(-1.0)]) == 0.0);
}

#[test]
fn forward_error_by_hand() {
    let (e, _) = match_spectra(&[c(1.0 + 1e-8), c(2.0)], &[c(1.0), c(2.0)]).unwrap();
    let d = (1.0 + 1e-8) - 1.0;
    assert!((e - d / 2.0).abs() <= 1e-22, "{e:e}");
}
