//! One solve plus the error metrics the front end reports.

use serde::Serialize;
use structeig_core::builders::ScalarPoly;
use structeig_core::oracle::{backward_error_poly, dense_eig, match_spectra, DwC};
use structeig_core::representation::{ProblemInput, UnitaryKind};
use structeig_core::{solve, Error as CoreError, SolveConfig, C64};

use crate::format::{pair, Pair};

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Outcome {
    pub n: usize,
    pub k: usize,
    pub unitary: &'static str,
    pub converged: bool,
    /// All eigenvalues on success; only the converged ones otherwise.
    pub eigenvalues: Vec<Pair>,
    /// Active window `[lo, hi)` left when the sweep budget ran out.
    pub unconverged_window: Option<[usize; 2]>,
    pub sweeps: usize,
    /// `[index, sweep]` of every deflation.
    pub deflations: Vec<[usize; 2]>,
    pub zero_shift_steps: usize,
    pub exceptional_shifts: usize,
    pub norm_inf_a: f64,
    /// `||P1^H A P1 - A_final||_inf / ||A||_inf`, with `--accumulate`.
    pub bw_err_a: Option<f64>,
    /// Mean matched relative distance to the dense reference eigenvalues.
    pub fw_err_vs_oracle: Option<f64>,
}

fn kind_name(k: UnitaryKind) -> &'static str {
    match k {
        UnitaryKind::Dense => "dense",
        UnitaryKind::Diagonal => "diagonal",
        UnitaryKind::Hessenberg => "hessenberg",
    }
}

/// Solves `p`. Running out of sweeps is not an error here; it yields an
/// outcome with `converged = false`.
pub fn run(p: &ProblemInput, cfg: &SolveConfig, compare_oracle: bool) -> Result<Outcome, CoreError> {
    let mut out = Outcome {
        n: p.n(),
        k: p.k(),
        unitary: kind_name(p.kind),
        converged: false,
        eigenvalues: Vec::new(),
        unconverged_window: None,
        sweeps: 0,
        deflations: Vec::new(),
        zero_shift_steps: 0,
        exceptional_shifts: 0,
        norm_inf_a: p.assemble().norm_inf(),
        bw_err_a: None,
        fw_err_vs_oracle: None,
    };
    match solve(p, cfg) {
        Ok(r) => {
            out.converged = true;
            out.sweeps = r.sweeps;
            out.deflations = r.deflations.iter().map(|&(i, s)| [i, s]).collect();
            out.zero_shift_steps = r.zero_shift_steps;
            out.exceptional_shifts = r.exceptional_shifts;
            out.bw_err_a = r.backward_error;
            if compare_oracle {
                let reference = dense_eig(&p.assemble())?;
                out.fw_err_vs_oracle = Some(match_spectra(&r.eigenvalues, &reference)?.0);
            }
            out.eigenvalues = r.eigenvalues.iter().map(|&z| pair(z)).collect();
        }
        Err(CoreError::NoConvergence { lo, hi, sweeps, converged }) => {
            out.sweeps = sweeps;
            out.unconverged_window = Some([lo, hi]);
            out.eigenvalues = converged.iter().map(|&(_, z)| pair(z)).collect();
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// Relative change of the coefficients caused by dividing by the leading
/// one in floating point: `max_i |fl(p_i / p_0) p_0 - p_i| / max_i |p_i|`,
/// with the product evaluated in double-word arithmetic.
pub fn monic_perturbation(p: &ScalarPoly) -> f64 {
    let lead = p.coeffs[0];
    let scale = p.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    p.monic()
        .iter()
        .zip(&p.coeffs)
        .map(|(m, c)| DwC::from_c64(*m).mul_c64(lead).sub(DwC::from_c64(*c)).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Backward error of computed roots in terms of the polynomial coefficients.
pub fn poly_error(p: &ScalarPoly, roots: &[C64]) -> f64 {
    backward_error_poly(&p.coeffs, roots)
}

/// Sorted by real part, then imaginary part.
pub fn sort_roots(roots: &mut [C64]) {
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use structeig_core::builders::{companion, TestPoly};

    #[test]
    fn monic_input_has_no_perturbation() {
        assert_eq!(monic_perturbation(&TestPoly::Wilkinson.poly(10)), 0.0);
        let p = ScalarPoly::from_real(&[3.0, 1.0, 1.0]).unwrap();
        let d = monic_perturbation(&p);
        assert!(d > 0.0 && d < 2.0 * f64::EPSILON, "{d}");
    }

    #[test]
    fn partial_outcome_on_tiny_budget() {
        let p = companion(&TestPoly::Wilkinson.poly(12)).unwrap();
        let cfg = SolveConfig { max_sweeps_per_eig: 1, ..SolveConfig::default() };
        let o = run(&p, &cfg, false).unwrap();
        assert!(!o.converged);
        let [lo, hi] = o.unconverged_window.unwrap();
        assert!(hi - lo >= 2 && o.eigenvalues.len() == 12 - hi);
    }

    #[test]
    fn converged_outcome_reports_metrics() {
        let p = companion(&ScalarPoly::from_real(&[1.0, 0.0, -1.0]).unwrap()).unwrap();
        let cfg = SolveConfig { accumulate_transform: true, ..SolveConfig::default() };
        let o = run(&p, &cfg, true).unwrap();
        assert!(o.converged && o.eigenvalues.len() == 2);
        assert!(o.bw_err_a.unwrap() < 1e-15 && o.fw_err_vs_oracle.unwrap() < 1e-15);
        let mut r: Vec<C64> = o.eigenvalues.iter().map(|p| C64::new(p[0], p[1])).collect();
        sort_roots(&mut r);
        assert!((r[0] + 1.0).norm() < 1e-15 && (r[1] - 1.0).norm() < 1e-15);
    }
}
