//! Timing sweeps over problem size and rank.
//!
//! Each point `(n, k, norm)` runs one discarded warm-up solve and then `reps`
//! timed solves with seeds `seed + rep`. The timed region is the QR iteration
//! on an already prepared representation; the dense `O(n^3)` Hessenberg
//! reduction done during preparation is not part of the structured algorithm
//! and is excluded. Error metrics come from separate untimed runs.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use structeig_core::oracle::{dense_eig, match_spectra};
use structeig_core::qr::iterate;
use structeig_core::representation::prepare;
use structeig_core::{solve, Error as CoreError, SolveConfig};

use crate::format::fmt_f64;
use crate::generate::Class;
use crate::stats::median;

pub const CSV_HEADER: &str = "n,k,norm,seed,sweeps,wall_seconds,bw_err_A,fw_err_vs_oracle,deflations";

/// Environment variable bounding the number of bench worker threads.
pub const THREADS_VAR: &str = "STRUCTEIG_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Timer {
    Wall,
    /// CPU time of the worker thread (Linux only).
    Cpu,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub class: Class,
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub norms: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub timer: Timer,
    pub solve: SolveConfig,
    /// Largest `n` compared against the dense oracle.
    pub oracle_max_n: usize,
    /// Compute `bw_err_A` and `fw_err_vs_oracle`.
    pub errors: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub n: usize,
    pub k: usize,
    pub norm: f64,
    pub seed: u64,
    pub sweeps: usize,
    pub seconds: f64,
    pub bw_err_a: Option<f64>,
    pub fw_err: Option<f64>,
    pub deflations: usize,
    pub converged: bool,
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl Row {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            self.k,
            fmt_f64(self.norm),
            self.seed,
            self.sweeps,
            fmt_f64(self.seconds),
            opt(self.bw_err_a),
            opt(self.fw_err),
            self.deflations
        )
    }
}

/// Worker count from [`THREADS_VAR`]; 1 when unset so that timings are not
/// disturbed by concurrent cells.
pub fn threads_from_env() -> Result<usize, String> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(format!("{THREADS_VAR} must be a positive integer, got {v:?}")),
        },
    }
}

/// Consumed CPU time of the calling thread.
fn thread_cpu_seconds() -> io::Result<f64> {
    let s = std::fs::read_to_string("/proc/thread-self/schedstat")?;
    let ns: u64 = s
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "unexpected schedstat format"))?;
    Ok(ns as f64 * 1e-9)
}

pub fn timer_available(t: Timer) -> bool {
    t == Timer::Wall || thread_cpu_seconds().is_ok()
}

/// Times the iteration phase of one solve. Returns the seconds and the
/// (possibly partial) report data.
fn timed_iteration(cfg: &BenchConfig, n: usize, k: usize, norm: f64, seed: u64) -> Result<(f64, Row), CoreError> {
    let p = cfg.class.build(n, k, norm, seed)?;
    let (mut s, _) = prepare(&p)?;
    let solve_cfg = SolveConfig { accumulate_transform: false, ..cfg.solve };
    let (c0, w0) = (if cfg.timer == Timer::Cpu { thread_cpu_seconds().unwrap_or(0.0) } else { 0.0 }, Instant::now());
    let result = iterate(&mut s, None, &solve_cfg);
    let seconds = match cfg.timer {
        Timer::Wall => w0.elapsed().as_secs_f64(),
        Timer::Cpu => thread_cpu_seconds().unwrap_or(0.0) - c0,
    };
    let mut row =
        Row { n, k, norm, seed, sweeps: 0, seconds, bw_err_a: None, fw_err: None, deflations: 0, converged: false };
    match result {
        Ok(r) => {
            row.sweeps = r.sweeps;
            row.deflations = r.deflations.len();
            row.converged = true;
            if cfg.errors {
                let a = p.assemble();
                if n <= cfg.oracle_max_n {
                    row.fw_err = Some(match_spectra(&r.eigenvalues, &dense_eig(&a)?)?.0);
                }
                let acc = SolveConfig { accumulate_transform: true, ..cfg.solve };
                row.bw_err_a = solve(&p, &acc)?.backward_error;
            }
        }
        Err(CoreError::NoConvergence { sweeps, converged, .. }) => {
            row.sweeps = sweeps;
            row.deflations = converged.len();
        }
        Err(e) => return Err(e),
    }
    Ok((seconds, row))
}

/// Warm-up plus all repetitions of one point, in rep order.
fn run_point(cfg: &BenchConfig, n: usize, k: usize, norm: f64) -> Result<Vec<Row>, CoreError> {
    timed_iteration(&BenchConfig { errors: false, ..cfg.clone() }, n, k, norm, cfg.seed)?;
    (0..cfg.reps).map(|rep| Ok(timed_iteration(cfg, n, k, norm, cfg.seed.wrapping_add(rep as u64))?.1)).collect()
}

/// All points of the sweep in `n`, `k`, `norm` order.
pub fn points(cfg: &BenchConfig) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &k in &cfg.ks {
            for &norm in &cfg.norms {
                out.push((n, k, norm));
            }
        }
    }
    out
}

/// Runs every point on a pool of `threads` workers. Rows come back in
/// point order, then rep order, whatever the scheduling.
pub fn run(cfg: &BenchConfig, threads: usize) -> Result<Vec<Row>, CoreError> {
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("building the bench thread pool");
    let pts = points(cfg);
    let per_point: Vec<Result<Vec<Row>, CoreError>> =
        pool.install(|| pts.par_iter().map(|&(n, k, norm)| run_point(cfg, n, k, norm)).collect());
    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_csv(w: &mut dyn Write, rows: &[Row]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    Ok(())
}

/// `(n, k, norm, median seconds)` per point, in row order.
pub fn medians(rows: &[Row]) -> Vec<(usize, usize, f64, f64)> {
    let mut out: Vec<(usize, usize, f64, Vec<f64>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|p| p.0 == r.n && p.1 == r.k && p.2 == r.norm) {
            Some(p) => p.3.push(r.seconds),
            None => out.push((r.n, r.k, r.norm, vec![r.seconds])),
        }
    }
    out.into_iter().map(|(n, k, norm, t)| (n, k, norm, median(&t))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(errors: bool) -> BenchConfig {
        BenchConfig {
            class: Class::UnitaryDiag,
            ns: vec![8, 12],
            ks: vec![1, 2],
            norms: vec![1.0],
            reps: 2,
            seed: 5,
            timer: Timer::Wall,
            solve: SolveConfig::default(),
            oracle_max_n: 10,
            errors,
        }
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let cfg = small(true);
        let rows = run(&cfg, 3).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<(usize, usize, u64)> = rows.iter().map(|r| (r.n, r.k, r.seed)).collect();
        assert_eq!(keys[..4], [(8, 1, 5), (8, 1, 6), (8, 2, 5), (8, 2, 6)]);
        for r in &rows {
            assert!(r.converged && r.sweeps > 0 && r.deflations >= r.n - 1);
            assert!(r.bw_err_a.unwrap() < 1e-13);
            assert_eq!(r.fw_err.is_some(), r.n <= 10);
        }
        // same numbers whatever the pool size, apart from the timings
        let serial = run(&cfg, 1).unwrap();
        for (a, b) in rows.iter().zip(&serial) {
            assert_eq!((a.sweeps, a.bw_err_a, a.fw_err), (b.sweeps, b.bw_err_a, b.fw_err));
        }
    }

    #[test]
    fn csv_layout() {
        let rows = run(&small(false), 1).unwrap();
        let mut out = Vec::new();
        write_csv(&mut out, &rows[..1]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[..4], ["8", "1", "1.0000000000000000e0", "5"]);
        assert!(fields[6].is_empty() && fields[7].is_empty());
        assert_eq!(medians(&rows).len(), 4);
    }

    #[test]
    fn cpu_timer_reads_thread_time() {
        if timer_available(Timer::Cpu) {
            let t0 = thread_cpu_seconds().unwrap();
            let mut x = 0u64;
            for i in 0..2_000_000u64 {
                x = x.wrapping_mul(31).wrapping_add(i);
            }
            assert!(x != 1);
            assert!(thread_cpu_seconds().unwrap() >= t0);
        }
    }
}
