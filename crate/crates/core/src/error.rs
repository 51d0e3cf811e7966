use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unitary part is not unitary: ||U^H U - I||_inf = {0:e}")]
    NotUnitary(f64),
    #[error("{which} is numerically rank deficient (sigma_min/sigma_max = {ratio:e}); reduce k")]
    RankDeficient { which: &'static str, ratio: f64 },
    #[error("leading coefficient is singular or zero")]
    SingularLeading,
    #[error("index range {lo}..{hi} outside 0..{size}")]
    Range { lo: usize, hi: usize, size: usize },
    #[error("active window has length {0}, need at least 2")]
    WindowTooSmall(usize),
    #[error("no convergence in window {lo}..{hi} after {sweeps} sweeps")]
    NoConvergence { lo: usize, hi: usize, sweeps: usize, converged: alloc::vec::Vec<(usize, crate::C64)> },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
