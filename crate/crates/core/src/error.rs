//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "rate constants must satisfy k1 > 0, km1 >= 0, k2 > 0; got k1={k1}, km1={km1}, k2={k2}"
    )]
    InvalidRates { k1: f64, km1: f64, k2: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config line {line}: unknown key `{key}`")]
    UnknownConfigKey { line: usize, key: String },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("jump count exceeded the cap of {cap} at t={t}")]
    JumpCapExceeded { cap: u64, t: f64 },

    #[error("propensity became non-finite at copy state ({xs}, {xe}, {xc}, {xp})")]
    NonFinitePropensity { xs: u64, xe: u64, xc: u64, xp: u64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid point {value} lies outside the trajectory horizon [0, {t_end}]")]
    GridOutOfRange { value: f64, t_end: f64 },

    #[error("evaluation time {t} lies outside the path horizon [{t0}, {t1}]")]
    HorizonMismatch { t: f64, t0: f64, t1: f64 },

    #[error("point (z_v={z_v}, z_c={z_c}) violates the domain 0 <= z_c <= z_v")]
    DomainViolation { z_v: f64, z_c: f64 },

    #[error("state (z_c={z_c}, z_v={z_v}) at t={t} is not covered by the occupation bins")]
    BinCoverage { z_c: f64, z_v: f64, t: f64 },

    #[error("empty sample passed to a distribution statistic")]
    EmptySample,

    #[error("rate fit needs at least 3 strictly positive errors at distinct n values")]
    DegenerateFit,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
