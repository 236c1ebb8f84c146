use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("atomic dissipation gamma must be exactly 0 (got {0})")]
    NonzeroGamma(f64),

    #[error(
        "Kerr parameter u is zero; use the closed-form U = 0 steady state instead of the quintic"
    )]
    ZeroKerr,

    #[error("coupling lambda is zero; the quintic is singular in 1/lambda^2")]
    ZeroCoupling,

    #[error("unphysical branch: |Z| = {z_abs} exceeds 1/2")]
    UnphysicalBranch { z_abs: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Routh criterion inapplicable (a = {a} <= 0); classify with eigenvalues")]
    RouthInapplicable { a: f64 },

    #[error("no real spinodals: B^2 - 3AC = {discriminant} <= 0")]
    NoSpinodals { discriminant: f64 },

    #[error("not in the first-order regime (A = {a}, C = {c})")]
    NotFirstOrder { a: f64, c: f64 },

    #[error("no tricritical point for beta = {beta}: {detail}")]
    NoTricriticalPoint { beta: f64, detail: String },

    #[error("branch is not monotonic in the requested delta window: {0}")]
    NonMonotonicBranch(String),

    #[error("above threshold: beta(1+kappa^2) - 4 lambda^2 = {margin}, normal-phase fluctuations diverge")]
    AboveThreshold { margin: f64 },

    #[error("drift matrix is not Hurwitz (max Re = {max_re}); Lyapunov equation has no positive solution")]
    NotHurwitz { max_re: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parameter record: {0}")]
    Record(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
