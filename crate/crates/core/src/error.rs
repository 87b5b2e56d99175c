//! Error type shared by every module.

/// Everything that can go wrong when building symbols, operators and
/// subspaces or when a precondition of a theorem-level check fails.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("truncation order {order} too small for symbol band {band}")]
    OrderTooSmall { order: usize, band: usize },

    #[error("guard band {guard} leaves no trusted window at order {order}")]
    GuardExhausted { guard: usize, order: usize },

    #[error("ambient mismatch: order/dim ({0}, {1}) vs ({2}, {3})")]
    AmbientMismatch(usize, usize, usize, usize),

    #[error("symbol is not analytic (n_min = {n_min})")]
    NotAnalytic { n_min: i64 },

    #[error("inner certification failed: residual {residual:.3e} exceeds {tol:.3e}")]
    NotInner { residual: f64, tol: f64 },

    #[error("symbol is not two-sided inner")]
    NotTwoSided,

    #[error("symbol is not pure: unitary part has rank {rank}")]
    NotPure { rank: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("free term {index} violates membership: residual {residual:.3e}")]
    Membership { index: usize, residual: f64 },

    #[error("evaluation point |w| = {modulus:.3} outside the certified disk")]
    OutsideDisk { modulus: f64 },

    #[error("Szego tail {tail:.3e} exceeds 1e-8 at this order")]
    SzegoTail { tail: f64 },

    #[error("supplied subspace is not a defect space: {0}")]
    DefectSpace(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
