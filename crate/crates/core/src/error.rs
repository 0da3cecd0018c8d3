use thiserror::Error;

/// Errors raised by the evaluators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: argument {value} outside domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// An orbit iterate fell below the rational guard before the requested
    /// accuracy was reached.
    #[error("point {point} is effectively rational (orbit terminated at depth {depth})")]
    EffectivelyRational { point: f64, depth: usize },

    #[error("{what} did not converge at {point}: error bound {bound:e} exceeds {tol:e}")]
    NonConvergent {
        what: &'static str,
        point: f64,
        bound: f64,
        tol: f64,
    },

    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid rational point {r}/{b}: need 0 < r < b and gcd(r, b) = 1")]
    InvalidRational { r: u64, b: u64 },

    #[error("no residues coprime to {b} in [{a0}*b, {a1}*b]")]
    EmptyRange { b: u64, a0: f64, a1: f64 },

    #[error("rejection rate {rate:.4} exceeds the 1% limit ({rejected} of {attempted} draws)")]
    RejectionRate {
        rate: f64,
        rejected: u64,
        attempted: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
