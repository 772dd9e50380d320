//! Symbolic verification toolkit for nonlinear equations of the form
//! u_tx = f(t, x, u).
//!
//! The engine is deliberately small: a canonical-light expression type with
//! exact rational arithmetic, high-precision sampling for zero-testing, and on
//! top of that the domain objects (vector fields, equivalence transformations,
//! symmetry checks, algebra invariants, the case catalog and its partial
//! order).
//!
//! Identity checking is probabilistic by design: an expression is accepted as
//! zero when it vanishes within tolerance at a battery of randomly sampled
//! points in a positivity-respecting domain. Abstract function symbols are
//! evaluated through a deterministic value oracle so that identities involving
//! an arbitrary F can be tested numerically without choosing a concrete F.

pub mod catalog;
pub mod cli;
pub mod equiv;
pub mod error;
pub mod expr;
pub mod invariants;
pub mod linalg;
pub mod poset;
pub mod propcheck;
pub mod symcheck;
pub mod vfield;

pub use error::{Error, Result};
pub use expr::{parse_expr, Expr, ParseSession};

/// Default seed for all sampling ("KGLIE" in ASCII).
pub const DEFAULT_SEED: u64 = 0x4B47_4C49_45;

/// Shared configuration for every sampling-based check.
#[derive(Debug, Clone)]
pub struct Config {
    /// RNG seed; every derived stream is a pure function of this.
    pub seed: u64,
    /// Number of sample points per zero test.
    pub trials: u32,
    /// Relative tolerance: |value| <= tol * (1 + max intermediate magnitude).
    pub tol: f64,
    /// Working precision in bits.
    pub prec: u32,
    /// Largest denominator for sampled rationals.
    pub max_den: u32,
    /// Sampling interval for every variable.
    pub lo: (i64, i64),
    pub hi: (i64, i64),
    /// Minimal separation |x - t| when both variables of a protected pair
    /// occur, as (num, den).
    pub min_sep: (i64, i64),
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            trials: 25,
            tol: 1e-9,
            prec: 256,
            max_den: 10_000,
            lo: (1, 8),
            hi: (3, 1),
            min_sep: (1, 8),
        }
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Config { seed, ..Config::default() }
    }
}
