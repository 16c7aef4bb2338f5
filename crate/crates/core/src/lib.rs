//! Certified computational laboratory for the diagonally constrained shifted
//! Waring problem.
//!
//! Given `s, k >= 2` and shifts `theta_i` in (0,1), the tool studies integer
//! solutions of
//!
//! ```text
//! |(x_1 - theta_1)^k + ... + (x_s - theta_s)^k - tau| < eta
//! ```
//!
//! subject to the diagonal constraint `|x_i - (tau/s)^(1/k)| < radius`. It
//! can
//!
//! * construct the witness family `tau_m` along which no constrained
//!   representation exists ([`witness`]),
//! * run certified exhaustive window searches with exact-rational and
//!   ball-arithmetic routes ([`search`]),
//! * derive effective constant chains `(c, c', m0, c1..c8)` that make the
//!   non-representability statement checkable in exact arithmetic
//!   ([`certify`]),
//! * measure solution-free gaps and solvability phase diagrams ([`scan`]).
//!
//! All verdicts are three-valued: certified true, certified false, or
//! undecided at the configured precision cap. Nothing is ever silently
//! rounded into a decision.

pub mod ball;
pub mod certify;
pub mod model;
pub mod report;
pub mod scan;
pub mod search;
pub mod witness;

pub use ball::{cmp_lt, Ball, BallError, Dyadic, Rat, RatParseError, TriBool};
pub use model::{Instance, Precision};

/// Run a fallible map over an indexed set of jobs, sequentially or on the
/// rayon pool, preserving job order in the output. The sequential and
/// parallel routes compute identical per-job values, so downstream merges
/// are byte-deterministic either way.
pub(crate) fn run_jobs<T, O, F>(items: Vec<T>, parallel: bool, f: F) -> Vec<O>
where
    T: Send,
    O: Send,
    F: Fn(T) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    items.into_iter().map(f).collect()
}

/// Size the global worker pool (effective once per process). Returns false
/// when the `parallel` feature is off or the pool was already built.
/// Worker count never affects output bytes, only wall time.
pub fn configure_workers(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        if n > 1 {
            return rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok();
        }
        true
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// Execution mode for the data-parallel inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    Sequential,
    Parallel,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        matches!(self, Parallelism::Parallel)
    }
}

#[allow(clippy::derivable_impls)] // the default depends on the feature set
impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}
