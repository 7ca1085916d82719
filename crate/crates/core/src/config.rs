//! Process-wide limits.

use crate::{Error, Result};

/// Default cap on the qubit count for dense computations.
pub const DEFAULT_DENSE_CEILING: usize = 6;
/// Hard cap; 2^10 x 2^10 complex matrices are the practical limit.
pub const MAX_DENSE_CEILING: usize = 10;
/// Environment variable overriding the dense ceiling.
pub const CEILING_ENV: &str = "GEOCOMP_DENSE_CEILING";

/// The active dense ceiling, read from `GEOCOMP_DENSE_CEILING` when set.
///
/// Values above [`MAX_DENSE_CEILING`] are clamped; unparsable values fall
/// back to the default.
pub fn dense_ceiling() -> usize {
    std::env::var(CEILING_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .map(|v| v.clamp(1, MAX_DENSE_CEILING))
        .unwrap_or(DEFAULT_DENSE_CEILING)
}

/// Fails when `n` is zero or above the dense ceiling.
pub fn check_qubits(n: usize) -> Result<()> {
    let ceiling = dense_ceiling();
    if n == 0 || n > ceiling {
        return Err(Error::QubitCount { n, ceiling });
    }
    Ok(())
}
