use rand::Rng;

use crate::{Error, Result};

/// `⌈fraction · n⌉`, at least one.
pub fn query_count(n: usize, fraction: f64) -> usize {
    // The small offset absorbs representation error such as 0.1 · 30.
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Chooses the query points of a strided layer: `⌈fraction · n⌉` distinct
/// indices drawn uniformly without replacement, returned in ascending order.
/// `fraction = 1` selects every point without consuming randomness.
pub fn stride_sample<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("stride fraction {fraction} outside (0, 1]")));
    }
    if n == 0 {
        return Err(Error::EmptyInput("no candidate points to stride over".into()));
    }
    let count = query_count(n, fraction);
    if count == n {
        return Ok((0..n).collect());
    }
    let mut picked = rand::seq::index::sample(rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}
