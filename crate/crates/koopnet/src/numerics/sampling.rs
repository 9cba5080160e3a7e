//! Stratified sampling utilities for initial-condition parameters.

use crate::error::{Error, Result};
use crate::numerics::matrix::Mat;
use crate::numerics::rng::CounterRng;

/// Latin hypercube sample: an m x d matrix in [0,1) where each dimension
/// places exactly one point in each of the m strata [i/m, (i+1)/m).
pub fn latin_hypercube(d: usize, m: usize, rng: &mut CounterRng) -> Result<Mat> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "latin hypercube needs d >= 1 and m >= 1, got d={d} m={m}"
        )));
    }
    let mut out = Mat::zeros(m, d);
    let mut strata: Vec<usize> = (0..m).collect();
    for j in 0..d {
        for (i, s) in strata.iter().enumerate() {
            out[(i, j)] = (*s as f64 + rng.next_f64()) / m as f64;
        }
        rng.shuffle(&mut strata);
    }
    Ok(out)
}

/// Draw from a geometric distribution truncated to 1..=max:
/// P(k) proportional to (1-p)^(k-1) * p, renormalized.
pub fn truncated_geometric(p: f64, max: usize, rng: &mut CounterRng) -> Result<usize> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "geometric success probability must be in (0,1), got {p}"
        )));
    }
    if max == 0 {
        return Err(Error::InvalidArgument("geometric max must be >= 1".into()));
    }
    if max == 1 {
        return Ok(1);
    }
    let q = 1.0 - p;
    // Inverse CDF on the renormalized distribution.
    let total = 1.0 - q.powi(max as i32);
    let u = rng.next_f64() * total;
    let mut cdf = 0.0;
    for k in 1..=max {
        cdf += q.powi(k as i32 - 1) * p;
        if u < cdf {
            return Ok(k);
        }
    }
    Ok(max)
}
