//! Central finite-difference gradient oracle.
//!
//! Deliberately independent of the backward pass: it only re-evaluates the
//! loss at perturbed parameter values. Used by tests to certify every layer
//! type and every composed model.

/// Central finite differences of `f` at `x`.
pub fn finite_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Central finite differences at selected coordinates only.
pub fn finite_difference_at(
    mut f: impl FnMut(&[f64]) -> f64,
    x: &[f64],
    indices: &[usize],
    h: f64,
) -> Vec<f64> {
    let mut grad = Vec::with_capacity(indices.len());
    let mut xp = x.to_vec();
    for &i in indices {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        grad.push((fp - fm) / (2.0 * h));
    }
    grad
}

/// Max relative error between analytic and numeric gradients, denominated by
/// max(|analytic|, |numeric|, floor).
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
