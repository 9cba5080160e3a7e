//! Helpers shared by the gradient-certification tests.

pub const H: f64 = 1e-6;
pub const TOL: f64 = 1e-6;
pub const FLOOR: f64 = 1e-8;

/// Below this magnitude a component is smaller than what central differences
/// at h = 1e-6 can resolve relative to an O(1) loss (roundoff is about
/// eps * |loss| / (2h) per evaluation chain); such components are certified
/// with an absolute noise bound instead of the relative one.
pub const RESOLVABLE: f64 = 5e-3;
pub const ABS_NOISE: f64 = 5e-9;

pub fn assert_gradients_match(analytic: &[f64], numeric: &[f64], what: &str) {
    assert_eq!(analytic.len(), numeric.len());
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let denom = a.abs().max(n.abs()).max(FLOOR);
        if denom >= RESOLVABLE {
            let rel = (a - n).abs() / denom;
            assert!(rel <= TOL, "{what}[{i}]: rel error {rel} (a={a}, n={n})");
        } else {
            assert!(
                (a - n).abs() <= ABS_NOISE,
                "{what}[{i}]: sub-resolvable component disagrees (a={a}, n={n})"
            );
        }
    }
}

/// Max relative error over the resolvable components (reported by the
/// acceptance suite).
#[allow(dead_code)]
pub fn max_resolvable_rel_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .filter_map(|(&a, &n)| {
            let denom = a.abs().max(n.abs()).max(FLOOR);
            (denom >= RESOLVABLE).then_some((a - n).abs() / denom)
        })
        .fold(0.0, f64::max)
}
