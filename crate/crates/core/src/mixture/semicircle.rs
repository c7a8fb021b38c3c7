//! Semicircle law on `[-2, 2]` and the edge large-deviation rate.

use std::f64::consts::PI;

/// CDF of the semicircle law with support `[-2, 2]`.
pub fn semicircle_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t <= -2.0 {
        return 0.0;
    }
    if t >= 2.0 {
        return 1.0;
    }
    let v = 0.5 + t * (4.0 - t * t).sqrt() / (4.0 * PI) + (t / 2.0).asin() / PI;
    v.clamp(0.0, 1.0)
}

/// Rate `J(t) = int_t^{-2} sqrt(s^2/4 - 1) ds` of the smallest GOE eigenvalue.
///
/// Returns `f64::INFINITY` for `t > -2`, where no deviation below the edge
/// occurs.
pub fn ldp_rate(t: f64) -> f64 {
    if t > -2.0 {
        return f64::INFINITY;
    }
    let u = -t;
    let root = (u * u - 4.0).max(0.0).sqrt();
    // 1/2 int_2^u sqrt(x^2 - 4) dx
    0.5 * (0.5 * u * root - 2.0 * ((u + root) / 2.0).ln())
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and
/// `cdf`. Sorts a copy; NaNs are ordered last.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}
