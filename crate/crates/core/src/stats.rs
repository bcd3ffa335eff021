//! Distribution functions and the Kolmogorov–Smirnov distance.

use libm::{erf, erfc};

/// CDF of N(0, var) at x. A zero variance gives the step function at 0.
pub fn normal_cdf(x: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if x >= 0.0 { 1.0 } else { 0.0 };
    }
    0.5 * erfc(-x / (2.0 * var).sqrt())
}

/// P(a ≤ X ≤ b) for X ~ N(0, var).
pub fn normal_interval(a: f64, b: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if a <= 0.0 && 0.0 <= b { 1.0 } else { 0.0 };
    }
    let s = (2.0 * var).sqrt();
    (0.5 * (erf(b / s) - erf(a / s))).max(0.0)
}

pub fn normal_density(x: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 0.0;
    }
    (-x * x / (2.0 * var)).exp() / (std::f64::consts::TAU * var).sqrt()
}

/// sup_x |F_n(x) − F(x)| for the empirical CDF of `samples`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        // ties: the empirical CDF jumps once over the whole run
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = cdf(s[i]);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}
