//! Interval estimates and goodness-of-fit helpers for the Monte Carlo checks.

use crate::analytic::gaussian_tail;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionEstimate {
    pub estimate: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl ProportionEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

pub fn wilson_interval(successes: u64, trials: u64) -> ProportionEstimate {
    if trials == 0 {
        return ProportionEstimate {
            estimate: 0.0,
            successes,
            trials,
            ci_low: 0.0,
            ci_high: 1.0,
        };
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let spread = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ProportionEstimate {
        estimate: p,
        successes,
        trials,
        ci_low: if successes == 0 { 0.0 } else { (centre - spread).max(0.0) },
        ci_high: if successes == trials { 1.0 } else { (centre + spread).min(1.0) },
    }
}

/// Pooled two-proportion z statistic and its two-sided p-value.
pub fn two_proportion_test(a: &ProportionEstimate, b: &ProportionEstimate) -> (f64, f64) {
    let (n1, n2) = (a.trials as f64, b.trials as f64);
    let pooled = (a.successes + b.successes) as f64 / (n1 + n2);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        return (0.0, 1.0);
    }
    let z = (a.estimate - b.estimate) / se;
    (z, 2.0 * gaussian_tail(z.abs()))
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
/// Sorts `samples` in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let i = i as f64;
            (f - i / n).max((i + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value `P(sqrt(n) D > x)` of the Kolmogorov distribution, with
/// the usual small-sample correction `sqrt(n) + 0.12 + 0.11 / sqrt(n)`.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    let x = (rn + 0.12 + 0.11 / rn) * statistic;
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
