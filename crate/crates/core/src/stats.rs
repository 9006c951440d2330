//! Estimates, confidence intervals and goodness-of-fit statistics.
//!
//! Monte Carlo summaries are kept in `f64` regardless of the scalar type the
//! simulation runs in.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// A Monte Carlo estimate with its standard error and a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: u64,
}

impl Estimate {
    /// Binomial proportion with an exact Clopper-Pearson interval. With zero
    /// successes the interval is the one-sided bound `[0, 1 - 0.05^{1/n}]`.
    pub fn binomial(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "binomial estimate needs at least one trial");
        assert!(successes <= trials);
        let n = trials as f64;
        let k = successes as f64;
        let p = k / n;
        let std_error = (p * (1.0 - p) / n).sqrt();
        let (ci_low, ci_high) = if successes == 0 {
            (0.0, 1.0 - 0.05f64.powf(1.0 / n))
        } else if successes == trials {
            (0.05f64.powf(1.0 / n), 1.0)
        } else {
            let lo = Beta::new(k, n - k + 1.0).map(|b| b.inverse_cdf(0.025)).unwrap_or(0.0);
            let hi = Beta::new(k + 1.0, n - k).map(|b| b.inverse_cdf(0.975)).unwrap_or(1.0);
            (lo, hi)
        };
        Self { value: p, std_error, ci_low, ci_high, samples: trials }
    }

    /// Sample mean with a normal-approximation interval.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n > 0, "empty sample");
        let (mean, var) = mean_var(xs);
        let std_error = (var / n as f64).sqrt();
        Self {
            value: mean,
            std_error,
            ci_low: mean - Z95 * std_error,
            ci_high: mean + Z95 * std_error,
            samples: n as u64,
        }
    }

    /// Point value with a symmetric normal interval from a known standard error.
    pub fn with_std_error(value: f64, std_error: f64, samples: u64) -> Self {
        Self { value, std_error, ci_low: value - Z95 * std_error, ci_high: value + Z95 * std_error, samples }
    }

    /// Interval widened on both sides by a deterministic bias bound.
    pub fn widened(&self, bias: f64) -> (f64, f64) {
        (self.ci_low - bias, self.ci_high + bias)
    }

    pub fn overlaps(&self, other: &Estimate, extra_self: f64) -> bool {
        let (lo, hi) = self.widened(extra_self);
        lo <= other.ci_high && other.ci_low <= hi
    }
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = neumaier_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = neumaier_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, ss / (n - 1.0))
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// One-sample Kolmogorov-Smirnov distance between a sample and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail probability `P(sqrt(n_eff) D > d sqrt(n_eff))`,
/// with the Stephens small-sample correction.
pub fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ordinary least squares `y = intercept + slope x`, with the standard
/// error of the intercept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need two points for a line");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (intercept_se, slope_se) = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - intercept - slope * xi).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        ((s2 * (1.0 / n + mx * mx / sxx)).sqrt(), (s2 / sxx).sqrt())
    } else {
        (0.0, 0.0)
    };
    LinearFit { intercept, slope, intercept_se, slope_se }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_interval_contains_point() {
        let e = Estimate::binomial(30, 100);
        assert!((e.value - 0.3).abs() < 1e-15);
        assert!(e.ci_low < 0.3 && 0.3 < e.ci_high);
        assert!((e.ci_low - 0.2124).abs() < 1e-3, "{}", e.ci_low);
        assert!((e.ci_high - 0.3998).abs() < 1e-3, "{}", e.ci_high);
    }

    #[test]
    fn zero_successes_give_one_sided_bound() {
        let e = Estimate::binomial(0, 1000);
        assert_eq!(e.value, 0.0);
        assert_eq!(e.ci_low, 0.0);
        assert!((e.ci_high - (1.0 - 0.05f64.powf(1e-3))).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
    }

    #[test]
    fn ks_of_exact_grid_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_p_value_matches_known_quantile() {
        // sqrt(n) D = 1.358 is the 5% point of the Kolmogorov law.
        let n: f64 = 1e6;
        let p = ks_p_value(1.358 / n.sqrt(), n);
        assert!((p - 0.05).abs() < 2e-3, "{p}");
    }

    #[test]
    fn line_fit_exact() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = linear_fit(&x, &y);
        assert!((f.intercept - 3.0).abs() < 1e-12 && (f.slope + 2.0).abs() < 1e-12);
    }
}
