//! Interval estimates, goodness of fit, and exact Poisson variates.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Two-sided confidence level used for every interval in the crate.
pub const CONFIDENCE: f64 = 0.99;

/// Standard normal quantile for a two-sided interval at `level`.
pub fn z_two_sided(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(0.5 + level / 2.0)
}

pub fn z99() -> f64 {
    z_two_sided(CONFIDENCE)
}

/// A point value with a symmetric uncertainty (CI half-width or a
/// deterministic error bound; zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, half_width: 0.0 }
    }

    pub fn lo(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.value + self.half_width
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Streaming first and second moments.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    /// Normal-approximation interval for the mean.
    pub fn mean_estimate(&self, z: f64) -> Estimate {
        Estimate { value: self.mean(), half_width: z * self.std_error() }
    }
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Chi-square test of observed counts against `Poisson(mean)`.
///
/// Cells `{0}, {1}, …` are pooled left to right until each expected count is
/// at least 5; the remaining upper tail forms the last cell. A single cell
/// (all mass expected in one pooled bin) passes trivially with `p = 1`.
pub fn poisson_gof(samples: &[u64], mean: f64) -> GofResult {
    let total = samples.len() as f64;
    let max_obs = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut observed = vec![0u64; max_obs + 1];
    for &s in samples {
        observed[s as usize] += 1;
    }
    let pmf = |k: usize| -> f64 {
        if mean == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        (k as f64 * mean.ln() - mean - ln_gamma(k as f64 + 1.0)).exp()
    };

    // (observed, expected) per pooled cell; the final cell absorbs the tail.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs_acc, mut exp_acc, mut cdf) = (0.0, 0.0, 0.0);
    let mut k = 0usize;
    loop {
        let p = pmf(k);
        cdf += p;
        obs_acc += observed.get(k).copied().unwrap_or(0) as f64;
        exp_acc += p * total;
        let tail_expected = (1.0 - cdf).max(0.0) * total;
        if exp_acc >= 5.0 && tail_expected >= 5.0 {
            cells.push((obs_acc, exp_acc));
            obs_acc = 0.0;
            exp_acc = 0.0;
        } else if tail_expected < 5.0 && k >= max_obs {
            break;
        }
        k += 1;
        if k > 100_000 {
            break;
        }
    }
    let tail_obs: f64 = observed.iter().skip(k + 1).map(|&o| o as f64).sum();
    let tail_exp = (1.0 - cdf).max(0.0) * total;
    let last = (obs_acc + tail_obs, exp_acc + tail_exp);
    match cells.last_mut() {
        Some(prev) if last.1 < 5.0 => {
            prev.0 += last.0;
            prev.1 += last.1;
        }
        _ => cells.push(last),
    }

    let bins = cells.len();
    if bins < 2 {
        return GofResult { statistic: 0.0, dof: 0, p_value: 1.0, bins };
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = bins - 1;
    let chi = ChiSquared::new(dof as f64).expect("positive dof");
    let p_value = 1.0 - chi.cdf(statistic);
    GofResult { statistic, dof, p_value, bins }
}

/// Uniform variate on the open interval `(0, 1)`.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Exact Poisson variate: sequential inversion below mean 30, PTRS
/// transformed rejection above.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u = open01(rng);
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p == 0.0 && cdf < u {
                // rounding left a sliver of mass unassigned
                break;
            }
        }
        return k;
    }
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = open01(rng) - 0.5;
        let v = open01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream_rng;

    #[test]
    fn z99_value() {
        assert!((z99() - 2.575_829_303_548_901).abs() < 1e-9);
    }

    #[test]
    fn wilson_brackets_proportion() {
        let (lo, hi) = wilson(30, 100, z99());
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo0, hi0) = wilson(0, 1000, z99());
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0 && hi0 < 0.01);
    }

    #[test]
    fn poisson_moments_small_and_large() {
        for &mean in &[0.3f64, 4.0, 29.5, 30.0, 120.0] {
            let mut rng = stream_rng(99, mean.to_bits());
            let mut m = Moments::default();
            for _ in 0..200_000 {
                m.push(poisson(&mut rng, mean) as f64);
            }
            let se = (mean / 200_000.0).sqrt();
            assert!((m.mean() - mean).abs() < 5.0 * se, "mean {mean}: {}", m.mean());
            assert!((m.variance() / mean - 1.0).abs() < 0.03, "var {mean}: {}", m.variance());
        }
    }

    #[test]
    fn poisson_gof_accepts_poisson_rejects_overdispersed() {
        let mut rng = stream_rng(5, 0);
        let good: Vec<u64> = (0..20_000).map(|_| poisson(&mut rng, 1.0)).collect();
        assert!(poisson_gof(&good, 1.0).p_value > 0.001);
        let doubled: Vec<u64> = (0..20_000).map(|_| 2 * poisson(&mut rng, 0.5)).collect();
        assert!(poisson_gof(&doubled, 1.0).p_value < 1e-6);
        let degenerate = vec![0u64; 500];
        assert_eq!(poisson_gof(&degenerate, 1e-6).p_value, 1.0);
    }

    #[test]
    fn open01_never_hits_endpoints() {
        let mut rng = stream_rng(1, 1);
        for _ in 0..100_000 {
            let u = open01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
