//! Reference computations written independently of the library.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// AR(1) with symmetric Pareto(α) innovations, generated without touching
/// the crate's samplers.
pub fn ar1_path(phi: f64, alpha: f64, n: usize, burn_in: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut x = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        let u: f64 = 1.0 - rng.random::<f64>();
        let e = u.powf(-1.0 / alpha) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        x = phi * x + e;
        if t >= burn_in {
            out.push(x);
        }
    }
    out
}

/// Runs estimator of the extremal index: the fraction of exceedances of
/// `u` followed by `run` non-exceedances.
pub fn runs_theta(path: &[f64], u: f64, run: usize) -> f64 {
    let exc: Vec<usize> = path.iter().enumerate().filter(|(_, v)| v.abs() > u).map(|(i, _)| i).collect();
    if exc.is_empty() {
        return f64::NAN;
    }
    let mut clusters = 0;
    for w in exc.windows(2) {
        if w[1] - w[0] > run {
            clusters += 1;
        }
    }
    clusters += 1;
    clusters as f64 / exc.len() as f64
}

/// Empirical upper quantile of `|path|`.
pub fn modulus_quantile(path: &[f64], q: f64) -> f64 {
    let mut m: Vec<f64> = path.iter().map(|v| v.abs()).collect();
    let idx = ((m.len() as f64) * q) as usize;
    let (_, v, _) = m.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap());
    *v
}

/// `Cov(1{V_0 < q}, 1{V_h < q})` for the stationary binary-expansion
/// process, where `V = 1 - ξ/2` is uniform. With `Q = q 2^h` the joint
/// probability is `2^{-h} ∫_{Q-q}^{Q} ⌈s⌉ ds`; subtracting `q²` in closed
/// form avoids cancellation at large lags.
pub fn assoc_cov(q: f64, h: u32) -> f64 {
    let scale = 2f64.powi(-(h as i32));
    let big = q / scale;
    let k = big.ceil();
    if big - q >= k - 1.0 {
        q * scale * (k - big)
    } else {
        scale * (big - k + 1.0) * (1.0 - q)
    }
}

/// `n Σ_{j=m+1}^{n} Cov(1{ξ_1 > u_n}, 1{ξ_j > u_n})` with `q = 1/n`.
pub fn assoc_partial_sum(n: usize, m: usize) -> f64 {
    let q = 1.0 / n as f64;
    (m..n).map(|h| if h > 200 { 0.0 } else { assoc_cov(q, h as u32) }).sum::<f64>() * n as f64
}

pub fn poisson_pmf(k: u64, mean: f64) -> f64 {
    (-mean + k as f64 * mean.ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
}

/// `e^{-λ}` and `ν(mass)` style checks compare a frequency to `p` using
/// a normal band of `z` binomial standard errors.
pub fn within_binomial(hits: u64, trials: u64, p: f64, z: f64) -> bool {
    let phat = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    (phat - p).abs() <= z * se
}

/// Two-sided Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Geometric `π_k = 2^{-k}`, truncated with the remainder on the last cell.
pub fn geometric_half(len: usize) -> Vec<f64> {
    let mut pi: Vec<f64> = (1..=len).map(|k| 0.5f64.powi(k as i32)).collect();
    pi[len - 1] *= 2.0;
    pi
}
