//! Slope regression, Hill estimator, bootstrap intervals, and KS / chi-square helpers.

use crate::error::{Error, Result};
use crate::sampling::RngStream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const DEFAULT_BOOTSTRAP_REPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_grid: Vec<f64>,
    /// Root mean square of the log-log residuals.
    pub residual_rms: f64,
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all abscissae equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Slope of `log y` against `log x` over points with `x` in `window`, with a pairs-bootstrap interval.
pub fn loglog_slope(points: &[(f64, f64)], window: (f64, f64), reps: usize, seed: u64) -> Result<TailEstimate> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, y)| x >= window.0 && x <= window.1 && x > 0.0 && y > 0.0)
        .collect();
    if pts.len() < 3 {
        return Err(Error::EmptySample);
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, rms) = linear_fit(&lx, &ly)?;
    let mut rng = RngStream::new(seed, 0);
    let mut boot = Vec::with_capacity(reps);
    let (mut bx, mut by) = (vec![0.0; lx.len()], vec![0.0; lx.len()]);
    for _ in 0..reps {
        for k in 0..lx.len() {
            let i = rng.random_range(0..lx.len());
            bx[k] = lx[i];
            by[k] = ly[i];
        }
        if let Ok((s, _, _)) = linear_fit(&bx, &by) {
            boot.push(s);
        }
    }
    let (lo, hi) = percentile_interval(&mut boot, slope);
    Ok(TailEstimate { slope, intercept, ci_low: lo, ci_high: hi, n_grid: pts.iter().map(|p| p.0).collect(), residual_rms: rms })
}

/// Percentile interval widened if needed so it contains the point estimate.
fn percentile_interval(boot: &mut [f64], point: f64) -> (f64, f64) {
    if boot.is_empty() {
        return (point, point);
    }
    boot.sort_by(|a, b| a.total_cmp(b));
    let lo = boot[((boot.len() as f64 * 0.025) as usize).min(boot.len() - 1)];
    let hi = boot[((boot.len() as f64 * 0.975) as usize).min(boot.len() - 1)];
    (lo.min(point), hi.max(point))
}

/// Slope of `log P(T ≥ n)` against `log n`, using grid points `n ≥ min_n` with at least
/// `min_survivors` survivors, and a bootstrap over the samples.
pub fn survival_slope(samples: &[u64], grid: &[u64], min_n: u64, min_survivors: u64, reps: usize, seed: u64) -> Result<TailEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let total = samples.len() as f64;
    let counts = |s: &[u64]| -> Vec<u64> {
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        grid.iter().map(|&n| (sorted.len() - sorted.partition_point(|&t| t < n)) as u64).collect()
    };
    let base = counts(samples);
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] >= min_n && base[i] >= min_survivors).collect();
    if keep.len() < 3 {
        return Err(Error::Degenerate(format!("only {} usable grid points", keep.len())));
    }
    let lx: Vec<f64> = keep.iter().map(|&i| (grid[i] as f64).ln()).collect();
    let ly: Vec<f64> = keep.iter().map(|&i| (base[i] as f64 / total).ln()).collect();
    let (slope, intercept, rms) = linear_fit(&lx, &ly)?;
    let mut rng = RngStream::new(seed, 1);
    let mut boot = Vec::with_capacity(reps);
    let mut resample = vec![0u64; samples.len()];
    for _ in 0..reps {
        for r in resample.iter_mut() {
            *r = samples[rng.random_range(0..samples.len())];
        }
        let c = counts(&resample);
        if keep.iter().any(|&i| c[i] == 0) {
            continue;
        }
        let by: Vec<f64> = keep.iter().map(|&i| (c[i] as f64 / total).ln()).collect();
        if let Ok((s, _, _)) = linear_fit(&lx, &by) {
            boot.push(s);
        }
    }
    let (lo, hi) = percentile_interval(&mut boot, slope);
    Ok(TailEstimate {
        slope,
        intercept,
        ci_low: lo,
        ci_high: hi,
        n_grid: keep.iter().map(|&i| grid[i] as f64).collect(),
        residual_rms: rms,
    })
}

/// Hill estimate of the tail index from the `k` largest order statistics.
pub fn hill(samples: &[f64], k: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if k == 0 || k >= samples.len() {
        return Err(Error::InvalidArgument(format!("k = {k} needs 0 < k < {}", samples.len())));
    }
    let mut s: Vec<f64> = samples.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let xk = s[k];
    if !(xk > 0.0) {
        return Err(Error::Degenerate("non-positive order statistic".into()));
    }
    let h = s[..k].iter().map(|x| (x / xk).ln()).sum::<f64>() / k as f64;
    if h <= 0.0 {
        return Err(Error::Degenerate("top order statistics are all equal".into()));
    }
    Ok(1.0 / h)
}

/// Percentile bootstrap interval (2.5%, 97.5%) of `statistic`.
pub fn bootstrap_ci<F: Fn(&[f64]) -> f64>(statistic: F, samples: &[f64], reps: usize, seed: u64) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if reps < 100 {
        return Err(Error::InvalidArgument("at least 100 bootstrap repetitions".into()));
    }
    let mut rng = RngStream::new(seed, 2);
    let mut buf = vec![0.0; samples.len()];
    let mut stats: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.random_range(0..samples.len())];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let lo = stats[(reps as f64 * 0.025) as usize];
    let hi = stats[((reps as f64 * 0.975) as usize).min(reps - 1)];
    Ok((lo, hi))
}

/// Linear-interpolated quantile.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    Ok(if i + 1 < s.len() { s[i] * (1.0 - frac) + s[i + 1] * frac } else { s[i] })
}

pub fn median(samples: &[f64]) -> Result<f64> {
    quantile(samples, 0.5)
}

pub fn mean(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(crate::quad::compensated_sum(samples.iter().copied()) / samples.len() as f64)
}

/// `sup |F_n - F|` against a continuous distribution function.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} exp(-2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    let p = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    Ok((d, p))
}

/// One-sample KS statistic and asymptotic p-value.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = ks_statistic(samples, cdf);
    let ne = (samples.len() as f64).sqrt();
    Ok((d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)))
}

/// Pearson chi-square of observed counts against expected probabilities.
///
/// `total` is the sample size; draws outside the listed cells form one extra cell.
/// Cells with expected count below 5 are pooled into it. Returns `(statistic, dof, p-value)`.
pub fn chi_square(observed: &[u64], probs: &[f64], total: u64) -> Result<(f64, usize, f64)> {
    if observed.len() != probs.len() || observed.is_empty() || total == 0 {
        return Err(Error::EmptySample);
    }
    if observed.iter().sum::<u64>() > total {
        return Err(Error::InvalidArgument("counts exceed the sample size".into()));
    }
    let t = total as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    let mut used_p = 0.0;
    let mut used_o = 0.0;
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * t;
        used_p += p;
        used_o += o as f64;
        if e >= 5.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            pool_o += o as f64;
            pool_e += e;
        }
    }
    // remaining probability mass not listed explicitly
    pool_o += t - used_o;
    pool_e += (1.0 - used_p).max(0.0) * t;
    if pool_e > 0.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    if cells < 2 {
        return Err(Error::Degenerate("fewer than two chi-square cells".into()));
    }
    let dof = cells - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok((stat, dof, 1.0 - dist.cdf(stat)))
}
