//! Random walks in the Cauchy domain of attraction: entrance times, increasing
//! walks, and the Cauchy limit of the half-plane perimeter.

use crate::error::{Error, Result};
use crate::estimators::{ks_statistic, survival_slope, TailEstimate};
use crate::quad::CompensatedSum;
use crate::replica::run_replicas;
use crate::sampling::{NuSampler, RngStream};
use crate::step_law::StepLaw;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `P(W = ±k) = c_±/(k(k+1))` for `k ≥ 1`, an optional atom, and the rest at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyWalkLaw {
    pub c_plus: f64,
    pub c_minus: f64,
    /// Position of the atom (0 when absent).
    pub atom_shift: i64,
    pub atom_mass: f64,
    /// Centring constant; `None` when it diverges (`c_plus ≠ c_minus`).
    pub b: Option<f64>,
}

/// Build a walk law; `target_b` must be `None` when the tails differ.
pub fn make_walk_law(c_plus: f64, c_minus: f64, target_b: Option<f64>) -> Result<CauchyWalkLaw> {
    if !(c_plus > 0.0 && c_minus > 0.0) || c_plus + c_minus > 1.0 {
        return Err(Error::InvalidArgument(format!("need c_+, c_- > 0 with c_+ + c_- ≤ 1, got {c_plus}, {c_minus}")));
    }
    let rest = 1.0 - c_plus - c_minus;
    let symmetric = c_plus == c_minus;
    let Some(b) = target_b else {
        return Ok(CauchyWalkLaw { c_plus, c_minus, atom_shift: 0, atom_mass: 0.0, b: symmetric.then_some(0.0) });
    };
    if !symmetric || !b.is_finite() {
        // with unequal tails the truncated mean drifts like (c_+ - c_-) log n
        return Err(Error::UnreachableB(b));
    }
    if b == 0.0 {
        return Ok(CauchyWalkLaw { c_plus, c_minus, atom_shift: 0, atom_mass: 0.0, b: Some(0.0) });
    }
    if rest <= 0.0 {
        return Err(Error::UnreachableB(b));
    }
    let a = (b.abs() / rest).ceil();
    if a >= 1e15 {
        return Err(Error::UnreachableB(b));
    }
    let atom_mass = b.abs() / a;
    Ok(CauchyWalkLaw { c_plus, c_minus, atom_shift: (a as i64) * b.signum() as i64, atom_mass, b: Some(b) })
}

impl CauchyWalkLaw {
    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> i64 {
        let u = rng.unit();
        if u < self.c_plus + self.c_minus {
            let k = (1.0 / rng.unit_open()).floor();
            let k = if k >= 4e18 { 4_000_000_000_000_000_000i64 } else { k as i64 };
            if u < self.c_plus {
                k
            } else {
                -k
            }
        } else if u < self.c_plus + self.c_minus + self.atom_mass {
            self.atom_shift
        } else {
            0
        }
    }

    /// `E[W/(1+(W/n)²)]` evaluated numerically.
    pub fn b_at(&self, n: f64) -> f64 {
        let diff = self.c_plus - self.c_minus;
        let mut acc = CompensatedSum::new();
        let a = self.atom_shift as f64;
        acc.add(self.atom_mass * a / (1.0 + (a / n).powi(2)));
        if diff != 0.0 {
            // Σ_k diff/(k+1) / (1 + k²/n²): direct part plus integral tail
            let direct = (64.0 * n).min(1e7) as u64;
            for k in 1..=direct {
                let kf = k as f64;
                acc.add(diff / ((kf + 1.0) * (1.0 + (kf / n).powi(2))));
            }
            acc.add(crate::quad::em_tail(|x| diff / ((x + 1.0) * (1.0 + (x / n).powi(2))), direct as f64 + 1.0, 40));
        }
        acc.value()
    }

    pub fn tail_plus(&self, k: u64) -> f64 {
        let atom = if self.atom_shift > k as i64 { self.atom_mass } else { 0.0 };
        self.c_plus / (k as f64 + 1.0) + atom
    }

    pub fn tail_minus(&self, k: u64) -> f64 {
        let atom = if self.atom_shift < -(k as i64) { self.atom_mass } else { 0.0 };
        self.c_minus / (k as f64 + 1.0) + atom
    }
}

/// `ρ = 1/2 + (1/π) arctan(b/(π c_+))`.
pub fn rho(b: f64, c_plus: f64) -> f64 {
    0.5 + (b / (PI * c_plus)).atan() / PI
}

/// `λ(1/2)` from the entrance-time formula: `b = -1/2`, `c_+ = p_q`.
pub fn lambda_half_from_rho(p_q: f64) -> f64 {
    rho(-0.5, p_q)
}

/// `(1/π) arctan(2π p_q)`.
pub fn lambda_half_closed(p_q: f64) -> f64 {
    (2.0 * PI * p_q).atan() / PI
}

/// `|[1/2 - (1/π)arctan(1/(2πp))] - (1/π)arctan(2πp)|`.
pub fn trig_identity_gap(p_q: f64) -> f64 {
    (lambda_half_from_rho(p_q) - lambda_half_closed(p_q)).abs()
}

/// Prediction written next to survival curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub c_plus: f64,
    pub c_minus: f64,
    pub b: Option<f64>,
    pub rho: Option<f64>,
}

impl Prediction {
    pub fn for_law(law: &CauchyWalkLaw) -> Self {
        Prediction { c_plus: law.c_plus, c_minus: law.c_minus, b: law.b, rho: law.b.map(|b| rho(b, law.c_plus)) }
    }
}

/// Entrance time into ℤ₋ from 0, capped at `cap` (`None` when censored).
pub fn entrance_time<F: FnMut(&mut RngStream) -> i64>(mut step: F, cap: u64, rng: &mut RngStream) -> Option<u64> {
    let mut w: i64 = 0;
    for n in 1..=cap {
        w = w.saturating_add(step(rng));
        if w <= -1 {
            return Some(n);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTail {
    pub estimate: TailEstimate,
    pub prediction: Prediction,
    /// `(n, survivors, replicas)` with survivors counting `τ ≥ n`.
    pub curve: Vec<(u64, u64, u64)>,
}

/// Survival curve `P(τ ≥ n)` and its log-log slope.
///
/// Walks are stopped at `max(n_grid)`; a survivor at the cap counts as `τ ≥ n` for every grid point.
pub fn tau_tail(law: &CauchyWalkLaw, n_grid: &[u64], replicas: u64, master_seed: u64, workers: usize) -> Result<TauTail> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n_grid must be non-empty and increasing".into()));
    }
    let cap = *n_grid.last().unwrap();
    let taus = run_replicas(replicas, workers, master_seed, |rng| {
        Ok(entrance_time(|r| law.sample(r), cap, rng).unwrap_or(u64::MAX))
    })?;
    let estimate = survival_slope(&taus, n_grid, 100, 50, 1000, master_seed ^ 0x5eed)?;
    let curve = survival_counts(&taus, n_grid);
    Ok(TauTail { estimate, prediction: Prediction::for_law(law), curve })
}

/// `(n, #{τ ≥ n}, total)` for each grid point.
pub fn survival_counts(taus: &[u64], grid: &[u64]) -> Vec<(u64, u64, u64)> {
    let mut sorted = taus.to_vec();
    sorted.sort_unstable();
    grid.iter()
        .map(|&n| (n, (sorted.len() - sorted.partition_point(|&t| t < n)) as u64, sorted.len() as u64))
        .collect()
}

/// Estimate of `P(|W_n/(n log n) - c| ≥ δ)` for the walk with steps `P(W = k) = c/(k(k+1))`, `k ≥ 1`.
pub fn increasing_walk_deviation(c: f64, delta: f64, n: u64, replicas: u64, master_seed: u64, workers: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    if !(c > 0.0 && c <= 1.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("c = {c}, delta = {delta}")));
    }
    let norm = n as f64 * (n as f64).ln();
    let hits = run_replicas(replicas, workers, master_seed, |rng| {
        let mut w = 0f64;
        for _ in 0..n {
            if rng.unit() < c {
                w += (1.0 / rng.unit_open()).floor();
            }
        }
        Ok(((w / norm - c).abs() >= delta) as u64)
    })?;
    Ok(hits.iter().sum::<u64>() as f64 / replicas as f64)
}

/// Cauchy distribution function with scale `π p`.
pub fn cauchy_cdf(x: f64, p_q: f64) -> f64 {
    0.5 + (x / (PI * p_q)).atan() / PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyGof {
    pub ks: f64,
    pub median: f64,
    pub iqr: f64,
    pub target_iqr: f64,
    pub samples: Vec<f64>,
}

/// Sample `S_n/n` for the half-plane perimeter walk and compare it with the Cauchy limit.
pub fn cauchy_gof(law: &StepLaw, nu: &NuSampler, n: u64, replicas: u64, master_seed: u64, workers: usize) -> Result<CauchyGof> {
    if n < 1 || replicas < 2 {
        return Err(Error::InvalidArgument("need n ≥ 1 and at least two replicas".into()));
    }
    let samples = run_replicas(replicas, workers, master_seed, |rng| {
        let mut s: i64 = 0;
        for _ in 0..n {
            s = s.checked_add(nu.sample(rng)?).ok_or(Error::Overflow("walk"))?;
        }
        Ok(s as f64 / n as f64)
    })?;
    let p = law.p_q;
    let ks = ks_statistic(&samples, |x| cauchy_cdf(x, p));
    let median = crate::estimators::quantile(&samples, 0.5)?;
    let iqr = crate::estimators::quantile(&samples, 0.75)? - crate::estimators::quantile(&samples, 0.25)?;
    Ok(CauchyGof { ks, median, iqr, target_iqr: 2.0 * PI * p, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_symmetric_is_half() {
        assert_eq!(rho(0.0, 0.3), 0.5);
        assert!(rho(0.1, 0.3) > rho(0.0, 0.3));
    }

    #[test]
    fn unequal_tails_reject_finite_b() {
        assert!(matches!(make_walk_law(0.1, 0.2, Some(0.3)), Err(Error::UnreachableB(_))));
        assert!(make_walk_law(0.1, 0.2, None).unwrap().b.is_none());
    }

    #[test]
    fn atom_reaches_target() {
        let law = make_walk_law(0.2, 0.2, Some(PI * 0.2)).unwrap();
        assert!((law.b_at(1e8) - PI * 0.2).abs() < 1e-9);
        assert!(law.atom_mass <= 0.6 + 1e-12);
    }
}
