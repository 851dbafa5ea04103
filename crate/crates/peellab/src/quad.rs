//! Summation helpers: compensated sums, Euler-Maclaurin tails and a Hurwitz-zeta remainder.

use gauss_quad::legendre::GaussLegendre;
use std::sync::OnceLock;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let i = c * 8;
        for l in 0..8 {
            acc[l] += a[i + l] * b[i + l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..n {
        tail += a[i] * b[i];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24).expect("degree >= 2"))
}

/// `∫_m^∞ f(x) dx` for `f` decaying at least like `x^{-3/2}`.
///
/// Substitutes `x = m / v²` and integrates over `depth` dyadic panels of `v ∈ (0, 1]`;
/// the part beyond `x = m·4^depth` is dropped.
pub fn integral_to_infinity<F: Fn(f64) -> f64>(f: F, m: f64, depth: usize) -> f64 {
    let rule = rule();
    let mut total = CompensatedSum::new();
    let mut hi = 1.0f64;
    for _ in 0..depth {
        let lo = hi * 0.5;
        let part = rule.integrate(lo, hi, |v| {
            let x = m / (v * v);
            f(x) * 2.0 * m / (v * v * v)
        });
        total.add(part);
        hi = lo;
    }
    total.value()
}

/// `Σ_{k ≥ m} f(k)` by Euler-Maclaurin with derivatives from central differences.
pub fn em_tail<F: Fn(f64) -> f64>(f: F, m: f64, depth: usize) -> f64 {
    let d = 0.5;
    let d1 = (f(m + d) - f(m - d)) / (2.0 * d);
    let d3 = (f(m + 2.0 * d) - 2.0 * f(m + d) + 2.0 * f(m - d) - f(m - 2.0 * d)) / (2.0 * d * d * d);
    integral_to_infinity(&f, m, depth) + 0.5 * f(m) - d1 / 12.0 + d3 / 720.0
}

/// `Σ_{j ≥ n} j^{-s}` for real `s > 1` and `n ≥ 1`.
pub fn hurwitz_tail(s: f64, n: u64) -> f64 {
    let cut = 64u64;
    let mut acc = CompensatedSum::new();
    let mut j = n;
    while j < cut {
        acc.add((j as f64).powf(-s));
        j += 1;
    }
    let x = j as f64;
    // Euler-Maclaurin with Bernoulli numbers B2, B4, B6.
    let lead = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let t2 = s * x.powf(-s - 1.0) / 12.0;
    let t4 = s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0;
    let t6 = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * x.powf(-s - 5.0) / 30240.0;
    acc.add(lead + t2 - t4 + t6);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two() {
        let z = hurwitz_tail(2.0, 1);
        assert!((z - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
        let direct: f64 = (1000..2_000_000u64).map(|j| (j as f64).powi(-3)).sum::<f64>()
            + hurwitz_tail(3.0, 2_000_000);
        assert!((hurwitz_tail(3.0, 1000) - direct).abs() < 1e-17);
    }

    #[test]
    fn em_matches_telescoping() {
        // Σ_{k≥m} 1/((k+1)(k+2)) = 1/(m+1)
        for &(m, tol) in &[(10.0, 1e-5), (100.0, 1e-9), (2000.0, 1e-12)] {
            let t = em_tail(|x| 1.0 / ((x + 1.0) * (x + 2.0)), m, 40);
            assert!((t * (m + 1.0) - 1.0).abs() < tol, "m={m} {t}");
        }
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }
}
