//! The harmonic function h↑ of the step walk killed on the non-positive integers.
//!
//! With `u(m) = 4^{-m} binom(2m, m)` we have `h↑(ℓ) = 2ℓ u(ℓ)` for `ℓ ≥ 1` and
//! `h↑(ℓ + 1) - h↑(ℓ) = u(ℓ)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Largest argument evaluated by the exact product recursion.
pub const ASYMPTOTIC_SWITCH: usize = 1024;

/// Default size of the shared table.
pub const DEFAULT_L_MAX: usize = 1 << 20;

// Stirling-type coefficients of log(u(m) sqrt(pi m)) in odd powers of 1/m.
const LOG_SERIES: [f64; 5] = [
    -1.0 / 8.0,
    1.0 / 192.0,
    -1.0 / 640.0,
    17.0 / 14336.0,
    -31.0 / 18432.0,
];

/// Asymptotic form of `u(m)`, valid for real `m`. Relative error below 1e-16 once `m ≥ 64`.
#[inline]
pub fn central_asym(m: f64) -> f64 {
    let r = 1.0 / m;
    let r2 = r * r;
    let s = r
        * (LOG_SERIES[0]
            + r2 * (LOG_SERIES[1] + r2 * (LOG_SERIES[2] + r2 * (LOG_SERIES[3] + r2 * LOG_SERIES[4]))));
    s.exp() / (PI * m).sqrt()
}

/// Asymptotic form of h↑ for real arguments.
#[inline]
pub fn h_asym(x: f64) -> f64 {
    2.0 * x * central_asym(x)
}

#[derive(Debug, Clone)]
pub struct HarmonicTable {
    u: Vec<f64>,
    values: Vec<f64>,
    l_max: usize,
    asymptotic_switch: usize,
}

impl HarmonicTable {
    pub fn new(l_max: usize) -> Self {
        let l_max = l_max.max(1);
        let switch = ASYMPTOTIC_SWITCH.min(l_max);
        let mut u = Vec::with_capacity(l_max + 1);
        u.push(1.0);
        for m in 1..=l_max {
            if m <= switch {
                let prev = u[m - 1];
                u.push(prev * (2 * m - 1) as f64 / (2 * m) as f64);
            } else {
                u.push(central_asym(m as f64));
            }
        }
        let values = u
            .iter()
            .enumerate()
            .map(|(l, &x)| 2.0 * l as f64 * x)
            .collect();
        HarmonicTable { u, values, l_max, asymptotic_switch: switch }
    }

    /// Process-wide table of size [`DEFAULT_L_MAX`].
    pub fn shared() -> &'static HarmonicTable {
        static TABLE: OnceLock<HarmonicTable> = OnceLock::new();
        TABLE.get_or_init(|| HarmonicTable::new(DEFAULT_L_MAX))
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn asymptotic_switch(&self) -> usize {
        self.asymptotic_switch
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn h(&self, l: i64) -> f64 {
        if l <= 0 {
            0.0
        } else if (l as usize) <= self.l_max {
            self.values[l as usize]
        } else {
            h_asym(l as f64)
        }
    }

    /// `u(m) = h↑(m+1) - h↑(m)` for `m ≥ 0`.
    #[inline]
    pub fn u(&self, m: i64) -> f64 {
        if m < 0 {
            0.0
        } else if (m as usize) <= self.l_max {
            self.u[m as usize]
        } else {
            central_asym(m as f64)
        }
    }

    pub fn central_slice(&self) -> &[f64] {
        &self.u
    }

    /// `h↑(ℓ) / (2 sqrt(ℓ/π))`, increasing in ℓ and bounded by 1.
    #[inline]
    pub fn shape(&self, l: i64) -> f64 {
        if l <= 0 {
            return 0.0;
        }
        let x = l as f64;
        self.h(l) / (2.0 * (x / PI).sqrt())
    }
}

pub fn h_up(l: i64) -> f64 {
    HarmonicTable::shared().h(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(h_up(0), 0.0);
        assert_eq!(h_up(-3), 0.0);
        assert_eq!(h_up(1), 1.0);
        assert!((h_up(2) - 1.5).abs() < 1e-15);
        assert!((h_up(3) - 1.875).abs() < 1e-15);
    }

    #[test]
    fn switch_is_seamless() {
        let t = HarmonicTable::new(4096);
        let mut u = 1.0f64;
        for m in 1..=3000usize {
            u *= (2 * m - 1) as f64 / (2 * m) as f64;
            if m > 64 {
                assert!((central_asym(m as f64) / u - 1.0).abs() < 2e-13, "m={m}");
            }
        }
        assert!((t.u(3000) / u - 1.0).abs() < 2e-13);
    }

    #[test]
    fn large_argument_limit() {
        let n = 1_000_000i64;
        let r = h_up(n) / (2.0 * (n as f64 / PI).sqrt());
        assert!((r - 1.0).abs() < 1e-4);
        assert!(h_up(n + 1) > h_up(n));
        assert!(h_up(5_000_000_000) > h_up(4_999_999_999));
    }
}
