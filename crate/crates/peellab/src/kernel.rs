//! Peeling transition kernels: conditioned (infinite map), half-plane, and finite (Boltzmann map).

use crate::error::{Error, Result};
use crate::harmonic::HarmonicTable;
use crate::quad::{em_tail, CompensatedSum};
use crate::step_law::{conditioned_mass, StepLaw};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeelEvent {
    /// A new face of degree `2k`, `k ≥ 1`.
    NewFace(u64),
    /// Identification with an edge on the left, enclosing a hole of half-perimeter `j`.
    GlueLeft(u64),
    GlueRight(u64),
}

impl PeelEvent {
    /// Change of the half-perimeter.
    #[inline]
    pub fn increment(&self) -> i64 {
        match *self {
            PeelEvent::NewFace(k) => k as i64 - 1,
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => -(j as i64) - 1,
        }
    }

    #[inline]
    pub fn hole(&self) -> Option<u64> {
        match *self {
            PeelEvent::NewFace(_) => None,
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => Some(j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FiniteEvent {
    NewFace(u64),
    /// The hole splits into two holes of the given half-perimeters.
    Split(u64, u64),
}

#[derive(Debug, Clone, Copy)]
pub struct ConditionedKernel<'a> {
    law: &'a StepLaw,
    l: i64,
}

pub fn kernel_conditioned(law: &StepLaw, l: i64) -> Result<ConditionedKernel<'_>> {
    if l < 1 {
        return Err(Error::InvalidPerimeter(l));
    }
    Ok(ConditionedKernel { law, l })
}

impl ConditionedKernel<'_> {
    pub fn prob(&self, e: PeelEvent) -> f64 {
        let t = HarmonicTable::shared();
        let l = self.l;
        match e {
            PeelEvent::NewFace(0) => 0.0,
            PeelEvent::NewFace(k) => self.law.nu(k as i64 - 1) * t.h(l + k as i64 - 1) / t.h(l),
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => {
                if (j as i64) > l - 2 {
                    0.0
                } else {
                    0.5 * self.law.nu(-(j as i64) - 1) * t.h(l - j as i64 - 1) / t.h(l)
                }
            }
        }
    }

    /// Total mass, including the analytic tail of the new-face events.
    pub fn total_mass(&self) -> f64 {
        conditioned_mass(self.law, self.l)
    }

    pub fn perimeter(&self) -> i64 {
        self.l
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HalfPlaneKernel<'a> {
    law: &'a StepLaw,
}

pub fn kernel_halfplane(law: &StepLaw) -> HalfPlaneKernel<'_> {
    HalfPlaneKernel { law }
}

impl HalfPlaneKernel<'_> {
    pub fn prob(&self, e: PeelEvent) -> f64 {
        match e {
            PeelEvent::NewFace(0) => 0.0,
            PeelEvent::NewFace(k) => self.law.nu(k as i64 - 1),
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => 0.5 * self.law.nu(-(j as i64) - 1),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.law.positive_mass() + self.law.negative_mass()
    }

    /// Probability that the half-perimeter changes by `i`.
    pub fn increment_prob(&self, i: i64) -> f64 {
        if i >= 0 {
            self.prob(PeelEvent::NewFace(i as u64 + 1))
        } else {
            let j = (-i - 1) as u64;
            self.prob(PeelEvent::GlueLeft(j)) + self.prob(PeelEvent::GlueRight(j))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FiniteKernel<'a> {
    law: &'a StepLaw,
    l: i64,
}

pub fn kernel_finite(law: &StepLaw, l: i64) -> Result<FiniteKernel<'_>> {
    if l < 1 {
        return Err(Error::InvalidPerimeter(l));
    }
    Ok(FiniteKernel { law, l })
}

impl FiniteKernel<'_> {
    pub fn prob(&self, e: FiniteEvent) -> f64 {
        let law = self.law;
        let l = self.l;
        let w = law.nu(-l - 1);
        match e {
            FiniteEvent::NewFace(0) => 0.0,
            FiniteEvent::NewFace(k) => law.nu(k as i64 - 1) * law.nu(-l - k as i64) / w,
            FiniteEvent::Split(j, r) => {
                if (j + r) as i64 != l - 1 {
                    0.0
                } else {
                    law.nu(-(j as i64) - 1) * law.nu(-(l - j as i64)) / (2.0 * w)
                }
            }
        }
    }

    /// Same probabilities computed from explicit partition functions
    /// `W(ℓ) = ν(-ℓ-1) c^{ℓ+1} / 2` and weights `q_k = ν(k-1) c^{1-k}`.
    pub fn prob_via_partition(&self, e: FiniteEvent, c: f64) -> f64 {
        let law = self.law;
        let w = |m: i64| law.nu(-m - 1) * c.powi((m + 1) as i32) / 2.0;
        let l = self.l;
        match e {
            FiniteEvent::NewFace(0) => 0.0,
            FiniteEvent::NewFace(k) => {
                let q = law.nu(k as i64 - 1) * c.powi(1 - k as i32);
                q * w(l + k as i64 - 1) / w(l)
            }
            FiniteEvent::Split(j, r) => {
                if (j + r) as i64 != l - 1 {
                    0.0
                } else {
                    w(j as i64) * w(r as i64) / w(l)
                }
            }
        }
    }

    pub fn new_face_mass(&self) -> f64 {
        let law = self.law;
        let l = self.l;
        let w = law.nu(-l - 1);
        let direct_end = (law.cutoff as i64 - l).max(2048);
        let mut acc = CompensatedSum::new();
        for k in 1..=direct_end {
            acc.add(law.nu(k - 1) * law.nu(-l - k));
        }
        let (alpha, beta, tail, lf) = (law.alpha, law.beta, law.tail, l as f64);
        acc.add(em_tail(
            |x| {
                let y = x - 1.0;
                let pos = alpha * ((1.0 - beta) / ((y + 1.0) * (y + 2.0)) + beta * (-(y + 1.0) * std::f64::consts::LN_2).exp());
                pos * tail.value(lf + x)
            },
            (direct_end + 1) as f64,
            40,
        ));
        acc.value() / w
    }

    pub fn split_mass(&self) -> f64 {
        let l = self.l;
        let mut acc = CompensatedSum::new();
        for j in 0..l {
            acc.add(self.prob(FiniteEvent::Split(j as u64, (l - 1 - j) as u64)));
        }
        acc.value()
    }

    pub fn total_mass(&self) -> f64 {
        self.new_face_mass() + self.split_mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments() {
        assert_eq!(PeelEvent::NewFace(3).increment(), 2);
        assert_eq!(PeelEvent::GlueLeft(0).increment(), -1);
        assert_eq!(PeelEvent::GlueRight(4).hole(), Some(4));
    }
}
