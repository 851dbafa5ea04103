//! Exact samplers for ν and for the peeling kernels, plus per-replica RNG streams.
//!
//! Everything here is rejection or inversion based: no distribution is
//! truncated. Perimeter-dependent kernels use a handful of envelope regions,
//! cached for small perimeters and rebuilt on the fly beyond.

use crate::error::{Error, Result};
use crate::harmonic::HarmonicTable;
use crate::kernel::{FiniteEvent, PeelEvent};
use crate::step_law::StepLaw;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};

/// Steps above this size cannot be represented safely in the chain counters.
pub const MAX_STEP: u64 = 1 << 62;

/// Table part of the alias sampler covers `|i| ≤ ALIAS_SPAN`.
pub const ALIAS_SPAN: usize = 1024;

/// A ChaCha8 stream selected by `(master_seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        RngStream { master_seed, stream_id, inner }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn draw_counter(&self) -> u64 {
        self.inner.get_word_pos() as u64
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn unit(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn unit_open(&mut self) -> f64 {
        1.0 - self.inner.random::<f64>()
    }

    #[inline]
    pub fn coin(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn sample_exponential(rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::NonPositiveRate(rate));
    }
    let e: f64 = Exp1.sample(rng);
    Ok(e / rate)
}

/// Sampler for ν and its restrictions, built once per law.
#[derive(Debug, Clone)]
pub struct NuSampler {
    alpha: f64,
    beta: f64,
    span: usize,
    cutoff: usize,
    /// Buckets `0..=2·span` are the points `i = idx - span`; then the positive tail, then the negative tail.
    full: WeightedAliasIndex<f64>,
    /// Buckets `0..span` are `j = idx + 1`; bucket `span` is the tail `j > span`.
    neg: WeightedAliasIndex<f64>,
    neg_cum: Vec<f64>,
    mid_mass: f64,
    far_mass: f64,
    far: FarTail,
    neg_total: f64,
}

/// Rejection sampler for the model tail `j > K`.
#[derive(Debug, Clone, Copy)]
struct FarTail {
    k: f64,
    bound: f64,
    tail: crate::step_law::NegTail,
}

impl FarTail {
    fn sample(&self, rng: &mut RngStream) -> Result<u64> {
        loop {
            let y = self.k / rng.unit_open();
            if y >= MAX_STEP as f64 {
                return Err(Error::Overflow("negative step"));
            }
            let j = y.floor() + 1.0;
            // proposal mass at j is K/((j-1) j); ν(-j) ≤ bound/j²
            let ratio = self.tail.value(j) * (j - 1.0) * j / self.bound;
            if rng.unit() < ratio {
                return Ok(j as u64);
            }
        }
    }
}

impl NuSampler {
    pub fn new(law: &StepLaw) -> Result<Self> {
        let cutoff = law.cutoff;
        let span = ALIAS_SPAN.min(cutoff);
        let table = law.negative_table();
        let mut neg_cum = Vec::with_capacity(cutoff + 1);
        let mut acc = crate::quad::CompensatedSum::new();
        neg_cum.push(0.0);
        for &v in &table[1..=cutoff] {
            acc.add(v);
            neg_cum.push(acc.value());
        }
        let near_neg = neg_cum[span];
        let mid_mass = neg_cum[cutoff] - near_neg;
        let far_mass = law.tail_mass;
        let neg_total = neg_cum[cutoff] + far_mass;

        let mut w = Vec::with_capacity(2 * span + 3);
        for idx in 0..=2 * span {
            let i = idx as i64 - span as i64;
            w.push(if i >= 0 { law.nu_pos(i as u64) } else { table[(-i) as usize] });
        }
        w.push(law.alpha - law.pos_cdf(span as u64));
        w.push(mid_mass + far_mass);
        let full = WeightedAliasIndex::new(w).map_err(|e| Error::Degenerate(e.to_string()))?;

        let mut wn: Vec<f64> = table[1..=span].to_vec();
        wn.push(mid_mass + far_mass);
        let neg = WeightedAliasIndex::new(wn).map_err(|e| Error::Degenerate(e.to_string()))?;

        let k = cutoff as f64;
        let t = law.tail;
        let bound = t.p + t.d.max(0.0) / (k + 1.0).sqrt() + t.e.max(0.0) / (k + 1.0);
        Ok(NuSampler {
            alpha: law.alpha,
            beta: law.beta,
            span,
            cutoff,
            full,
            neg,
            neg_cum,
            mid_mass,
            far_mass,
            far: FarTail { k, bound, tail: t },
            neg_total,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ν([-j, -1])` as seen by the sampler.
    pub fn neg_cdf(&self, j: u64) -> f64 {
        if (j as usize) <= self.cutoff {
            self.neg_cum[j as usize]
        } else {
            self.neg_total - self.far.tail.sum_from(j + 1)
        }
    }

    /// One draw of ν.
    pub fn sample(&self, rng: &mut RngStream) -> Result<i64> {
        let idx = self.full.sample(rng);
        let s = self.span;
        if idx <= 2 * s {
            return Ok(idx as i64 - s as i64);
        }
        if idx == 2 * s + 1 {
            let k = self.sample_pos_range(s as u64 + 1, u64::MAX, rng);
            if k >= MAX_STEP {
                return Err(Error::Overflow("positive step"));
            }
            return Ok(k as i64);
        }
        Ok(-(self.sample_neg_beyond(rng)? as i64))
    }

    /// `j ≥ 1` with probability `ν(-j) / ν((-∞, -1])`.
    pub fn sample_neg(&self, rng: &mut RngStream) -> Result<u64> {
        let idx = self.neg.sample(rng);
        if idx < self.span {
            Ok(idx as u64 + 1)
        } else {
            self.sample_neg_beyond(rng)
        }
    }

    fn sample_neg_beyond(&self, rng: &mut RngStream) -> Result<u64> {
        let u = rng.unit() * (self.mid_mass + self.far_mass);
        if u < self.mid_mass {
            let target = self.neg_cum[self.span] + u;
            let cum = &self.neg_cum[self.span + 1..=self.cutoff];
            let pos = cum.partition_point(|&c| c < target).min(cum.len() - 1);
            Ok((self.span + 1 + pos) as u64)
        } else {
            self.far.sample(rng)
        }
    }

    /// `ν` restricted to `[lo, hi]` on the positive side, `hi = u64::MAX` meaning unbounded.
    pub fn sample_pos_range(&self, lo: u64, hi: u64, rng: &mut RngStream) -> u64 {
        let (lof, hif) = (lo as f64, if hi == u64::MAX { f64::INFINITY } else { hi as f64 });
        let wa = (1.0 - self.beta) * (1.0 / (lof + 1.0) - 1.0 / (hif + 2.0));
        let wb = self.beta * ((-lof).exp2() - (-hif - 1.0).exp2());
        let k = if rng.unit() * (wa + wb) < wa {
            let floor_v = 1.0 / (hif + 2.0);
            let v = floor_v + rng.unit_open() * (1.0 / (lof + 1.0) - floor_v);
            let k = (1.0 / v).floor() - 1.0;
            if k >= MAX_STEP as f64 {
                MAX_STEP
            } else {
                k as u64
            }
        } else {
            let floor_v = (-(hif - lof) - 1.0).exp2();
            let v = floor_v + rng.unit_open() * (1.0 - floor_v);
            let t = -v.log2();
            let t = if t >= MAX_STEP as f64 { MAX_STEP } else { t.floor() as u64 };
            lo.saturating_add(t)
        };
        k.clamp(lo, hi)
    }

    /// `ν` restricted to the positive side.
    pub fn sample_pos(&self, rng: &mut RngStream) -> Result<u64> {
        let k = self.sample_pos_range(0, u64::MAX, rng);
        if k >= MAX_STEP {
            return Err(Error::Overflow("positive step"));
        }
        Ok(k)
    }

    /// `ν([lo, hi])` on the positive side.
    pub fn pos_range_mass(&self, lo: u64, hi: u64) -> f64 {
        let (lof, hif) = (lo as f64, hi as f64);
        self.alpha
            * ((1.0 - self.beta) * (1.0 / (lof + 1.0) - 1.0 / (hif + 2.0))
                + self.beta * ((-lof).exp2() - (-hif - 1.0).exp2()))
    }

    /// Event of the half-plane kernel.
    pub fn sample_halfplane(&self, rng: &mut RngStream) -> Result<PeelEvent> {
        let i = self.sample(rng)?;
        Ok(step_to_event(i, rng))
    }
}

#[inline]
fn step_to_event(i: i64, rng: &mut RngStream) -> PeelEvent {
    if i >= 0 {
        PeelEvent::NewFace(i as u64 + 1)
    } else {
        let j = (-i - 1) as u64;
        if rng.coin() {
            PeelEvent::GlueLeft(j)
        } else {
            PeelEvent::GlueRight(j)
        }
    }
}

const MAX_REGIONS: usize = 24;

/// Conditioned-kernel envelopes are precomputed up to this perimeter.
pub const ENVELOPE_CACHE: usize = 4096;

/// Split distributions of the finite kernel are tabulated up to this perimeter.
pub const SPLIT_CACHE: usize = 1024;

/// Envelope regions of the conditioned kernel at one perimeter.
#[derive(Debug, Clone)]
pub struct Envelope {
    l: i64,
    hl: f64,
    t: u64,
    n: usize,
    lo: [u64; MAX_REGIONS],
    hi: [u64; MAX_REGIONS],
    /// Bound on `h(l+i)` inside each region.
    bound: [f64; MAX_REGIONS],
    /// Positive regions, then the tail `i > t`, then the negative side.
    mass: [f64; MAX_REGIONS + 2],
    c_tail: f64,
    /// Negative proposals come from the whole negative side and are rejected when `j ≥ l`.
    neg_full: bool,
    /// Expected number of proposals per accepted draw.
    pub total: f64,
}

#[derive(Debug, Clone)]
struct SplitTable {
    alias: WeightedAliasIndex<f64>,
    mass: f64,
}

/// Sampler for the conditioned and finite kernels at any perimeter.
#[derive(Debug, Clone)]
pub struct KernelSampler<'a> {
    law: &'a StepLaw,
    nu: NuSampler,
    harmonic: &'static HarmonicTable,
    envelopes: Vec<Envelope>,
    splits: Vec<SplitTable>,
}

impl<'a> KernelSampler<'a> {
    /// Fails if the negative side of the law is not monotone, which the finite-kernel envelope needs.
    pub fn new(law: &'a StepLaw) -> Result<Self> {
        if !law.negative_side_monotone() {
            return Err(Error::InvalidState("ν(-j) is not non-increasing; finite-kernel envelope invalid".into()));
        }
        let mut ks = KernelSampler {
            law,
            nu: NuSampler::new(law)?,
            harmonic: HarmonicTable::shared(),
            envelopes: Vec::new(),
            splits: Vec::new(),
        };
        ks.envelopes = (1..=ENVELOPE_CACHE as i64).map(|l| ks.build_envelope(l)).collect();
        let mut splits = Vec::with_capacity(SPLIT_CACHE);
        for m in 1..=SPLIT_CACHE as u64 {
            let base = law.nu_neg(m + 1);
            let w: Vec<f64> = (0..m).map(|j| law.nu_neg(j + 1) * law.nu_neg(m - j) / (2.0 * base)).collect();
            let mass = crate::quad::compensated_sum(w.iter().copied());
            let alias = WeightedAliasIndex::new(w).map_err(|e| Error::Degenerate(e.to_string()))?;
            splits.push(SplitTable { alias, mass });
        }
        ks.splits = splits;
        Ok(ks)
    }

    pub fn law(&self) -> &'a StepLaw {
        self.law
    }

    pub fn nu(&self) -> &NuSampler {
        &self.nu
    }

    pub fn halfplane(&self, rng: &mut RngStream) -> Result<PeelEvent> {
        self.nu.sample_halfplane(rng)
    }

    /// Upper bound on `h(x)`: exact inside the table, `2 sqrt(x/π)` beyond.
    #[inline]
    fn h_bound(&self, x: i64) -> f64 {
        if (x as usize) <= self.harmonic.l_max() {
            self.harmonic.h(x)
        } else {
            2.0 * (x as f64 / std::f64::consts::PI).sqrt()
        }
    }

    /// Rejection envelope of the conditioned kernel at `l ≥ 1`.
    pub fn envelope(&self, l: i64) -> Envelope {
        if l >= 1 && (l as usize) <= self.envelopes.len() {
            self.envelopes[l as usize - 1].clone()
        } else {
            self.build_envelope(l)
        }
    }

    fn build_envelope(&self, l: i64) -> Envelope {
        let h = self.harmonic;
        let hl = h.h(l);
        let lu = l as u64;
        let t = (4 * lu).max(32);
        let mut env = Envelope {
            l,
            hl,
            t,
            n: 0,
            lo: [0; MAX_REGIONS],
            hi: [0; MAX_REGIONS],
            bound: [0.0; MAX_REGIONS],
            mass: [0.0; MAX_REGIONS + 2],
            c_tail: 0.0,
            neg_full: false,
            total: 0.0,
        };
        // Regions [lo, hi] covering [0, t]; l + i grows by a factor 1.25 per region for cached l.
        let mut lo = 0u64;
        let mut n = 0;
        while lo <= t && n < MAX_REGIONS {
            let hi = if n == 0 {
                (lu / 32).min(t)
            } else if n == MAX_REGIONS - 1 || lu as usize > ENVELOPE_CACHE {
                // beyond the cache the mass above l/32 is O(1/l): one coarse region is enough
                t
            } else {
                (((lu + lo) as f64 * 1.25) as u64).saturating_sub(lu).clamp(lo, t)
            };
            env.lo[n] = lo;
            env.hi[n] = hi;
            env.bound[n] = self.h_bound(l + hi as i64);
            env.mass[n] = self.nu.pos_range_mass(lo, hi) * env.bound[n] / hl;
            n += 1;
            lo = hi + 1;
        }
        env.n = n;
        // Tail i > t: ν(i) ≤ A/i² and h(l+i)/h(l) ≤ sqrt(i/l) sqrt(1+l/t) / g(l),
        // and i^{-3/2} ≤ 2 (1/sqrt(i-1) - 1/sqrt(i)).
        let (tf, lf) = (t as f64, l as f64);
        let beta = self.nu.beta;
        let a = self.nu.alpha * ((1.0 - beta) + beta * (tf + 1.0).powi(2) * (-tf - 2.0).exp2());
        let g = hl / (2.0 * (lf / std::f64::consts::PI).sqrt());
        env.c_tail = 2.0 * a * (1.0 + lf / tf).sqrt() / (g * lf.sqrt());
        env.mass[n] = env.c_tail / tf.sqrt();
        // Negative side: restricted to j ≤ l-1 inside the table, whole side with rejection beyond it.
        env.neg_full = l as usize > self.law.cutoff;
        env.mass[n + 1] = if l < 2 {
            0.0
        } else if env.neg_full {
            self.nu.neg_total
        } else {
            self.nu.neg_cdf(l as u64 - 1)
        };
        env.total = env.mass[..n + 2].iter().sum();
        env
    }

    /// Draw from `kernel_conditioned(law, l)`.
    pub fn conditioned(&self, l: i64, rng: &mut RngStream) -> Result<PeelEvent> {
        if l < 1 {
            return Err(Error::InvalidPerimeter(l));
        }
        if (l as usize) <= self.envelopes.len() {
            self.conditioned_with(&self.envelopes[l as usize - 1], rng)
        } else {
            let env = self.build_envelope(l);
            self.conditioned_with(&env, rng)
        }
    }

    fn conditioned_with(&self, env: &Envelope, rng: &mut RngStream) -> Result<PeelEvent> {
        let h = self.harmonic;
        let (l, hl, n) = (env.l, env.hl, env.n);
        loop {
            let mut u = rng.unit() * env.total;
            let mut r = 0;
            while r < n + 1 && u >= env.mass[r] {
                u -= env.mass[r];
                r += 1;
            }
            if r < n {
                let i = self.nu.sample_pos_range(env.lo[r], env.hi[r], rng);
                if rng.unit() * env.bound[r] < h.h(l + i as i64) {
                    return Ok(PeelEvent::NewFace(i + 1));
                }
            } else if r == n {
                let v = rng.unit_open();
                let x = env.t as f64 / (v * v);
                if x >= MAX_STEP as f64 {
                    return Err(Error::Overflow("conditioned new face"));
                }
                let i = x.floor() + 1.0;
                let (s1, s2) = ((i - 1.0).sqrt(), i.sqrt());
                let envelope = env.c_tail / (s1 * s2 * (s1 + s2));
                let target = self.law.nu_pos(i as u64) * h.h(l + i as i64) / hl;
                if rng.unit() * envelope < target {
                    return Ok(PeelEvent::NewFace(i as u64 + 1));
                }
            } else {
                let j = if env.neg_full {
                    let j = self.nu.sample_neg(rng)?;
                    if j as i64 >= l {
                        continue;
                    }
                    j
                } else {
                    loop {
                        let j = self.nu.sample_neg(rng)?;
                        if (j as i64) < l {
                            break j;
                        }
                    }
                };
                if rng.unit() * hl < h.h(l - j as i64) {
                    return Ok(if rng.coin() { PeelEvent::GlueLeft(j - 1) } else { PeelEvent::GlueRight(j - 1) });
                }
            }
        }
    }

    /// Draw from `kernel_finite(law, m)`.
    pub fn finite(&self, m: i64, rng: &mut RngStream) -> Result<FiniteEvent> {
        if m < 1 {
            return Err(Error::InvalidPerimeter(m));
        }
        let law = self.law;
        let mu = m as u64;
        let base = law.nu_neg(mu + 1);
        let face_mass = self.nu.alpha;
        if (mu as usize) <= self.splits.len() {
            // exact split table plus a ν⁺ proposal for new faces
            let table = &self.splits[mu as usize - 1];
            loop {
                if rng.unit() * (face_mass + table.mass) < table.mass {
                    let j = table.alias.sample(rng) as u64;
                    return Ok(FiniteEvent::Split(j, mu - 1 - j));
                }
                let i = self.nu.sample_pos(rng)?;
                if rng.unit() * base < law.nu_neg(mu + 1 + i) {
                    return Ok(FiniteEvent::NewFace(i + 1));
                }
            }
        }
        let half = (mu + 1) / 2;
        let r_max = law.nu_neg(mu + 1 - half) / base;
        // past the table the restricted proposal s ≤ half becomes plain rejection
        let restricted = (half as usize) <= self.law.cutoff;
        let neg_mass = if restricted { self.nu.neg_cdf(half) } else { self.nu.neg_total };
        let split_mass = r_max * neg_mass;
        loop {
            if rng.unit() * (face_mass + split_mass) < face_mass {
                let i = self.nu.sample_pos(rng)?;
                let far = mu.checked_add(i + 1).ok_or(Error::Overflow("finite new face"))?;
                if rng.unit() * base < law.nu_neg(far) {
                    return Ok(FiniteEvent::NewFace(i + 1));
                }
            } else {
                let s = if restricted {
                    loop {
                        let s = self.nu.sample_neg(rng)?;
                        if s <= half {
                            break s;
                        }
                    }
                } else {
                    let s = self.nu.sample_neg(rng)?;
                    if s > half {
                        continue;
                    }
                    s
                };
                let mut accept = law.nu_neg(mu + 1 - s) / (base * r_max);
                if 2 * s == mu + 1 {
                    accept *= 0.5;
                }
                if rng.unit() < accept {
                    let j = if rng.coin() { s - 1 } else { mu - s };
                    return Ok(FiniteEvent::Split(j, mu - 1 - j));
                }
            }
        }
    }
}
