//! Peeling by layers: the chain `(P, D, H)` whose hulls are dual-distance balls.

use crate::error::{Error, Result};
use crate::kernel::PeelEvent;
use crate::peel::{Engine, ExplorationState, Mode};
use crate::sampling::{NuSampler, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayeredState {
    pub state: ExplorationState,
    /// Boundary edges at height `h`; the remaining `2P - d` sit at `h + 1`.
    pub d: i64,
    pub h: u64,
}

impl LayeredState {
    /// Root face of degree 2, both edges at height 0.
    pub fn new() -> Self {
        LayeredState { state: ExplorationState::new(Mode::Plane), d: 2, h: 0 }
    }

    pub fn is_valid(&self) -> bool {
        self.d >= 1 && self.d <= 2 * self.state.p
    }
}

impl Default for LayeredState {
    fn default() -> Self {
        Self::new()
    }
}

/// Update of `(D, H)` for an event at a boundary with `l = D` edges at the current height.
pub fn layer_update(l: i64, p_new: i64, event: PeelEvent) -> (i64, u64) {
    if l == 1 {
        return (2 * p_new, 1);
    }
    match event {
        PeelEvent::NewFace(_) => (l - 1, 0),
        PeelEvent::GlueRight(j) => {
            let rest = l - 2 * (j as i64 + 1);
            if rest > 0 {
                (rest, 0)
            } else {
                (2 * p_new, 1)
            }
        }
        PeelEvent::GlueLeft(_) => ((l - 1).min(2 * p_new), 0),
    }
}

pub fn layer_step(engine: &Engine, s: &mut LayeredState, rng: &mut RngStream) -> Result<PeelEvent> {
    if s.state.mode != Mode::Plane {
        return Err(Error::InvalidState("layers run in plane mode".into()));
    }
    let e = engine.step(&mut s.state, rng)?;
    let (d, dh) = layer_update(s.d, s.state.p, e);
    s.d = d;
    s.h += dh;
    debug_assert!(s.is_valid(), "layer invariant broken: {s:?}");
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HullRecord {
    pub r: u64,
    pub theta_r: u64,
    pub hull_half_perimeter: i64,
    pub hull_vertices: u64,
    pub hull_faces: u64,
}

/// Peel by layers until height `r_max`, recording the hull at each `θ_r`.
pub fn explore_to_radius(engine: &Engine, r_max: u64, rng: &mut RngStream) -> Result<Vec<HullRecord>> {
    explore_to_radius_capped(engine, r_max, u64::MAX, rng)
}

/// As [`explore_to_radius`] but stops after `max_steps` steps.
pub fn explore_to_radius_capped(engine: &Engine, r_max: u64, max_steps: u64, rng: &mut RngStream) -> Result<Vec<HullRecord>> {
    if r_max < 1 {
        return Err(Error::InvalidArgument("r_max must be at least 1".into()));
    }
    let mut s = LayeredState::new();
    let mut out = Vec::with_capacity(r_max as usize);
    while s.h < r_max && s.state.n < max_steps {
        layer_step(engine, &mut s, rng)?;
        while (out.len() as u64) < s.h.min(r_max) {
            out.push(HullRecord {
                r: out.len() as u64 + 1,
                theta_r: s.state.n,
                hull_half_perimeter: s.state.p,
                hull_vertices: s.state.v,
                hull_faces: s.state.f,
            });
        }
    }
    Ok(out)
}

/// Height after `n` layer steps, sampled at the given checkpoints (increasing).
pub fn heights_at(engine: &Engine, checkpoints: &[u64], rng: &mut RngStream) -> Result<Vec<LayeredState>> {
    let mut s = LayeredState::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        while s.state.n < n {
            layer_step(engine, &mut s, rng)?;
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerTime {
    /// First `n` with `A_n ≥ 2ℓ`.
    pub sigma: u64,
    /// Lower-bound walk `A'` at time `sigma`.
    pub a_prime: u64,
}

/// Time to swallow `2ℓ` edges of a straight boundary in the half-plane.
///
/// `a` counts swallowed edges of the initial boundary; `fresh` counts new
/// edges created to the left of the peeling point which a left
/// identification consumes first.
pub fn first_layer_time(nu: &NuSampler, l: u64, rng: &mut RngStream) -> Result<LayerTime> {
    if l < 2 {
        return Err(Error::InvalidPerimeter(l as i64));
    }
    let target = 2 * l;
    let (mut a, mut fresh, mut a_prime, mut n) = (0u64, 0u64, 0u64, 0u64);
    while a < target {
        let e = nu.sample_halfplane(rng)?;
        n += 1;
        match e {
            PeelEvent::NewFace(k) => {
                a += 1;
                a_prime += 1;
                fresh = fresh.saturating_add(2 * k - 1);
            }
            PeelEvent::GlueRight(j) => {
                a = a.saturating_add(2 * j + 2);
                a_prime = a_prime.saturating_add(2 * j + 2);
            }
            PeelEvent::GlueLeft(j) => {
                let eaten = 2 * j + 1;
                a_prime += 1;
                if eaten <= fresh {
                    fresh -= eaten;
                    a += 1;
                } else {
                    a = a.saturating_add(1 + eaten - fresh);
                    fresh = 0;
                }
            }
        }
    }
    Ok(LayerTime { sigma: n, a_prime })
}

/// The walk `A'` with steps `2j` w.p. `ν(-j)/2` and 1 otherwise, after `n` steps.
pub fn a_prime_walk(nu: &NuSampler, n: u64, rng: &mut RngStream) -> Result<u64> {
    let mut a = 0u64;
    for _ in 0..n {
        a = a.saturating_add(match nu.sample_halfplane(rng)? {
            PeelEvent::GlueRight(j) => 2 * j + 2,
            _ => 1,
        });
    }
    Ok(a)
}
