//! Face percolation on the half-plane map, explored along the cluster interface.
//!
//! The black boundary length minus one follows a walk with steps `X`:
//! `P(X = 2k) = p ν(k)`, `P(X = -1) = (1-p) ν([0,∞)) + ν((-∞,-1])/2`,
//! `P(X = -2k-2) = ν(-k-1)/2`. The cluster closes when the walk goes below 0.

use crate::error::{Error, Result};
use crate::quad::CompensatedSum;
use crate::sampling::{NuSampler, RngStream};
use crate::step_law::StepLaw;
use serde::{Deserialize, Serialize};

pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

/// How one interface step came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    /// Black face of degree `2k+2`.
    Black(u64),
    /// White face discovered.
    White,
    /// Identification with an edge on the left.
    LeftGlue(u64),
    /// Identification on the right swallowing `2j` black edges.
    RightGlue(u64),
}

impl Move {
    pub fn increment(&self) -> i64 {
        match *self {
            Move::Black(k) => 2 * k as i64,
            Move::White | Move::LeftGlue(_) => -1,
            Move::RightGlue(j) => -2 * j as i64,
        }
    }

    /// Counted in `N`: a white face found, or a left identification.
    pub fn counts_toward_n(&self) -> bool {
        matches!(self, Move::White | Move::LeftGlue(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceState {
    /// Black boundary length; starts at 1 (the root 2-gon seen from the hole).
    pub black_len: i64,
    pub theta: u64,
    pub n_count: u64,
    /// Whether the last step closed the cluster.
    pub closed: bool,
}

impl InterfaceState {
    pub fn new() -> Self {
        InterfaceState { black_len: 1, theta: 0, n_count: 0, closed: false }
    }
}

impl Default for InterfaceState {
    fn default() -> Self {
        Self::new()
    }
}

pub fn sample_move(nu: &NuSampler, p: f64, rng: &mut RngStream) -> Result<Move> {
    let i = nu.sample(rng)?;
    Ok(if i >= 0 {
        if rng.unit() < p {
            Move::Black(i as u64)
        } else {
            Move::White
        }
    } else if rng.coin() {
        Move::LeftGlue(i.unsigned_abs())
    } else {
        Move::RightGlue(i.unsigned_abs())
    })
}

/// One interface step. `N` only counts steps taken before the closing one.
pub fn perco_step(nu: &NuSampler, p: f64, s: &mut InterfaceState, rng: &mut RngStream) -> Result<Move> {
    if s.black_len < 1 || s.closed {
        return Err(Error::InvalidState(format!("black boundary length {} is closed", s.black_len)));
    }
    let m = sample_move(nu, p, rng)?;
    s.black_len = s.black_len.checked_add(m.increment()).ok_or(Error::Overflow("black length"))?;
    s.theta += 1;
    if s.black_len < 1 {
        s.closed = true;
    } else if m.counts_toward_n() {
        s.n_count += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub theta: u64,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "N_prime")]
    pub n_prime: u64,
    /// The run hit the step cap; `theta` is then a lower bound.
    pub censored: bool,
}

impl ClusterStats {
    /// `[max(N, N'), N + N']` brackets the outer boundary length.
    pub fn l_bounds(&self) -> (u64, u64) {
        (self.n.max(self.n_prime), self.n + self.n_prime)
    }
}

fn run_side(nu: &NuSampler, p: f64, cap: u64, rng: &mut RngStream) -> Result<(u64, u64, bool)> {
    let mut s = InterfaceState::new();
    while !s.closed && s.theta < cap {
        perco_step(nu, p, &mut s, rng)?;
    }
    Ok((s.theta, s.n_count, !s.closed))
}

/// Explore one cluster, plus an independent mirrored run for `N'`.
pub fn run_cluster(nu: &NuSampler, p: f64, cap: u64, rng: &mut RngStream) -> Result<ClusterStats> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (0, 1]")));
    }
    let (theta, n, censored) = run_side(nu, p, cap, rng)?;
    let (_, n_prime, _) = run_side(nu, p, cap, rng)?;
    Ok(ClusterStats { theta, n, n_prime, censored })
}

/// Probability of each increment of the `X` walk.
pub fn x_law(law: &StepLaw, p: f64, x: i64) -> f64 {
    if x == -1 {
        (1.0 - p) * law.positive_mass() + 0.5 * law.negative_mass()
    } else if x >= 0 && x % 2 == 0 {
        p * law.nu(x / 2)
    } else if x <= -2 && x % 2 == 0 {
        0.5 * law.nu(x / 2)
    } else {
        0.0
    }
}

/// Total mass of the `X` law: `p α + (1-p) α + ν⁻/2 + ν⁻/2`.
pub fn x_law_mass(law: &StepLaw, p: f64) -> f64 {
    p * law.positive_mass() + x_law(law, p, -1) + 0.5 * law.negative_mass()
}

/// `Σ ½ ν(-(i+j)/2 - 1)` over `i, j ≥ 0`, `i + j = 2m` even with `m < window`.
///
/// There are `2m + 1` pairs with `i + j = 2m`; `window = 1` is the single term `½ ν(-1)`.
pub fn cut_edge_mass(law: &StepLaw, window: u64) -> Result<f64> {
    if window < 1 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let mut acc = CompensatedSum::new();
    for m in 0..window {
        acc.add(0.5 * (2 * m + 1) as f64 * law.nu_neg(m + 1));
    }
    Ok(acc.value())
}

/// Empirical `P(θ > n)` on a grid.
pub fn survival_curve(thetas: &[u64], grid: &[u64]) -> Vec<(u64, f64, u64)> {
    let mut sorted = thetas.to_vec();
    sorted.sort_unstable();
    let total = sorted.len() as f64;
    grid.iter()
        .map(|&n| {
            let above = (sorted.len() - sorted.partition_point(|&t| t <= n)) as u64;
            (n, above as f64 / total, above)
        })
        .collect()
}
