//! Uniform peeling with exponential clocks (the Eden model on the dual map).

use crate::error::{Error, Result};
use crate::peel::{Engine, ExplorationState, Mode};
use crate::quad::CompensatedSum;
use crate::sampling::{sample_exponential, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockedRecord {
    pub n: u64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "P")]
    pub p: i64,
    #[serde(rename = "V")]
    pub v: u64,
    #[serde(rename = "F")]
    pub f: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockedTrajectory {
    pub stride: u64,
    pub steps: Vec<ClockedRecord>,
}

impl ClockedTrajectory {
    pub fn last(&self) -> &ClockedRecord {
        self.steps.last().expect("trajectory holds the initial state")
    }

    pub fn final_clock(&self) -> f64 {
        self.last().t
    }
}

/// Run `n_steps` clocked steps. The clock gains `e_i / (2 P_i)` before step `i`.
pub fn eden_run(engine: &Engine, n_steps: u64, stride: u64, rng: &mut RngStream) -> Result<ClockedTrajectory> {
    if n_steps < 1 || stride < 1 {
        return Err(Error::InvalidArgument("n_steps and stride must be positive".into()));
    }
    let mut s = ExplorationState::new(Mode::Plane);
    let mut clock = CompensatedSum::new();
    let rec = |s: &ExplorationState, t: f64| ClockedRecord { n: s.n, t, p: s.p, v: s.v, f: s.f };
    let mut steps = vec![rec(&s, 0.0)];
    while s.n < n_steps {
        clock.add(sample_exponential(2.0 * s.p as f64, rng)?);
        engine.step(&mut s, rng)?;
        if s.n % stride == 0 || s.n == n_steps {
            steps.push(rec(&s, clock.value()));
        }
    }
    Ok(ClockedTrajectory { stride, steps })
}

/// Run until the clock passes `t_max` (or `max_steps` steps), recording every `stride` steps.
///
/// The last record is the hull at time `t_max`: the state after the last step with `T_n ≤ t_max`.
pub fn eden_run_until(engine: &Engine, t_max: f64, max_steps: u64, stride: u64, rng: &mut RngStream) -> Result<ClockedTrajectory> {
    if !(t_max > 0.0) || stride < 1 {
        return Err(Error::InvalidArgument("t_max and stride must be positive".into()));
    }
    let mut s = ExplorationState::new(Mode::Plane);
    let mut clock = CompensatedSum::new();
    let rec = |s: &ExplorationState, t: f64| ClockedRecord { n: s.n, t, p: s.p, v: s.v, f: s.f };
    let mut steps = vec![rec(&s, 0.0)];
    let mut last_kept = true;
    let mut t_last = 0.0;
    while s.n < max_steps {
        clock.add(sample_exponential(2.0 * s.p as f64, rng)?);
        if clock.value() > t_max {
            break;
        }
        engine.step(&mut s, rng)?;
        t_last = clock.value();
        last_kept = s.n % stride == 0;
        if last_kept {
            steps.push(rec(&s, t_last));
        }
    }
    if !last_kept {
        steps.push(rec(&s, t_last));
    }
    Ok(ClockedTrajectory { stride, steps })
}

/// Clock value `T_n` only, skipping the record vector.
pub fn eden_clock(engine: &Engine, n_steps: u64, rng: &mut RngStream) -> Result<(f64, ExplorationState)> {
    let mut s = ExplorationState::new(Mode::Plane);
    let mut clock = CompensatedSum::new();
    while s.n < n_steps {
        clock.add(sample_exponential(2.0 * s.p as f64, rng)?);
        engine.step(&mut s, rng)?;
    }
    Ok((clock.value(), s))
}

/// State at `U_t - 1` with `U_t = inf{n : T_n > t}`, read from the recorded steps.
///
/// Exact when the stride is 1; otherwise the last recorded state with `T ≤ t`.
pub fn hull_at_time(traj: &ClockedTrajectory, t: f64) -> Result<(i64, u64, u64)> {
    if !(t >= 0.0) || t > traj.final_clock() {
        return Err(Error::InvalidArgument(format!("time {t} outside [0, {}]", traj.final_clock())));
    }
    let idx = traj.steps.partition_point(|r| r.t <= t);
    let r = &traj.steps[idx.saturating_sub(1)];
    Ok((r.p, r.v, r.f))
}
