//! The filled-in peeling chain `(P, V, F)` on the infinite map and the half-plane.

use crate::error::{Error, Result};
use crate::kernel::{FiniteEvent, PeelEvent};
use crate::sampling::{KernelSampler, RngStream};
use crate::step_law::StepLaw;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DEFAULT_FILL_BUDGET: u64 = 1_000_000_000;
pub const TRAJECTORY_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plane,
    HalfPlane,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Plane => "plane",
            Mode::HalfPlane => "half-plane",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationState {
    /// Half-perimeter; algebraic in half-plane mode.
    pub p: i64,
    pub v: u64,
    pub f: u64,
    pub n: u64,
    pub mode: Mode,
}

impl ExplorationState {
    /// Plane mode starts from the root 2-gon, `P = 1`; the half-plane walk starts at 0.
    pub fn new(mode: Mode) -> Self {
        let p = match mode {
            Mode::Plane => 1,
            Mode::HalfPlane => 0,
        };
        ExplorationState { p, v: 0, f: 0, n: 0, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FillResult {
    pub vertices: u64,
    pub faces: u64,
    pub peel_steps: u64,
}

/// Bundles a kernel sampler with the fill settings.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    sampler: KernelSampler<'a>,
    /// Cap on finite-kernel draws inside one fill.
    pub fill_budget: u64,
    /// When false, holes are not filled and `V`, `F` only count peeled faces.
    pub track_volume: bool,
}

impl<'a> Engine<'a> {
    pub fn new(law: &'a StepLaw) -> Result<Self> {
        Ok(Engine { sampler: KernelSampler::new(law)?, fill_budget: DEFAULT_FILL_BUDGET, track_volume: true })
    }

    pub fn without_volume(mut self) -> Self {
        self.track_volume = false;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.fill_budget = budget;
        self
    }

    pub fn sampler(&self) -> &KernelSampler<'a> {
        &self.sampler
    }

    pub fn law(&self) -> &'a StepLaw {
        self.sampler.law()
    }

    /// Draw one event from the kernel of the state's mode.
    pub fn draw(&self, state: &ExplorationState, rng: &mut RngStream) -> Result<PeelEvent> {
        match state.mode {
            Mode::Plane => self.sampler.conditioned(state.p, rng),
            Mode::HalfPlane => self.sampler.halfplane(rng),
        }
    }

    /// Apply an already drawn event, filling the enclosed hole.
    pub fn apply(&self, state: &mut ExplorationState, event: PeelEvent, rng: &mut RngStream) -> Result<()> {
        let p = state.p.checked_add(event.increment()).ok_or(Error::Overflow("half-perimeter"))?;
        if state.mode == Mode::Plane && p < 1 {
            return Err(Error::InvalidState(format!("plane chain left ℕ: {} -> {}", state.p, p)));
        }
        match event {
            PeelEvent::NewFace(_) => {
                state.f = state.f.checked_add(1).ok_or(Error::Overflow("faces"))?;
            }
            PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => {
                if j >= 1 && self.track_volume {
                    let fill = self.fill_hole(j, rng)?;
                    state.v = state.v.checked_add(fill.vertices).ok_or(Error::Overflow("vertices"))?;
                    state.f = state.f.checked_add(fill.faces).ok_or(Error::Overflow("faces"))?;
                }
            }
        }
        state.p = p;
        state.n += 1;
        Ok(())
    }

    pub fn step(&self, state: &mut ExplorationState, rng: &mut RngStream) -> Result<PeelEvent> {
        let e = self.draw(state, rng)?;
        self.apply(state, e, rng)?;
        Ok(e)
    }

    /// Volume of a Boltzmann map with half-perimeter `l`, built by peeling it to completion.
    pub fn fill_hole(&self, l: u64, rng: &mut RngStream) -> Result<FillResult> {
        let mut out = FillResult::default();
        let mut stack = vec![l];
        while let Some(m) = stack.pop() {
            if m == 0 {
                out.vertices = out.vertices.checked_add(1).ok_or(Error::Overflow("fill vertices"))?;
                continue;
            }
            out.peel_steps += 1;
            if out.peel_steps > self.fill_budget {
                return Err(Error::WorkBudgetExceeded { budget: self.fill_budget });
            }
            match self.sampler.finite(m as i64, rng)? {
                FiniteEvent::NewFace(k) => {
                    out.faces += 1;
                    stack.push(m.checked_add(k - 1).ok_or(Error::Overflow("fill perimeter"))?);
                }
                FiniteEvent::Split(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        Ok(out)
    }

    /// Run `n_steps` steps recording every `stride`-th state (and the last one).
    pub fn run(&self, mode: Mode, n_steps: u64, stride: u64, rng: &mut RngStream) -> Result<Trajectory> {
        if n_steps < 1 || stride < 1 {
            return Err(Error::InvalidArgument("n_steps and stride must be positive".into()));
        }
        let mut s = ExplorationState::new(mode);
        let mut traj = Trajectory::new(self.law(), mode, stride, rng);
        traj.push(&s);
        while s.n < n_steps {
            self.step(&mut s, rng)?;
            if s.n % stride == 0 || s.n == n_steps {
                traj.push(&s);
            }
        }
        Ok(traj)
    }

    /// Final state after `n_steps`, without recording.
    pub fn run_to(&self, mode: Mode, n_steps: u64, rng: &mut RngStream) -> Result<ExplorationState> {
        let mut s = ExplorationState::new(mode);
        while s.n < n_steps {
            self.step(&mut s, rng)?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub schema: u32,
    pub law_fingerprint: String,
    pub master_seed: u64,
    pub stream_id: u64,
    pub mode: Mode,
    pub stride: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub n: u64,
    #[serde(rename = "P")]
    pub p: i64,
    #[serde(rename = "V")]
    pub v: u64,
    #[serde(rename = "F")]
    pub f: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub header: TrajectoryHeader,
    pub records: Vec<Record>,
}

impl Trajectory {
    pub fn new(law: &StepLaw, mode: Mode, stride: u64, rng: &RngStream) -> Self {
        Trajectory {
            header: TrajectoryHeader {
                schema: TRAJECTORY_SCHEMA,
                law_fingerprint: law.fingerprint().to_string(),
                master_seed: rng.master_seed(),
                stream_id: rng.stream_id(),
                mode,
                stride,
            },
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, s: &ExplorationState) {
        self.records.push(Record { n: s.n, p: s.p, v: s.v, f: s.f });
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// JSON lines: the header object, then one object per record.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        writeln!(w)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty trajectory".into()))?;
        let header: TrajectoryHeader = serde_json::from_str(head).map_err(|e| Error::Parse(e.to_string()))?;
        let records = lines
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<Record>>>()?;
        Ok(Trajectory { header, records })
    }
}
