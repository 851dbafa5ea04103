//! One PASS/FAIL line per acceptance criterion.
//!
//! The default sizes fit a single core in about fifteen minutes. `PEELLAB_ACCEPTANCE=full`
//! switches to the full sizes (hours). Only the exact gates (1, 2, 3, 11, 15) fail the
//! test; Monte-Carlo gates converge on a `1/log n` scale and are reported, not asserted.

mod common;

use peellab::eden::eden_clock;
use peellab::estimators::{ks_two_sample, mean, median, survival_slope};
use peellab::layers::{first_layer_time, heights_at};
use peellab::perco::{cut_edge_mass, run_cluster};
use peellab::walk_lab::{cauchy_gof, lambda_half_closed, make_walk_law, tau_tail, trig_identity_gap};
use peellab::{
    calibrate, kernel_conditioned, kernel_finite, run_replicas, validate, Engine, Estimate, Gate, Mode, NuSampler, Report,
    StepLaw,
};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

struct Sizes {
    fill_draws: u64,
    moment_n: u64,
    moment_reps: u64,
    growth_n: u64,
    growth_reps: u64,
    eden_n: u64,
    eden_reps: u64,
    height_max: u64,
    height_reps: u64,
    tau_reps: u64,
    perco_reps: u64,
    perco_cap: u64,
    gof_n: u64,
    gof_reps: u64,
    indep_n: u64,
    indep_reps: u64,
    layer_l: u64,
    layer_reps: u64,
}

impl Sizes {
    fn pick() -> Sizes {
        let full = std::env::var("PEELLAB_ACCEPTANCE").is_ok_and(|v| v == "full");
        if full {
            Sizes {
                fill_draws: 1_000_000,
                moment_n: 100_000,
                moment_reps: 10_000,
                growth_n: 1_000_000,
                growth_reps: 100,
                eden_n: 1_000_000,
                eden_reps: 200,
                height_max: 10_000_000,
                height_reps: 200,
                tau_reps: 100_000,
                perco_reps: 100_000,
                perco_cap: 1_000_000,
                gof_n: 10_000,
                gof_reps: 100_000,
                indep_n: 10_000,
                indep_reps: 2000,
                layer_l: 100_000,
                layer_reps: 2000,
            }
        } else {
            Sizes {
                fill_draws: 1_000_000,
                moment_n: 100_000,
                moment_reps: 10_000,
                growth_n: 100_000,
                growth_reps: 100,
                eden_n: 1_000_000,
                eden_reps: 200,
                height_max: 10_000_000,
                height_reps: 60,
                tau_reps: 100_000,
                perco_reps: 100_000,
                perco_cap: 1_000_000,
                gof_n: 10_000,
                gof_reps: 100_000,
                indep_n: 10_000,
                indep_reps: 400,
                layer_l: 100_000,
                layer_reps: 2000,
            }
        }
    }
}

struct Line {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn line(id: u32, name: &'static str, pass: bool, detail: String) -> Line {
    Line { id, name, pass, detail }
}

fn log_grid(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut v: Vec<u64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as u64).collect();
    v.dedup();
    v
}

fn rel(x: f64, target: f64) -> f64 {
    (x - target).abs() / target.abs()
}

fn c1_calibration() -> (Line, StepLaw) {
    let t = Instant::now();
    let law = calibrate(0.5, 100_000, 1e-8).expect("calibration");
    let secs = t.elapsed().as_secs_f64();
    let r = validate(&law, 2000);
    let pass = r.mass_defect < 1e-8
        && r.max_residual < 1e-8
        && (r.tail_exponent_neg - 2.0).abs() < 0.05
        && (r.tail_exponent_pos - 2.0).abs() < 0.05
        && secs < 120.0;
    let d = format!(
        "mass defect {:.1e}, harmonicity {:.1e}, tail exponents {:.3}/{:.3}, {:.1}s",
        r.mass_defect, r.max_residual, r.tail_exponent_neg, r.tail_exponent_pos, secs
    );
    (line(1, "calibration", pass, d), law)
}

fn c2_kernels(law: &StepLaw) -> Line {
    let worst_c = (1..=10_000i64).map(|l| (kernel_conditioned(law, l).unwrap().total_mass() - 1.0).abs()).fold(0.0, f64::max);
    let worst_f = (1..=1000i64).map(|l| (kernel_finite(law, l).unwrap().total_mass() - 1.0).abs()).fold(0.0, f64::max);
    line(2, "kernel normalization", worst_c < 1e-10 && worst_f < 1e-9, format!("conditioned {worst_c:.1e}, finite {worst_f:.1e}"))
}

fn c3_fill(law: &StepLaw, s: &Sizes) -> Line {
    let oracle = common::fill_oracle(law, 1, 6, 40);
    let engine = Engine::new(law).unwrap();
    let counts = run_replicas(s.fill_draws, 1, 303, |rng| {
        let r = engine.fill_hole(1, rng)?;
        Ok((r.faces as usize, r.vertices as usize - 2))
    })
    .unwrap()
    .into_iter()
    .fold(HashMap::<(usize, usize), u64>::new(), |mut m, k| {
        *m.entry(k).or_default() += 1;
        m
    });
    let n = s.fill_draws as f64;
    let (mut tv, mut rest_emp, mut rest_or) = (0.0, 1.0, 1.0);
    for (cell, &p) in &oracle {
        let q = counts.get(cell).copied().unwrap_or(0) as f64 / n;
        tv += (q - p).abs();
        rest_emp -= q;
        rest_or -= p;
    }
    let tv = 0.5 * (tv + (rest_emp - rest_or).abs());
    line(3, "fill oracle", tv < 0.01, format!("TV {tv:.4} over {} cells + remainder", oracle.len()))
}

fn c4_moment(law: &StepLaw, s: &Sizes) -> Line {
    let engine = Engine::new(law).unwrap().without_volume();
    let n = s.moment_n;
    let xs = run_replicas(s.moment_reps, 1, 404, |rng| Ok(n as f64 / engine.run_to(Mode::Plane, n, rng)?.p as f64)).unwrap();
    let m = mean(&xs).unwrap();
    let target = 2.0 / (PI * PI * law.p_q);
    line(4, "inverse perimeter moment", rel(m, target) < 0.10, format!("E[n/P] = {m:.4} vs {target:.4} (n = {n}, {} replicas)", s.moment_reps))
}

fn c5_c6_growth(law: &StepLaw, s: &Sizes) -> (Line, Line) {
    let engine = Engine::new(law).unwrap();
    let n = s.growth_n;
    let states = run_replicas(s.growth_reps, 1, 505, |rng| engine.run_to(Mode::Plane, n, rng)).unwrap();
    let ln = (n as f64).ln();
    let lp: Vec<f64> = states.iter().map(|x| (x.p as f64).ln() / ln).collect();
    let lv: Vec<f64> = states.iter().map(|x| (x.v as f64).ln() / ln).collect();
    let vf: Vec<f64> = states.iter().map(|x| x.v as f64 / x.f as f64).collect();
    let (mp, mv, mr) = (median(&lp).unwrap(), median(&lv).unwrap(), median(&vf).unwrap());
    let target = 4.0 / (law.c_q - 4.0);
    (
        line(
            5,
            "growth exponents",
            (0.95..=1.05).contains(&mp) && (1.42..=1.58).contains(&mv),
            format!("log P/log n = {mp:.3}, log V/log n = {mv:.3} (n = {n}, {} replicas)", s.growth_reps),
        ),
        line(6, "vertex/face ratio", rel(mr, target) < 0.10, format!("V/F = {mr:.4} vs {target:.4}")),
    )
}

fn c7_eden(law: &StepLaw, s: &Sizes) -> Line {
    let engine = Engine::new(law).unwrap().without_volume();
    let n = s.eden_n;
    let ts = run_replicas(s.eden_reps, 1, 707, |rng| Ok(eden_clock(&engine, n, rng)?.0 / (n as f64).ln())).unwrap();
    let m = mean(&ts).unwrap();
    let target = 1.0 / (PI * PI * law.p_q);
    line(7, "eden clock", rel(m, target) < 0.15, format!("T/log n = {m:.4} vs {target:.4} (n = {n})"))
}

fn c8_heights(law: &StepLaw, s: &Sizes) -> Line {
    let engine = Engine::new(law).unwrap().without_volume();
    let cps: Vec<u64> = [10_000u64, 100_000, 1_000_000, 10_000_000].into_iter().filter(|&c| c <= s.height_max).collect();
    let runs = run_replicas(s.height_reps, 1, 808, |rng| heights_at(&engine, &cps, rng)).unwrap();
    let target = 1.0 / (2.0 * PI * PI);
    let meds: Vec<f64> = (0..cps.len())
        .map(|i| median(&runs.iter().map(|r| r[i].h as f64 / (cps[i] as f64).ln().powi(2)).collect::<Vec<_>>()).unwrap())
        .collect();
    let monotone = meds.windows(2).all(|w| (w[1] - target).abs() < (w[0] - target).abs());
    let last = *meds.last().unwrap();
    let d = format!("H/log² n = {meds:.4?} vs {target:.4} (n ≤ {}, {} replicas)", cps.last().unwrap(), s.height_reps);
    line(8, "height constant", monotone && rel(last, target) < 0.30, d)
}

fn c9_tau(s: &Sizes) -> Line {
    let grid = log_grid(10, 1_000_000, 16);
    let c = 0.2;
    let cases = [
        ("b = 0", make_walk_law(c, c, Some(0.0)).unwrap(), -0.5, 0.05),
        ("b = πc₊", make_walk_law(c, c, Some(PI * c)).unwrap(), -0.75, 0.07),
        ("c₊ < c₋", make_walk_law(0.1, 0.3, None).unwrap(), -1.0, 0.15),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, law, target, tol)) in cases.into_iter().enumerate() {
        let slope = tau_tail(&law, &grid, s.tau_reps, 900 + i as u64, 1).map(|t| t.estimate.slope).unwrap_or(f64::NAN);
        pass &= (slope - target).abs() < tol;
        parts.push(format!("{name}: {slope:.3} vs {target}"));
    }
    line(9, "entrance-time exponents", pass, parts.join("; "))
}

fn c10_perco(law: &StepLaw, s: &Sizes) -> Line {
    let nu = NuSampler::new(law).unwrap();
    let grid = log_grid(10, s.perco_cap / 10, 16);
    let mut lam = Vec::new();
    for (i, p) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let thetas: Vec<u64> = run_replicas(s.perco_reps, 1, 1000 + i as u64, |rng| Ok(run_cluster(&nu, p, s.perco_cap, rng)?.theta)).unwrap();
        lam.push(survival_slope(&thetas, &grid, grid[0], 20, 200, 7).map(|t| -t.slope).unwrap_or(f64::NAN));
    }
    let half = lambda_half_closed(law.p_q);
    let pass = lam[0] > lam[1]
        && lam[1] > lam[2]
        && (lam[0] - 1.0).abs() < 0.15
        && (lam[1] - half).abs() < 0.10
        && lam[2] < 0.15;
    line(10, "percolation transition", pass, format!("λ = {:.3}, {:.3}, {:.3}; λ(½) target {half:.3}", lam[0], lam[1], lam[2]))
}

fn c11_trig(law: &StepLaw) -> Line {
    let gap = trig_identity_gap(law.p_q);
    line(11, "trig identity", gap < 1e-12, format!("gap {gap:.1e}"))
}

fn c12_gof(law: &StepLaw, s: &Sizes) -> Line {
    let nu = NuSampler::new(law).unwrap();
    let g = cauchy_gof(law, &nu, s.gof_n, s.gof_reps, 1212, 1).unwrap();
    line(12, "Cauchy limit", g.ks < 0.02, format!("KS {:.4} (n = {}, {} replicas)", g.ks, s.gof_n, s.gof_reps))
}

fn c13_independence(law: &StepLaw, s: &Sizes) -> Line {
    let engine = Engine::new(law).unwrap();
    let n = s.indep_n;
    let layers = run_replicas(s.indep_reps, 1, 1313, |rng| Ok(heights_at(&engine, &[n], rng)?[0].state)).unwrap();
    let eden = run_replicas(s.indep_reps, 1, 1314, |rng| Ok(eden_clock(&engine, n, rng)?.1)).unwrap();
    let col = |v: &[peellab::ExplorationState], f: fn(&peellab::ExplorationState) -> f64| v.iter().map(f).collect::<Vec<f64>>();
    let (_, pp) = ks_two_sample(&col(&layers, |x| x.p as f64), &col(&eden, |x| x.p as f64)).unwrap();
    let (_, pv) = ks_two_sample(&col(&layers, |x| x.v as f64), &col(&eden, |x| x.v as f64)).unwrap();
    line(13, "algorithm independence", pp > 1e-3 && pv > 1e-3, format!("KS p-values P {pp:.3}, V {pv:.3} (n = {n})"))
}

fn c14_layer_time(law: &StepLaw, s: &Sizes) -> Line {
    let nu = NuSampler::new(law).unwrap();
    let l = s.layer_l;
    let norm = law.p_q * (l as f64).ln() / (2.0 * l as f64);
    let xs = run_replicas(s.layer_reps, 1, 1414, |rng| Ok(first_layer_time(&nu, l, rng)?.sigma as f64 * norm)).unwrap();
    let m = median(&xs).unwrap();
    let incs: Vec<f64> = [100u64, 1000, 10_000]
        .iter()
        .map(|&w| cut_edge_mass(law, 2 * w).unwrap() - cut_edge_mass(law, w).unwrap())
        .collect();
    let avg = incs.iter().sum::<f64>() / 3.0;
    let flat = incs.iter().all(|&x| rel(x, avg) < 0.2);
    line(14, "layer time", rel(m, 1.0) < 0.20 && flat, format!("σ ratio {m:.3}; cut-edge increments {incs:.4?}"))
}

fn c15_reproducible(law: &StepLaw) -> Line {
    let engine = Engine::new(law).unwrap();
    let run = |workers: usize| {
        let states = run_replicas(16, workers, 1515, |rng| engine.run_to(Mode::Plane, 1000, rng)).unwrap();
        let xs: Vec<f64> = states.iter().map(|x| 1000.0 / x.p as f64).collect();
        let m = mean(&xs).unwrap();
        let mut r = Report::new("peel", law.fingerprint());
        r.push(Estimate::new("inverse_moment", m, (m, m), 16).gated(Gate::Relative { target: 0.69, tolerance: 0.5 }));
        let v = median(&states.iter().map(|x| x.v as f64).collect::<Vec<_>>()).unwrap();
        r.push(Estimate::new("median_v", v, (v, v), 16));
        let manifest = serde_json::json!({ "law": law.fingerprint(), "seed": 1515, "states": states });
        (r.to_json(), manifest.to_string())
    };
    let a = run(1);
    let same = a == run(1) && a == run(2);
    line(15, "reproducibility", same, format!("report {} bytes", a.0.len()))
}

#[test]
fn acceptance() {
    let s = Sizes::pick();
    let mut lines = Vec::new();
    let mut timed = |f: &mut dyn FnMut() -> Vec<Line>| {
        let t = Instant::now();
        for mut l in f() {
            l.detail.push_str(&format!(" [{:.0}s]", t.elapsed().as_secs_f64()));
            // straight to stderr so the lines survive libtest's output capture
            let _ = writeln!(std::io::stderr(), "{} {:>2} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.name, l.detail);
            lines.push(l);
        }
    };
    let mut law = None;
    timed(&mut || {
        let (l, w) = c1_calibration();
        law = Some(w);
        vec![l]
    });
    let law = law.unwrap();
    timed(&mut || vec![c2_kernels(&law)]);
    timed(&mut || vec![c3_fill(&law, &s)]);
    timed(&mut || vec![c4_moment(&law, &s)]);
    timed(&mut || {
        let (a, b) = c5_c6_growth(&law, &s);
        vec![a, b]
    });
    timed(&mut || vec![c7_eden(&law, &s)]);
    timed(&mut || vec![c8_heights(&law, &s)]);
    timed(&mut || vec![c9_tau(&s)]);
    timed(&mut || vec![c10_perco(&law, &s)]);
    timed(&mut || vec![c11_trig(&law)]);
    timed(&mut || vec![c12_gof(&law, &s)]);
    timed(&mut || vec![c13_independence(&law, &s)]);
    timed(&mut || vec![c14_layer_time(&law, &s)]);
    timed(&mut || vec![c15_reproducible(&law)]);

    let passed = lines.iter().filter(|l| l.pass).count();
    let _ = writeln!(std::io::stderr(), "{passed}/{} criteria pass", lines.len());
    for l in &lines {
        if [1, 2, 3, 11, 15].contains(&l.id) {
            assert!(l.pass, "criterion {} ({}) failed: {}", l.id, l.name, l.detail);
        }
    }
}
