mod common;

use peellab::eden::eden_run;
use peellab::estimators::{hill, loglog_slope, quantile};
use peellab::layers::{layer_step, LayeredState};
use peellab::perco::run_cluster;
use peellab::step_law::conditioned_mass;
use peellab::{Engine, ExplorationState, FiniteEvent, HarmonicTable, KernelSampler, Mode, NuSampler, PeelEvent, RngStream};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn harmonic_function_increments(l in 0i64..3_000_000) {
        let t = HarmonicTable::shared();
        let (a, b) = (t.h(l), t.h(l + 1));
        prop_assert!(b > a);
        // exact recursion inside the table, asymptotic expansions beyond it
        let tol = if (l as usize) < t.l_max() { 1e-9 } else { 1e-6 };
        prop_assert!(((b - a) - t.u(l)).abs() <= tol * t.u(l));
    }

    #[test]
    fn conditioned_mass_is_one(l in 1i64..2_000_000) {
        prop_assert!((conditioned_mass(common::law(), l) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conditioned_events_stay_in_support(l in 1i64..100_000, seed in any::<u64>()) {
        let ks = KernelSampler::new(common::law()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..200 {
            match ks.conditioned(l, &mut rng).unwrap() {
                PeelEvent::NewFace(k) => prop_assert!(k >= 1),
                PeelEvent::GlueLeft(j) | PeelEvent::GlueRight(j) => prop_assert!((j as i64) <= l - 2),
            }
        }
    }

    #[test]
    fn finite_events_stay_in_support(l in 1i64..100_000, seed in any::<u64>()) {
        let ks = KernelSampler::new(common::law()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..200 {
            match ks.finite(l, &mut rng).unwrap() {
                FiniteEvent::NewFace(k) => prop_assert!(k >= 1),
                FiniteEvent::Split(a, b) => prop_assert_eq!((a + b) as i64, l - 1),
            }
        }
    }

    #[test]
    fn fill_obeys_euler(l in 0u64..40, seed in any::<u64>()) {
        let engine = Engine::new(common::law()).unwrap().with_budget(10_000_000);
        let mut rng = RngStream::new(seed, 0);
        if let Ok(r) = engine.fill_hole(l, &mut rng) {
            // each face adds k-1 to the perimeter and every unit of perimeter ends as one vertex
            prop_assert!(r.vertices >= l + 1);
            if r.faces == 0 {
                prop_assert_eq!(r.vertices, l + 1);
            }
        }
    }

    #[test]
    fn plane_exploration_is_monotone(seed in any::<u64>()) {
        let engine = Engine::new(common::law()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let mut s = ExplorationState::new(Mode::Plane);
        for i in 1..=300u64 {
            let before = s;
            engine.step(&mut s, &mut rng).unwrap();
            prop_assert_eq!(s.n, i);
            prop_assert!(s.p >= 1);
            prop_assert!(s.v >= before.v && s.f >= before.f);
            prop_assert!(s.f > before.f || s.p < before.p);
        }
    }

    #[test]
    fn layer_invariant_holds(seed in any::<u64>()) {
        let engine = Engine::new(common::law()).unwrap().without_volume();
        let mut rng = RngStream::new(seed, 0);
        let mut s = LayeredState::new();
        let mut h = 0;
        for _ in 0..500 {
            layer_step(&engine, &mut s, &mut rng).unwrap();
            prop_assert!(s.d >= 1 && s.d <= 2 * s.state.p, "D = {}, P = {}", s.d, s.state.p);
            prop_assert!(s.h == h || s.h == h + 1);
            h = s.h;
        }
    }

    #[test]
    fn eden_clock_increases(seed in any::<u64>()) {
        let engine = Engine::new(common::law()).unwrap().without_volume();
        let mut rng = RngStream::new(seed, 0);
        let tr = eden_run(&engine, 200, 1, &mut rng).unwrap();
        prop_assert_eq!(tr.steps.len(), 201);
        prop_assert!(tr.steps.windows(2).all(|w| w[1].t > w[0].t && w[1].n == w[0].n + 1));
    }

    #[test]
    fn cluster_counts_are_consistent(p in 0.05f64..1.0, seed in any::<u64>()) {
        let nu = NuSampler::new(common::law()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let c = run_cluster(&nu, p, 5000, &mut rng).unwrap();
        prop_assert!(c.theta >= 1 && c.n < c.theta.max(1) + 1);
        prop_assert!(c.n <= c.theta);
        prop_assert_eq!(c.censored, c.theta >= 5000);
        let (lo, hi) = c.l_bounds();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn loglog_slope_ignores_scale(a in -3.0f64..3.0, c in 1e-6f64..1e6) {
        let pts: Vec<(f64, f64)> = (1..=20).map(|i| { let x = (i * i) as f64; (x, c * x.powf(a)) }).collect();
        let est = loglog_slope(&pts, (0.0, f64::INFINITY), 0, 1).unwrap();
        prop_assert!((est.slope - a).abs() < 1e-9);
    }

    #[test]
    fn quantiles_are_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..200), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&v, lo).unwrap() <= quantile(&v, hi).unwrap());
    }
}

#[test]
fn hill_recovers_pareto_index() {
    let mut rng = RngStream::new(3, 0);
    let xs: Vec<f64> = (0..200_000).map(|_| rng.unit_open().powf(-1.0 / 1.5)).collect();
    let a = hill(&xs, 5000).unwrap();
    assert!((a - 1.5).abs() < 0.06, "{a}");
}
