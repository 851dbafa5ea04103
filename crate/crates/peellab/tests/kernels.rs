mod common;

use peellab::estimators::chi_square;
use peellab::perco::{cut_edge_mass, x_law, x_law_mass};
use peellab::{kernel_conditioned, kernel_finite, kernel_halfplane, FiniteEvent, HarmonicTable, PeelEvent};

#[test]
fn conditioned_kernel_has_unit_mass() {
    let law = common::law();
    for l in 1..=10_000i64 {
        let m = kernel_conditioned(law, l).unwrap().total_mass();
        assert!((m - 1.0).abs() < 1e-10, "ℓ = {l}: {m}");
    }
}

#[test]
fn conditioned_kernel_direct_sum() {
    // brute-force sum of the event probabilities, with the k^{-3/2} tail in closed form
    let law = common::law();
    let t = HarmonicTable::shared();
    let big = 1_000_000u64;
    for l in [1i64, 2, 5, 30] {
        let k = kernel_conditioned(law, l).unwrap();
        let mut s: f64 = (1..=big).map(|k_| k.prob(PeelEvent::NewFace(k_))).sum();
        s += (0..l.max(2) as u64).map(|j| k.prob(PeelEvent::GlueLeft(j)) + k.prob(PeelEvent::GlueRight(j))).sum::<f64>();
        let tail = 4.0 * law.p_q / (std::f64::consts::PI * big as f64).sqrt() / t.h(l);
        assert!((s + tail - 1.0).abs() < 1e-5, "ℓ = {l}: {}", s + tail);
    }
}

#[test]
fn glue_beyond_perimeter_is_impossible() {
    let law = common::law();
    let k = kernel_conditioned(law, 4).unwrap();
    assert!(k.prob(PeelEvent::GlueLeft(2)) > 0.0);
    assert_eq!(k.prob(PeelEvent::GlueLeft(3)), 0.0);
    assert_eq!(k.prob(PeelEvent::NewFace(0)), 0.0);
    assert!(kernel_conditioned(law, 0).is_err());
    assert!(kernel_finite(law, 0).is_err());
}

#[test]
fn finite_kernel_satisfies_tutte_equation() {
    let law = common::law();
    for l in 1..=1000i64 {
        let m = kernel_finite(law, l).unwrap().total_mass();
        assert!((m - 1.0).abs() < 1e-9, "ℓ = {l}: {m}");
    }
}

#[test]
fn finite_kernel_agrees_with_partition_functions() {
    let law = common::law();
    for l in [1i64, 2, 9, 40] {
        let k = kernel_finite(law, l).unwrap();
        let mut events: Vec<FiniteEvent> = (1..30).map(FiniteEvent::NewFace).collect();
        events.extend((0..l as u64).map(|j| FiniteEvent::Split(j, l as u64 - 1 - j)));
        for e in events {
            let (a, b) = (k.prob(e), k.prob_via_partition(e, law.c_q));
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{e:?}: {a} vs {b}");
        }
        if l > 1 {
            assert_eq!(k.prob(FiniteEvent::Split(0, 0)), 0.0);
        }
    }
}

#[test]
fn halfplane_kernel_is_the_step_law() {
    let law = common::law();
    let k = kernel_halfplane(law);
    assert!((k.total_mass() - 1.0).abs() < 1e-8);
    for i in -50i64..50 {
        assert!((k.increment_prob(i) - law.nu(i)).abs() < 1e-16, "i = {i}");
    }
    // with every face black the percolation walk reads the half-plane increments at double scale
    for x in -40i64..40 {
        let want = if x >= 0 && x % 2 == 0 {
            law.nu(x / 2)
        } else if x < -1 && x % 2 == 0 {
            0.5 * law.nu(x / 2)
        } else if x == -1 {
            0.5 * law.negative_mass()
        } else {
            0.0
        };
        assert!((x_law(law, 1.0, x) - want).abs() < 1e-16);
    }
}

#[test]
fn percolation_step_law_has_unit_mass() {
    let law = common::law();
    for p in [0.1, 0.25, 0.5, 0.75, 1.0] {
        assert!((x_law_mass(law, p) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn cut_edge_mass_grows_logarithmically() {
    let law = common::law();
    assert!((cut_edge_mass(law, 1).unwrap() - 0.5 * law.nu(-1)).abs() < 1e-16);
    assert!(cut_edge_mass(law, 0).is_err());
    let m: Vec<f64> = [100u64, 200, 1000, 2000, 10_000, 20_000].iter().map(|&w| cut_edge_mass(law, w).unwrap()).collect();
    assert!(m.windows(2).all(|w| w[1] > w[0]));
    // ν(-j) ~ p_q/j² makes each doubling add about p_q ln 2
    let incs = [m[1] - m[0], m[3] - m[2], m[5] - m[4]];
    let target = law.p_q * 2f64.ln();
    for inc in incs {
        assert!((inc / target - 1.0).abs() < 0.2, "{inc} vs {target}");
    }
}

#[test]
fn chi_square_rejects_a_wrong_law() {
    let probs = [0.5, 0.3, 0.2];
    let (_, _, p) = chi_square(&[5000, 3000, 2000], &probs, 10_000).unwrap();
    assert!(p > 0.99);
    let (_, _, p) = chi_square(&[5300, 2900, 1800], &probs, 10_000).unwrap();
    assert!(p < 1e-6);
}
