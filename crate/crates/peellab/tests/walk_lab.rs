use peellab::walk_lab::{entrance_time, increasing_walk_deviation, lambda_half_closed, make_walk_law, rho, trig_identity_gap};
use peellab::RngStream;
use std::f64::consts::PI;

#[test]
fn trig_identity_is_exact() {
    for i in 1..=500 {
        let p = i as f64 / 1000.0;
        assert!(trig_identity_gap(p) < 1e-12, "p = {p}");
    }
}

#[test]
fn rho_limits() {
    assert!((rho(PI * 0.2, 0.2) - 0.75).abs() < 1e-15);
    assert!(rho(-1e12, 0.2) < 1e-9);
    assert!((lambda_half_closed(0.292_893_218_813_452_5) - 0.342).abs() < 1e-3);
}

#[test]
fn walk_sampler_tails() {
    let law = make_walk_law(0.2, 0.3, None).unwrap();
    let mut rng = RngStream::new(9, 0);
    let n = 400_000;
    let xs: Vec<i64> = (0..n).map(|_| law.sample(&mut rng)).collect();
    for k in [1u64, 4, 20, 100] {
        let up = xs.iter().filter(|&&x| x > k as i64).count() as f64 / n as f64;
        let down = xs.iter().filter(|&&x| x < -(k as i64)).count() as f64 / n as f64;
        let (tu, td) = (law.tail_plus(k), law.tail_minus(k));
        assert!((up - tu).abs() < 5.0 * (tu / n as f64).sqrt(), "k = {k}: {up} vs {tu}");
        assert!((down - td).abs() < 5.0 * (td / n as f64).sqrt(), "k = {k}: {down} vs {td}");
    }
}

#[test]
fn entrance_time_of_downward_walk_is_one() {
    let mut rng = RngStream::new(1, 0);
    assert_eq!(entrance_time(|_| -1, 100, &mut rng), Some(1));
    assert_eq!(entrance_time(|_| 1, 100, &mut rng), None);
}

#[test]
fn increasing_walk_concentrates() {
    let a = increasing_walk_deviation(0.5, 0.25, 100, 4000, 3, 1).unwrap();
    let b = increasing_walk_deviation(0.5, 0.25, 10_000, 4000, 3, 1).unwrap();
    assert!(b < a, "{a} then {b}");
}
