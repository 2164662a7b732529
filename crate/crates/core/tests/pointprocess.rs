use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dualvr::analytics::poisson_pmf;
use dualvr::stats::{chi_square_test, SampleStats};
use dualvr::{ClassKind, ScattererClass, Scenario};

fn draw(s: &Scenario, n: usize, seed: u64) -> Vec<dualvr::Realization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| s.sample_realization(&mut rng)).collect()
}

#[test]
fn gtu_mean_total_count() {
    let s = Scenario::gtu();
    let counts: SampleStats = draw(&s, 100_000, 1)
        .iter()
        .map(|r| r.len() as f64)
        .collect();
    let expected =
        s.mean_active_count(ClassKind::Short) + s.gamma() * s.mean_active_count(ClassKind::Tall);
    assert!((expected - 24.6).abs() < 0.05);
    assert!(
        (counts.mean() - expected).abs() < 3.0 * counts.stderr(),
        "{} vs {expected} (se {})",
        counts.mean(),
        counts.stderr()
    );
}

#[test]
fn tall_only_counts_are_poisson() {
    let s = Scenario::gtu()
        .with_gamma(1.0)
        .unwrap()
        .with_class(ScattererClass::new(ClassKind::Short, 500.0, 300.0, 0.0).unwrap())
        .unwrap();
    let mu = s.mean_active_count(ClassKind::Tall);
    let mut observed = vec![0u64; 101];
    for r in draw(&s, 100_000, 2) {
        assert!(r.short_points.is_empty());
        observed[r.len().min(100)] += 1;
    }
    let mut probs: Vec<f64> = (0..100).map(|n| poisson_pmf(n, mu)).collect();
    probs.push(1.0 - probs.iter().sum::<f64>());
    let chi = chi_square_test(&observed, &probs, 0.01);
    assert!(chi.passes(), "{chi:?}");
}

#[test]
fn tall_gate_frequency_matches_gamma() {
    let s = Scenario::gtu();
    let n = 100_000;
    let ones = draw(&s, n, 3).iter().filter(|r| r.u).count() as f64;
    let g = s.gamma();
    let sd = (g * (1.0 - g) / n as f64).sqrt();
    assert!((ones / n as f64 - g).abs() < 3.0 * sd);
}

#[test]
fn realization_invariants() {
    let s = Scenario::gtu();
    let ms = s.ms_position();
    for r in draw(&s, 5_000, 4) {
        if !r.u {
            assert!(r.tall_points.is_empty());
        }
        for (kind, p) in r.points() {
            let c = s.class(kind);
            assert!(p.norm() <= c.v1() * (1.0 + 1e-12));
            assert!(p.distance_to(&ms) <= c.v2() * (1.0 + 1e-12));
        }
    }
    let none = s.with_gamma(0.0).unwrap();
    assert!(draw(&none, 2_000, 5)
        .iter()
        .all(|r| r.tall_points.is_empty()));
}

#[test]
fn same_seed_same_stream() {
    let s = Scenario::gtu();
    assert_eq!(draw(&s, 200, 9), draw(&s, 200, 9));
    assert_ne!(draw(&s, 200, 9), draw(&s, 200, 10));
}

#[test]
fn disjoint_class_yields_nothing() {
    let s = Scenario::gtu()
        .with_d_prime(900.0)
        .unwrap()
        .with_gamma(0.0)
        .unwrap();
    assert_eq!(s.mean_active_count(ClassKind::Short), 0.0);
    assert!(draw(&s, 1_000, 6).iter().all(|r| r.is_empty()));
}
