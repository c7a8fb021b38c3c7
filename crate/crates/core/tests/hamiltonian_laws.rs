mod common;

use proptest::prelude::*;
use spinpath::hamiltonian::{covariance_expectation, sample_disorder, Point};
use spinpath::Mixture;

use common::*;

#[test]
fn energy_variance_matches_nu() {
    let n = 40;
    let m: Mixture = "2:1,3:0.5".parse().unwrap();
    let x = sphere_point(n, 0.6, &mut rng(1));
    let squares: Vec<f64> = (0..1500)
        .map(|s| sample_disorder(&m, n, 10_000 + s).unwrap().energy(&x).unwrap().powi(2))
        .collect();
    let (mean, se) = mean_se(&squares);
    let want = covariance_expectation(&m, &x, &x);
    assert!((want - n as f64 * m.eval(0.6, 0).unwrap()).abs() < 1e-9);
    assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn covariance_at_partial_overlap() {
    let n = 30;
    let m: Mixture = "2:1,4:0.25".parse().unwrap();
    let (x, y) = pair_with_overlap(n, 0.5, &mut rng(2));
    let products: Vec<f64> = (0..1000)
        .map(|s| {
            let d = sample_disorder(&m, n, s).unwrap();
            d.energy(&x).unwrap() * d.energy(&y).unwrap()
        })
        .collect();
    let (mean, se) = mean_se(&products);
    let want = n as f64 * 0.253_906_25;
    assert!((covariance_expectation(&m, &x, &y) - want).abs() < 1e-9);
    assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want} (se {se})");
}

#[test]
fn finite_differences_at_ball_points() {
    let n = 30;
    let d = sample_disorder(&"2:1,3:0.6,4:0.3".parse().unwrap(), n, 3).unwrap();
    let mut r = rng(3);
    for _ in 0..5 {
        let x = ball_point(n, &mut r);
        let (eg, eh) = finite_difference_errors(&d, &x, 1e-4);
        assert!(eg <= 1e-5 && eh <= 1e-5, "{eg} {eh}");
    }
}

#[test]
fn identical_parameters_give_identical_energies() {
    let m: Mixture = "2:0.7,3:1".parse().unwrap();
    let a = sample_disorder(&m, 25, 99).unwrap();
    let b = sample_disorder(&m, 25, 99).unwrap();
    let mut r = rng(4);
    for _ in 0..10 {
        let x = ball_point(25, &mut r);
        assert_eq!(a.energy(&x).unwrap().to_bits(), b.energy(&x).unwrap().to_bits());
    }
}

fn mixture_strategy() -> impl Strategy<Value = Mixture> {
    prop::collection::btree_map(2u32..=5, 0.05f64..2.0, 1..=3)
        .prop_map(|m| Mixture::new(m).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mixture_text_round_trips(m in mixture_strategy()) {
        let back: Mixture = m.to_string().parse().unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn projections_respect_the_point(m in mixture_strategy(), seed in 0u64..1000, n in 3usize..12) {
        let d = sample_disorder(&m, n, seed).unwrap();
        let x = ball_point(n, &mut rng(seed));
        let g = d.projected_gradient(&x).unwrap();
        let h = d.projected_hessian(&x).unwrap();
        let scale = 1.0 + d.euclidean_hessian(&x).unwrap().norm();
        prop_assert!(g.dot(x.coords()).abs() <= 1e-10 * (1.0 + g.norm()) * x.coords().norm());
        prop_assert!((&h * x.coords()).norm() <= 1e-10 * scale * x.coords().norm());
        prop_assert_eq!(h.clone(), h.transpose());
    }

    #[test]
    fn pure_models_are_homogeneous(p in 2u32..=4, seed in 0u64..1000, c in 0.1f64..2.0) {
        let n = 8;
        let d = sample_disorder(&Mixture::pure(p).unwrap(), n, seed).unwrap();
        let x = ball_point(n, &mut rng(seed + 1));
        let scaled = Point::from(x.coords() * c);
        let lhs = d.energy(&scaled).unwrap();
        let rhs = c.powi(p as i32) * d.energy(&x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        // Euler: x . grad = p H
        let g = d.euclidean_gradient(&x).unwrap();
        let e = d.energy(&x).unwrap();
        prop_assert!((g.dot(x.coords()) - p as f64 * e).abs() <= 1e-10 * (1.0 + e.abs()));
    }
}
