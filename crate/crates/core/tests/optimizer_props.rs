mod common;

use proptest::prelude::*;
use spinpath::hamiltonian::{sample_disorder, Point};
use spinpath::mixture::energy_benchmark;
use spinpath::optimizer::{find_direction, run_pure_sphere, run_radial_path, AlgorithmParams};
use spinpath::runner::verify_path_trace;
use spinpath::{Error, Mixture};

use common::*;

#[test]
fn power_iteration_matches_the_dense_edge() {
    // at N = 300 the finite-size edge fluctuates around the target, so each
    // replica is checked against its own dense spectrum
    let n = 300;
    let d = sample_disorder(&Mixture::pure(3).unwrap(), n, 31).unwrap();
    let params = AlgorithmParams::new(50, 0.1);
    let target = -2.0 * 3f64.sqrt() + 0.1;
    let mut reached = 0;
    for rep in 0..6 {
        let x = sphere_point(n, 0.5, &mut rng(100 + rep));
        let grad = d.projected_gradient(&x).unwrap();
        let hess = d.projected_hessian(&x).unwrap();
        let e = hess.clone().symmetric_eigen();
        let unit = x.coords().normalize();
        let lmin = (0..n)
            .filter(|&i| e.eigenvectors.column(i).dot(&unit).abs() < 0.5)
            .map(|i| e.eigenvalues[i])
            .fold(f64::INFINITY, f64::min);
        match find_direction(&hess, &grad, &x, &params, 3.0, &mut rng(rep)) {
            Ok(found) => {
                reached += 1;
                assert!(lmin <= found.rayleigh + 1e-9 && found.rayleigh <= target);
                assert!(found.grad_dot <= 0.0);
                assert!(found.v.dot(x.coords()).abs() < 1e-10);
                if lmin <= target - 0.02 {
                    assert!(!found.used_fallback);
                    assert!(found.iterations <= 200, "rep {rep}: {}", found.iterations);
                }
            }
            Err(Error::SpectralFailure { achieved, .. }) => {
                assert!(lmin > target, "rep {rep}: {lmin} reachable");
                assert!((achieved - lmin).abs() < 1e-9);
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(reached >= 3, "{reached}");
}

#[test]
fn each_step_obeys_the_second_order_model() {
    for (mix, n, eps) in [("3:1", 150, 0.6), ("2:1", 200, 0.3), ("2:1,4:0.25", 40, 1.0)] {
        let d = sample_disorder(&mix.parse().unwrap(), n, 6).unwrap();
        let k = 20;
        let t = run_radial_path(&d, &AlgorithmParams::new(k, eps).with_seed(2)).unwrap();
        let nf = n as f64;
        let h = (nf / k as f64).sqrt();
        let c3 = t.third_derivative_constant();
        for j in 1..k {
            let s = &t.steps[j];
            let de = (t.steps[j + 1].energy_per_spin - s.energy_per_spin) * nf;
            let bound = h * s.grad_dot.unwrap()
                + 0.5 * h * h * s.rayleigh.unwrap()
                + c3 * nf / (6.0 * (k as f64).powf(1.5));
            assert!(de <= bound + 1e-9 * nf, "{mix} step {j}: {de} > {bound}");
        }
    }
}

#[test]
fn smaller_steps_and_slack_track_the_benchmark_closer() {
    let n = 200;
    for seed in 0..5 {
        let d = sample_disorder(&Mixture::pure(2).unwrap(), n, seed).unwrap();
        let fine = run_radial_path(&d, &AlgorithmParams::new(30, 0.2).with_seed(seed)).unwrap();
        let coarse = run_radial_path(&d, &AlgorithmParams::new(6, 0.6).with_seed(seed)).unwrap();
        assert!(fine.sup_gap() < coarse.sup_gap(), "seed {seed}");
    }
}

#[test]
fn on_sphere_quadratic_descent_approaches_the_ground_state() {
    let n = 500;
    let d = sample_disorder(&Mixture::pure(2).unwrap(), n, 3).unwrap();
    let ground = lambda_min(coupling_matrix(&d, 1.0));
    let t = run_pure_sphere(&d, 2, 0.05, 300, &AlgorithmParams::new(2, 0.2).with_seed(3)).unwrap();
    assert!(t.final_energy() - ground <= 0.1, "{} vs {ground}", t.final_energy());
    assert!(t.final_energy() >= ground - 1e-9);
}

#[test]
fn benchmark_column_is_minus_e_h() {
    let d = sample_disorder(&Mixture::pure(3).unwrap(), 50, 0).unwrap();
    let t = run_radial_path(&d, &AlgorithmParams::new(5, 1.5)).unwrap();
    for s in &t.steps {
        assert_eq!(s.benchmark, -energy_benchmark(d.mixture(), s.q).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn radial_runs_keep_their_invariants(seed in 0u64..10_000, n in 20usize..60, k in 2usize..10) {
        let d = sample_disorder(&Mixture::pure(2).unwrap(), n, seed).unwrap();
        let trace = match run_radial_path(&d, &AlgorithmParams::new(k, 0.8).with_seed(seed)) {
            Ok(t) => {
                prop_assert!(t.is_complete());
                t
            }
            Err(e) => {
                let spectral = matches!(e.error, Error::SpectralFailure { .. });
                prop_assert!(spectral, "{}", e.error);
                *e.partial.unwrap()
            }
        };
        let nf = n as f64;
        for s in &trace.steps {
            let x = Point::new(s.point.clone());
            prop_assert!((x.norm_sq() - nf * s.step as f64 / k as f64).abs() <= 1e-9 * nf);
        }
        let verdict = verify_path_trace(&trace, &d).unwrap();
        prop_assert!(verdict.passed, "{:?}", verdict.violations);
    }
}
