use std::fs;
use std::path::Path;
use std::process::Command;

use spinpath::hamiltonian::sample_disorder;
use spinpath::optimizer::PathTrace;
use spinpath::runner::{
    parse_config, run_experiment, verify_path_trace, verify_trace, ExperimentConfig, Summary,
    Variant,
};
use spinpath::Error;

fn config(text: &str, dir: &Path) -> ExperimentConfig {
    parse_config(&format!("{text} output_dir={}", dir.display())).unwrap()
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    fs::read(path).unwrap()
}

fn radial(dir: &Path, seeds: &str, extra: &str) -> Summary {
    let cfg = config(
        &format!("mixture=2:1.0 n=60 k=8 epsilon=0.8 seeds={seeds} variant=radial format=csv {extra}"),
        dir,
    );
    run_experiment(&cfg).unwrap()
}

#[test]
fn spec_config_examples() {
    let cfg = parse_config("mixture=2:1.0 n=500 k=50 epsilon=0.1 seeds=1,2,3 variant=radial").unwrap();
    assert_eq!((cfg.n, cfg.k, cfg.epsilon), (500, 50, 0.1));
    assert_eq!(cfg.seeds, vec![1, 2, 3]);
    assert_eq!(cfg.variant, Variant::Radial);

    let err = parse_config("mixture=1:1.0 n=10 k=2 epsilon=0.1 seeds=1 variant=radial").unwrap_err();
    assert!(err.to_string().contains("p must be ≥ 2"), "{err}");

    let err = parse_config("mixture=3:1.0 n=10 k=2 epsilon=0.1 seeds=1 variant=pure_sphere").unwrap_err();
    assert!(err.to_string().contains("tau"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let err = parse_config("mixture=2:1 n=10 k=2 epsilon=0.1 seeds=1 variant=radial sedes=2").unwrap_err();
    assert!(err.to_string().contains("sedes"), "{err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = radial(a.path(), "1,2,3", "threads=1");
    let sb = radial(b.path(), "1,2,3", "threads=2");
    for (x, y) in sa.seeds.iter().zip(&sb.seeds) {
        assert_eq!((x.seed, x.final_energy, x.sup_gap), (y.seed, y.final_energy, y.sup_gap));
    }
    for s in &sa.seeds {
        assert!(s.completed, "{:?}", s.error);
        for ext in ["json", "csv"] {
            let name = format!("radial_seed{}.{ext}", s.seed);
            assert_eq!(read(a.path().join(&name)), read(b.path().join(&name)), "{name}");
        }
    }
    let seq = radial(a.path(), "2", "threads=1");
    assert_eq!(seq.seeds[0].final_energy, sa.seeds[1].final_energy);
    assert_eq!(read(a.path().join("radial_seed2.json")), read(b.path().join("radial_seed2.json")));
}

#[test]
fn summary_gap_matches_the_trace_table() {
    let dir = tempfile::tempdir().unwrap();
    let summary = radial(dir.path(), "1,2,3", "");
    let written: serde_json::Value = serde_json::from_slice(&read(dir.path().join("summary.json"))).unwrap();
    assert_eq!(written["seeds"].as_array().unwrap().len(), 3);
    for s in &summary.seeds {
        let mut rdr = csv::Reader::from_path(dir.path().join(format!("radial_seed{}.csv", s.seed))).unwrap();
        let col = rdr.headers().unwrap().iter().position(|h| h == "gap").unwrap();
        let max = rdr
            .records()
            .map(|r| r.unwrap()[col].parse::<f64>().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(s.sup_gap, Some(max));
        assert!(s.wall_time_s >= 0.0);
    }
}

#[test]
fn replay_from_summary_reproduces_traces() {
    let dir = tempfile::tempdir().unwrap();
    let summary = radial(dir.path(), "1,2,3", "");
    for s in &summary.seeds {
        let again = tempfile::tempdir().unwrap();
        let cfg = config(
            &format!(
                "mixture={} n={} k={} epsilon={} seeds={} variant=radial format=csv",
                summary.mixture, summary.n, summary.k, summary.epsilon, s.seed
            ),
            again.path(),
        );
        run_experiment(&cfg).unwrap();
        for ext in ["json", "csv"] {
            let name = format!("radial_seed{}.{ext}", s.seed);
            assert_eq!(read(dir.path().join(&name)), read(again.path().join(&name)));
        }
    }
}

#[test]
fn verify_flags_injected_faults() {
    let dir = tempfile::tempdir().unwrap();
    radial(dir.path(), "5", "");
    let file = dir.path().join("radial_seed5.json");
    let d = sample_disorder(&"2:1".parse().unwrap(), 60, 5).unwrap();
    let clean = verify_trace(&file, &d).unwrap();
    assert!(clean.passed && clean.complete, "{:?}", clean.violations);
    assert_eq!(clean.steps_checked, 9);

    let trace = PathTrace::from_json(&fs::read_to_string(&file).unwrap()).unwrap();

    let mut bad = trace.clone();
    *bad.steps[4].rayleigh.as_mut().unwrap() += 1.0;
    let v = verify_path_trace(&bad, &d).unwrap();
    assert!(!v.passed);
    assert_eq!(v.violated_steps(), vec![4]);

    let mut bad = trace.clone();
    for c in bad.steps[3].point.iter_mut() {
        *c *= 1.0 + 1e-3;
    }
    let v = verify_path_trace(&bad, &d).unwrap();
    assert!(v.violations.iter().any(|x| x.step == 3 && x.check == "norm"), "{:?}", v.violations);

    let other = sample_disorder(&"2:1".parse().unwrap(), 60, 6).unwrap();
    assert!(matches!(verify_trace(&file, &other), Err(Error::DisorderMismatch(..))));
}

#[test]
fn partial_traces_replay_up_to_the_failure() {
    let d = sample_disorder(&"3:1".parse().unwrap(), 40, 0).unwrap();
    let params = spinpath::optimizer::AlgorithmParams::new(10, 0.01);
    let err = spinpath::optimizer::run_radial_path(&d, &params).unwrap_err();
    let partial = *err.partial.unwrap();
    assert!(partial.steps.len() >= 2 && partial.steps.last().unwrap().direction.is_none());
    let v = verify_path_trace(&partial, &d).unwrap();
    assert!(v.passed && !v.complete, "{:?}", v.violations);

    let mut bad = partial.clone();
    bad.steps[0].direction = None;
    let v = verify_path_trace(&bad, &d).unwrap();
    assert!(v.violations.iter().any(|x| x.step == 0 && x.check == "direction"));
}

#[test]
fn theory_variant_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mixture=2:1,4:0.25 variant=theory betas=1,2,4", dir.path());
    let s = run_experiment(&cfg).unwrap();
    assert!(s.seeds.is_empty());
    let v: serde_json::Value = serde_json::from_slice(&read(dir.path().join("theory.json"))).unwrap();
    assert_eq!(v["e_h_curve"].as_array().unwrap().len(), 101);
    for b in v["betas"].as_array().unwrap() {
        for key in ["q_p", "p_xp", "tap_rhs", "abs_diff", "rs_condition"] {
            assert!(!b[key].is_null(), "{key}");
        }
        let diff = (b["p_xp"].as_f64().unwrap() - b["tap_rhs"].as_f64().unwrap()).abs();
        assert!((diff - b["abs_diff"].as_f64().unwrap()).abs() < 1e-15);
    }
}

#[test]
fn spectrum_and_sphere_variants_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mixture=3:1 n=80 seeds=1,2 variant=spectrum epsilon=0.3 q=0.5", dir.path());
    let s = run_experiment(&cfg).unwrap();
    assert!(s.all_completed());
    let v: serde_json::Value = serde_json::from_slice(&read(dir.path().join("spectrum_seed2.json"))).unwrap();
    for key in ["q", "epsilon", "n", "count_below_soft", "count_below_hard", "lambda_min", "ks_distance"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert!(v.get("eigenvalues").is_none());

    let cfg = config(
        "mixture=2:1 n=60 k=2 epsilon=0.5 seeds=3 variant=pure_sphere tau=0.1 steps=20 format=csv",
        dir.path(),
    );
    let s = run_experiment(&cfg).unwrap();
    let seed = &s.seeds[0];
    assert!(seed.completed, "{:?}", seed.error);
    assert_eq!(seed.recursion_bound_holds, Some(true));
    let rows = csv::Reader::from_path(dir.path().join("sphere_seed3.csv")).unwrap().records().count();
    assert_eq!(rows, 21);
}

#[test]
fn failing_seeds_do_not_stop_siblings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("mixture=3:1 n=40 k=10 epsilon=0.05 seeds=0..6 variant=radial", dir.path());
    let s = run_experiment(&cfg).unwrap();
    assert_eq!(s.seeds.len(), 6);
    assert_eq!(s.completed + s.failed, 6);
    assert!(s.failed > 0);
    for seed in &s.seeds {
        if seed.completed {
            assert!(seed.final_energy.is_some());
        } else {
            assert!(seed.error.is_some() && seed.spectral_failure);
            assert!(seed.failed_step.is_some());
            assert!(seed.final_energy.is_none());
        }
        // partial traces are kept for inspection
        assert!(dir.path().join(format!("radial_seed{}.json", seed.seed)).exists());
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_spinpath"))
        .args(args)
        .env_remove("SPINPATH_OUTPUT_DIR")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let (code, stdout) = cli(&[
        "run", "--mixture", "2:1", "--n", "40", "--k", "5", "--epsilon", "0.8", "--seeds", "1",
        "--output-dir", out,
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("median_final_energy"));
    let trace = dir.path().join("radial_seed1.json");
    assert_eq!(cli(&["verify", "--trace", trace.to_str().unwrap()]).0, 0);
    assert_eq!(cli(&["verify", "--trace", trace.to_str().unwrap(), "--seed", "2"]).0, 1);

    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("# base\nmixture=3:1 n=40 k=10\nepsilon=0.01 seeds=0..3\noutput_dir={out}\n")).unwrap();
    assert_eq!(cli(&["run", "--config", conf.to_str().unwrap()]).0, 2);
    assert_eq!(cli(&["run", "--config", conf.to_str().unwrap(), "--epsilon", "abc"]).0, 1);

    assert_eq!(cli(&["theory", "--mixture", "1:1", "--output-dir", out]).0, 1);
    assert_eq!(cli(&["run", "--mixture", "3:1", "--n", "20", "--seeds", "1", "--variant", "pure_sphere"]).0, 1);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let nested = blocker.join("sub");
    assert_eq!(cli(&["theory", "--mixture", "2:1", "--output-dir", nested.to_str().unwrap()]).0, 3);
    assert_eq!(cli(&["verify", "--trace", nested.to_str().unwrap()]).0, 3);
}
