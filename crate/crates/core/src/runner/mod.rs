//! Experiment orchestration: one run per seed, files per seed, and a
//! `summary.json` assembled after every seed has finished.
//!
//! Output files, all under `output_dir`:
//!
//! * `radial_seed{S}.json`: the full path trace (what [`verify_trace`]
//!   replays), plus `radial_seed{S}.csv` when `format=csv`;
//! * `sphere_seed{S}.json` / `sphere_seed{S}.csv` likewise;
//! * `spectrum_seed{S}.json`;
//! * `theory.json`;
//! * `summary.json`.

mod config;
mod verify;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{sample_disorder_with_budget, Disorder, Point};
use crate::mixture::{
    classify_full_rsb, crisanti_sommers_at_xp, e_infinity, energy_benchmark, q_parisi, rs_condition,
    tap_rhs, RsCondition, RsbClassification, FULL_RSB_GRID,
};
use crate::optimizer::{
    pure_recursion_bound, run_pure_sphere, run_radial_path, write_trace_csv, PathTrace, SphereTrace,
};
use crate::spectrum::analyze_hessian;
use crate::Mixture;

pub use config::{
    config_entries, merge_entries, parse_config, ConfigEntry, ExperimentConfig, Format, Origin,
    Variant, CONFIG_KEYS,
};
pub use verify::{verify_path_trace, verify_trace, Verdict, Violation};

/// Grid used for the replica-symmetric check in theory reports.
pub const RS_GRID: usize = 10_000;
/// Points of the sampled `E_H(q)` curve.
pub const CURVE_POINTS: usize = 101;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub lambda_min: f64,
    pub count_below_soft: usize,
    pub count_below_hard: usize,
    pub ks_distance: f64,
}

/// What one seed produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub completed: bool,
    pub final_energy: Option<f64>,
    /// `max_j (energy_per_spin + E_H(j/k))` over the recorded steps.
    pub sup_gap: Option<f64>,
    pub fallback_count: usize,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub error: Option<String>,
    pub spectral_failure: bool,
    pub failed_step: Option<usize>,
    /// On-sphere runs: whether every iterate met the recursion bound.
    pub recursion_bound_holds: Option<bool>,
    pub spectrum: Option<SpectrumSummary>,
}

impl SeedOutcome {
    fn new(seed: u64) -> Self {
        SeedOutcome {
            seed,
            completed: false,
            final_energy: None,
            sup_gap: None,
            fallback_count: 0,
            wall_time_s: 0.0,
            files: Vec::new(),
            error: None,
            spectral_failure: false,
            failed_step: None,
            recursion_bound_holds: None,
            spectrum: None,
        }
    }

    fn fail(&mut self, e: &Error) {
        self.error = Some(e.to_string());
        if let Error::SpectralFailure { step, .. } = e {
            self.spectral_failure = true;
            self.failed_step = Some(*step);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BetaReport {
    pub beta: f64,
    pub q_p: f64,
    /// Crisanti-Sommers functional at the Parisi distribution.
    pub p_xp: f64,
    pub tap_rhs: f64,
    pub abs_diff: f64,
    pub rs_condition: RsCondition,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub mixture: String,
    pub full_rsb: RsbClassification,
    /// `E_inf(p)` for pure models.
    pub e_infinity: Option<f64>,
    /// `[q, E_H(q)]` at `q = i / 100`.
    pub e_h_curve: Vec<[f64; 2]>,
    pub betas: Vec<BetaReport>,
}

/// Computes every closed-form quantity for `mixture`.
pub fn theory_report(mixture: &Mixture, betas: &[f64]) -> Result<TheoryReport> {
    let last = (CURVE_POINTS - 1) as f64;
    let e_h_curve = (0..CURVE_POINTS)
        .map(|i| {
            let q = i as f64 / last;
            energy_benchmark(mixture, q).map(|e| [q, e])
        })
        .collect::<Result<_>>()?;
    let betas = betas
        .iter()
        .map(|&beta| {
            let p_xp = crisanti_sommers_at_xp(mixture, beta)?;
            let tap = tap_rhs(mixture, beta)?;
            Ok(BetaReport {
                beta,
                q_p: q_parisi(mixture, beta)?.q_p,
                p_xp,
                tap_rhs: tap,
                abs_diff: (p_xp - tap).abs(),
                rs_condition: rs_condition(mixture, beta, RS_GRID)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TheoryReport {
        mixture: mixture.to_string(),
        full_rsb: classify_full_rsb(mixture, FULL_RSB_GRID)?,
        e_infinity: mixture.pure_degree().map(e_infinity).transpose()?,
        e_h_curve,
        betas,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub variant: Variant,
    pub mixture: String,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub tau: Option<f64>,
    pub seeds: Vec<SeedOutcome>,
    pub median_final_energy: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    pub theory: Option<TheoryReport>,
}

impl Summary {
    pub fn all_completed(&self) -> bool {
        self.failed == 0
    }

    pub fn any_spectral_failure(&self) -> bool {
        self.seeds.iter().any(|s| s.spectral_failure)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))
}

/// Per-iterate table of an on-sphere run; `bound` is the recursion bound
/// for that iterate.
pub fn write_sphere_csv<W: Write>(trace: &SphereTrace, bounds: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["step", "energy_per_spin", "bound", "rayleigh", "grad_dot", "used_fallback"])
        .map_err(err)?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (s, b) in trace.steps.iter().zip(bounds) {
        w.write_record([
            s.step.to_string(),
            s.energy_per_spin.to_string(),
            b.to_string(),
            cell(s.rayleigh),
            cell(s.grad_dot),
            if s.used_fallback { "1" } else { "0" }.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

/// Recursion bound for every iterate of `trace`, using its own cushion.
pub fn sphere_bounds(trace: &SphereTrace, mixture: &Mixture) -> Vec<f64> {
    let e = trace.energies();
    let Some(&e0) = e.first() else {
        return Vec::new();
    };
    let cushion = trace.cushion();
    let nu2_one = mixture.nu2(1.0);
    (0..e.len())
        .map(|i| pure_recursion_bound(e0, trace.tau, trace.p, nu2_one, i, cushion))
        .collect()
}

fn file_name(dir: &Path, stem: &str, seed: u64, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_seed{seed}.{ext}"))
}

fn record(out: &mut SeedOutcome, path: &Path) {
    out.files.push(path.display().to_string());
}

fn write_radial(cfg: &ExperimentConfig, trace: &PathTrace, out: &mut SeedOutcome) -> Result<()> {
    let json = file_name(&cfg.output_dir, "radial", trace.seed, "json");
    write_file(&json, trace.to_json()?.as_bytes())?;
    record(out, &json);
    if cfg.format == Format::Csv {
        let path = file_name(&cfg.output_dir, "radial", trace.seed, "csv");
        let mut buf = Vec::new();
        write_trace_csv(trace, &mut buf)?;
        write_file(&path, &buf)?;
        record(out, &path);
    }
    Ok(())
}

fn run_radial_seed(cfg: &ExperimentConfig, d: &Disorder, out: &mut SeedOutcome) -> Result<()> {
    let trace = match run_radial_path(d, &cfg.params()) {
        Ok(t) => {
            out.completed = true;
            t
        }
        Err(e) => {
            out.fail(&e.error);
            match e.partial {
                Some(partial) => *partial,
                None => return Ok(()),
            }
        }
    };
    out.final_energy = out.completed.then(|| trace.final_energy());
    out.sup_gap = Some(trace.sup_gap());
    out.fallback_count = trace.fallback_count();
    write_radial(cfg, &trace, out)
}

fn run_sphere_seed(cfg: &ExperimentConfig, d: &Disorder, out: &mut SeedOutcome) -> Result<()> {
    let p = cfg.mixture.pure_degree().expect("validated pure mixture");
    let tau = cfg.tau.expect("validated tau");
    let trace = match run_pure_sphere(d, p, tau, cfg.steps, &cfg.params()) {
        Ok(t) => t,
        Err(e) => {
            out.fail(&e.error);
            return Ok(());
        }
    };
    out.completed = true;
    out.final_energy = Some(trace.final_energy());
    out.fallback_count = trace.fallback_count();
    let bounds = sphere_bounds(&trace, &cfg.mixture);
    out.recursion_bound_holds = Some(
        trace
            .energies()
            .iter()
            .zip(&bounds)
            .all(|(e, b)| *e <= *b + 1e-12),
    );
    let json = file_name(&cfg.output_dir, "sphere", trace.seed, "json");
    write_file(&json, json_pretty(&trace)?.as_bytes())?;
    record(out, &json);
    if cfg.format == Format::Csv {
        let path = file_name(&cfg.output_dir, "sphere", trace.seed, "csv");
        let mut buf = Vec::new();
        write_sphere_csv(&trace, &bounds, &mut buf)?;
        write_file(&path, &buf)?;
        record(out, &path);
    }
    Ok(())
}

/// The spectrum point `sqrt(qN) e_1`.
pub fn spectrum_point(n: usize, q: f64) -> Point {
    let mut x = DVector::zeros(n);
    x[0] = (q * n as f64).sqrt();
    Point::from(x)
}

fn run_spectrum_seed(cfg: &ExperimentConfig, d: &Disorder, out: &mut SeedOutcome) -> Result<()> {
    let report = match analyze_hessian(d, &spectrum_point(cfg.n, cfg.q), cfg.epsilon) {
        Ok(r) => r,
        Err(e) => {
            out.fail(&e);
            return Ok(());
        }
    };
    out.completed = true;
    out.spectrum = Some(SpectrumSummary {
        lambda_min: report.lambda_min,
        count_below_soft: report.count_below_soft,
        count_below_hard: report.count_below_hard,
        ks_distance: report.ks_distance,
    });
    let path = file_name(&cfg.output_dir, "spectrum", d.seed(), "json");
    write_file(&path, report.to_json(cfg.eigenvalues)?.as_bytes())?;
    record(out, &path);
    Ok(())
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    let start = Instant::now();
    let mut out = SeedOutcome::new(seed);
    match sample_disorder_with_budget(&cfg.mixture, cfg.n, seed, cfg.memory_budget) {
        Ok(d) => match cfg.variant {
            Variant::Radial => run_radial_seed(cfg, &d, &mut out)?,
            Variant::PureSphere => run_sphere_seed(cfg, &d, &mut out)?,
            Variant::Spectrum => run_spectrum_seed(cfg, &d, &mut out)?,
            Variant::Theory => unreachable!("theory runs without disorder"),
        },
        Err(e) => out.fail(&e),
    }
    out.wall_time_s = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Runs `cfg`, writes every output file and returns the summary that was
/// written to `summary.json`. Seeds run concurrently; a failing seed is
/// recorded and does not stop the others. Only I/O and serialization
/// problems are returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let mut theory = None;
    let mut seeds = Vec::new();
    if cfg.variant == Variant::Theory {
        let report = theory_report(&cfg.mixture, &cfg.betas)?;
        write_file(&cfg.output_dir.join("theory.json"), json_pretty(&report)?.as_bytes())?;
        theory = Some(report);
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        seeds = pool.install(|| {
            cfg.seeds
                .par_iter()
                .map(|&s| run_seed(cfg, s))
                .collect::<Result<Vec<_>>>()
        })?;
    }
    let failed = seeds.iter().filter(|s| !s.completed).count();
    let summary = Summary {
        variant: cfg.variant,
        mixture: cfg.mixture.to_string(),
        n: cfg.n,
        k: cfg.k,
        epsilon: cfg.epsilon,
        tau: cfg.tau,
        median_final_energy: median(seeds.iter().filter_map(|s| s.final_energy).collect()),
        completed: seeds.len() - failed,
        failed,
        seeds,
        theory,
    };
    write_file(&cfg.output_dir.join("summary.json"), json_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}
