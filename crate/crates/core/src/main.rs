use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinpath::hamiltonian::{sample_disorder_with_budget, DEFAULT_MEMORY_BUDGET};
use spinpath::optimizer::PathTrace;
use spinpath::runner::{
    config_entries, merge_entries, run_experiment, verify_path_trace, ConfigEntry, ExperimentConfig,
    Summary,
};
use spinpath::{Error, Mixture, Result};

const OUTPUT_DIR_ENV: &str = "SPINPATH_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "spinpath", version, about = "Greedy Hessian descent for spherical spin glasses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form quantities: E_H curve, Parisi endpoint, TAP identity.
    Theory(Flags),
    /// Radial or on-sphere descent over a list of seeds.
    Run(Flags),
    /// Projected Hessian spectrum at sqrt(qN) e_1.
    Spectrum(Flags),
    /// Replay a JSON path trace against regenerated disorder.
    Verify(VerifyArgs),
}

/// Every flag mirrors a config key; flags override `--config`.
#[derive(Args, Default)]
struct Flags {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. 2:1.0,4:0.25
    #[arg(long)]
    mixture: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// e.g. 1,2,3 or 0..5
    #[arg(long)]
    seeds: Option<String>,
    /// radial or pure_sphere for `run`
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    betas: Option<String>,
    /// Defaults to $SPINPATH_OUTPUT_DIR, then ./spinpath-out
    #[arg(long)]
    output_dir: Option<String>,
    /// csv or json
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    algo_seed: Option<String>,
    #[arg(long)]
    power_shift: Option<String>,
    #[arg(long)]
    power_iters_max: Option<String>,
    #[arg(long)]
    rayleigh_check: Option<String>,
    #[arg(long)]
    random_v0: Option<String>,
    #[arg(long)]
    memory_budget: Option<String>,
    #[arg(long)]
    eigenvalues: Option<String>,
}

impl Flags {
    fn entries(&self) -> Vec<ConfigEntry> {
        let pairs = [
            ("mixture", &self.mixture),
            ("n", &self.n),
            ("k", &self.k),
            ("epsilon", &self.epsilon),
            ("seeds", &self.seeds),
            ("variant", &self.variant),
            ("tau", &self.tau),
            ("steps", &self.steps),
            ("q", &self.q),
            ("betas", &self.betas),
            ("output_dir", &self.output_dir),
            ("format", &self.format),
            ("threads", &self.threads),
            ("algo_seed", &self.algo_seed),
            ("power_shift", &self.power_shift),
            ("power_iters_max", &self.power_iters_max),
            ("rayleigh_check", &self.rayleigh_check),
            ("random_v0", &self.random_v0),
            ("memory_budget", &self.memory_budget),
            ("eigenvalues", &self.eigenvalues),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| ConfigEntry::flag(k, v.clone())))
            .collect()
    }

    /// Builds the config for a subcommand that allows `variants`, the first
    /// being the default.
    fn config(&self, variants: &[&str]) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                config_entries(&text)?
            }
            None => Vec::new(),
        };
        let mut entries = merge_entries(base, self.entries());
        match entries.iter().find(|e| e.key == "variant") {
            Some(e) if !variants.contains(&e.value.as_str()) => {
                return Err(Error::Config(format!(
                    "variant `{}` is not available here (expected {})",
                    e.value,
                    variants.join(" or ")
                )))
            }
            Some(_) => {}
            None => entries.push(ConfigEntry::flag("variant", variants[0])),
        }
        if !entries.iter().any(|e| e.key == "output_dir") {
            if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
                entries.push(ConfigEntry::flag("output_dir", dir));
            }
        }
        ExperimentConfig::from_entries(&entries)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON trace written by `run`
    #[arg(long)]
    trace: PathBuf,
    /// Disorder to replay against; each defaults to the trace header.
    #[arg(long)]
    mixture: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    memory_budget: u128,
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Io { .. } => ExitCode::from(3),
        Error::SpectralFailure { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn experiment(flags: &Flags, variants: &[&str]) -> Result<ExitCode> {
    let cfg = flags.config(variants)?;
    let summary: Summary = run_experiment(&cfg)?;
    print_json(&summary)?;
    Ok(if summary.any_spectral_failure() {
        ExitCode::from(2)
    } else if !summary.all_completed() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.trace).map_err(|e| Error::io(&args.trace, e))?;
    let trace = PathTrace::from_json(&text)?;
    let mixture: Mixture = args.mixture.as_deref().unwrap_or(&trace.mixture).parse()?;
    let n = args.n.unwrap_or(trace.n);
    let seed = args.seed.unwrap_or(trace.seed);
    let d = sample_disorder_with_budget(&mixture, n, seed, args.memory_budget)?;
    let verdict = verify_path_trace(&trace, &d)?;
    print_json(&verdict)?;
    Ok(if verdict.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Theory(f) => experiment(f, &["theory"]),
        Command::Run(f) => experiment(f, &["radial", "pure_sphere"]),
        Command::Spectrum(f) => experiment(f, &["spectrum"]),
        Command::Verify(a) => verify(a),
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
