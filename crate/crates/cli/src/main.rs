use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scale_core::kernels::localization_ratio;
use scale_core::support::{containment_harness, HarnessOptions};
use scale_core::SyntheticSpec;
use scale_cli::{read_config_file, run_experiment, write_artifacts, ExperimentConfig, ExperimentError};

#[derive(Parser)]
#[command(name = "scale", version, about = "Active-learning classification on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.txt, queries.csv and map.ppm.
    Run(Box<RunArgs>),
    /// Support-containment check on synthetic axis caps.
    Harness(HarnessArgs),
    /// Print R(n) = max |Φ_n(cos θ)| max(1, (nθ)^S) / n for doubling n.
    Localization(LocalizationArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    eta_start: Option<String>,
    #[arg(long)]
    eta_step: Option<String>,
    #[arg(long)]
    eta_max: Option<String>,
    #[arg(long)]
    pca_dim: Option<String>,
    #[arg(long)]
    pca_var: Option<String>,
    #[arg(long)]
    decay_s: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    query_budget: Option<String>,
    #[arg(long)]
    witness_n: Option<String>,
    /// Any other config key, as key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, ExperimentError> {
        let named = [
            ("dataset", &self.dataset),
            ("features", &self.features),
            ("labels", &self.labels),
            ("out-dir", &self.out_dir),
            ("n", &self.n),
            ("theta", &self.theta),
            ("eta-start", &self.eta_start),
            ("eta-step", &self.eta_step),
            ("eta-max", &self.eta_max),
            ("pca-dim", &self.pca_dim),
            ("pca-var", &self.pca_var),
            ("decay-s", &self.decay_s),
            ("seed", &self.seed),
            ("query-budget", &self.query_budget),
            ("witness-n", &self.witness_n),
        ];
        let mut out: Vec<(String, String)> = Vec::new();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| ExperimentError::config(format!("--set expects key=value, got {s:?}")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        out.extend(named.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))));
        Ok(out)
    }
}

#[derive(Args)]
struct HarnessArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Samples per cap.
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 0.3)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LocalizationArgs {
    #[arg(long, default_value_t = 8)]
    n_start: usize,
    #[arg(long, default_value_t = 4)]
    doublings: u32,
    #[arg(long, default_value_t = 3)]
    s: u32,
    #[arg(long, default_value_t = 20001)]
    grid: usize,
}

fn run(args: &RunArgs) -> Result<(), (ExperimentError, Option<BTreeMap<String, String>>)> {
    let mut map = match &args.config {
        Some(path) => read_config_file(path).map_err(|e| (e, None))?,
        None => BTreeMap::new(),
    };
    for (k, v) in args.overrides().map_err(|e| (e, None))? {
        map.insert(k, v);
    }
    let cfg = ExperimentConfig::from_map(&map).map_err(|e| (e, Some(map.clone())))?;
    let echo = cfg.echo();
    let run = run_experiment(&cfg).map_err(|e| (e, Some(echo.clone())))?;
    print!("{}", run.report.to_text());
    match &cfg.out_dir {
        Some(dir) => {
            let written = write_artifacts(&run, dir).map_err(|e| (e, Some(echo.clone())))?;
            if run.map.is_none() {
                eprintln!("no grid dimensions: map skipped");
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        None => eprintln!("no out-dir: artifacts not written"),
    }
    Ok(())
}

fn harness(a: &HarnessArgs) -> Result<(), ExperimentError> {
    let spec = SyntheticSpec::axis_caps(a.k, a.q, a.radius, a.points, a.seed).map_err(|e| ExperimentError::new("data", e))?;
    let opts = HarnessOptions { eta: a.eta, ..HarnessOptions::default() };
    let r = containment_harness(&spec, a.n, a.theta, &opts).map_err(|e| ExperimentError::new("support", e))?;
    println!("n: {}", r.n);
    println!("theta: {}", r.theta_cap);
    println!("eta: {}", r.eta);
    println!("sample_count: {}", r.sample_count);
    println!("kept_support_fraction: {:.6}", r.kept_support_fraction);
    println!("max_kept_distance: {:.6}", r.max_kept_distance);
    println!("probes_kept: {}", r.probes_kept);
    println!("components: {} (expected {})", r.component_count, r.expected_components);
    match r.min_separation {
        Some(s) => println!("min_separation: {s:.6}"),
        None => println!("min_separation: none"),
    }
    Ok(())
}

fn localization(a: &LocalizationArgs) -> Result<(), ExperimentError> {
    let mut prev: Option<f64> = None;
    for i in 0..=a.doublings {
        let n = a.n_start << i;
        let r = localization_ratio(n, a.s, a.grid).map_err(|e| ExperimentError::new("kernels", e))?;
        match prev {
            Some(p) => println!("n {n}: R = {r:.6}  R(n)/R(n/2) = {:.4}", r / p),
            None => println!("n {n}: R = {r:.6}"),
        }
        prev = Some(r);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Harness(a) => harness(a).map_err(|e| (e, None)),
        Command::Localization(a) => localization(a).map_err(|e| (e, None)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((e, echo)) => {
            eprintln!("error: {e}");
            if let Some(echo) = echo {
                eprintln!("config:");
                for (k, v) in echo {
                    eprintln!("  {k} = {v}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
