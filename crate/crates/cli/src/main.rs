//! Experiment front end: simulation, local-time fields, verification
//! suites, LIL statistics and the first-order limit ladder, all driven by
//! one TOML config plus flags. Outputs are deterministic in
//! (config, master seed) regardless of thread count; progress goes to
//! stderr and machine-readable summaries to stdout.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use fraclt::checks::{self, RunParams};
use fraclt::error::{Error, Result};
use fraclt::io as artifacts;
use fraclt::localtime::{default_bandwidth, default_level_grid, local_time_field, EstimatorKind};
use fraclt::process::{PreparedSampler, ProcessKind};
use fraclt::rng::derive_replicate_seed;
use fraclt::verify::{self, lil_constants, FirstOrderParams, VerificationReport};

#[derive(Parser)]
#[command(
    name = "fraclt",
    version,
    about = "fBm / Riemann-Liouville local-time experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths and write them as CSV.
    Simulate(CommonArgs),
    /// Estimate a local-time field for one path.
    Localtime(CommonArgs),
    /// Run the named verification checks from the config.
    Verify(CommonArgs),
    /// Iterated-logarithm statistics on a long horizon.
    Lil(CommonArgs),
    /// First-order limit theorem ladder.
    Limit(CommonArgs),
    /// Print the LIL constant table for a tau sweep.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format (only csv).
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Single tau; otherwise sweeps 0.1..=0.9.
    #[arg(long)]
    tau: Option<f64>,
    /// Sweep step when no single tau is given.
    #[arg(long, default_value_t = 0.1)]
    tau_step: f64,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("fraclt: {err}");
            match err {
                Error::Domain(_) | Error::Invalid(_) => ExitCode::from(2),
                Error::Numerical(_) => ExitCode::from(3),
                Error::Io(_) => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(args) => with_config(args, cmd_simulate),
        Command::Localtime(args) => with_config(args, cmd_localtime),
        Command::Verify(args) => with_config(args, cmd_verify),
        Command::Lil(args) => with_config(args, cmd_lil),
        Command::Limit(args) => with_config(args, cmd_limit),
        Command::Constants(args) => {
            init_threads(args.threads)?;
            cmd_constants(&args)
        }
    }
}

fn with_config(args: CommonArgs, f: fn(&ExperimentConfig) -> Result<ExitCode>) -> Result<ExitCode> {
    if args.format != "csv" {
        return Err(Error::invalid(format!(
            "unsupported format '{}'",
            args.format
        )));
    }
    init_threads(args.threads)?;
    let mut cfg = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    f(&cfg)
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn out_file(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_simulate(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let sampler = PreparedSampler::new(&cfg.spec)?;
    for r in 0..cfg.replicates {
        let seed = derive_replicate_seed(cfg.master_seed, r as u64);
        let path = sampler.sample(seed);
        let name = format!("path_{r:04}.csv");
        let mut w = out_file(&cfg.output_dir, &name)?;
        artifacts::write_path_csv(&path, &mut w)?;
        w.flush()?;
        eprintln!("[fraclt] wrote {}", cfg.output_dir.join(&name).display());
    }
    println!("command = simulate");
    println!("replicates = {}", cfg.replicates);
    println!("master_seed = {}", cfg.master_seed);
    println!("output_dir = {}", cfg.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_localtime(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let sampler = PreparedSampler::new(&cfg.spec)?;
    let path = sampler.sample(derive_replicate_seed(cfg.master_seed, 0));
    let eps = default_bandwidth(&path);
    let x_grid = default_level_grid(&path, eps);
    let snapshots = 32.min(cfg.spec.n_steps);
    let mut t_grid = Vec::with_capacity(snapshots + 1);
    let mut last = usize::MAX;
    for j in 0..=snapshots {
        let idx = j * cfg.spec.n_steps / snapshots;
        if idx != last {
            t_grid.push(idx as f64 * cfg.spec.horizon / cfg.spec.n_steps as f64);
            last = idx;
        }
    }
    let field = local_time_field(&path, &x_grid, &t_grid, EstimatorKind::EpsOccupation, eps)?;
    let mut w = out_file(&cfg.output_dir, "localtime_field.csv")?;
    artifacts::write_field_csv(&field, &mut w)?;
    w.flush()?;
    let mut meta = out_file(&cfg.output_dir, "localtime_field_meta.txt")?;
    artifacts::write_field_sidecar(&field, &mut meta)?;
    meta.flush()?;
    println!("command = localtime");
    println!("levels = {}", field.n_levels());
    println!("times = {}", field.n_times());
    println!("bandwidth = {eps:.16e}");
    println!("output_dir = {}", cfg.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn run_params(cfg: &ExperimentConfig) -> RunParams {
    RunParams {
        spec: cfg.spec,
        function: cfg.function.clone(),
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        lambda_ladder: cfg.lambda_ladder.clone(),
        ks_level: verify::DEFAULT_KS_LEVEL,
    }
}

fn finish_reports(
    cfg: &ExperimentConfig,
    stem: &str,
    reports: &[VerificationReport],
) -> Result<ExitCode> {
    let mut w = out_file(&cfg.output_dir, &format!("{stem}.csv"))?;
    artifacts::write_reports_csv(reports, &mut w)?;
    w.flush()?;
    let mut meta = out_file(&cfg.output_dir, &format!("{stem}_meta.txt"))?;
    artifacts::write_reports_sidecar(reports, &mut meta)?;
    meta.flush()?;
    let mut summary = out_file(&cfg.output_dir, "summary.txt")?;
    artifacts::write_summary(reports, &mut summary)?;
    summary.flush()?;

    let mut stdout = std::io::stdout().lock();
    artifacts::write_summary(reports, &mut stdout)?;
    stdout.flush()?;

    let failed = reports.iter().any(|r| r.decision == verify::Decision::Fail);
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_verify(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let params = run_params(cfg);
    let mut reports = Vec::new();
    for name in &cfg.checks {
        eprintln!("[fraclt] check {name}");
        if name == "strong_approx_rate" {
            // This check also yields the residual ensemble artifact.
            let (rep, series) = checks::strong_approx_rate_with_series(
                cfg.spec.kind,
                cfg.spec.tau,
                &cfg.function,
                cfg.replicates.clamp(50, 400),
                cfg.master_seed,
            )?;
            let mut w = out_file(&cfg.output_dir, "residual_ensemble.csv")?;
            artifacts::write_residual_ensemble_csv(&series, &mut w)?;
            w.flush()?;
            reports.push(rep);
            continue;
        }
        reports.extend(checks::run_named_check(name, &params)?);
    }
    finish_reports(cfg, "reports", &reports)
}

fn cmd_lil(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let params = run_params(cfg);
    eprintln!(
        "[fraclt] lil checks ({} replicates)",
        params.replicates.clamp(50, 400)
    );
    let reports = checks::run_named_check("lil", &params)?;
    finish_reports(cfg, "lil_reports", &reports)
}

fn cmd_limit(cfg: &ExperimentConfig) -> Result<ExitCode> {
    let fo = FirstOrderParams {
        kind: cfg.spec.kind,
        tau: cfg.spec.tau,
        n_steps_base: 512,
        replicates: cfg.replicates,
        master_seed: cfg.master_seed,
        distance_threshold: 0.05,
    };
    eprintln!("[fraclt] first-order limit ladder {:?}", cfg.lambda_ladder);
    let report = verify::first_order_limit_test(&fo, &cfg.function, &cfg.lambda_ladder)?;

    // Ladder distances live in the report metadata; emit them as CSV too.
    let mut w = out_file(&cfg.output_dir, "limit_ladder.csv")?;
    writeln!(w, "lambda,ks_distance")?;
    for (k, v) in &report.metadata {
        if let Some(lambda) = k.strip_prefix("ks_distance_lambda_") {
            writeln!(w, "{lambda},{v}")?;
        }
    }
    w.flush()?;
    finish_reports(cfg, "limit_reports", &[report])
}

fn cmd_constants(args: &ConstantsArgs) -> Result<ExitCode> {
    let taus: Vec<f64> = match args.tau {
        Some(tau) => vec![tau],
        None => {
            if args.tau_step <= 0.0 || args.tau_step.is_nan() {
                return Err(Error::invalid("--tau-step must be positive"));
            }
            let mut taus = Vec::new();
            let mut tau = 0.1;
            while tau < 0.95 {
                taus.push(tau);
                tau += args.tau_step;
            }
            taus
        }
    };
    println!("tau,kind,delta_tau,theta0,theta_lo,theta_hi,c_tau,limsup_lo,limsup_hi");
    for &tau in &taus {
        for kind in [ProcessKind::Fbm, ProcessKind::Rl] {
            let c = lil_constants(tau, kind)?;
            println!(
                "{tau},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                kind.as_str(),
                c.delta_tau,
                c.theta0,
                c.theta_lo,
                c.theta_hi,
                c.c_tau,
                c.limsup_lo,
                c.limsup_hi
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
