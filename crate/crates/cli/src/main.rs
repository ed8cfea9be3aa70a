use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gradlab_core::experiments::{self, emit_plot, Experiment, ExperimentConfig, PlotSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gradlab", version, about = "Gradient-bound experiments for parabolic problems with inclusions")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print every check and written file.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gap sweep of gradient norms between two inclusions.
    Sweep(RunArgs),
    /// Hölder exponent and gradient blowup of the Meyers example.
    Meyers(RunArgs),
    /// Scaling ratio R(rho) across radii.
    Scaling(RunArgs),
    /// Heat kernel fits and the cylinder L2 family.
    Kernel(RunArgs),
    /// De Giorgi sequences, sup-bound cascade and embedding constants.
    Degiorgi(RunArgs),
    /// Manufactured-solution convergence of the solver.
    Convergence(RunArgs),
    /// Print the default config of an experiment.
    Defaults { experiment: String },
    /// Plot columns of a CSV file as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file; the built-in defaults are used when absent.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set mesh.h=1/64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    /// Y columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    /// Annotate the least-squares slope of the first series.
    #[arg(long)]
    slope: bool,
    #[arg(long)]
    title: Option<String>,
    /// SVG output path.
    output: PathBuf,
}

fn load(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::defaults(experiment),
    };
    if cfg.experiment() != experiment {
        bail!("config is for '{}', not '{}'", cfg.experiment(), experiment);
    }
    for o in &args.overrides {
        let (k, v) = o.split_once('=').with_context(|| format!("override '{o}' is not KEY=VALUE"))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn run(experiment: Experiment, args: &RunArgs, verbose: bool) -> Result<bool> {
    let cfg = load(experiment, args)?;
    let report = experiments::run(&cfg, args.out.as_deref())?;
    for line in &report.lines {
        println!("{line}");
    }
    for c in &report.checks {
        if verbose || !c.passed {
            println!("{c}");
        }
    }
    if verbose {
        for f in &report.files {
            println!("wrote {}", f.display());
        }
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{experiment}: {}/{} checks passed", report.checks.len() - failed, report.checks.len());
    Ok(failed == 0)
}

fn plot(a: &PlotArgs) -> Result<()> {
    let ys: Vec<&str> = a.y.iter().map(String::as_str).collect();
    let mut spec = PlotSpec::new(&a.x, &ys);
    if a.log_x {
        spec = spec.log_x();
    }
    if a.log_y {
        spec = spec.log_y();
    }
    if a.slope {
        spec = spec.with_slope();
    }
    if let Some(t) = &a.title {
        spec = spec.titled(t);
    }
    emit_plot(&a.csv, &spec, &a.output)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match &cli.command {
        Command::Sweep(a) => run(Experiment::Sweep, a, cli.verbose),
        Command::Meyers(a) => run(Experiment::Meyers, a, cli.verbose),
        Command::Scaling(a) => run(Experiment::Scaling, a, cli.verbose),
        Command::Kernel(a) => run(Experiment::Kernel, a, cli.verbose),
        Command::Degiorgi(a) => run(Experiment::Degiorgi, a, cli.verbose),
        Command::Convergence(a) => run(Experiment::Convergence, a, cli.verbose),
        Command::Defaults { experiment } => Experiment::parse(experiment).map_err(Into::into).map(|e| {
            print!("{}", ExperimentConfig::defaults(e).to_canonical());
            true
        }),
        Command::Plot(a) => plot(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
