//! `shapeopt` command-line front end.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shapeopt::audit::check_experiment;
use shapeopt::mesh::write_text;
use shapeopt::optimize::run;
use shapeopt::problems::{experiment, EXPERIMENT_NAMES};

use config::{Overrides, Resolved};

#[derive(Debug, Parser)]
#[command(name = "shapeopt", version, about = "Shape optimisation with Lipschitz descent directions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the optimisation loop and write energy.csv, meshes, a plot and a manifest.
    Run(RunArgs),
    /// Finite-difference audits of the shape derivatives on a coarse mesh.
    Check(CheckArgs),
    /// Print the initial mesh of a preset in the text mesh format.
    Mesh(MeshArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// nopde1, nopde2, poisson1, poisson2, coupled or eigen.
    #[arg(long)]
    experiment: Option<String>,
    /// p2, p4, inf or newton [default: inf].
    #[arg(long)]
    method: Option<String>,
    /// Damping of the Newton-type direction [default: the preset's].
    #[arg(long)]
    newton_t: Option<f64>,
    /// Number of shape updates [default: 20].
    #[arg(long)]
    iters: Option<usize>,
    /// Cells per unit length of the hold-all mesh [default: 16].
    #[arg(long)]
    n: Option<usize>,
    /// Output directory [default: out/<experiment>-<method>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial ADMM penalty [default: 1].
    #[arg(long)]
    tau0: Option<f64>,
    /// ADMM stopping tolerance [default: 1e-6 sqrt(#triangles)].
    #[arg(long)]
    admm_tol: Option<f64>,
    /// Recorded in the manifest; the loop itself draws no random numbers [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// `key = value` file overriding the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Preset to audit [default: all].
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Seed of the random test fields.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct MeshArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Write to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<shapeopt::Error> for Failure {
    fn from(e: shapeopt::Error) -> Self {
        match e {
            shapeopt::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
        Command::Mesh(a) => cmd_mesh(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, Failure> {
    let mut o = Overrides {
        experiment: a.experiment,
        method: a.method,
        newton_t: a.newton_t,
        iterations: a.iters,
        n: a.n,
        out: a.out,
        tau0: a.tau0,
        admm_tol: a.admm_tol,
        seed: a.seed,
        ..Overrides::default()
    };
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        o.apply_file(&text).map_err(Failure::Usage)?;
    }
    let resolved = Resolved::new(o)?;
    let cfg = &resolved.config;
    let out = cfg.out.clone().expect("resolved config has an output directory");
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("manifest.txt"), resolved.manifest())?;
    let history = run(cfg)?;
    for r in &history.records {
        println!(
            "{:>3} energy {:.10e} step {:.3e} area {:.10} admm {}",
            r.iteration, r.energy, r.step, r.area, r.admm_iterations
        );
    }
    if let Some(reason) = &history.stop {
        println!("stopped early: {reason}");
    }
    println!("outputs in {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(a: CheckArgs) -> Result<ExitCode, Failure> {
    let names: Vec<String> = match a.experiment {
        Some(name) => vec![experiment(&name).map_err(|e| Failure::Usage(e.to_string()))?.name.to_string()],
        None => EXPERIMENT_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    if a.n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let mut all = true;
    for name in names {
        let report = check_experiment(&name, a.n, a.seed)?;
        for line in report.lines() {
            println!("{line}");
        }
        all &= report.passed();
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_mesh(a: MeshArgs) -> Result<ExitCode, Failure> {
    let e = experiment(&a.experiment).map_err(|e| Failure::Usage(e.to_string()))?;
    if a.n == 0 {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    let mesh = e.initial_mesh(a.n)?;
    match a.out {
        Some(path) => write_text(&mesh, std::io::BufWriter::new(std::fs::File::create(path)?))?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_text(&mesh, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
