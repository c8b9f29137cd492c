use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use szego_core::lab::{run, ExperimentKind, LabError, RunSpec, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "szego-lab", version, about = "Experiments for the quadratic Szegő equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Galerkin PDE trajectory with monitors.
    Evolve(Common),
    /// Reduced (b, c, p) dynamics on L(1).
    EvolveL1(Common),
    /// PDE against the L(1) reduction, or a dt refinement study.
    Compare(Common),
    /// Find a resonant L(1) state and fit its growth rates.
    BlowupHunt(Common),
    /// Central-difference audit of the Lax equation.
    LaxAudit(Common),
    /// Blow-up time of the mean-mode model.
    XyDemo(Common),
    /// Exponential fit of a CSV column.
    Fit(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (repeatable).
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory; with several configs each gets a subdirectory
    /// named after its file stem.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for independent configs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Reserved; rejected.
    #[arg(long)]
    seedless: bool,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::Evolve(c) => (ExperimentKind::EvolvePde, c),
            Command::EvolveL1(c) => (ExperimentKind::EvolveL1, c),
            Command::Compare(c) => (ExperimentKind::Compare, c),
            Command::BlowupHunt(c) => (ExperimentKind::BlowupHunt, c),
            Command::LaxAudit(c) => (ExperimentKind::LaxAudit, c),
            Command::XyDemo(c) => (ExperimentKind::XyDemo, c),
            Command::Fit(c) => (ExperimentKind::Fit, c),
        }
    }
}

fn run_one(kind: ExperimentKind, config: &Path, out: &Path) -> i32 {
    let result = RunSpec::load(config).and_then(|spec| run(kind, &spec, out));
    match result {
        Ok(outcome) => {
            if let Some(msg) = &outcome.failure {
                eprintln!("{}: numerical abort: {msg} (partial output kept)", config.display());
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            e.exit_code()
        }
    }
}

fn out_dirs(common: &Common) -> Result<Vec<PathBuf>, LabError> {
    if common.configs.len() == 1 {
        return Ok(vec![common.out.clone()]);
    }
    let mut dirs: Vec<PathBuf> = Vec::new();
    for c in &common.configs {
        let stem = c
            .file_stem()
            .ok_or_else(|| LabError::Config(format!("{} has no file name", c.display())))?;
        let d = common.out.join(stem);
        if dirs.contains(&d) {
            return Err(LabError::Config(format!("two configs share the output directory {}", d.display())));
        }
        dirs.push(d);
    }
    Ok(dirs)
}

fn main() -> ExitCode {
    let (kind, common) = Cli::parse().command.split();
    if common.seedless {
        eprintln!("--seedless is reserved: the lab uses no randomness");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    if common.jobs == 0 {
        eprintln!("--jobs must be at least 1");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let dirs = match out_dirs(&common) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let next = AtomicUsize::new(0);
    let codes = Mutex::new(vec![0; dirs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..common.jobs.min(dirs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= dirs.len() {
                    break;
                }
                let code = run_one(kind, &common.configs[i], &dirs[i]);
                codes.lock().expect("exit code table")[i] = code;
            });
        }
    });
    let worst = codes.into_inner().expect("exit code table").into_iter().max().unwrap_or(0);
    ExitCode::from(worst as u8)
}
