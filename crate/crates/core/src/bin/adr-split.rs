use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adr_split::config::{load_config, RunConfig};
use adr_split::driver;
use adr_split::field::Family;
use adr_split::io::{save_csv, save_curves_csv, save_vtk};
use adr_split::transfer::SolutionGrid;
use adr_split::Error;
use clap::{Args, Parser, Subcommand};
use log::{error, warn, LevelFilter};

/// Split solver for 2D advection-diffusion-reaction problems.
#[derive(Parser)]
#[command(name = "adr-split", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the splitting method and write the final grid.
    Solve(RunArgs),
    /// Run the 2D finite element reference solver.
    Reference(RunArgs),
    /// Run both and check the relative errors against the tolerances.
    Compare(RunArgs),
    /// Dump the traced curve families as polylines.
    TraceDebug(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file, or the name of a shipped config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads (overrides the config).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write a snapshot every EVERY steps.
    #[arg(long, value_name = "EVERY")]
    snapshots: Option<usize>,
    /// Also write VTK files.
    #[arg(long)]
    vtk: bool,
}

type Runner = fn(&RunConfig) -> Result<(String, bool), Error>;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;
const EXIT_IO: u8 = 1;

fn init_logging() {
    let level = match std::env::var("ADR_SPLIT_LOG").as_deref() {
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        Ok("info") | Err(_) => LevelFilter::Info,
        Ok(other) => {
            eprintln!("ADR_SPLIT_LOG={other} not recognised; using info");
            LevelFilter::Info
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn load(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut config = load_config(&args.config)?;
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::Validation("`workers` must be at least 1".into()));
        }
        config.workers = w;
    }
    if let Some(dir) = &args.out {
        config.output = dir.clone();
    }
    if let Some(every) = args.snapshots {
        config.snapshots = every;
    }
    config.vtk |= args.vtk;
    std::fs::create_dir_all(&config.output)?;
    Ok(config)
}

fn save_grid(config: &RunConfig, grid: &SolutionGrid, stem: &str) -> Result<(), Error> {
    let base = config.output.join(stem);
    save_csv(grid, &base.with_extension("csv"))?;
    if config.vtk {
        save_vtk(grid, &base.with_extension("vtk"))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text)?;
    Ok(())
}

fn solve(config: &RunConfig) -> Result<String, Error> {
    let every = config.snapshots;
    let out = driver::solve(config, |state| {
        if every > 0 && state.step % every == 0 {
            save_grid(config, &state.grid, &format!("snapshot_{:05}", state.step))?;
        }
        Ok(())
    })?;
    save_grid(config, &out.grid, "solution")?;
    write_text(&config.output.join("report.txt"), &out.report.to_string())?;
    if out.report.converged == Some(false) {
        warn!("stationary tolerance not reached in {} steps", out.report.steps);
    }
    Ok(format!(
        "{} steps; wrote {}",
        out.report.steps,
        config.output.join("solution.csv").display()
    ))
}

fn reference(config: &RunConfig) -> Result<String, Error> {
    let grid = driver::with_workers(config.workers, || driver::reference(config))?;
    save_grid(config, &grid, "reference")?;
    Ok(format!("wrote {}", config.output.join("reference.csv").display()))
}

fn compare(config: &RunConfig) -> Result<(String, bool), Error> {
    let c = driver::compare_run(config)?;
    save_grid(config, &c.split.grid, "solution")?;
    save_grid(config, &c.reference, "reference")?;
    let verdict = if c.passed { "PASS" } else { "FAIL" };
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "relative L-inf error: {:.6e} (tolerance {})",
        c.errors.linf, config.tol_linf
    );
    let _ = writeln!(
        summary,
        "relative L1 error:    {:.6e} (tolerance {})",
        c.errors.l1, config.tol_l1
    );
    let _ = write!(summary, "{verdict}");
    write_text(
        &config.output.join("report.txt"),
        &format!("{}{summary}\n", c.split.report),
    )?;
    Ok((summary, c.passed))
}

fn trace_debug(config: &RunConfig) -> Result<String, Error> {
    let solver = driver::with_workers(config.workers, || driver::prepare(config))?;
    for (family, curves) in [(Family::Beta, &solver.beta), (Family::Gamma, &solver.gamma)] {
        let path = config.output.join(format!("curves_{}.csv", family.name()));
        save_curves_csv(&curves.iter().map(|c| &c.curve).collect::<Vec<_>>(), &path)?;
    }
    for w in &solver.warnings {
        warn!("{w}");
    }
    Ok(format!(
        "{} beta and {} gamma curves written to {}",
        solver.beta.len(),
        solver.gamma.len(),
        config.output.display()
    ))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        e if e.is_validation() => EXIT_VALIDATION,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    let (args, run): (&RunArgs, Runner) = match &cli.command {
        Command::Solve(a) => (a, |c| solve(c).map(|s| (s, true))),
        Command::Reference(a) => (a, |c| reference(c).map(|s| (s, true))),
        Command::Compare(a) => (a, compare),
        Command::TraceDebug(a) => (a, |c| trace_debug(c).map(|s| (s, true))),
    };
    match load(args).and_then(|config| run(&config)) {
        Ok((summary, passed)) => {
            println!("{summary}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_TOLERANCE)
            }
        }
        Err(e) => {
            error!("{e}");
            if log::max_level() == LevelFilter::Off {
                eprintln!("error: {e}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
