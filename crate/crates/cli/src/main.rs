use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use imethod_core::experiments::{run_manifest, verify_all, Check, Golden, Manifest, VerifyLevel};

/// Spectral KdV/mKdV workbench: solver runs, modified-energy tracking and
/// the numerical checks that go with them.
#[derive(Parser)]
#[command(name = "imethod", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value manifest describing the run.
    manifest: PathBuf,
    /// Output directory (defaults to `out/<kind>`).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write a run directory.
    Solve(RunArgs),
    /// Track E², E³, E⁴ along a KdV trajectory.
    EnergyTrack(RunArgs),
    /// Sup of |E⁴(t) − E⁴(0)| against the cutoff N, with a log-log fit.
    DecayScan(RunArgs),
    /// ‖u(t)‖ in H^s over a long horizon.
    GrowthTrack(RunArgs),
    /// Pointwise bound scans for M₃, M₄, M₅ over dyadic blocks.
    BoundScan(RunArgs),
    /// Lattice counts behind the periodic L⁴ Strichartz bound.
    CountStrichartz(RunArgs),
    /// Measure of the μ-set per dyadic shell.
    MuMeasure(RunArgs),
    /// Miura residual convergence along mKdV trajectories.
    MiuraCheck(RunArgs),
    /// Run the self-check suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// Golden file overriding the built-in regression constants.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Write `verify.csv` here.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Quick,
    Full,
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn run(kind: &str, args: &RunArgs) -> Result<bool> {
    let m = Manifest::from_path(&args.manifest)
        .with_context(|| format!("reading {}", args.manifest.display()))?;
    if m.kind() != kind {
        bail!(
            "manifest kind `{}` does not match subcommand `{kind}`",
            m.kind()
        );
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| Path::new("out").join(kind));
    let outcome = run_manifest(&m, &out)?;
    for f in &outcome.files {
        println!("wrote {}", out.join(f).display());
    }
    print_checks(&outcome.checks);
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => run("solve", a),
        Command::EnergyTrack(a) => run("energy-track", a),
        Command::DecayScan(a) => run("decay-scan", a),
        Command::GrowthTrack(a) => run("growth-track", a),
        Command::BoundScan(a) => run("bound-scan", a),
        Command::CountStrichartz(a) => run("count-strichartz", a),
        Command::MuMeasure(a) => run("mu-measure", a),
        Command::MiuraCheck(a) => run("miura-check", a),
        Command::Verify { level, golden, out } => (|| {
            let golden = Golden::load(golden.as_deref())?;
            let level = match level {
                Level::Quick => VerifyLevel::Quick,
                Level::Full => VerifyLevel::Full,
            };
            let report = verify_all(level, &golden);
            print_checks(&report.checks);
            println!("{} checks in {:.1} s", report.checks.len(), report.seconds);
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("verify.csv"), report.to_csv())?;
            }
            Ok(report.passed())
        })(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
