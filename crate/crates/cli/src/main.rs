use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coherent_lab::harness::{emit_report, run_experiment, Command, ExperimentConfig, KEYS};
use coherent_lab::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cslab",
    version,
    about = "Coherent-state laboratory experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[arg(long, global = true)]
    hbar: Option<f64>,

    /// Fock truncation dimension.
    #[arg(long, global = true)]
    dim: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for results.jsonl and CSV tables; records go to stdout otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// A `key = value` file, applied before the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 for one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Any configuration key, e.g. `--set nu=4,8,16`. Repeatable.
    #[arg(long = "set", short = 's', value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Do not echo the effective configuration to stderr.
    #[arg(long, short = 'q', global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Numeric coherent-state overlap against the closed form.
    Overlap,
    /// Phase-space quadrature of the resolution of unity.
    ResolveUnity,
    /// Exact or time-sliced propagators, or a convergence study.
    Propagate,
    /// Brownian-bridge Monte Carlo at each listed nu, with extrapolation.
    Wiener,
    /// Propagator estimates before and after a canonical map.
    Covariance,
    /// Classical flow of the symbol against Ehrenfest means.
    Classical,
    /// N-dimensional rotationally symmetric flow with invariants.
    RotsymClassical,
    /// Closed-form and Fock symbols of the quartic models.
    RotsymQuantum,
    /// Fast invariant suite; exits 3 on a tolerance failure.
    Audit,
    /// List the configuration keys.
    Keys,
}

impl Cmd {
    fn command(self) -> Option<Command> {
        Some(match self {
            Cmd::Overlap => Command::Overlap,
            Cmd::ResolveUnity => Command::ResolveUnity,
            Cmd::Propagate => Command::Propagate,
            Cmd::Wiener => Command::Wiener,
            Cmd::Covariance => Command::Covariance,
            Cmd::Classical => Command::Classical,
            Cmd::RotsymClassical => Command::RotsymClassical,
            Cmd::RotsymQuantum => Command::RotsymQuantum,
            Cmd::Audit => Command::Audit,
            Cmd::Keys => return None,
        })
    }
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{item}`")))?;
        out.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    let flags = [
        ("hbar", cli.hbar.map(|v| v.to_string())),
        ("dim", cli.dim.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("workers", cli.workers.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            out.push((k.to_owned(), v));
        }
    }
    Ok(out)
}

fn run(cli: &Cli, command: Command) -> Result<bool, Error> {
    let file = cli
        .config
        .as_ref()
        .map(std::fs::read_to_string)
        .transpose()?;
    let cfg = ExperimentConfig::parse(command, file.as_deref(), &overrides(cli)?)?;
    if !cli.quiet {
        for line in cfg.to_text().lines() {
            eprintln!("# {line}");
        }
    }
    let records = run_experiment(&cfg)?;
    match &cfg.out {
        Some(dir) => {
            for path in emit_report(&records, dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for r in &records {
                writeln!(stdout, "{}", r.to_json()?)?;
            }
        }
    }
    let mut passed = true;
    for c in records.iter().flat_map(|r| &r.checks) {
        if !c.passed {
            eprintln!(
                "check {} failed: {:e} against {:e}",
                c.name, c.value, c.tolerance
            );
            passed = false;
        }
    }
    Ok(passed || command != Command::Audit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(command) = cli.command.command() else {
        for key in KEYS {
            println!("{key}");
        }
        return ExitCode::SUCCESS;
    };
    match run(&cli, command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_AUDIT),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
