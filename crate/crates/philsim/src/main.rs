use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use philsim::{artifacts, commands, Mode, RunError, Scenario};

#[derive(Parser)]
#[command(name = "philsim", version, about = "Virtual PHIL testbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frequency-domain stability verdict and open-loop response
    Analyze(Common),
    /// Time-domain loop run with accuracy metrics
    Simulate(Common),
    /// Stability map over source/HUT ratio and loop delay
    Sweep(Common),
    /// Co-simulation of the scenario's units under its master
    Cosim(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    file: PathBuf,
    /// Output directory; defaults to `run.out` of the scenario, then `out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Uncertainty margin override (>= 0)
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
}

/// One line per problem: `error code=<code> [line=<n>] [path=<key>] msg=<text>`.
fn report(code: &str, line: Option<usize>, path: Option<&str>, msg: &str) {
    let mut s = format!("error code={code}");
    if let Some(l) = line {
        s.push_str(&format!(" line={l}"));
    }
    if let Some(p) = path {
        s.push_str(&format!(" path={p}"));
    }
    s.push_str(" msg=");
    s.push_str(&msg.replace('\n', " "));
    eprintln!("{s}");
}

fn report_run(e: &RunError) {
    match e {
        RunError::Scenario(se) => {
            for v in se.errors() {
                report(e.code(), v.line, Some(&v.path), &v.message);
            }
        }
        other => report(other.code(), None, None, &other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Analyze(a) => (Mode::Analyze, a),
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Cosim(a) => (Mode::Cosim, a),
    };
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => {
            report("io", None, None, &format!("{}: {e}", args.file.display()));
            return ExitCode::from(5);
        }
    };
    let mut scenario = match Scenario::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            report_run(&RunError::Scenario(e));
            return ExitCode::from(3);
        }
    };
    if let Some(seed) = args.seed {
        scenario.run.seed = seed;
    }
    if let Some(eps) = args.epsilon {
        if let Err(e) = scenario.set_epsilon(eps) {
            report_run(&RunError::Scenario(e));
            return ExitCode::from(3);
        }
    }
    let artifacts = match commands::run(mode, &scenario) {
        Ok(a) => a,
        Err(e) => {
            report_run(&e);
            return ExitCode::from(4);
        }
    };
    let dir = args
        .out
        .or_else(|| scenario.run.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match artifacts::write_all(&dir, &artifacts) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            report("io", None, None, &format!("{}: {e}", dir.display()));
            ExitCode::from(5)
        }
    }
}
