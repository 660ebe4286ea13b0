use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relpca::workbench::{self, Command, Report, Workbench};
use relpca::Budget;

#[derive(Parser)]
#[command(name = "relpca", version, about = "Checks for relative PCAs, their assemblies and morphisms")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Axioms, kit, identities, Γ ⊣ ∇ and declared morphisms
    Check(Run),
    /// Synthesize declared terms and store their certificates
    Synthesize(Run),
    /// Slice-filter batteries against their oracles
    Slice(Run),
    /// Product-filter batteries with certificate translation
    Product(Run),
    /// Quasi-surjectivity, computational density and right adjoints
    Density(Run),
    /// Replay the certificates of a fixture or of a structured report
    Replay(Run),
}

#[derive(Args)]
struct Run {
    fixture: PathBuf,
    #[arg(long)]
    fuel: Option<u64>,
    #[arg(long)]
    term_size: Option<u32>,
    #[arg(long)]
    arity: Option<u32>,
    #[arg(long)]
    samples: Option<u32>,
    /// Decimal or 0x-prefixed hex
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Record wall time per check (breaks byte-stable output)
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

fn parse_seed(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x") {
        Some(h) => u64::from_str_radix(h, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

impl Run {
    fn budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            fuel: self.fuel.unwrap_or(d.fuel),
            samples: self.samples.unwrap_or(d.samples),
            term_size: self.term_size.unwrap_or(d.term_size),
            arity: self.arity.unwrap_or(d.arity),
            seed: self.seed.unwrap_or(d.seed),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, run) = match &cli.command {
        Cmd::Check(r) => (Command::Check, r),
        Cmd::Synthesize(r) => (Command::Synthesize, r),
        Cmd::Slice(r) => (Command::Slice, r),
        Cmd::Product(r) => (Command::Product, r),
        Cmd::Density(r) => (Command::Density, r),
        Cmd::Replay(r) => (Command::Replay, r),
    };
    let src = match std::fs::read_to_string(&run.fixture) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("relpca: {}: {e}", run.fixture.display());
            return ExitCode::from(2);
        }
    };
    let budget = run.budget();
    let report = if cmd == Command::Replay && is_report(&src) {
        Report::from_json(&src).map(|r| workbench::replay_report(&r, run.timings))
    } else {
        Workbench::load(&src, &budget).map(|wb| workbench::run(cmd, &wb, &budget, run.timings))
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("relpca: {}: {e}", run.fixture.display());
            return ExitCode::from(2);
        }
    };
    match run.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Structured => print!("{}", report.to_json()),
    }
    ExitCode::from(report.exit_code() as u8)
}

/// Reports carry a `command` field; fixtures never do.
fn is_report(src: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(src).is_ok_and(|v| v.get("command").is_some())
}
