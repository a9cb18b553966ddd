use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use laxforge::commands::{
    cmd_ops_check, cmd_reduce, cmd_solve_lambda, cmd_verify_lax, cmd_verify_symmetry, CommandError,
    RunOptions, SolveOptions, MAX_N,
};
use laxforge::reduction::Catalog;
use laxforge::report::{emit, Format, Report};

const USAGE_EXIT: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "laxforge", version, about = "Checks a non-isospectral Lax pair, its symmetries and reductions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zero curvature of the pair and the hierarchy read off from it.
    VerifyLax(Common),
    /// Invariance of the pair under the symmetry family.
    VerifySymmetry(Common),
    /// Similarity reductions from the case catalog.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Case id, e.g. I.1.
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        case: Option<String>,
        /// Run every case and the spectral census.
        #[arg(long)]
        all: bool,
    },
    /// Integrates the spectral law of one case.
    SolveLambda {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        case: String,
        /// Initial value of the spectral parameter.
        #[arg(long, default_value_t = 1.0)]
        lambda0: f64,
        /// End of the integration window, starting at 0.
        #[arg(long, default_value_t = 0.9)]
        z_end: f64,
        /// Local error tolerance.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Grid checks of the recursion operators.
    OpsCheck(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=MAX_N as i64))]
    n: u32,
    /// Random trials per identity check.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 42, env = "LAXFORGE_SEED")]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// JSON case catalog replacing the embedded one.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Also run the mutation suites.
    #[arg(long)]
    mutations: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall time per check (makes reports run dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Json,
    Latex,
    Text,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Latex => Format::Latex,
            OutFormat::Text => Format::Text,
        }
    }
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            n: self.n,
            trials: self.trials as usize,
            seed: self.seed,
            mutations: self.mutations,
            timings: self.timings,
        }
    }

    fn catalog(&self) -> Result<Catalog, String> {
        match &self.catalog {
            None => Ok(Catalog::embedded()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                Catalog::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
            }
        }
    }
}

fn run(command: &Command) -> Result<(Report, &Common), String> {
    let err = |e: CommandError| e.to_string();
    Ok(match command {
        Command::VerifyLax(c) => (cmd_verify_lax(&c.options()).map_err(err)?, c),
        Command::VerifySymmetry(c) => (cmd_verify_symmetry(&c.options()).map_err(err)?, c),
        Command::Reduce { common, case, .. } => {
            let catalog = common.catalog()?;
            let cases: Vec<String> = case.iter().cloned().collect();
            (cmd_reduce(&catalog, &cases, &common.options()).map_err(err)?, common)
        }
        Command::SolveLambda { common, case, lambda0, z_end, tol } => {
            let catalog = common.catalog()?;
            let solve = SolveOptions { lambda0: *lambda0, z_end: *z_end, tol: *tol };
            (cmd_solve_lambda(&catalog, case, &common.options(), &solve).map_err(err)?, common)
        }
        Command::OpsCheck(c) => (cmd_ops_check(&c.options()).map_err(err)?, c),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let (report, common) = match run(&cli.command) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("laxforge: {msg}");
            return ExitCode::from(USAGE_EXIT);
        }
    };
    let bytes = emit(&report, common.format.into());
    match &common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &bytes) {
                eprintln!("laxforge: {}: {e}", path.display());
                return ExitCode::from(USAGE_EXIT);
            }
        }
        None => print!("{bytes}"),
    }
    eprintln!(
        "laxforge: {} n={} {} passed, {} failed, {:.2}s",
        report.command,
        report.n,
        report.counts.get("passed").unwrap_or(&0),
        report.counts.get("failed").unwrap_or(&0),
        start.elapsed().as_secs_f64()
    );
    ExitCode::from(report.exit_code() as u8)
}
