use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cstarcat::generators::BlockParams;
use cstarcat::Tolerance;
use cstarcat_cli::commands::{self, ConstructVerb, GenKind, GenParams, Outcome};
use cstarcat_cli::{format, CliError, EXIT_FAIL, EXIT_INPUT, EXIT_PASS};

#[derive(Parser)]
#[command(name = "cstarcat", version, about = "Finite-dimensional concrete C*-categories, modules and bimodules")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Absolute tolerance (overrides CSTARCAT_TOL_ABS)
    #[arg(long, global = true)]
    tol_abs: Option<f64>,

    /// Relative tolerance
    #[arg(long, global = true)]
    tol_rel: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Where to write a constructed file; printed to stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a category, groupoid, module or bimodule file
    Verify { path: PathBuf },
    /// Build a derived object from a file
    Construct {
        #[arg(value_enum)]
        verb: Verb,
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tensor a module or bimodule with a bimodule
    Tensor {
        left: PathBuf,
        right: PathBuf,
        /// Cross-check against the quotient construction
        #[arg(long)]
        oracle: bool,
    },
    /// Imprimitivity check and the Morita unitaries
    Morita { path: PathBuf },
    /// Eilenberg–Watts map over random modules
    Ew {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Generate seeded test data
    Gen {
        #[arg(value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        objects: usize,
        #[arg(long, default_value_t = 2)]
        sectors: usize,
        #[arg(long, default_value_t = 2)]
        max_dim: usize,
        #[arg(long, default_value_t = 1)]
        max_mult: usize,
        /// Base-length bound for modules
        #[arg(long, default_value_t = 2)]
        max_len: usize,
        /// Cyclic isotropy order for groupoids
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Verb {
    Hull,
    Matalg,
    Idem,
    Multiplier,
    Conjugate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Category,
    Groupoid,
    Module,
    Bimodule,
    Yoneda,
    Matequiv,
}

fn tolerance(cli: &Cli) -> Result<Tolerance, CliError> {
    let env = match std::env::var("CSTARCAT_TOL_ABS") {
        Ok(v) => Some(v.parse::<f64>().map_err(|e| CliError::Parse(format!("CSTARCAT_TOL_ABS: {e}")))?),
        Err(_) => None,
    };
    let atol = cli.tol_abs.or(env).unwrap_or(Tolerance::DEFAULT.atol);
    let rtol = cli.tol_rel.unwrap_or(Tolerance::DEFAULT.rtol);
    Ok(Tolerance::new(atol, rtol)?)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = tolerance(cli)?;
    match &cli.command {
        Command::Verify { path } => commands::cmd_verify(path, &tol),
        Command::Construct { verb, path, seed } => {
            let verb = match verb {
                Verb::Hull => ConstructVerb::Hull,
                Verb::Matalg => ConstructVerb::Matalg,
                Verb::Idem => ConstructVerb::Idem,
                Verb::Multiplier => ConstructVerb::Multiplier,
                Verb::Conjugate => ConstructVerb::Conjugate,
            };
            commands::cmd_construct(verb, path, *seed, &tol)
        }
        Command::Tensor { left, right, oracle } => commands::cmd_tensor(left, right, *oracle, &tol),
        Command::Morita { path } => commands::cmd_morita(path, &tol),
        Command::Ew { path, seed, count } => commands::cmd_ew(path, *seed, *count, &tol),
        Command::Gen { kind, seed, objects, sectors, max_dim, max_mult, max_len, order } => {
            let kind = match kind {
                Kind::Category => GenKind::Category,
                Kind::Groupoid => GenKind::Groupoid,
                Kind::Module => GenKind::Module,
                Kind::Bimodule => GenKind::Bimodule,
                Kind::Yoneda => GenKind::Yoneda,
                Kind::Matequiv => GenKind::Matequiv,
            };
            let params = GenParams {
                block: BlockParams {
                    objects: *objects,
                    sectors: *sectors,
                    max_sector_dim: *max_dim,
                    max_multiplicity: *max_mult,
                },
                max_len: *max_len,
                groupoid_objects: *objects,
                order: *order,
            };
            commands::cmd_gen(kind, *seed, &params, &tol)
        }
    }
}

// a closed pipe downstream is not an error of ours
fn emit(w: &mut impl Write, text: &str) {
    let _ = w.write_all(text.as_bytes()).and_then(|_| w.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let rendered = match cli.format {
        Format::Text => outcome.report.to_text(),
        Format::Json => outcome.report.to_json() + "\n",
    };
    if let Some(spec) = &outcome.output {
        match &cli.out {
            Some(path) => {
                if let Err(e) = commands::write_output(spec, path) {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_INPUT as u8);
                }
                emit(&mut std::io::stdout(), &rendered);
            }
            None => {
                emit(&mut std::io::stdout(), &format::canonical(spec));
                emit(&mut std::io::stderr(), &rendered);
            }
        }
    } else {
        emit(&mut std::io::stdout(), &rendered);
    }
    ExitCode::from(if outcome.report.passed() { EXIT_PASS } else { EXIT_FAIL } as u8)
}
