use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crtractor::cli::{self, Params, Suite, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "crtractor", version, about = "Exact CR tractor calculus on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; exit code 0 iff every check passes.
    Verify {
        #[arg(value_enum, value_name = "SUITE")]
        positional: Option<Suite>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the invariant operator for the given weights.
    OpPrint {
        #[command(flatten)]
        common: Common,
    },
    /// Dump the matrix of the flat invariant operator on monomials up to --degree.
    Matrix {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Levi form signs, e.g. "+-".
    #[arg(long)]
    signature: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    wp: Option<String>,
    #[arg(long)]
    k: Option<u32>,
    /// Largest order for the flat identity, normalization and adjoint checks.
    #[arg(long)]
    kmax: Option<u32>,
    /// Bars of the k-1 D-factors: 'u' unbarred, 'b' barred.
    #[arg(long)]
    pattern: Option<String>,
    /// Real rescaling function over z1..zn, zb1..zbn, t.
    #[arg(long, allow_hyphen_values = true)]
    upsilon: Option<String>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
}

impl Common {
    fn params(&self) -> Params {
        Params {
            n: self.n,
            signature: self.signature.clone(),
            w: self.w.clone(),
            wp: self.wp.clone(),
            k: self.k,
            kmax: self.kmax,
            pattern: self.pattern.clone(),
            upsilon: self.upsilon.clone(),
            seed: self.seed,
            degree: self.degree,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

/// Writes `out` to stdout; a closed pipe is not an error.
fn emit(out: &str) {
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { positional, common } => {
            let Some(suite) = positional.or(common.suite) else {
                return usage("a suite is required");
            };
            let report = match cli::cmd_verify(suite, &common.params()) {
                Ok(r) => r,
                Err(e) => return usage(e),
            };
            emit(&match common.format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")),
                _ => report.render_text(),
            });
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::OpPrint { common } => match cli::cmd_op_print(&common.params()) {
            Ok(op) => {
                emit(&format!("{}\n", cli::render_op(&op, common.format == Format::Json)));
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::Matrix { common } => match cli::cmd_matrix(&common.params()) {
            Ok(m) => {
                emit(&match common.format {
                    Format::Csv => m.render_csv(),
                    Format::Json => format!("{}\n", serde_json::to_string_pretty(&m).expect("serializable")),
                    Format::Text => {
                        let mut out = format!("E{} -> E{}, monomials of degree <= {}\n", m.domain, m.codomain, m.bound);
                        if let Some(a) = &m.folland_stein {
                            out += &format!("Folland-Stein alpha: [{}]\n", a.join(", "));
                        }
                        out + &m.render_csv()
                    }
                });
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
    }
}
