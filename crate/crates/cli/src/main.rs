//! `natcd`: fit penalised GLMs from delimited text files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use natcd::{Family, StartMode, UpdateRule};

#[derive(Debug, Parser)]
#[command(
    name = "natcd",
    version,
    about = "Natural coordinate descent for penalised GLM regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one penalty (or a path with `--mu path`).
    Fit(FitArgs),
    /// Fit the geometric penalty path.
    Path(FitArgs),
    /// Re-certify the coefficients in a structured report.
    Check(CheckArgs),
    /// Time cold- and warm-start paths on the same data.
    Bench(BenchArgs),
    /// Write a seeded synthetic dataset.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Tsv,
    Structured,
}

/// `--mu` takes a number or the word `path`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum MuArg {
    Value(f64),
    Path,
}

fn parse_mu(s: &str) -> Result<MuArg, String> {
    if s.eq_ignore_ascii_case("path") {
        return Ok(MuArg::Path);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is neither a number nor 'path'"))?;
    if v.is_finite() && v >= 0.0 {
        Ok(MuArg::Value(v))
    } else {
        Err(format!("penalty {v} must be finite and nonnegative"))
    }
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("delimiter '{s}' must be a single ASCII character or 'tab'")),
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Rescale predictors to unit standard deviation before fitting.
    #[arg(long)]
    standardize: bool,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    family: Family,
    /// Ridge weight on the penalised coefficients.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Convergence threshold on the largest coefficient change per cycle.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = UpdateRule::Linear)]
    rule: UpdateRule,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Tsv)]
    output: OutputFormat,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// ℓ1 penalty, or `path` for the geometric grid.
    #[arg(long, value_parser = parse_mu)]
    mu: Option<MuArg>,
    /// Number of penalties on the path.
    #[arg(long)]
    path_length: Option<usize>,
    #[arg(long)]
    start: Option<StartMode>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Structured report written by `fit` or `path`.
    #[arg(long)]
    report: PathBuf,
    /// Data file; defaults to the one recorded in the report.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    path_length: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Coefficients including the intercept.
    #[arg(long, default_value_t = 11)]
    p: usize,
    #[arg(long, default_value_t = Family::Gaussian)]
    family: Family,
    #[arg(long, default_value_t = 0.0)]
    correlation: f64,
    #[arg(long, default_value_t = 0)]
    sparsity: usize,
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
    #[arg(long, default_value_t = 0.0)]
    min_class_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the true coefficients, one per line.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => commands::fit(args, false),
        Command::Path(args) => commands::fit(args, true),
        Command::Check(args) => commands::check(args),
        Command::Bench(args) => commands::bench(args),
        Command::Generate(args) => commands::generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn mu_accepts_numbers_and_path() {
        assert_eq!(parse_mu("path"), Ok(MuArg::Path));
        assert_eq!(parse_mu("PATH"), Ok(MuArg::Path));
        assert_eq!(parse_mu("0.25"), Ok(MuArg::Value(0.25)));
        assert_eq!(parse_mu("0"), Ok(MuArg::Value(0.0)));
        assert!(parse_mu("-0.1").is_err());
        assert!(parse_mu("inf").is_err());
        assert!(parse_mu("NaN").is_err());
        assert!(parse_mu("lots").is_err());
    }

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter(","), Ok(b','));
        assert_eq!(parse_delimiter("tab"), Ok(b'\t'));
        assert_eq!(parse_delimiter("\\t"), Ok(b'\t'));
        assert_eq!(parse_delimiter(";"), Ok(b';'));
        assert!(parse_delimiter(",,").is_err());
        assert!(parse_delimiter("é").is_err());
    }

    #[test]
    fn defaults() {
        let cli =
            Cli::try_parse_from(["natcd", "fit", "--input", "d.csv", "--family", "poisson", "--mu", "0.1"]).unwrap();
        let Command::Fit(args) = cli.command else { panic!() };
        assert_eq!(args.model.lambda, 0.0);
        assert_eq!(args.model.eps, 1e-6);
        assert_eq!(args.model.rule, UpdateRule::Linear);
        assert_eq!(args.data.response, "y");
        assert_eq!(args.data.delimiter, b',');
        assert_eq!(args.output.output, OutputFormat::Tsv);
        assert!(args.start.is_none() && args.path_length.is_none());
    }
}
