//! `elm-lc`: run ELM vs ELM-LC comparisons from a config file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elm_lc::experiment::{count_weights_for, ELM_LC_NAME, ELM_NAME};
use elm_lc::{
    emit_report, generate_synthetic, make_explicit_partition, make_partition, run_experiment,
    sweep_hidden_nodes, write_csv, Error, ExperimentConfig, ReportFormat, RngSeed,
    SyntheticFunction,
};

#[derive(Parser)]
#[command(
    name = "elm-lc",
    version,
    about = "Extreme learning machines with local connections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured trial for ELM and ELM-LC and print the result tables.
    Run(RunArgs),
    /// Pick the hidden-node count with the lowest ELM training error.
    Sweep(RunArgs),
    /// Print input-hidden weight counts for ELM-LC and ELM.
    CountWeights(CountArgs),
    /// Write a synthetic regression dataset as CSV.
    GenSynthetic(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output format: table, csv or json-lines.
    #[arg(long, default_value = "table")]
    format: ReportFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    /// Input node count n.
    #[arg(required_unless_present = "input_sizes")]
    n: Option<usize>,
    /// Hidden node count L.
    #[arg(required_unless_present = "input_sizes")]
    hidden: Option<usize>,
    /// Group count k.
    #[arg(required_unless_present = "input_sizes")]
    k: Option<usize>,
    /// Explicit input group sizes, e.g. 6,6,6,6,6,6,6,6,5.
    #[arg(long, value_delimiter = ',', requires = "hidden_sizes", conflicts_with_all = ["n", "hidden", "k"])]
    input_sizes: Option<Vec<usize>>,
    /// Explicit hidden group sizes.
    #[arg(long, value_delimiter = ',', requires = "input_sizes")]
    hidden_sizes: Option<Vec<usize>>,
}

#[derive(Args)]
struct GenArgs {
    /// Function I (12 inputs) or II (15 inputs).
    which: SyntheticFunction,
    /// Number of samples.
    samples: usize,
    /// Noise standard deviation.
    sigma: f64,
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::State(_) => 2,
        Error::Data(_) | Error::Io { .. } | Error::Shape { .. } => 3,
        Error::Numerical(_) => 4,
    }
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            let report = run_experiment(&cfg)?;
            write_output(&emit_report(&report, args.format), args.out.as_ref())
        }
        Command::Sweep(args) => {
            let cfg = ExperimentConfig::from_file(&args.config)?;
            let sweep = sweep_hidden_nodes(&cfg)?;
            let text = match args.format {
                ReportFormat::Table => {
                    let mut s = format!("{:>8}  {:>14}\n", "L", "train error");
                    for p in &sweep.points {
                        s.push_str(&format!("{:>8}  {:>14.6}\n", p.hidden, p.train_error));
                    }
                    s.push_str(&format!("chosen L = {}\n", sweep.chosen));
                    s
                }
                ReportFormat::Csv => {
                    let mut s = String::from("hidden,train_error,chosen\n");
                    for p in &sweep.points {
                        s.push_str(&format!(
                            "{},{},{}\n",
                            p.hidden,
                            p.train_error,
                            p.hidden == sweep.chosen
                        ));
                    }
                    s
                }
                ReportFormat::JsonLines => {
                    let mut s = String::new();
                    for p in &sweep.points {
                        s.push_str(&format!(
                            "{{\"hidden\":{},\"train_error\":{}}}\n",
                            p.hidden, p.train_error
                        ));
                    }
                    s.push_str(&format!("{{\"chosen\":{}}}\n", sweep.chosen));
                    s
                }
            };
            write_output(&text, args.out.as_ref())
        }
        Command::CountWeights(args) => {
            let partition = match (args.input_sizes, args.hidden_sizes) {
                (Some(i), Some(h)) => make_explicit_partition(&i, &h)?,
                _ => make_partition(
                    args.n.expect("clap enforces n"),
                    args.hidden.expect("clap enforces L"),
                    args.k.expect("clap enforces k"),
                )?,
            };
            let (lc, full) = count_weights_for(&partition)?;
            println!("{ELM_LC_NAME:<8}{lc:>8}");
            println!("{ELM_NAME:<8}{full:>8}");
            Ok(())
        }
        Command::GenSynthetic(args) => {
            let d = generate_synthetic(args.which, args.samples, args.sigma, RngSeed(args.seed))?;
            let file = fs::File::create(&args.out).map_err(|source| Error::Io {
                path: args.out.display().to_string(),
                source,
            })?;
            write_csv(&d, std::io::BufWriter::new(file))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
