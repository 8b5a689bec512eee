mod commands;
mod verdict;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::verdict::Verdict;

#[derive(Parser, Debug)]
#[command(name = "pbisim", version, about = "Probabilistic bisimulation, metrics and modal logics on pLTS files")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Attach optional witnesses (metric tables for `distance`).
    #[arg(long, global = true)]
    witness: bool,

    /// Seed for randomised tie-breaking. No command currently uses it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide bisimilarity or similarity of two states.
    Check {
        file: PathBuf,
        s: String,
        t: String,
        #[arg(long, value_enum, default_value_t = CheckMode::Bisim)]
        mode: CheckMode,
    },
    /// The k-th metric iterate, or the metric at kernel stabilisation.
    Distance {
        file: PathBuf,
        s: String,
        t: String,
        #[command(flatten)]
        how: DistanceHow,
        /// Print the whole table as CSV instead of a verdict.
        #[arg(long)]
        csv: bool,
    },
    /// Model-check a formula of the logic, or of the mu-calculus with --mu.
    Mc {
        file: PathBuf,
        formula: String,
        /// State to check; without it the satisfying set is printed.
        state: Option<String>,
        #[arg(long)]
        mu: bool,
    },
    /// The characteristic formula of a state.
    Charform {
        file: PathBuf,
        s: String,
        /// Evaluate the formula and compare with the bisimilarity class.
        #[arg(long)]
        verify: bool,
    },
    /// A formula satisfied by s but not by t, if any.
    Distinguish { file: PathBuf, s: String, t: String },
    /// The bisimilarity partition.
    Partition { file: PathBuf },
    /// The partition of the n-th approximant.
    Approx { file: PathBuf, n: usize },
    /// Decide whether one distribution lifts to another through a relation.
    Lift {
        file: PathBuf,
        /// Source distribution, e.g. "1/2 u, 1/2 v".
        delta: String,
        /// Target distribution.
        theta: String,
        /// identity, bisim, sim, full, or pairs "s:t,u:v".
        #[arg(long, default_value = "identity")]
        relation: String,
        /// Write the flow network in DOT format to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckMode {
    Bisim,
    Sim,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct DistanceHow {
    /// Number of iterations from the zero metric.
    #[arg(long)]
    iters: Option<usize>,
    /// Iterate until the kernel stops changing.
    #[arg(long)]
    stabilise: bool,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] pbisim::Error),
    #[error("{0}")]
    Input(String),
    #[error("formula has {size} nodes, over the budget of {budget}; raise PLTS_NODE_BUDGET to print it")]
    TreeBudget { size: u64, budget: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(pbisim::Error::NodeBudget { .. }) | CliError::TreeBudget { .. } => 3,
            _ => 2,
        }
    }
}

enum Output {
    Verdict(Verdict),
    Raw(String),
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let ctx = commands::Context { witness: cli.witness };
    let verdict = match &cli.command {
        Command::Check { file, s, t, mode } => {
            commands::check(&load(file)?, s, t, *mode == CheckMode::Sim)?
        }
        Command::Distance { file, s, t, how, csv } => {
            let p = load(file)?;
            if *csv {
                return Ok(Output::Raw(commands::distance_csv(&p, how.iters)));
            }
            commands::distance(&ctx, &p, s, t, how.iters)?
        }
        Command::Mc { file, formula, state, mu } => {
            commands::mc(&load(file)?, formula, state.as_deref(), *mu)?
        }
        Command::Charform { file, s, verify } => {
            commands::charform(&load(file)?, s, *verify, node_budget()?)?
        }
        Command::Distinguish { file, s, t } => commands::distinguish(&load(file)?, s, t)?,
        Command::Partition { file } => commands::partition(&load(file)?),
        Command::Approx { file, n } => commands::approx(&load(file)?, *n),
        Command::Lift {
            file,
            delta,
            theta,
            relation,
            dot,
        } => {
            let p = load(file)?;
            let (verdict, network) = commands::lift(&p, delta, theta, relation)?;
            if let Some(path) = dot {
                std::fs::write(path, network).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            verdict
        }
    };
    Ok(Output::Verdict(verdict))
}

fn load(path: &PathBuf) -> Result<pbisim::RatPlts, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(pbisim::parse::parse_plts(&text)?)
}

fn node_budget() -> Result<usize, CliError> {
    match std::env::var("PLTS_NODE_BUDGET") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("PLTS_NODE_BUDGET must be a positive integer, got `{v}`"))),
        Err(_) => Ok(pbisim::mucalc::DEFAULT_NODE_BUDGET),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; --help and --version are not
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Output::Raw(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Output::Verdict(v)) => {
            match cli.format {
                Format::Text => print!("{}", v.render_text()),
                Format::Json => print!("{}", v.render_json()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
