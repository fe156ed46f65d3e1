//! `tmdc`: train, evaluate, inspect and stress Tsetlin Machine models.
//!
//! Exit codes: 0 on success, 1 for invalid settings or a failed run, 2 when
//! a dataset or model file cannot be read.

mod commands;
mod config;
mod data;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use data::DataError;

/// Environment variable naming the worker thread count.
const THREADS_VAR: &str = "TMDC_THREADS";

#[derive(Parser)]
#[command(name = "tmdc", version, about = "Tsetlin Machine with drop-clause training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it with per-epoch metrics.
    #[command(args_override_self = true)]
    Train(TrainArgs),
    /// Report accuracy of a saved model on a dataset.
    #[command(args_override_self = true)]
    Eval(EvalArgs),
    /// Export top clauses, and a heatmap or word-frequency map for a sample.
    #[command(args_override_self = true)]
    Interpret(InterpretArgs),
    /// Compare clean accuracy against corrupted or perturbed copies.
    #[command(args_override_self = true)]
    Robust(RobustArgs),
}

/// Inputs shared by every subcommand.
#[derive(Args)]
struct Input {
    /// `key=value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset file (bits text, IDX images, .tmbc cache or label,text CSV).
    #[arg(long)]
    data: Option<String>,
    /// IDX label file for IDX images.
    #[arg(long)]
    labels: Option<String>,
    /// auto, bits, idx, cache or text.
    #[arg(long)]
    format: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    test_labels: Option<String>,
    /// Clauses per class.
    #[arg(long)]
    clauses: Option<usize>,
    /// Voting margin.
    #[arg(long = "T")]
    t: Option<u32>,
    /// Specificity.
    #[arg(long = "s")]
    s: Option<f64>,
    /// States per action side.
    #[arg(long)]
    states: Option<u16>,
    /// Drop probability per clause per epoch.
    #[arg(long)]
    drop_clause: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Always reinforce true positives.
    #[arg(long)]
    boost_tp: bool,
    #[arg(long)]
    weighted: bool,
    /// One machine per class even for two classes.
    #[arg(long)]
    one_vs_rest: bool,
    /// Convolution window side; omit for a flat machine.
    #[arg(long)]
    patch: Option<usize>,
    /// Patch stride.
    #[arg(long)]
    step: Option<usize>,
    /// Leave out patch coordinate bits.
    #[arg(long)]
    no_coords: bool,
    #[command(flatten)]
    dims: Dims,
    /// Threshold window for IDX images.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    offset: Option<i32>,
    /// Vocabulary size for text.
    #[arg(long)]
    vocab: Option<usize>,
    #[arg(long)]
    min_freq: Option<usize>,
    #[arg(long)]
    stem: bool,
}

/// Image geometry for formats that do not carry it.
#[derive(Args)]
struct Dims {
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    channels: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct InterpretArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    model: Option<String>,
    /// Class name or index; all classes when omitted.
    #[arg(long)]
    class: Option<String>,
    /// Number of top clauses.
    #[arg(long)]
    k: Option<usize>,
    /// Sample of `--data` to explain.
    #[arg(long)]
    index: Option<usize>,
    /// Literals listed in a word-frequency map.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args)]
struct RobustArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    model: Option<String>,
    /// `;` separated corruptions (impulse:R, translate:DR,DC, occlusion:N,
    /// stripe); an empty string applies none.
    #[arg(long, allow_hyphen_values = true)]
    kinds: Option<String>,
    /// Chance that an image is corrupted at all.
    #[arg(long)]
    apply_prob: Option<f64>,
    /// Corrupted copies averaged into the report.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// TAB separated synonym map for text sets.
    #[arg(long)]
    synonyms: Option<String>,
    #[command(flatten)]
    dims: Dims,
}

type Pairs = Vec<(&'static str, String)>;

fn push<T: ToString>(pairs: &mut Pairs, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        pairs.push((key, v.to_string()));
    }
}

fn push_flag(pairs: &mut Pairs, key: &'static str, set: bool) {
    if set {
        pairs.push((key, "true".into()));
    }
}

impl Input {
    fn pairs(&self, p: &mut Pairs) {
        push(p, "data", &self.data);
        push(p, "labels", &self.labels);
        push(p, "format", &self.format);
        push(p, "out", &self.out);
    }
}

impl Dims {
    fn pairs(&self, p: &mut Pairs) {
        push(p, "rows", &self.rows);
        push(p, "cols", &self.cols);
        push(p, "channels", &self.channels);
    }
}

impl Command {
    fn input(&self) -> &Input {
        match self {
            Command::Train(a) => &a.input,
            Command::Eval(a) => &a.input,
            Command::Interpret(a) => &a.input,
            Command::Robust(a) => &a.input,
        }
    }

    /// Flags given on the command line as config settings.
    fn overrides(&self) -> Pairs {
        let mut p = Pairs::new();
        self.input().pairs(&mut p);
        match self {
            Command::Train(a) => {
                push(&mut p, "test", &a.test);
                push(&mut p, "test_labels", &a.test_labels);
                push(&mut p, "clauses", &a.clauses);
                push(&mut p, "T", &a.t);
                push(&mut p, "s", &a.s);
                push(&mut p, "states", &a.states);
                push(&mut p, "drop_clause", &a.drop_clause);
                push(&mut p, "epochs", &a.epochs);
                push(&mut p, "seed", &a.seed);
                push_flag(&mut p, "boost_tp", a.boost_tp);
                push_flag(&mut p, "weighted", a.weighted);
                push_flag(&mut p, "one_vs_rest", a.one_vs_rest);
                push(&mut p, "patch", &a.patch);
                push(&mut p, "step", &a.step);
                if a.no_coords {
                    p.push(("coords", "false".into()));
                }
                a.dims.pairs(&mut p);
                push(&mut p, "window", &a.window);
                push(&mut p, "sigma", &a.sigma);
                push(&mut p, "offset", &a.offset);
                push(&mut p, "vocab", &a.vocab);
                push(&mut p, "min_freq", &a.min_freq);
                push_flag(&mut p, "stem", a.stem);
            }
            Command::Eval(a) => push(&mut p, "model", &a.model),
            Command::Interpret(a) => {
                push(&mut p, "model", &a.model);
                push(&mut p, "class", &a.class);
                push(&mut p, "k", &a.k);
                push(&mut p, "index", &a.index);
                push(&mut p, "top", &a.top);
            }
            Command::Robust(a) => {
                push(&mut p, "model", &a.model);
                push(&mut p, "kinds", &a.kinds);
                push(&mut p, "apply_prob", &a.apply_prob);
                push(&mut p, "draws", &a.draws);
                push(&mut p, "seed", &a.seed);
                push(&mut p, "synonyms", &a.synonyms);
                a.dims.pairs(&mut p);
            }
        }
        p
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let cfg = RunConfig::resolve(cli.command.input().config.as_deref(), &cli.command.overrides())
        .context("invalid configuration")?;
    match cli.command {
        Command::Train(_) => commands::train(&cfg),
        Command::Eval(_) => commands::eval(&cfg),
        Command::Interpret(_) => commands::interpret(&cfg),
        Command::Robust(_) => commands::robust(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<DataError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
