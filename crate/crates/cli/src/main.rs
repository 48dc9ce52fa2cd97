//! `lsoformer` command-line front end: dataset generation, training,
//! evaluation, ablation tables, single predictions and CSV export.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsoformer::dataset::SplitSetup;
use lsoformer::model::DecoderKind;
use lsoformer::train::{FreezeMode, LossMode};
use lsoformer_synth::Metric;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lsoformer", version, about = "QoR trajectory prediction for logic synthesis recipes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of QoR trajectories.
    GenData(GenDataArgs),
    /// Train a model on a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Train every cell of an ablation table.
    Ablate(AblateArgs),
    /// Predict the QoR trajectory of one netlist under one recipe.
    Predict(PredictArgs),
    /// Export per-circuit MAPE and loss curves of training runs as CSV.
    ExportPlots(ExportArgs),
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output directory. Defaults to `$LSOFORMER_OUT/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "LSOFORMER_OUT", hide_env_values = true, hide = true)]
    out_root: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    /// Directory of .bench / .aag netlists.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    circuits: Option<PathBuf>,
    /// Number of synthetic circuits to generate instead.
    #[arg(long)]
    synth: Option<usize>,
    #[arg(long, default_value_t = 50)]
    min_nodes: usize,
    #[arg(long, default_value_t = 2000)]
    max_nodes: usize,
    /// Number of recipes.
    #[arg(long)]
    recipes: usize,
    /// Recipe length M.
    #[arg(long)]
    len: usize,
    #[arg(long)]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also store a split and its normalizer: `ip-inductive` or `recipe-inductive`.
    #[arg(long)]
    split: Option<SplitSetup>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Split setup when the dataset does not store one.
    #[arg(long)]
    split: Option<SplitSetup>,
    /// Split seed; defaults to the dataset seed.
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    d_h: Option<usize>,
    #[arg(long)]
    gcn_layers: Option<usize>,
    #[arg(long)]
    heads: Option<usize>,
    #[arg(long)]
    ffn_width: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    regressor_hidden: Option<usize>,
    #[arg(long)]
    mlp_hidden: Option<usize>,
    /// Mask padded levels in cross-attention.
    #[arg(long)]
    padding_mask: bool,
}

#[derive(Debug, Args, Clone)]
struct OptimArgs {
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Keep the final model instead of the best-validation one.
    #[arg(long)]
    keep_last: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset directory written by gen-data.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "transformer")]
    decoder: DecoderKind,
    /// `trajectory` or `final_only`; defaults to what the decoder predicts.
    #[arg(long)]
    loss: Option<LossMode>,
    #[arg(long, default_value = "none")]
    freeze: FreezeMode,
    /// Checkpoint to start from.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    optim: OptimArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Subset {
    Train,
    Val,
    All,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "val")]
    subset: Subset,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    /// 3 (encoder probing), 4 (supervision) or 5 (decoders).
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=5))]
    table: u8,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[command(flatten)]
    optim: OptimArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// A .bench or .aag file.
    #[arg(long)]
    netlist: PathBuf,
    /// Comma separated heuristics, e.g. `rw,rf -z,balance`.
    #[arg(long)]
    recipe: String,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Run directories written by `train`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

impl OutArgs {
    fn resolve(&self, command: &str) -> PathBuf {
        match (&self.out, &self.out_root) {
            (Some(dir), _) => dir.clone(),
            (None, Some(root)) => root.join(command),
            (None, None) => PathBuf::from("lsoformer-out").join(command),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Predict(a) => commands::predict(a),
        Command::ExportPlots(a) => commands::export_plots(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
