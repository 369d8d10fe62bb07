mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Nonparametric block models for directed multigraphs.
#[derive(Parser, Debug)]
#[command(name = "crpblocks", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic edge list with its planted structure.
    Generate(GenerateArgs),
    /// Split an edge list into train and test parts by distinct pair.
    Split(SplitArgs),
    /// Run Gibbs chains and write traces, snapshots and a block summary.
    Fit(FitArgs),
    /// Score held-out edges against sampled negatives.
    Eval(EvalArgs),
    /// Block matrix, top nodes and degree distribution of a checkpoint.
    Summarize(SummarizeArgs),
}

#[derive(Args, Debug, Default)]
pub struct HyperArgs {
    #[arg(long, value_name = "X")]
    tau_pair: Option<String>,
    #[arg(long, value_name = "X")]
    tau_block: Option<String>,
    #[arg(long, value_name = "X")]
    gamma_block: Option<String>,
    #[arg(long, value_name = "X")]
    tau_node: Option<String>,
    #[arg(long, value_name = "X")]
    gamma_node: Option<String>,
}

impl HyperArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("tau-pair", self.tau_pair.clone()),
            ("tau-block", self.tau_block.clone()),
            ("gamma-block", self.gamma_block.clone()),
            ("tau-node", self.tau_node.clone()),
            ("gamma-node", self.gamma_node.clone()),
        ]
    }
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// paper-like, nondiagonal or diagonal.
    #[arg(long)]
    preset: Option<String>,
    /// Draw from ndmdnd or mdnd instead of a preset.
    #[arg(long)]
    model: Option<String>,
    /// Number of edges for a model draw.
    #[arg(long)]
    edges: Option<String>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Edge list to split.
    #[arg(long)]
    input: Option<String>,
    /// Label file fixing node ids (optional).
    #[arg(long)]
    labels: Option<String>,
    /// multiplicity, round or ignore.
    #[arg(long)]
    weight_mode: Option<String>,
    #[arg(long)]
    train_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training edge list.
    #[arg(long)]
    train: Option<String>,
    /// Label file fixing node ids (optional).
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    weight_mode: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// ndmdnd or mdnd.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    #[arg(long)]
    thin: Option<String>,
    /// Independent chains, run concurrently.
    #[arg(long)]
    chains: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Overwrite each chain's checkpoint.ckpt every this many epochs.
    #[arg(long)]
    checkpoint_every: Option<String>,
    /// Nodes listed per block in the summary.
    #[arg(long)]
    top: Option<String>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// A fit output directory or a single checkpoint file.
    #[arg(long)]
    snapshots: Option<String>,
    /// Held-out edge list.
    #[arg(long)]
    test: Option<String>,
    /// Label file (defaults to labels.tsv next to the snapshots).
    #[arg(long)]
    labels: Option<String>,
    #[arg(long)]
    weight_mode: Option<String>,
    /// Number of negatives, or `all`.
    #[arg(long)]
    negatives: Option<String>,
    /// Whether self-loops count as candidate negatives.
    #[arg(long)]
    self_loops: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct SummarizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    labels: Option<String>,
    /// Per-edge planted blocks; adds the recovery ARI to the output.
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    top: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<crpblocks::Error>())
        .map_or("runtime", |e| e.kind())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRPBLOCKS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: usage: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Split(a) => commands::split(a),
        Command::Fit(a) => commands::fit(a),
        Command::Eval(a) => commands::eval(a),
        Command::Summarize(a) => commands::summarize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {}", error_kind(&err), one_line(&format!("{err:#}")));
            ExitCode::FAILURE
        }
    }
}
