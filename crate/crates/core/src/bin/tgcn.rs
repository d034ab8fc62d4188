use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tgcn_core::cli::{
    self, ApproxCompareOpts, EvalOpts, GenSbmOpts, ImportCloudOpts, SpectralCheckOpts, SweepOpts,
    TrainOpts,
};

/// Graph learning workbench: spectral filtering diagnostics and
/// Taylor-expansion GCN training for semi-supervised node classification.
#[derive(Parser)]
#[command(name = "tgcn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model per seed and write a metrics JSON file.
    Train(TrainArgs),
    /// Run the spectral-vs-vertex polynomial filter equivalence battery.
    SpectralCheck(SpectralCheckArgs),
    /// Compare Taylor and Chebyshev kernel approximations against the exact
    /// wavelet operator (CSV on stdout).
    ApproxCompare(ApproxCompareArgs),
    /// Sweep fixed alpha values for a Type-1 model (CSV output).
    SweepAlpha(SweepAlphaArgs),
    /// Generate a stochastic block model dataset directory.
    GenSbm(GenSbmArgs),
    /// Build a dataset directory from an `x y z label` point cloud via kNN.
    ImportCloud(ImportCloudArgs),
    /// Evaluate a saved model on a named split.
    Eval(EvalArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (meta.json, graph.edges, features.csv, labels.txt).
    #[arg(long)]
    dataset: PathBuf,
    /// Model: gcn | tgcn1 | tgcn2 | tgcn3 | tgcn4.
    #[arg(long, default_value = "gcn")]
    model: String,
    /// Polynomial order K (tgcn3/tgcn4 only).
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Representation: adj | rw | sym | ppr.
    #[arg(long, default_value = "sym")]
    prop: String,
    /// Fixed self-influence alpha (tgcn1/3/4).
    #[arg(long)]
    alpha: Option<f64>,
    /// Learn alpha during training instead of fixing it.
    #[arg(long, default_value_t = false)]
    auto_alpha: bool,
    /// Hidden units for 2-layer models.
    #[arg(long, default_value_t = 40)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    /// Number of layers (1 or 2).
    #[arg(long, default_value_t = 2)]
    layers: usize,
    /// Comma-separated list of training seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Split ratio tag: 10/30/60 or 60/20/20.
    #[arg(long, default_value = "10/30/60")]
    split: String,
    /// Seed for the split permutation.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Draw a fresh split per training seed instead of sharing one.
    #[arg(long, default_value_t = false)]
    resplit_per_seed: bool,
    /// Skip row-normalizing the features.
    #[arg(long, default_value_t = false)]
    no_normalize: bool,
    /// Metrics JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// Also save the first seed's trained model to this path.
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Fix all reduction orders for byte-identical reruns.
    #[arg(long, default_value_t = false)]
    deterministic: bool,
}

#[derive(Args)]
struct SpectralCheckArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ApproxCompareArgs {
    /// Kernel spec: heat[:t] | identity | linear[:shift] | monomial:p | poly:c0,c1,...
    #[arg(long, default_value = "heat")]
    kernel: String,
    /// Comma-separated expansion orders.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    orders: Vec<usize>,
    #[arg(long, default_value_t = 12)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepAlphaArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated alpha grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value = "sym")]
    prop: String,
    #[arg(long, default_value = "10/30/60")]
    split: String,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, default_value_t = 40)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 5e-4)]
    weight_decay: f64,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, default_value_t = false)]
    no_normalize: bool,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenSbmArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, default_value_t = 0.9)]
    p_in: f64,
    #[arg(long, default_value_t = 0.05)]
    p_out: f64,
    #[arg(long, default_value_t = 10)]
    seeds_per_block: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sbm")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImportCloudArgs {
    /// Point cloud file with `x y z label` lines.
    #[arg(long)]
    points: PathBuf,
    /// Neighbors per node in the kNN graph.
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value = "cloud")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model file written by `train --save-model`.
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Which split to score: train | val | test.
    #[arg(long, default_value = "test")]
    split_name: String,
    /// Regenerate the split from this ratio tag instead of splits.json.
    #[arg(long)]
    split: Option<String>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: tgcn_core::Result<ExitCode> = match cli.command {
        Command::Train(a) => cli::run_train(&TrainOpts {
            dataset: a.dataset,
            model: a.model,
            order: a.order,
            prop: a.prop,
            alpha: a.alpha,
            auto_alpha: a.auto_alpha,
            hidden: a.hidden,
            epochs: a.epochs,
            lr: a.lr,
            dropout: a.dropout,
            weight_decay: a.weight_decay,
            layers: a.layers,
            seeds: a.seeds,
            split: a.split,
            split_seed: a.split_seed,
            resplit_per_seed: a.resplit_per_seed,
            no_normalize: a.no_normalize,
            out: a.out,
            save_model: a.save_model,
            deterministic: a.deterministic,
        })
        .map(|_| ExitCode::SUCCESS),
        Command::SpectralCheck(a) => cli::run_spectral_check(&SpectralCheckOpts {
            n: a.n,
            trials: a.trials,
            degree: a.degree,
            seed: a.seed,
        })
        .map(|max_err| {
            if max_err <= 1e-8 {
                ExitCode::SUCCESS
            } else {
                eprintln!("spectral-check failed: max error {max_err:.3e} > 1e-8");
                ExitCode::from(4)
            }
        }),
        Command::ApproxCompare(a) => cli::run_approx_compare(&ApproxCompareOpts {
            kernel: a.kernel,
            orders: a.orders,
            n: a.n,
            seed: a.seed,
        })
        .map(|_| ExitCode::SUCCESS),
        Command::SweepAlpha(a) => cli::run_sweep_alpha(&SweepOpts {
            dataset: a.dataset,
            grid: a.grid,
            seeds: a.seeds,
            prop: a.prop,
            split: a.split,
            split_seed: a.split_seed,
            hidden: a.hidden,
            epochs: a.epochs,
            lr: a.lr,
            dropout: a.dropout,
            weight_decay: a.weight_decay,
            layers: a.layers,
            no_normalize: a.no_normalize,
            out: a.out,
        })
        .map(|_| ExitCode::SUCCESS),
        Command::GenSbm(a) => cli::run_gen_sbm(&GenSbmOpts {
            n: a.n,
            blocks: a.blocks,
            p_in: a.p_in,
            p_out: a.p_out,
            seeds_per_block: a.seeds_per_block,
            seed: a.seed,
            name: a.name,
            out: a.out,
        })
        .map(|_| ExitCode::SUCCESS),
        Command::ImportCloud(a) => cli::run_import_cloud(&ImportCloudOpts {
            points: a.points,
            k: a.k,
            name: a.name,
            out: a.out,
        })
        .map(|_| ExitCode::SUCCESS),
        Command::Eval(a) => cli::run_eval(&EvalOpts {
            model_file: a.model_file,
            dataset: a.dataset,
            split_name: a.split_name,
            split: a.split,
            split_seed: a.split_seed,
        })
        .map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
