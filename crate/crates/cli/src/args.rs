use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phid_core::headscore::PairStrategy;
use phid_core::infodyn::{Estimator, Unit, DEFAULT_RIDGE};
use phid_core::netgraph::GraphKind;
use phid_toy::experiments::AblationOrder;

/// Information dynamics of attention heads.
#[derive(Debug, Parser)]
#[command(name = "phid", version, about, long_about = None)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Gaussian,
    Discrete,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base mutual-information estimator.
    #[arg(long, global = true, value_enum, default_value_t = EstimatorKind::Gaussian)]
    pub estimator: EstimatorKind,
    /// Rank-to-normal copula transform before the Gaussian estimator.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    pub copula: bool,
    /// Diagonal ridge added to covariance matrices.
    #[arg(long, global = true, default_value_t = DEFAULT_RIDGE)]
    pub ridge: f64,
    /// `all` or `sampled:<k>`; defaults to all pairs up to 512 heads.
    #[arg(long, global = true)]
    pub pairs: Option<PairStrategy>,
    /// Reporting unit for information values.
    #[arg(long, global = true, default_value = "nats")]
    pub units: Unit,
    /// Seed for pair sampling, community detection, layout and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker cap; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Time lag between the source and target states.
    #[arg(long, global = true, default_value_t = 1)]
    pub lag: usize,
}

impl GlobalArgs {
    pub fn estimator(&self) -> Estimator {
        match self.estimator {
            EstimatorKind::Gaussian => Estimator::Gaussian {
                copula: self.copula,
                ridge: self.ridge,
            },
            EstimatorKind::Discrete => Estimator::Discrete,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise ΦID atoms for every analysed head pair.
    Decompose { trace: PathBuf },
    /// Per-head abstract/memory scores and the layer profile.
    Scores { trace: PathBuf },
    /// Head graph metrics, communities and layout from a trace or atoms CSV.
    Graph {
        input: PathBuf,
        #[arg(long, default_value = "abstract")]
        kind: GraphKind,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
    },
    /// Separation of top and bottom heads on an easy and a hard trace.
    Compare {
        easy: PathBuf,
        hard: PathBuf,
        /// Fraction of heads taken from each end of the ranking.
        #[arg(long, default_value_t = 0.25)]
        q: f64,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
    },
    /// Train, capture and intervene on the built-in toy transformer.
    #[command(subcommand)]
    Toy(ToyCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Holdout,
    All,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputSet {
    /// Which part of the task's examples to run on.
    #[arg(long, value_enum, default_value_t = Split::Train)]
    pub split: Split,
    /// Number of examples taken from the start of the split.
    #[arg(long, default_value_t = 512)]
    pub examples: usize,
}

#[derive(Debug, Subcommand)]
pub enum ToyCommand {
    /// Train a model; writes model.phid, train_curve.csv and train_report.json.
    Train {
        /// JSON model config; defaults to the modular-addition preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the step budget.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Capture head and residual traces plus cosine and energy profiles.
    Trace {
        checkpoint: PathBuf,
        #[command(flatten)]
        inputs: InputSet,
    },
    /// Layer-skip disturbance for every (or the given) skipped layer.
    Skip {
        checkpoint: PathBuf,
        #[command(flatten)]
        inputs: InputSet,
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
    },
    /// Cumulative head ablation ordered by score rank.
    Ablate {
        checkpoint: PathBuf,
        /// Head trace to score; captured from the training split when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_delimiter = ',',
              default_value = "abs_first,mem_first,random:0,random:1,random:2,random:3,random:4")]
        orders: Vec<AblationOrder>,
        /// Head counts to ablate; defaults to 0..=N.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        /// Examples captured for scoring when no trace is given.
        #[arg(long, default_value_t = 512)]
        trace_examples: usize,
        /// Evaluation split; the holdout unless the task has none.
        #[arg(long, value_enum, default_value_t = Split::Holdout)]
        eval_split: Split,
    },
    /// Integrated gradients of the correct-class logit for one example.
    Ig {
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Holdout)]
        split: Split,
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Riemann steps along the straight path from the zero baseline.
        #[arg(long, default_value_t = 256)]
        steps: usize,
    },
}
