//! The `phid` command-line pipeline.
//!
//! Every subcommand writes into `--out`; each CSV, JSON, SVG and container
//! artifact records the resolved [`RunConfig`]. Reruns with the same config
//! produce byte-identical artifacts; timestamps go only to `run.log`.
//!
//! | exit code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | I/O failure |
//! | 2 | malformed input file or command line |
//! | 3 | validation failure |
//! | 4 | numerical failure |

pub mod analysis;
pub mod args;
pub mod artifact;
pub mod plot;
pub mod toy;

use std::path::Path;

use serde_json::Value;

pub use args::{Cli, Command, GlobalArgs, ToyCommand};
pub use artifact::{OutDir, RunConfig};
use phid_core::headscore::{PairOptions, PairStrategy};
use phid_core::{par, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) => EXIT_PARSE,
        Error::Validation(_) => EXIT_VALIDATION,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Io { .. } => EXIT_IO,
    }
}

/// Global flags shared by every subcommand.
pub struct Ctx {
    pub args: GlobalArgs,
}

impl Ctx {
    pub fn seed(&self) -> u64 {
        self.args.seed.unwrap_or(0)
    }

    /// The requested strategy, sampled with `--seed`, or the size-based default.
    pub fn pair_options(&self, heads: usize) -> PairOptions {
        let strategy = match self.args.pairs {
            Some(PairStrategy::Sampled { k, .. }) => PairStrategy::Sampled { k, seed: self.seed() },
            Some(s) => s,
            None => PairStrategy::default_for(heads),
        };
        PairOptions {
            strategy,
            estimator: self.args.estimator(),
            lag: self.args.lag,
        }
    }
}

pub fn run_config(
    ctx: &Ctx,
    subcommand: &str,
    inputs: &[&Path],
    seed: u64,
    pairs: Option<PairStrategy>,
    options: Value,
) -> RunConfig {
    RunConfig {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
        out: ctx.args.out.clone(),
        seed,
        estimator: ctx.args.estimator(),
        lag: ctx.args.lag,
        pairs,
        units: ctx.args.units,
        threads: ctx.args.threads,
        options,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { args: cli.global };
    par::install(ctx.args.threads, || dispatch(&ctx, &cli.command))
}

fn dispatch(ctx: &Ctx, command: &Command) -> Result<()> {
    match command {
        Command::Decompose { trace } => analysis::decompose(ctx, trace),
        Command::Scores { trace } => analysis::scores(ctx, trace),
        Command::Graph { input, kind, iterations } => analysis::graph(ctx, input, *kind, *iterations),
        Command::Compare { easy, hard, q, iterations } => analysis::compare(ctx, easy, hard, *q, *iterations),
        Command::Toy(t) => match t {
            ToyCommand::Train { config, steps } => toy::train_cmd(ctx, config.as_deref(), *steps),
            ToyCommand::Trace { checkpoint, inputs } => toy::trace_cmd(ctx, checkpoint, inputs),
            ToyCommand::Skip { checkpoint, inputs, layers } => {
                toy::skip_cmd(ctx, checkpoint, inputs, layers.as_deref())
            }
            ToyCommand::Ablate {
                checkpoint,
                trace,
                orders,
                ks,
                trace_examples,
                eval_split,
            } => toy::ablate_cmd(
                ctx,
                checkpoint,
                trace.as_deref(),
                orders,
                ks.as_deref(),
                *trace_examples,
                *eval_split,
            ),
            ToyCommand::Ig { checkpoint, split, index, steps } => {
                toy::ig_cmd(ctx, checkpoint, *split, *index, *steps)
            }
        },
    }
}
