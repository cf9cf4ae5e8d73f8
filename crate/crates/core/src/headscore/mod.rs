//! Per-head abstract/memory scores derived from pairwise ΦID atoms.
//!
//! Each head's *abstract* score is the mean synergy→synergy atom over the
//! head pairs it takes part in, its *memory* score the mean
//! redundancy→redundancy atom, and `diff = abstract − memory` ranks heads
//! from information reorganisers to transmitters.

mod pairs;
mod profile;
mod scores;
mod separation;

pub use pairs::{
    compute_pair_atoms, read_atoms_csv, write_atoms_csv, PairAtomTable, PairOptions, PairRecord,
    PairStrategy, ALL_PAIRS_LIMIT, DEFAULT_SAMPLED_PARTNERS, DEFAULT_SAMPLING_SEED,
};
pub use profile::{layer_means, layer_profile, LayerProfile};
pub use scores::{
    classify, score_heads, scores_from_pairs, write_scores_csv, Boundary, HeadClass, HeadScore,
    HeadScoreTable,
};
pub use separation::{
    separation_report, separation_statistic, silhouette, SeparationComparison, SeparationReport,
};
