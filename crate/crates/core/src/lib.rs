//! Information dynamics of attention heads.
//!
//! The crate turns per-head activation traces into integrated information
//! decomposition (ΦID) atoms, scores every head as synergistic ("abstract")
//! or redundant ("memory"), and analyses the resulting head-collaboration
//! graphs.
//!
//! - [`infodyn`]: mutual information, PID with minimum-MI redundancy and the
//!   16-atom ΦID lattice.
//! - [`traces`]: the trace data model and its binary file format.
//! - [`headscore`]: per-head abstract/memory scores, layer profiles and the
//!   easy/hard separation statistic.
//! - [`netgraph`]: weighted head graphs, global efficiency, modularity,
//!   community detection and force-directed layout.
//!
//! With the default `parallel` feature the pairwise loops run on rayon;
//! without it everything runs sequentially with identical results.

pub mod error;
pub mod headscore;
pub mod infodyn;
pub mod netgraph;
pub mod par;
pub mod traces;

pub use error::{Error, Result};
