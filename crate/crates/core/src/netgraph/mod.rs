//! Weighted head-collaboration graphs: global efficiency, modularity,
//! greedy community detection and a force-directed layout.

mod community;
mod efficiency;
mod export;
mod graph;
mod layout;
mod modularity;

pub use community::detect_communities;
pub use efficiency::{global_efficiency, shortest_path_lengths};
pub use export::{layout_json, layout_svg};
pub use graph::{build_graph, GraphKind, HeadGraph};
pub use layout::{force_layout, LayoutParams, LayoutState};
pub use modularity::{modularity, Partition};
