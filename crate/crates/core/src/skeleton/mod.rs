//! Tree skeleton over SOM key points and per-rib path extraction.

mod hull;
mod mst;
mod pairing;
mod paths;

pub use hull::convex_hull_vertices;
pub use mst::{build_mst, Edge, SkeletonGraph};
pub use pairing::{pair_endpoints, EndpointPairs, RibEndpoints, Side, TemplateEndpoints};
pub use paths::{continuity_filter, continuity_filter_indices, extract_rib_paths, tree_path, turn_angle_deg, RibPath, RibPathSet};
