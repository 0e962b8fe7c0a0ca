//! Percolation and conductance samples, giant clusters and walk graphs.

mod cluster;
mod config;
mod geometry;
mod graph;
mod snapshot;

pub use cluster::{extract_giant_cluster, extract_with_order, Cluster, UnionFind};
pub use config::{
    gen_bond_config, gen_conductance_config, gen_conductance_config_with, BondConfig, BoxGeometry,
    ConductanceLaw, EdgeLaw, EdgeStates, Site,
};
pub use geometry::{
    density_estimate, geometry_report, hole_size, max_window_radius, window_mass, DensityEstimate,
    GeometryReport,
};
pub use graph::{build_weighted_graph, closest_point, graph_distances, AntKind, WeightedGraph};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader, SnapshotLaw, SNAPSHOT_MAGIC};
