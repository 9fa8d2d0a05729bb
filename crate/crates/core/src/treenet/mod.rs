//! Minimal networks, clusters, stable trees and stable decompositions.

mod cluster;
mod collapse;
mod decomp;
mod fake;
mod onepoint;
mod stable;
mod steiner;
mod tree;

#[cfg(test)]
mod tests;

pub use cluster::{cluster_graph, clusters_of, separates, ClusterDiagnostics, ClusterGraph, EpsilonSetup, SetupDoc, TreeParams};
pub use collapse::{collapse_and_embed, CollapsedEmbedding, CollapsedTree};
pub use decomp::{
    assemble_decomposition, build_decomposition, chain_compose, gluing_audit, ChainResult, CheckReport, ClauseResult, GluingAudit, Interval,
    Reference, StableDecomposition, StablePair,
};
pub use fake::{fake_cluster_points, is_sporadic, net, FakePoints, Layer, NetParams, Stabler, stabler_decomposition};
pub use onepoint::{one_point_decomposition, Affected, CoreReport, OnePoint};
pub use stable::{closures, stable_tree, StableTree, TreeReport};
pub use steiner::{minimal_network, shadow, SteinerNetwork, TERMINAL_GUARD};
pub use tree::{Piece, PieceKey, PieceKind, PieceTree};
