use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::cluster::{cluster_graph, ClusterGraph, EpsilonSetup, TreeParams};
use super::steiner::{minimal_network, SteinerNetwork};
use super::tree::{Piece, PieceKind, PieceTree};
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// Measured constants of a stable tree.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct TreeReport {
    /// max over node pairs of d_T − d_𝒵(φ, φ).
    pub additive_distortion: u64,
    /// max over node pairs of d_T / d_𝒵 for pairs with distinct images.
    pub multiplicative_distortion: f64,
    /// Hausdorff distance between λ(F) and φ(T).
    pub hausdorff: u64,
    pub branch_points: usize,
    /// Σ (degree − 2) over branch points.
    pub total_branching: usize,
    /// max over clusters of the distance from μ(C) to C.
    pub d1: u64,
    pub leaves_ok: bool,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StableTree {
    pub graph: ClusterGraph,
    /// Vertex sets V⁰ of the closures, in construction order.
    pub closures: Vec<Vec<usize>>,
    pub networks: Vec<SteinerNetwork>,
    /// r(C) per cluster.
    pub roots: Vec<Vec<usize>>,
    pub tree: PieceTree,
    /// Piece index of μ(C) per cluster.
    pub cluster_piece: Vec<usize>,
    pub report: TreeReport,
}

impl StableTree {
    /// Piece μ(C_y) for a point of F ∪ 𝒴.
    pub fn piece_of_point(&self, y: usize) -> Option<usize> {
        self.graph.cluster_of(y).map(|c| self.cluster_piece[c])
    }

    /// Some node of μ(C_y).
    pub fn node_of_point(&self, y: usize) -> Option<usize> {
        self.piece_of_point(y).map(|p| self.tree.pieces[p].nodes[0])
    }

    /// Edge-piece edges of T.
    pub fn edge_forest_edges(&self) -> Vec<usize> {
        (0..self.tree.n_edges()).filter(|&e| self.tree.is_edge_piece_edge(e)).collect()
    }
}

/// Closures of the components of 𝒢 − ℰ⁰, plus each edge joining two bivalent clusters.
pub fn closures(graph: &ClusterGraph) -> Vec<Vec<usize>> {
    let m = graph.len();
    let mut comp = vec![usize::MAX; m];
    let mut out = Vec::new();
    for s in 0..m {
        if graph.bivalent[s] || comp[s] != usize::MAX {
            continue;
        }
        let k = out.len();
        comp[s] = k;
        let mut members = vec![s];
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &graph.adj[u] {
                if !graph.bivalent[v] && comp[v] == usize::MAX {
                    comp[v] = k;
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        let mut closure: BTreeSet<usize> = members.iter().copied().collect();
        for &u in &members {
            for &v in &graph.adj[u] {
                closure.insert(v);
            }
        }
        out.push(closure.into_iter().collect());
    }
    for a in 0..m {
        if !graph.bivalent[a] {
            continue;
        }
        for &b in &graph.adj[a] {
            if a < b && graph.bivalent[b] {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let n = self.0[c];
            self.0[c] = r;
            c = n;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

struct RawPiece {
    kind: PieceKind,
    vertices: Vec<usize>,
    edges: Vec<(usize, usize, u64)>,
    points: Vec<usize>,
}

pub fn stable_tree(g: &MetricGraph, setup: &EpsilonSetup, params: &TreeParams) -> Result<StableTree> {
    let graph = cluster_graph(g, setup, params)?;
    let closures = closures(&graph);
    let m = graph.len();
    let fset: BTreeSet<usize> = setup.f.iter().copied().collect();

    let mut networks = Vec::with_capacity(closures.len());
    let mut raw: Vec<RawPiece> = Vec::new();
    let mut roots: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    // (raw piece, host vertex, cluster) attachment records
    let mut attach: Vec<(usize, usize, usize)> = Vec::new();
    for (vi, v0) in closures.iter().enumerate() {
        let groups: Vec<Vec<usize>> = v0.iter().map(|&c| graph.clusters[c].clone()).collect();
        let net = minimal_network(g, &groups)?;
        for (vertices, edges) in net.components() {
            if edges.is_empty() {
                continue;
            }
            let p = raw.len();
            for &c in v0 {
                let hits: Vec<usize> = vertices
                    .iter()
                    .copied()
                    .filter(|v| graph.clusters[c].binary_search(v).is_ok())
                    .collect();
                if hits.len() > 1 {
                    return Err(Error::Invariant(format!(
                        "edge piece of closure {vi} meets cluster {c} at {} points",
                        hits.len()
                    )));
                }
                if let Some(&h) = hits.first() {
                    roots[c].insert(h);
                    attach.push((p, h, c));
                }
            }
            raw.push(RawPiece {
                kind: PieceKind::Edge { group: vi },
                vertices,
                edges,
                points: Vec::new(),
            });
        }
        networks.push(net);
    }
    let n_edge_pieces = raw.len();
    for (c, cluster) in graph.clusters.iter().enumerate() {
        for &x in cluster {
            if fset.contains(&x) {
                roots[c].insert(x);
            }
        }
        if roots[c].is_empty() {
            // single cluster with no F point cannot occur; keep the least point as a fallback root
            roots[c].insert(cluster[0]);
        }
        let groups: Vec<Vec<usize>> = roots[c].iter().map(|&x| vec![x]).collect();
        let mu = minimal_network(g, &groups)?;
        let vertices: Vec<usize> = if mu.vertices.is_empty() { roots[c].iter().copied().collect() } else { mu.vertices.clone() };
        raw.push(RawPiece {
            kind: PieceKind::Cluster { cluster: c },
            vertices,
            edges: mu.edges.clone(),
            points: cluster.clone(),
        });
    }

    // nodes: one per (piece, vertex) before gluing
    let mut offset = Vec::with_capacity(raw.len());
    let mut total = 0;
    for p in &raw {
        offset.push(total);
        total += p.vertices.len();
    }
    let local = |p: usize, h: usize| -> usize { offset[p] + raw[p].vertices.binary_search(&h).expect("vertex in piece") };
    let mut dsu = Dsu((0..total).collect());
    for &(p, h, c) in &attach {
        dsu.union(local(p, h), local(n_edge_pieces + c, h));
    }
    let mut id_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut node_of = vec![0; total];
    let mut phi = Vec::new();
    for (p, piece) in raw.iter().enumerate() {
        for (i, &h) in piece.vertices.iter().enumerate() {
            let r = dsu.find(offset[p] + i);
            let id = *id_of_root.entry(r).or_insert_with(|| {
                phi.push(h);
                phi.len() - 1
            });
            node_of[offset[p] + i] = id;
        }
    }
    let mut edges = Vec::new();
    let mut edge_piece = Vec::new();
    let mut pieces = Vec::new();
    for (p, piece) in raw.iter().enumerate() {
        let nodes: Vec<usize> = (0..piece.vertices.len()).map(|i| node_of[offset[p] + i]).collect();
        let mut pedges = Vec::new();
        for &(u, v, w) in &piece.edges {
            pedges.push(edges.len());
            edges.push((node_of[local(p, u)], node_of[local(p, v)], w));
            edge_piece.push(p);
        }
        pieces.push(Piece {
            kind: piece.kind,
            nodes,
            edges: pedges,
            points: piece.points.clone(),
        });
    }
    let cluster_piece: Vec<usize> = (0..m).map(|c| n_edge_pieces + c).collect();
    let mut marked = Vec::new();
    for &f in &setup.f {
        let c = graph.cluster_of(f).expect("F point clustered");
        let p = cluster_piece[c];
        let v = node_of[local(p, f)];
        marked.push((f, v));
    }
    let tree = PieceTree::new(phi, edges, edge_piece, pieces, marked)?;
    let roots: Vec<Vec<usize>> = roots.into_iter().map(|s| s.into_iter().collect()).collect();
    let report = tree_report(g, setup, &graph, &tree, &cluster_piece);
    Ok(StableTree {
        graph,
        closures,
        networks,
        roots,
        tree,
        cluster_piece,
        report,
    })
}

fn tree_report(g: &MetricGraph, setup: &EpsilonSetup, graph: &ClusterGraph, tree: &PieceTree, cluster_piece: &[usize]) -> TreeReport {
    let n = tree.n_nodes();
    let mut add = 0u64;
    let mut mult = 1.0f64;
    for a in 0..n {
        let d = tree.distances(a);
        for b in a + 1..n {
            let dz = g.d(tree.phi[a], tree.phi[b]);
            add = add.max(d[b] - dz.min(d[b]));
            if dz > 0 {
                mult = mult.max(d[b] as f64 / dz as f64);
            }
        }
    }
    let image: BTreeSet<usize> = tree.phi.iter().copied().collect();
    let image: Vec<usize> = image.into_iter().collect();
    let lam = if setup.lambda.vertices.is_empty() { setup.f.clone() } else { setup.lambda.vertices.clone() };
    let h1 = lam.iter().map(|&v| g.dist_to_set(&image, v)).max().unwrap_or(0);
    let h2 = image.iter().map(|&v| g.dist_to_set(&lam, v)).max().unwrap_or(0);
    let mut branch_points = 0;
    let mut total_branching = 0;
    for v in 0..n {
        if tree.degree(v) >= 3 {
            branch_points += 1;
            total_branching += tree.degree(v) - 2;
        }
    }
    let mut d1 = 0;
    for (c, &p) in cluster_piece.iter().enumerate() {
        for &v in &tree.pieces[p].nodes {
            d1 = d1.max(g.dist_to_set(&graph.clusters[c], tree.phi[v]));
        }
    }
    let pts: BTreeSet<usize> = setup.points().into_iter().collect();
    let leaves_ok = n <= 1 || tree.leaves().iter().all(|&v| pts.contains(&tree.phi[v]));
    TreeReport {
        additive_distortion: add,
        multiplicative_distortion: mult,
        hausdorff: h1.max(h2),
        branch_points,
        total_branching,
        d1,
        leaves_ok,
        nodes: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TreeParams {
        TreeParams {
            eps: 0.25,
            eps2: 0.5,
            big_e: 4.0,
        }
    }

    #[test]
    fn two_points_no_cluster_points_is_the_geodesic() {
        let g = MetricGraph::path(12);
        let s = EpsilonSetup::unlabeled(&g, vec![0, 11], vec![], 0.25).unwrap();
        let t = stable_tree(&g, &s, &params()).unwrap();
        assert_eq!(t.graph.len(), 2);
        assert_eq!(t.tree.n_nodes(), 12);
        assert_eq!(t.report.additive_distortion, 0);
        assert_eq!(t.tree.pieces.iter().filter(|p| !p.is_edge()).count(), 2);
        assert!(t.report.leaves_ok);
    }

    #[test]
    fn midpoint_cluster_splits_the_edge_forest() {
        // hand trace: clusters {0}, {10}, {20}; the middle is bivalent, so two closures
        let g = MetricGraph::path(21);
        let s = EpsilonSetup::unlabeled(&g, vec![0, 20], vec![10], 0.25).unwrap();
        let t = stable_tree(&g, &s, &params()).unwrap();
        assert_eq!(t.graph.bivalent, vec![false, true, false]);
        assert_eq!(t.closures, vec![vec![0, 1], vec![1, 2]]);
        let edge_pieces: Vec<_> = t.tree.pieces.iter().filter(|p| p.is_edge()).collect();
        assert_eq!(edge_pieces.len(), 2);
        assert!(edge_pieces.iter().all(|p| p.edges.len() == 10));
        assert_eq!(t.roots[1], vec![10]);
        assert_eq!(t.tree.n_nodes(), 21);
    }

    #[test]
    fn tripod_is_recovered() {
        // center 0 with three legs of length 6
        let mut parent = vec![0];
        for leg in 0..3 {
            for i in 0..6 {
                parent.push(if i == 0 { 0 } else { 1 + leg * 6 + i - 1 });
            }
        }
        let g = MetricGraph::from_parents(&parent).unwrap();
        let s = EpsilonSetup::unlabeled(&g, vec![6, 12, 18], vec![], 0.25).unwrap();
        let t = stable_tree(&g, &s, &params()).unwrap();
        assert_eq!(t.report.additive_distortion, 0);
        assert_eq!(t.report.hausdorff, 0);
        assert_eq!(t.report.branch_points, 1);
        assert_eq!(t.tree.n_nodes(), 19);
    }
}
