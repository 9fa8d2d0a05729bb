use serde::Serialize;

use super::decomp::{Interval, StableDecomposition};
use super::tree::PieceTree;
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// Tree obtained by collapsing each complementary component of a stable decomposition to a vertex.
#[derive(Clone, Debug, Serialize)]
pub struct CollapsedTree {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
    /// Vertices `0..collapsed` are collapsed components; the rest are interior points of stable components.
    pub collapsed: usize,
}

impl CollapsedTree {
    fn build(t: &PieceTree, ivs: &[&Interval], comp: &[usize], k: usize) -> (Self, Vec<usize>) {
        let mut delta = vec![usize::MAX; t.n_nodes()];
        let mut n = k;
        for v in 0..t.n_nodes() {
            if comp[v] != usize::MAX {
                delta[v] = comp[v];
            } else {
                delta[v] = n;
                n += 1;
            }
        }
        let edges = ivs
            .iter()
            .flat_map(|iv| iv.edges.iter())
            .map(|&e| {
                let (u, v, w) = t.edges[e];
                (delta[u], delta[v], w)
            })
            .collect();
        (CollapsedTree { n, edges, collapsed: k }, delta)
    }

    pub fn distances(&self, src: usize) -> Vec<u64> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, w) in &self.edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let mut d = vec![u64::MAX; self.n];
        d[src] = 0;
        let mut stack = vec![src];
        while let Some(u) = stack.pop() {
            for &(v, w) in &adj[u] {
                if d[v] == u64::MAX {
                    d[v] = d[u] + w;
                    stack.push(v);
                }
            }
        }
        d
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n && self.distances(0).iter().all(|&x| x != u64::MAX)
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for v in 0..self.n {
            let shape = if v < self.collapsed { "box" } else { "point" };
            s.push_str(&format!("  v{v} [shape={shape}];\n"));
        }
        for &(u, v, w) in &self.edges {
            s.push_str(&format!("  v{u} -- v{v} [label=\"{w}\", color=blue];\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CollapsedEmbedding {
    pub left: CollapsedTree,
    pub right: CollapsedTree,
    pub delta_left: Vec<usize>,
    pub delta_right: Vec<usize>,
    pub phi: Vec<usize>,
    pub simplicial: bool,
    /// Distinct collapsed vertices sit at positive integer distance.
    pub collapsed_positive: bool,
    pub isometric: bool,
    pub restricts_to_pairs: bool,
    pub marked_ok: bool,
    pub refs_ok: bool,
}

impl CollapsedEmbedding {
    pub fn pass(&self) -> bool {
        self.simplicial && self.collapsed_positive && self.isometric && self.restricts_to_pairs && self.marked_ok && self.refs_ok
    }
}

/// Collapses both sides of a valid decomposition and checks Φ exhaustively.
pub fn collapse_and_embed(g: &MetricGraph, d: &StableDecomposition) -> Result<CollapsedEmbedding> {
    let rep = d.check(g);
    if let Some(c) = rep.first_failure() {
        return Err(Error::Argument(format!("decomposition fails clause {} ({}): {}", c.clause, c.name, c.detail)));
    }
    let ((lc, nl), (rc, nr)) = d.complements();
    let lefts: Vec<&Interval> = d.pairs.iter().map(|p| &p.left).collect();
    let rights: Vec<&Interval> = d.pairs.iter().map(|p| &p.right).collect();
    let (left, delta_left) = CollapsedTree::build(&d.left, &lefts, &lc, nl);
    let (right, delta_right) = CollapsedTree::build(&d.right, &rights, &rc, nr);
    let mut phi = vec![usize::MAX; left.n];
    for &(a, b) in &d.beta {
        phi[lc[a]] = rc[b];
    }
    for p in &d.pairs {
        for (&a, &b) in p.left.nodes.iter().zip(&p.right.nodes) {
            if lc[a] == usize::MAX {
                phi[delta_left[a]] = delta_right[b];
            }
        }
    }
    let simplicial = left.is_tree() && right.is_tree() && phi.iter().all(|&x| x != usize::MAX);
    let mut isometric = simplicial;
    let mut collapsed_positive = true;
    if simplicial {
        let right_d: Vec<Vec<u64>> = (0..right.n).map(|v| right.distances(v)).collect();
        for a in 0..left.n {
            let da = left.distances(a);
            for b in 0..left.n {
                if da[b] != right_d[phi[a]][phi[b]] {
                    isometric = false;
                }
                if a != b && a < left.collapsed && b < left.collapsed && da[b] == 0 {
                    collapsed_positive = false;
                }
            }
        }
    }
    let restricts_to_pairs = d
        .pairs
        .iter()
        .all(|p| p.left.nodes.iter().zip(&p.right.nodes).all(|(&a, &b)| phi[delta_left[a]] == delta_right[b]));
    let marked_ok = d.f.iter().all(|&f| match (d.left.node_of_mark(f), d.right.node_of_mark(f)) {
        (Some(a), Some(b)) => phi[delta_left[a]] == delta_right[b],
        _ => false,
    });
    let refs_ok = d.refs.iter().all(|r| match r.right {
        Some(b) => phi[delta_left[r.left]] == delta_right[b],
        None => false,
    });
    Ok(CollapsedEmbedding {
        left,
        right,
        delta_left,
        delta_right,
        phi,
        simplicial,
        collapsed_positive,
        isometric,
        restricts_to_pairs,
        marked_ok,
        refs_ok,
    })
}
