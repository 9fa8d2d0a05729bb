use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::steiner::prune_to_hull;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PieceKind {
    /// Component of λ′(V⁰) for the closure `group`.
    Edge { group: usize },
    /// μ(C) for cluster `cluster`.
    Cluster { cluster: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub kind: PieceKind,
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
    /// Cluster points for cluster pieces; empty for edge pieces.
    pub points: Vec<usize>,
}

impl Piece {
    pub fn is_edge(&self) -> bool {
        matches!(self.kind, PieceKind::Edge { .. })
    }
}

/// Realization-level identity of a piece: two pieces with equal keys are identical subtrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PieceKey {
    pub edge: bool,
    pub points: Vec<usize>,
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize, u64)>,
    pub marks: Vec<usize>,
}

/// Abstract tree assembled from pieces, with a realization φ into the host.
#[derive(Clone, Debug, Serialize)]
pub struct PieceTree {
    pub phi: Vec<usize>,
    pub edges: Vec<(usize, usize, u64)>,
    pub edge_piece: Vec<usize>,
    pub pieces: Vec<Piece>,
    /// (host vertex of a point of F, node).
    pub marked: Vec<(usize, usize)>,
    #[serde(skip)]
    adj: Vec<Vec<(usize, usize)>>,
    #[serde(skip)]
    node_pieces: Vec<Vec<usize>>,
}

impl PartialEq for PieceTree {
    fn eq(&self, o: &Self) -> bool {
        self.phi == o.phi
            && self.edges == o.edges
            && self.edge_piece == o.edge_piece
            && self.marked == o.marked
            && self.pieces.len() == o.pieces.len()
            && self
                .pieces
                .iter()
                .zip(&o.pieces)
                .all(|(a, b)| a.kind == b.kind && a.nodes == b.nodes && a.edges == b.edges && a.points == b.points)
    }
}

impl PieceTree {
    pub fn new(
        phi: Vec<usize>,
        edges: Vec<(usize, usize, u64)>,
        edge_piece: Vec<usize>,
        pieces: Vec<Piece>,
        marked: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = phi.len();
        if edge_piece.len() != edges.len() {
            return Err(Error::Invariant("one piece per tree edge".into()));
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v, _)) in edges.iter().enumerate() {
            if u >= n || v >= n || u == v {
                return Err(Error::Invariant(format!("tree edge {i} malformed")));
            }
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let mut node_pieces = vec![Vec::new(); n];
        for (p, piece) in pieces.iter().enumerate() {
            for &v in &piece.nodes {
                if v >= n {
                    return Err(Error::Invariant(format!("piece {p} names node {v} outside tree")));
                }
                node_pieces[v].push(p);
            }
        }
        let t = PieceTree {
            phi,
            edges,
            edge_piece,
            pieces,
            marked,
            adj,
            node_pieces,
        };
        if n > 0 && (t.edges.len() + 1 != n || !t.connected()) {
            return Err(Error::Invariant(format!(
                "assembled pieces do not form a tree ({n} nodes, {} edges)",
                t.edges.len()
            )));
        }
        Ok(t)
    }

    fn connected(&self) -> bool {
        let n = self.phi.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    pub fn n_nodes(&self) -> usize {
        self.phi.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// (neighbor, edge id) pairs.
    pub fn adj(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn node_pieces(&self, v: usize) -> &[usize] {
        &self.node_pieces[v]
    }

    pub fn mark_at(&self, v: usize) -> Option<usize> {
        self.marked.iter().find(|m| m.1 == v).map(|m| m.0)
    }

    pub fn node_of_mark(&self, f: usize) -> Option<usize> {
        self.marked.iter().find(|m| m.0 == f).map(|m| m.1)
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adj[a].iter().find(|x| x.0 == b).map(|x| x.1)
    }

    pub fn is_edge_piece_edge(&self, e: usize) -> bool {
        self.pieces[self.edge_piece[e]].is_edge()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&v| self.degree(v) <= 1).collect()
    }

    pub fn distances(&self, src: usize) -> Vec<u64> {
        let mut d = vec![u64::MAX; self.n_nodes()];
        d[src] = 0;
        let mut stack = vec![src];
        while let Some(u) = stack.pop() {
            for &(v, e) in &self.adj[u] {
                if d[v] == u64::MAX {
                    d[v] = d[u] + self.edges[e].2;
                    stack.push(v);
                }
            }
        }
        d
    }

    /// Node path from `a` to `b`.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let n = self.n_nodes();
        let mut prev = vec![usize::MAX; n];
        prev[a] = a;
        let mut queue = VecDeque::from([a]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                break;
            }
            for &(v, _) in &self.adj[u] {
                if prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut out = vec![b];
        let mut cur = b;
        while cur != a {
            cur = prev[cur];
            out.push(cur);
        }
        out.reverse();
        out
    }

    /// Flags of the subtree spanned by `nodes`.
    pub fn hull(&self, nodes: &[usize]) -> Vec<bool> {
        let n = self.n_nodes();
        let adj: Vec<Vec<usize>> = self.adj.iter().map(|a| a.iter().map(|x| x.0).collect()).collect();
        let mut target = vec![false; n];
        for &v in nodes {
            target[v] = true;
        }
        prune_to_hull(&adj, &vec![true; n], &target)
    }

    /// Subtree on the kept nodes, pieces intersected; returns the old id of each new node.
    pub fn restrict(&self, keep: &[bool]) -> Result<(PieceTree, Vec<usize>)> {
        let old: Vec<usize> = (0..self.n_nodes()).filter(|&v| keep[v]).collect();
        let mut new_id = vec![usize::MAX; self.n_nodes()];
        for (i, &v) in old.iter().enumerate() {
            new_id[v] = i;
        }
        let mut edges = Vec::new();
        let mut edge_piece_old = Vec::new();
        let mut new_edge = vec![usize::MAX; self.n_edges()];
        for (e, &(u, v, w)) in self.edges.iter().enumerate() {
            if keep[u] && keep[v] {
                new_edge[e] = edges.len();
                edges.push((new_id[u], new_id[v], w));
                edge_piece_old.push(self.edge_piece[e]);
            }
        }
        let mut piece_map = vec![usize::MAX; self.pieces.len()];
        let mut pieces = Vec::new();
        for (p, piece) in self.pieces.iter().enumerate() {
            let nodes: Vec<usize> = piece.nodes.iter().filter(|&&v| keep[v]).map(|&v| new_id[v]).collect();
            let pedges: Vec<usize> = piece
                .edges
                .iter()
                .filter(|&&e| new_edge[e] != usize::MAX)
                .map(|&e| new_edge[e])
                .collect();
            if nodes.is_empty() || (piece.is_edge() && pedges.is_empty()) {
                continue;
            }
            piece_map[p] = pieces.len();
            pieces.push(Piece {
                kind: piece.kind,
                nodes,
                edges: pedges,
                points: piece.points.clone(),
            });
        }
        let edge_piece = edge_piece_old.iter().map(|&p| piece_map[p]).collect();
        let marked = self
            .marked
            .iter()
            .filter(|m| keep[m.1])
            .map(|&(f, v)| (f, new_id[v]))
            .collect();
        let phi = old.iter().map(|&v| self.phi[v]).collect();
        let t = PieceTree::new(phi, edges, edge_piece, pieces, marked)?;
        Ok((t, old))
    }

    pub fn piece_key(&self, p: usize) -> PieceKey {
        let piece = &self.pieces[p];
        let mut vertices: Vec<usize> = piece.nodes.iter().map(|&v| self.phi[v]).collect();
        vertices.sort_unstable();
        let mut edges: Vec<(usize, usize, u64)> = piece
            .edges
            .iter()
            .map(|&e| {
                let (u, v, w) = self.edges[e];
                let (a, b) = (self.phi[u], self.phi[v]);
                (a.min(b), a.max(b), w)
            })
            .collect();
        edges.sort_unstable();
        let mut marks: Vec<usize> = piece.nodes.iter().filter_map(|&v| self.mark_at(v)).collect();
        marks.sort_unstable();
        PieceKey {
            edge: piece.is_edge(),
            points: piece.points.clone(),
            vertices,
            edges,
            marks,
        }
    }

    /// Node of piece `p` realized at host vertex `h`.
    pub fn piece_node_at(&self, p: usize, h: usize) -> Option<usize> {
        self.pieces[p].nodes.iter().copied().find(|&v| self.phi[v] == h)
    }

    /// Components of the graph on all nodes using only edges accepted by `keep_edge`,
    /// with nodes rejected by `keep_node` left out (labelled `usize::MAX`).
    pub fn components_by(&self, keep_node: &dyn Fn(usize) -> bool, keep_edge: &dyn Fn(usize) -> bool) -> (Vec<usize>, usize) {
        let n = self.n_nodes();
        let mut comp = vec![usize::MAX; n];
        let mut k = 0;
        for s in 0..n {
            if comp[s] != usize::MAX || !keep_node(s) {
                continue;
            }
            comp[s] = k;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, e) in &self.adj[u] {
                    if comp[v] == usize::MAX && keep_node(v) && keep_edge(e) {
                        comp[v] = k;
                        stack.push(v);
                    }
                }
            }
            k += 1;
        }
        (comp, k)
    }

    /// Weighted diameter of the sub-forest spanned by the given edges (per component maximum).
    pub fn edge_set_diameter(&self, edges: &[usize]) -> u64 {
        if edges.is_empty() {
            return 0;
        }
        let mut local: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
        for &e in edges {
            let (u, v, w) = self.edges[e];
            local.entry(u).or_default().push((v, w));
            local.entry(v).or_default().push((u, w));
        }
        let far = |s: usize| -> (usize, u64) {
            let mut d: HashMap<usize, u64> = HashMap::from([(s, 0)]);
            let mut stack = vec![s];
            let mut best = (s, 0);
            while let Some(u) = stack.pop() {
                let du = d[&u];
                if du > best.1 || (du == best.1 && u < best.0) {
                    best = (u, du);
                }
                for &(v, w) in &local[&u] {
                    if !d.contains_key(&v) {
                        d.insert(v, du + w);
                        stack.push(v);
                    }
                }
            }
            best
        };
        let mut starts: Vec<usize> = local.keys().copied().collect();
        starts.sort_unstable();
        let mut done: std::collections::HashSet<usize> = std::collections::HashSet::new();
        let mut out = 0;
        for s in starts {
            if done.contains(&s) {
                continue;
            }
            // mark component
            let mut stack = vec![s];
            done.insert(s);
            while let Some(u) = stack.pop() {
                for &(v, _) in &local[&u] {
                    if done.insert(v) {
                        stack.push(v);
                    }
                }
            }
            let (a, _) = far(s);
            out = out.max(far(a).1);
        }
        out
    }

    pub fn to_dot(&self, name: &str, stable: &[bool]) -> String {
        let mut s = format!("graph {name} {{\n");
        for (v, &h) in self.phi.iter().enumerate() {
            let mark = self.mark_at(v).map(|f| format!(" f{f}")).unwrap_or_default();
            s.push_str(&format!("  n{v} [label=\"{h}{mark}\"];\n"));
        }
        for (e, &(u, v, w)) in self.edges.iter().enumerate() {
            let color = if stable.get(e).copied().unwrap_or(false) {
                "blue"
            } else if self.is_edge_piece_edge(e) {
                "black"
            } else {
                "red"
            };
            s.push_str(&format!("  n{u} -- n{v} [label=\"{w}\", color={color}];\n"));
        }
        s.push_str("}\n");
        s
    }
}
