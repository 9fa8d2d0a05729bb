//! Exact minimal networks by Dreyfus–Wagner dynamic programming on the group quotient.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::error::{capacity, Error, Result};
use crate::space::MetricGraph;

pub const TERMINAL_GUARD: usize = 10;
const INF: u64 = u64::MAX / 4;

/// Minimum-weight forest whose quotient by the terminal groups is connected.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SteinerNetwork {
    /// Terminal groups, each sorted, listed by least vertex.
    pub groups: Vec<Vec<usize>>,
    /// Host edges `(u, v, w)` with `u < v`, sorted.
    pub edges: Vec<(usize, usize, u64)>,
    /// Edge endpoints plus the vertices of singleton groups, sorted.
    pub vertices: Vec<usize>,
    pub weight: u64,
}

impl SteinerNetwork {
    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn adjacency(&self) -> HashMap<usize, Vec<(usize, u64)>> {
        let mut adj: HashMap<usize, Vec<(usize, u64)>> = self.vertices.iter().map(|&v| (v, Vec::new())).collect();
        for &(u, v, w) in &self.edges {
            adj.entry(u).or_default().push((v, w));
            adj.entry(v).or_default().push((u, w));
        }
        for a in adj.values_mut() {
            a.sort_unstable();
        }
        adj
    }

    /// Connected components as (vertices, edges), listed by least vertex.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<(usize, usize, u64)>)> {
        let adj = self.adjacency();
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<(Vec<usize>, Vec<(usize, usize, u64)>)> = Vec::new();
        for &s in &self.vertices {
            if seen.contains_key(&s) {
                continue;
            }
            let id = out.len();
            let mut verts = vec![s];
            seen.insert(s, id);
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[&u] {
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(v) {
                        e.insert(id);
                        verts.push(v);
                        stack.push(v);
                    }
                }
            }
            verts.sort_unstable();
            out.push((verts, Vec::new()));
        }
        for &e in &self.edges {
            out[seen[&e.0]].1.push(e);
        }
        out
    }

    /// Path-length distances inside the network from `src`.
    pub fn intrinsic_distances(&self, src: usize) -> HashMap<usize, u64> {
        let adj = self.adjacency();
        let mut dist: HashMap<usize, u64> = HashMap::new();
        if !adj.contains_key(&src) {
            return dist;
        }
        dist.insert(src, 0);
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, src)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[&u] {
                continue;
            }
            for &(v, w) in &adj[&u] {
                let nd = d + w;
                if dist.get(&v).map_or(true, |&old| nd < old) {
                    dist.insert(v, nd);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }
}

#[derive(Clone, Copy)]
enum Back {
    Unset,
    Leaf,
    Split(u32),
    Step(u32, u32),
}

/// Minimal network λ′(A_1, …, A_k); singleton groups give λ(F).
pub fn minimal_network(g: &MetricGraph, groups: &[Vec<usize>]) -> Result<SteinerNetwork> {
    if groups.is_empty() || groups.iter().any(|a| a.is_empty()) {
        return Err(Error::Argument("minimal network needs nonempty groups".into()));
    }
    let mut gs: Vec<Vec<usize>> = groups
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.sort_unstable();
            a.dedup();
            a
        })
        .collect();
    gs.sort();
    let n = g.n();
    let mut owner = vec![usize::MAX; n];
    for (i, grp) in gs.iter().enumerate() {
        for &v in grp {
            if v >= n {
                return Err(Error::Argument(format!("terminal {v} outside graph")));
            }
            if owner[v] != usize::MAX {
                return Err(Error::Argument(format!("terminal {v} lies in two groups")));
            }
            owner[v] = i;
        }
    }
    let k = gs.len();
    capacity("steiner terminals", k, TERMINAL_GUARD)?;
    let singles: Vec<usize> = gs.iter().filter(|a| a.len() == 1).map(|a| a[0]).collect();
    if k == 1 {
        let mut vertices = singles;
        vertices.sort_unstable();
        return Ok(SteinerNetwork {
            groups: gs,
            edges: Vec::new(),
            vertices,
            weight: 0,
        });
    }

    let mut qid = vec![0usize; n];
    let mut nq = k;
    for v in 0..n {
        if owner[v] != usize::MAX {
            qid[v] = owner[v];
        } else {
            qid[v] = nq;
            nq += 1;
        }
    }
    // cheapest host edge per quotient pair, least edge on ties
    let mut best: HashMap<(usize, usize), (u64, usize, usize)> = HashMap::new();
    for &(u, v, w) in g.edges() {
        let (a, b) = (qid[u], qid[v]);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        let cand = (w, u, v);
        best.entry(key).and_modify(|e| {
            if cand < *e {
                *e = cand;
            }
        })
        .or_insert(cand);
    }
    let mut keys: Vec<_> = best.keys().copied().collect();
    keys.sort_unstable();
    let mut host_edges = Vec::with_capacity(keys.len());
    let mut qadj: Vec<Vec<(usize, u64, usize)>> = vec![Vec::new(); nq];
    for key in keys {
        let (w, u, v) = best[&key];
        let e = host_edges.len();
        host_edges.push((u.min(v), u.max(v), w));
        qadj[key.0].push((key.1, w, e));
        qadj[key.1].push((key.0, w, e));
    }
    for a in &mut qadj {
        a.sort_unstable();
    }

    let m = k - 1;
    let root = k - 1;
    let full = (1usize << m) - 1;
    let mut dp = vec![INF; (full + 1) * nq];
    let mut back = vec![Back::Unset; (full + 1) * nq];
    for mask in 1..=full {
        let row = mask * nq;
        if mask.count_ones() == 1 {
            let t = mask.trailing_zeros() as usize;
            dp[row + t] = 0;
            back[row + t] = Back::Leaf;
        } else {
            let low = mask & mask.wrapping_neg();
            for v in 0..nq {
                let mut sub = (mask - 1) & mask;
                while sub > 0 {
                    if sub & low != 0 {
                        let a = dp[sub * nq + v];
                        let b = dp[(mask ^ sub) * nq + v];
                        if a < INF && b < INF && a + b < dp[row + v] {
                            dp[row + v] = a + b;
                            back[row + v] = Back::Split(sub as u32);
                        }
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = (0..nq)
            .filter(|&v| dp[row + v] < INF)
            .map(|v| Reverse((dp[row + v], v)))
            .collect();
        while let Some(Reverse((d, v))) = heap.pop() {
            if d > dp[row + v] {
                continue;
            }
            for &(u, w, e) in &qadj[v] {
                if d + w < dp[row + u] {
                    dp[row + u] = d + w;
                    back[row + u] = Back::Step(v as u32, e as u32);
                    heap.push(Reverse((d + w, u)));
                }
            }
        }
    }
    let total = dp[full * nq + root];
    if total >= INF {
        return Err(Error::Invariant("terminal groups not connected in the host".into()));
    }
    let mut used = Vec::new();
    let mut stack = vec![(full, root)];
    while let Some((mask, v)) = stack.pop() {
        match back[mask * nq + v] {
            Back::Leaf => {}
            Back::Split(sub) => {
                stack.push((sub as usize, v));
                stack.push((mask ^ sub as usize, v));
            }
            Back::Step(u, e) => {
                used.push(e as usize);
                stack.push((mask, u as usize));
            }
            Back::Unset => return Err(Error::Invariant("steiner back-pointer missing".into())),
        }
    }
    used.sort_unstable();
    used.dedup();
    let mut edges: Vec<(usize, usize, u64)> = used.iter().map(|&e| host_edges[e]).collect();
    edges.sort_unstable();
    let weight: u64 = edges.iter().map(|e| e.2).sum();
    if weight != total {
        return Err(Error::Invariant(format!("steiner lift weight {weight} differs from optimum {total}")));
    }
    let mut vertices: Vec<usize> = edges.iter().flat_map(|e| [e.0, e.1]).chain(singles).collect();
    vertices.sort_unstable();
    vertices.dedup();
    Ok(SteinerNetwork {
        groups: gs,
        edges,
        vertices,
        weight,
    })
}

/// Leaf-pruned subtree of a forest spanning the targeted nodes.
/// `alive` marks the forest's nodes; returns the surviving flags.
pub(crate) fn prune_to_hull(adj: &[Vec<usize>], alive: &[bool], target: &[bool]) -> Vec<bool> {
    let n = adj.len();
    let mut keep = alive.to_vec();
    if !target.iter().zip(alive).any(|(&t, &a)| t && a) {
        return vec![false; n];
    }
    let mut deg: Vec<usize> = (0..n)
        .map(|v| if keep[v] { adj[v].iter().filter(|&&u| keep[u]).count() } else { 0 })
        .collect();
    let mut queue: Vec<usize> = (0..n).filter(|&v| keep[v] && !target[v] && deg[v] <= 1).collect();
    while let Some(v) = queue.pop() {
        if !keep[v] {
            continue;
        }
        keep[v] = false;
        for &u in &adj[v] {
            if keep[u] {
                deg[u] -= 1;
                if !target[u] && deg[u] <= 1 {
                    queue.push(u);
                }
            }
        }
    }
    keep
}

/// Convex hull inside the tree λ(F) of its vertices within `eps` of `a`.
pub fn shadow(g: &MetricGraph, lambda: &SteinerNetwork, a: &[usize], eps: f64) -> Vec<usize> {
    let verts = &lambda.vertices;
    if verts.is_empty() || a.is_empty() {
        return Vec::new();
    }
    let pos: HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for &(u, v, _) in &lambda.edges {
        adj[pos[&u]].push(pos[&v]);
        adj[pos[&v]].push(pos[&u]);
    }
    let target: Vec<bool> = verts.iter().map(|&v| g.dist_to_set(a, v) as f64 <= eps).collect();
    let keep = prune_to_hull(&adj, &vec![true; verts.len()], &target);
    verts.iter().zip(keep).filter(|(_, k)| *k).map(|(&v, _)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive optimum: best spanning tree of the induced subgraph over terminal-containing vertex subsets.
    fn brute_force(g: &MetricGraph, terminals: &[usize]) -> u64 {
        let n = g.n();
        let mut best = u64::MAX;
        for mask in 0u32..(1 << n) {
            if terminals.iter().any(|&t| mask & (1 << t) == 0) {
                continue;
            }
            let verts: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            // Prim inside the induced subgraph
            let mut inside = vec![false; n];
            inside[verts[0]] = true;
            let mut total = 0;
            let mut ok = true;
            for _ in 1..verts.len() {
                let cand = g
                    .edges()
                    .iter()
                    .filter(|&&(u, v, _)| mask & (1 << u) != 0 && mask & (1 << v) != 0 && inside[u] != inside[v])
                    .min_by_key(|e| e.2);
                match cand {
                    Some(&(u, v, w)) => {
                        inside[u] = true;
                        inside[v] = true;
                        total += w;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                best = best.min(total);
            }
        }
        best
    }

    #[test]
    fn single_group_is_a_point() {
        let g = MetricGraph::path(5);
        let net = minimal_network(&g, &[vec![2]]).unwrap();
        assert!(net.edges.is_empty());
        assert_eq!(net.vertices, vec![2]);
    }

    #[test]
    fn two_terminals_give_the_tie_broken_geodesic() {
        let g = MetricGraph::grid(3, 3);
        let net = minimal_network(&g, &[vec![0], vec![8]]).unwrap();
        assert_eq!(net.weight, 4);
        let geo = g.geodesic(0, 8);
        let mut want: Vec<_> = geo.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]), 1)).collect();
        want.sort_unstable();
        assert_eq!(net.edges, want);
    }

    #[test]
    fn grid_corners_match_exhaustive_optimum() {
        let g = MetricGraph::grid(4, 4);
        for ts in [vec![0, 3, 12], vec![0, 15, 5], vec![3, 12, 15], vec![0, 3, 12, 15]] {
            let groups: Vec<Vec<usize>> = ts.iter().map(|&t| vec![t]).collect();
            let net = minimal_network(&g, &groups).unwrap();
            assert_eq!(net.weight, brute_force(&g, &ts), "terminals {ts:?}");
            assert_eq!(net.edges.len() + 1, net.vertices.len());
        }
    }

    #[test]
    fn groups_are_quotiented() {
        // path 0..9; groups {0,1} and {8,9}: one connecting path 1..8
        let g = MetricGraph::path(10);
        let net = minimal_network(&g, &[vec![0, 1], vec![8, 9]]).unwrap();
        assert_eq!(net.weight, 7);
        assert_eq!(net.components().len(), 1);
    }

    #[test]
    fn overlapping_groups_rejected() {
        let g = MetricGraph::path(4);
        assert!(matches!(minimal_network(&g, &[vec![0, 1], vec![1, 2]]), Err(Error::Argument(_))));
    }

    #[test]
    fn too_many_terminals_is_a_capacity_error() {
        let g = MetricGraph::path(12);
        let groups: Vec<Vec<usize>> = (0..11).map(|i| vec![i]).collect();
        assert!(matches!(minimal_network(&g, &groups), Err(Error::Capacity { .. })));
    }

    #[test]
    fn shadow_examples() {
        // tripod: center 0, legs 1-2-3, 4-5-6, 7-8-9
        let g = MetricGraph::new(10, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 4, 1), (4, 5, 1), (5, 6, 1), (0, 7, 1), (7, 8, 1), (8, 9, 1)]).unwrap();
        let lam = minimal_network(&g, &[vec![3], vec![6], vec![9]]).unwrap();
        assert_eq!(shadow(&g, &lam, &[2], 0.0), vec![2]);
        // a cluster straddling the center spans both incident edges
        assert_eq!(shadow(&g, &lam, &[1, 4], 0.5), vec![0, 1, 4]);
        let lam2 = minimal_network(&g, &[vec![3], vec![6]]).unwrap();
        assert!(shadow(&g, &lam2, &[9], 1.0).is_empty());
    }
}
