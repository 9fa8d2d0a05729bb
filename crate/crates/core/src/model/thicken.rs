use std::collections::VecDeque;

use serde::Serialize;

use super::SimplicialTree;
use crate::error::{Error, Result};

/// Fixed point of the neighbourhood/merge iteration; 𝕋_c is the flagged vertex set.
#[derive(Clone, Debug, Serialize)]
pub struct Thickening {
    pub core: Vec<bool>,
    /// Component of each core vertex; `usize::MAX` off the core.
    pub comp: Vec<usize>,
    pub n_comps: usize,
    /// Merge rounds until stationary.
    pub rounds: usize,
    /// Smallest distance between two components (None with fewer than two).
    pub min_gap: Option<usize>,
    /// Every seed sits at depth ≥ r1 inside its component.
    pub depth_ok: bool,
}

impl Thickening {
    /// Edges of 𝕋_c: both endpoints in the core (hence in one component).
    pub fn edge_in_core(&self, t: &SimplicialTree, e: usize) -> bool {
        let (a, b) = t.edges[e];
        self.core[a] && self.core[b]
    }
}

fn components(t: &SimplicialTree, core: &[bool]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; t.n];
    let mut k = 0;
    for s in 0..t.n {
        if !core[s] || comp[s] != usize::MAX {
            continue;
        }
        comp[s] = k;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(w, _) in t.adj(u) {
                if core[w] && comp[w] == usize::MAX {
                    comp[w] = k;
                    stack.push(w);
                }
            }
        }
        k += 1;
    }
    (comp, k)
}

fn multi_bfs(t: &SimplicialTree, src: &[bool]) -> Vec<usize> {
    let mut d = vec![usize::MAX; t.n];
    let mut q = VecDeque::new();
    for v in 0..t.n {
        if src[v] {
            d[v] = 0;
            q.push_back(v);
        }
    }
    while let Some(u) = q.pop_front() {
        for &(w, _) in t.adj(u) {
            if d[w] == usize::MAX {
                d[w] = d[u] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// r1-neighbourhood of the seeds, then join components at distance ≤ r2 by geodesics until stable.
pub fn thicken(t: &SimplicialTree, seeds: &[usize], r1: usize, r2: usize) -> Result<Thickening> {
    if r1 == 0 || r2 == 0 {
        return Err(Error::Configuration(format!("thickening radii r1 = {r1}, r2 = {r2} must be positive")));
    }
    let mut src = vec![false; t.n];
    for &s in seeds {
        if s >= t.n {
            return Err(Error::Argument(format!("seed {s} outside tree")));
        }
        src[s] = true;
    }
    let d = multi_bfs(t, &src);
    let mut core: Vec<bool> = d.iter().map(|&x| x <= r1).collect();
    let mut rounds = 0;
    loop {
        let (comp, k) = components(t, &core);
        let mut added = false;
        // from each component, search outward through non-core vertices up to depth r2
        for c in 0..k {
            let mut dist = vec![usize::MAX; t.n];
            let mut prev = vec![usize::MAX; t.n];
            let mut q = VecDeque::new();
            for v in 0..t.n {
                if comp[v] == c {
                    dist[v] = 0;
                    q.push_back(v);
                }
            }
            let mut hit = None;
            while let Some(u) = q.pop_front() {
                if dist[u] >= r2 {
                    continue;
                }
                for &(w, _) in t.adj(u) {
                    if dist[w] != usize::MAX {
                        continue;
                    }
                    dist[w] = dist[u] + 1;
                    prev[w] = u;
                    if core[w] && comp[w] != c {
                        hit = Some(w);
                        break;
                    }
                    if !core[w] {
                        q.push_back(w);
                    }
                }
                if hit.is_some() {
                    break;
                }
            }
            if let Some(mut w) = hit {
                while dist[w] > 0 {
                    core[w] = true;
                    w = prev[w];
                }
                added = true;
                break;
            }
        }
        if !added {
            let in_core = core.clone();
            let outside: Vec<bool> = in_core.iter().map(|&x| !x).collect();
            let depth = multi_bfs(t, &outside);
            let depth_ok = seeds.iter().all(|&s| depth[s] == usize::MAX || depth[s] > r1);
            let min_gap = min_gap(t, &comp, k);
            return Ok(Thickening {
                core,
                comp,
                n_comps: k,
                rounds,
                min_gap,
                depth_ok,
            });
        }
        rounds += 1;
    }
}

fn min_gap(t: &SimplicialTree, comp: &[usize], k: usize) -> Option<usize> {
    if k < 2 {
        return None;
    }
    let mut best = usize::MAX;
    for c in 0..k {
        let src: Vec<bool> = comp.iter().map(|&x| x == c).collect();
        let d = multi_bfs(t, &src);
        for v in 0..t.n {
            if comp[v] != usize::MAX && comp[v] != c {
                best = best.min(d[v]);
            }
        }
    }
    Some(best)
}

/// T̂ with each core component collapsed to a vertex, and the quotient map q.
#[derive(Clone, Debug, Serialize)]
pub struct Collapsed {
    pub tree: SimplicialTree,
    pub q: Vec<usize>,
    /// Image of each original edge, None for collapsed edges.
    pub edge_map: Vec<Option<usize>>,
    /// Core component carried by each collapsed vertex.
    pub carrier: Vec<Option<usize>>,
}

pub fn collapse_tree(t: &SimplicialTree, th: &Thickening) -> Collapsed {
    let contract: Vec<bool> = (0..t.n_edges()).map(|e| th.edge_in_core(t, e)).collect();
    let (tree, q) = t.contract(&contract);
    let mut edge_map = Vec::with_capacity(t.n_edges());
    let mut k = 0;
    for &c in &contract {
        if c {
            edge_map.push(None);
        } else {
            edge_map.push(Some(k));
            k += 1;
        }
    }
    let mut carrier = vec![None; tree.n];
    for v in 0..t.n {
        if th.core[v] {
            carrier[q[v]] = Some(th.comp[v]);
        }
    }
    Collapsed {
        tree,
        q,
        edge_map,
        carrier,
    }
}
