use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::cluster::{ClusterGraph, EpsilonSetup, TreeParams};
use super::decomp::{build_decomposition, complement_signatures, identical_pieces, StableDecomposition};
use super::stable::{stable_tree, StableTree};
use super::tree::PieceKind;
use crate::error::Result;
use crate::space::MetricGraph;

/// Why a cluster of 𝒢 is affected by the new point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Affected {
    Absorbed,
    NextToAbsorbed,
    LostAdjacency,
}

/// Diagnostics of the unstable core for one added cluster point.
#[derive(Clone, Debug, Serialize)]
pub struct CoreReport {
    pub absorbed: Vec<usize>,
    pub affected: Vec<(usize, Affected)>,
    /// Least r with N_r(𝒜) connected in 𝒢.
    pub a1: usize,
    pub raw_core: Vec<usize>,
    /// Component of 𝒢 minus the outside bivalent clusters containing the raw core.
    pub insulated: Vec<usize>,
    /// Bivalent clusters bounding it.
    pub buffer: Vec<usize>,
    pub buffer_identical: bool,
    pub core_left: Vec<usize>,
    pub core_right: Vec<usize>,
    /// Complements of the cores agree component by component.
    pub gamma_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OnePoint {
    pub before: StableTree,
    pub after: StableTree,
    pub decomposition: StableDecomposition,
    pub core: CoreReport,
}

fn connected_within(graph: &ClusterGraph, members: &[bool]) -> bool {
    let Some(s) = members.iter().position(|&m| m) else { return true };
    let mut seen = vec![false; graph.len()];
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(u) = stack.pop() {
        for &v in &graph.adj[u] {
            if members[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    members.iter().zip(&seen).all(|(&m, &s)| !m || s)
}

fn core_report(g: &MetricGraph, w: usize, params: &TreeParams, before: &StableTree, after: &StableTree) -> CoreReport {
    let (gr, gr2) = (&before.graph, &after.graph);
    let m = gr.len();
    let absorbed: Vec<usize> = (0..m)
        .filter(|&c| (g.dist_to_set(&gr.clusters[c], w) as f64) < params.big_e)
        .collect();
    let is_abs: Vec<bool> = (0..m).map(|c| absorbed.binary_search(&c).is_ok()).collect();
    // non-absorbed clusters persist with the same points
    let index2: BTreeMap<&[usize], usize> = gr2.clusters.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let image: Vec<Option<usize>> = gr.clusters.iter().map(|c| index2.get(c.as_slice()).copied()).collect();
    let mut kinds: BTreeMap<usize, Affected> = BTreeMap::new();
    for &a in &absorbed {
        kinds.insert(a, Affected::Absorbed);
    }
    for c in 0..m {
        if !is_abs[c] && gr.adj[c].iter().any(|&d| is_abs[d]) {
            kinds.entry(c).or_insert(Affected::NextToAbsorbed);
        }
    }
    for a in 0..m {
        for &b in &gr.adj[a] {
            if is_abs[b] {
                continue;
            }
            let lost = match (image[a], image[b]) {
                (Some(x), Some(y)) => !gr2.adjacent(x, y),
                _ => false,
            };
            if lost {
                kinds.entry(a).or_insert(Affected::LostAdjacency);
            }
        }
    }
    let affected: Vec<(usize, Affected)> = kinds.into_iter().collect();
    let seeds: Vec<usize> = affected.iter().map(|a| a.0).collect();
    let hops = if seeds.is_empty() { vec![usize::MAX; m] } else { gr.hops(&seeds) };
    let mut a1 = 0;
    while a1 < m && !connected_within(gr, &hops.iter().map(|&h| h <= a1).collect::<Vec<_>>()) {
        a1 += 1;
    }
    let in_raw: Vec<bool> = hops.iter().map(|&h| h != usize::MAX && h <= a1 + 2).collect();
    let raw_core: Vec<usize> = (0..m).filter(|&c| in_raw[c]).collect();
    // bivalent clusters outside the raw core cut it off
    let blocked: Vec<bool> = (0..m).map(|c| gr.bivalent[c] && !in_raw[c]).collect();
    let mut inside = vec![false; m];
    if let Some(&s) = raw_core.first() {
        inside[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &v in &gr.adj[u] {
                if !blocked[v] && !inside[v] {
                    inside[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    let insulated: Vec<usize> = (0..m).filter(|&c| inside[c]).collect();
    let buffer: BTreeSet<usize> = insulated
        .iter()
        .flat_map(|&c| gr.adj[c].iter().copied())
        .filter(|&d| !inside[d])
        .collect();
    let buffer: Vec<usize> = buffer.into_iter().collect();
    let buffer_identical = buffer.iter().all(|&c| matches!(image[c], Some(x) if gr2.bivalent[x]));

    let t = &before.tree;
    let mut core_l = vec![false; t.pieces.len()];
    for (p, piece) in t.pieces.iter().enumerate() {
        core_l[p] = match piece.kind {
            PieceKind::Cluster { cluster } => inside[cluster],
            PieceKind::Edge { group } => before.closures[group].iter().any(|&c| inside[c]),
        };
    }
    let t2 = &after.tree;
    let (_, mr) = identical_pieces(t, t2);
    let core_r: Vec<bool> = mr.iter().map(|m| !matches!(m, Some(p) if !core_l[*p])).collect();
    let gamma_ok = complement_signatures(t, &core_l) == complement_signatures(t2, &core_r);
    CoreReport {
        absorbed,
        affected,
        a1,
        raw_core,
        insulated,
        buffer,
        buffer_identical,
        core_left: (0..core_l.len()).filter(|&p| core_l[p]).collect(),
        core_right: (0..core_r.len()).filter(|&p| core_r[p]).collect(),
        gamma_ok,
    }
}

/// Decomposition between T(F; 𝒴) and T(F; 𝒴 ∪ {w}) with 𝒴₀ = 𝒴.
pub fn one_point_decomposition(g: &MetricGraph, setup: &EpsilonSetup, w: usize, params: &TreeParams) -> Result<OnePoint> {
    let setup2 = setup.with_points(g, &[w])?;
    let before = stable_tree(g, setup, params)?;
    let after = stable_tree(g, &setup2, params)?;
    let decomposition = build_decomposition(g, &before, &after, &setup.f, &setup.ys)?;
    let core = core_report(g, w, params, &before, &after);
    Ok(OnePoint {
        before,
        after,
        decomposition,
        core,
    })
}
