use std::collections::HashMap;

use serde::Serialize;

use super::{ConsistentSet, HftData};
use crate::error::{Error, Result};
use crate::hhs::{hhs_hull, HHSInstance};

/// Ψ̂ on the hull and its section Ω̂ on Q, with round-trip measurements.
#[derive(Clone, Debug, Serialize)]
pub struct PsiOmega {
    pub hull: Vec<usize>,
    /// Q vertex of each hull point.
    pub psi: Vec<usize>,
    /// Hull point realizing each Q vertex.
    pub omega: Vec<usize>,
    /// max d_X(Ω̂Ψ̂x, x) over the hull.
    pub roundtrip_x: u64,
    /// max d_Q(Ψ̂Ω̂t, t) over Q.
    pub roundtrip_q: usize,
    /// Q vertices missed by Ψ̂, realized by a full scan.
    pub scanned: usize,
    /// Ψ̂(f) is the marked tuple for every f.
    pub marked_ok: bool,
}

impl PsiOmega {
    pub fn psi_of(&self, x: usize) -> Option<usize> {
        self.hull.binary_search(&x).ok().map(|i| self.psi[i])
    }
}

/// Tuple of Ψ̂(x): collapsed projection in every domain of the family.
pub fn psi_tuple(inst: &HHSInstance, hft: &HftData, x: usize) -> Vec<usize> {
    hft.sources
        .iter()
        .map(|s| s.hat_vertex_of_host(inst.graph(s.domain), inst.pi[s.domain][x]))
        .collect()
}

pub fn psi_omega(inst: &HHSInstance, f: &[usize], hft: &HftData, q: &ConsistentSet, theta: f64) -> Result<PsiOmega> {
    if hft.sources.len() != hft.n_domains() {
        return Err(Error::Argument("HFT carries no domain trees".into()));
    }
    let hull = hhs_hull(inst, f, theta)?;
    let mut psi = Vec::with_capacity(hull.len());
    let mut first: HashMap<usize, usize> = HashMap::new();
    let mut tuples = Vec::with_capacity(hull.len());
    for &x in &hull {
        let t = psi_tuple(inst, hft, x);
        let i = q
            .find(&t)
            .ok_or_else(|| Error::Invariant(format!("Ψ̂({x}) = {t:?} is not 0-consistent")))?;
        psi.push(i);
        first.entry(i).or_insert(x);
        tuples.push(t);
    }
    let dist: Vec<Vec<Vec<usize>>> = hft.trees.iter().map(|t| t.all_distances()).collect();
    let mut scanned = 0;
    let mut omega = Vec::with_capacity(q.len());
    for (i, target) in q.tuples.iter().enumerate() {
        if let Some(&x) = first.get(&i) {
            omega.push(x);
            continue;
        }
        scanned += 1;
        // min over hull of the max per-domain deviation; hull is sorted so ties keep the least id
        let (best, _) = tuples
            .iter()
            .enumerate()
            .map(|(j, t)| (j, (0..t.len()).map(|u| dist[u][t[u]][target[u]]).max().unwrap_or(0)))
            .min_by_key(|&(j, dev)| (dev, j))
            .expect("hull nonempty");
        omega.push(hull[best]);
    }
    let mut roundtrip_x = 0;
    for (j, &x) in hull.iter().enumerate() {
        roundtrip_x = roundtrip_x.max(inst.ambient.d(omega[psi[j]], x));
    }
    let pos: HashMap<usize, usize> = hull.iter().enumerate().map(|(j, &x)| (x, j)).collect();
    let roundtrip_q = (0..q.len()).map(|i| q.l1(psi[pos[&omega[i]]], i)).max().unwrap_or(0);
    let marked_ok = f.iter().enumerate().all(|(i, &x)| {
        pos.get(&x)
            .map_or(false, |&j| q.tuples[psi[j]] == hft.marked_tuple(i))
    });
    Ok(PsiOmega {
        hull,
        psi,
        omega,
        roundtrip_x,
        roundtrip_q,
        scanned,
        marked_ok,
    })
}
