use std::collections::BTreeSet;

use serde::Serialize;

use super::HHSInstance;
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// Rel_K(F) = {U : diam π_U(F) ≥ K}, in domain order.
pub fn rel_domains(inst: &HHSInstance, f: &[usize], k: f64) -> Result<Vec<usize>> {
    if !(k > 0.0) {
        return Err(Error::Argument(format!("K = {k} must be positive")));
    }
    inst.check_points(f)?;
    Ok((0..inst.n_domains()).filter(|&u| inst.diam(u, f) as f64 >= k).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Distinguished {
    /// U ∈ 𝒰 and π_U(x′) differs from every π_U(F).
    New { domain: usize, witness: usize },
    /// U ∈ 𝒰′ − 𝒰 and π_U(F) is not a point.
    Spread { domain: usize, x: usize, y: usize },
}

impl Distinguished {
    pub fn domain(&self) -> usize {
        match *self {
            Distinguished::New { domain, .. } | Distinguished::Spread { domain, .. } => domain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Involved {
    pub domain: usize,
    /// Nested domains relevant for F′ only.
    pub added: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sporadic {
    pub domain: usize,
    /// Relevant U with V ⊑ U whose ρ^V_U avoids every new interval neighbourhood.
    pub parent: usize,
    pub diam_f: u64,
    /// V ∈ Rel_{K−2E}(F).
    pub moreover_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainDiff {
    pub relevant: Vec<usize>,
    pub relevant_prime: Vec<usize>,
    pub distinguished: Vec<Distinguished>,
    pub involved: Vec<Involved>,
    pub sporadic: Vec<Sporadic>,
    /// Sporadic domains outside Rel_{K−2E}(F).
    pub consistency_failures: usize,
}

/// Vertices on some geodesic from `a` to `b`.
fn interval(g: &MetricGraph, a: usize, b: usize) -> Vec<usize> {
    let d = g.d(a, b);
    (0..g.n()).filter(|&v| g.d(a, v) + g.d(v, b) == d).collect()
}

/// Distinguished, involved and D-sporadic domains for F ⊆ F′.
pub fn domain_diff(inst: &HHSInstance, f: &[usize], f2: &[usize], k: f64, d: f64) -> Result<DomainDiff> {
    inst.check_points(f2)?;
    let fs: BTreeSet<usize> = f.iter().copied().collect();
    if let Some(x) = fs.iter().find(|x| !f2.contains(x)) {
        return Err(Error::Argument(format!("F ⊄ F′: {x} missing")));
    }
    let new: Vec<usize> = f2.iter().copied().filter(|x| !fs.contains(x)).collect::<BTreeSet<_>>().into_iter().collect();
    let rel = rel_domains(inst, f, k)?;
    let rel2 = rel_domains(inst, f2, k)?;
    let in_rel: BTreeSet<usize> = rel.iter().copied().collect();

    let mut distinguished = Vec::new();
    for &u in &rel2 {
        let pf = inst.projections(u, f);
        if in_rel.contains(&u) {
            if let Some(&w) = new.iter().find(|&&x| pf.binary_search(&inst.pi[u][x]).is_err()) {
                distinguished.push(Distinguished::New { domain: u, witness: w });
            }
        } else if pf.len() > 1 {
            let x = *f.iter().find(|&&x| inst.pi[u][x] == pf[0]).expect("projection of F");
            let y = *f.iter().find(|&&y| inst.pi[u][y] == pf[1]).expect("projection of F");
            distinguished.push(Distinguished::Spread { domain: u, x, y });
        }
    }

    let mut involved = Vec::new();
    for &u in &rel {
        let added: Vec<usize> = rel2.iter().copied().filter(|&v| inst.nested(v, u) && !in_rel.contains(&v)).collect();
        if !added.is_empty() {
            involved.push(Involved { domain: u, added });
        }
    }

    let kmin = k - 2.0 * inst.constants.e;
    let mut sporadic = Vec::new();
    for &v in rel2.iter().filter(|v| !in_rel.contains(v)) {
        for &u in &rel {
            if !inst.nested(v, u) {
                continue;
            }
            let Some(r) = inst.rho(v, u) else { continue };
            let g = inst.graph(u);
            let covered = new.iter().any(|&xp| {
                f.iter().all(|&x| {
                    let iv = interval(g, inst.pi[u][x], inst.pi[u][xp]);
                    g.dist_to_set(&iv, r) as f64 <= d
                })
            });
            if !covered {
                let diam_f = inst.diam(v, f);
                sporadic.push(Sporadic {
                    domain: v,
                    parent: u,
                    diam_f,
                    moreover_ok: diam_f as f64 >= kmin,
                });
                break;
            }
        }
    }
    let consistency_failures = sporadic.iter().filter(|s| !s.moreover_ok).count();
    Ok(DomainDiff {
        relevant: rel,
        relevant_prime: rel2,
        distinguished,
        involved,
        sporadic,
        consistency_failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassingUp {
    pub w: usize,
    /// Members of 𝒱 nested in W.
    pub family: Vec<usize>,
    pub diameter: u64,
    /// Number of family members whose projection meets each subinterval.
    pub hits: Vec<usize>,
    pub occupied: usize,
}

/// First W (by domain order) in Rel_{K2}(a,b) with diam_W ∪ρ^V_W > K2 and at least n occupied σ-subintervals.
#[allow(clippy::too_many_arguments)]
pub fn passing_up_probe(
    inst: &HHSInstance,
    a: usize,
    b: usize,
    family: &[usize],
    k1: f64,
    k2: f64,
    sigma: u64,
    n: usize,
) -> Result<Option<PassingUp>> {
    inst.check_points(&[a, b])?;
    if (sigma as f64) < 10.0 * inst.constants.e {
        return Err(Error::Argument(format!("σ = {sigma} below 10·E")));
    }
    if k2 < k1 {
        return Err(Error::Argument("K2 < K1".into()));
    }
    if let Some(&v) = family.iter().find(|&&v| (inst.diam(v, &[a, b]) as f64) < k1) {
        return Err(Error::Argument(format!("domain {v} not in Rel_K1(a,b)")));
    }
    for w in 0..inst.n_domains() {
        if (inst.diam(w, &[a, b]) as f64) < k2 {
            continue;
        }
        let sub: Vec<usize> = family.iter().copied().filter(|&v| inst.nested(v, w)).collect();
        let rhos: Vec<usize> = sub.iter().filter_map(|&v| inst.rho(v, w)).collect();
        let g = inst.graph(w);
        let diameter = rhos.iter().flat_map(|&p| rhos.iter().map(move |&q| g.d(p, q))).max().unwrap_or(0);
        if sub.is_empty() || diameter as f64 <= k2 {
            continue;
        }
        let gamma = g.geodesic(inst.pi[w][a], inst.pi[w][b]);
        // positions along γ are path indices; unit weights are enforced by the model layer
        let len = gamma.len() - 1;
        let pieces = len.div_ceil(sigma as usize).max(1);
        let mut hits = vec![0usize; pieces];
        for &r in &rhos {
            let dmin = gamma.iter().map(|&p| g.d(p, r)).min().unwrap_or(0);
            let mut touched = BTreeSet::new();
            for (t, &p) in gamma.iter().enumerate() {
                if g.d(p, r) == dmin {
                    let i = t / sigma as usize;
                    touched.insert(i.min(pieces - 1));
                    // a breakpoint belongs to both adjacent subintervals
                    if t % sigma as usize == 0 && i > 0 {
                        touched.insert(i - 1);
                    }
                }
            }
            for i in touched {
                hits[i] += 1;
            }
        }
        let occupied = hits.iter().filter(|&&h| h > 0).count();
        if occupied >= n {
            return Ok(Some(PassingUp {
                w,
                family: sub,
                diameter,
                hits,
                occupied,
            }));
        }
    }
    Ok(None)
}

/// {x : d_U(π_U x, hull_U(π_U F)) ≤ θ for every U}, using all-geodesic hulls.
pub fn hhs_hull(inst: &HHSInstance, f: &[usize], theta: f64) -> Result<Vec<usize>> {
    if f.is_empty() {
        return Err(Error::Argument("hull of empty set".into()));
    }
    inst.check_points(f)?;
    let mut ok = vec![true; inst.ambient.n()];
    for u in 0..inst.n_domains() {
        let g = inst.graph(u);
        let h = g.hull(&inst.projections(u, f))?;
        let near: Vec<bool> = (0..g.n()).map(|v| g.dist_to_set(&h, v) as f64 <= theta).collect();
        for (x, o) in ok.iter_mut().enumerate() {
            *o = *o && near[inst.pi[u][x]];
        }
    }
    Ok((0..ok.len()).filter(|&x| ok[x]).collect())
}

const FAMILY_GUARD: usize = 24;

/// Largest subfamily of Rel_K(x,y) without a pairwise-transverse triple (exhaustive search).
pub fn transverse_free_bound(inst: &HHSInstance, x: usize, y: usize, k: f64) -> Result<usize> {
    let rel = rel_domains(inst, &[x, y], k)?;
    crate::error::capacity("relevant family", rel.len(), FAMILY_GUARD)?;
    fn grow(inst: &HHSInstance, rel: &[usize], i: usize, chosen: &mut Vec<usize>, best: &mut usize) {
        if chosen.len() + (rel.len() - i) <= *best {
            return;
        }
        if i == rel.len() {
            *best = chosen.len();
            return;
        }
        let c = rel[i];
        let triangle = chosen.iter().enumerate().any(|(j, &a)| {
            inst.trans(a, c) && chosen[j + 1..].iter().any(|&b| inst.trans(b, c) && inst.trans(a, b))
        });
        if !triangle {
            chosen.push(c);
            grow(inst, rel, i + 1, chosen, best);
            chosen.pop();
        }
        grow(inst, rel, i + 1, chosen, best);
    }
    let mut best = 0;
    grow(inst, &rel, 0, &mut Vec::new(), &mut best);
    Ok(best)
}
