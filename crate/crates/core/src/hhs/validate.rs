use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{HHSInstance, Relation};

const MAX_LISTED: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Check {
    Relation,
    Color,
    Symmetry,
    RhoData,
    /// Strict law on ρ-points within a color.
    StrictRho,
    /// Strict law on π within a color.
    StrictPi,
    Bgi,
    Lipschitz,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub check: Check,
    pub detail: String,
    pub witness: Vec<usize>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    /// First violations, capped; `counts` holds the totals.
    pub violations: Vec<Violation>,
    pub counts: BTreeMap<Check, usize>,
    /// Number of configurations each check examined.
    pub examined: BTreeMap<Check, usize>,
    /// Smallest d − θ over triggered strict-law premises; small values mean θ binds.
    pub theta_margin: Option<f64>,
    /// Largest BGI image diameter over geodesics staying E-far from ρ.
    pub bgi_max_image: u64,
    /// Largest d_U(π_U x, π_U y) − d(x,y) over ambient edges.
    pub lipschitz_excess: f64,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.counts.values().all(|&c| c == 0)
    }

    pub fn failed(&self, check: Check) -> bool {
        self.counts.get(&check).copied().unwrap_or(0) > 0
    }

    fn push(&mut self, check: Check, detail: String, witness: Vec<usize>) {
        *self.counts.entry(check).or_default() += 1;
        if self.violations.len() < MAX_LISTED {
            self.violations.push(Violation { check, detail, witness });
        }
    }

    fn saw(&mut self, check: Check, k: usize) {
        *self.examined.entry(check).or_default() += k;
        self.counts.entry(check).or_default();
    }

    fn margin(&mut self, m: f64) {
        self.theta_margin = Some(self.theta_margin.map_or(m, |x: f64| x.min(m)));
    }
}

/// Checks every instance law exhaustively.
pub fn validate_instance(inst: &HHSInstance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    relations(inst, &mut rep);
    colors(inst, &mut rep);
    symmetries(inst, &mut rep);
    rho_data(inst, &mut rep);
    if !rep.failed(Check::RhoData) {
        strict_laws(inst, &mut rep);
        bgi(inst, &mut rep);
    }
    lipschitz(inst, &mut rep);
    rep
}

fn relations(inst: &HHSInstance, rep: &mut ValidationReport) {
    let m = inst.n_domains();
    rep.saw(Check::Relation, m * m);
    for u in 0..m {
        if inst.rel[u][u] != Relation::Equal {
            rep.push(Check::Relation, format!("domain {u} not equal to itself"), vec![u]);
        }
        for v in 0..m {
            if u == v {
                continue;
            }
            if inst.rel[u][v] == Relation::Equal {
                rep.push(Check::Relation, format!("distinct domains {u},{v} declared equal"), vec![u, v]);
            }
            if u < v && inst.rel[v][u] != inst.rel[u][v].converse() {
                rep.push(
                    Check::Relation,
                    format!("pair ({u},{v}) declared {:?} one way and {:?} the other", inst.rel[u][v], inst.rel[v][u]),
                    vec![u, v],
                );
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            if !inst.nested(a, b) {
                continue;
            }
            for c in 0..m {
                if inst.nested(b, c) && !inst.nested(a, c) && a != c {
                    rep.push(Check::Relation, format!("nesting not transitive: {a} ⊑ {b} ⊑ {c}"), vec![a, b, c]);
                }
                // orthogonality passes to nested subdomains
                if inst.orth(b, c) && a != c && !inst.orth(a, c) {
                    rep.push(Check::Relation, format!("{a} ⊑ {b} ⊥ {c} but {a} not ⊥ {c}"), vec![a, b, c]);
                }
            }
        }
    }
    if inst.max_domain().is_none() {
        rep.push(Check::Relation, "no unique ⊑-maximal domain".into(), vec![]);
    }
}

fn colors(inst: &HHSInstance, rep: &mut ValidationReport) {
    let m = inst.n_domains();
    let mut owner = vec![usize::MAX; m];
    for (c, color) in inst.colors.iter().enumerate() {
        for &u in color {
            if owner[u] != usize::MAX {
                rep.push(Check::Color, format!("domain {u} in colors {} and {c}", owner[u]), vec![u]);
            }
            owner[u] = c;
        }
        for (i, &a) in color.iter().enumerate() {
            for &b in &color[i + 1..] {
                if !inst.trans(a, b) {
                    rep.push(Check::Color, format!("color {c} holds non-transverse {a},{b}"), vec![c, a, b]);
                }
            }
        }
    }
    rep.saw(Check::Color, inst.colors.len());
    for (u, &o) in owner.iter().enumerate() {
        if o == usize::MAX {
            rep.push(Check::Color, format!("domain {u} has no color"), vec![u]);
        }
    }
}

fn is_perm(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

fn symmetries(inst: &HHSInstance, rep: &mut ValidationReport) {
    let m = inst.n_domains();
    rep.saw(Check::Symmetry, inst.symmetries.len());
    let color_sets: BTreeSet<BTreeSet<usize>> = inst.colors.iter().map(|c| c.iter().copied().collect()).collect();
    for (i, s) in inst.symmetries.iter().enumerate() {
        if !is_perm(&s.domains) {
            rep.push(Check::Symmetry, format!("symmetry {i}: domain map not a permutation"), vec![i]);
            continue;
        }
        for u in 0..m {
            for v in 0..m {
                if inst.rel[s.domains[u]][s.domains[v]] != inst.rel[u][v] {
                    rep.push(Check::Symmetry, format!("symmetry {i} breaks relation of ({u},{v})"), vec![i, u, v]);
                }
            }
        }
        for c in &inst.colors {
            let img: BTreeSet<usize> = c.iter().map(|&u| s.domains[u]).collect();
            if !color_sets.contains(&img) {
                rep.push(Check::Symmetry, format!("symmetry {i} does not permute colors"), vec![i]);
            }
        }
        if s.points.is_empty() {
            continue;
        }
        if !is_perm(&s.points) {
            rep.push(Check::Symmetry, format!("symmetry {i}: point map not a permutation"), vec![i]);
            continue;
        }
        // graph automorphism ⇔ edge set preserved with weights
        'pts: for x in 0..inst.ambient.n() {
            let mut img: Vec<(usize, u64)> = inst.ambient.neighbors(x).iter().map(|&(y, w)| (s.points[y], w)).collect();
            let mut there = inst.ambient.neighbors(s.points[x]);
            img.sort_unstable();
            there.sort_unstable();
            if img != there {
                rep.push(Check::Symmetry, format!("symmetry {i} moves the edges at point {x}"), vec![i, x]);
                break 'pts;
            }
        }
    }
}

fn rho_data(inst: &HHSInstance, rep: &mut ValidationReport) {
    let m = inst.n_domains();
    for v in 0..m {
        for u in 0..m {
            if u == v {
                continue;
            }
            rep.saw(Check::RhoData, 1);
            match inst.rel[v][u] {
                Relation::Nested | Relation::Trans => {
                    if inst.rho(v, u).is_none() {
                        rep.push(Check::RhoData, format!("missing ρ-point for ({v},{u})"), vec![v, u]);
                    }
                }
                Relation::Contains => {
                    if inst.rho_down(v, u).is_none() {
                        rep.push(Check::RhoData, format!("missing ρ-table for ({v},{u})"), vec![v, u]);
                    }
                }
                _ => {
                    if inst.rho(v, u).is_some() || inst.rho_down(v, u).is_some() {
                        rep.push(Check::RhoData, format!("ρ-data declared for unrelated pair ({v},{u})"), vec![v, u]);
                    }
                }
            }
        }
    }
}

fn strict_laws(inst: &HHSInstance, rep: &mut ValidationReport) {
    let theta = inst.constants.theta;
    let n = inst.ambient.n();
    for color in &inst.colors {
        for &y in color {
            let gy = inst.graph(y);
            for &x in color {
                for &z in color {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let (Some(rxy), Some(rzy), Some(rxz), Some(ryz)) =
                        (inst.rho(x, y), inst.rho(z, y), inst.rho(x, z), inst.rho(y, z))
                    else {
                        continue;
                    };
                    rep.saw(Check::StrictRho, 1);
                    let d = gy.d(rxy, rzy) as f64;
                    if d > theta {
                        rep.margin(d - theta);
                        if rxz != ryz {
                            rep.push(
                                Check::StrictRho,
                                format!("d_{y}(ρ^{x}, ρ^{z}) = {d} > θ but ρ^{x}_{z} ≠ ρ^{y}_{z}"),
                                vec![x, y, z],
                            );
                        }
                    }
                }
            }
            for &z in color {
                if z == y {
                    continue;
                }
                let (Some(rzy), Some(ryz)) = (inst.rho(z, y), inst.rho(y, z)) else { continue };
                rep.saw(Check::StrictPi, n);
                for p in 0..n {
                    let d = gy.d(inst.pi[y][p], rzy) as f64;
                    if d > theta {
                        rep.margin(d - theta);
                        if inst.pi[z][p] != ryz {
                            rep.push(
                                Check::StrictPi,
                                format!("d_{y}(π(x), ρ^{z}) = {d} > θ but π_{z}(x) ≠ ρ^{y}_{z}"),
                                vec![p, y, z],
                            );
                        }
                    }
                }
            }
        }
    }
}

fn bgi(inst: &HHSInstance, rep: &mut ValidationReport) {
    let e = inst.constants.e;
    let m = inst.n_domains();
    for u in 0..m {
        let gu = inst.graph(u);
        for v in 0..m {
            if !inst.nested(v, u) {
                continue;
            }
            let (Some(r), Some(table)) = (inst.rho(v, u), inst.rho_down(u, v)) else { continue };
            let gv = inst.graph(v);
            rep.saw(Check::Bgi, gu.n() * (gu.n() + 1) / 2);
            for a in 0..gu.n() {
                for b in a..gu.n() {
                    let path = gu.geodesic(a, b);
                    if path.iter().any(|&p| gu.d(p, r) as f64 <= e) {
                        continue;
                    }
                    let img: BTreeSet<usize> = path.iter().map(|&p| table[p]).collect();
                    let diam = img.iter().flat_map(|&s| img.iter().map(move |&t| gv.d(s, t))).max().unwrap_or(0);
                    rep.bgi_max_image = rep.bgi_max_image.max(diam);
                    if diam as f64 > e {
                        rep.push(
                            Check::Bgi,
                            format!("geodesic {a}–{b} in C({u}) avoids N_E(ρ^{v}) but its image in C({v}) has diameter {diam}"),
                            vec![u, v, a, b],
                        );
                    }
                }
            }
        }
    }
}

fn lipschitz(inst: &HHSInstance, rep: &mut ValidationReport) {
    let c = inst.constants.lipschitz;
    let n = inst.ambient.n();
    let m = inst.n_domains();
    rep.saw(Check::Lipschitz, n);
    for x in 0..n {
        for (y, w) in inst.ambient.neighbors(x) {
            if y < x {
                continue;
            }
            for u in 0..m {
                let g = inst.graph(u);
                let excess = g.d(inst.pi[u][x], inst.pi[u][y]) as f64 - w as f64;
                rep.lipschitz_excess = rep.lipschitz_excess.max(excess);
                if excess > c {
                    rep.push(Check::Lipschitz, format!("π_{u} stretches edge {x}–{y} by {excess}"), vec![u, x, y]);
                }
            }
        }
    }
}
