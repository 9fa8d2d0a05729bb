use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::thicken::{collapse_tree, thicken, Collapsed, Thickening};
use super::{ModelParams, SimplicialTree};
use crate::error::{Error, Result};
use crate::hhs::{rel_domains, HHSInstance, Relation};
use crate::space::MetricGraph;
use crate::treenet::{stable_tree, EpsilonSetup, PieceKind, StableTree};

/// Per-domain tree T_U with realization φ, its thickening and collapse.
#[derive(Clone, Debug, Serialize)]
pub struct DomainTree {
    pub domain: usize,
    /// Rel_K(F) membership; the forced maximal domain may be irrelevant.
    pub relevant: bool,
    /// Distinct π_U(F).
    pub points: Vec<usize>,
    /// (nested domain, ρ-point) cluster points.
    pub cluster_points: Vec<(usize, usize)>,
    #[serde(skip)]
    pub stable: Option<StableTree>,
    pub base: SimplicialTree,
    pub phi: Vec<usize>,
    pub thick: Thickening,
    pub hat: Collapsed,
    /// Node of π_U f, per f in F order.
    pub mark_nodes: Vec<usize>,
    #[serde(skip)]
    phi_set: Vec<usize>,
}

impl DomainTree {
    fn trivial(domain: usize, host: usize, n_f: usize, r1: usize, r2: usize) -> Result<Self> {
        let base = SimplicialTree::point();
        let thick = thicken(&base, &[0], r1, r2)?;
        let hat = collapse_tree(&base, &thick);
        Ok(DomainTree {
            domain,
            relevant: false,
            points: vec![host],
            cluster_points: vec![],
            stable: None,
            base,
            phi: vec![host],
            thick,
            hat,
            mark_nodes: vec![0; n_f],
            phi_set: vec![host],
        })
    }

    fn from_stable(
        domain: usize,
        f_hosts: &[usize],
        points: Vec<usize>,
        cluster_points: Vec<(usize, usize)>,
        st: StableTree,
        r1: usize,
        r2: usize,
    ) -> Result<Self> {
        let t = &st.tree;
        if let Some(&(a, b, w)) = t.edges.iter().find(|e| e.2 != 1) {
            return Err(Error::Invariant(format!("domain {domain}: tree edge {a}–{b} has weight {w}, need unit")));
        }
        let base = SimplicialTree::new(t.n_nodes(), t.edges.iter().map(|&(a, b, _)| (a, b)).collect())?;
        let seeds: Vec<usize> = t
            .pieces
            .iter()
            .filter(|p| matches!(p.kind, PieceKind::Cluster { .. }))
            .flat_map(|p| p.nodes.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let thick = thicken(&base, &seeds, r1, r2)?;
        let hat = collapse_tree(&base, &thick);
        let mark_nodes = f_hosts
            .iter()
            .map(|&h| {
                t.node_of_mark(h)
                    .ok_or_else(|| Error::Invariant(format!("domain {domain}: π(f) = {h} unmarked")))
            })
            .collect::<Result<Vec<_>>>()?;
        let phi = t.phi.clone();
        let mut phi_set = phi.clone();
        phi_set.sort_unstable();
        phi_set.dedup();
        Ok(DomainTree {
            domain,
            relevant: true,
            points,
            cluster_points,
            stable: Some(st),
            base,
            phi,
            thick,
            hat,
            mark_nodes,
            phi_set,
        })
    }

    /// Mark node, else the cluster carrier, else the least node realized at `h`.
    /// Trivial domains answer their only node.
    pub fn canonical_node(&self, h: usize) -> Option<usize> {
        // a trivial domain is a single collapsed vertex
        let Some(st) = &self.stable else { return Some(0) };
        st.tree
            .node_of_mark(h)
            .or_else(|| st.node_of_point(h))
            .or_else(|| self.phi.iter().position(|&p| p == h))
    }

    /// Canonical node of the closest point of φ(T_U) to `h`.
    pub fn project_node(&self, g: &MetricGraph, h: usize) -> usize {
        if self.stable.is_none() {
            return 0;
        }
        let p = g.project(&self.phi_set, h).expect("nonempty tree");
        self.canonical_node(p).expect("projection lies on the tree")
    }

    pub fn q(&self, node: usize) -> usize {
        self.hat.q[node]
    }

    pub fn hat_vertex_of_host(&self, g: &MetricGraph, h: usize) -> usize {
        self.q(self.project_node(g, h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HftClause {
    pub clause: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HftReport {
    pub clauses: Vec<HftClause>,
}

impl HftReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&HftClause> {
        self.clauses.iter().find(|c| !c.pass)
    }
}

/// Hierarchical family of trees over the domains 𝒰 (local indices).
#[derive(Clone, Debug, Serialize)]
pub struct HftData {
    /// Instance id of each local domain.
    pub domains: Vec<usize>,
    pub rel: Vec<Vec<Relation>>,
    pub trees: Vec<SimplicialTree>,
    /// marks[u][i] = f̂_U for the i-th point of F.
    pub marks: Vec<Vec<usize>>,
    /// Local nested domains whose δ̂ lands on each vertex.
    pub labels: Vec<Vec<Vec<usize>>>,
    /// δ̂^V_U keyed (v, u), for V ⊑ U or V ⋔ U.
    pub point: BTreeMap<(usize, usize), usize>,
    /// δ̂^V_U keyed (v, u) for U ⊑ V: one vertex set of T̂_U per vertex of T̂_V.
    pub down: BTreeMap<(usize, usize), Vec<Vec<usize>>>,
    /// Transverse δ̂ that fell back to the projection of ρ.
    pub transverse_fallbacks: usize,
    pub report: HftReport,
    #[serde(skip)]
    pub sources: Vec<DomainTree>,
}

impl HftData {
    /// Hand-assembled family; labels are derived and the report is filled.
    pub fn from_parts(
        rel: Vec<Vec<Relation>>,
        trees: Vec<SimplicialTree>,
        marks: Vec<Vec<usize>>,
        point: BTreeMap<(usize, usize), usize>,
        down: BTreeMap<(usize, usize), Vec<Vec<usize>>>,
    ) -> Self {
        let m = trees.len();
        let mut h = HftData {
            domains: (0..m).collect(),
            rel,
            trees,
            marks,
            labels: vec![],
            point,
            down,
            transverse_fallbacks: 0,
            report: HftReport::default(),
            sources: vec![],
        };
        h.fill_labels();
        h.report = h.validate();
        h
    }

    fn fill_labels(&mut self) {
        self.labels = self.trees.iter().map(|t| vec![Vec::new(); t.n]).collect();
        for (&(v, u), &x) in &self.point {
            if self.rel[v][u] == Relation::Nested && x < self.trees[u].n {
                self.labels[u][x].push(v);
            }
        }
    }

    pub fn n_domains(&self) -> usize {
        self.trees.len()
    }

    pub fn n_marks(&self) -> usize {
        self.marks.first().map_or(0, |m| m.len())
    }

    /// Marked tuple of the i-th point of F.
    pub fn marked_tuple(&self, i: usize) -> Vec<usize> {
        self.marks.iter().map(|m| m[i]).collect()
    }

    /// Both clauses of 0-consistency on every constrained pair.
    pub fn consistent(&self, t: &[usize]) -> bool {
        let m = self.n_domains();
        (0..m).all(|u| (u + 1..m).all(|v| self.pair_ok(u, v, t[u], t[v])))
    }

    pub(crate) fn pair_ok(&self, u: usize, v: usize, xu: usize, xv: usize) -> bool {
        match self.rel[u][v] {
            Relation::Trans => xu == self.point[&(v, u)] || xv == self.point[&(u, v)],
            Relation::Nested => xv == self.point[&(u, v)] || self.down[&(v, u)][xv].contains(&xu),
            Relation::Contains => xu == self.point[&(v, u)] || self.down[&(u, v)][xu].contains(&xv),
            Relation::Equal | Relation::Orth => true,
        }
    }

    pub fn validate(&self) -> HftReport {
        let mut clauses = Vec::new();
        let mut push = |clause: u8, name: &'static str, err: Option<String>| {
            clauses.push(HftClause {
                clause,
                name,
                pass: err.is_none(),
                detail: err.unwrap_or_default(),
            })
        };
        let relations = self.check_relations();
        let shapes_ok = relations.is_none() && self.check_shapes().is_none();
        push(1, "relations", relations.or_else(|| self.check_shapes()));
        push(2, "simplicial trees", self.check_trees());
        push(3, "marked points", self.check_marks());
        if shapes_ok {
            push(4, "components marked", self.check_components());
            push(4, "orthogonal substitution", self.check_orthogonal());
            push(5, "bounded image", self.check_bgi());
        } else {
            push(4, "components marked", Some("skipped: relation data malformed".into()));
        }
        HftReport { clauses }
    }

    fn check_relations(&self) -> Option<String> {
        let m = self.n_domains();
        if self.rel.len() != m || self.rel.iter().any(|r| r.len() != m) {
            return Some("relation table has the wrong shape".into());
        }
        for u in 0..m {
            if self.rel[u][u] != Relation::Equal {
                return Some(format!("domain {u} not equal to itself"));
            }
            for v in 0..m {
                if u != v && (self.rel[u][v] == Relation::Equal || self.rel[v][u] != self.rel[u][v].converse()) {
                    return Some(format!("pair ({u},{v}) inconsistent"));
                }
            }
        }
        for a in 0..m {
            for b in 0..m {
                if self.rel[a][b] != Relation::Nested {
                    continue;
                }
                for c in 0..m {
                    if self.rel[b][c] == Relation::Nested && a != c && self.rel[a][c] != Relation::Nested {
                        return Some(format!("nesting not transitive at {a},{b},{c}"));
                    }
                }
            }
        }
        let tops = (0..m).filter(|&s| (0..m).all(|v| v == s || self.rel[v][s] == Relation::Nested)).count();
        if tops != 1 {
            return Some(format!("{tops} ⊑-maximal elements"));
        }
        None
    }

    /// Presence and range of every δ̂ the relations call for.
    fn check_shapes(&self) -> Option<String> {
        let m = self.n_domains();
        for u in 0..m {
            for v in 0..m {
                match self.rel[v][u] {
                    Relation::Nested | Relation::Trans => match self.point.get(&(v, u)) {
                        Some(&x) if x < self.trees[u].n => {}
                        _ => return Some(format!("δ̂^{v}_{u} missing or off the tree")),
                    },
                    Relation::Contains => match self.down.get(&(v, u)) {
                        Some(t) if t.len() == self.trees[v].n && t.iter().flatten().all(|&x| x < self.trees[u].n) => {}
                        _ => return Some(format!("δ̂^{v}_{u} table missing or malformed")),
                    },
                    _ => {}
                }
            }
        }
        None
    }

    fn check_trees(&self) -> Option<String> {
        // SimplicialTree construction already enforces connectivity and edge count
        self.trees
            .iter()
            .position(|t| t.n == 0 || t.n_edges() + 1 != t.n)
            .map(|u| format!("T̂_{u} is not a tree"))
    }

    fn check_marks(&self) -> Option<String> {
        if self.marks.len() != self.n_domains() {
            return Some("one mark list per domain".into());
        }
        let k = self.n_marks();
        for (u, t) in self.trees.iter().enumerate() {
            if self.marks[u].len() != k || self.marks[u].iter().any(|&x| x >= t.n) {
                return Some(format!("marks on T̂_{u} malformed"));
            }
            if let Some(l) = t.leaves().into_iter().find(|l| !self.marks[u].contains(l)) {
                return Some(format!("leaf {l} of T̂_{u} unmarked"));
            }
        }
        None
    }

    fn check_components(&self) -> Option<String> {
        for (&(v, u), &x) in &self.point {
            let t = &self.trees[u];
            let comp = t.components_without(x);
            let k = t.degree(x);
            let mut seen = vec![false; k];
            for &m in &self.marks[u] {
                if comp[m] != usize::MAX {
                    seen[comp[m]] = true;
                }
            }
            if let Some(c) = seen.iter().position(|s| !s) {
                return Some(format!("component {c} of T̂_{u} − δ̂^{v}_{u} has no marked point"));
            }
        }
        None
    }

    fn check_orthogonal(&self) -> Option<String> {
        let m = self.n_domains();
        for u in 0..m {
            for v in 0..m {
                if self.rel[u][v] != Relation::Orth {
                    continue;
                }
                for w in 0..m {
                    let carries = matches!(self.rel[u][w], Relation::Nested | Relation::Trans);
                    if self.rel[v][w] == Relation::Nested && carries && self.point[&(u, w)] != self.point[&(v, w)] {
                        return Some(format!("{u} ⊥ {v} ⊑ {w} but δ̂^{u}_{w} ≠ δ̂^{v}_{w}"));
                    }
                }
            }
        }
        None
    }

    fn check_bgi(&self) -> Option<String> {
        let m = self.n_domains();
        for u in 0..m {
            for v in 0..m {
                if self.rel[v][u] != Relation::Nested {
                    continue;
                }
                let x = self.point[&(v, u)];
                let comp = self.trees[u].components_without(x);
                let table = &self.down[&(u, v)];
                for (i, &fu) in self.marks[u].iter().enumerate() {
                    if fu == x {
                        continue;
                    }
                    let fv = self.marks[v][i];
                    for c in 0..self.trees[u].n {
                        if comp[c] == comp[fu] && table[c] != [fv] {
                            return Some(format!(
                                "δ̂^{u}_{v} at vertex {c} of T̂_{u} is {:?}, mark of f{i} is {fv}",
                                table[c]
                            ));
                        }
                    }
                }
            }
        }
        None
    }
}

/// 𝒰 = Rel_K(F) ∪ {S}, in domain order.
pub fn model_domains(inst: &HHSInstance, f: &[usize], k: f64) -> Result<(Vec<usize>, Vec<bool>)> {
    let rel = rel_domains(inst, f, k)?;
    let s = inst
        .max_domain()
        .ok_or_else(|| Error::Argument("instance has no unique maximal domain".into()))?;
    let mut dom: BTreeSet<usize> = rel.iter().copied().collect();
    dom.insert(s);
    let dom: Vec<usize> = dom.into_iter().collect();
    let relevant = dom.iter().map(|u| rel.contains(u)).collect();
    Ok((dom, relevant))
}

fn domain_tree(inst: &HHSInstance, f: &[usize], u: usize, relevant: bool, dom: &[usize], params: &ModelParams) -> Result<DomainTree> {
    let g = inst.graph(u);
    let f_hosts: Vec<usize> = f.iter().map(|&x| inst.pi[u][x]).collect();
    let points = inst.projections(u, f);
    if !relevant {
        return DomainTree::trivial(u, f_hosts[0], f.len(), params.r1, params.r2);
    }
    let mut cluster_points = Vec::new();
    for &v in dom {
        if inst.nested(v, u) {
            let r = inst
                .rho(v, u)
                .ok_or_else(|| Error::Argument(format!("missing ρ-point for ({v},{u})")))?;
            cluster_points.push((v, r));
        }
    }
    let setup = EpsilonSetup::new(
        g,
        points.clone(),
        cluster_points.iter().map(|c| c.1).collect(),
        cluster_points.iter().map(|c| Some(c.0)).collect(),
        params.tree.eps,
    )
    .map_err(|e| match e {
        Error::Setup(s) => Error::Setup(format!("domain {u}: {s}")),
        other => other,
    })?;
    let st = stable_tree(g, &setup, &params.tree)?;
    DomainTree::from_stable(u, &f_hosts, points, cluster_points, st, params.r1, params.r2)
}

/// Per-domain stable trees, thickened and collapsed, with δ̂ assembled and the family validated.
pub fn build_hft(inst: &HHSInstance, f: &[usize], params: &ModelParams) -> Result<HftData> {
    params.validate()?;
    if f.is_empty() {
        return Err(Error::Argument("F is empty".into()));
    }
    let k = params.k.unwrap_or(inst.constants.k);
    let (dom, relevant) = model_domains(inst, f, k)?;
    let sources = dom
        .iter()
        .zip(&relevant)
        .map(|(&u, &r)| domain_tree(inst, f, u, r, &dom, params))
        .collect::<Result<Vec<_>>>()?;
    let m = dom.len();
    let rel: Vec<Vec<Relation>> = dom.iter().map(|&a| dom.iter().map(|&b| inst.rel[a][b]).collect()).collect();
    let trees: Vec<SimplicialTree> = sources.iter().map(|s| s.hat.tree.clone()).collect();
    let marks: Vec<Vec<usize>> = sources.iter().map(|s| s.mark_nodes.iter().map(|&n| s.q(n)).collect()).collect();
    let e = params.tree.big_e;
    let mut point = BTreeMap::new();
    let mut down = BTreeMap::new();
    let mut fallbacks = 0;
    for ui in 0..m {
        let su = &sources[ui];
        let gu = inst.graph(dom[ui]);
        for vi in 0..m {
            let (u, v) = (dom[ui], dom[vi]);
            match rel[vi][ui] {
                Relation::Nested => {
                    let r = inst.rho(v, u).expect("checked in domain_tree");
                    let node = su
                        .canonical_node(r)
                        .ok_or_else(|| Error::Invariant(format!("ρ^{v}_{u} = {r} not on T_{u}")))?;
                    point.insert((vi, ui), su.q(node));
                }
                Relation::Trans => {
                    let r = inst
                        .rho(v, u)
                        .ok_or_else(|| Error::Argument(format!("missing ρ-point for ({v},{u})")))?;
                    let near = f.iter().position(|&x| (gu.d(r, inst.pi[u][x]) as f64) < e);
                    let x = match near {
                        Some(i) => su.q(su.mark_nodes[i]),
                        None => {
                            fallbacks += 1;
                            su.hat_vertex_of_host(gu, r)
                        }
                    };
                    point.insert((vi, ui), x);
                }
                Relation::Contains => {
                    // U ⊑ V: compose ρ-table with the projection to T_U, over each collapsed fibre
                    let sv = &sources[vi];
                    let table = inst
                        .rho_down(v, u)
                        .ok_or_else(|| Error::Argument(format!("missing ρ-table for ({v},{u})")))?;
                    let mut sets = vec![BTreeSet::new(); sv.hat.tree.n];
                    for n in 0..sv.base.n {
                        sets[sv.q(n)].insert(su.hat_vertex_of_host(gu, table[sv.phi[n]]));
                    }
                    down.insert((vi, ui), sets.into_iter().map(|s| s.into_iter().collect()).collect());
                }
                _ => {}
            }
        }
    }
    let mut h = HftData {
        domains: dom,
        rel,
        trees,
        marks,
        labels: vec![],
        point,
        down,
        transverse_fallbacks: fallbacks,
        report: HftReport::default(),
        sources,
    };
    h.fill_labels();
    h.report = h.validate();
    if let Some(c) = h.report.first_failure() {
        return Err(Error::Invariant(format!("HFT clause {} ({}): {}", c.clause, c.name, c.detail)));
    }
    Ok(h)
}
