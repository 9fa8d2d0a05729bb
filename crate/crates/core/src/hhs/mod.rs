//! Explicit finite hierarchically hyperbolic instances.
//!
//! An instance lists its domains, the pairwise relation table, a graph C(U)
//! per domain, projections π_U as vertex tables, and ρ-data: a vertex
//! ρ^V_U ∈ C(U) when V ⊑ U or V ⋔ U, and a total table C(V) → C(U) when U ⊑ V.

mod diff;
mod doc;
mod gen;
mod validate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use diff::{
    domain_diff, hhs_hull, passing_up_probe, rel_domains, transverse_free_bound, Distinguished, DomainDiff, Involved,
    PassingUp, Sporadic,
};
pub use doc::{InstanceDoc, INSTANCE_FORMAT};
pub use gen::{g1, g2, g3};
pub use validate::{validate_instance, Check, ValidationReport, Violation};

use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// Largest explicit product ambient.
pub const AMBIENT_GUARD: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Equal,
    /// Row domain nested in column domain.
    #[serde(rename = "<")]
    Nested,
    /// Column domain nested in row domain.
    #[serde(rename = ">")]
    Contains,
    #[serde(rename = "perp")]
    Orth,
    #[serde(rename = "trans")]
    Trans,
}

impl Relation {
    pub fn converse(self) -> Relation {
        match self {
            Relation::Nested => Relation::Contains,
            Relation::Contains => Relation::Nested,
            r => r,
        }
    }
}

/// Ambient point set: a graph, or the ℓ1 product of graphs with mixed-radix point ids (factor 0 fastest).
#[derive(Clone, Debug)]
pub enum Ambient {
    Graph(MetricGraph),
    Product(Vec<MetricGraph>),
}

impl Ambient {
    pub fn product(factors: Vec<MetricGraph>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Argument("product needs at least one factor".into()));
        }
        let n = factors
            .iter()
            .try_fold(1usize, |acc, g| acc.checked_mul(g.n()))
            .ok_or(Error::Capacity {
                what: "ambient points",
                size: usize::MAX,
                limit: AMBIENT_GUARD,
            })?;
        crate::error::capacity("ambient points", n, AMBIENT_GUARD)?;
        Ok(Ambient::Product(factors))
    }

    pub fn n(&self) -> usize {
        match self {
            Ambient::Graph(g) => g.n(),
            Ambient::Product(f) => f.iter().map(|g| g.n()).product(),
        }
    }

    pub fn coords(&self, x: usize) -> Vec<usize> {
        match self {
            Ambient::Graph(_) => vec![x],
            Ambient::Product(f) => {
                let mut r = x;
                f.iter()
                    .map(|g| {
                        let c = r % g.n();
                        r /= g.n();
                        c
                    })
                    .collect()
            }
        }
    }

    pub fn point(&self, coords: &[usize]) -> usize {
        match self {
            Ambient::Graph(_) => coords[0],
            Ambient::Product(f) => {
                let mut x = 0;
                for (g, &c) in f.iter().zip(coords).rev() {
                    x = x * g.n() + c;
                }
                x
            }
        }
    }

    pub fn d(&self, a: usize, b: usize) -> u64 {
        match self {
            Ambient::Graph(g) => g.d(a, b),
            Ambient::Product(f) => {
                let (mut ra, mut rb, mut s) = (a, b, 0);
                for g in f {
                    s += g.d(ra % g.n(), rb % g.n());
                    ra /= g.n();
                    rb /= g.n();
                }
                s
            }
        }
    }

    /// Neighbours with edge weights; in a product, edges move one factor.
    pub fn neighbors(&self, x: usize) -> Vec<(usize, u64)> {
        match self {
            Ambient::Graph(g) => g.neighbors(x).to_vec(),
            Ambient::Product(f) => {
                let c = self.coords(x);
                let mut out = Vec::new();
                let mut stride = 1;
                for (i, g) in f.iter().enumerate() {
                    for &(y, w) in g.neighbors(c[i]) {
                        out.push(((x as i64 + (y as i64 - c[i] as i64) * stride as i64) as usize, w));
                    }
                    stride *= g.n();
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub name: String,
    pub graph: MetricGraph,
}

/// A finite symmetry: a permutation of domains and, optionally, of ambient points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Symmetry {
    pub domains: Vec<usize>,
    #[serde(default)]
    pub points: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// E_𝔖.
    pub e: f64,
    pub theta: f64,
    /// Relevance threshold K.
    pub k: f64,
    /// Additive constant in d_U(π_U x, π_U y) ≤ d(x,y) + c.
    pub lipschitz: f64,
}

impl Constants {
    /// θ = 2E, K = 10E + 10, Lipschitz constant E.
    pub fn with_e(e: f64) -> Self {
        Constants {
            e,
            theta: 2.0 * e,
            k: 10.0 * e + 10.0,
            lipschitz: e,
        }
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants::with_e(4.0)
    }
}

#[derive(Clone, Debug)]
pub struct HHSInstance {
    pub ambient: Ambient,
    pub domains: Vec<Domain>,
    pub rel: Vec<Vec<Relation>>,
    /// `pi[u][x]` is π_U(x).
    pub pi: Vec<Vec<usize>>,
    /// `(v, u) ↦ ρ^V_U` for V ⊑ U or V ⋔ U.
    pub rho_point: BTreeMap<(usize, usize), usize>,
    /// `(v, u) ↦ ρ^V_U: C(V) → C(U)` for U ⊑ V.
    pub rho_table: BTreeMap<(usize, usize), Vec<usize>>,
    pub colors: Vec<Vec<usize>>,
    pub symmetries: Vec<Symmetry>,
    pub constants: Constants,
}

impl HHSInstance {
    /// Checks table shapes and ranges; semantic laws are left to [`validate_instance`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ambient: Ambient,
        domains: Vec<Domain>,
        rel: Vec<Vec<Relation>>,
        pi: Vec<Vec<usize>>,
        rho_point: BTreeMap<(usize, usize), usize>,
        rho_table: BTreeMap<(usize, usize), Vec<usize>>,
        colors: Vec<Vec<usize>>,
        symmetries: Vec<Symmetry>,
        constants: Constants,
    ) -> Result<Self> {
        let m = domains.len();
        if m == 0 {
            return Err(Error::Format("no domains".into()));
        }
        if rel.len() != m || rel.iter().any(|r| r.len() != m) {
            return Err(Error::Format(format!("relation matrix must be {m}×{m}")));
        }
        if pi.len() != m {
            return Err(Error::Format(format!("pi: expected {m} tables, got {}", pi.len())));
        }
        let n = ambient.n();
        for (u, t) in pi.iter().enumerate() {
            if t.len() != n {
                return Err(Error::Format(format!("pi[{u}]: expected {n} entries, got {}", t.len())));
            }
            if let Some(x) = t.iter().position(|&v| v >= domains[u].graph.n()) {
                return Err(Error::Format(format!("pi[{u}][{x}] outside C({})", domains[u].name)));
            }
        }
        for (&(v, u), &p) in &rho_point {
            if v >= m || u >= m || v == u {
                return Err(Error::Format(format!("rho_points ({v},{u}): bad domain pair")));
            }
            if p >= domains[u].graph.n() {
                return Err(Error::Format(format!("rho_points ({v},{u}): vertex {p} outside C({})", domains[u].name)));
            }
        }
        for ((v, u), t) in &rho_table {
            let (v, u) = (*v, *u);
            if v >= m || u >= m || v == u {
                return Err(Error::Format(format!("rho_tables ({v},{u}): bad domain pair")));
            }
            if t.len() != domains[v].graph.n() {
                return Err(Error::Format(format!("rho_tables ({v},{u}): expected {} entries", domains[v].graph.n())));
            }
            if t.iter().any(|&p| p >= domains[u].graph.n()) {
                return Err(Error::Format(format!("rho_tables ({v},{u}): value outside C({})", domains[u].name)));
            }
        }
        if let Some(&u) = colors.iter().flatten().find(|&&u| u >= m) {
            return Err(Error::Format(format!("colors: unknown domain {u}")));
        }
        for (i, s) in symmetries.iter().enumerate() {
            if s.domains.len() != m || (!s.points.is_empty() && s.points.len() != n) {
                return Err(Error::Format(format!("symmetries[{i}]: wrong permutation length")));
            }
        }
        if !(constants.e > 0.0 && constants.theta >= 0.0 && constants.k > 0.0 && constants.lipschitz >= 0.0) {
            return Err(Error::Format("constants: E, K must be positive and θ, Lipschitz nonnegative".into()));
        }
        Ok(HHSInstance {
            ambient,
            domains,
            rel,
            pi,
            rho_point,
            rho_table,
            colors,
            symmetries,
            constants,
        })
    }

    pub fn n_domains(&self) -> usize {
        self.domains.len()
    }

    pub fn graph(&self, u: usize) -> &MetricGraph {
        &self.domains[u].graph
    }

    /// V ⊑ U with V ≠ U.
    pub fn nested(&self, v: usize, u: usize) -> bool {
        self.rel[v][u] == Relation::Nested
    }

    pub fn orth(&self, u: usize, v: usize) -> bool {
        self.rel[u][v] == Relation::Orth
    }

    pub fn trans(&self, u: usize, v: usize) -> bool {
        self.rel[u][v] == Relation::Trans
    }

    /// The unique ⊑-maximal domain, when it exists.
    pub fn max_domain(&self) -> Option<usize> {
        let m = self.n_domains();
        let tops: Vec<usize> = (0..m).filter(|&s| (0..m).all(|v| v == s || self.nested(v, s))).collect();
        (tops.len() == 1).then(|| tops[0])
    }

    pub fn project(&self, u: usize, x: usize) -> usize {
        self.pi[u][x]
    }

    /// Distinct values of π_U(F), sorted.
    pub fn projections(&self, u: usize, f: &[usize]) -> Vec<usize> {
        let mut p: Vec<usize> = f.iter().map(|&x| self.pi[u][x]).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn diam(&self, u: usize, f: &[usize]) -> u64 {
        let p = self.projections(u, f);
        let g = self.graph(u);
        p.iter().flat_map(|&a| p.iter().map(move |&b| g.d(a, b))).max().unwrap_or(0)
    }

    pub fn rho(&self, v: usize, u: usize) -> Option<usize> {
        self.rho_point.get(&(v, u)).copied()
    }

    pub fn rho_down(&self, v: usize, u: usize) -> Option<&[usize]> {
        self.rho_table.get(&(v, u)).map(|t| t.as_slice())
    }

    pub fn check_points(&self, f: &[usize]) -> Result<()> {
        match f.iter().find(|&&x| x >= self.ambient.n()) {
            Some(x) => Err(Error::Argument(format!("point {x} outside the ambient space"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests;
