use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::steiner::{minimal_network, shadow, SteinerNetwork};
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// (ε, ε′, E): setup proximity, separation radius, cluster proximity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub eps: f64,
    pub eps2: f64,
    pub big_e: f64,
}

impl TreeParams {
    /// Smallest defaults passing the gate: ε′ = ε + 1, E = 8ε′.
    pub fn new(eps: f64) -> Self {
        let eps2 = eps + 1.0;
        TreeParams {
            eps,
            eps2,
            big_e: 8.0 * eps2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::Configuration(format!("ε = {} must be positive", self.eps)));
        }
        if !(2.0 * self.eps2 > self.eps + self.eps2) {
            return Err(Error::Configuration(format!(
                "gate 2ε′ > ε + ε′ fails for ε = {}, ε′ = {}",
                self.eps, self.eps2
            )));
        }
        if !(self.big_e >= 8.0 * self.eps2) {
            return Err(Error::Configuration(format!(
                "gate E ≥ 8ε′ fails for E = {}, ε′ = {}",
                self.big_e, self.eps2
            )));
        }
        Ok(())
    }
}

/// (F; 𝒴) with every y strictly within ε/2 of λ(F).
#[derive(Clone, Debug, Serialize)]
pub struct EpsilonSetup {
    pub f: Vec<usize>,
    pub ys: Vec<usize>,
    /// Optional domain label per entry of `ys`.
    pub labels: Vec<Option<usize>>,
    pub eps: f64,
    #[serde(skip)]
    pub lambda: SteinerNetwork,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SetupDoc {
    pub f: Vec<usize>,
    pub ys: Vec<usize>,
    #[serde(default)]
    pub labels: Vec<Option<usize>>,
    pub eps: f64,
}

impl EpsilonSetup {
    pub fn new(g: &MetricGraph, f: Vec<usize>, ys: Vec<usize>, labels: Vec<Option<usize>>, eps: f64) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Argument("setup needs a nonempty F".into()));
        }
        if labels.len() != ys.len() {
            return Err(Error::Argument("one label slot per cluster point".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::Argument(format!("ε = {eps} must be positive")));
        }
        let mut seen = BTreeSet::new();
        for &x in &f {
            if x >= g.n() {
                return Err(Error::Argument(format!("F point {x} outside graph")));
            }
            if !seen.insert(x) {
                return Err(Error::Argument(format!("F point {x} repeated")));
            }
        }
        let groups: Vec<Vec<usize>> = f.iter().map(|&x| vec![x]).collect();
        let lambda = minimal_network(g, &groups)?;
        for &y in &ys {
            if y >= g.n() {
                return Err(Error::Argument(format!("cluster point {y} outside graph")));
            }
            let d = g.dist_to_set(&lambda.vertices, y) as f64;
            if !(d < eps / 2.0) {
                return Err(Error::Setup(format!("cluster point {y} at distance {d} from λ(F), needs < {}", eps / 2.0)));
            }
        }
        Ok(EpsilonSetup { f, ys, labels, eps, lambda })
    }

    pub fn unlabeled(g: &MetricGraph, f: Vec<usize>, ys: Vec<usize>, eps: f64) -> Result<Self> {
        let labels = vec![None; ys.len()];
        Self::new(g, f, ys, labels, eps)
    }

    pub fn from_doc(g: &MetricGraph, doc: &SetupDoc) -> Result<Self> {
        let labels = if doc.labels.is_empty() { vec![None; doc.ys.len()] } else { doc.labels.clone() };
        Self::new(g, doc.f.clone(), doc.ys.clone(), labels, doc.eps)
    }

    pub fn to_doc(&self) -> SetupDoc {
        SetupDoc {
            f: self.f.clone(),
            ys: self.ys.clone(),
            labels: self.labels.clone(),
            eps: self.eps,
        }
    }

    /// Distinct vertices of F ∪ 𝒴, sorted.
    pub fn points(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.f.iter().chain(&self.ys).copied().collect();
        s.into_iter().collect()
    }

    /// Same F with unlabeled extra cluster points appended.
    pub fn with_points(&self, g: &MetricGraph, extra: &[usize]) -> Result<Self> {
        let mut ys = self.ys.clone();
        let mut labels = self.labels.clone();
        for &y in extra {
            ys.push(y);
            labels.push(None);
        }
        Self::new(g, self.f.clone(), ys, labels, self.eps)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ClusterDiagnostics {
    pub shadows: Vec<Vec<usize>>,
    /// Pairs of clusters whose shadows meet.
    pub shadow_overlaps: usize,
    /// Overlapping pairs where one side is bivalent.
    pub bivalent_shadow_overlaps: usize,
    pub non_bivalent: usize,
    pub connected: bool,
    /// Pairs whose adjacency flips under the universal quantifier over closest pairs.
    pub quantifier_disagreements: usize,
}

/// E-clusters of F ∪ 𝒴 and the cluster separation graph.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterGraph {
    pub clusters: Vec<Vec<usize>>,
    pub adj: Vec<Vec<usize>>,
    pub bivalent: Vec<bool>,
    pub has_f: Vec<bool>,
    pub diagnostics: ClusterDiagnostics,
    #[serde(skip)]
    cluster_of: HashMap<usize, usize>,
}

impl ClusterGraph {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster_of(&self, v: usize) -> Option<usize> {
        self.cluster_of.get(&v).copied()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Hop distances in the cluster graph from `src`.
    pub fn hops(&self, src: &[usize]) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        for &s in src {
            d[s] = 0;
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        d
    }
}

/// Proximity components of `points` under d ≤ E, sorted by least vertex.
pub fn clusters_of(g: &MetricGraph, points: &[usize], big_e: f64) -> Vec<Vec<usize>> {
    let m = points.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..m {
        for j in i + 1..m {
            if g.d(points[i], points[j]) as f64 <= big_e {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..m {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(points[i]);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

/// Clusters (other than c1, c3) lying within 2ε′ of some tie-broken geodesic between closest pairs.
/// Returns (existential union, universal intersection).
fn separators(
    g: &MetricGraph,
    c1: &[usize],
    c3: &[usize],
    near: &[Vec<u32>],
    skip: (usize, usize),
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let dmin = g.set_distance(c1, c3);
    let mut union = BTreeSet::new();
    let mut inter: Option<BTreeSet<usize>> = None;
    for &a in c1 {
        for &b in c3 {
            if g.d(a, b) != dmin {
                continue;
            }
            let mut hit = BTreeSet::new();
            for v in g.geodesic(a, b) {
                for &c in &near[v] {
                    let c = c as usize;
                    if c != skip.0 && c != skip.1 {
                        hit.insert(c);
                    }
                }
            }
            union.extend(hit.iter().copied());
            inter = Some(match inter {
                None => hit,
                Some(prev) => prev.intersection(&hit).copied().collect(),
            });
        }
    }
    (union, inter.unwrap_or_default())
}

/// Whether C2 ε′-separates C1 from C3.
pub fn separates(g: &MetricGraph, c1: &[usize], c2: &[usize], c3: &[usize], eps2: f64) -> bool {
    let dmin = g.set_distance(c1, c3);
    c1.iter().any(|&a| {
        c3.iter().any(|&b| {
            g.d(a, b) == dmin && g.geodesic(a, b).iter().any(|&v| g.dist_to_set(c2, v) as f64 <= 2.0 * eps2)
        })
    })
}

pub fn cluster_graph(g: &MetricGraph, setup: &EpsilonSetup, params: &TreeParams) -> Result<ClusterGraph> {
    params.validate()?;
    if setup.eps != params.eps {
        return Err(Error::Argument(format!("setup ε = {} differs from parameter ε = {}", setup.eps, params.eps)));
    }
    let points = setup.points();
    let clusters = clusters_of(g, &points, params.big_e);
    let m = clusters.len();
    let mut cluster_of = HashMap::new();
    for (i, c) in clusters.iter().enumerate() {
        for &v in c {
            cluster_of.insert(v, i);
        }
    }
    let fset: BTreeSet<usize> = setup.f.iter().copied().collect();
    let has_f: Vec<bool> = clusters.iter().map(|c| c.iter().any(|v| fset.contains(v))).collect();

    let n = g.n();
    let r = 2.0 * params.eps2;
    let mut near: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, c) in clusters.iter().enumerate() {
        for (v, slot) in near.iter_mut().enumerate() {
            if g.dist_to_set(c, v) as f64 <= r {
                slot.push(i as u32);
            }
        }
    }
    let mut adj = vec![Vec::new(); m];
    let mut disagreements = 0;
    for i in 0..m {
        for j in i + 1..m {
            let (union, inter) = separators(g, &clusters[i], &clusters[j], &near, (i, j));
            if union.is_empty() {
                adj[i].push(j);
                adj[j].push(i);
            }
            if union.is_empty() != inter.is_empty() {
                disagreements += 1;
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    let bivalent: Vec<bool> = (0..m).map(|i| adj[i].len() == 2 && !has_f[i]).collect();

    let shadows: Vec<Vec<usize>> = clusters.iter().map(|c| shadow(g, &setup.lambda, c, setup.eps)).collect();
    let mut overlaps = 0;
    let mut biv_overlaps = 0;
    for i in 0..m {
        for j in i + 1..m {
            let meet = shadows[i].iter().any(|v| shadows[j].binary_search(v).is_ok());
            if meet {
                overlaps += 1;
                if bivalent[i] || bivalent[j] {
                    biv_overlaps += 1;
                }
            }
        }
    }
    let mut cg = ClusterGraph {
        clusters,
        adj,
        bivalent,
        has_f,
        diagnostics: ClusterDiagnostics::default(),
        cluster_of,
    };
    let connected = m == 0 || cg.hops(&[0]).iter().all(|&d| d != usize::MAX);
    cg.diagnostics = ClusterDiagnostics {
        shadows,
        shadow_overlaps: overlaps,
        bivalent_shadow_overlaps: biv_overlaps,
        non_bivalent: cg.bivalent.iter().filter(|&&b| !b).count(),
        connected,
        quantifier_disagreements: disagreements,
    };
    Ok(cg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TreeParams {
        TreeParams {
            eps: 0.25,
            eps2: 0.5,
            big_e: 4.0,
        }
    }

    #[test]
    fn gate_rejects_bad_constants() {
        let bad = TreeParams {
            eps: 1.0,
            eps2: 1.0,
            big_e: 8.0,
        };
        assert!(matches!(bad.validate(), Err(Error::Configuration(_))));
        let bad = TreeParams {
            eps: 1.0,
            eps2: 2.0,
            big_e: 15.0,
        };
        assert!(matches!(bad.validate(), Err(Error::Configuration(_))));
        assert!(TreeParams::new(3.0).validate().is_ok());
    }

    #[test]
    fn setup_proximity_is_enforced() {
        let g = MetricGraph::grid(5, 5);
        assert!(EpsilonSetup::unlabeled(&g, vec![0, 4], vec![2], 0.25).is_ok());
        assert!(matches!(EpsilonSetup::unlabeled(&g, vec![0, 4], vec![12], 0.25), Err(Error::Setup(_))));
    }

    #[test]
    fn separation_examples() {
        let g = MetricGraph::path(40);
        assert!(separates(&g, &[0], &[15], &[30], 2.0));
        // C2 behind C3
        assert!(!separates(&g, &[0], &[20], &[10], 2.0));
        // off the geodesic in a tree
        let t = MetricGraph::new(8, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (1, 4, 1), (4, 5, 1), (5, 6, 1), (6, 7, 1)]).unwrap();
        assert!(!separates(&t, &[0], &[7], &[3], 1.0));
    }

    #[test]
    fn proximity_clusters_on_a_path() {
        let g = MetricGraph::path(40);
        let s = EpsilonSetup::unlabeled(&g, vec![0, 39], vec![0, 3, 10, 12], 0.25).unwrap();
        let cg = cluster_graph(&g, &s, &params()).unwrap();
        assert_eq!(cg.clusters, vec![vec![0, 3], vec![10, 12], vec![39]]);
        assert!(cg.adjacent(0, 1) && cg.adjacent(1, 2) && !cg.adjacent(0, 2));
        assert_eq!(cg.bivalent, vec![false, true, false]);
        assert!(cg.diagnostics.connected);
    }

    #[test]
    fn two_clusters_alone_are_adjacent() {
        let g = MetricGraph::path(20);
        let s = EpsilonSetup::unlabeled(&g, vec![0, 12], vec![3, 10], 0.25).unwrap();
        let cg = cluster_graph(&g, &s, &params()).unwrap();
        assert_eq!(cg.len(), 2);
        assert!(cg.adjacent(0, 1));
    }
}
