use std::collections::BTreeMap;

use super::{Ambient, Constants, Domain, HHSInstance, Relation, Symmetry};
use crate::error::{Error, Result};
use crate::space::MetricGraph;

fn require_unit(g: &MetricGraph, what: &str) -> Result<()> {
    if g.is_unit() {
        Ok(())
    } else {
        Err(Error::Argument(format!("{what} must have unit edge weights")))
    }
}

fn point_graph() -> MetricGraph {
    MetricGraph::new(1, &[]).expect("single vertex")
}

/// (G1) One domain whose C(S) is the ambient graph, π = identity.
pub fn g1(g: MetricGraph, constants: Constants) -> Result<HHSInstance> {
    require_unit(&g, "G1 graph")?;
    let n = g.n();
    HHSInstance::new(
        Ambient::Graph(g.clone()),
        vec![Domain { name: "S".into(), graph: g }],
        vec![vec![Relation::Equal]],
        vec![(0..n).collect()],
        BTreeMap::new(),
        BTreeMap::new(),
        vec![vec![0]],
        vec![],
        constants,
    )
}

/// (G2) Product of two trees: a point-domain S over orthogonal factor domains U1, U2.
pub fn g2(t1: MetricGraph, t2: MetricGraph, constants: Constants) -> Result<HHSInstance> {
    require_unit(&t1, "G2 factor 1")?;
    require_unit(&t2, "G2 factor 2")?;
    let swap = t1.to_doc() == t2.to_doc();
    let ambient = Ambient::product(vec![t1.clone(), t2.clone()])?;
    let n = ambient.n();
    let (n1, n2) = (t1.n(), t2.n());
    use Relation::*;
    let rel = vec![
        vec![Equal, Contains, Contains],
        vec![Nested, Equal, Orth],
        vec![Nested, Orth, Equal],
    ];
    let pi = vec![vec![0; n], (0..n).map(|x| x % n1).collect(), (0..n).map(|x| x / n1).collect()];
    let rho_point = BTreeMap::from([((1, 0), 0), ((2, 0), 0)]);
    let rho_table = BTreeMap::from([((0, 1), vec![0]), ((0, 2), vec![0])]);
    let symmetries = if swap {
        let points = (0..n).map(|x| (x % n1) * n2 + x / n1).collect();
        vec![Symmetry {
            domains: vec![0, 2, 1],
            points,
        }]
    } else {
        vec![]
    };
    HHSInstance::new(
        ambient,
        vec![
            Domain {
                name: "S".into(),
                graph: point_graph(),
            },
            Domain { name: "U1".into(), graph: t1 },
            Domain { name: "U2".into(), graph: t2 },
        ],
        rel,
        pi,
        rho_point,
        rho_table,
        vec![vec![0], vec![1], vec![2]],
        symmetries,
        constants,
    )
}

/// (G3) Tree of flats: each child graph is glued by its vertex 0 to parent vertex `m_i`.
///
/// Domain 0 is the parent P; domain i+1 is child i. Children nest in P and are
/// pairwise transverse; ρ^{C_i}_P = m_i and every other ρ lands on vertex 0.
pub fn g3(parent: MetricGraph, children: Vec<(usize, MetricGraph)>, constants: Constants) -> Result<HHSInstance> {
    require_unit(&parent, "G3 parent")?;
    let np = parent.n();
    let mut edges: Vec<(usize, usize, u64)> = parent.edges().to_vec();
    let mut offsets = Vec::new();
    let mut n = np;
    for (i, (m, c)) in children.iter().enumerate() {
        require_unit(c, "G3 child")?;
        if *m >= np {
            return Err(Error::Argument(format!("child {i} attached at missing parent vertex {m}")));
        }
        offsets.push(n);
        let id = |v: usize| if v == 0 { *m } else { n + v - 1 };
        edges.extend(c.edges().iter().map(|&(a, b, w)| (id(a), id(b), w)));
        n += c.n() - 1;
    }
    let ambient = MetricGraph::new(n, &edges)?;
    let k = children.len();
    let mut pi = vec![vec![0usize; n]; k + 1];
    pi[0][..np].copy_from_slice(&(0..np).collect::<Vec<_>>());
    for (i, (m, c)) in children.iter().enumerate() {
        for v in 1..c.n() {
            let x = offsets[i] + v - 1;
            pi[0][x] = *m;
            pi[i + 1][x] = v;
        }
    }
    let mut rel = vec![vec![Relation::Trans; k + 1]; k + 1];
    let mut rho_point = BTreeMap::new();
    let mut rho_table = BTreeMap::new();
    for i in 1..=k {
        rel[i][i] = Relation::Equal;
        rel[i][0] = Relation::Nested;
        rel[0][i] = Relation::Contains;
        rho_point.insert((i, 0), children[i - 1].0);
        rho_table.insert((0, i), vec![0; np]);
        for j in 1..=k {
            if j != i {
                rho_point.insert((i, j), 0);
            }
        }
    }
    rel[0][0] = Relation::Equal;
    let mut domains = vec![Domain {
        name: "P".into(),
        graph: parent,
    }];
    for (i, (_, c)) in children.into_iter().enumerate() {
        domains.push(Domain {
            name: format!("C{i}"),
            graph: c,
        });
    }
    let mut colors = vec![vec![0]];
    if k > 0 {
        colors.push((1..=k).collect());
    }
    HHSInstance::new(
        Ambient::Graph(ambient),
        domains,
        rel,
        pi,
        rho_point,
        rho_table,
        colors,
        vec![],
        constants,
    )
}
