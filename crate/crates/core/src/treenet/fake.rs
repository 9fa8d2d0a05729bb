use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::cluster::{clusters_of, EpsilonSetup, TreeParams};
use super::decomp::{build_decomposition, StableDecomposition};
use super::stable::{stable_tree, StableTree};
use super::steiner::{minimal_network, prune_to_hull, SteinerNetwork};
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// Greedy (a, A)-net of `region` in host distance, scanned in the given order.
/// Keeps a point when it is at least `a` from every kept point, so the net is a-dense and a-separated.
pub fn net(g: &MetricGraph, region: &[usize], a: u64, big_a: u64) -> Result<Vec<usize>> {
    if big_a > a {
        return Err(Error::Configuration(format!("net separation A = {big_a} exceeds density a = {a}")));
    }
    let mut out: Vec<usize> = Vec::new();
    for &p in region {
        if out.iter().all(|&z| g.d(z, p) >= a.max(1)) {
            out.push(p);
        }
    }
    Ok(out)
}

/// Net parameters (a, A, B).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetParams {
    pub a: u64,
    pub big_a: u64,
    pub big_b: u64,
}

impl NetParams {
    /// a = 2, A = 1, B = 8ε′ + S.
    pub fn defaults(params: &TreeParams, s: u64) -> Self {
        NetParams {
            a: 2,
            big_a: 1,
            big_b: (8.0 * params.eps2).ceil() as u64 + s,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FakePoints {
    pub base: usize,
    pub base_prime: usize,
    pub fake: Vec<usize>,
    pub fake_prime: Vec<usize>,
    /// 𝒴_fake lies in one E-cluster.
    pub single_cluster: bool,
    pub single_cluster_prime: bool,
    /// |𝒴′_fake|, the measured D_fake.
    pub count: usize,
}

/// Vertices of `net` ordered by intrinsic distance from `base`, within `radius`.
fn ball_in_network(net: &SteinerNetwork, base: usize, radius: u64, allowed: &dyn Fn(usize) -> bool) -> Vec<usize> {
    let d = net.intrinsic_distances(base);
    let mut pts: Vec<(u64, usize)> = d.into_iter().filter(|&(v, r)| r <= radius && allowed(v)).map(|(v, r)| (r, v)).collect();
    pts.sort_unstable();
    pts.into_iter().map(|p| p.1).collect()
}

fn lambda_vertices(net: &SteinerNetwork, f: &[usize]) -> Vec<usize> {
    if net.vertices.is_empty() {
        f.to_vec()
    } else {
        net.vertices.clone()
    }
}

/// Fake cluster points near the projection of `x` to λ(F), extended along the new branch of λ(F′).
pub fn fake_cluster_points(g: &MetricGraph, f: &[usize], f_prime: &[usize], x: usize, np: &NetParams, params: &TreeParams, s: u64) -> Result<FakePoints> {
    if (np.a as f64) > params.big_e / 2.0 {
        return Err(Error::Configuration(format!("net density a = {} exceeds E/2 = {}", np.a, params.big_e / 2.0)));
    }
    if np.big_a > np.a {
        return Err(Error::Configuration(format!("A = {} exceeds a = {}", np.big_a, np.a)));
    }
    if np.big_b < s {
        return Err(Error::Configuration(format!("B = {} below the sporadicity parameter {s}", np.big_b)));
    }
    let fs: BTreeSet<usize> = f.iter().copied().collect();
    if !f_prime.contains(&x) || fs.contains(&x) || !f.iter().all(|v| f_prime.contains(v)) {
        return Err(Error::Argument("need F′ = F ∪ {x}".into()));
    }
    let lam = minimal_network(g, &f.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let lam2 = minimal_network(g, &f_prime.iter().map(|&v| vec![v]).collect::<Vec<_>>())?;
    let lv = lambda_vertices(&lam, f);
    let base = g.project(&lv, x).expect("nonempty network");
    let fake = net(g, &ball_in_network(&lam, base, np.big_b, &|_| true), np.a, np.big_a)?;

    // hull of F inside λ(F′)
    let verts = lambda_vertices(&lam2, f_prime);
    let pos: BTreeMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut adj = vec![Vec::new(); verts.len()];
    for &(u, v, _) in &lam2.edges {
        adj[pos[&u]].push(pos[&v]);
        adj[pos[&v]].push(pos[&u]);
    }
    let target: Vec<bool> = verts.iter().map(|v| fs.contains(v)).collect();
    let hull = prune_to_hull(&adj, &vec![true; verts.len()], &target);
    let hull_vs: Vec<usize> = (0..verts.len()).filter(|&i| hull[i]).map(|i| verts[i]).collect();
    let base_prime = g.project(&hull_vs, x).expect("hull nonempty");
    let off: BTreeSet<usize> = (0..verts.len()).filter(|&i| !hull[i]).map(|i| verts[i]).collect();
    let branch = ball_in_network(&lam2, base_prime, np.big_b, &|v| off.contains(&v));
    let mut fake_prime = fake.clone();
    for p in net(g, &branch, np.a, np.big_a)? {
        if !fake_prime.contains(&p) {
            fake_prime.push(p);
        }
    }
    let single_cluster = clusters_of(g, &fake, params.big_e).len() <= 1;
    let single_cluster_prime = clusters_of(g, &fake_prime, params.big_e).len() <= 1;
    Ok(FakePoints {
        base,
        base_prime,
        count: fake_prime.len(),
        fake,
        fake_prime,
        single_cluster,
        single_cluster_prime,
    })
}

/// p is S-sporadic for the new point x when some f ∈ F has every x–f geodesic farther than S from p.
pub fn is_sporadic(g: &MetricGraph, f: &[usize], x: usize, p: usize, s: u64) -> bool {
    f.iter().any(|&y| {
        // distance from p to hull(x, y) = min over v on some geodesic
        let dxy = g.d(x, y);
        let near = (0..g.n()).any(|v| g.d(x, v) + g.d(v, y) == dxy && g.d(p, v) <= s);
        !near
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Layer {
    pub x: usize,
    pub ys: Vec<usize>,
    pub admissible: bool,
    pub sporadic: Vec<usize>,
    pub sporadic_close: bool,
    pub fake: Option<FakePoints>,
    /// Edge pieces of the fake left tree that are not edge pieces of the fake right tree.
    pub edge_pieces_missing: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stabler {
    pub layers: Vec<Layer>,
    pub left: StableTree,
    pub right: StableTree,
    pub decomposition: StableDecomposition,
}

fn near_network(g: &MetricGraph, net: &SteinerNetwork, f: &[usize], y: usize, eps: f64) -> bool {
    (g.dist_to_set(&lambda_vertices(net, f), y) as f64) < eps / 2.0
}

fn edge_piece_keys(t: &StableTree) -> BTreeSet<Vec<(usize, usize, u64)>> {
    t.tree
        .pieces
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_edge())
        .map(|(i, _)| t.tree.piece_key(i).edges)
        .collect()
}

/// Well-layered gate, per-layer sporadic and fake artifacts, and the decomposition between
/// T(F; 𝒴) and the hull of F in T(F′; 𝒴′).
pub fn stabler_decomposition(
    g: &MetricGraph,
    setup: &EpsilonSetup,
    setup_prime: &EpsilonSetup,
    s: u64,
    n: usize,
    params: &TreeParams,
) -> Result<Stabler> {
    let fs: BTreeSet<usize> = setup.f.iter().copied().collect();
    if !setup.f.iter().all(|v| setup_prime.f.contains(v)) {
        return Err(Error::Argument("F must be contained in F′".into()));
    }
    let ys: BTreeSet<usize> = setup.ys.iter().copied().collect();
    if !ys.iter().all(|y| setup_prime.ys.contains(y)) {
        return Err(Error::Argument("𝒴 must be contained in 𝒴′".into()));
    }
    let xs: Vec<usize> = setup_prime.f.iter().copied().filter(|v| !fs.contains(v)).collect();
    let mut fi: Vec<Vec<usize>> = vec![setup.f.clone()];
    for &x in &xs {
        let mut next = fi.last().unwrap().clone();
        next.push(x);
        fi.push(next);
    }
    let nets: Vec<SteinerNetwork> = fi
        .iter()
        .map(|f| minimal_network(g, &f.iter().map(|&v| vec![v]).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    // 𝒴_i: points of 𝒴′ near every later network; 𝒴_0 = 𝒴
    let extra: Vec<usize> = setup_prime.ys.iter().copied().filter(|y| !ys.contains(y)).collect();
    let mut layer_ys: Vec<Vec<usize>> = vec![setup.ys.clone()];
    for i in 1..=xs.len() {
        let mut yi = setup.ys.clone();
        for &y in &extra {
            if (i..=xs.len()).all(|j| near_network(g, &nets[j], &fi[j], y, setup.eps)) {
                yi.push(y);
            }
        }
        layer_ys.push(yi);
    }
    let np = NetParams::defaults(params, s);
    let mut layers = Vec::new();
    for i in 0..xs.len() {
        let (a, b) = (&layer_ys[i], &layer_ys[i + 1]);
        let x = xs[i];
        let admissible = a.iter().all(|y| b.contains(y))
            && a.iter().all(|&y| near_network(g, &nets[i], &fi[i], y, setup.eps) && near_network(g, &nets[i + 1], &fi[i + 1], y, setup.eps));
        let sporadic: Vec<usize> = b
            .iter()
            .copied()
            .filter(|y| !a.contains(y))
            .filter(|&p| is_sporadic(g, &fi[i], x, p, s))
            .collect();
        let sporadic_close = sporadic.iter().all(|&p| near_network(g, &nets[i], &fi[i], p, setup.eps));
        let mut layer = Layer {
            x,
            ys: b.clone(),
            admissible,
            sporadic,
            sporadic_close,
            fake: None,
            edge_pieces_missing: None,
        };
        if !layer.admissible || layer.sporadic.len() >= n || !layer.sporadic_close {
            return Err(Error::Configuration(format!(
                "well-layered gate fails at layer {i} (x = {x}): admissible {}, {} sporadic points (N = {n}), sporadic close {}",
                layer.admissible,
                layer.sporadic.len(),
                layer.sporadic_close
            )));
        }
        let fake = fake_cluster_points(g, &fi[i], &fi[i + 1], x, &np, params, s)?;
        // audit: edge pieces of the fake trees inject
        let mut left_ys = a.clone();
        left_ys.extend(layer.sporadic.iter().copied());
        left_ys.extend(fake.fake.iter().copied());
        let mut right_ys = b.clone();
        right_ys.extend(fake.fake_prime.iter().copied());
        let lset = EpsilonSetup::unlabeled(g, fi[i].clone(), left_ys, setup.eps);
        let rset = EpsilonSetup::unlabeled(g, fi[i + 1].clone(), right_ys, setup.eps);
        if let (Ok(ls), Ok(rs)) = (lset, rset) {
            let lt = stable_tree(g, &ls, params)?;
            let rt = stable_tree(g, &rs, params)?;
            let rk = edge_piece_keys(&rt);
            layer.edge_pieces_missing = Some(edge_piece_keys(&lt).iter().filter(|k| !rk.contains(*k)).count());
        }
        layer.fake = Some(fake);
        layers.push(layer);
    }
    let left = stable_tree(g, setup, params)?;
    let right = stable_tree(g, setup_prime, params)?;
    let decomposition = build_decomposition(g, &left, &right, &setup.f, &setup.ys)?;
    Ok(Stabler {
        layers,
        left,
        right,
        decomposition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_net_on_an_interval() {
        let g = MetricGraph::path(9);
        let region: Vec<usize> = (0..9).collect();
        assert_eq!(net(&g, &region, 2, 1).unwrap(), vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn fake_points_extend_and_cluster() {
        // spine 0..40 with a branch of length 10 hanging at 20
        let mut e: Vec<(usize, usize, u64)> = (0..40).map(|i| (i, i + 1, 1)).collect();
        e.push((20, 41, 1));
        for i in 41..50 {
            e.push((i, i + 1, 1));
        }
        let g = MetricGraph::new(51, &e).unwrap();
        let params = TreeParams {
            eps: 0.25,
            eps2: 0.5,
            big_e: 4.0,
        };
        let np = NetParams { a: 2, big_a: 1, big_b: 6 };
        let fp = fake_cluster_points(&g, &[0, 40], &[0, 40, 50], 50, &np, &params, 4).unwrap();
        assert_eq!(fp.base, 20);
        assert_eq!(fp.fake, vec![20, 18, 22, 16, 24, 14, 26]);
        assert!(fp.fake.iter().all(|y| fp.fake_prime.contains(y)));
        assert!(fp.fake_prime.len() > fp.fake.len());
        assert!(fp.single_cluster && fp.single_cluster_prime);
    }
}
