use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use serde::Serialize;

use super::{consistent_set, HftData, Model, ModelParams, SimplicialTree};
use crate::bits::Bits;
use crate::cube::{convex_embedding_check, delete_hyperplanes, ConvexReport, CubeComplex};
use crate::error::{Error, Result};
use crate::hhs::HHSInstance;
use crate::treenet::build_decomposition;

const F_GUARD: usize = 16;
const ISOMETRY_LIMIT: usize = 400;
const ACCOUNTING_EXHAUSTIVE: usize = 300;
const ACCOUNTING_SAMPLES: usize = 20_000;

/// Stable/unstable split of one domain of 𝒰′ and the induced map Φ_U.
#[derive(Clone, Debug, Serialize)]
pub struct DomainStability {
    pub domain: usize,
    /// Local index in the F model, when U ∈ 𝒰.
    pub left: Option<usize>,
    pub right: usize,
    /// Hat edges matched by stable pairs on each side.
    pub stable_left: Vec<usize>,
    pub stable_right: Vec<usize>,
    pub deleted_left: Vec<usize>,
    pub deleted_right: Vec<usize>,
    /// Components of the deleted edges on both sides, and the largest diameter.
    pub unstable_components: usize,
    pub unstable_diameter: usize,
    /// Vertices of hull_F in T̂′_U before deletion.
    pub hull_f_vertices: usize,
    pub collapsed_left: SimplicialTree,
    pub collapsed_right: SimplicialTree,
    /// Δ_U and Δ′_U on hat vertices.
    pub delta_left: Vec<usize>,
    pub delta_right: Vec<usize>,
    /// Φ_U on vertices of T̂_{U,0}.
    pub phi: Vec<usize>,
    pub phi_consistent: bool,
    pub phi_isometric: Option<bool>,
    /// Every clause of the stable decomposition holds (relevant on both sides only).
    pub decomposition_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceCheck {
    pub name: &'static str,
    /// Exact checks: 0 on success. Coarse faces: the measured error.
    pub value: u64,
    pub exact: bool,
    pub witness: Vec<usize>,
}

impl FaceCheck {
    pub fn pass(&self, bound: u64) -> bool {
        if self.exact {
            self.value == 0
        } else {
            self.value <= bound
        }
    }
}

/// Models of F and F′, the deletions η, η′, the embedding θ and all measurements.
#[derive(Clone, Debug, Serialize)]
pub struct Diagram {
    pub f: Vec<usize>,
    pub f2: Vec<usize>,
    #[serde(skip)]
    pub left: Model,
    #[serde(skip)]
    pub right: Model,
    pub domains: Vec<DomainStability>,
    pub deleted: Vec<usize>,
    pub deleted_prime: Vec<usize>,
    #[serde(skip)]
    pub q0: CubeComplex,
    #[serde(skip)]
    pub q0_prime: CubeComplex,
    pub eta: Vec<usize>,
    pub eta_prime: Vec<usize>,
    pub xi: Vec<usize>,
    pub xi_prime: Vec<usize>,
    /// θ on Q₀; `usize::MAX` where the image tuple is missing from Q′₀.
    pub theta: Vec<usize>,
    pub theta_report: ConvexReport,
    pub theta_iso: bool,
    /// Max over sampled pairs of d_Q − d_{Q₀} (and the same on the right), each ≤ the deletion count.
    pub accounting: (usize, usize),
    pub checks: Vec<FaceCheck>,
    /// Number of domains with a nonempty unstable part.
    pub unstable_domains: usize,
    pub max_unstable_components: usize,
    pub max_unstable_diameter: usize,
}

impl Diagram {
    pub fn n_deleted(&self) -> (usize, usize) {
        (self.deleted.len(), self.deleted_prime.len())
    }

    pub fn check(&self, name: &str) -> Option<&FaceCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest coarse face error.
    pub fn face_error(&self) -> u64 {
        self.checks.iter().filter(|c| !c.exact).map(|c| c.value).max().unwrap_or(0)
    }

    pub fn exact_ok(&self) -> bool {
        self.checks.iter().filter(|c| c.exact).all(|c| c.value == 0)
    }

    /// First failing check at the given coarse bound, as a structured error.
    pub fn verify(&self, face_bound: u64) -> Result<()> {
        match self.checks.iter().find(|c| !c.pass(face_bound)) {
            None => Ok(()),
            Some(c) => Err(Error::Invariant(format!(
                "face {} failed (value {}, bound {}), witness {:?}",
                c.name,
                c.value,
                if c.exact { 0 } else { face_bound },
                c.witness
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Bundle<'a> {
            format: &'static str,
            diagram: &'a Diagram,
            left: &'a Model,
            right: &'a Model,
            q0_walls: &'a [usize],
            q0_prime_walls: &'a [usize],
        }
        serde_json::to_string_pretty(&Bundle {
            format: "hullcube/diagram/v1",
            diagram: self,
            left: &self.left,
            right: &self.right,
            q0_walls: self.q0.labels(),
            q0_prime_walls: self.q0_prime.labels(),
        })
        .expect("diagram serializes")
    }

    /// T̂ trees of both models and the 1-skeleta of Q, Q′, Q₀, Q′₀.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        for (side, m) in [("F", &self.left), ("F2", &self.right)] {
            for (u, t) in m.hft.trees.iter().enumerate() {
                let labels: Vec<String> = (0..t.n)
                    .map(|v| {
                        let marks: Vec<String> = m.hft.marks[u]
                            .iter()
                            .enumerate()
                            .filter(|&(_, &x)| x == v)
                            .map(|(i, _)| format!("f{i}"))
                            .collect();
                        marks.join(",")
                    })
                    .collect();
                s.push_str(&t.to_dot(&format!("T_{side}_{}", m.hft.domains[u]), &labels));
            }
        }
        s.push_str(&self.left.q.complex.to_dot("Q"));
        s.push_str(&self.right.q.complex.to_dot("Q2"));
        s.push_str(&self.q0.to_dot("Q0"));
        s.push_str(&self.q0_prime.to_dot("Q0_2"));
        s
    }
}

/// Edge-set components of `edges` in `t`: count and largest vertex diameter.
fn edge_components(t: &SimplicialTree, edges: &[usize]) -> (usize, usize) {
    if edges.is_empty() {
        return (0, 0);
    }
    let mut parent: Vec<usize> = (0..t.n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for &e in edges {
        let (a, b) = t.edges[e];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &e in edges {
        let r = find(&mut parent, t.edges[e].0);
        groups.entry(r).or_default().push(e);
    }
    let mut diam = 0;
    for es in groups.values() {
        let verts: BTreeSet<usize> = es.iter().flat_map(|&e| [t.edges[e].0, t.edges[e].1]).collect();
        let v0 = *verts.iter().next().expect("edge has endpoints");
        let d0 = t.distances(v0);
        let far = *verts.iter().max_by_key(|&&v| (d0[v], std::cmp::Reverse(v))).expect("nonempty");
        let d1 = t.distances(far);
        diam = diam.max(verts.iter().map(|&v| d1[v]).max().unwrap_or(0));
    }
    (groups.len(), diam)
}

struct Split {
    stable_left: BTreeSet<usize>,
    stable_right: BTreeSet<usize>,
    /// (hat vertex left, hat vertex right) correspondences from stable edges.
    pairs: Vec<(usize, usize)>,
    decomposition_pass: Option<bool>,
}

fn split_domain(inst: &HHSInstance, left: &Model, li: Option<usize>, right: &Model, ri: usize) -> Result<Split> {
    let rs = &right.hft.sources[ri];
    let mut out = Split {
        stable_left: BTreeSet::new(),
        stable_right: BTreeSet::new(),
        pairs: Vec::new(),
        decomposition_pass: None,
    };
    let Some(li) = li else { return Ok(out) };
    let ls = &left.hft.sources[li];
    let (Some(lst), Some(rst)) = (&ls.stable, &rs.stable) else { return Ok(out) };
    let g = inst.graph(ls.domain);
    let mut y0: Vec<usize> = ls.cluster_points.iter().map(|c| c.1).collect();
    y0.sort_unstable();
    y0.dedup();
    let d = build_decomposition(g, lst, rst, &ls.points, &y0)?;
    out.decomposition_pass = Some(d.check(g).pass());
    for p in &d.pairs {
        for i in 0..p.left.edges.len() {
            let le = p.left.edges[i];
            let a = d.right_map[p.right.nodes[i]];
            let b = d.right_map[p.right.nodes[i + 1]];
            let re = d
                .right_full
                .edge_between(a, b)
                .ok_or_else(|| Error::Invariant(format!("stable pair edge {a}–{b} missing on the right")))?;
            if let (Some(hl), Some(hr)) = (ls.hat.edge_map[le], rs.hat.edge_map[re]) {
                out.stable_left.insert(hl);
                out.stable_right.insert(hr);
                out.pairs.push((ls.q(p.left.nodes[i]), rs.q(a)));
                out.pairs.push((ls.q(p.left.nodes[i + 1]), rs.q(b)));
            }
        }
    }
    Ok(out)
}

/// Q₀ from deletion, checked against the 0-consistent set of the collapsed family.
struct Collapse {
    complex: CubeComplex,
    eta: Vec<usize>,
    xi: Vec<usize>,
    /// Δ-tuple of each Q₀ vertex.
    tuples: Vec<Vec<usize>>,
    agrees: bool,
    matches_family: bool,
}

fn collapse_side(model: &Model, trees0: &[SimplicialTree], delta: &[Vec<usize>], deleted: &[usize], guard: usize) -> Result<Collapse> {
    let (complex, eta) = delete_hyperplanes(&model.q.complex, deleted)?;
    let mut xi = vec![usize::MAX; complex.n_vertices()];
    for (x, &y) in eta.iter().enumerate() {
        if xi[y] == usize::MAX {
            xi[y] = x;
        }
    }
    let dtuple = |t: &[usize]| -> Vec<usize> { t.iter().enumerate().map(|(u, &v)| delta[u][v]).collect() };
    let encode = |t: &[usize]| {
        let mut b = Vec::new();
        for (u, tree) in trees0.iter().enumerate() {
            tree.encode_into(t[u], &mut b);
        }
        Bits::from_bools(&b)
    };
    // second route: collapse tuple-wise and compare with the deletion image
    let mut agrees = true;
    for (x, t) in model.q.tuples.iter().enumerate() {
        if *complex.vertex(eta[x]) != encode(&dtuple(t)) {
            agrees = false;
            break;
        }
    }
    let tuples: Vec<Vec<usize>> = xi.iter().map(|&x| dtuple(&model.q.tuples[x])).collect();
    let h = &model.hft;
    let m = h.n_domains();
    let mut point = BTreeMap::new();
    let mut down = BTreeMap::new();
    for (&(v, u), &x) in &h.point {
        point.insert((v, u), delta[u][x]);
    }
    for (&(v, u), table) in &h.down {
        let mut sets = vec![BTreeSet::new(); trees0[v].n];
        for (w, img) in table.iter().enumerate() {
            sets[delta[v][w]].extend(img.iter().map(|&x| delta[u][x]));
        }
        down.insert((v, u), sets.into_iter().map(|s| s.into_iter().collect()).collect());
    }
    let marks = (0..m).map(|u| h.marks[u].iter().map(|&x| delta[u][x]).collect()).collect();
    let fam = HftData::from_parts(h.rel.clone(), trees0.to_vec(), marks, point, down);
    let matches_family = match consistent_set(&fam, guard) {
        Ok(q0) => {
            let a: BTreeSet<&Vec<usize>> = q0.tuples.iter().collect();
            let b: BTreeSet<&Vec<usize>> = tuples.iter().collect();
            a == b
        }
        Err(_) => false,
    };
    Ok(Collapse {
        complex,
        eta,
        xi,
        tuples,
        agrees,
        matches_family,
    })
}

fn accounting(q: &Model, q0: &CubeComplex, eta: &[usize], seed: u64) -> usize {
    let n = q.q.len();
    let mut worst = 0;
    let mut probe = |a: usize, b: usize| {
        let d = q.q.l1(a, b) - q0.l1(eta[a], eta[b]);
        worst = worst.max(d);
    };
    if n <= ACCOUNTING_EXHAUSTIVE {
        for a in 0..n {
            for b in a + 1..n {
                probe(a, b);
            }
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ACCOUNTING_SAMPLES {
            probe(rng.gen_range(0..n), rng.gen_range(0..n));
        }
    }
    worst
}

/// Models of F ⊆ F′ related by hyperplane deletions and a convex embedding θ.
pub fn stabler_pipeline(inst: &HHSInstance, f: &[usize], f2: &[usize], params: &ModelParams) -> Result<Diagram> {
    params.validate()?;
    inst.check_points(f2)?;
    if f2.len() > F_GUARD {
        return Err(Error::Capacity {
            what: "points of F′",
            size: f2.len(),
            limit: F_GUARD,
        });
    }
    let pos: Vec<usize> = f
        .iter()
        .map(|x| f2.iter().position(|y| y == x).ok_or_else(|| Error::Argument(format!("F ⊄ F′: {x} missing"))))
        .collect::<Result<_>>()?;
    let left = Model::build(inst, f, params)?;
    let right = Model::build(inst, f2, params)?;
    if let Some(&u) = left.hft.domains.iter().find(|u| !right.hft.domains.contains(u)) {
        return Err(Error::Invariant(format!("domain {u} relevant for F but not for F′")));
    }

    let mut domains = Vec::new();
    let mut deleted = Vec::new();
    let mut deleted_prime = Vec::new();
    let mut trees0 = vec![None; left.hft.n_domains()];
    let mut delta: Vec<Vec<usize>> = vec![vec![]; left.hft.n_domains()];
    let mut trees0r = Vec::new();
    let mut delta_r = Vec::new();
    for (ri, &u) in right.hft.domains.iter().enumerate() {
        let li = left.local(u);
        let split = split_domain(inst, &left, li, &right, ri)?;
        let tr = &right.hft.trees[ri];
        let marks_r: Vec<usize> = pos.iter().map(|&j| right.hft.marks[ri][j]).collect();
        let hull = tr.hull(&marks_r);
        let hull_f_vertices = hull.iter().filter(|&&b| b).count();
        let del_r: Vec<usize> = (0..tr.n_edges())
            .filter(|&e| {
                let (a, b) = tr.edges[e];
                hull[a] && hull[b] && !split.stable_right.contains(&e)
            })
            .collect();
        let (tl, del_l) = match li {
            Some(li) => {
                let t = left.hft.trees[li].clone();
                let d: Vec<usize> = (0..t.n_edges()).filter(|e| !split.stable_left.contains(e)).collect();
                (t, d)
            }
            None => (SimplicialTree::point(), vec![]),
        };
        let mask = |t: &SimplicialTree, d: &[usize]| {
            let mut m = vec![false; t.n_edges()];
            for &e in d {
                m[e] = true;
            }
            m
        };
        let (t0l, dl) = tl.contract(&mask(&tl, &del_l));
        let (t0r, dr) = tr.contract(&mask(tr, &del_r));
        // Φ from stable-edge endpoints, then F marks
        let mut phi = vec![usize::MAX; t0l.n];
        let mut phi_consistent = true;
        let mut assign = |a: usize, b: usize| {
            if phi[a] == usize::MAX {
                phi[a] = b;
            } else if phi[a] != b {
                phi_consistent = false;
            }
        };
        for &(a, b) in &split.pairs {
            assign(dl[a], dr[b]);
        }
        for (i, &j) in pos.iter().enumerate() {
            let a = li.map_or(0, |li| dl[left.hft.marks[li][i]]);
            assign(a, dr[right.hft.marks[ri][j]]);
        }
        if phi.contains(&usize::MAX) {
            phi_consistent = false;
        }
        let phi_isometric = (phi_consistent && t0l.n <= ISOMETRY_LIMIT).then(|| {
            let dl_all = t0l.all_distances();
            let dr_all = t0r.all_distances();
            (0..t0l.n).all(|a| (0..t0l.n).all(|b| dl_all[a][b] == dr_all[phi[a]][phi[b]]))
        });
        let (cl, diam_l) = edge_components(&tl, &del_l);
        let (cr, diam_r) = edge_components(tr, &del_r);
        if let Some(li) = li {
            deleted.extend(del_l.iter().map(|&e| left.q.offsets[li] + e));
            trees0[li] = Some(t0l.clone());
            delta[li] = dl.clone();
        }
        deleted_prime.extend(del_r.iter().map(|&e| right.q.offsets[ri] + e));
        trees0r.push(t0r.clone());
        delta_r.push(dr.clone());
        domains.push(DomainStability {
            domain: u,
            left: li,
            right: ri,
            stable_left: split.stable_left.into_iter().collect(),
            stable_right: split.stable_right.into_iter().collect(),
            deleted_left: del_l,
            deleted_right: del_r,
            unstable_components: cl + cr,
            unstable_diameter: diam_l.max(diam_r),
            hull_f_vertices,
            collapsed_left: t0l,
            collapsed_right: t0r,
            delta_left: dl,
            delta_right: dr,
            phi,
            phi_consistent,
            phi_isometric,
            decomposition_pass: split.decomposition_pass,
        });
    }
    let trees0: Vec<SimplicialTree> = trees0.into_iter().map(|t| t.expect("every F domain lies in 𝒰′")).collect();
    let lc = collapse_side(&left, &trees0, &delta, &deleted, params.q_guard)?;
    let rc = collapse_side(&right, &trees0r, &delta_r, &deleted_prime, params.q_guard)?;

    // θ on Δ-tuples
    let right_index: HashMap<&Vec<usize>, usize> = rc.tuples.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut theta = Vec::with_capacity(lc.tuples.len());
    let mut theta_missing = None;
    for (y, t) in lc.tuples.iter().enumerate() {
        let img: Vec<usize> = domains
            .iter()
            .map(|d| match d.left {
                Some(li) => d.phi[t[li]],
                None => d.phi[0],
            })
            .collect();
        match right_index.get(&img) {
            Some(&z) => theta.push(z),
            None => {
                theta_missing.get_or_insert(y);
                theta.push(usize::MAX);
            }
        }
    }
    let theta_report = convex_embedding_check(&theta, &lc.complex, &rc.complex);
    let theta_iso = theta_report.convex && lc.complex.n_vertices() == rc.complex.n_vertices();

    let mut checks = Vec::new();
    let exact = |name, bad: Option<Vec<usize>>| FaceCheck {
        name,
        value: bad.is_some() as u64,
        exact: true,
        witness: bad.unwrap_or_default(),
    };
    let inconsistent = domains.iter().find(|d| !d.phi_consistent || d.phi_isometric == Some(false));
    checks.push(exact("phi", inconsistent.map(|d| vec![d.domain])));
    checks.push(exact("deletion_routes", (!lc.agrees || !rc.agrees).then(Vec::new)));
    checks.push(exact("collapsed_family", (!lc.matches_family || !rc.matches_family).then(Vec::new)));
    checks.push(exact("theta_total", theta_missing.map(|y| vec![y])));
    checks.push(exact("theta_convex", (!theta_report.convex).then(Vec::new)));
    let square = (0..f.len()).find(|&i| {
        let y = lc.eta[left.marked_vertex(i)];
        theta[y] != rc.eta[right.marked_vertex(pos[i])]
    });
    checks.push(exact("left_square", square.map(|i| vec![f[i]])));

    let d_x = |a: usize, b: usize| inst.ambient.d(a, b);
    let face = |name, it: &mut dyn Iterator<Item = (u64, usize)>| {
        let (value, w) = it.fold((0, usize::MAX), |acc, (v, w)| if v > acc.0 { (v, w) } else { acc });
        FaceCheck {
            name,
            value,
            exact: false,
            witness: if w == usize::MAX { vec![] } else { vec![w] },
        }
    };
    let lo = &left.po.omega;
    let ro = &right.po.omega;
    checks.push(face(
        "upper",
        &mut (0..left.q.len()).map(|x| (d_x(lo[x], lo[lc.xi[lc.eta[x]]]), x)),
    ));
    checks.push(face(
        "lower",
        &mut (0..right.q.len()).map(|x| (d_x(ro[x], ro[rc.xi[rc.eta[x]]]), x)),
    ));
    checks.push(face(
        "middle",
        &mut (0..lc.tuples.len())
            .filter(|&y| theta[y] != usize::MAX)
            .map(|y| (d_x(lo[lc.xi[y]], ro[rc.xi[theta[y]]]), y)),
    ));
    // hull of F sits in hull of F′; compare both routes around the outer square
    checks.push(face(
        "hull",
        &mut left.po.hull.iter().enumerate().filter_map(|(j, &x)| {
            let y = theta[lc.eta[left.po.psi[j]]];
            let z = right.po.psi_of(x).map(|p| rc.eta[p])?;
            (y != usize::MAX).then(|| (d_x(ro[rc.xi[y]], ro[rc.xi[z]]), x))
        }),
    ));

    let acc = (accounting(&left, &lc.complex, &lc.eta, 7), accounting(&right, &rc.complex, &rc.eta, 11));
    checks.push(exact(
        "accounting",
        (acc.0 > deleted.len() || acc.1 > deleted_prime.len()).then(|| vec![acc.0, acc.1]),
    ));

    let unstable_domains = domains.iter().filter(|d| d.unstable_components > 0).count();
    let max_unstable_components = domains.iter().map(|d| d.unstable_components).max().unwrap_or(0);
    let max_unstable_diameter = domains.iter().map(|d| d.unstable_diameter).max().unwrap_or(0);
    Ok(Diagram {
        f: f.to_vec(),
        f2: f2.to_vec(),
        domains,
        deleted,
        deleted_prime,
        eta: lc.eta,
        eta_prime: rc.eta,
        xi: lc.xi,
        xi_prime: rc.xi,
        theta,
        theta_report,
        theta_iso,
        accounting: acc,
        checks,
        unstable_domains,
        max_unstable_components,
        max_unstable_diameter,
        q0: lc.complex,
        q0_prime: rc.complex,
        left,
        right,
    })
}
