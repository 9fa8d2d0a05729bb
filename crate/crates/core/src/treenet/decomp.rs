use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use super::stable::StableTree;
use super::tree::{PieceKey, PieceTree};
use crate::error::{Error, Result};
use crate::space::MetricGraph;

/// A path of tree edges; `nodes.len() == edges.len() + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub nodes: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn interior(&self) -> &[usize] {
        if self.nodes.len() < 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }

    pub fn ends(&self) -> (usize, usize) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn weights(&self, t: &PieceTree) -> Vec<u64> {
        self.edges.iter().map(|&e| t.edges[e].2).collect()
    }

    pub fn weight(&self, t: &PieceTree) -> u64 {
        self.weights(t).iter().sum()
    }
}

/// Stable pair (E, α(E)); the isometry sends `left.nodes[i]` to `right.nodes[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StablePair {
    pub left: Interval,
    pub right: Interval,
    pub identical: bool,
}

/// Reference point y ∈ 𝒴₀ ∪ F with a node of μ(C_y) on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Reference {
    pub vertex: usize,
    pub left: usize,
    /// None when μ(C′_y) misses the hull on the right.
    pub right: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StableDecomposition {
    pub left: PieceTree,
    pub right_full: PieceTree,
    /// hull_{T′}(F) as a restriction of `right_full`.
    pub right: PieceTree,
    pub right_map: Vec<usize>,
    pub f: Vec<usize>,
    pub pairs: Vec<StablePair>,
    /// β as (left representative, right representative) per complementary component.
    pub beta: Vec<(usize, usize)>,
    pub diff_left: Vec<usize>,
    pub diff_right: Vec<usize>,
    pub refs: Vec<Reference>,
    pub l1: usize,
    pub l2: u64,
    /// Pairs demoted while repairing β.
    pub demoted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub clauses: Vec<ClauseResult>,
    /// Smallest constants for which clauses 3–6 would pass.
    pub needed_l1: usize,
    pub needed_l2: u64,
    pub unstable_left: usize,
    pub unstable_right: usize,
    pub max_unstable_diameter: u64,
    pub non_identical: usize,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&ClauseResult> {
        self.clauses.iter().find(|c| !c.pass)
    }
}

/// Interior eligibility and T − T_s bookkeeping for one side.
struct Side<'a> {
    t: &'a PieceTree,
    full: &'a PieceTree,
    map: Vec<usize>,
}

impl<'a> Side<'a> {
    fn left(t: &'a PieceTree) -> Self {
        Side {
            t,
            full: t,
            map: (0..t.n_nodes()).collect(),
        }
    }

    fn right(t: &'a PieceTree, full: &'a PieceTree, map: &[usize]) -> Self {
        Side { t, full, map: map.to_vec() }
    }

    fn interior_ok(&self, v: usize) -> bool {
        let o = self.map[v];
        self.t.degree(v) == 2
            && self.full.degree(o) == 2
            && self.t.mark_at(v).is_none()
            && self.full.node_pieces(o).len() == 1
    }

    fn in_intervals<'b>(&self, ivs: impl Iterator<Item = &'b Interval>) -> (Vec<bool>, Vec<bool>) {
        let mut interior = vec![false; self.t.n_nodes()];
        let mut stable = vec![false; self.t.n_edges()];
        for iv in ivs {
            for &v in iv.interior() {
                interior[v] = true;
            }
            for &e in &iv.edges {
                stable[e] = true;
            }
        }
        (interior, stable)
    }

    /// Components of T − T_s; interior nodes get `usize::MAX`.
    fn complement<'b>(&self, ivs: impl Iterator<Item = &'b Interval>) -> (Vec<usize>, usize) {
        let (interior, stable) = self.in_intervals(ivs);
        self.t.components_by(&|v| !interior[v], &|e| !stable[e])
    }

    /// Components of T_e − T_s: (edges, diameter) per component.
    fn unstable_edge_components<'b>(&self, ivs: impl Iterator<Item = &'b Interval>) -> Vec<(Vec<usize>, u64)> {
        let (_, stable) = self.in_intervals(ivs);
        let edges: Vec<usize> = (0..self.t.n_edges())
            .filter(|&e| self.t.is_edge_piece_edge(e) && !stable[e])
            .collect();
        // edge pieces are disjoint in T_e, so connectivity is per piece
        let mut by_node: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &e in &edges {
            let (u, v, _) = self.t.edges[e];
            let p = self.t.edge_piece[e];
            by_node.entry((p, u)).or_default().push(e);
            by_node.entry((p, v)).or_default().push(e);
        }
        let mut seen: HashMap<usize, bool> = edges.iter().map(|&e| (e, false)).collect();
        let mut out = Vec::new();
        for &s in &edges {
            if seen[&s] {
                continue;
            }
            seen.insert(s, true);
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(e) = queue.pop_front() {
                let (u, v, _) = self.t.edges[e];
                let p = self.t.edge_piece[e];
                for x in [u, v] {
                    for &e2 in &by_node[&(p, x)] {
                        if !seen[&e2] {
                            seen.insert(e2, true);
                            comp.push(e2);
                            queue.push_back(e2);
                        }
                    }
                }
            }
            comp.sort_unstable();
            let d = self.t.edge_set_diameter(&comp);
            out.push((comp, d));
        }
        out
    }

    /// Components of T − T_diff with their signatures.
    fn diff_complement(&self, diff: &[bool]) -> Vec<(Vec<PieceKey>, Vec<usize>)> {
        let t = self.t;
        let keep_node = |v: usize| t.node_pieces(v).iter().any(|&p| !diff[p]);
        let keep_edge = |e: usize| !diff[t.edge_piece[e]];
        let (comp, k) = t.components_by(&keep_node, &keep_edge);
        let mut sigs: Vec<(Vec<PieceKey>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); k];
        for (p, piece) in t.pieces.iter().enumerate() {
            if diff[p] {
                continue;
            }
            let c = comp[piece.nodes[0]];
            sigs[c].0.push(t.piece_key(p));
            sigs[c].1.push(p);
        }
        for s in &mut sigs {
            s.0.sort();
        }
        sigs
    }
}

/// Multiset of signatures of the components of T − (pieces flagged in `diff`).
pub(crate) fn complement_signatures(t: &PieceTree, diff: &[bool]) -> BTreeMap<Vec<PieceKey>, usize> {
    multiset(Side::left(t).diff_complement(diff).into_iter().map(|s| s.0))
}

/// Piece matching by realization key.
pub(crate) fn identical_pieces(l: &PieceTree, r: &PieceTree) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    match_pieces(l, r)
}

fn path_is_valid(t: &PieceTree, iv: &Interval) -> bool {
    if iv.edges.is_empty() || iv.nodes.len() != iv.edges.len() + 1 {
        return false;
    }
    iv.edges.iter().enumerate().all(|(i, &e)| {
        e < t.n_edges() && {
            let (u, v, _) = t.edges[e];
            (u, v) == (iv.nodes[i], iv.nodes[i + 1]) || (v, u) == (iv.nodes[i], iv.nodes[i + 1])
        }
    })
}

fn realized_identically(l: &PieceTree, r: &PieceTree, p: &StablePair) -> bool {
    p.left.nodes.len() == p.right.nodes.len()
        && p.left.nodes.iter().zip(&p.right.nodes).all(|(&a, &b)| l.phi[a] == r.phi[b])
}

fn pair_gap(g: &MetricGraph, l: &PieceTree, r: &PieceTree, p: &StablePair) -> u64 {
    p.left
        .nodes
        .iter()
        .zip(&p.right.nodes)
        .map(|(&a, &b)| g.d(l.phi[a], r.phi[b]))
        .max()
        .unwrap_or(0)
}

fn multiset<K: Ord + Clone>(items: impl Iterator<Item = K>) -> BTreeMap<K, usize> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

impl StableDecomposition {
    fn sides(&self) -> (Side<'_>, Side<'_>) {
        (Side::left(&self.left), Side::right(&self.right, &self.right_full, &self.right_map))
    }

    /// Every clause of the compatibility definition at (`l1`, `l2`).
    pub fn check(&self, g: &MetricGraph) -> CheckReport {
        self.check_at(g, self.l1, self.l2)
    }

    pub fn check_at(&self, g: &MetricGraph, l1: usize, l2: u64) -> CheckReport {
        let (ls, rs) = self.sides();
        let mut clauses = Vec::new();

        // 1: α between well-formed stable components
        let mut bad = Vec::new();
        let mut used_l = vec![false; self.left.n_edges()];
        let mut used_r = vec![false; self.right.n_edges()];
        for (i, p) in self.pairs.iter().enumerate() {
            for (side, iv, used) in [(&ls, &p.left, &mut used_l), (&rs, &p.right, &mut used_r)] {
                if !path_is_valid(side.t, iv) {
                    bad.push(format!("pair {i}: not a path"));
                    continue;
                }
                if iv.edges.iter().any(|&e| !side.t.is_edge_piece_edge(e)) {
                    bad.push(format!("pair {i}: leaves the edge forest"));
                }
                if iv.interior().iter().any(|&v| !side.interior_ok(v)) {
                    bad.push(format!("pair {i}: interior meets a branch, mark or gluing point"));
                }
                for &e in &iv.edges {
                    if used[e] {
                        bad.push(format!("pair {i}: edge {e} reused"));
                    }
                    used[e] = true;
                }
            }
        }
        clauses.push(ClauseResult {
            clause: 1,
            name: "stable bijection",
            pass: bad.is_empty(),
            detail: bad.first().cloned().unwrap_or_else(|| format!("{} pairs", self.pairs.len())),
        });

        // 2: isometries
        let bad2 = self
            .pairs
            .iter()
            .position(|p| p.left.weights(&self.left) != p.right.weights(&self.right));
        clauses.push(ClauseResult {
            clause: 2,
            name: "pair isometries",
            pass: bad2.is_none(),
            detail: bad2.map(|i| format!("pair {i}: weight sequences differ")).unwrap_or_default(),
        });

        // 3, 4: identical pairs and close pairs
        let mut non_identical = 0;
        let mut gap = 0;
        for p in &self.pairs {
            if !realized_identically(&self.left, &self.right, p) {
                non_identical += 1;
                gap = gap.max(pair_gap(g, &self.left, &self.right, p));
            }
        }
        clauses.push(ClauseResult {
            clause: 3,
            name: "identical pairs",
            pass: non_identical <= l1,
            detail: format!("{non_identical} non-identical pairs, L1 = {l1}"),
        });
        clauses.push(ClauseResult {
            clause: 4,
            name: "close pairs",
            pass: non_identical == 0 || gap < l2,
            detail: format!("max gap {gap}, L2 = {l2}"),
        });

        // 5: unstable components of the edge forests
        let ul = ls.unstable_edge_components(self.pairs.iter().map(|p| &p.left));
        let ur = rs.unstable_edge_components(self.pairs.iter().map(|p| &p.right));
        let diam = ul.iter().chain(&ur).map(|c| c.1).max().unwrap_or(0);
        clauses.push(ClauseResult {
            clause: 5,
            name: "unstable components",
            pass: ul.len() <= l1 && ur.len() <= l1 && diam <= l2,
            detail: format!("{} left, {} right, max diameter {diam}", ul.len(), ur.len()),
        });

        // 6: unstable forests
        let mut dl = vec![false; self.left.pieces.len()];
        let mut dr = vec![false; self.right.pieces.len()];
        let mut bad6 = Vec::new();
        for &p in &self.diff_left {
            match dl.get_mut(p) {
                Some(x) => *x = true,
                None => bad6.push(format!("left diff piece {p} out of range")),
            }
        }
        for &p in &self.diff_right {
            match dr.get_mut(p) {
                Some(x) => *x = true,
                None => bad6.push(format!("right diff piece {p} out of range")),
            }
        }
        if bad6.is_empty() {
            let sl = multiset(ls.diff_complement(&dl).into_iter().map(|s| s.0));
            let sr = multiset(rs.diff_complement(&dr).into_iter().map(|s| s.0));
            if sl != sr {
                bad6.push("complements of the unstable forests differ".into());
            }
            for (comps, t, d, name) in [(&ul, &self.left, &dl, "left"), (&ur, &self.right, &dr, "right")] {
                if let Some(e) = comps.iter().flat_map(|c| &c.0).find(|&&e| !d[t.edge_piece[e]]) {
                    bad6.push(format!("{name} unstable edge {e} outside the unstable forest"));
                }
            }
        }
        let dsize = self.diff_left.len().max(self.diff_right.len());
        if dsize > l1 {
            bad6.push(format!("unstable forest of {dsize} pieces exceeds L1 = {l1}"));
        }
        clauses.push(ClauseResult {
            clause: 6,
            name: "unstable forests",
            pass: bad6.is_empty(),
            detail: bad6.first().cloned().unwrap_or_else(|| format!("{} / {} pieces", self.diff_left.len(), self.diff_right.len())),
        });

        // 7: β
        let (lc, nl) = ls.complement(self.pairs.iter().map(|p| &p.left));
        let (rc, nr) = rs.complement(self.pairs.iter().map(|p| &p.right));
        let mut bad7 = Vec::new();
        let mut beta = vec![usize::MAX; nl];
        let mut hit = vec![false; nr];
        for &(a, b) in &self.beta {
            if a >= lc.len() || b >= rc.len() || lc[a] == usize::MAX || rc[b] == usize::MAX {
                bad7.push(format!("β representative ({a}, {b}) not in a complementary component"));
                continue;
            }
            if beta[lc[a]] != usize::MAX || hit[rc[b]] {
                bad7.push(format!("β not injective at ({a}, {b})"));
            }
            beta[lc[a]] = rc[b];
            hit[rc[b]] = true;
        }
        if nl != nr || beta.iter().any(|&b| b == usize::MAX) {
            bad7.push(format!("β is not a bijection ({nl} vs {nr} components)"));
        }
        if bad7.is_empty() {
            for r in &self.refs {
                match r.right {
                    Some(rn) if beta[lc[r.left]] == rc[rn] => {}
                    _ => {
                        bad7.push(format!("(a) cluster of {} not identified", r.vertex));
                        break;
                    }
                }
            }
            'pairs: for (i, p) in self.pairs.iter().enumerate() {
                for (x, y) in [(p.left.nodes[0], p.right.nodes[0]), (p.left.ends().1, p.right.ends().1)] {
                    if beta[lc[x]] != rc[y] {
                        bad7.push(format!("(b) pair {i} endpoint adjacency not preserved"));
                        break 'pairs;
                    }
                }
            }
        }
        clauses.push(ClauseResult {
            clause: 7,
            name: "complement bijection",
            pass: bad7.is_empty(),
            detail: bad7.first().cloned().unwrap_or_else(|| format!("{nl} components")),
        });

        let needed_l1 = non_identical.max(ul.len()).max(ur.len()).max(dsize);
        let needed_l2 = diam.max(if non_identical > 0 { gap + 1 } else { 0 });
        CheckReport {
            clauses,
            needed_l1,
            needed_l2,
            unstable_left: ul.len(),
            unstable_right: ur.len(),
            max_unstable_diameter: diam,
            non_identical,
        }
    }

    /// Component of T − T_s per left node and of hull − T′_s per right node.
    pub fn complements(&self) -> ((Vec<usize>, usize), (Vec<usize>, usize)) {
        let (ls, rs) = self.sides();
        (
            ls.complement(self.pairs.iter().map(|p| &p.left)),
            rs.complement(self.pairs.iter().map(|p| &p.right)),
        )
    }
}

/// Identical pieces matched by key, in piece order.
fn match_pieces(l: &PieceTree, r: &PieceTree) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut bucket: BTreeMap<PieceKey, VecDeque<usize>> = BTreeMap::new();
    for q in 0..r.pieces.len() {
        bucket.entry(r.piece_key(q)).or_default().push_back(q);
    }
    let mut ml = vec![None; l.pieces.len()];
    let mut mr = vec![None; r.pieces.len()];
    for p in 0..l.pieces.len() {
        if let Some(q) = bucket.get_mut(&l.piece_key(p)).and_then(|b| b.pop_front()) {
            ml[p] = Some(q);
            mr[q] = Some(p);
        }
    }
    (ml, mr)
}

fn host_key(t: &PieceTree, e: usize) -> (usize, usize, u64) {
    let (u, v, w) = t.edges[e];
    let (a, b) = (t.phi[u], t.phi[v]);
    (a.min(b), a.max(b), w)
}

/// Maximal runs of edge-forest edges realized identically on both sides.
fn identical_runs(ls: &Side, rs: &Side) -> Vec<StablePair> {
    let (l, r) = (ls.t, rs.t);
    let (ml, mr) = match_pieces(l, r);
    let mut emap: Vec<Option<usize>> = vec![None; l.n_edges()];
    for (p, q) in ml.iter().enumerate() {
        let Some(q) = *q else { continue };
        if !l.pieces[p].is_edge() {
            continue;
        }
        let by_key: HashMap<_, usize> = r.pieces[q].edges.iter().map(|&e| (host_key(r, e), e)).collect();
        for &e in &l.pieces[p].edges {
            emap[e] = by_key.get(&host_key(l, e)).copied();
        }
    }
    let mut pool: BTreeMap<(usize, usize, u64), VecDeque<usize>> = BTreeMap::new();
    for (q, piece) in r.pieces.iter().enumerate() {
        if mr[q].is_none() && piece.is_edge() {
            for &e in &piece.edges {
                pool.entry(host_key(r, e)).or_default().push_back(e);
            }
        }
    }
    for (p, piece) in l.pieces.iter().enumerate() {
        if ml[p].is_none() && piece.is_edge() {
            for &e in &piece.edges {
                emap[e] = pool.get_mut(&host_key(l, e)).and_then(|b| b.pop_front());
            }
        }
    }
    let corr = |er: usize, vl: usize| -> usize {
        let (a, b, _) = r.edges[er];
        if r.phi[a] == l.phi[vl] {
            a
        } else {
            b
        }
    };
    let other = |t: &PieceTree, v: usize, e: usize| -> Option<(usize, usize)> { t.adj(v).iter().copied().find(|x| x.1 != e) };
    let mut used = vec![false; l.n_edges()];
    let mut out = Vec::new();
    for e0 in 0..l.n_edges() {
        let Some(f0) = emap[e0] else { continue };
        if used[e0] {
            continue;
        }
        used[e0] = true;
        let (a, b, _) = l.edges[e0];
        // grow in both directions from e0
        let mut halves: Vec<(Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>)> = Vec::new();
        for start in [a, b] {
            let (mut ln, mut le, mut rn, mut re) = (vec![start], Vec::new(), vec![corr(f0, start)], Vec::new());
            let (mut el, mut er) = (e0, f0);
            loop {
                let (vl, vr) = (*ln.last().unwrap(), *rn.last().unwrap());
                if !ls.interior_ok(vl) || !rs.interior_ok(vr) {
                    break;
                }
                let (Some((nl, el2)), Some((nr, er2))) = (other(l, vl, el), other(r, vr, er)) else { break };
                if used[el2] || emap[el2] != Some(er2) {
                    break;
                }
                used[el2] = true;
                ln.push(nl);
                le.push(el2);
                rn.push(nr);
                re.push(er2);
                el = el2;
                er = er2;
            }
            halves.push((ln, le, rn, re));
        }
        let (la, lea, ra, rea) = halves.remove(0);
        let (lb, leb, rb, reb) = halves.remove(0);
        // nodes: reverse(a-half) then b-half
        let mut lnodes: Vec<usize> = la.into_iter().rev().collect();
        lnodes.extend(lb);
        let mut ledges: Vec<usize> = lea.into_iter().rev().collect();
        ledges.push(e0);
        ledges.extend(leb);
        let mut rnodes: Vec<usize> = ra.into_iter().rev().collect();
        rnodes.extend(rb);
        let mut redges: Vec<usize> = rea.into_iter().rev().collect();
        redges.push(f0);
        redges.extend(reb);
        out.push(StablePair {
            left: Interval { nodes: lnodes, edges: ledges },
            right: Interval { nodes: rnodes, edges: redges },
            identical: true,
        });
    }
    out
}

/// Builds β, repairs conflicts by demoting pairs, then fixes the unstable forests and constants.
fn complete(
    g: &MetricGraph,
    left: PieceTree,
    right_full: PieceTree,
    right: PieceTree,
    right_map: Vec<usize>,
    f: Vec<usize>,
    refs: Vec<Reference>,
    mut pairs: Vec<StablePair>,
) -> Result<StableDecomposition> {
    let ls = Side::left(&left);
    let rs = Side::right(&right, &right_full, &right_map);
    let mut demoted = 0;
    let beta = loop {
        let (lc, nl) = ls.complement(pairs.iter().map(|p| &p.left));
        let (rc, nr) = rs.complement(pairs.iter().map(|p| &p.right));
        let mut bl = vec![usize::MAX; nl];
        let mut br = vec![usize::MAX; nr];
        let mut conflict = None;
        'scan: for (i, p) in pairs.iter().enumerate() {
            for (x, y) in [(p.left.nodes[0], p.right.nodes[0]), (p.left.ends().1, p.right.ends().1)] {
                let (a, b) = (lc[x], rc[y]);
                if bl[a] == usize::MAX && br[b] == usize::MAX {
                    bl[a] = b;
                    br[b] = a;
                } else if bl[a] != b {
                    conflict = Some(i);
                    break 'scan;
                }
            }
        }
        if conflict.is_none() && nl == 1 && nr == 1 {
            bl[0] = 0;
            br[0] = 0;
        }
        if conflict.is_none() && (nl != nr || bl.iter().any(|&b| b == usize::MAX)) {
            conflict = pairs.len().checked_sub(1);
        }
        if conflict.is_none() {
            for r in &refs {
                let ok = matches!(r.right, Some(rn) if bl[lc[r.left]] == rc[rn]);
                if !ok && r.right.is_some() {
                    let d = lc[r.left];
                    conflict = pairs
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| lc[p.left.nodes[0]] == d || lc[p.left.ends().1] == d)
                        .min_by_key(|(i, p)| (p.left.weight(&left), *i))
                        .map(|(i, _)| i);
                    if conflict.is_some() {
                        break;
                    }
                }
            }
        }
        match conflict {
            Some(i) => {
                pairs.remove(i);
                demoted += 1;
            }
            None => {
                let mut rep_l = vec![usize::MAX; nl];
                for (v, &c) in lc.iter().enumerate() {
                    if c != usize::MAX && rep_l[c] == usize::MAX {
                        rep_l[c] = v;
                    }
                }
                let mut rep_r = vec![usize::MAX; nr];
                for (v, &c) in rc.iter().enumerate() {
                    if c != usize::MAX && rep_r[c] == usize::MAX {
                        rep_r[c] = v;
                    }
                }
                break (0..nl).map(|c| (rep_l[c], rep_r[bl[c]])).collect::<Vec<_>>();
            }
        }
    };
    for p in &mut pairs {
        p.identical = realized_identically(&left, &right, p);
    }

    // unstable forests: unmatched pieces and pieces carrying unstable edges, refined until complements agree
    let (ml, mr) = match_pieces(&left, &right);
    let mut dl: Vec<bool> = ml.iter().map(|m| m.is_none()).collect();
    let mut dr: Vec<bool> = mr.iter().map(|m| m.is_none()).collect();
    for (comp, _) in ls.unstable_edge_components(pairs.iter().map(|p| &p.left)) {
        for e in comp {
            dl[left.edge_piece[e]] = true;
        }
    }
    for (comp, _) in rs.unstable_edge_components(pairs.iter().map(|p| &p.right)) {
        for e in comp {
            dr[right.edge_piece[e]] = true;
        }
    }
    loop {
        let cl = ls.diff_complement(&dl);
        let cr = rs.diff_complement(&dr);
        let sl = multiset(cl.iter().map(|s| s.0.clone()));
        let sr = multiset(cr.iter().map(|s| s.0.clone()));
        if sl == sr {
            break;
        }
        for (comps, mine, theirs, d) in [(&cl, &sl, &sr, &mut dl), (&cr, &sr, &sl, &mut dr)] {
            for (sig, &count) in mine {
                let have = theirs.get(sig).copied().unwrap_or(0);
                if count > have {
                    let excess = count - have;
                    for s in comps.iter().filter(|s| &s.0 == sig).rev().take(excess) {
                        for &p in &s.1 {
                            d[p] = true;
                        }
                    }
                }
            }
        }
    }
    let diff_left: Vec<usize> = (0..dl.len()).filter(|&p| dl[p]).collect();
    let diff_right: Vec<usize> = (0..dr.len()).filter(|&p| dr[p]).collect();
    let mut d = StableDecomposition {
        left,
        right_full,
        right,
        right_map,
        f,
        pairs,
        beta,
        diff_left,
        diff_right,
        refs,
        l1: 0,
        l2: 0,
        demoted,
    };
    // constants are measured; callers run the checker at them
    let rep = d.check_at(g, usize::MAX, u64::MAX);
    d.l1 = rep.needed_l1;
    d.l2 = rep.needed_l2;
    Ok(d)
}

/// Stable decomposition between `left` and the hull of F inside `right`, with 𝒴₀ = `y0`.
pub fn build_decomposition(g: &MetricGraph, left: &StableTree, right: &StableTree, f: &[usize], y0: &[usize]) -> Result<StableDecomposition> {
    let mut marks = Vec::with_capacity(f.len());
    for &x in f {
        let a = left
            .tree
            .node_of_mark(x)
            .ok_or_else(|| Error::Argument(format!("{x} is not marked in the left tree")))?;
        let b = right
            .tree
            .node_of_mark(x)
            .ok_or_else(|| Error::Argument(format!("{x} is not marked in the right tree")))?;
        marks.push((x, a, b));
    }
    let keep = right.tree.hull(&marks.iter().map(|m| m.2).collect::<Vec<_>>());
    let (rt, rmap) = right.tree.restrict(&keep)?;
    let mut inv = vec![usize::MAX; right.tree.n_nodes()];
    for (i, &o) in rmap.iter().enumerate() {
        inv[o] = i;
    }
    let mut refs: Vec<Reference> = marks
        .iter()
        .map(|&(x, a, b)| Reference {
            vertex: x,
            left: a,
            right: Some(inv[b]),
        })
        .collect();
    for &y in y0 {
        let a = left
            .node_of_point(y)
            .ok_or_else(|| Error::Argument(format!("{y} is not a cluster point on the left")))?;
        let p = right
            .piece_of_point(y)
            .ok_or_else(|| Error::Argument(format!("{y} is not a cluster point on the right")))?;
        let b = right.tree.pieces[p].nodes.iter().map(|&v| inv[v]).find(|&v| v != usize::MAX);
        refs.push(Reference { vertex: y, left: a, right: b });
    }
    let pairs = {
        let ls = Side::left(&left.tree);
        let rs = Side::right(&rt, &right.tree, &rmap);
        identical_runs(&ls, &rs)
    };
    complete(g, left.tree.clone(), right.tree.clone(), rt, rmap, f.to_vec(), refs, pairs)
}

/// Hand-built decomposition, checked as given.
#[allow(clippy::too_many_arguments)]
pub fn assemble_decomposition(
    left: PieceTree,
    right_full: PieceTree,
    keep: &[bool],
    f: Vec<usize>,
    pairs: Vec<StablePair>,
    beta: Vec<(usize, usize)>,
    diff: (Vec<usize>, Vec<usize>),
    refs: Vec<Reference>,
    l: (usize, u64),
) -> Result<StableDecomposition> {
    let (right, right_map) = right_full.restrict(keep)?;
    Ok(StableDecomposition {
        left,
        right_full,
        right,
        right_map,
        f,
        pairs,
        beta,
        diff_left: diff.0,
        diff_right: diff.1,
        refs,
        l1: l.0,
        l2: l.1,
        demoted: 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GluingAudit {
    pub endpoints: usize,
    pub failures: usize,
    pub marks: usize,
    pub mark_failures: usize,
}

/// Endpoint gluing data: each stable endpoint and each marked point lands in the β-image of its component.
pub fn gluing_audit(d: &StableDecomposition) -> GluingAudit {
    let ((lc, nl), (rc, _)) = d.complements();
    let mut beta = vec![usize::MAX; nl];
    for &(a, b) in &d.beta {
        beta[lc[a]] = rc[b];
    }
    let mut audit = GluingAudit {
        endpoints: 0,
        failures: 0,
        marks: 0,
        mark_failures: 0,
    };
    for p in &d.pairs {
        for (x, y) in [(p.left.nodes[0], p.right.nodes[0]), (p.left.ends().1, p.right.ends().1)] {
            audit.endpoints += 1;
            let same_mark = d.left.mark_at(x) == d.right.mark_at(y);
            if beta[lc[x]] != rc[y] || !same_mark {
                audit.failures += 1;
            }
        }
    }
    for &f in &d.f {
        audit.marks += 1;
        match (d.left.node_of_mark(f), d.right.node_of_mark(f)) {
            (Some(a), Some(b)) if beta[lc[a]] == rc[b] => {}
            _ => audit.mark_failures += 1,
        }
    }
    audit
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainResult {
    pub decomposition: StableDecomposition,
    /// Largest link constants.
    pub link_l1: usize,
    pub link_l2: u64,
    /// (4 L1², 4 L2²) for the largest link constants.
    pub bound: (usize, u64),
    pub within_bound: bool,
    pub audit: GluingAudit,
}

/// Composes a chain of decompositions whose consecutive middle trees coincide.
pub fn chain_compose(g: &MetricGraph, decomps: &[StableDecomposition]) -> Result<ChainResult> {
    let first = decomps.first().ok_or_else(|| Error::Argument("empty chain".into()))?;
    for (i, w) in decomps.windows(2).enumerate() {
        if w[0].right != w[1].left || w[0].right.n_nodes() != w[0].right_full.n_nodes() {
            return Err(Error::Argument(format!("links {i} and {} do not share their middle tree", i + 1)));
        }
    }
    let mut acc = first.clone();
    for next in &decomps[1..] {
        acc = compose_two(g, &acc, next)?;
    }
    let link_l1 = decomps.iter().map(|d| d.l1).max().unwrap_or(0).max(1);
    let link_l2 = decomps.iter().map(|d| d.l2).max().unwrap_or(0).max(1);
    let bound = (4 * link_l1 * link_l1, 4 * link_l2 * link_l2);
    let within_bound = acc.check_at(g, bound.0, bound.1).pass();
    let audit = gluing_audit(&acc);
    Ok(ChainResult {
        decomposition: acc,
        link_l1,
        link_l2,
        bound,
        within_bound,
        audit,
    })
}

fn compose_two(g: &MetricGraph, a: &StableDecomposition, b: &StableDecomposition) -> Result<StableDecomposition> {
    // middle edge -> (pair of a, index along it) and (pair of b, index along it)
    let mid = &a.right;
    let mut in_a = vec![None; mid.n_edges()];
    for (i, p) in a.pairs.iter().enumerate() {
        for (k, &e) in p.right.edges.iter().enumerate() {
            in_a[e] = Some((i, k));
        }
    }
    let mut in_b = vec![None; mid.n_edges()];
    for (j, p) in b.pairs.iter().enumerate() {
        for (k, &e) in p.left.edges.iter().enumerate() {
            in_b[e] = Some((j, k));
        }
    }
    let mut groups: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for e in 0..mid.n_edges() {
        if let (Some((i, ka)), Some((j, kb))) = (in_a[e], in_b[e]) {
            groups.entry((i, j)).or_default().push((ka, kb));
        }
    }
    let mut pairs = Vec::new();
    for ((i, j), mut ks) in groups {
        ks.sort_unstable();
        let (pa, pb) = (&a.pairs[i], &b.pairs[j]);
        // intersection of two paths in a tree is a path: consecutive in both
        let lo = ks[0].0;
        let hi = ks[ks.len() - 1].0;
        let forward = ks.len() == 1 || ks[1].1 > ks[0].1;
        let left = Interval {
            nodes: pa.left.nodes[lo..=hi + 1].to_vec(),
            edges: pa.left.edges[lo..=hi].to_vec(),
        };
        // middle node at position t of pa.right equals node at position s of pb.left
        let mid_nodes = &pa.right.nodes[lo..=hi + 1];
        let pos_b: HashMap<usize, usize> = pb.left.nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let mut rnodes = Vec::with_capacity(mid_nodes.len());
        for v in mid_nodes {
            let k = *pos_b
                .get(v)
                .ok_or_else(|| Error::Invariant("stable intervals meet in a non-path".into()))?;
            rnodes.push(pb.right.nodes[k]);
        }
        let (blo, bhi) = (ks.iter().map(|k| k.1).min().unwrap(), ks.iter().map(|k| k.1).max().unwrap());
        let mut redges: Vec<usize> = pb.right.edges[blo..=bhi].to_vec();
        if !forward {
            redges.reverse();
        }
        pairs.push(StablePair {
            left,
            right: Interval { nodes: rnodes, edges: redges },
            identical: false,
        });
    }
    let mut refs = Vec::new();
    for r in &a.refs {
        if let Some(m) = r.right {
            if let Some(rb) = b.refs.iter().find(|x| x.vertex == r.vertex && x.left == m) {
                refs.push(Reference {
                    vertex: r.vertex,
                    left: r.left,
                    right: rb.right,
                });
            } else if let Some(rb) = b.refs.iter().find(|x| x.vertex == r.vertex) {
                refs.push(Reference {
                    vertex: r.vertex,
                    left: r.left,
                    right: rb.right,
                });
            }
        }
    }
    complete(
        g,
        a.left.clone(),
        b.right_full.clone(),
        b.right.clone(),
        b.right_map.clone(),
        a.f.clone(),
        refs,
        pairs,
    )
}
