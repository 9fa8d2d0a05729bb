use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::HftData;
use crate::bits::Bits;
use crate::cube::{dual_cube_complex, CubeComplex, WallSpace};
use crate::error::{capacity, Error, Result};
use crate::hhs::Relation;

/// Duality is checked exhaustively up to this many vertices.
const DUAL_LIMIT: usize = 3000;
const MEDIAN_SAMPLES: usize = 2000;

/// Q: the 0-consistent tuples, in the vertex order of the attached cube complex.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistentSet {
    pub tuples: Vec<Vec<usize>>,
    #[serde(skip)]
    pub complex: CubeComplex,
    /// First wall label of each domain's tree edges.
    pub offsets: Vec<usize>,
    /// A triple whose median leaves Q.
    pub median_witness: Option<(usize, usize, usize)>,
    /// Wallspace dual equals Q vertex-for-vertex; None when too large to check.
    pub dual_ok: Option<bool>,
    #[serde(skip)]
    index: HashMap<Vec<usize>, usize>,
}

impl ConsistentSet {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn find(&self, t: &[usize]) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn l1(&self, a: usize, b: usize) -> usize {
        self.complex.l1(a, b)
    }

    pub fn is_median_closed(&self) -> bool {
        self.median_witness.is_none()
    }
}

/// Orientation bits of a tuple, trees concatenated in domain order.
pub fn encode_tuple(hft: &HftData, t: &[usize]) -> Bits {
    let mut b = Vec::new();
    for (u, tree) in hft.trees.iter().enumerate() {
        tree.encode_into(t[u], &mut b);
    }
    Bits::from_bools(&b)
}

struct Constraint {
    u: usize,
    v: usize,
}

fn constraints(hft: &HftData) -> Vec<Vec<Constraint>> {
    let m = hft.n_domains();
    let mut by = (0..m).map(|_| Vec::new()).collect::<Vec<Vec<Constraint>>>();
    for u in 0..m {
        for v in 0..m {
            if u != v && !matches!(hft.rel[u][v], Relation::Orth | Relation::Equal) {
                by[u].push(Constraint { u, v });
            }
        }
    }
    by
}

/// Flip-search from the first marked tuple.
pub fn consistent_set(hft: &HftData, guard: usize) -> Result<ConsistentSet> {
    if !hft.report.pass() {
        let c = hft.report.first_failure().expect("failing report");
        return Err(Error::Argument(format!("HFT invalid at clause {} ({})", c.clause, c.name)));
    }
    if hft.n_marks() == 0 {
        return Err(Error::Argument("HFT has no marked points".into()));
    }
    let cons = constraints(hft);
    let seed = hft.marked_tuple(0);
    if !hft.consistent(&seed) {
        return Err(Error::Invariant(format!("marked tuple {seed:?} is not 0-consistent")));
    }
    let mut index = HashMap::from([(seed.clone(), 0usize)]);
    let mut tuples = vec![seed];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for u in 0..hft.n_domains() {
            for &(w, _) in hft.trees[u].adj(tuples[i][u]) {
                let mut t = tuples[i].clone();
                t[u] = w;
                if index.contains_key(&t) || !cons[u].iter().all(|c| hft.pair_ok(c.u, c.v, t[c.u], t[c.v])) {
                    continue;
                }
                capacity("0-consistent tuples", tuples.len() + 1, guard)?;
                index.insert(t.clone(), tuples.len());
                tuples.push(t);
                queue.push_back(tuples.len() - 1);
            }
        }
    }
    let mut offsets = Vec::with_capacity(hft.n_domains());
    let mut total = 0;
    for t in &hft.trees {
        offsets.push(total);
        total += t.n_edges();
    }
    let bits: Vec<Bits> = tuples.iter().map(|t| encode_tuple(hft, t)).collect();
    let complex = CubeComplex::from_vertices((0..total).collect(), bits.clone())?;
    // from_vertices keeps first-seen order and tuples are distinct, so indices agree
    debug_assert!(bits.iter().enumerate().all(|(i, b)| complex.find(b) == Some(i)));
    let median_witness = complex.median_closed(MEDIAN_SAMPLES, 0x5eed);
    let dual_ok = (tuples.len() <= DUAL_LIMIT).then(|| dual_matches(&complex));
    Ok(ConsistentSet {
        tuples,
        complex,
        offsets,
        median_witness,
        dual_ok,
        index,
    })
}

/// Dualize the walls of Q (as subsets of Q) and compare vertex sets.
fn dual_matches(cx: &CubeComplex) -> bool {
    let n = cx.n_vertices();
    if cx.n_walls() == 0 {
        return n == 1;
    }
    let walls: Vec<Bits> = (0..cx.n_walls())
        .map(|w| Bits::from_bools(&(0..n).map(|i| cx.vertex(i).get(w)).collect::<Vec<_>>()))
        .collect();
    let Ok(ws) = WallSpace::new(n, walls) else { return false };
    match dual_cube_complex(&ws) {
        Ok(d) => d.n_vertices() == n && d.vertices().iter().all(|v| cx.find(v).is_some()),
        Err(_) => false,
    }
}
