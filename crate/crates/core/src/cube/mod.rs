//! Finite CAT(0) cube complexes as median sets of wall orientations.

mod convex;
mod deletion;
mod metric;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{capacity, Error, Result};

pub use convex::{convex_embedding_check, ConvexCertificate, ConvexReport};
pub use deletion::delete_hyperplanes;
pub use metric::{lp_distance, CubePoint, LpNorm, LpResult};

pub const VERTEX_GUARD: usize = 200_000;

/// Finite wallspace: each wall is the set of points on its side 1.
#[derive(Clone, Debug)]
pub struct WallSpace {
    pub points: usize,
    pub walls: Vec<Bits>,
}

impl WallSpace {
    pub fn new(points: usize, walls: Vec<Bits>) -> Result<Self> {
        for (i, w) in walls.iter().enumerate() {
            if w.len() != points {
                return Err(Error::Argument(format!("wall {i} has wrong width")));
            }
            let ones = w.count_ones();
            if ones == 0 || ones == points {
                return Err(Error::Argument(format!("wall {i} has an empty side")));
            }
        }
        Ok(WallSpace { points, walls })
    }

    /// Walls of a graph given by edge-midpoint cuts of a tree.
    pub fn from_tree(tree: &crate::space::MetricGraph) -> Result<Self> {
        if !tree.is_tree() {
            return Err(Error::Argument("edge walls need a tree".into()));
        }
        let n = tree.n();
        let walls = tree
            .edges()
            .iter()
            .map(|&(u, v, _)| {
                let mut side = Bits::zeros(n);
                for x in 0..n {
                    if tree.d(x, v) < tree.d(x, u) {
                        side.set(x, true);
                    }
                }
                side
            })
            .collect();
        WallSpace::new(n, walls)
    }
}

/// Vertices are orientations (bit i = side of wall i); edges are single flips.
#[derive(Clone, Debug)]
pub struct CubeComplex {
    labels: Vec<usize>,
    vertices: Vec<Bits>,
    index: HashMap<Bits, usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeDoc {
    pub walls: Vec<usize>,
    pub vertices: Vec<Vec<bool>>,
}

impl CubeComplex {
    /// Build from an explicit vertex set; duplicates are merged.
    pub fn from_vertices(labels: Vec<usize>, vertices: Vec<Bits>) -> Result<Self> {
        capacity("cube complex vertices", vertices.len(), VERTEX_GUARD)?;
        if vertices.is_empty() {
            return Err(Error::Argument("cube complex needs a vertex".into()));
        }
        let m = labels.len();
        let mut index = HashMap::with_capacity(vertices.len());
        let mut uniq = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.len() != m {
                return Err(Error::Argument("orientation width mismatch".into()));
            }
            if !index.contains_key(&v) {
                index.insert(v.clone(), uniq.len());
                uniq.push(v);
            }
        }
        let mut adj = vec![Vec::new(); uniq.len()];
        for (i, v) in uniq.iter().enumerate() {
            for w in 0..m {
                if let Some(&j) = index.get(&v.flipped(w)) {
                    adj[i].push((w, j));
                }
            }
        }
        let cx = CubeComplex {
            labels,
            vertices: uniq,
            index,
            adj,
        };
        if !cx.is_connected() {
            return Err(Error::Invariant("vertex set is not flip-connected".into()));
        }
        Ok(cx)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_walls(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn vertex(&self, i: usize) -> &Bits {
        &self.vertices[i]
    }

    pub fn vertices(&self) -> &[Bits] {
        &self.vertices
    }

    pub fn find(&self, b: &Bits) -> Option<usize> {
        self.index.get(b).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adj[i]
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn l1(&self, a: usize, b: usize) -> usize {
        self.vertices[a].hamming(&self.vertices[b])
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut q = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = q.pop_front() {
            for &(_, v) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    q.push_back(v);
                }
            }
        }
        count == self.vertices.len()
    }

    pub fn median(&self, a: usize, b: usize, c: usize) -> Option<usize> {
        self.find(&Bits::majority(
            &self.vertices[a],
            &self.vertices[b],
            &self.vertices[c],
        ))
    }

    /// Median closure over all triples when small, else over `samples` seeded triples.
    pub fn median_closed(&self, samples: usize, seed: u64) -> Option<(usize, usize, usize)> {
        let n = self.vertices.len();
        if n <= 40 {
            for a in 0..n {
                for b in a..n {
                    for c in b..n {
                        if self.median(a, b, c).is_none() {
                            return Some((a, b, c));
                        }
                    }
                }
            }
            return None;
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if self.median(a, b, c).is_none() {
                return Some((a, b, c));
            }
        }
        None
    }

    /// Crossing relation: all four quadrants are realized by vertices.
    pub fn crossing_matrix(&self) -> Vec<Vec<bool>> {
        let m = self.labels.len();
        let n = self.vertices.len();
        let cols: Vec<Bits> = (0..m)
            .map(|w| {
                let mut c = Bits::zeros(n);
                for (i, v) in self.vertices.iter().enumerate() {
                    if v.get(w) {
                        c.set(i, true);
                    }
                }
                c
            })
            .collect();
        let mut out = vec![vec![false; m]; m];
        for a in 0..m {
            let na = cols[a].complement();
            for b in a + 1..m {
                let nb = cols[b].complement();
                let cross = cols[a].intersects(&cols[b])
                    && cols[a].intersects(&nb)
                    && na.intersects(&cols[b])
                    && na.intersects(&nb);
                out[a][b] = cross;
                out[b][a] = cross;
            }
        }
        out
    }

    /// Largest pairwise-crossing family of walls.
    pub fn dimension(&self) -> usize {
        let cross = self.crossing_matrix();
        let m = cross.len();
        if self.vertices.len() <= 1 {
            return 0;
        }
        let mut best = 0;
        let all: Vec<usize> = (0..m).collect();
        bron_kerbosch(&cross, &mut Vec::new(), all, Vec::new(), &mut best);
        best
    }

    /// Walls incident to vertex `i` that pairwise span squares at `i`.
    pub fn cubes_at(&self, i: usize) -> Vec<Vec<usize>> {
        let flips: Vec<usize> = self.adj[i].iter().map(|&(w, _)| w).collect();
        let k = flips.len();
        let mut ok = vec![vec![false; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let s = self.vertices[i].flipped(flips[a]).flipped(flips[b]);
                let sq = self.index.contains_key(&s);
                ok[a][b] = sq;
                ok[b][a] = sq;
            }
        }
        let mut out = Vec::new();
        let all: Vec<usize> = (0..k).collect();
        maximal_cliques(&ok, &mut Vec::new(), all, Vec::new(), &mut out);
        out.into_iter()
            .map(|c| {
                let mut s: Vec<usize> = c.into_iter().map(|j| flips[j]).collect();
                s.sort_unstable();
                s
            })
            .filter(|s| self.is_cube(i, s))
            .collect()
    }

    fn is_cube(&self, i: usize, walls: &[usize]) -> bool {
        let k = walls.len();
        (0u64..1 << k).all(|mask| {
            let mut b = self.vertices[i].clone();
            for (j, &w) in walls.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    b.flip(w);
                }
            }
            self.index.contains_key(&b)
        })
    }

    pub fn to_doc(&self) -> CubeDoc {
        CubeDoc {
            walls: self.labels.clone(),
            vertices: self
                .vertices
                .iter()
                .map(|v| (0..v.len()).map(|i| v.get(i)).collect())
                .collect(),
        }
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph {name} {{\n");
        for i in 0..self.vertices.len() {
            s.push_str(&format!("  v{i};\n"));
        }
        for (i, a) in self.adj.iter().enumerate() {
            for &(w, j) in a {
                if i < j {
                    s.push_str(&format!("  v{i} -- v{j} [label=\"{}\"];\n", self.labels[w]));
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: &mut Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    best: &mut usize,
) {
    if p.is_empty() && x.is_empty() {
        *best = (*best).max(r.len());
        return;
    }
    if r.len() + p.len() <= *best {
        return;
    }
    let pivot = p.iter().chain(&x).copied().max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count());
    let cand: Vec<usize> = match pivot {
        Some(u) => p.iter().copied().filter(|&v| !adj[u][v]).collect(),
        None => p.clone(),
    };
    let mut p = p;
    let mut x = x;
    for v in cand {
        r.push(v);
        let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r, np, nx, best);
        r.pop();
        p.retain(|&u| u != v);
        x.push(v);
    }
}

fn maximal_cliques(
    adj: &[Vec<bool>],
    r: &mut Vec<usize>,
    p: Vec<usize>,
    x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    let mut p = p;
    let mut x = x;
    while let Some(&v) = p.first() {
        r.push(v);
        let np = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
        maximal_cliques(adj, r, np, nx, out);
        r.pop();
        p.remove(0);
        x.push(v);
    }
}

/// Sageev dual: consistent orientations reachable by flips from the principal orientation of point 0.
pub fn dual_cube_complex(ws: &WallSpace) -> Result<CubeComplex> {
    let m = ws.walls.len();
    // halfspace h = 2*w + side; meets[h1][h2] iff some point lies in both
    let half: Vec<Bits> = ws
        .walls
        .iter()
        .flat_map(|w| [w.complement(), w.clone()])
        .collect();
    let meets: Vec<Vec<bool>> = half
        .iter()
        .map(|a| half.iter().map(|b| a.intersects(b)).collect())
        .collect();
    let seed = Bits::from_bools(&ws.walls.iter().map(|w| w.get(0)).collect::<Vec<_>>());
    let mut index = HashMap::new();
    let mut verts = vec![seed.clone()];
    index.insert(seed, 0usize);
    let mut q = VecDeque::from([0usize]);
    while let Some(i) = q.pop_front() {
        for w in 0..m {
            let cand = verts[i].flipped(w);
            if index.contains_key(&cand) {
                continue;
            }
            let hw = 2 * w + cand.get(w) as usize;
            let consistent = (0..m)
                .filter(|&u| u != w)
                .all(|u| meets[hw][2 * u + cand.get(u) as usize]);
            if consistent {
                capacity("dual complex vertices", verts.len() + 1, VERTEX_GUARD)?;
                index.insert(cand.clone(), verts.len());
                q.push_back(verts.len());
                verts.push(cand);
            }
        }
    }
    CubeComplex::from_vertices((0..m).collect(), verts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricGraph;

    #[test]
    fn tree_walls_dualize_to_tree() {
        let t = MetricGraph::from_parents(&[0, 0, 0, 1, 1, 2]).unwrap();
        let cx = dual_cube_complex(&WallSpace::from_tree(&t).unwrap()).unwrap();
        assert_eq!(cx.n_vertices(), 6);
        assert_eq!(cx.n_edges(), 5);
        assert_eq!(cx.dimension(), 1);
    }

    #[test]
    fn crossing_walls_make_a_square() {
        let ws = WallSpace::new(
            4,
            vec![
                Bits::from_bools(&[false, true, false, true]),
                Bits::from_bools(&[false, false, true, true]),
            ],
        )
        .unwrap();
        let cx = dual_cube_complex(&ws).unwrap();
        assert_eq!(cx.n_vertices(), 4);
        assert_eq!(cx.dimension(), 2);
        assert_eq!(cx.cubes_at(0), vec![vec![0, 1]]);
    }

    #[test]
    fn degenerate_wall_rejected() {
        assert!(WallSpace::new(2, vec![Bits::from_bools(&[true, true])]).is_err());
    }
}
