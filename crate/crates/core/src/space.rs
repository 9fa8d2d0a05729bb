//! Finite weighted graphs with exact all-pairs distances.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DELTA_GUARD: usize = 400;
const TRI_TOL: f64 = 1e-9;

/// Connected graph with positive integer weights and a dense distance table.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    n: usize,
    edges: Vec<(usize, usize, u64)>,
    adj: Vec<Vec<(usize, u64)>>,
    dist: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphDoc {
    pub vertices: usize,
    pub edges: Vec<[u64; 3]>,
}

impl MetricGraph {
    pub fn new(n: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Format("graph has no vertices".into()));
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Format(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(Error::Format(format!("self-loop at {u}")));
            }
            if w == 0 {
                return Err(Error::Format(format!("nonpositive weight on ({u},{v})")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::Format(format!("duplicate edge ({u},{v})")));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
            norm.push((key.0, key.1, w));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        norm.sort_unstable();
        let mut g = MetricGraph {
            n,
            edges: norm,
            adj,
            dist: Vec::new(),
        };
        g.dist = vec![u32::MAX; n * n];
        for s in 0..n {
            let row = g.dijkstra(s);
            for (t, d) in row.into_iter().enumerate() {
                if d == u64::MAX {
                    return Err(Error::Format(format!("graph disconnected: {s} cannot reach {t}")));
                }
                if d >= u32::MAX as u64 {
                    return Err(Error::Format("distance exceeds table range".into()));
                }
                g.dist[s * n + t] = d as u32;
            }
        }
        Ok(g)
    }

    pub fn from_doc(doc: &GraphDoc) -> Result<Self> {
        let edges: Vec<_> = doc
            .edges
            .iter()
            .map(|e| (e[0] as usize, e[1] as usize, e[2]))
            .collect();
        Self::new(doc.vertices, &edges)
    }

    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            vertices: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(u, v, w)| [u as u64, v as u64, w])
                .collect(),
        }
    }

    pub fn path(n: usize) -> Self {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i, 1)).collect();
        Self::new(n, &e).expect("path graph")
    }

    pub fn cycle(n: usize) -> Self {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
        Self::new(n, &e).expect("cycle graph")
    }

    pub fn grid(w: usize, h: usize) -> Self {
        let mut e = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    e.push((v, v + 1, 1));
                }
                if y + 1 < h {
                    e.push((v, v + w, 1));
                }
            }
        }
        Self::new(w * h, &e).expect("grid graph")
    }

    /// Unit-weight tree from a parent array; `parent[0]` is ignored.
    pub fn from_parents(parent: &[usize]) -> Result<Self> {
        let e: Vec<_> = (1..parent.len()).map(|i| (parent[i], i, 1)).collect();
        Self::new(parent.len(), &e)
    }

    fn dijkstra(&self, s: usize) -> Vec<u64> {
        let mut d = vec![u64::MAX; self.n];
        let mut heap = BinaryHeap::new();
        d[s] = 0;
        heap.push(Reverse((0u64, s)));
        while let Some(Reverse((du, u))) = heap.pop() {
            if du > d[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = du + w;
                if nd < d[v] {
                    d[v] = nd;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, u64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.adj[v]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<u64> {
        self.adj[u]
            .binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| self.adj[u][i].1)
    }

    #[inline]
    pub fn d(&self, u: usize, v: usize) -> u64 {
        self.dist[u * self.n + v] as u64
    }

    pub fn is_unit(&self) -> bool {
        self.edges.iter().all(|e| e.2 == 1)
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n
    }

    pub fn diameter(&self) -> u64 {
        self.dist.iter().copied().max().unwrap_or(0) as u64
    }

    pub fn dist_to_set(&self, set: &[usize], v: usize) -> u64 {
        set.iter().map(|&s| self.d(s, v)).min().unwrap_or(u64::MAX)
    }

    pub fn set_distance(&self, a: &[usize], b: &[usize]) -> u64 {
        a.iter()
            .map(|&x| self.dist_to_set(b, x))
            .min()
            .unwrap_or(u64::MAX)
    }

    /// Closest point of `set` to `v`, least id on ties.
    pub fn project(&self, set: &[usize], v: usize) -> Option<usize> {
        set.iter().copied().min_by_key(|&s| (self.d(s, v), s))
    }

    /// Lexicographically least shortest path from `u` to `v`.
    pub fn geodesic(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = vec![u];
        let mut cur = u;
        while cur != v {
            let dc = self.d(cur, v);
            let next = self.adj[cur]
                .iter()
                .find(|&&(x, w)| w + self.d(x, v) == dc)
                .map(|&(x, _)| x)
                .expect("distance table consistent");
            out.push(next);
            cur = next;
        }
        out
    }

    /// Union of all geodesics between points of `f`.
    pub fn hull(&self, f: &[usize]) -> Result<Vec<usize>> {
        if f.is_empty() {
            return Err(Error::Argument("hull of empty set".into()));
        }
        let mut out = Vec::new();
        for v in 0..self.n {
            let on = f.iter().enumerate().any(|(i, &x)| {
                f[i..]
                    .iter()
                    .any(|&y| self.d(x, v) + self.d(v, y) == self.d(x, y))
            });
            if on {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Vertices within distance `r` of `set`.
    pub fn neighborhood(&self, set: &[usize], r: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&v| (self.dist_to_set(set, v) as f64) <= r)
            .collect()
    }

    /// Unit-weight subdivision; original vertices keep their ids.
    pub fn subdivided(&self) -> MetricGraph {
        if self.is_unit() {
            return self.clone();
        }
        let mut n = self.n;
        let mut e = Vec::new();
        for &(u, v, w) in &self.edges {
            let mut prev = u;
            for _ in 1..w {
                e.push((prev, n, 1));
                prev = n;
                n += 1;
            }
            e.push((prev, v, 1));
        }
        MetricGraph::new(n, &e).expect("subdivision of a valid graph")
    }
}

/// Four-point hyperbolicity constant; exact half-integer.
pub fn hyperbolicity_delta(g: &MetricGraph) -> Result<f64> {
    if g.n() > DELTA_GUARD {
        return Err(Error::Capacity {
            what: "four-point scan vertices",
            size: g.n(),
            limit: DELTA_GUARD,
        });
    }
    let n = g.n();
    let mut best = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            let ab = g.d(a, b);
            for c in b + 1..n {
                let ac = g.d(a, c);
                let bc = g.d(b, c);
                for d in c + 1..n {
                    let s1 = ab + g.d(c, d);
                    let s2 = ac + g.d(b, d);
                    let s3 = g.d(a, d) + bc;
                    let mut s = [s1, s2, s3];
                    s.sort_unstable();
                    best = best.max(s[2] - s[1]);
                }
            }
        }
    }
    Ok(best as f64 / 2.0)
}

/// Vertex sequence indexed by `0..len` with a claimed (1, C) constant.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteQuasiGeodesic {
    pub vertices: Vec<usize>,
    pub c: f64,
}

impl DiscreteQuasiGeodesic {
    pub fn new(g: &MetricGraph, vertices: Vec<usize>, c: f64) -> Result<Self> {
        let q = DiscreteQuasiGeodesic { vertices, c };
        let m = q.measured_constant(g);
        if m > c + 1e-12 {
            return Err(Error::Geometry(format!(
                "sequence is a (1,{m})-quasigeodesic, not (1,{c})"
            )));
        }
        Ok(q)
    }

    /// Tie-broken geodesic as a unit-speed sequence; requires unit weights.
    pub fn from_geodesic(g: &MetricGraph, u: usize, v: usize) -> Result<Self> {
        if !g.is_unit() {
            return Err(Error::Argument("unit-speed geodesic needs a unit-weight graph".into()));
        }
        Ok(DiscreteQuasiGeodesic {
            vertices: g.geodesic(u, v),
            c: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn at(&self, t: usize) -> usize {
        self.vertices[t.min(self.len())]
    }

    /// Smallest C with |s−t| − C ≤ d ≤ |s−t| + C over all pairs.
    pub fn measured_constant(&self, g: &MetricGraph) -> f64 {
        let mut c = 0i64;
        for s in 0..self.vertices.len() {
            for t in s + 1..self.vertices.len() {
                let d = g.d(self.vertices[s], self.vertices[t]) as i64;
                c = c.max((d - (t - s) as i64).abs());
            }
        }
        c as f64
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        DiscreteQuasiGeodesic { vertices: v, c: self.c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonTriangle {
    pub points: [(f64, f64); 3],
    /// d(x,y), d(y,z), d(x,z)
    pub sides: [f64; 3],
}

impl ComparisonTriangle {
    /// Canonical placement: x at origin, y on the positive axis, z in the upper half-plane.
    pub fn new(dxy: f64, dyz: f64, dxz: f64) -> Result<Self> {
        for &s in &[dxy, dyz, dxz] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Geometry(format!("invalid side length {s}")));
            }
        }
        let slack = TRI_TOL * (1.0 + dxy + dyz + dxz);
        if dxy > dyz + dxz + slack || dyz > dxy + dxz + slack || dxz > dxy + dyz + slack {
            return Err(Error::Geometry(format!(
                "sides ({dxy},{dyz},{dxz}) violate the triangle inequality"
            )));
        }
        let z = if dxy == 0.0 {
            (dxz, 0.0)
        } else {
            let zx = (dxy * dxy + dxz * dxz - dyz * dyz) / (2.0 * dxy);
            let zy = (dxz * dxz - zx * zx).max(0.0).sqrt();
            (zx, zy)
        };
        Ok(ComparisonTriangle {
            points: [(0.0, 0.0), (dxy, 0.0), z],
            sides: [dxy, dyz, dxz],
        })
    }

    fn endpoints(&self, side: usize) -> Result<((f64, f64), (f64, f64), f64)> {
        let p = self.points;
        match side {
            0 => Ok((p[0], p[1], self.sides[0])),
            1 => Ok((p[1], p[2], self.sides[1])),
            2 => Ok((p[0], p[2], self.sides[2])),
            _ => Err(Error::Argument(format!("side index {side} not in 0..3"))),
        }
    }
}

/// Point on `side` at arclength `t` from its first endpoint, clamped to the side.
pub fn comparison_point(tri: &ComparisonTriangle, side: usize, t: f64, c: f64) -> Result<(f64, f64)> {
    let (a, b, len) = tri.endpoints(side)?;
    if t < 0.0 || t > len + c + TRI_TOL {
        return Err(Error::Argument(format!(
            "arclength {t} outside [0, {len} + {c}]"
        )));
    }
    let s = t.min(len);
    if len == 0.0 {
        return Ok(a);
    }
    let f = s / len;
    Ok((a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1)))
}

/// 3·sqrt(C·min(d_xz, d_yz) + C²).
pub fn cat0_quasigeodesic_bound(c: f64, d_xz: f64, d_yz: f64) -> Result<f64> {
    if c < 0.0 || d_xz < 0.0 || d_yz < 0.0 {
        return Err(Error::Argument("negative input to quasigeodesic bound".into()));
    }
    Ok(3.0 * (c * d_xz.min(d_yz) + c * c).sqrt())
}

pub fn planar_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Euclidean distance from `z` to segment `[x, y]`.
pub fn point_segment_dist(z: (f64, f64), x: (f64, f64), y: (f64, f64)) -> f64 {
    let (dx, dy) = (y.0 - x.0, y.1 - x.1);
    let l2 = dx * dx + dy * dy;
    if l2 == 0.0 {
        return planar_dist(z, x);
    }
    let t = (((z.0 - x.0) * dx + (z.1 - x.1) * dy) / l2).clamp(0.0, 1.0);
    planar_dist(z, (x.0 + t * dx, x.1 + t * dy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(MetricGraph::new(2, &[(0, 0, 1)]), Err(Error::Format(_))));
        assert!(matches!(MetricGraph::new(2, &[(0, 1, 0)]), Err(Error::Format(_))));
        assert!(matches!(
            MetricGraph::new(2, &[(0, 1, 1), (1, 0, 2)]),
            Err(Error::Format(_))
        ));
        assert!(matches!(MetricGraph::new(3, &[(0, 1, 1)]), Err(Error::Format(_))));
    }

    #[test]
    fn geodesic_prefers_small_ids() {
        let g = MetricGraph::cycle(4);
        assert_eq!(g.geodesic(0, 2), vec![0, 1, 2]);
        assert_eq!(g.geodesic(2, 0), vec![2, 1, 0]);
    }

    #[test]
    fn subdivision_preserves_distances() {
        let g = MetricGraph::new(3, &[(0, 1, 3), (1, 2, 2), (0, 2, 4)]).unwrap();
        let s = g.subdivided();
        assert!(s.is_unit());
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(g.d(u, v), s.d(u, v));
            }
        }
    }

    #[test]
    fn comparison_fixtures() {
        let t = ComparisonTriangle::new(1.0, 1.0, 1.0).unwrap();
        let p = comparison_point(&t, 0, 0.5, 0.0).unwrap();
        assert!((p.0 - 0.5).abs() < 1e-12 && p.1.abs() < 1e-12);
        let t = ComparisonTriangle::new(2.0, 1.0, 1.0).unwrap();
        assert!((t.points[2].0 - 1.0).abs() < 1e-12 && t.points[2].1.abs() < 1e-9);
        assert!(ComparisonTriangle::new(5.0, 1.0, 1.0).is_err());
        assert!(comparison_point(&t, 0, 3.5, 1.0).is_err());
        let p = comparison_point(&t, 0, 2.5, 1.0).unwrap();
        assert_eq!(p, (2.0, 0.0));
    }

    #[test]
    fn quasigeodesic_bound_values() {
        assert_eq!(cat0_quasigeodesic_bound(0.0, 3.0, 4.0).unwrap(), 0.0);
        let b = cat0_quasigeodesic_bound(1.0, 5.0, 9.0).unwrap();
        assert!((b - 3.0 * 6f64.sqrt()).abs() < 1e-12);
        assert!(cat0_quasigeodesic_bound(-1.0, 0.0, 0.0).is_err());
    }
}
