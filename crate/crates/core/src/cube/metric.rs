use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::CubeComplex;
use crate::error::{capacity, Error, Result};

const SUBDIV_GUARD: usize = 400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpNorm {
    L1,
    L2,
    LInf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CubePoint {
    Vertex(usize),
    /// One coordinate per wall in [0,1]; 0 and 1 are the two sides.
    Coords(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpResult {
    pub value: f64,
    pub exact: bool,
    /// |d_h − d_{h/2}| from the halving check; 0 when exact.
    pub error_bound: f64,
}

/// Wall classes when the complex is a full product of trees.
fn product_factors(cx: &CubeComplex) -> Option<Vec<usize>> {
    let m = cx.n_walls();
    let cross = cx.crossing_matrix();
    let mut class = vec![usize::MAX; m];
    let mut k = 0;
    for s in 0..m {
        if class[s] != usize::MAX {
            continue;
        }
        // components of the non-crossing graph
        let mut stack = vec![s];
        class[s] = k;
        while let Some(a) = stack.pop() {
            for b in 0..m {
                if a != b && !cross[a][b] && class[b] == usize::MAX {
                    class[b] = k;
                    stack.push(b);
                }
            }
        }
        k += 1;
    }
    for a in 0..m {
        for b in a + 1..m {
            if class[a] == class[b] && cross[a][b] {
                return None;
            }
        }
    }
    // tree factor with w walls has w+1 vertices; full product needs the product count
    let mut sizes = vec![1usize; k];
    for &c in &class {
        sizes[c] += 1;
    }
    let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s))?;
    if total != cx.n_vertices() {
        return None;
    }
    Some(class)
}

fn coords_of(cx: &CubeComplex, p: &CubePoint) -> Result<Vec<f64>> {
    match p {
        CubePoint::Vertex(i) => {
            if *i >= cx.n_vertices() {
                return Err(Error::Argument(format!("vertex {i} outside complex")));
            }
            let v = cx.vertex(*i);
            Ok((0..cx.n_walls()).map(|w| v.get(w) as u8 as f64).collect())
        }
        CubePoint::Coords(c) => {
            if c.len() != cx.n_walls() || c.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::Argument("point coordinates outside complex".into()));
            }
            Ok(c.clone())
        }
    }
}

pub fn lp_distance(cx: &CubeComplex, x: &CubePoint, y: &CubePoint, p: LpNorm) -> Result<LpResult> {
    if let (CubePoint::Vertex(a), CubePoint::Vertex(b)) = (x, y) {
        if *a >= cx.n_vertices() || *b >= cx.n_vertices() {
            return Err(Error::Argument("vertex outside complex".into()));
        }
        let d1 = cx.l1(*a, *b) as f64;
        if p == LpNorm::L1 || d1 <= 1.0 {
            return Ok(LpResult {
                value: d1,
                exact: true,
                error_bound: 0.0,
            });
        }
        if let Some(class) = product_factors(cx) {
            let k = class.iter().max().map_or(0, |c| c + 1);
            let mut per = vec![0f64; k];
            let (va, vb) = (cx.vertex(*a), cx.vertex(*b));
            for (w, &c) in class.iter().enumerate() {
                if va.get(w) != vb.get(w) {
                    per[c] += 1.0;
                }
            }
            let value = match p {
                LpNorm::L2 => per.iter().map(|d| d * d).sum::<f64>().sqrt(),
                _ => per.iter().copied().fold(0.0, f64::max),
            };
            return Ok(LpResult {
                value,
                exact: true,
                error_bound: 0.0,
            });
        }
    }
    let cx_ = coords_of(cx, x)?;
    let cy = coords_of(cx, y)?;
    if p == LpNorm::L1 {
        let v = cx_.iter().zip(&cy).map(|(a, b)| (a - b).abs()).sum();
        return Ok(LpResult {
            value: v,
            exact: true,
            error_bound: 0.0,
        });
    }
    let coarse = subdivision_distance(cx, &cx_, &cy, p, 2)?;
    let fine = subdivision_distance(cx, &cx_, &cy, p, 4)?;
    Ok(LpResult {
        value: fine,
        exact: false,
        error_bound: (coarse - fine).abs(),
    })
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Shortest path in the graph joining all grid points (step 1/steps) lying in a common cube.
fn subdivision_distance(cx: &CubeComplex, a: &[f64], b: &[f64], p: LpNorm, steps: u16) -> Result<f64> {
    let snap = |c: &[f64]| -> Result<Vec<u16>> {
        c.iter()
            .map(|&x| {
                let k = (x * steps as f64).round();
                if (k - x * steps as f64).abs() > 1e-9 {
                    Err(Error::Argument(format!("coordinate {x} not on the 1/{steps} grid")))
                } else {
                    Ok(k as u16)
                }
            })
            .collect()
    };
    let (ka, kb) = (snap(a)?, snap(b)?);
    let mut ids: HashMap<Vec<u16>, usize> = HashMap::new();
    let mut pts: Vec<Vec<u16>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut id_of = |k: Vec<u16>, pts: &mut Vec<Vec<u16>>| -> usize {
        if let Some(&i) = ids.get(&k) {
            return i;
        }
        ids.insert(k.clone(), pts.len());
        pts.push(k);
        pts.len() - 1
    };
    let mut seen_cubes = std::collections::HashSet::new();
    for v in 0..cx.n_vertices() {
        for walls in cx.cubes_at(v) {
            // canonical key: the cube's vertex set minimum orientation plus its walls
            let mut base = cx.vertex(v).clone();
            for &w in &walls {
                base.set(w, false);
            }
            if !seen_cubes.insert((base.clone(), walls.clone())) {
                continue;
            }
            let k = walls.len();
            let per = (steps as usize + 1).pow(k as u32);
            capacity("subdivision points", pts.len() + per, SUBDIV_GUARD)?;
            let mut cell = Vec::with_capacity(per);
            for idx in 0..per {
                let mut key: Vec<u16> = (0..cx.n_walls())
                    .map(|w| if base.get(w) { steps } else { 0 })
                    .collect();
                let mut r = idx;
                for &w in &walls {
                    key[w] = (r % (steps as usize + 1)) as u16;
                    r /= steps as usize + 1;
                }
                cell.push(id_of(key, &mut pts));
            }
            cells.push(cell);
        }
    }
    if cx.n_vertices() == 1 {
        id_of(ka.clone(), &mut pts);
    }
    let (Some(&s), Some(&t)) = (ids.get(&ka), ids.get(&kb)) else {
        return Err(Error::Argument("point not in any cube".into()));
    };
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); pts.len()];
    let h = 1.0 / steps as f64;
    for cell in &cells {
        for (i, &u) in cell.iter().enumerate() {
            for &v in &cell[i + 1..] {
                let diffs = pts[u].iter().zip(&pts[v]).map(|(x, y)| (*x as f64 - *y as f64).abs() * h);
                let w = match p {
                    LpNorm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
                    LpNorm::LInf => diffs.fold(0.0, f64::max),
                    LpNorm::L1 => diffs.sum(),
                };
                adj[u].push((v, w));
                adj[v].push((u, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; pts.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Item(0.0, s));
    while let Some(Item(d, u)) = heap.pop() {
        if u == t {
            return Ok(d);
        }
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                heap.push(Item(d + w, v));
            }
        }
    }
    Err(Error::Invariant("subdivision graph disconnected".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;

    fn square() -> CubeComplex {
        let v = vec![
            Bits::from_bools(&[false, false]),
            Bits::from_bools(&[true, false]),
            Bits::from_bools(&[false, true]),
            Bits::from_bools(&[true, true]),
        ];
        CubeComplex::from_vertices(vec![0, 1], v).unwrap()
    }

    #[test]
    fn unit_square_corners() {
        let cx = square();
        let (a, b) = (CubePoint::Vertex(0), CubePoint::Vertex(3));
        assert_eq!(lp_distance(&cx, &a, &b, LpNorm::L1).unwrap().value, 2.0);
        assert!((lp_distance(&cx, &a, &b, LpNorm::L2).unwrap().value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(lp_distance(&cx, &a, &b, LpNorm::LInf).unwrap().value, 1.0);
    }

    #[test]
    fn l_shape_uses_subdivision() {
        // three squares in an L: not a full product
        let mut v = Vec::new();
        for (x, y) in [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2)] {
            let b: Vec<bool> = [x >= 1, x >= 2, y >= 1, y >= 2].to_vec();
            v.push(Bits::from_bools(&b));
        }
        let cx = CubeComplex::from_vertices(vec![0, 1, 2, 3], v).unwrap();
        let far = cx.find(&Bits::from_bools(&[true, true, true, false])).unwrap();
        let r = lp_distance(&cx, &CubePoint::Vertex(0), &CubePoint::Vertex(far), LpNorm::L2).unwrap();
        assert!(!r.exact);
        assert!((r.value - 5f64.sqrt()).abs() < 1e-9);
    }
}
