//! Vietoris–Rips flag complexes and homology over the two-element field.

use std::collections::HashMap;

use serde::Serialize;

use crate::bits::Bits;
use crate::error::{capacity, Error, Result};

pub const SIMPLEX_GUARD: usize = 5_000_000;
const DIM_CAP: usize = 3;

/// Flag complex of the ≤T proximity graph, simplices stored per dimension as sorted vertex lists.
#[derive(Clone, Debug, Serialize)]
pub struct FlagComplex {
    pub n: usize,
    pub threshold: f64,
    pub adjacency: Vec<Vec<usize>>,
    pub simplices: Vec<Vec<Vec<usize>>>,
}

impl FlagComplex {
    pub fn n_simplices(&self) -> usize {
        self.simplices.iter().map(|s| s.len()).sum()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        let k = s.len() - 1;
        k < self.simplices.len() && self.simplices[k].binary_search(&s.to_vec()).is_ok()
    }
}

fn proximity(n: usize, dist: &dyn Fn(usize, usize) -> f64, t: f64) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for v in u + 1..n {
            if dist(u, v) <= t {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    adj
}

fn cliques(n: usize, adj: &[Vec<usize>], cap: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    let higher: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(u, a)| a.iter().copied().filter(|&v| v > u).collect())
        .collect();
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new(); cap + 1];
    let mut total = 0usize;
    fn grow(
        s: &mut Vec<usize>,
        cand: &[usize],
        higher: &[Vec<usize>],
        cap: usize,
        out: &mut Vec<Vec<Vec<usize>>>,
        total: &mut usize,
    ) -> Result<()> {
        out[s.len() - 1].push(s.clone());
        *total += 1;
        capacity("rips simplices", *total, SIMPLEX_GUARD)?;
        if s.len() > cap {
            return Ok(());
        }
        for &v in cand {
            let next: Vec<usize> = cand
                .iter()
                .copied()
                .filter(|&w| w > v && higher[v].binary_search(&w).is_ok())
                .collect();
            s.push(v);
            grow(s, &next, higher, cap, out, total)?;
            s.pop();
        }
        Ok(())
    }
    for u in 0..n {
        let mut s = vec![u];
        grow(&mut s, &higher[u], &higher, cap, &mut out, &mut total)?;
    }
    for d in &mut out {
        d.sort();
    }
    Ok(out)
}

pub fn rips_complex(n: usize, dist: &dyn Fn(usize, usize) -> f64, t: f64, dim_cap: usize) -> Result<FlagComplex> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("threshold {t} negative")));
    }
    if dim_cap > DIM_CAP {
        return Err(Error::Argument(format!("dimension cap {dim_cap} above {DIM_CAP}")));
    }
    let adjacency = proximity(n, dist, t);
    let simplices = cliques(n, &adjacency, dim_cap)?;
    Ok(FlagComplex {
        n,
        threshold: t,
        adjacency,
        simplices,
    })
}

/// Repeatedly delete vertices whose closed neighborhood sits inside another's.
/// Strong collapses preserve the homotopy type of the flag complex.
pub fn strong_collapse(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut alive = vec![true; n];
    let mut closed: Vec<Bits> = (0..n)
        .map(|v| {
            let mut b = Bits::zeros(n);
            b.set(v, true);
            for &u in &adj[v] {
                b.set(u, true);
            }
            b
        })
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let dominated = closed[v]
                .ones()
                .any(|u| u != v && alive[u] && closed[v].and_not_count(&closed[u]) == 0);
            if dominated {
                alive[v] = false;
                for u in 0..n {
                    closed[u].set(v, false);
                }
                changed = true;
            }
        }
    }
    (0..n).filter(|&v| alive[v]).collect()
}

/// Reduced Betti numbers over GF(2) in degrees 0..=max_dim.
pub fn betti_z2(simplices: &[Vec<Vec<usize>>], max_dim: usize) -> Result<Vec<usize>> {
    if simplices.len() < max_dim + 2 && simplices.iter().skip(max_dim + 1).any(|s| !s.is_empty()) {
        return Err(Error::Argument("simplex list truncated".into()));
    }
    let count = |k: usize| simplices.get(k).map_or(0, |s| s.len());
    // rank of the boundary from dimension k to k-1; k = 0 is the augmentation
    let rank = |k: usize| -> usize {
        if k == 0 {
            return (count(0) > 0) as usize;
        }
        let (Some(rows), Some(faces)) = (simplices.get(k), simplices.get(k - 1)) else {
            return 0;
        };
        let idx: HashMap<&[usize], usize> = faces.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let cols: Vec<Vec<usize>> = rows
            .iter()
            .map(|s| {
                let mut c: Vec<usize> = (0..s.len())
                    .map(|drop| {
                        let f: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
                        idx[f.as_slice()]
                    })
                    .collect();
                c.sort_unstable();
                c
            })
            .collect();
        gf2_rank(faces.len(), cols)
    };
    let mut out = Vec::with_capacity(max_dim + 1);
    for k in 0..=max_dim {
        let c = count(k);
        out.push(c - rank(k) - rank(k + 1));
    }
    Ok(out)
}

/// Rank of a GF(2) matrix given by the sparse supports of its columns.
pub fn gf2_rank(n_rows: usize, cols: Vec<Vec<usize>>) -> usize {
    let mut pivot_of: HashMap<usize, Bits> = HashMap::new();
    let mut rank = 0;
    for c in cols {
        let mut b = Bits::zeros(n_rows);
        for r in c {
            b.set(r, true);
        }
        loop {
            let Some(low) = last_one(&b) else { break };
            match pivot_of.get(&low) {
                Some(p) => {
                    b = xor(&b, p);
                }
                None => {
                    pivot_of.insert(low, b);
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

fn last_one(b: &Bits) -> Option<usize> {
    (0..b.len()).rev().find(|&i| b.get(i))
}

fn xor(a: &Bits, b: &Bits) -> Bits {
    let mut out = a.clone();
    for i in b.ones() {
        out.flip(i);
    }
    out
}

/// Reduced Betti numbers of the flag complex, after strong collapse when the complex is large.
pub fn homology_z2(cx: &FlagComplex, max_dim: usize) -> Result<Vec<usize>> {
    if max_dim + 1 >= cx.simplices.len() {
        return Err(Error::Argument(format!(
            "degree {max_dim} needs simplices through dimension {}",
            max_dim + 1
        )));
    }
    betti_z2(&cx.simplices, max_dim)
}

/// Betti numbers of the ≤T flag complex computed on its strong-collapse core.
pub fn collapsed_betti(n: usize, dist: &dyn Fn(usize, usize) -> f64, t: f64, max_dim: usize) -> Result<Vec<usize>> {
    let adj = proximity(n, dist, t);
    let core = strong_collapse(&adj);
    let pos: HashMap<usize, usize> = core.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let sub: Vec<Vec<usize>> = core
        .iter()
        .map(|&v| {
            let mut a: Vec<usize> = adj[v].iter().filter_map(|u| pos.get(u).copied()).collect();
            a.sort_unstable();
            a
        })
        .collect();
    let simplices = cliques(core.len(), &sub, max_dim + 1)?;
    betti_z2(&simplices, max_dim)
}

/// Images of the barycentric subdivision of a simplicial map under diacenters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubdivisionStep {
    pub t_prime: f64,
    /// Barycentric vertices: sorted faces of the input simplices, in P-vertex ids.
    pub faces: Vec<Vec<usize>>,
    /// Point chosen for each face: the diacenter of its image set.
    pub images: Vec<usize>,
    pub edges_checked: usize,
    /// Nested pair (face index, face index, distance) farthest above T′, if any.
    pub worst: Option<(usize, usize, f64)>,
    pub pass: bool,
}

const FACE_VERTEX_CAP: usize = 12;

/// One subdivide-and-contract step. `theta[v]` is the point of vertex v of P, `simplices` the
/// maximal simplices of P. Every face σ maps to dc(θ(σ)); nested faces must land within
/// T′ = (1−ε)T + C′. Exceeding T′ is reported through `pass` and `worst`, not as an error.
#[allow(clippy::too_many_arguments)]
pub fn subdivision_step(
    n: usize,
    dist: &dyn Fn(usize, usize) -> f64,
    theta: &[usize],
    simplices: &[Vec<usize>],
    t: f64,
    eps: f64,
    c_prime: f64,
    c: f64,
) -> Result<SubdivisionStep> {
    if let Some(&x) = theta.iter().find(|&&x| x >= n) {
        return Err(Error::Argument(format!("image point {x} outside the space of {n} points")));
    }
    let mut all = std::collections::BTreeSet::new();
    for s in simplices {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() || s.len() > FACE_VERTEX_CAP {
            return Err(Error::Argument(format!("simplex with {} vertices", s.len())));
        }
        if let Some(&v) = s.iter().find(|&&v| v >= theta.len()) {
            return Err(Error::Argument(format!("vertex {v} has no image")));
        }
        for (i, &u) in s.iter().enumerate() {
            for &v in &s[i + 1..] {
                if dist(theta[u], theta[v]) > t + 1e-9 {
                    return Err(Error::Argument(format!("edge ({u},{v}) is not in the threshold-{t} complex")));
                }
            }
        }
        for mask in 1u32..(1 << s.len()) {
            all.insert(s.iter().enumerate().filter(|&(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v).collect::<Vec<_>>());
        }
    }
    let faces: Vec<Vec<usize>> = all.into_iter().collect();
    let images = faces
        .iter()
        .map(|f| {
            let pts: Vec<usize> = f.iter().map(|&v| theta[v]).collect();
            crate::metric::diacenter(n, dist, &pts, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let t_prime = (1.0 - eps) * t + c_prime;
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut edges_checked = 0;
    for (i, a) in faces.iter().enumerate() {
        for (j, b) in faces.iter().enumerate() {
            // barycentric edges join strictly nested faces
            if a.len() >= b.len() || !a.iter().all(|v| b.binary_search(v).is_ok()) {
                continue;
            }
            edges_checked += 1;
            let d = dist(images[i], images[j]);
            if d > t_prime + 1e-9 && worst.map_or(true, |w| d > w.2) {
                worst = Some((i, j, d));
            }
        }
    }
    Ok(SubdivisionStep {
        t_prime,
        faces,
        images,
        edges_checked,
        pass: worst.is_none(),
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_dist(n: usize) -> impl Fn(usize, usize) -> f64 {
        move |a, b| {
            let d = a.abs_diff(b);
            d.min(n - d) as f64
        }
    }

    #[test]
    fn two_points_one_edge() {
        let cx = rips_complex(2, &|_, _| 1.5, 1.5, 3).unwrap();
        assert_eq!(cx.simplices[1], vec![vec![0, 1]]);
    }

    #[test]
    fn six_cycle_fixtures() {
        let d = cycle_dist(6);
        let c1 = rips_complex(6, &d, 1.0, 3).unwrap();
        assert_eq!(c1.simplices[1].len(), 6);
        assert_eq!(homology_z2(&c1, 2).unwrap(), vec![0, 1, 0]);
        let c2 = rips_complex(6, &d, 2.0, 3).unwrap();
        assert_eq!(homology_z2(&c2, 2).unwrap(), vec![0, 0, 1]);
        let c3 = rips_complex(6, &d, 3.0, 3).unwrap();
        assert_eq!(c3.simplices[1].len(), 15);
        assert_eq!(homology_z2(&c3, 2).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn collapse_agrees_on_cycles() {
        for n in 4..9 {
            let d = cycle_dist(n);
            for t in 1..=n / 2 {
                let direct = homology_z2(&rips_complex(n, &d, t as f64, 3).unwrap(), 2).unwrap();
                assert_eq!(collapsed_betti(n, &d, t as f64, 2).unwrap(), direct, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn constant_simplex_maps_to_its_point() {
        let d = |a: usize, b: usize| a.abs_diff(b) as f64;
        let st = subdivision_step(10, &d, &[4, 4, 4], &[vec![0, 1, 2]], 2.0, 0.1, 0.0, 1.0).unwrap();
        assert_eq!(st.faces.len(), 7);
        assert!(st.images.iter().all(|&x| x == 4));
        assert!(st.pass);
    }

    #[test]
    fn edge_midpoint_is_close_to_both_ends() {
        let d = |a: usize, b: usize| a.abs_diff(b) as f64;
        let st = subdivision_step(21, &d, &[0, 20], &[vec![0, 1]], 20.0, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(st.faces, vec![vec![0], vec![0, 1], vec![1]]);
        // any witness within C = 1 of the midpoint; the least id is 9
        assert_eq!(st.images[1], 9);
        assert_eq!(st.edges_checked, 2);
        assert!(st.pass);
        // direct check: both halves are 10 ≤ 0.9·20 + 1
        assert!(d(st.images[1], 0) <= st.t_prime && d(st.images[1], 20) <= st.t_prime);
    }

    #[test]
    fn tight_threshold_reports_a_witness() {
        let d = |a: usize, b: usize| a.abs_diff(b) as f64;
        let st = subdivision_step(21, &d, &[0, 20], &[vec![0, 1]], 20.0, 0.6, 0.0, 1.0).unwrap();
        assert!(!st.pass);
        assert_eq!(st.worst.map(|w| w.2), Some(11.0));
        assert!(subdivision_step(21, &d, &[0, 20], &[vec![0, 1]], 5.0, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn random_simplices_in_a_grid_pass_at_the_fitted_constant() {
        use rand::{Rng, SeedableRng};
        let side = 30usize;
        let n = side * side;
        let d = move |a: usize, b: usize| {
            let (dx, dy) = ((a % side).abs_diff(b % side) as f64, (a / side).abs_diff(b / side) as f64);
            (dx * dx + dy * dy).sqrt()
        };
        let eps = 0.1;
        let t = 12.0;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
            let c = rng.gen_range(0..n);
            let k = rng.gen_range(1..=4);
            let mut out = vec![c];
            while out.len() < k {
                let x = rng.gen_range(0..n);
                if out.iter().all(|&y| d(x, y) <= t) {
                    out.push(x);
                }
            }
            out
        };
        let mut calib = Vec::new();
        // every nested pair of faces, as the step itself uses them
        for _ in 0..600 {
            let b = sample(&mut rng);
            for mask in 1u32..(1 << b.len()) {
                let a: Vec<usize> = (0..b.len()).filter(|&i| mask >> i & 1 == 1).map(|i| b[i]).collect();
                calib.push((a, b.clone()));
            }
        }
        let fit = crate::metric::fit_contraction(n, &d, &calib, eps, 1.0).unwrap();
        let mut failures = 0;
        for _ in 0..200 {
            let pts = sample(&mut rng);
            let simplex: Vec<usize> = (0..pts.len()).collect();
            let st = subdivision_step(n, &d, &pts, &[simplex], t, eps, fit.c_prime, 1.0).unwrap();
            if let Some(w) = st.worst {
                failures += 1;
                eprintln!("{pts:?} {w:?} T′ = {}", st.t_prime);
            }
        }
        assert_eq!(failures, 0, "C′ = {}", fit.c_prime);
    }
}
