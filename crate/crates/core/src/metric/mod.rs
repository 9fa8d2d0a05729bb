//! Comparison checks, diacenters, weak metrics on ray prefixes, and the divergence gauge.

mod cubical;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{comparison_point, planar_dist, ComparisonTriangle, DiscreteQuasiGeodesic, MetricGraph};

pub use cubical::{dhat_p, symmetrized_metric, DefectReport, SymmetrizedTable};

const GAUGE_SCAN_CAP: u64 = 10_000_000;

/// κ(t) = c1·sqrt(t) + c2, with floor constant C.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaGauge {
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
}

impl KappaGauge {
    pub fn new(c1: f64, c2: f64, c: f64) -> Result<Self> {
        if c1 < 0.0 || c2 < 0.0 || c < 0.0 {
            return Err(Error::Argument("gauge coefficients must be nonnegative".into()));
        }
        if c2 < 10.0 * c {
            return Err(Error::Configuration(format!("κ(0) = {c2} below 10·C = {}", 10.0 * c)));
        }
        Ok(KappaGauge { c1, c2, c })
    }

    /// D·sqrt(t) + D.
    pub fn uniform(d: f64) -> Self {
        KappaGauge { c1: d, c2: d, c: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.c1 * t.max(0.0).sqrt() + self.c2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubCat0Report {
    pub holds: bool,
    /// (side, parameter, side, parameter, d − bound) of the largest excess.
    pub worst: Option<(usize, usize, usize, usize, f64)>,
}

/// Comparison inequality up to κ over every pair of side points.
/// Sides: 0 = [x,y], 1 = [y,z], 2 = [x,z].
pub fn sub_cat0_check(g: &MetricGraph, sides: &[DiscreteQuasiGeodesic; 3], kappa: &KappaGauge) -> Result<SubCat0Report> {
    let (x, y, z) = (sides[0].at(0), sides[1].at(0), sides[2].at(sides[2].len()));
    if sides[0].at(sides[0].len()) != y || sides[2].at(0) != x || sides[1].at(sides[1].len()) != z {
        return Err(Error::Argument("triangle sides do not share endpoints".into()));
    }
    let c = sides.iter().map(|s| s.c).fold(0.0, f64::max);
    let tri = ComparisonTriangle::new(g.d(x, y) as f64, g.d(y, z) as f64, g.d(x, z) as f64)?;
    let ends = [(x, y), (y, z), (x, z)];
    let mut pts = Vec::new();
    for (i, side) in sides.iter().enumerate() {
        let len = tri.sides[i];
        for t in 0..=side.len() {
            let p = side.at(t);
            let bar = comparison_point(&tri, i, (t as f64).min(len + c), c)?;
            let delta = (g.d(ends[i].0, p).min(g.d(p, ends[i].1)) as f64) - c;
            pts.push((i, t, p, bar, kappa.eval(delta)));
        }
    }
    let mut worst: Option<(usize, usize, usize, usize, f64)> = None;
    for (a, &(i, s, p, pb, kp)) in pts.iter().enumerate() {
        for &(j, t, q, qb, kq) in &pts[a + 1..] {
            let excess = g.d(p, q) as f64 - (planar_dist(pb, qb) + kp + kq);
            if worst.map_or(true, |w| excess > w.4) {
                worst = Some((i, s, j, t, excess));
            }
        }
    }
    Ok(SubCat0Report {
        holds: worst.map_or(true, |w| w.4 <= 1e-9),
        worst,
    })
}

/// Smallest D on a 1/4 grid for which every triangle passes with κ = D·sqrt(t) + D.
pub fn fit_uniform_kappa(g: &MetricGraph, triangles: &[[DiscreteQuasiGeodesic; 3]], d_max: f64) -> Result<Option<f64>> {
    let mut d = 0.0;
    while d <= d_max {
        let k = KappaGauge::uniform(d);
        let mut ok = true;
        for tri in triangles {
            if !sub_cat0_check(g, tri, &k)?.holds {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(d));
        }
        d += 0.25;
    }
    Ok(None)
}

/// Diacenter of `a` in a finite space with `n` points: least-id witness over the whole space
/// for the lexicographically least furthest pair.
pub fn diacenter(n: usize, dist: &dyn Fn(usize, usize) -> f64, a: &[usize], c: f64) -> Result<usize> {
    let Some(&first) = a.first() else {
        return Err(Error::Argument("diacenter of empty set".into()));
    };
    let mut pts = a.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() == 1 {
        return Ok(first);
    }
    let mut best = (pts[0], pts[1]);
    let mut bd = f64::NEG_INFINITY;
    for (i, &p) in pts.iter().enumerate() {
        for &q in &pts[i + 1..] {
            let d = dist(p, q);
            if d > bd + 1e-12 {
                bd = d;
                best = (p, q);
            }
        }
    }
    let (p, q) = best;
    (0..n)
        .find(|&x| {
            let (px, xq) = (dist(p, x), dist(x, q));
            bd >= px + xq - 3.0 * c - 1e-9 && (px - bd / 2.0).abs() <= c + 1e-9
        })
        .ok_or_else(|| Error::Infeasible(format!("no diacenter witness for pair ({p},{q}) at C = {c}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionFit {
    pub c_prime: f64,
    pub calibration: usize,
}

/// C′ = max(0, d(dc(A), dc(B)) − (1−ε)·diam(B)) over the given (A, B) pairs.
pub fn fit_contraction(
    n: usize,
    dist: &dyn Fn(usize, usize) -> f64,
    samples: &[(Vec<usize>, Vec<usize>)],
    eps: f64,
    c: f64,
) -> Result<ContractionFit> {
    let mut cp: f64 = 0.0;
    for (a, b) in samples {
        cp = cp.max(contraction_excess(n, dist, a, b, eps, c)?);
    }
    Ok(ContractionFit {
        c_prime: cp,
        calibration: samples.len(),
    })
}

pub fn contraction_excess(
    n: usize,
    dist: &dyn Fn(usize, usize) -> f64,
    a: &[usize],
    b: &[usize],
    eps: f64,
    c: f64,
) -> Result<f64> {
    let da = diacenter(n, dist, a, c)?;
    let db = diacenter(n, dist, b, c)?;
    let diam = b
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .map(|(x, y)| dist(x, y))
        .fold(0.0, f64::max);
    Ok(dist(da, db) - (1.0 - eps) * diam)
}

/// Pairwise d_κ on ray classes, each class a list of representative prefixes from one basepoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakMetricTable {
    pub values: Vec<Vec<f64>>,
    /// Step function (s, 𝔣̂(s)), s increasing, values nondecreasing.
    pub modulus: Vec<(f64, f64)>,
}

impl WeakMetricTable {
    pub fn modulus_at(&self, s: f64) -> f64 {
        self.modulus
            .iter()
            .take_while(|&&(x, _)| x <= s + 1e-12)
            .last()
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.values.len();
        (0..n).all(|i| self.values[i][i] == 0.0 && (0..n).all(|j| self.values[i][j] == self.values[j][i]))
    }
}

/// Largest integer t in the common domain with d(α(t), β(t)) ≤ 3κ(t) (the set is scanned exhaustively).
pub fn agreement_time(g: &MetricGraph, a: &DiscreteQuasiGeodesic, b: &DiscreteQuasiGeodesic, kappa: &KappaGauge) -> usize {
    let m = a.len().min(b.len());
    (0..=m)
        .filter(|&t| g.d(a.at(t), b.at(t)) as f64 <= 3.0 * kappa.eval(t as f64) + 1e-12)
        .max()
        .unwrap_or(0)
}

pub fn weak_metric_dkappa(
    g: &MetricGraph,
    classes: &[Vec<DiscreteQuasiGeodesic>],
    kappa: &KappaGauge,
) -> Result<WeakMetricTable> {
    let base = classes
        .iter()
        .flatten()
        .next()
        .map(|q| q.at(0))
        .ok_or_else(|| Error::Argument("no prefixes".into()))?;
    if classes.iter().flatten().any(|q| q.at(0) != base) || classes.iter().any(|c| c.is_empty()) {
        return Err(Error::Argument("prefixes must share the basepoint".into()));
    }
    let n = classes.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut best = f64::INFINITY;
            for a in &classes[i] {
                for b in &classes[j] {
                    let t = agreement_time(g, a, b, kappa);
                    let v = if t == 0 { f64::INFINITY } else { 1.0 / t as f64 };
                    best = best.min(v);
                }
            }
            values[i][j] = best;
            values[j][i] = best;
        }
    }
    let modulus = fit_modulus(&values);
    Ok(WeakMetricTable { values, modulus })
}

/// Minimal nondecreasing step function with d(x,z) ≤ 𝔣̂(max(d(x,y), d(y,z))) on all finite triples.
pub fn fit_modulus(values: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = values.len();
    let mut req: Vec<(f64, f64)> = Vec::new();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let (dxy, dyz, dxz) = (values[x][y], values[y][z], values[x][z]);
                if dxy.is_finite() && dyz.is_finite() && dxz.is_finite() {
                    req.push((dxy.max(dyz), dxz));
                }
            }
        }
    }
    req.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut run = 0.0f64;
    for (s, v) in req {
        run = run.max(v);
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 = run,
            _ => out.push((s, run)),
        }
    }
    out
}

/// 𝔤(t): 0 for t ≤ C, else the largest integer g with η(t)·t′/(t−C) ≤ κ(t′) for all integers t′ ≤ g.
pub fn divergence_gauge(eta: &dyn Fn(f64) -> f64, kappa: &dyn Fn(f64) -> f64, c: f64, t: f64) -> Result<u64> {
    if t <= c {
        return Ok(0);
    }
    let e = eta(t);
    let mut g = 0u64;
    loop {
        let tp = (g + 1) as f64;
        if e * tp / (t - c) > kappa(tp) + 1e-12 {
            return Ok(g);
        }
        g += 1;
        if g >= GAUGE_SCAN_CAP {
            return Err(Error::Capacity {
                what: "divergence gauge scan",
                size: g as usize,
                limit: GAUGE_SCAN_CAP as usize,
            });
        }
    }
}

/// If d(γ1(t), γ2(t)) ≤ η(t) then d(γ1(t′), γ2(t′)) ≤ 3κ(t′) for all t′ ≤ 𝔤(t); returns the first failing t′.
pub fn divergence_check(
    g: &MetricGraph,
    a: &DiscreteQuasiGeodesic,
    b: &DiscreteQuasiGeodesic,
    t: usize,
    eta: &dyn Fn(f64) -> f64,
    kappa: &dyn Fn(f64) -> f64,
    c: f64,
) -> Result<Option<usize>> {
    if t > a.len().min(b.len()) || g.d(a.at(t), b.at(t)) as f64 > eta(t as f64) {
        return Ok(None);
    }
    let gt = divergence_gauge(eta, kappa, c, t as f64)? as usize;
    Ok((0..=gt.min(a.len()).min(b.len())).find(|&s| g.d(a.at(s), b.at(s)) as f64 > 3.0 * kappa(s as f64) + 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_fixture() {
        let g = divergence_gauge(&|_| 2.0, &|x: f64| x.sqrt(), 0.0, 10.0).unwrap();
        assert_eq!(g, 25);
        assert_eq!(divergence_gauge(&|_| 2.0, &|x: f64| x.sqrt(), 3.0, 3.0).unwrap(), 0);
    }

    #[test]
    fn diacenter_on_path() {
        let p = MetricGraph::path(11);
        let d = |a: usize, b: usize| p.d(a, b) as f64;
        assert_eq!(diacenter(11, &d, &[0, 5, 10], 0.0).unwrap(), 5);
        assert_eq!(diacenter(11, &d, &[7], 0.0).unwrap(), 7);
        assert!(diacenter(11, &d, &[0, 3], 0.0).is_err());
    }

    #[test]
    fn kappa_floor_gate() {
        assert!(KappaGauge::new(1.0, 5.0, 1.0).is_err());
        assert!(KappaGauge::new(1.0, 10.0, 1.0).is_ok());
    }
}
