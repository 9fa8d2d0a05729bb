use serde::Serialize;

use crate::cube::{lp_distance, CubePoint, LpNorm};
use crate::error::{Error, Result};
use crate::hhs::{HHSInstance, Relation};
use crate::model::{build_hft, consistent_set, ModelParams};

/// ℓp distance between the two marked tuples of the model of {a, b}.
///
/// When the nontrivial domains are pairwise orthogonal, Q is the full product of
/// the collapsed trees and the distance has a closed form; otherwise Q is built.
pub fn dhat_p(inst: &HHSInstance, a: usize, b: usize, p: LpNorm, params: &ModelParams) -> Result<f64> {
    inst.check_points(&[a, b])?;
    if a == b {
        return Ok(0.0);
    }
    let hft = build_hft(inst, &[a, b], params)?;
    let live: Vec<usize> = (0..hft.n_domains()).filter(|&u| hft.trees[u].n > 1).collect();
    let product = live
        .iter()
        .all(|&u| live.iter().all(|&v| u == v || hft.rel[u][v] == Relation::Orth));
    if product {
        let d: Vec<f64> = live
            .iter()
            .map(|&u| hft.trees[u].dist(hft.marks[u][0], hft.marks[u][1]) as f64)
            .collect();
        return Ok(match p {
            LpNorm::L1 => d.iter().sum(),
            LpNorm::L2 => d.iter().map(|x| x * x).sum::<f64>().sqrt(),
            LpNorm::LInf => d.iter().copied().fold(0.0, f64::max),
        });
    }
    let q = consistent_set(&hft, params.q_guard)?;
    let ia = q.find(&hft.marked_tuple(0)).expect("marked tuple in Q");
    let ib = q.find(&hft.marked_tuple(1)).expect("marked tuple in Q");
    Ok(lp_distance(&q.complex, &CubePoint::Vertex(ia), &CubePoint::Vertex(ib), p)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    /// Largest raw r(x,z) − r(x,y) − r(y,z) over sampled triples, floored at 0.
    pub defect: f64,
    pub worst: Option<(usize, usize, usize)>,
    /// The symmetrized table satisfies the triangle inequality on the sample.
    pub triangle_ok: bool,
    /// Symmetries that act on points and were used.
    pub symmetries_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetrizedTable {
    pub points: Vec<usize>,
    /// Raw max over symmetries of d̂_p.
    pub raw: Vec<Vec<f64>>,
    pub table: Vec<Vec<f64>>,
}

impl SymmetrizedTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,raw,symmetrized\n");
        for (i, &x) in self.points.iter().enumerate() {
            for (j, &y) in self.points.iter().enumerate() {
                s.push_str(&format!("{x},{y},{},{}\n", self.raw[i][j], self.table[i][j]));
            }
        }
        s
    }
}

/// d_p(x,y) = max over declared symmetries of d̂_p + measured defect, 0 on the diagonal.
pub fn symmetrized_metric(inst: &HHSInstance, points: &[usize], p: LpNorm, params: &ModelParams) -> Result<(SymmetrizedTable, DefectReport)> {
    inst.check_points(points)?;
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    let syms: Vec<&[usize]> = inst
        .symmetries
        .iter()
        .filter(|s| s.points.len() == inst.ambient.n())
        .map(|s| s.points.as_slice())
        .collect();
    let n = pts.len();
    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut d = dhat_p(inst, pts[i], pts[j], p, params)?;
            for s in &syms {
                d = d.max(dhat_p(inst, s[pts[i]], s[pts[j]], p, params)?);
            }
            raw[i][j] = d;
            raw[j][i] = d;
        }
    }
    let mut defect = 0.0;
    let mut worst = None;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let e = raw[x][z] - raw[x][y] - raw[y][z];
                if e > defect {
                    defect = e;
                    worst = Some((pts[x], pts[y], pts[z]));
                }
            }
        }
    }
    let table: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { raw[i][j] + defect }).collect())
        .collect();
    let triangle_ok = (0..n).all(|x| (0..n).all(|y| (0..n).all(|z| table[x][z] <= table[x][y] + table[y][z] + 1e-9)));
    Ok((
        SymmetrizedTable { points: pts, raw, table },
        DefectReport {
            defect,
            worst,
            triangle_ok,
            symmetries_used: syms.len(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hhs::{g1, g2, Constants};
    use crate::space::MetricGraph;

    /// On a path with both points at the ends, each end grows an r1 block that collapses.
    fn path_oracle(len: usize, r1: usize, r2: usize) -> f64 {
        if len > 2 * r1 + r2 {
            (len - 2 * r1) as f64
        } else {
            0.0
        }
    }

    #[test]
    fn equal_points_are_at_distance_zero() {
        let inst = g1(MetricGraph::path(20), Constants::default()).unwrap();
        let p = ModelParams::new().with_k(5.0);
        assert_eq!(dhat_p(&inst, 7, 7, LpNorm::L2, &p).unwrap(), 0.0);
    }

    #[test]
    fn path_distance_loses_the_collapsed_blocks() {
        let inst = g1(MetricGraph::path(60), Constants::default()).unwrap();
        let p = ModelParams::new().with_k(5.0);
        let want = path_oracle(59, p.r1, p.r2);
        assert_eq!(want, 43.0);
        for norm in [LpNorm::L1, LpNorm::L2, LpNorm::LInf] {
            assert_eq!(dhat_p(&inst, 0, 59, norm, &p).unwrap(), want);
        }
    }

    #[test]
    fn product_closed_form_matches_the_complex() {
        let inst = g2(MetricGraph::path(40), MetricGraph::path(45), Constants::default()).unwrap();
        let p = ModelParams::new().with_k(10.0);
        let a = inst.ambient.point(&[0, 0]);
        let b = inst.ambient.point(&[39, 44]);
        let (d1, d2) = (path_oracle(39, p.r1, p.r2), path_oracle(44, p.r1, p.r2));
        assert_eq!(dhat_p(&inst, a, b, LpNorm::L1, &p).unwrap(), d1 + d2);
        let l2 = dhat_p(&inst, a, b, LpNorm::L2, &p).unwrap();
        assert!((l2 - (d1 * d1 + d2 * d2).sqrt()).abs() < 1e-12);
        assert_eq!(dhat_p(&inst, a, b, LpNorm::LInf, &p).unwrap(), d1.max(d2));
        // second route: build Q and measure on the complex
        let hft = build_hft(&inst, &[a, b], &p).unwrap();
        let q = consistent_set(&hft, p.q_guard).unwrap();
        let (ia, ib) = (q.find(&hft.marked_tuple(0)).unwrap(), q.find(&hft.marked_tuple(1)).unwrap());
        let via_q = lp_distance(&q.complex, &CubePoint::Vertex(ia), &CubePoint::Vertex(ib), LpNorm::L1).unwrap();
        assert_eq!(via_q.value, d1 + d2);
    }

    #[test]
    fn symmetrized_table_is_a_metric() {
        let inst = g1(MetricGraph::path(40), Constants::default()).unwrap();
        let p = ModelParams::new().with_k(5.0);
        let (t, rep) = symmetrized_metric(&inst, &[0, 12, 25, 39, 12], LpNorm::L1, &p).unwrap();
        assert_eq!(t.points, vec![0, 12, 25, 39]);
        for i in 0..4 {
            assert_eq!(t.table[i][i], 0.0);
            for j in 0..4 {
                assert_eq!(t.table[i][j], t.table[j][i]);
            }
        }
        assert!(rep.triangle_ok);
        assert!(rep.defect >= 0.0);
        assert_eq!(t.to_csv().lines().count(), 17);
        assert!(symmetrized_metric(&inst, &[], LpNorm::L1, &p).is_err());
    }
}
