use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use super::*;
use crate::hhs::{g1, g2, g3, Constants, Relation};
use crate::space::MetricGraph;

fn params(k: f64) -> ModelParams {
    ModelParams::new().with_k(k)
}

fn core_interval(t: &Thickening) -> Vec<usize> {
    (0..t.core.len()).filter(|&v| t.core[v]).collect()
}

/// Interval arithmetic on a path: grow each seed by r1, then merge gaps ≤ r2 until stable.
fn path_oracle(n: usize, seeds: &[usize], r1: usize, r2: usize) -> Vec<usize> {
    let mut iv: Vec<(usize, usize)> = seeds.iter().map(|&s| (s.saturating_sub(r1), (s + r1).min(n - 1))).collect();
    iv.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in iv {
        match merged.last_mut() {
            // overlapping, adjacent, or within r2 all merge; the gap is a - hi
            Some(last) if a <= last.1 + r2 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged.into_iter().flat_map(|(a, b)| a..=b).collect()
}

#[test]
fn single_component_grows_by_r1() {
    let t = SimplicialTree::path(21);
    let th = thicken(&t, &[10], 2, 5).unwrap();
    assert_eq!(core_interval(&th), (8..=12).collect::<Vec<_>>());
    assert_eq!(th.n_comps, 1);
    assert!(th.depth_ok);
}

#[test]
fn close_components_merge() {
    let t = SimplicialTree::path(21);
    let th = thicken(&t, &[5, 9], 1, 3).unwrap();
    assert_eq!(core_interval(&th), path_oracle(21, &[5, 9], 1, 3));
    assert_eq!(core_interval(&th), (4..=10).collect::<Vec<_>>());
    assert_eq!(th.n_comps, 1);
}

#[test]
fn empty_seed_set_keeps_everything() {
    let t = SimplicialTree::path(6);
    let th = thicken(&t, &[], 2, 2).unwrap();
    assert!(core_interval(&th).is_empty());
    let c = collapse_tree(&t, &th);
    assert_eq!(c.tree, t);
    assert_eq!(c.q, (0..6).collect::<Vec<_>>());
    assert!(thicken(&t, &[1], 0, 2).is_err());
}

#[test]
fn collapse_whole_tree_and_middle_block() {
    let t = SimplicialTree::path(10);
    let all = thicken(&t, &[0, 9], 9, 1).unwrap();
    assert_eq!(collapse_tree(&t, &all).tree.n, 1);
    let mid = thicken(&t, &[4, 5], 1, 1).unwrap();
    assert_eq!(core_interval(&mid), vec![3, 4, 5, 6]);
    let c = collapse_tree(&t, &mid);
    // 10 vertices, a 4-vertex block becomes one: 7 vertices on a path
    assert_eq!(c.tree.n, 7);
    assert_eq!(c.tree.leaves().len(), 2);
    assert_eq!(c.carrier.iter().filter(|x| x.is_some()).count(), 1);
    assert_eq!(c.q[3], c.q[6]);
    assert_eq!(c.edge_map.iter().filter(|e| e.is_none()).count(), 3);
}

fn l_tree_family() -> HftData {
    use Relation::*;
    // domain 0 is a one-vertex top; 1 and 2 are transverse one-edge trees
    let rel = vec![
        vec![Equal, Contains, Contains],
        vec![Nested, Equal, Trans],
        vec![Nested, Trans, Equal],
    ];
    let trees = vec![SimplicialTree::point(), SimplicialTree::path(2), SimplicialTree::path(2)];
    let marks = vec![vec![0, 0], vec![0, 1], vec![1, 0]];
    let point = BTreeMap::from([((1, 0), 0), ((2, 0), 0), ((1, 2), 0), ((2, 1), 0)]);
    let down = BTreeMap::from([((0, 1), vec![vec![0, 1]]), ((0, 2), vec![vec![0, 1]])]);
    HftData::from_parts(rel, trees, marks, point, down)
}

/// Filter the full product of the trees by the two consistency clauses.
fn brute_force_q(h: &HftData) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    let mut t = vec![0; h.n_domains()];
    loop {
        if h.consistent(&t) {
            out.insert(t.clone());
        }
        let mut i = 0;
        loop {
            if i == t.len() {
                return out;
            }
            t[i] += 1;
            if t[i] < h.trees[i].n {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn transverse_edges_give_an_l_tree() {
    let h = l_tree_family();
    assert!(h.report.pass(), "{:?}", h.report);
    let q = consistent_set(&h, Q_GUARD).unwrap();
    let got: BTreeSet<Vec<usize>> = q.tuples.iter().cloned().collect();
    let want: BTreeSet<Vec<usize>> = [vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0]].into_iter().collect();
    assert_eq!(got, want);
    assert_eq!(got, brute_force_q(&h));
    assert!(q.is_median_closed());
    assert_eq!(q.dual_ok, Some(true));
}

#[test]
fn unmarked_leaf_fails_clause_three() {
    let mut h = l_tree_family();
    h.marks[1] = vec![0, 0];
    let rep = h.validate();
    let c = rep.first_failure().unwrap();
    assert_eq!(c.clause, 3);
    assert!(consistent_set(&HftData { report: rep, ..h }, Q_GUARD).is_err());
}

#[test]
fn broken_bgi_table_fails_clause_five() {
    let inst = flats();
    let f = flats_f(&inst);
    let mut h = build_hft(&inst, &f, &params(10.0)).unwrap();
    let key = *h.down.keys().next().unwrap();
    let n = h.trees[key.1].n;
    for s in h.down.get_mut(&key).unwrap() {
        *s = vec![n - 1];
    }
    let rep = h.validate();
    assert!(rep.clauses.iter().any(|c| c.clause == 5 && !c.pass), "{rep:?}");
}

fn random_tree(n: usize, seed: u64) -> MetricGraph {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let parent: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { rng.gen_range(i.saturating_sub(3)..i) }).collect();
    MetricGraph::from_parents(&parent).unwrap()
}

fn leaves(g: &MetricGraph) -> Vec<usize> {
    (0..g.n()).filter(|&v| g.neighbors(v).len() == 1).collect()
}

#[test]
fn single_domain_tree_has_no_projections() {
    let g = random_tree(40, 3);
    let l = leaves(&g);
    let inst = g1(g, Constants::default()).unwrap();
    let h = build_hft(&inst, &[l[0], l[l.len() - 1]], &params(5.0)).unwrap();
    assert_eq!(h.n_domains(), 1);
    assert!(h.point.is_empty() && h.down.is_empty());
    assert!(h.report.pass());
}

#[test]
fn orthogonal_factors_give_a_full_product() {
    let inst = g2(MetricGraph::path(40), MetricGraph::path(45), Constants::default()).unwrap();
    let a = inst.ambient.point(&[0, 0]);
    let b = inst.ambient.point(&[39, 44]);
    let m = Model::build(&inst, &[a, b], &params(10.0)).unwrap();
    assert_eq!(m.hft.domains, vec![0, 1, 2]);
    assert!(!m.hft.point.contains_key(&(1, 2)) && !m.hft.point.contains_key(&(2, 1)));
    let n1 = m.hft.trees[1].n;
    let n2 = m.hft.trees[2].n;
    assert!(n1 > 1 && n2 > 1);
    assert_eq!(m.q.len(), n1 * n2);
    assert!(m.po.marked_ok);
    assert_eq!(m.po.scanned, 0);
}

fn flats() -> HHSInstance {
    let parent = MetricGraph::path(61);
    g3(parent, vec![(10, MetricGraph::path(30)), (40, MetricGraph::path(30))], Constants::default()).unwrap()
}

/// Ends of the parent and the far ends of both children.
fn flats_f(inst: &HHSInstance) -> Vec<usize> {
    let deep = |c: usize| (0..inst.ambient.n()).find(|&x| inst.pi[c][x] == 29).unwrap();
    vec![0, 60, deep(1), deep(2)]
}

#[test]
fn nested_toy_matches_brute_force() {
    let inst = flats();
    let f = flats_f(&inst);
    let m = Model::build(&inst, &f, &params(10.0)).unwrap();
    assert_eq!(m.hft.domains, vec![0, 1, 2]);
    assert!(m.hft.report.pass());
    // the bounded-image clause is checked on every component
    assert!(m.hft.report.clauses.iter().any(|c| c.clause == 5 && c.pass));
    let got: BTreeSet<Vec<usize>> = m.q.tuples.iter().cloned().collect();
    assert_eq!(got, brute_force_q(&m.hft));
    assert!(m.q.is_median_closed());
    assert_eq!(m.q.dual_ok, Some(true));
    assert!(m.po.marked_ok);
}

#[test]
fn psi_is_a_collapse_on_a_single_tree() {
    let g = random_tree(60, 9);
    let l = leaves(&g);
    let f = vec![l[0], l[l.len() / 2], l[l.len() - 1]];
    let inst = g1(g.clone(), Constants::default()).unwrap();
    let m = Model::build(&inst, &f, &params(5.0)).unwrap();
    assert!(m.po.marked_ok);
    let src = &m.hft.sources[0];
    // round trip stays inside one collapsed component, plus the θ-neighbourhood slack
    let comp_diam = (0..src.base.n)
        .flat_map(|a| (0..src.base.n).map(move |b| (a, b)))
        .filter(|&(a, b)| src.q(a) == src.q(b))
        .map(|(a, b)| g.d(src.phi[a], src.phi[b]))
        .max()
        .unwrap();
    assert!(m.po.roundtrip_x <= comp_diam + 2 * inst.constants.theta as u64);
    assert_eq!(m.po.roundtrip_q, 0);
}

#[test]
fn identical_sets_delete_nothing() {
    let inst = flats();
    let f = flats_f(&inst);
    let d = stabler_pipeline(&inst, &f, &f, &params(10.0)).unwrap();
    assert_eq!(d.n_deleted(), (0, 0));
    assert!(d.theta_iso);
    assert!(d.exact_ok(), "{:?}", d.checks);
    assert_eq!(d.face_error(), 0);
}

#[test]
fn tree_subset_embeds() {
    let g = random_tree(80, 21);
    let l = leaves(&g);
    let f = vec![l[0], l[l.len() - 1]];
    let f2 = vec![l[0], l[l.len() - 1], l[l.len() / 2]];
    let inst = g1(g, Constants::default()).unwrap();
    let d = stabler_pipeline(&inst, &f, &f2, &params(5.0)).unwrap();
    assert!(d.theta_report.convex, "{:?}", d.theta_report);
    assert!(d.exact_ok(), "{:?}", d.checks);
    assert_eq!(d.check("left_square").unwrap().value, 0);
    let json = d.to_json();
    assert!(json.contains("hullcube/diagram/v1"));
    assert!(d.to_dot().contains("graph Q0"));
}

#[test]
fn product_pipeline_runs() {
    let inst = g2(random_tree(40, 1), random_tree(40, 2), Constants::default()).unwrap();
    let a = inst.ambient.point(&[0, 0]);
    let b = inst.ambient.point(&[39, 39]);
    let c = inst.ambient.point(&[20, 5]);
    let d = stabler_pipeline(&inst, &[a, b], &[a, b, c], &params(10.0)).unwrap();
    assert!(d.exact_ok(), "{:?}", d.checks);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn thickening_on_paths_matches_intervals(seeds in proptest::collection::vec(0usize..40, 0..5), r1 in 1usize..5, r2 in 1usize..6) {
        let t = SimplicialTree::path(40);
        let th = thicken(&t, &seeds, r1, r2).unwrap();
        prop_assert_eq!(core_interval(&th), if seeds.is_empty() { vec![] } else { path_oracle(40, &seeds, r1, r2) });
        if let Some(gap) = th.min_gap {
            prop_assert!(gap > r2);
        }
        prop_assert!(th.depth_ok);
    }

    #[test]
    fn q_matches_filter_on_random_flats(len in 20usize..50, a in 0usize..1000, b in 0usize..1000, la in 12usize..25, lb in 12usize..25, pick in proptest::collection::vec(0usize..10_000, 2..5)) {
        let parent = MetricGraph::path(len);
        let inst = g3(parent, vec![(a % len, MetricGraph::path(la)), (b % len, MetricGraph::path(lb))], Constants::default()).unwrap();
        let n = inst.ambient.n();
        let mut f: Vec<usize> = pick.iter().map(|&p| p % n).collect();
        f.sort_unstable();
        f.dedup();
        let m = Model::build(&inst, &f, &params(10.0)).unwrap();
        let got: BTreeSet<Vec<usize>> = m.q.tuples.iter().cloned().collect();
        prop_assert_eq!(got, brute_force_q(&m.hft));
        prop_assert!(m.q.is_median_closed());
        prop_assert!(m.po.marked_ok);
    }
}
