use proptest::prelude::*;

use super::*;
use crate::space::MetricGraph;

fn params() -> TreeParams {
    TreeParams {
        eps: 0.25,
        eps2: 0.5,
        big_e: 4.0,
    }
}

/// Spine 0..=len with a branch of `arm` vertices hanging at `at`.
fn spine_with_arm(len: usize, at: usize, arm: usize) -> MetricGraph {
    let mut e: Vec<(usize, usize, u64)> = (0..len).map(|i| (i, i + 1, 1)).collect();
    let mut prev = at;
    for i in 0..arm {
        e.push((prev, len + 1 + i, 1));
        prev = len + 1 + i;
    }
    MetricGraph::new(len + 1 + arm, &e).unwrap()
}

fn assert_valid(g: &MetricGraph, d: &StableDecomposition) {
    let rep = d.check(g);
    assert!(rep.pass(), "{:?}", rep.first_failure());
    let emb = collapse_and_embed(g, d).unwrap();
    assert!(emb.pass(), "{emb:?}");
}

#[test]
fn isolated_point_on_a_path() {
    let g = MetricGraph::path(61);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 60], vec![10, 50], 0.25).unwrap();
    let op = one_point_decomposition(&g, &s, 30, &params()).unwrap();
    assert_valid(&g, &op.decomposition);
    assert_eq!(op.after.graph.len(), op.before.graph.len() + 1);
    assert!(op.core.absorbed.is_empty());
    assert!(op.core.gamma_ok);
    // everything but the new cluster's carrier stays stable
    let rep = op.decomposition.check(&g);
    assert_eq!(rep.non_identical, 0);
    assert!(rep.max_unstable_diameter <= 1);
}

#[test]
fn repeated_point_changes_nothing() {
    let g = MetricGraph::path(41);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 40], vec![20], 0.25).unwrap();
    let op = one_point_decomposition(&g, &s, 20, &params()).unwrap();
    let d = &op.decomposition;
    assert_valid(&g, d);
    assert!(d.pairs.iter().all(|p| p.identical && p.left.nodes == p.right.nodes));
    assert!(d.diff_left.is_empty() && d.diff_right.is_empty());
    let covered: usize = d.pairs.iter().map(|p| p.left.len()).sum();
    assert_eq!(covered, op.before.edge_forest_edges().len());
}

#[test]
fn absorbed_cluster_localizes() {
    let g = MetricGraph::path(61);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 60], vec![20, 40], 0.25).unwrap();
    let op = one_point_decomposition(&g, &s, 22, &params()).unwrap();
    assert_eq!(op.core.absorbed.len(), 1);
    assert_valid(&g, &op.decomposition);
    assert!(op.decomposition.l1 <= 4);
}

#[test]
fn checker_rejects_tampering() {
    let g = MetricGraph::path(61);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 60], vec![10, 50], 0.25).unwrap();
    let op = one_point_decomposition(&g, &s, 30, &params()).unwrap();
    let good = op.decomposition;
    assert!(good.check(&g).pass());

    // shorten one side of a pair: weight sequences no longer match
    let mut bad = good.clone();
    let p = bad.pairs.iter_mut().find(|p| p.left.len() > 1).unwrap();
    p.right.nodes.pop();
    p.right.edges.pop();
    let rep = bad.check(&g);
    assert!(!rep.pass());
    assert!(!rep.clauses[1].pass);

    // swap β images
    let mut bad = good.clone();
    if bad.beta.len() >= 2 {
        let (a, b) = (bad.beta[0].1, bad.beta[1].1);
        bad.beta[0].1 = b;
        bad.beta[1].1 = a;
        assert!(!bad.check(&g).clauses[6].pass);
    }

    // drop a pair: its edges become unstable outside the unstable forest
    let mut bad = good.clone();
    bad.pairs.remove(0);
    assert!(!bad.check(&g).pass());

    // tight constants
    assert!(!good.check_at(&g, 0, 0).pass() || good.l1 == 0);
}

#[test]
fn new_branch_point_with_fake_audit() {
    let g = spine_with_arm(60, 30, 20);
    let leaf = 80;
    let s = EpsilonSetup::unlabeled(&g, vec![0, 60], vec![10, 50], 0.25).unwrap();
    let s2 = EpsilonSetup::unlabeled(&g, vec![0, 60, leaf], vec![10, 50, 70], 0.25).unwrap();
    let st = stabler_decomposition(&g, &s, &s2, 4, 3, &params()).unwrap();
    assert_eq!(st.layers.len(), 1);
    let fake = st.layers[0].fake.as_ref().unwrap();
    assert_eq!(fake.base, 30);
    assert!(fake.single_cluster && fake.single_cluster_prime);
    assert_valid(&g, &st.decomposition);
    // the hull of F excludes the new arm
    assert!(st.decomposition.right.n_nodes() < st.decomposition.right_full.n_nodes());
}

#[test]
fn empty_layer_list_is_plain_comparison() {
    let g = MetricGraph::path(41);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 40], vec![20], 0.25).unwrap();
    let st = stabler_decomposition(&g, &s, &s, 4, 1, &params()).unwrap();
    assert!(st.layers.is_empty());
    assert_valid(&g, &st.decomposition);
    assert!(st.decomposition.pairs.iter().all(|p| p.identical));
    assert!(st.decomposition.diff_left.is_empty());
}

#[test]
fn sporadic_gate_reports_layer() {
    let g = spine_with_arm(60, 30, 20);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 60], vec![], 0.25).unwrap();
    // 5 is far from the branch at 30 but is on λ(F)
    let s2 = EpsilonSetup::unlabeled(&g, vec![0, 60, 80], vec![5], 0.25).unwrap();
    let err = stabler_decomposition(&g, &s, &s2, 4, 1, &params()).unwrap_err();
    assert!(err.to_string().contains("layer 0"));
}

#[test]
fn identity_chain_composes_to_identity() {
    let g = MetricGraph::path(41);
    let s = EpsilonSetup::unlabeled(&g, vec![0, 40], vec![20], 0.25).unwrap();
    let t = stable_tree(&g, &s, &params()).unwrap();
    let d = build_decomposition(&g, &t, &t, &s.f, &s.ys).unwrap();
    let c = chain_compose(&g, &[d.clone(), d.clone(), d.clone()]).unwrap();
    assert!(c.decomposition.check(&g).pass());
    assert_eq!(c.decomposition.pairs, d.pairs);
    assert_eq!(c.audit.failures, 0);
}

#[test]
fn three_link_chain_within_bound() {
    let g = MetricGraph::path(81);
    let mut setups = vec![EpsilonSetup::unlabeled(&g, vec![0, 80], vec![10, 70], 0.25).unwrap()];
    for w in [40, 25, 55] {
        let next = setups.last().unwrap().with_points(&g, &[w]).unwrap();
        setups.push(next);
    }
    let trees: Vec<StableTree> = setups.iter().map(|s| stable_tree(&g, s, &params()).unwrap()).collect();
    let links: Vec<StableDecomposition> = (0..3)
        .map(|i| build_decomposition(&g, &trees[i], &trees[i + 1], &setups[0].f, &setups[i].ys).unwrap())
        .collect();
    for l in &links {
        assert!(l.check(&g).pass());
    }
    let c = chain_compose(&g, &links).unwrap();
    assert!(c.decomposition.check(&g).pass());
    assert!(c.within_bound);
    assert_eq!(c.audit.failures + c.audit.mark_failures, 0);
}

#[test]
fn mismatched_chain_is_rejected() {
    let g = MetricGraph::path(41);
    let a = EpsilonSetup::unlabeled(&g, vec![0, 40], vec![20], 0.25).unwrap();
    let b = EpsilonSetup::unlabeled(&g, vec![0, 40], vec![10], 0.25).unwrap();
    let ta = stable_tree(&g, &a, &params()).unwrap();
    let tb = stable_tree(&g, &b, &params()).unwrap();
    let d1 = build_decomposition(&g, &ta, &ta, &a.f, &a.ys).unwrap();
    let d2 = build_decomposition(&g, &tb, &tb, &b.f, &b.ys).unwrap();
    assert!(chain_compose(&g, &[d1, d2]).is_err());
}

fn random_tree(parent_seed: &[usize]) -> MetricGraph {
    let mut parent = vec![0];
    for (i, &s) in parent_seed.iter().enumerate() {
        parent.push(s % (i + 1));
    }
    MetricGraph::from_parents(&parent).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cluster_graph_connected_under_gate(seed in proptest::collection::vec(0usize..1000, 20..80), picks in proptest::collection::vec(0usize..1000, 2..12)) {
        let g = random_tree(&seed);
        let n = g.n();
        let f: Vec<usize> = {
            let mut f: Vec<usize> = picks.iter().take(4).map(|&p| p % n).collect();
            f.sort_unstable();
            f.dedup();
            f
        };
        let lam = minimal_network(&g, &f.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
        let on: Vec<usize> = if lam.vertices.is_empty() { f.clone() } else { lam.vertices.clone() };
        let ys: Vec<usize> = picks.iter().skip(4).map(|&p| on[p % on.len()]).collect();
        let s = EpsilonSetup::unlabeled(&g, f, ys, 0.25).unwrap();
        let cg = cluster_graph(&g, &s, &params()).unwrap();
        prop_assert!(cg.diagnostics.connected);
        for c in 0..cg.len() {
            if cg.bivalent[c] {
                prop_assert_eq!(cg.adj[c].len(), 2);
                prop_assert!(!cg.has_f[c]);
            }
        }
    }

    #[test]
    fn one_point_decompositions_pass_on_random_trees(seed in proptest::collection::vec(0usize..1000, 30..90), picks in proptest::collection::vec(0usize..1000, 4..14), wpick in 0usize..1000) {
        let g = random_tree(&seed);
        let n = g.n();
        let mut f: Vec<usize> = picks.iter().take(3).map(|&p| p % n).collect();
        f.sort_unstable();
        f.dedup();
        let lam = minimal_network(&g, &f.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
        let on: Vec<usize> = if lam.vertices.is_empty() { f.clone() } else { lam.vertices.clone() };
        let ys: Vec<usize> = picks.iter().skip(3).map(|&p| on[p % on.len()]).collect();
        let w = on[wpick % on.len()];
        let s = EpsilonSetup::unlabeled(&g, f, ys, 0.25).unwrap();
        let op = one_point_decomposition(&g, &s, w, &params()).unwrap();
        let rep = op.decomposition.check(&g);
        prop_assert!(rep.pass(), "{:?}", rep.first_failure());
        prop_assert!(op.before.report.leaves_ok && op.after.report.leaves_ok);
        // gluing through multi-point clusters costs at most 2E per cluster crossed
        let bound = 2 * 4 * op.before.graph.len() as u64;
        prop_assert!(op.before.report.additive_distortion <= bound);
        let emb = collapse_and_embed(&g, &op.decomposition).unwrap();
        prop_assert!(emb.pass());
    }
}
