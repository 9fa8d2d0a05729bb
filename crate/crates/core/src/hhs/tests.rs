use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::space::MetricGraph;

fn consts() -> Constants {
    Constants::default()
}

/// Parent path 0..=len; at each mark the ambient detours through a child path of length `l`.
///
/// Points before a bead project to 0 in its domain and points after it to `l`.
fn beads(len: usize, marks: &[usize], l: usize) -> HHSInstance {
    let k = marks.len();
    let mut pi_p = Vec::new();
    let mut pi_c: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut push = |p: usize, child: Option<(usize, usize)>| {
        pi_p.push(p);
        for (j, &m) in marks.iter().enumerate() {
            let v = match child {
                Some((i, t)) if i == j => t,
                _ if p <= m => 0,
                _ => l,
            };
            pi_c[j].push(v);
        }
    };
    for p in 0..=len {
        push(p, None);
        if let Some(i) = marks.iter().position(|&m| m == p) {
            for t in 1..=l {
                push(p, Some((i, t)));
            }
        }
    }
    let n = pi_p.len();
    let ambient = MetricGraph::path(n);
    let mut rel = vec![vec![Relation::Trans; k + 1]; k + 1];
    let mut rho_point = BTreeMap::new();
    let mut rho_table = BTreeMap::new();
    for i in 1..=k {
        rel[i][i] = Relation::Equal;
        rel[i][0] = Relation::Nested;
        rel[0][i] = Relation::Contains;
        let m = marks[i - 1];
        rho_point.insert((i, 0), m);
        rho_table.insert((0, i), (0..=len).map(|p| if p <= m { 0 } else { l }).collect());
        for j in 1..=k {
            if j != i {
                rho_point.insert((i, j), if marks[i - 1] < marks[j - 1] { 0 } else { l });
            }
        }
    }
    rel[0][0] = Relation::Equal;
    let mut domains = vec![Domain {
        name: "P".into(),
        graph: MetricGraph::path(len + 1),
    }];
    for i in 0..k {
        domains.push(Domain {
            name: format!("B{i}"),
            graph: MetricGraph::path(l + 1),
        });
    }
    let mut pi = vec![pi_p];
    pi.extend(pi_c);
    HHSInstance::new(
        Ambient::Graph(ambient),
        domains,
        rel,
        pi,
        rho_point,
        rho_table,
        vec![vec![0], (1..=k).collect()],
        vec![],
        consts(),
    )
    .unwrap()
}

fn flats() -> HHSInstance {
    let parent = MetricGraph::path(61);
    g3(parent, vec![(10, MetricGraph::path(30)), (40, MetricGraph::path(30))], consts()).unwrap()
}

#[test]
fn product_of_trees_validates() {
    let inst = g2(MetricGraph::path(8), MetricGraph::path(6), consts()).unwrap();
    let rep = validate_instance(&inst);
    assert!(rep.pass(), "{:?}", rep.violations);
    assert_eq!(rep.theta_margin, None);
}

#[test]
fn swapped_factors_carry_a_symmetry() {
    let inst = g2(MetricGraph::path(5), MetricGraph::path(5), consts()).unwrap();
    assert_eq!(inst.symmetries.len(), 1);
    assert!(validate_instance(&inst).pass());
}

#[test]
fn conflicting_relation_is_reported() {
    let mut inst = flats();
    inst.rel[1][0] = Relation::Trans;
    let rep = validate_instance(&inst);
    assert!(rep.failed(Check::Relation));
    assert!(rep.violations.iter().any(|v| v.check == Check::Relation && v.witness == vec![0, 1]));
}

#[test]
fn strict_pi_law_counterexample() {
    let mut inst = flats();
    assert!(validate_instance(&inst).pass());
    // a point deep in child 0 must project to ρ^{C0}_{C1} = 0 in child 1
    let x = (0..inst.ambient.n()).find(|&x| inst.pi[1][x] == 20).unwrap();
    inst.pi[2][x] = 1;
    let rep = validate_instance(&inst);
    assert!(rep.failed(Check::StrictPi));
    let v = rep.violations.iter().find(|v| v.check == Check::StrictPi).unwrap();
    assert_eq!(v.witness, vec![x, 1, 2]);
}

#[test]
fn strict_rho_law_counterexample() {
    let mut inst = beads(100, &[20, 50, 80], 30);
    assert!(validate_instance(&inst).pass());
    // B0 and B2 sit on opposite sides of B1, so ρ^{B0}_{B2} must equal ρ^{B1}_{B2}
    inst.rho_point.insert((1, 3), 30);
    let rep = validate_instance(&inst);
    assert!(rep.failed(Check::StrictRho));
}

#[test]
fn bgi_violation_is_reported() {
    let mut inst = flats();
    let t = inst.rho_table.get_mut(&(0, 1)).unwrap();
    t[60] = 25;
    let rep = validate_instance(&inst);
    assert!(rep.failed(Check::Bgi));
    assert!(rep.bgi_max_image >= 25);
}

#[test]
fn relevant_domains_of_a_product() {
    let inst = g2(MetricGraph::path(20), MetricGraph::path(20), consts()).unwrap();
    let a = inst.ambient.point(&[0, 0]);
    let b = inst.ambient.point(&[12, 3]);
    assert_eq!(rel_domains(&inst, &[a, b], 5.0).unwrap(), vec![1]);
    assert!(rel_domains(&inst, &[a], 5.0).unwrap().is_empty());
    assert!(rel_domains(&inst, &[a], 0.0).is_err());
}

#[test]
fn relevant_domains_match_a_scan() {
    let inst = flats();
    let f = [0, 60, inst.ambient.n() - 1];
    for k in [1.0, 10.0, 29.0, 30.0, 61.0] {
        let got = rel_domains(&inst, &f, k).unwrap();
        let mut want = Vec::new();
        for u in 0..inst.n_domains() {
            let g = inst.graph(u);
            let mut diam = 0;
            for &x in &f {
                for &y in &f {
                    diam = diam.max(g.d(inst.pi[u][x], inst.pi[u][y]));
                }
            }
            if diam as f64 >= k {
                want.push(u);
            }
        }
        assert_eq!(got, want, "K = {k}");
    }
}

#[test]
fn identical_sets_have_no_difference() {
    let inst = flats();
    let f = [0, 60];
    let dd = domain_diff(&inst, &f, &f, 20.0, 8.0).unwrap();
    assert!(dd.distinguished.is_empty() && dd.involved.is_empty() && dd.sporadic.is_empty());
}

#[test]
fn recombined_point_is_not_distinguished() {
    let inst = g2(MetricGraph::path(30), MetricGraph::path(30), consts()).unwrap();
    let f1 = inst.ambient.point(&[0, 0]);
    let f2 = inst.ambient.point(&[25, 25]);
    let xp = inst.ambient.point(&[0, 25]);
    let dd = domain_diff(&inst, &[f1, f2], &[f1, f2, xp], 20.0, 8.0).unwrap();
    assert!(dd.distinguished.is_empty());
}

#[test]
fn child_turning_relevant_involves_the_parent() {
    let inst = flats();
    let deep = (0..inst.ambient.n()).find(|&x| inst.pi[1][x] == 29).unwrap();
    let dd = domain_diff(&inst, &[0, 60], &[0, 60, deep], 20.0, 8.0).unwrap();
    assert_eq!(dd.involved, vec![Involved { domain: 0, added: vec![1] }]);
    assert!(dd.sporadic.is_empty());
    assert_eq!(dd.consistency_failures, 0);
}

#[test]
fn subset_precondition() {
    let inst = flats();
    assert!(domain_diff(&inst, &[0, 5], &[0], 20.0, 8.0).is_err());
}

#[test]
fn passing_up_trivial_cases() {
    let inst = g1(MetricGraph::path(100), consts()).unwrap();
    assert_eq!(passing_up_probe(&inst, 0, 99, &[0], 10.0, 20.0, 40, 1).unwrap(), None);
    let inst = beads(200, &[20, 60, 100, 140, 180], 60);
    let end = inst.ambient.n() - 1;
    assert_eq!(passing_up_probe(&inst, 0, end, &[], 50.0, 60.0, 40, 1).unwrap(), None);
    assert!(passing_up_probe(&inst, 0, end, &[], 50.0, 60.0, 39, 1).is_err());
}

#[test]
fn passing_up_finds_the_parent() {
    let marks: Vec<usize> = (1..10).map(|i| 20 * i).collect();
    let inst = beads(200, &marks, 60);
    assert!(validate_instance(&inst).pass());
    let end = inst.ambient.n() - 1;
    let family: Vec<usize> = (1..=marks.len()).collect();
    let w = passing_up_probe(&inst, 0, end, &family, 50.0, 100.0, 40, 4).unwrap().unwrap();
    assert_eq!(w.w, 0);
    assert_eq!(w.family, family);
    assert_eq!(w.diameter, 160);
    // independent count: subintervals [40i, 40(i+1)] meeting some mark
    let want = (0..5).filter(|&i| marks.iter().any(|&m| 40 * i <= m && m <= 40 * (i + 1))).count();
    assert_eq!(w.occupied, want);
    assert!(w.occupied >= 4);
}

#[test]
fn hull_of_two_points_in_a_product() {
    let inst = g2(MetricGraph::path(10), MetricGraph::path(10), consts()).unwrap();
    let a = inst.ambient.point(&[2, 2]);
    let b = inst.ambient.point(&[5, 4]);
    let h = hhs_hull(&inst, &[a, b], 0.0).unwrap();
    assert_eq!(h.len(), 4 * 3);
    let h1 = hhs_hull(&inst, &[a, b], 1.0).unwrap();
    assert_eq!(h1.len(), 6 * 5);
}

#[test]
fn transverse_free_family() {
    let inst = beads(120, &[20, 50, 80, 110], 30);
    let end = inst.ambient.n() - 1;
    // P plus any two beads; three beads form a transverse triple
    assert_eq!(transverse_free_bound(&inst, 0, end, 10.0).unwrap(), 3);
}

#[test]
fn document_round_trip() {
    let inst = flats();
    let json = inst.to_json();
    let back = HHSInstance::from_json(&json).unwrap();
    assert_eq!(back.to_doc(), inst.to_doc());
    let bad = json.replacen(INSTANCE_FORMAT, "hullcube/instance/v0", 1);
    assert!(matches!(HHSInstance::from_json(&bad), Err(crate::Error::Format(_))));
    assert!(matches!(HHSInstance::from_json("{\"format\": 1}"), Err(crate::Error::Format(_))));
}

fn random_tree(seed: &[usize]) -> MetricGraph {
    let mut parent = vec![0];
    for (i, &s) in seed.iter().enumerate() {
        parent.push(s % (i + 1));
    }
    MetricGraph::from_parents(&parent).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_flats_validate(seed in proptest::collection::vec(0usize..1000, 10..40), kids in proptest::collection::vec((0usize..1000, 2usize..15), 0..4)) {
        let parent = random_tree(&seed);
        let np = parent.n();
        let children = kids.iter().map(|&(m, l)| (m % np, MetricGraph::path(l))).collect();
        let inst = g3(parent, children, consts()).unwrap();
        let rep = validate_instance(&inst);
        prop_assert!(rep.pass(), "{:?}", rep.violations);
    }

    #[test]
    fn domain_sets_shrink_as_k_grows(picks in proptest::collection::vec(0usize..10_000, 2..6), k in 1.0f64..40.0) {
        let inst = flats();
        let n = inst.ambient.n();
        let f2: Vec<usize> = picks.iter().map(|&p| p % n).collect();
        let f = &f2[..1.max(f2.len() / 2)];
        let lo = domain_diff(&inst, f, &f2, k, 8.0).unwrap();
        let hi = domain_diff(&inst, f, &f2, k + 5.0, 8.0).unwrap();
        prop_assert!(hi.relevant.iter().all(|u| lo.relevant.contains(u)));
        prop_assert!(hi.relevant_prime.iter().all(|u| lo.relevant_prime.contains(u)));
        prop_assert_eq!(lo.consistency_failures, 0);
    }
}
