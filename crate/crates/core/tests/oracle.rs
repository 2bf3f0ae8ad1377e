mod common;

use common::{data, coauthors};
use openpdb::engine::EngineConfig;
use openpdb::io::load_3dm;
use openpdb::open_world::{Budget, MtpConstraint};
use openpdb::oracle::matching::{build_m0_instance, verify_maxmatch};
use openpdb::oracle::vertex::vertex_attainment;
use openpdb::oracle::{enumerate_completions, OracleConfig};

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn enumeration_visits_every_small_subset_once() {
    let (g, q) = coauthors();
    let mut seen = Vec::new();
    enumerate_completions(&g, &Budget::new("CoA", 2), &q, &OracleConfig::default(), |x, _| {
        seen.push(x.to_vec())
    })
    .unwrap();
    let want: usize = (0..=2).map(|k| binomial(13, k)).sum();
    assert_eq!(seen.len(), want);
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), want);
}

#[test]
fn single_triple_file() {
    let inst = load_3dm(data("3dm/single.3dm")).unwrap();
    let r = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
    assert!(r.passed, "{r}");
    assert_eq!(r.budget, 1);
    assert!((r.optimum - 0.9728).abs() < 1e-9);
}

#[test]
fn perfect_matching_file() {
    let inst = load_3dm(data("3dm/perfect.3dm")).unwrap();
    assert_eq!(inst.max_matching(), 3);
    let r = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
    assert!(r.passed && r.maximizers_are_matchings, "{r}");
}

#[test]
fn raising_k_past_the_matching_is_detected() {
    let mut inst = load_3dm(data("3dm/perfect.3dm")).unwrap();
    inst.edges.truncate(2);
    inst.edges.push(("x2".into(), "y0".into(), "z1".into()));
    // x0 y0 z0, x1 y1 z1, x2 y0 z1: at most 2 disjoint.
    assert_eq!(inst.max_matching(), 2);
    let r = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
    assert!(r.passed, "{r}");
    assert!(r.optimum < r.matching_value.unwrap());
}

#[test]
fn m0_budget_equals_k() {
    let inst = load_3dm(data("3dm/perfect.3dm")).unwrap();
    let (g, c, _) = build_m0_instance(&inst, 0.8).unwrap();
    let b = openpdb::open_world::budget_from_mtp(&g, &c).unwrap();
    assert_eq!(b.max_added, 3);
}

#[test]
fn vertex_check_on_coauthors_slice() {
    let (g, _) = coauthors();
    let q = openpdb::parse_ucq("S(x), CoA(x, Einstein)", g.schema()).unwrap();
    // Room for 1.5 tuples of λ = 0.5 beyond the known mass.
    let mean = (g.db.mass("CoA") + 0.75) / 16.0;
    let c = MtpConstraint::new("CoA", mean).unwrap();
    // 13 open CoA atoms exceed the vertex check's limit.
    assert!(vertex_attainment(&g, &c, &q, &EngineConfig::default()).is_err());
}
