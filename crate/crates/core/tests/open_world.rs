mod common;

use common::{coauthors, stored_coa, q1_by_persons};
use openpdb::open_world::{
    budget_from_constraints, budget_from_mtp, budget_from_mtp_with, interval_unconstrained,
    relevant_open_tuples, MtpConstraint, MtpDenominator, OpenPdb,
};
use openpdb::io::load_dir;
use openpdb::{Database, GroundAtom, Schema};
use proptest::prelude::*;

#[test]
fn coauthors_interval_ends() {
    let (g, q) = coauthors();
    let r = interval_unconstrained(&g, &q).unwrap();
    let (lo, hi) = r.interval.unwrap();
    assert!((lo - q1_by_persons(|x, y| stored_coa(x, y).unwrap_or(0.0))).abs() < 1e-12);
    assert!((hi - q1_by_persons(|x, y| stored_coa(x, y).unwrap_or(g.lambda))).abs() < 1e-12);
    assert_eq!(r.upper(), Some(hi));
}

#[test]
fn coauthors_budget_from_constraints_file() {
    let loaded = load_dir(common::data("coauthors")).unwrap();
    let g = OpenPdb::new(loaded.db, loaded.constraints.lambda.unwrap()).unwrap();
    let b = budget_from_constraints(&g, &loaded.constraints.mtp, MtpDenominator::Herbrand).unwrap();
    // (2.2 + 0.5 b) / 16 < 0.25 holds up to b = 3.
    assert_eq!((b.relation.as_str(), b.max_added, b.infeasible), ("CoA", 3, false));
}

#[test]
fn relevant_tuples_follow_query_constants() {
    let (g, _) = coauthors();
    let q = openpdb::parse_ucq("S(x), CoA(x, Einstein)", g.schema()).unwrap();
    let rel = relevant_open_tuples(&g, "CoA", &q).unwrap();
    // Every CoA(_, Einstein) except the known VonNeumann one.
    assert_eq!(rel.len(), 3);
    assert!(rel.iter().all(|a| a.args[1] == "Einstein"));
}

#[test]
fn pinned_zero_atoms_are_closed() {
    let schema = Schema::new([("R", 1)], vec!["a".into(), "b".into()]).unwrap();
    let mut db = Database::new(schema);
    db.insert(GroundAtom::new("R", ["a"]), 0.0).unwrap();
    let g = OpenPdb::new(db, 0.5).unwrap();
    assert_eq!(g.open_tuples("R").unwrap(), vec![GroundAtom::new("R", ["b"])]);
}

fn unary(n: usize, known: &[f64], lambda: f64) -> OpenPdb {
    let domain: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let schema = Schema::new([("R", 1)], domain.clone()).unwrap();
    let mut db = Database::new(schema);
    for (c, p) in domain.iter().zip(known) {
        db.insert(GroundAtom::new("R", [c.clone()]), *p).unwrap();
    }
    OpenPdb::new(db, lambda).unwrap()
}

proptest! {
    /// The budget is the largest count whose mean stays below the bound.
    #[test]
    fn herbrand_budget_is_maximal(
        n in 1usize..20,
        known in prop::collection::vec(0.05f64..1.0, 0..20),
        lambda in 0.05f64..1.0,
        mean in 0.01f64..1.0,
    ) {
        let known = &known[..known.len().min(n)];
        let g = unary(n, known, lambda);
        let b = budget_from_mtp(&g, &MtpConstraint::new("R", mean).unwrap()).unwrap();
        let mass: f64 = known.iter().sum();
        let m = |k: usize| (mass + k as f64 * lambda) / n as f64;
        let open = n - known.len();
        if b.infeasible {
            prop_assert!(m(0) >= mean - 1e-9);
        } else {
            prop_assert!(b.max_added <= open);
            prop_assert!(m(b.max_added) < mean - 1e-9 + 1e-12);
            prop_assert!(b.max_added == open || m(b.max_added + 1) >= mean - 1e-9 - 1e-12);
        }
    }

    #[test]
    fn support_budget_respects_its_mean(
        n in 1usize..20,
        known in prop::collection::vec(0.05f64..1.0, 1..20),
        lambda in 0.05f64..1.0,
        mean in 0.01f64..1.0,
    ) {
        let known = &known[..known.len().min(n)];
        let g = unary(n, known, lambda);
        let c = MtpConstraint::new("R", mean).unwrap();
        let b = budget_from_mtp_with(&g, &c, MtpDenominator::Support).unwrap();
        let mass: f64 = known.iter().sum();
        let m = |k: usize| (mass + k as f64 * lambda) / (known.len() + k) as f64;
        if !b.infeasible {
            prop_assert!(m(b.max_added) < mean - 1e-9 + 1e-12);
        }
    }
}
