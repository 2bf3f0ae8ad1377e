mod common;

use common::{coauthors, stored_coa, q1_by_persons};
use openpdb::engine::{is_safe, prob_ground, prob_lifted, EngineConfig, Lifted};
use openpdb::oracle::gen::{random_database, random_safe_query, random_schema, GenConfig, QueryFilter};
use openpdb::{parse_ucq, Error};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn coauthors_q1_matches_person_factorization() {
    let (g, q) = coauthors();
    let want = q1_by_persons(|x, y| stored_coa(x, y).unwrap_or(0.0));
    let got = prob_lifted(&q, &g.db).unwrap();
    assert!((got - want).abs() < 1e-12);
    assert!((prob_ground(&q, &g.db, &EngineConfig::default()).unwrap() - want).abs() < 1e-12);
}

#[test]
fn unsafe_query_is_reported_and_ground_still_works() {
    let (g, _) = coauthors();
    let q = parse_ucq("S(x), CoA(x,y), S(y)", g.schema()).unwrap();
    assert!(!is_safe(&q));
    assert!(matches!(prob_lifted(&q, &g.db), Err(Error::UnsafeQuery(_))));
    // Only pairs (x,y) with a CoA tuple matter; their S atoms overlap.
    let p = prob_ground(&q, &g.db, &EngineConfig::default()).unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn complements_survive_near_one() {
    let (g, q) = coauthors();
    let full = Lifted::new(&g.full_completion()).eval(&q).unwrap();
    let want = q1_by_persons(|x, y| stored_coa(x, y).unwrap_or(g.lambda));
    assert!((full.value() - want).abs() < 1e-12);
    assert!(full.log_complement() < 0.0);
}

fn instance(seed: u64) -> Option<(openpdb::Database, openpdb::Ucq)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GenConfig::default();
    let schema = random_schema(&mut rng, &cfg);
    let q = random_safe_query(&mut rng, &schema, &cfg, QueryFilter::default(), 50)?;
    let db = random_database(&mut rng, &schema, &cfg);
    Some((db, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifted_equals_ground(seed in any::<u64>()) {
        if let Some((db, q)) = instance(seed) {
            let l = prob_lifted(&q, &db).unwrap();
            let g = prob_ground(&q, &db, &EngineConfig::default()).unwrap();
            prop_assert!((l - g).abs() <= 1e-9, "{q}: {l} vs {g}");
        }
    }

    #[test]
    fn raising_a_tuple_never_lowers(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        if let Some((db, q)) = instance(seed) {
            let before = prob_lifted(&q, &db).unwrap();
            let tuples = db.all_tuples();
            if !tuples.is_empty() {
                let i = pick.index(tuples.len());
                let mut raised = openpdb::Database::new(db.schema().clone());
                for (j, (atom, p)) in tuples.into_iter().enumerate() {
                    raised.insert(atom, if i == j { (p + 1.0) / 2.0 } else { p }).unwrap();
                }
                let after = prob_lifted(&q, &raised).unwrap();
                prop_assert!(after >= before - 1e-12);
            }
        }
    }
}
