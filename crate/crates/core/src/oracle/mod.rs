//! Brute-force optimization, random instance generators, the
//! 3-dimensional-matching construction and the property suites.

pub mod gen;
pub mod matching;
pub mod suites;
pub mod vertex;

use crate::db::{GroundAtom, TupleSource};
use crate::engine::{is_safe, prob_ground, EngineConfig, Lifted};
use crate::error::{Error, Result};
use crate::exact_dp::{next_subset, subset_count};
use crate::open_world::{
    budget_from_mtp, compare_candidates, relevant_open_tuples, BoundKind, BoundResult, Budget,
    CompletionChoice, MtpConstraint, OpenPdb,
};
use crate::prob::Prob;
use crate::query::Ucq;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Most completions enumerated.
    pub subset_cap: u128,
    /// Used for queries without a lifted plan.
    pub engine: EngineConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            subset_cap: 200_000,
            engine: EngineConfig::default(),
        }
    }
}

/// Evaluates `q` on any source, lifted when possible and by world
/// enumeration otherwise.
pub fn evaluate(q: &Ucq, src: &dyn TupleSource, safe: bool, engine: &EngineConfig) -> Result<Prob> {
    if safe {
        Lifted::with_config(src, engine.clone()).eval(q)
    } else {
        prob_ground(q, src, engine).map(Prob::new)
    }
}

/// Calls `visit` with every completion of at most `budget.max_added`
/// relevant open tuples, in lexicographic depth-first order.
pub fn enumerate_completions(
    g: &OpenPdb,
    budget: &Budget,
    q: &Ucq,
    config: &OracleConfig,
    mut visit: impl FnMut(&[GroundAtom], Prob),
) -> Result<()> {
    let atoms = relevant_open_tuples(g, &budget.relation, q)?;
    let max_size = if g.lambda > 0.0 {
        budget.max_added.min(atoms.len())
    } else {
        0
    };
    let count = subset_count(atoms.len(), max_size);
    if count > config.subset_cap {
        return Err(Error::ResourceLimit {
            what: "completions enumerated by the oracle",
            needed: count,
            limit: config.subset_cap,
        });
    }
    let safe = is_safe(q);
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let added: Vec<GroundAtom> = chosen.iter().map(|&i| atoms[i].clone()).collect();
        let value = evaluate(q, &g.with_added(&added), safe, &config.engine)?;
        visit(&added, value);
        if !next_subset(&mut chosen, atoms.len(), max_size) {
            return Ok(());
        }
    }
}

/// Exact MTP upper bound by enumeration.
pub fn mtp_upper_bruteforce(g: &OpenPdb, c: &MtpConstraint, q: &Ucq) -> Result<BoundResult> {
    let budget = budget_from_mtp(g, c)?;
    mtp_upper_bruteforce_budget(g, &budget, q, &OracleConfig::default())
}

pub fn mtp_upper_bruteforce_budget(
    g: &OpenPdb,
    budget: &Budget,
    q: &Ucq,
    config: &OracleConfig,
) -> Result<BoundResult> {
    let schema = g.schema();
    type Best = (Prob, Vec<(String, Vec<usize>)>, Vec<GroundAtom>);
    let mut best: Option<Best> = None;
    enumerate_completions(g, budget, q, config, |added, value| {
        let keys: Vec<_> = added.iter().map(|a| schema.atom_key(a)).collect();
        let better = match &best {
            None => true,
            Some((v, k, _)) => compare_candidates((value, &keys), (*v, k)).is_lt(),
        };
        if better {
            best = Some((value, keys, added.to_vec()));
        }
    })?;
    let (value, _, witness) = best.expect("the empty completion is always visited");
    Ok(BoundResult {
        kind: BoundKind::MtpOracle,
        value,
        interval: None,
        witness: Some(CompletionChoice::new(schema, witness)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::{Database, Schema};
    use crate::query::parse_ucq;

    fn open_unary(domain: &[&str], lambda: f64) -> OpenPdb {
        let schema = Schema::new([("R", 1)], domain.iter().map(|s| s.to_string()).collect()).unwrap();
        OpenPdb::new(Database::new(schema), lambda).unwrap()
    }

    #[test]
    fn zero_budget_is_closed_world() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let r = mtp_upper_bruteforce_budget(&g, &Budget::new("R", 0), &q, &OracleConfig::default())
            .unwrap();
        assert_eq!(r.value.value(), 0.0);
        assert!(r.witness.unwrap().is_empty());
    }

    #[test]
    fn full_budget_on_existential() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let r = mtp_upper_bruteforce_budget(&g, &Budget::new("R", 2), &q, &OracleConfig::default())
            .unwrap();
        assert!((r.value.value() - 0.75).abs() < 1e-15);
        assert_eq!(
            r.witness.unwrap().added,
            vec![GroundAtom::new("R", ["A"]), GroundAtom::new("R", ["B"])]
        );
    }

    #[test]
    fn cap_is_enforced() {
        let names: Vec<String> = (0..30).map(|i| format!("C{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let g = open_unary(&refs, 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let cfg = OracleConfig {
            subset_cap: 1000,
            ..OracleConfig::default()
        };
        assert!(matches!(
            mtp_upper_bruteforce_budget(&g, &Budget::new("R", 5), &q, &cfg),
            Err(Error::ResourceLimit { .. })
        ));
    }
}
