//! Greedy MTP-constrained upper bounds with the `1 - 1/e` interval.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::E;

use crate::db::GroundAtom;
use crate::engine::Lifted;
use crate::error::{Error, Result};
use crate::open_world::{
    budget_from_mtp, relevant_open_tuples, BoundKind, BoundResult, Budget, CompletionChoice,
    MtpConstraint, OpenPdb,
};
use crate::prob::Prob;
use crate::query::{has_self_join, Ucq};

/// The picks and bounds of one greedy run.
#[derive(Clone, Debug)]
pub struct GreedyTrace {
    pub picks: Vec<(GroundAtom, f64)>,
    pub p_closed: Prob,
    pub p_greedy: Prob,
    pub lower: f64,
    /// `(e p_greedy - p_closed) / (e - 1)`; may exceed one.
    pub upper: f64,
    /// False when the query has self-joins and the bound carries no guarantee.
    pub guaranteed: bool,
}

impl GreedyTrace {
    pub fn upper_clamped(&self) -> f64 {
        self.upper.min(1.0)
    }
}

/// `S(X)`: the probability of `q` with the atoms of `x` added at λ.
pub fn set_query_prob(g: &OpenPdb, q: &Ucq, x: &[GroundAtom]) -> Result<Prob> {
    Lifted::new(&g.with_added(x)).eval(q)
}

/// `S(X) - S(∅)`.
pub fn normalized_set_query_prob(g: &OpenPdb, q: &Ucq, x: &[GroundAtom]) -> Result<f64> {
    let base = set_query_prob(g, q, &[])?;
    Ok(gain(base, set_query_prob(g, q, x)?))
}

/// `after - before`, computed from complements when both are near one.
fn gain(before: Prob, after: Prob) -> f64 {
    if before.value() > 0.5 && after.value() > 0.5 {
        -before.complement() * (after.log_complement() - before.log_complement()).exp_m1()
    } else {
        after.value() - before.value()
    }
}

/// Greedy upper bound under the budget derived from `c`.
pub fn greedy_upper(g: &OpenPdb, c: &MtpConstraint, q: &Ucq, force: bool) -> Result<(BoundResult, GreedyTrace)> {
    let budget = budget_from_mtp(g, c)?;
    greedy_upper_budget(g, &budget, q, force)
}

#[derive(PartialEq)]
struct Entry {
    gain: f64,
    index: Reverse<usize>,
    round: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| self.index.cmp(&other.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy greedy: stale gains are upper bounds on fresh ones by
/// submodularity, so a popped entry that is fresh for this round is the
/// best pick.
pub fn greedy_upper_budget(
    g: &OpenPdb,
    budget: &Budget,
    q: &Ucq,
    force: bool,
) -> Result<(BoundResult, GreedyTrace)> {
    let guaranteed = !has_self_join(q);
    if !guaranteed && !force {
        return Err(Error::Invalid(
            "query has self-joins; the greedy bound needs --force and carries no guarantee".into(),
        ));
    }
    let candidates = relevant_open_tuples(g, &budget.relation, q)?;
    let p_closed = set_query_prob(g, q, &[])?;
    let mut current = p_closed;
    let mut chosen: Vec<GroundAtom> = Vec::new();
    let mut picks = Vec::new();
    let mut heap: BinaryHeap<Entry> = candidates
        .iter()
        .enumerate()
        .map(|(i, _)| Entry {
            gain: f64::INFINITY,
            index: Reverse(i),
            round: usize::MAX,
        })
        .collect();
    let mut round = 0;
    while chosen.len() < budget.max_added && g.lambda > 0.0 {
        let Some(top) = heap.pop() else { break };
        let i = top.index.0;
        if top.round == round {
            if top.gain <= 0.0 {
                break;
            }
            chosen.push(candidates[i].clone());
            current = set_query_prob(g, q, &chosen)?;
            picks.push((candidates[i].clone(), top.gain));
            round += 1;
            continue;
        }
        chosen.push(candidates[i].clone());
        let with = set_query_prob(g, q, &chosen)?;
        chosen.pop();
        heap.push(Entry {
            gain: gain(current, with),
            index: top.index,
            round,
        });
    }
    let lower = current.value();
    let upper = (E * lower - p_closed.value()) / (E - 1.0);
    let trace = GreedyTrace {
        picks,
        p_closed,
        p_greedy: current,
        lower,
        upper,
        guaranteed,
    };
    let result = BoundResult {
        kind: BoundKind::MtpGreedy,
        value: current,
        interval: guaranteed.then(|| (lower, upper.min(1.0))),
        witness: Some(CompletionChoice::new(g.schema(), chosen)),
    };
    Ok((result, trace))
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
    fn zero_budget_collapses() {
        let schema = Schema::new([("R", 1)], vec!["A".into(), "B".into()]).unwrap();
        let mut db = Database::new(schema);
        db.insert(GroundAtom::new("R", ["A"]), 0.3).unwrap();
        let g = OpenPdb::new(db, 0.5).unwrap();
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let (r, t) = greedy_upper_budget(&g, &Budget::new("R", 0), &q, false).unwrap();
        assert_eq!(r.interval, Some((0.3, 0.3)));
        assert!((t.upper - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_pick_interval() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let (r, t) = greedy_upper_budget(&g, &Budget::new("R", 1), &q, false).unwrap();
        assert_eq!(r.value.value(), 0.5);
        let (lo, hi) = r.interval.unwrap();
        assert_eq!(lo, 0.5);
        assert!((hi - E * 0.5 / (E - 1.0)).abs() < 1e-15);
        assert!((hi - 0.7909).abs() < 1e-4);
        assert_eq!(t.picks, vec![(GroundAtom::new("R", ["A"]), 0.5)]);
    }

    #[test]
    fn set_probabilities() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let all = g.open_tuples("R").unwrap();
        assert_eq!(set_query_prob(&g, &q, &[]).unwrap().value(), 0.0);
        let full = Lifted::new(&g.relation_completion("R")).eval(&q).unwrap();
        assert!(set_query_prob(&g, &q, &all).unwrap().approx_eq(full, 1e-15));
        assert_eq!(normalized_set_query_prob(&g, &q, &[]).unwrap(), 0.0);
        assert!((normalized_set_query_prob(&g, &q, &all[..1]).unwrap() - 0.5).abs() < 1e-15);

        let none = open_unary(&["A", "B"], 0.0);
        assert_eq!(normalized_set_query_prob(&none, &q, &all).unwrap(), 0.0);
    }

    #[test]
    fn self_joins_need_force() {
        let schema = Schema::new([("E", 2)], vec!["A".into(), "B".into()]).unwrap();
        let g = OpenPdb::new(Database::new(schema), 0.5).unwrap();
        let q = parse_ucq("E(x,A), E(x,B)", g.schema()).unwrap();
        let budget = Budget::new("E", 1);
        assert!(greedy_upper_budget(&g, &budget, &q, false).is_err());
        let (r, t) = greedy_upper_budget(&g, &budget, &q, true).unwrap();
        assert!(!t.guaranteed);
        assert!(r.interval.is_none());
    }

    #[test]
    fn gain_keeps_tiny_complements() {
        let before = Prob::from_log_complement(-60.0);
        let after = Prob::from_log_complement(-61.0);
        let g = gain(before, after);
        let expect = (-60.0f64).exp() - (-61.0f64).exp();
        assert!((g / expect - 1.0).abs() < 1e-12);
    }
}
