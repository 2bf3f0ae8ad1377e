//! Exact MTP-constrained upper bounds for inversion-free queries.
//!
//! The solver mirrors lifted evaluation but returns, for every budget
//! `b = 0..=B`, the best probability reachable by adding at most `b` open
//! tuples of the constrained relation at probability λ. Independent parts
//! combine by max-convolution over the budget split; a separator variable
//! folds constants in one at a time (the `D` recurrence), each constant
//! contributing its own table `A(c, k)`.
//!
//! Inclusion-exclusion needs the joint values of all its terms under one
//! allocation, so those are tracked as Pareto sets of value vectors. Where
//! no common separator exists the solver enumerates the subsets of the
//! relevant open tuples directly, which stays exact.

use std::collections::HashMap;
use std::rc::Rc;

use crate::db::{GroundAtom, TupleSource};
use crate::engine::Lifted;
use crate::error::{Error, Result};
use crate::open_world::{
    budget_from_mtp, compare_candidates, relevant_open_tuples, BoundKind, BoundResult, Budget,
    CompletionChoice, MtpConstraint, OpenPdb, TIE_TOLERANCE,
};
use crate::prob::Prob;
use crate::query::rewrite::{
    cnf, find_separator, independent_conjunct_groups, independent_disjunct_groups,
    inclusion_exclusion_terms, key, separator_constants, simplify, substitute_root, Fixed,
};
use crate::query::{is_inversion_free, ConjunctiveQuery, Ucq};

/// Domain indices of an atom of the constrained relation.
type Key = Vec<usize>;

#[derive(Clone, Debug)]
pub struct DpConfig {
    /// Largest budget the tables are built for; larger budgets that still
    /// fall short of the number of relevant open tuples are refused.
    pub max_budget: usize,
    /// Most subsets enumerated where no separator applies.
    pub subset_cap: u128,
    /// Largest Pareto set kept per budget.
    pub pareto_cap: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            max_budget: 4096,
            subset_cap: 200_000,
            pareto_cap: 20_000,
        }
    }
}

/// A value together with the open tuples that reach it, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub value: Prob,
    pub witness: Vec<Key>,
}

impl Candidate {
    fn empty(value: Prob) -> Candidate {
        Candidate {
            value,
            witness: Vec::new(),
        }
    }

    fn beats(&self, other: &Candidate) -> bool {
        compare_candidates((self.value, &self.witness), (other.value, &other.witness)).is_lt()
    }
}

/// Best candidate for a sub-query per budget: entry `b` uses at most `b`
/// added tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct ATable {
    pub entries: Vec<Candidate>,
}

/// Running fold of a separator over a prefix of the constants, per budget.
#[derive(Clone, Debug, PartialEq)]
pub struct DTable {
    pub entries: Vec<Candidate>,
}

impl DTable {
    /// The table for the empty prefix.
    pub fn empty(budget: usize) -> DTable {
        DTable {
            entries: vec![Candidate::empty(Prob::ZERO); budget + 1],
        }
    }
}

fn merge(a: &[Key], b: &[Key]) -> Vec<Key> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.sort();
    out.dedup();
    out
}

/// Every budget gives the same value with nothing added.
fn is_flat(entries: &[Candidate]) -> bool {
    entries
        .iter()
        .all(|c| c.witness.is_empty() && c.value.value() == entries[0].value.value())
}

/// Max-convolution of two frontiers under a monotone combination. `y` may
/// be shorter than `x`.
fn convolve(x: &[Candidate], y: &[Candidate], op: impl Fn(Prob, Prob) -> Prob) -> Vec<Candidate> {
    if y.is_empty() {
        return x.to_vec();
    }
    if is_flat(y) {
        return x
            .iter()
            .map(|c| Candidate {
                value: op(c.value, y[0].value),
                witness: c.witness.clone(),
            })
            .collect();
    }
    let mut out: Vec<Candidate> = Vec::with_capacity(x.len());
    for b in 0..x.len() {
        let mut best: Option<Candidate> = None;
        for k in 0..=b.min(y.len() - 1) {
            let cand = Candidate {
                value: op(x[b - k].value, y[k].value),
                witness: merge(&x[b - k].witness, &y[k].witness),
            };
            if best.as_ref().is_none_or(|cur| cand.beats(cur)) {
                best = Some(cand);
            }
        }
        out.push(best.expect("k = 0 always present"));
    }
    out
}

/// Folds one more separator constant into the running table:
/// `D'(b) = max over k ≤ b of 1 - (1 - D(b - k)) (1 - A(k))`.
pub fn dp_eliminate(d_prev: &DTable, a: &ATable) -> DTable {
    DTable {
        entries: convolve(&d_prev.entries, &a.entries, Prob::or),
    }
}

/// Builds the table of best probabilities of `q` per budget, where `q` is a
/// sub-query already specialized to one separator constant.
pub fn build_a_table(g: &OpenPdb, budget: &Budget, q: &Ucq) -> Result<ATable> {
    let mut solver = Solver::new(g, &budget.relation, budget.max_added, DpConfig::default());
    Ok(ATable {
        entries: solver.solve(q)?.as_ref().clone(),
    })
}

/// Exact upper probability of `q` over all completions allowed by `c`.
pub fn mtp_upper_exact(g: &OpenPdb, c: &MtpConstraint, q: &Ucq) -> Result<BoundResult> {
    let budget = budget_from_mtp(g, c)?;
    mtp_upper_exact_budget(g, &budget, q, &DpConfig::default())
}

/// Exact upper probability of `q` when at most `budget.max_added` tuples
/// may be added.
pub fn mtp_upper_exact_budget(
    g: &OpenPdb,
    budget: &Budget,
    q: &Ucq,
    config: &DpConfig,
) -> Result<BoundResult> {
    if !is_inversion_free(q) {
        return Err(Error::NotInversionFree(q.to_string()));
    }
    let rel = budget.relation.as_str();
    let relevant = relevant_open_tuples(g, rel, q)?;
    let b = budget.max_added.min(relevant.len());
    let (value, witness) = if b == 0 || g.lambda <= 0.0 {
        (Lifted::new(&g.db).eval(q)?, Vec::new())
    } else if b > config.max_budget {
        return Err(Error::ResourceLimit {
            what: "dynamic program budget",
            needed: b as u128,
            limit: config.max_budget as u128,
        });
    } else {
        let mut solver = Solver::new(g, rel, b, config.clone());
        let best = solver.solve(q)?[b].clone();
        let domain = g.schema().domain();
        let atoms = best
            .witness
            .iter()
            .map(|k| GroundAtom::new(rel, k.iter().map(|&i| domain[i].clone())))
            .collect();
        (best.value, atoms)
    };
    Ok(BoundResult {
        kind: BoundKind::MtpExact,
        value,
        interval: None,
        witness: Some(CompletionChoice::new(g.schema(), witness)),
    })
}

/// A vector of term values under one allocation.
#[derive(Clone, Debug)]
struct VCand {
    vals: Vec<Prob>,
    witness: Vec<Key>,
}

/// Per budget, the Pareto set of reachable term vectors.
type VFrontier = Vec<Vec<VCand>>;

/// Direction in which a term's value helps the objective.
type Dir = i8;

struct Solver<'a> {
    g: &'a OpenPdb,
    rel: &'a str,
    budget: usize,
    config: DpConfig,
    closed: Lifted<'a>,
    memo: HashMap<String, Rc<Vec<Candidate>>>,
    vmemo: HashMap<String, Rc<VFrontier>>,
}

impl<'a> Solver<'a> {
    fn new(g: &'a OpenPdb, rel: &'a str, budget: usize, config: DpConfig) -> Self {
        Solver {
            g,
            rel,
            budget,
            config,
            closed: Lifted::new(&g.db),
            memo: HashMap::new(),
            vmemo: HashMap::new(),
        }
    }

    fn simplify(&self, q: &Ucq) -> Ucq {
        simplify(q, &|a| {
            if self.g.is_open(self.rel, a) {
                Fixed::Unknown
            } else {
                match self.g.db.prob(a) {
                    p if p <= 0.0 => Fixed::False,
                    p if p >= 1.0 => Fixed::True,
                    _ => Fixed::Unknown,
                }
            }
        })
    }

    /// Whether some atom of `q` could be an open tuple.
    fn touches_open(&self, q: &Ucq) -> bool {
        q.atoms().any(|a| {
            a.pred == self.rel
                && GroundAtom::from_atom(a).is_none_or(|g| self.g.is_open(self.rel, &g))
        })
    }

    fn key_of(&self, atom: &GroundAtom) -> Key {
        self.g.schema().atom_key(atom).1
    }

    fn flat(&self, value: Prob) -> Vec<Candidate> {
        vec![Candidate::empty(value); self.budget + 1]
    }

    fn solve(&mut self, q: &Ucq) -> Result<Rc<Vec<Candidate>>> {
        let q = self.simplify(q);
        if q.is_false() {
            return Ok(Rc::new(self.flat(Prob::ZERO)));
        }
        if q.is_true() {
            return Ok(Rc::new(self.flat(Prob::ONE)));
        }
        if !self.touches_open(&q) {
            let v = self.closed.eval(&q)?;
            return Ok(Rc::new(self.flat(v)));
        }
        let k = key(&q);
        if let Some(hit) = self.memo.get(&k) {
            return Ok(hit.clone());
        }
        let out = Rc::new(self.solve_inner(&q)?);
        self.memo.insert(k, out.clone());
        Ok(out)
    }

    fn solve_inner(&mut self, q: &Ucq) -> Result<Vec<Candidate>> {
        if let [cq] = q.disjuncts() {
            if let [atom] = cq.atoms() {
                if let Some(g) = GroundAtom::from_atom(atom) {
                    // Open by `touches_open`.
                    let mut out = self.flat(Prob::new(self.g.lambda));
                    out[0] = Candidate::empty(Prob::ZERO);
                    let k = self.key_of(&g);
                    for c in &mut out[1..] {
                        c.witness = vec![k.clone()];
                    }
                    return Ok(out);
                }
            }
        }
        let groups = independent_disjunct_groups(q);
        if groups.len() > 1 {
            let mut acc = self.flat(Prob::ZERO);
            for g in &groups {
                let f = self.solve(g)?;
                acc = convolve(&acc, &f, Prob::or);
            }
            return Ok(acc);
        }
        if let Some(conj) = cnf(q)? {
            return self.solve_conjunction(conj);
        }
        let cqs: Vec<&ConjunctiveQuery> = q.disjuncts().iter().collect();
        if let Some(sep) = find_separator(&cqs) {
            let mut d = DTable::empty(self.budget);
            for c in separator_constants(self.g.schema().domain(), q) {
                let sub: Vec<_> = q
                    .disjuncts()
                    .iter()
                    .zip(&sep.roots)
                    .filter_map(|(cq, root)| substitute_root(cq, root.as_deref(), &sep, &c))
                    .collect();
                if sub.is_empty() {
                    continue;
                }
                let a = ATable {
                    entries: self.solve(&Ucq::new(sub))?.as_ref().clone(),
                };
                d = dp_eliminate(&d, &a);
            }
            return Ok(d.entries);
        }
        let v = self.brute_force(std::slice::from_ref(q), &[1])?;
        Ok(self.best_of(&v, &[1]))
    }

    fn solve_conjunction(&mut self, conj: Vec<Ucq>) -> Result<Vec<Candidate>> {
        if let [single] = conj.as_slice() {
            return Ok(self.solve(single)?.as_ref().clone());
        }
        let groups = independent_conjunct_groups(&conj);
        if groups.len() > 1 {
            let mut acc = self.flat(Prob::ONE);
            for g in groups {
                let f = self.solve_conjunction(g)?;
                acc = convolve(&acc, &f, Prob::and);
            }
            return Ok(acc);
        }
        let terms = inclusion_exclusion_terms(&conj)?;
        let coefs: Vec<i64> = terms.iter().map(|(c, _)| *c).collect();
        let queries: Vec<Ucq> = terms.into_iter().map(|(_, t)| t).collect();
        let dirs: Vec<Dir> = coefs.iter().map(|c| c.signum() as Dir).collect();
        let v = self.solve_vec(&queries, &dirs)?;
        Ok(self.best_of(&v, &coefs))
    }

    /// Picks, per budget, the vector maximizing the signed sum.
    fn best_of(&self, v: &VFrontier, coefs: &[i64]) -> Vec<Candidate> {
        v.iter()
            .map(|set| {
                set.iter()
                    .map(|vc| Candidate {
                        value: Prob::signed_sum(coefs.iter().copied().zip(vc.vals.iter().copied())),
                        witness: vc.witness.clone(),
                    })
                    .reduce(|a, b| if b.beats(&a) { b } else { a })
                    .expect("Pareto sets are never empty")
            })
            .collect()
    }

    fn solve_vec(&mut self, terms: &[Ucq], dirs: &[Dir]) -> Result<Rc<VFrontier>> {
        let terms: Vec<Ucq> = terms.iter().map(|t| self.simplify(t)).collect();
        let live: Vec<usize> = (0..terms.len())
            .filter(|&i| self.touches_open(&terms[i]))
            .collect();
        if live.is_empty() {
            let vals = self.closed_values(&terms)?;
            let one = vec![VCand {
                vals,
                witness: Vec::new(),
            }];
            return Ok(Rc::new(vec![one; self.budget + 1]));
        }
        let mut k = String::new();
        for (t, d) in terms.iter().zip(dirs) {
            k.push_str(&format!("{d}:{};", key(t)));
        }
        if let Some(hit) = self.vmemo.get(&k) {
            return Ok(hit.clone());
        }
        let out = Rc::new(self.solve_vec_inner(&terms, dirs, &live)?);
        self.vmemo.insert(k, out.clone());
        Ok(out)
    }

    fn closed_values(&mut self, terms: &[Ucq]) -> Result<Vec<Prob>> {
        terms.iter().map(|t| self.closed.eval(t)).collect()
    }

    fn solve_vec_inner(&mut self, terms: &[Ucq], dirs: &[Dir], live: &[usize]) -> Result<VFrontier> {
        if let [i] = live {
            let i = *i;
            let base = self.closed_values(terms)?;
            if dirs[i] < 0 {
                // Monotone queries are smallest with nothing added.
                let one = vec![VCand {
                    vals: base,
                    witness: Vec::new(),
                }];
                return Ok(vec![one; self.budget + 1]);
            }
            if dirs[i] > 0 {
                let f = self.solve(&terms[i])?;
                let mut out: VFrontier = Vec::with_capacity(self.budget + 1);
                for c in f.iter() {
                    let mut vals = base.clone();
                    vals[i] = c.value;
                    out.push(vec![VCand {
                        vals,
                        witness: c.witness.clone(),
                    }]);
                }
                return Ok(out);
            }
        }
        // A separator shared by every live term.
        let cqs: Vec<&ConjunctiveQuery> = live.iter().flat_map(|&i| terms[i].disjuncts()).collect();
        if let Some(sep) = find_separator(&cqs) {
            let joint = Ucq::new(cqs.iter().map(|&cq| cq.clone()).collect());
            let mut d: VFrontier = vec![
                vec![VCand {
                    vals: vec![Prob::ZERO; terms.len()],
                    witness: Vec::new(),
                }];
                self.budget + 1
            ];
            for c in separator_constants(self.g.schema().domain(), &joint) {
                let mut roots = sep.roots.iter();
                let sub: Vec<Ucq> = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        if !live.contains(&i) {
                            return t.clone();
                        }
                        Ucq::new(
                            t.disjuncts()
                                .iter()
                                .filter_map(|cq| {
                                    let root = roots.next().expect("one root per disjunct");
                                    substitute_root(cq, root.as_deref(), &sep, &c)
                                })
                                .collect(),
                        )
                    })
                    .collect();
                let a = self.solve_vec(&sub, dirs)?;
                d = self.vec_eliminate(&d, &a, dirs)?;
            }
            // Terms without open tuples do not split over constants.
            let base = self.closed_values(terms)?;
            for set in &mut d {
                for vc in set.iter_mut() {
                    for (i, b) in base.iter().enumerate() {
                        if !live.contains(&i) {
                            vc.vals[i] = *b;
                        }
                    }
                }
            }
            return Ok(d);
        }
        if let Some(v) = self.solve_vec_expanded(terms, dirs)? {
            return Ok(v);
        }
        self.brute_force(terms, dirs)
    }

    /// Rewrites each term through CNF and inclusion-exclusion and solves the
    /// finer vector, mapping results back by their linear combinations.
    fn solve_vec_expanded(&mut self, terms: &[Ucq], dirs: &[Dir]) -> Result<Option<VFrontier>> {
        let mut fine: Vec<Ucq> = Vec::new();
        let mut combos: Vec<Vec<(i64, usize)>> = Vec::with_capacity(terms.len());
        let mut changed = false;
        for t in terms {
            let expansion = match cnf(t)? {
                Some(conj) if conj.len() > 1 => {
                    changed = true;
                    inclusion_exclusion_terms(&conj)?
                }
                Some(conj) => {
                    changed |= conj[0] != *t;
                    vec![(1, conj[0].clone())]
                }
                None => vec![(1, t.clone())],
            };
            let mut combo = Vec::with_capacity(expansion.len());
            for (c, u) in expansion {
                let idx = match fine.iter().position(|f| key(f) == key(&u)) {
                    Some(i) => i,
                    None => {
                        fine.push(u);
                        fine.len() - 1
                    }
                };
                combo.push((c, idx));
            }
            combos.push(combo);
        }
        if !changed {
            return Ok(None);
        }
        let mut fine_dirs: Vec<Option<Dir>> = vec![None; fine.len()];
        for (s, combo) in combos.iter().enumerate() {
            for &(c, idx) in combo {
                let d = (c.signum() as Dir) * dirs[s];
                fine_dirs[idx] = match fine_dirs[idx] {
                    None => Some(d),
                    Some(prev) if prev == d => Some(d),
                    Some(_) => Some(0),
                };
            }
        }
        let fine_dirs: Vec<Dir> = fine_dirs.into_iter().map(|d| d.unwrap_or(0)).collect();
        let v = self.solve_vec(&fine, &fine_dirs)?;
        let mut out = Vec::with_capacity(v.len());
        for set in v.iter() {
            let mapped = set
                .iter()
                .map(|vc| VCand {
                    vals: combos
                        .iter()
                        .map(|combo| Prob::signed_sum(combo.iter().map(|&(c, i)| (c, vc.vals[i]))))
                        .collect(),
                    witness: vc.witness.clone(),
                })
                .collect();
            out.push(self.prune(mapped, dirs)?);
        }
        Ok(Some(out))
    }

    fn vec_eliminate(&self, d: &VFrontier, a: &VFrontier, dirs: &[Dir]) -> Result<VFrontier> {
        let mut out = Vec::with_capacity(d.len());
        for b in 0..d.len() {
            let mut cands = Vec::new();
            for k in 0..=b {
                for x in &d[b - k] {
                    for y in &a[k] {
                        cands.push(VCand {
                            vals: x.vals.iter().zip(&y.vals).map(|(p, q)| p.or(*q)).collect(),
                            witness: merge(&x.witness, &y.witness),
                        });
                    }
                }
            }
            out.push(self.prune(cands, dirs)?);
        }
        Ok(out)
    }

    /// Enumerates every allocation over the relevant open tuples.
    fn brute_force(&mut self, terms: &[Ucq], dirs: &[Dir]) -> Result<VFrontier> {
        let joint = Ucq::new(terms.iter().flat_map(|t| t.disjuncts().iter().cloned()).collect());
        let atoms = relevant_open_tuples(self.g, self.rel, &joint)?;
        let n = atoms.len();
        let max_size = self.budget.min(n);
        let count = subset_count(n, max_size);
        if count > self.config.subset_cap {
            return Err(Error::ResourceLimit {
                what: "subsets enumerated by the dynamic program",
                needed: count,
                limit: self.config.subset_cap,
            });
        }
        let mut by_size: Vec<Vec<VCand>> = vec![Vec::new(); self.budget + 1];
        let mut chosen: Vec<usize> = Vec::new();
        loop {
            let added: Vec<GroundAtom> = chosen.iter().map(|&i| atoms[i].clone()).collect();
            let overlay = self.g.with_added(&added);
            let mut lifted = Lifted::new(&overlay);
            let vals = terms.iter().map(|t| lifted.eval(t)).collect::<Result<Vec<_>>>()?;
            let mut witness: Vec<Key> = added.iter().map(|a| self.key_of(a)).collect();
            witness.sort();
            by_size[chosen.len()].push(VCand { vals, witness });
            if !next_subset(&mut chosen, n, max_size) {
                break;
            }
        }
        let mut out: VFrontier = Vec::with_capacity(self.budget + 1);
        let mut acc: Vec<VCand> = Vec::new();
        for bucket in by_size {
            acc.extend(bucket);
            acc = self.prune(acc, dirs)?;
            out.push(acc.clone());
        }
        Ok(out)
    }

    /// Drops vectors dominated in the objective's direction; among equal
    /// vectors keeps the preferred witness.
    fn prune(&self, mut cands: Vec<VCand>, dirs: &[Dir]) -> Result<Vec<VCand>> {
        cands.sort_by(|a, b| {
            a.witness
                .len()
                .cmp(&b.witness.len())
                .then_with(|| a.witness.cmp(&b.witness))
        });
        let mut kept: Vec<VCand> = Vec::new();
        for c in cands {
            if kept.iter().any(|k| dominates(&k.vals, &c.vals, dirs)) {
                continue;
            }
            kept.retain(|k| !dominates(&c.vals, &k.vals, dirs));
            kept.push(c);
            if kept.len() > self.config.pareto_cap {
                return Err(Error::ResourceLimit {
                    what: "Pareto set size",
                    needed: kept.len() as u128,
                    limit: self.config.pareto_cap as u128,
                });
            }
        }
        Ok(kept)
    }
}

fn dominates(u: &[Prob], v: &[Prob], dirs: &[Dir]) -> bool {
    u.iter().zip(v).zip(dirs).all(|((a, b), d)| {
        let diff = a.value() - b.value();
        match d {
            1 => diff >= -TIE_TOLERANCE,
            -1 => diff <= TIE_TOLERANCE,
            _ => diff.abs() <= TIE_TOLERANCE,
        }
    })
}

/// `sum_{i <= k} C(n, i)`, saturating.
pub(crate) fn subset_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Advances `chosen` to the next subset of `0..n` with at most `k`
/// elements in lexicographic depth-first order. Returns false when done.
pub(crate) fn next_subset(chosen: &mut Vec<usize>, n: usize, k: usize) -> bool {
    let next = chosen.last().map_or(0, |&l| l + 1);
    if chosen.len() < k && next < n {
        chosen.push(next);
        return true;
    }
    while let Some(last) = chosen.pop() {
        if last + 1 < n {
            chosen.push(last + 1);
            return true;
        }
    }
    false
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
    fn subsets_in_lex_order() {
        let mut chosen = Vec::new();
        let mut seen = vec![chosen.clone()];
        while next_subset(&mut chosen, 3, 2) {
            seen.push(chosen.clone());
        }
        let expect: Vec<Vec<usize>> = vec![
            vec![],
            vec![0],
            vec![0, 1],
            vec![0, 2],
            vec![1],
            vec![1, 2],
            vec![2],
        ];
        assert_eq!(seen, expect);
        assert_eq!(subset_count(3, 2), 7);
        assert_eq!(subset_count(12, 4), 1 + 12 + 66 + 220 + 495);
    }

    #[test]
    fn zero_budget_is_closed_world() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let r = mtp_upper_exact_budget(&g, &Budget::new("R", 0), &q, &DpConfig::default()).unwrap();
        assert_eq!(r.value.value(), 0.0);
        assert!(r.witness.unwrap().is_empty());
    }

    #[test]
    fn single_pick_breaks_ties_canonically() {
        let g = open_unary(&["A", "B"], 0.5);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let r = mtp_upper_exact_budget(&g, &Budget::new("R", 1), &q, &DpConfig::default()).unwrap();
        assert_eq!(r.value.value(), 0.5);
        assert_eq!(r.witness.unwrap().added, vec![GroundAtom::new("R", ["A"])]);
    }

    #[test]
    fn budget_slack_matches_relation_completion() {
        let g = open_unary(&["A", "B", "C"], 0.4);
        let q = parse_ucq("R(x)", g.schema()).unwrap();
        let r = mtp_upper_exact_budget(&g, &Budget::new("R", 10), &q, &DpConfig::default()).unwrap();
        let full = Lifted::new(&g.relation_completion("R")).eval(&q).unwrap();
        assert!(r.value.approx_eq(full, 1e-15));
        assert_eq!(r.witness.unwrap().len(), 3);
    }

    #[test]
    fn a_table_examples() {
        let schema = Schema::new([("R", 1), ("S", 1)], vec!["A".into(), "B".into()]).unwrap();
        let mut db = Database::new(schema);
        db.insert(GroundAtom::new("S", ["A"]), 0.5).unwrap();
        db.insert(GroundAtom::new("R", ["B"]), 0.3).unwrap();
        let g = OpenPdb::new(db, 0.6).unwrap();
        let budget = Budget::new("R", 2);
        // R(A) is open: one unit adds it.
        let qa = parse_ucq("R(A), S(A)", g.schema()).unwrap();
        let a = build_a_table(&g, &budget, &qa).unwrap();
        let values: Vec<f64> = a.entries.iter().map(|c| c.value.value()).collect();
        assert_eq!(values[0], 0.0);
        assert!((values[1] - 0.3).abs() < 1e-15 && (values[2] - 0.3).abs() < 1e-15);
        // R(B) is stored: the budget is useless.
        let qb = parse_ucq("R(B), S(x)", g.schema()).unwrap();
        let b = build_a_table(&g, &budget, &qb).unwrap();
        assert!(b.entries.iter().all(|c| c.value == b.entries[0].value && c.witness.is_empty()));
    }

    #[test]
    fn eliminate_examples() {
        let c = |p: f64, w: Vec<Key>| Candidate {
            value: Prob::new(p),
            witness: w,
        };
        let zero = ATable {
            entries: vec![c(0.0, vec![]); 3],
        };
        let d = DTable {
            entries: vec![c(0.1, vec![]), c(0.4, vec![vec![0]]), c(0.5, vec![vec![0], vec![1]])],
        };
        assert_eq!(dp_eliminate(&d, &zero), d);
        let a = ATable {
            entries: vec![c(0.0, vec![]), c(0.5, vec![vec![2]]), c(0.5, vec![vec![2]])],
        };
        let first = dp_eliminate(&DTable::empty(2), &a);
        assert_eq!(first.entries, a.entries);
        let both = dp_eliminate(&d, &a);
        // One unit on the new constant gives 1 - 0.9 * 0.5, more than 0.4.
        assert!((both.entries[1].value.value() - 0.55).abs() < 1e-15);
        assert_eq!(both.entries[1].witness, vec![vec![2]]);
        assert!((both.entries[2].value.value() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn inclusion_exclusion_path_matches_enumeration() {
        use crate::oracle::{mtp_upper_bruteforce_budget, OracleConfig};
        let names: Vec<String> = (0..3).map(|i| format!("C{i}")).collect();
        let schema = Schema::new([("U", 1), ("V", 1), ("W", 1)], names.clone()).unwrap();
        let mut db = Database::new(schema);
        for (c, p) in names.iter().zip([0.2, 0.7, 0.4]) {
            db.insert(GroundAtom::new("V", [c.clone()]), p).unwrap();
            db.insert(GroundAtom::new("W", [c.clone()]), 1.0 - p).unwrap();
        }
        db.insert(GroundAtom::new("U", ["C1"]), 0.3).unwrap();
        let g = OpenPdb::new(db, 0.5).unwrap();
        // At least two of the three relations are non-empty.
        let q = parse_ucq("U(x), V(y) | V(y), W(z) | U(x), W(z)", g.schema()).unwrap();
        assert!(is_inversion_free(&q));
        for b in 0..=2 {
            let budget = Budget::new("U", b);
            let dp = mtp_upper_exact_budget(&g, &budget, &q, &DpConfig::default()).unwrap();
            let bf = mtp_upper_bruteforce_budget(&g, &budget, &q, &OracleConfig::default()).unwrap();
            assert!(dp.value.approx_eq(bf.value, 1e-12), "b = {b}");
            let again = crate::engine::prob_lifted(&q, &g.apply_completion(&dp.witness.unwrap()).unwrap()).unwrap();
            assert!((again - dp.value.value()).abs() < 1e-12);
        }
    }
}
