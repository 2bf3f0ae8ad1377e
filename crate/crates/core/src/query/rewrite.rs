//! Syntactic machinery shared by lifted evaluation, the budgeted dynamic
//! program and the query analyses: simplification, containment, connected
//! components, independence, CNF rewriting, inclusion-exclusion terms and
//! separator variables.

use std::collections::{BTreeMap, HashMap};

use super::{Atom, ConjunctiveQuery, Term, Ucq};
use crate::db::GroundAtom;
use crate::error::{Error, Result};

/// Largest number of conjuncts produced by the CNF rewrite.
pub(crate) const MAX_CNF_CONJUNCTS: usize = 512;
/// Largest conjunction expanded by inclusion-exclusion.
pub(crate) const MAX_IE_WIDTH: usize = 14;

/// What is known about a ground atom during simplification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Fixed {
    True,
    False,
    Unknown,
}

/// Drops certain atoms and impossible disjuncts, then minimizes.
pub(crate) fn simplify(q: &Ucq, fixed: &dyn Fn(&GroundAtom) -> Fixed) -> Ucq {
    let mut out = Vec::with_capacity(q.disjuncts.len());
    'cq: for cq in &q.disjuncts {
        let mut atoms = Vec::with_capacity(cq.atoms.len());
        for a in &cq.atoms {
            if let Some(g) = GroundAtom::from_atom(a) {
                match fixed(&g) {
                    Fixed::True => continue,
                    Fixed::False => continue 'cq,
                    Fixed::Unknown => {}
                }
            }
            atoms.push(a.clone());
        }
        if atoms.is_empty() {
            return Ucq::new(vec![ConjunctiveQuery::new(vec![])]);
        }
        out.push(ConjunctiveQuery::new(atoms));
    }
    minimize(&Ucq::new(out))
}

/// Renames variables to `v0, v1, ...` in a deterministic order.
pub(crate) fn normalize_cq(cq: &ConjunctiveQuery) -> ConjunctiveQuery {
    let mut atoms = cq.atoms.clone();
    for _ in 0..2 {
        atoms.sort_by(|a, b| shape_key(a).cmp(&shape_key(b)).then_with(|| a.cmp(b)));
        let mut names: HashMap<String, String> = HashMap::new();
        for a in &mut atoms {
            for t in &mut a.args {
                if let Term::Var(v) = t {
                    let next = format!("v{}", names.len());
                    let fresh = names.entry(v.clone()).or_insert(next).clone();
                    *v = fresh;
                }
            }
        }
    }
    ConjunctiveQuery::new(atoms)
}

fn shape_key(a: &Atom) -> (&str, Vec<Option<&str>>) {
    (
        a.pred.as_str(),
        a.args
            .iter()
            .map(|t| match t {
                Term::Var(_) => None,
                Term::Const(c) => Some(c.as_str()),
            })
            .collect(),
    )
}

pub(crate) fn normalize(q: &Ucq) -> Ucq {
    Ucq::new(q.disjuncts.iter().map(normalize_cq).collect())
}

/// Memoization key; equal keys imply equivalent queries.
pub(crate) fn key(q: &Ucq) -> String {
    normalize(q).to_string()
}

/// Is there a homomorphism from `from` into `to`?
pub(crate) fn homomorphism(from: &ConjunctiveQuery, to: &ConjunctiveQuery) -> bool {
    fn extend<'a>(
        atoms: &[&'a Atom],
        to: &'a ConjunctiveQuery,
        map: &mut HashMap<&'a str, &'a Term>,
    ) -> bool {
        let Some((first, rest)) = atoms.split_first() else {
            return true;
        };
        for target in to.atoms.iter().filter(|t| t.pred == first.pred) {
            let mut added = Vec::new();
            let mut ok = target.args.len() == first.args.len();
            if ok {
                for (s, t) in first.args.iter().zip(&target.args) {
                    match s {
                        Term::Const(_) => {
                            if s != t {
                                ok = false;
                                break;
                            }
                        }
                        Term::Var(v) => match map.get(v.as_str()) {
                            Some(&bound) => {
                                if bound != t {
                                    ok = false;
                                    break;
                                }
                            }
                            None => {
                                map.insert(v.as_str(), t);
                                added.push(v.as_str());
                            }
                        },
                    }
                }
            }
            if ok && extend(rest, to, map) {
                return true;
            }
            for v in added {
                map.remove(v);
            }
        }
        false
    }
    // Most constrained atoms first.
    let mut atoms: Vec<&Atom> = from.atoms.iter().collect();
    atoms.sort_by_key(|a| std::cmp::Reverse(a.args.iter().filter(|t| !t.is_var()).count()));
    extend(&atoms, to, &mut HashMap::new())
}

/// `a` logically implies `b`.
pub(crate) fn cq_implies(a: &ConjunctiveQuery, b: &ConjunctiveQuery) -> bool {
    homomorphism(b, a)
}

/// `a` logically implies `b` (every disjunct of `a` implies one of `b`).
pub(crate) fn ucq_implies(a: &Ucq, b: &Ucq) -> bool {
    a.disjuncts
        .iter()
        .all(|ca| b.disjuncts.iter().any(|cb| cq_implies(ca, cb)))
}

pub(crate) fn equivalent(a: &Ucq, b: &Ucq) -> bool {
    ucq_implies(a, b) && ucq_implies(b, a)
}

/// Removes disjuncts that imply another disjunct.
pub(crate) fn minimize(q: &Ucq) -> Ucq {
    if q.is_true() {
        return Ucq::new(vec![ConjunctiveQuery::new(vec![])]);
    }
    let ds: Vec<ConjunctiveQuery> = q.disjuncts.iter().map(minimize_cq).collect();
    let keep: Vec<ConjunctiveQuery> = ds
        .iter()
        .enumerate()
        .filter(|&(i, ci)| {
            !ds.iter().enumerate().any(|(j, cj)| {
                j != i && cq_implies(ci, cj) && (j < i || !cq_implies(cj, ci))
            })
        })
        .map(|(_, c)| c.clone())
        .collect();
    Ucq::new(keep)
}

/// Computes the core of a conjunctive query by dropping redundant atoms.
pub(crate) fn minimize_cq(cq: &ConjunctiveQuery) -> ConjunctiveQuery {
    let mut cur = cq.clone();
    let mut i = 0;
    while i < cur.atoms.len() && cur.atoms.len() > 1 {
        let mut smaller = cur.atoms.clone();
        smaller.remove(i);
        let candidate = ConjunctiveQuery::new(smaller);
        if homomorphism(&cur, &candidate) {
            cur = candidate;
            i = 0;
        } else {
            i += 1;
        }
    }
    cur
}

/// Connected components of a conjunctive query under shared variables.
pub(crate) fn components(cq: &ConjunctiveQuery) -> Vec<ConjunctiveQuery> {
    let n = cq.atoms.len();
    let groups = union_find(n, |i, j| {
        cq.atoms[i]
            .vars()
            .any(|v| cq.atoms[j].vars().any(|w| v == w))
    });
    groups
        .into_iter()
        .map(|g| ConjunctiveQuery::new(g.into_iter().map(|i| cq.atoms[i].clone()).collect()))
        .collect()
}

/// Groups `0..n` into connected classes of `linked`, in order of first member.
pub(crate) fn union_find(n: usize, linked: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if linked(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Could the two atoms denote the same ground tuple?
pub(crate) fn may_unify(a: &Atom, b: &Atom) -> bool {
    a.pred == b.pred
        && a.args.len() == b.args.len()
        && a.args.iter().zip(&b.args).all(|(s, t)| match (s, t) {
            (Term::Const(x), Term::Const(y)) => x == y,
            _ => true,
        })
}

/// Syntactic independence: no atom of one side unifies with one of the other.
pub(crate) fn independent<'a>(
    a: impl IntoIterator<Item = &'a Atom> + Clone,
    b: impl IntoIterator<Item = &'a Atom>,
) -> bool {
    b.into_iter()
        .all(|y| a.clone().into_iter().all(|x| !may_unify(x, y)))
}

/// Splits disjuncts into mutually independent groups.
pub(crate) fn independent_disjunct_groups(q: &Ucq) -> Vec<Ucq> {
    let ds = &q.disjuncts;
    union_find(ds.len(), |i, j| !independent(&ds[i].atoms, &ds[j].atoms))
        .into_iter()
        .map(|g| Ucq::new(g.into_iter().map(|i| ds[i].clone()).collect()))
        .collect()
}

/// Splits a conjunction of UCQs into mutually independent groups.
pub(crate) fn independent_conjunct_groups(conj: &[Ucq]) -> Vec<Vec<Ucq>> {
    union_find(conj.len(), |i, j| !independent(conj[i].disjuncts.iter().flat_map(|d| &d.atoms), conj[j].atoms()))
        .into_iter()
        .map(|g| g.into_iter().map(|i| conj[i].clone()).collect())
        .collect()
}

/// Rewrites a UCQ whose disjuncts are conjunctions of components into an
/// equivalent conjunction of UCQs with connected disjuncts. Returns `None`
/// when every disjunct is already connected.
pub(crate) fn cnf(q: &Ucq) -> Result<Option<Vec<Ucq>>> {
    let comps: Vec<Vec<ConjunctiveQuery>> = q.disjuncts.iter().map(components).collect();
    if comps.iter().all(|c| c.len() <= 1) {
        return Ok(None);
    }
    let total: u128 = comps.iter().map(|c| c.len() as u128).product();
    if total > MAX_CNF_CONJUNCTS as u128 {
        return Err(Error::ResourceLimit {
            what: "CNF rewrite conjuncts",
            needed: total,
            limit: MAX_CNF_CONJUNCTS as u128,
        });
    }
    let mut conjuncts: Vec<Ucq> = Vec::new();
    let mut choice = vec![0usize; comps.len()];
    loop {
        let disjuncts = choice
            .iter()
            .enumerate()
            .map(|(i, &k)| comps[i][k].clone())
            .collect();
        conjuncts.push(minimize(&Ucq::new(disjuncts)));
        let mut i = 0;
        loop {
            if i == choice.len() {
                return Ok(Some(drop_implied_conjuncts(conjuncts)));
            }
            choice[i] += 1;
            if choice[i] < comps[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// In a conjunction, a conjunct implied by another conjunct is redundant.
pub(crate) fn drop_implied_conjuncts(conj: Vec<Ucq>) -> Vec<Ucq> {
    let keep: Vec<Ucq> = conj
        .iter()
        .enumerate()
        .filter(|&(j, qj)| {
            !conj.iter().enumerate().any(|(i, qi)| {
                i != j && ucq_implies(qi, qj) && (i < j || !ucq_implies(qj, qi))
            })
        })
        .map(|(_, q)| q.clone())
        .collect();
    let mut keep = keep;
    keep.sort();
    keep.dedup();
    keep
}

/// Expands `P(Q1 ∧ ... ∧ Qm)` into signed disjunction terms, merging
/// equivalent terms and dropping those whose coefficients cancel.
pub(crate) fn inclusion_exclusion_terms(conj: &[Ucq]) -> Result<Vec<(i64, Ucq)>> {
    let m = conj.len();
    if m > MAX_IE_WIDTH {
        return Err(Error::ResourceLimit {
            what: "inclusion-exclusion width",
            needed: m as u128,
            limit: MAX_IE_WIDTH as u128,
        });
    }
    let mut terms: Vec<(i64, Ucq)> = Vec::new();
    for mask in 1u32..(1 << m) {
        let sign = if mask.count_ones() % 2 == 1 { 1 } else { -1 };
        let union = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .flat_map(|i| conj[i].disjuncts.iter().cloned())
            .collect();
        let union = minimize(&Ucq::new(union));
        match terms.iter_mut().find(|(_, t)| equivalent(t, &union)) {
            Some((c, _)) => *c += sign,
            None => terms.push((sign, union)),
        }
    }
    terms.retain(|(c, _)| *c != 0);
    Ok(terms)
}

/// A separator: one root per disjunct and one argument position per
/// predicate, such that substituting a constant at those positions splits
/// the query into independent parts.
#[derive(Clone, Debug)]
pub(crate) struct Separator {
    pub positions: BTreeMap<String, usize>,
    /// `Some(var)` for disjuncts with a root variable, `None` for disjuncts
    /// pinned to a single constant at every separator position.
    pub roots: Vec<Option<String>>,
}

/// Finds a separator common to all the given disjuncts; the leftmost root
/// variable in canonical atom order wins.
pub(crate) fn find_separator(cqs: &[&ConjunctiveQuery]) -> Option<Separator> {
    if cqs.iter().all(|cq| cq.is_ground()) || cqs.iter().any(|cq| cq.atoms.is_empty()) {
        return None;
    }
    let mut order: Vec<usize> = (0..cqs.len()).collect();
    // Variable disjuncts first so ground ones are checked against fixed positions.
    order.sort_by_key(|&i| cqs[i].is_ground());
    let mut positions = BTreeMap::new();
    let mut roots = vec![None; cqs.len()];
    if search_cq(cqs, &order, 0, &mut positions, &mut roots) {
        Some(Separator { positions, roots })
    } else {
        None
    }
}

fn search_cq(
    cqs: &[&ConjunctiveQuery],
    order: &[usize],
    k: usize,
    positions: &mut BTreeMap<String, usize>,
    roots: &mut Vec<Option<String>>,
) -> bool {
    let Some(&ci) = order.get(k) else {
        return true;
    };
    let cq = cqs[ci];
    if cq.is_ground() {
        return search_ground(cq, 0, None, positions, &mut |positions| {
            search_cq(cqs, order, k + 1, positions, roots)
        });
    }
    let mut candidates: Vec<&str> = Vec::new();
    for a in &cq.atoms {
        for v in a.vars() {
            if !candidates.contains(&v) && cq.atoms.iter().all(|b| b.vars().any(|w| w == v)) {
                candidates.push(v);
            }
        }
    }
    for x in candidates {
        roots[ci] = Some(x.to_string());
        if search_atoms(cq, x, 0, positions, &mut |positions| {
            search_cq(cqs, order, k + 1, positions, roots)
        }) {
            return true;
        }
    }
    roots[ci] = None;
    false
}

fn search_atoms(
    cq: &ConjunctiveQuery,
    x: &str,
    i: usize,
    positions: &mut BTreeMap<String, usize>,
    rest: &mut dyn FnMut(&mut BTreeMap<String, usize>) -> bool,
) -> bool {
    let Some(a) = cq.atoms.get(i) else {
        return rest(positions);
    };
    let is_x = |t: &Term| matches!(t, Term::Var(v) if v == x);
    if let Some(&p) = positions.get(&a.pred) {
        return is_x(&a.args[p]) && search_atoms(cq, x, i + 1, positions, rest);
    }
    for p in 0..a.args.len() {
        if is_x(&a.args[p]) {
            positions.insert(a.pred.clone(), p);
            if search_atoms(cq, x, i + 1, positions, rest) {
                return true;
            }
            positions.remove(&a.pred);
        }
    }
    false
}

fn search_ground(
    cq: &ConjunctiveQuery,
    i: usize,
    constant: Option<&str>,
    positions: &mut BTreeMap<String, usize>,
    rest: &mut dyn FnMut(&mut BTreeMap<String, usize>) -> bool,
) -> bool {
    let Some(a) = cq.atoms.get(i) else {
        return rest(positions);
    };
    let fits = |p: usize| constant.is_none_or(|c| a.args[p].name() == c);
    if let Some(&p) = positions.get(&a.pred) {
        return fits(p) && search_ground(cq, i + 1, Some(a.args[p].name()), positions, rest);
    }
    for p in 0..a.args.len() {
        if fits(p) {
            positions.insert(a.pred.clone(), p);
            if search_ground(cq, i + 1, Some(a.args[p].name()), positions, rest) {
                return true;
            }
            positions.remove(&a.pred);
        }
    }
    false
}

/// The constant a root-less disjunct is pinned to.
pub(crate) fn pinned_constant<'a>(cq: &'a ConjunctiveQuery, sep: &Separator) -> &'a str {
    let a = &cq.atoms[0];
    a.args[sep.positions[&a.pred]].name()
}

/// Substitutes `c` for the root of disjunct `cq`, or drops a pinned disjunct
/// whose constant differs from `c`.
pub(crate) fn substitute_root(
    cq: &ConjunctiveQuery,
    root: Option<&str>,
    sep: &Separator,
    c: &str,
) -> Option<ConjunctiveQuery> {
    match root {
        None => (pinned_constant(cq, sep) == c).then(|| cq.clone()),
        Some(x) => Some(substitute(cq, x, c)),
    }
}

pub(crate) fn substitute(cq: &ConjunctiveQuery, x: &str, c: &str) -> ConjunctiveQuery {
    ConjunctiveQuery::new(
        cq.atoms
            .iter()
            .map(|a| Atom {
                pred: a.pred.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) if v == x => Term::Const(c.to_string()),
                        other => other.clone(),
                    })
                    .collect(),
            })
            .collect(),
    )
}

/// Constants over which a separator ranges: the domain followed by any
/// constants the query mentions that are outside it.
pub(crate) fn separator_constants(domain: &[String], q: &Ucq) -> Vec<String> {
    let mut out = domain.to_vec();
    for c in q.constants() {
        if !domain.iter().any(|d| d == c) {
            out.push(c.to_string());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::Schema;
    use crate::query::parse_ucq;

    fn q(text: &str) -> Ucq {
        let schema = Schema::new(
            [("R", 1), ("S", 1), ("T", 1), ("A", 2), ("B", 2), ("U", 1), ("V", 1), ("W", 1), ("M", 3)],
            vec!["C".into()],
        )
        .unwrap();
        parse_ucq(text, &schema).unwrap()
    }

    #[test]
    fn minimization_drops_implied_disjuncts() {
        assert_eq!(minimize(&q("R(C) | R(x)")), q("R(x)"));
        assert_eq!(minimize(&q("R(x), S(x) | R(y)")), q("R(y)"));
        assert_eq!(minimize(&q("R(x) | R(y)")).disjuncts().len(), 1);
        assert_eq!(minimize_cq(&q("A(x, y), A(x, z)").disjuncts()[0]).atoms().len(), 1);
    }

    #[test]
    fn components_split_on_variables() {
        let cq = &q("R(x), S(y), A(x, z)").disjuncts()[0].clone();
        assert_eq!(components(cq).len(), 2);
        let ground = &q("R(C), S(C)").disjuncts()[0].clone();
        assert_eq!(components(ground).len(), 2);
    }

    #[test]
    fn separators() {
        let q1 = q("R(x), A(x, y)");
        let ds: Vec<&ConjunctiveQuery> = q1.disjuncts().iter().collect();
        let sep = find_separator(&ds).unwrap();
        assert_eq!(sep.roots, vec![Some("x".to_string())]);
        let chain = q("R(x), A(x, y), S(y)");
        let ds: Vec<&ConjunctiveQuery> = chain.disjuncts().iter().collect();
        assert!(find_separator(&ds).is_none());
        let mixed = q("S(C) | R(x), S(x)");
        let ds: Vec<&ConjunctiveQuery> = mixed.disjuncts().iter().collect();
        let sep = find_separator(&ds).unwrap();
        assert_eq!(sep.roots.iter().filter(|r| r.is_none()).count(), 1);
    }

    #[test]
    fn m0_inclusion_exclusion_cancels() {
        let m0 = q("M(x,y,z), U(x) | M(x,y,z), V(y) | M(x,y,z), W(z) | U(x), V(y) | U(x), W(z) | V(y), W(z)");
        let conj = cnf(&m0).unwrap().unwrap();
        assert_eq!(conj.len(), 3);
        let terms = inclusion_exclusion_terms(&conj).unwrap();
        assert_eq!(terms.len(), 4);
        assert_eq!(terms.iter().map(|(c, _)| c).sum::<i64>(), 1);
    }
}
