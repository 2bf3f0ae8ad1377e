use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::rewrite::{
    cnf, find_separator, independent_conjunct_groups, independent_disjunct_groups,
    inclusion_exclusion_terms, minimize, substitute_root,
};
use super::{ConjunctiveQuery, Ucq};

/// Syntactic facts that decide how a query is evaluated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryProfile {
    pub hierarchical_per_cq: Vec<bool>,
    pub inversion_free: bool,
    pub self_join_free: bool,
    /// Lifted evaluation never gets stuck on this query.
    pub safe: bool,
}

impl QueryProfile {
    pub fn of(q: &Ucq) -> QueryProfile {
        QueryProfile {
            hierarchical_per_cq: q.disjuncts().iter().map(is_hierarchical).collect(),
            inversion_free: is_inversion_free(q),
            self_join_free: !has_self_join(q),
            safe: crate::engine::is_safe(q),
        }
    }
}

/// For every pair of variables the sets of atoms containing them are
/// nested or disjoint.
pub fn is_hierarchical(cq: &ConjunctiveQuery) -> bool {
    let vars: Vec<&str> = cq.vars().into_iter().collect();
    let at = |v: &str| -> BTreeSet<usize> {
        cq.atoms()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.vars().any(|w| w == v))
            .map(|(i, _)| i)
            .collect()
    };
    let sets: Vec<BTreeSet<usize>> = vars.iter().map(|v| at(v)).collect();
    sets.iter().enumerate().all(|(i, a)| {
        sets[i + 1..]
            .iter()
            .all(|b| a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b))
    })
}

/// Some predicate occurs more than once anywhere in the query.
pub fn has_self_join(q: &Ucq) -> bool {
    let mut seen = HashSet::new();
    q.atoms().any(|a| !seen.insert(a.pred.as_str()))
}

/// All disjuncts are hierarchical and a common separator can be chosen at
/// every step of a joint recursive decomposition of the query, including
/// across the terms of any inclusion-exclusion expansion.
pub fn is_inversion_free(q: &Ucq) -> bool {
    q.disjuncts().iter().all(is_hierarchical) && joint_decomposes(vec![q.clone()], &mut 0)
}

fn joint_decomposes(queries: Vec<Ucq>, fresh: &mut usize) -> bool {
    let queries: Vec<Ucq> = queries
        .iter()
        .map(minimize)
        .filter(|q| !q.is_false() && !q.is_true())
        .collect();
    if queries.iter().all(|q| q.disjuncts().iter().all(ConjunctiveQuery::is_ground)) {
        return true;
    }
    if let [q] = queries.as_slice() {
        let groups = independent_disjunct_groups(q);
        if groups.len() > 1 {
            return groups.into_iter().all(|g| joint_decomposes(vec![g], fresh));
        }
        return match cnf(q) {
            Err(_) => false,
            Ok(Some(conj)) => independent_conjunct_groups(&conj).into_iter().all(|group| {
                if group.len() == 1 {
                    joint_decomposes(group, fresh)
                } else {
                    match inclusion_exclusion_terms(&group) {
                        Ok(terms) => {
                            joint_decomposes(terms.into_iter().map(|(_, t)| t).collect(), fresh)
                        }
                        Err(_) => false,
                    }
                }
            }),
            Ok(None) => separate_jointly(&queries, fresh),
        };
    }
    // Several queries that must share every separator.
    let mut expanded = Vec::new();
    for q in &queries {
        match cnf(q) {
            Err(_) => return false,
            Ok(None) => expanded.push(q.clone()),
            Ok(Some(conj)) => match inclusion_exclusion_terms(&conj) {
                Ok(terms) => expanded.extend(terms.into_iter().map(|(_, t)| t)),
                Err(_) => return false,
            },
        }
    }
    if expanded.iter().any(|q| cnf(q).map_or(true, |c| c.is_some())) {
        return false;
    }
    separate_jointly(&expanded, fresh)
}

fn separate_jointly(queries: &[Ucq], fresh: &mut usize) -> bool {
    let all: Vec<&ConjunctiveQuery> = queries.iter().flat_map(|q| q.disjuncts()).collect();
    let Some(sep) = find_separator(&all) else {
        return false;
    };
    *fresh += 1;
    let c = format!("#{fresh}");
    let mut k = 0;
    let mut next = Vec::with_capacity(queries.len());
    for q in queries {
        let mut ds = Vec::new();
        for cq in q.disjuncts() {
            if let Some(s) = substitute_root(cq, sep.roots[k].as_deref(), &sep, &c) {
                ds.push(s);
            }
            k += 1;
        }
        next.push(Ucq::new(ds));
    }
    joint_decomposes(next, fresh)
}
