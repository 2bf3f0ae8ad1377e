//! Seeded random schemas, databases, queries and MTP instances.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::db::{Database, GroundAtom, Schema};
use crate::engine::is_safe;
use crate::open_world::{budget_from_mtp, Budget, MtpConstraint, OpenPdb};
use crate::query::{has_self_join, is_inversion_free, Atom, ConjunctiveQuery, Term, Ucq};

/// Tuple probabilities drawn by the generators.
pub const PROBS: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Values of λ drawn by the generators.
pub const LAMBDAS: [f64; 3] = [0.2, 0.5, 0.8];

const VARS: [&str; 3] = ["x", "y", "z"];

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub min_domain: usize,
    pub max_domain: usize,
    pub max_arity: usize,
    pub min_predicates: usize,
    pub max_predicates: usize,
    /// Largest Herbrand base allowed for any predicate.
    pub max_herbrand: usize,
    /// Most stored tuples with nonzero probability.
    pub max_uncertain: usize,
    pub max_disjuncts: usize,
    pub max_atoms: usize,
    pub constant_rate: f64,
    pub self_join_free: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            min_domain: 2,
            max_domain: 4,
            max_arity: 3,
            min_predicates: 2,
            max_predicates: 4,
            max_herbrand: 27,
            max_uncertain: 12,
            max_disjuncts: 3,
            max_atoms: 3,
            constant_rate: 0.1,
            self_join_free: false,
        }
    }
}

pub fn random_schema(rng: &mut impl Rng, cfg: &GenConfig) -> Schema {
    let n = rng.gen_range(cfg.min_domain..=cfg.max_domain);
    let domain: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
    let preds = rng.gen_range(cfg.min_predicates..=cfg.max_predicates);
    let max_arity = (1..=cfg.max_arity)
        .take_while(|&a| n.pow(a as u32) <= cfg.max_herbrand)
        .last()
        .unwrap_or(1);
    let predicates: Vec<(String, usize)> = (0..preds)
        .map(|i| (format!("P{i}"), rng.gen_range(1..=max_arity)))
        .collect();
    Schema::new(predicates, domain).expect("generated schema is valid")
}

/// Stores random Herbrand atoms with probabilities from [`PROBS`], keeping
/// at most `cfg.max_uncertain` of them nonzero.
pub fn random_database(rng: &mut impl Rng, schema: &Schema, cfg: &GenConfig) -> Database {
    let mut atoms: Vec<GroundAtom> = schema
        .predicates()
        .flat_map(|(p, _)| schema.herbrand_atoms(p).collect::<Vec<_>>())
        .collect();
    atoms.shuffle(rng);
    let mut db = Database::new(schema.clone());
    let mut uncertain = 0;
    for atom in atoms {
        if !rng.gen_bool(0.4) {
            continue;
        }
        let p = *PROBS.choose(rng).expect("non-empty");
        if p > 0.0 {
            if uncertain == cfg.max_uncertain {
                continue;
            }
            uncertain += 1;
        }
        db.insert(atom, p).expect("generated tuple is valid");
    }
    db
}

pub fn random_query(rng: &mut impl Rng, schema: &Schema, cfg: &GenConfig) -> Ucq {
    let mut preds: Vec<(String, usize)> = schema
        .predicates()
        .map(|(p, a)| (p.to_string(), a))
        .collect();
    preds.shuffle(rng);
    let mut unused = preds.clone();
    let disjuncts = rng.gen_range(1..=cfg.max_disjuncts);
    let mut cqs = Vec::with_capacity(disjuncts);
    for _ in 0..disjuncts {
        let atoms = rng.gen_range(1..=cfg.max_atoms);
        let mut body = Vec::with_capacity(atoms);
        for _ in 0..atoms {
            let (pred, arity) = if cfg.self_join_free {
                match unused.pop() {
                    Some(p) => p,
                    None => break,
                }
            } else {
                preds.choose(rng).expect("schema has predicates").clone()
            };
            let args = (0..arity)
                .map(|_| {
                    if rng.gen_bool(cfg.constant_rate) {
                        Term::Const(schema.domain().choose(rng).expect("non-empty").clone())
                    } else {
                        Term::Var(VARS.choose(rng).expect("non-empty").to_string())
                    }
                })
                .collect();
            body.push(Atom::new(pred, args));
        }
        if !body.is_empty() {
            cqs.push(ConjunctiveQuery::new(body));
        }
    }
    Ucq::new(cqs)
}

/// Requirements a generated query must meet.
#[derive(Clone, Copy, Debug, Default)]
pub struct QueryFilter {
    pub inversion_free: bool,
    pub self_join_free: bool,
}

impl QueryFilter {
    pub fn accepts(&self, q: &Ucq) -> bool {
        !q.is_false()
            && is_safe(q)
            && (!self.self_join_free || !has_self_join(q))
            && (!self.inversion_free || is_inversion_free(q))
    }
}

/// Draws queries until one is safe and passes `filter`.
pub fn random_safe_query(
    rng: &mut impl Rng,
    schema: &Schema,
    cfg: &GenConfig,
    filter: QueryFilter,
    max_tries: usize,
) -> Option<Ucq> {
    (0..max_tries)
        .map(|_| random_query(rng, schema, cfg))
        .find(|q| filter.accepts(q))
}

/// An open-world instance with one constrained relation.
#[derive(Clone, Debug)]
pub struct MtpInstance {
    pub g: OpenPdb,
    pub q: Ucq,
    pub constraint: MtpConstraint,
    pub budget: Budget,
}

impl MtpInstance {
    pub fn describe(&self) -> String {
        let tuples: Vec<String> = self
            .g
            .db
            .all_tuples()
            .iter()
            .map(|(a, p)| format!("{a}:{p}"))
            .collect();
        format!(
            "q = {}; lambda = {}; {} <= {} (B = {}); domain = {:?}; db = [{}]",
            self.q,
            self.g.lambda,
            self.constraint.relation,
            self.constraint.mean_bound,
            self.budget.max_added,
            self.g.schema().domain(),
            tuples.join(", ")
        )
    }

    /// Rough size used to report the smallest counterexample.
    pub fn size(&self) -> usize {
        self.g.db.all_tuples().len() + self.q.atoms().count() + self.g.schema().domain().len()
    }
}

/// Random instance whose constrained relation occurs in the query, has at
/// most `max_open` open tuples, and whose MTP bound yields a budget drawn
/// from `0..=max_budget`.
pub fn random_mtp_instance(
    rng: &mut impl Rng,
    cfg: &GenConfig,
    filter: QueryFilter,
    max_open: usize,
    max_budget: usize,
) -> MtpInstance {
    loop {
        let schema = random_schema(rng, cfg);
        let Some(q) = random_safe_query(rng, &schema, cfg, filter, 50) else {
            continue;
        };
        let mut db = random_database(rng, &schema, cfg);
        let preds: Vec<String> = q.predicates().into_iter().map(String::from).collect();
        let rel = preds.choose(rng).expect("query has predicates").clone();
        let mut open: Vec<GroundAtom> = schema.herbrand_atoms(&rel).filter(|a| !db.contains(a)).collect();
        open.shuffle(rng);
        while open.len() > max_open {
            let atom = open.pop().expect("non-empty");
            db.insert(atom, 0.0).expect("atom was absent");
        }
        if open.is_empty() {
            continue;
        }
        let lambda = *LAMBDAS.choose(rng).expect("non-empty");
        let g = OpenPdb::new(db, lambda).expect("λ in range");
        let target = rng.gen_range(0..=max_budget) as f64;
        let n = schema.herbrand_size(&rel).expect("declared") as f64;
        let mean = ((g.db.mass(&rel) + (target + 0.5) * lambda) / n).min(1.0);
        let constraint = MtpConstraint::new(rel, mean).expect("mean in range");
        let budget = budget_from_mtp(&g, &constraint).expect("relation exists");
        return MtpInstance {
            g,
            q,
            constraint,
            budget,
        };
    }
}
