//! Open-world semantics: λ-completions, probability intervals and mean
//! tuple probability (MTP) budgets.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::db::{Completion, Database, GroundAtom, Overlay, Schema};
use crate::engine::Lifted;
use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::query::{Term, Ucq};

/// Slack on the strict MTP inequality.
pub const MTP_EPSILON: f64 = 1e-9;

/// Values closer than this are treated as ties when choosing witnesses.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Most ground atoms [`relevant_open_tuples`] will enumerate.
pub const RELEVANT_CAP: u128 = 1_000_000;

/// A probabilistic database together with the default probability λ of
/// absent atoms.
#[derive(Clone, Debug)]
pub struct OpenPdb {
    pub db: Database,
    pub lambda: f64,
}

impl OpenPdb {
    pub fn new(db: Database, lambda: f64) -> Result<OpenPdb> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidProbability {
                value: lambda,
                context: "lambda".into(),
            });
        }
        Ok(OpenPdb { db, lambda })
    }

    pub fn schema(&self) -> &Schema {
        self.db.schema()
    }

    fn check_relation(&self, rel: &str) -> Result<usize> {
        self.schema()
            .arity(rel)
            .ok_or_else(|| Error::UnknownPredicate(rel.to_string()))
    }

    /// Whether `atom` belongs to `rel` and is absent from the database.
    pub fn is_open(&self, rel: &str, atom: &GroundAtom) -> bool {
        atom.pred == rel
            && !self.db.contains(atom)
            && self.schema().arity(rel) == Some(atom.args.len())
            && atom.args.iter().all(|c| self.schema().contains_constant(c))
    }

    /// Number of absent Herbrand atoms of `rel`.
    pub fn open_count(&self, rel: &str) -> Result<u128> {
        self.check_relation(rel)?;
        let n = self.schema().herbrand_size(rel).unwrap_or(0);
        Ok(n - self.db.len(rel) as u128)
    }

    /// Absent Herbrand atoms of `rel` in canonical order.
    pub fn open_tuples(&self, rel: &str) -> Result<Vec<GroundAtom>> {
        self.check_relation(rel)?;
        let n = self.schema().herbrand_size(rel).unwrap_or(0);
        if n > RELEVANT_CAP {
            return Err(Error::ResourceLimit {
                what: "open tuples",
                needed: n,
                limit: RELEVANT_CAP,
            });
        }
        Ok(self
            .schema()
            .herbrand_atoms(rel)
            .filter(|a| !self.db.contains(a))
            .collect())
    }

    /// The completion assigning λ to every absent atom of every relation.
    pub fn full_completion(&self) -> Completion<'_> {
        Completion::full(&self.db, self.lambda)
    }

    /// The completion assigning λ to every absent atom of `rel` only.
    pub fn relation_completion<'a>(&'a self, rel: &'a str) -> Completion<'a> {
        Completion::relation(&self.db, self.lambda, rel)
    }

    /// The database with `added` present at probability λ, without copying.
    pub fn with_added(&self, added: &[GroundAtom]) -> Overlay<'_> {
        let mut overlay = Overlay::new(&self.db);
        for a in added {
            overlay.set(a.clone(), self.lambda);
        }
        overlay
    }

    /// Materializes a completion choice.
    pub fn apply_completion(&self, choice: &CompletionChoice) -> Result<Database> {
        let mut db = self.db.clone();
        for atom in &choice.added {
            if self.db.contains(atom) {
                return Err(Error::CompletionOverlap(atom.to_string()));
            }
            db.insert(atom.clone(), self.lambda)?;
        }
        Ok(db)
    }

    /// Returns a copy in which every relation except `keep` is completed at
    /// λ, so that only `keep` remains open.
    pub fn complete_other_relations(&self, keep: &str) -> Result<OpenPdb> {
        self.check_relation(keep)?;
        let mut db = self.db.clone();
        let preds: Vec<String> = self
            .schema()
            .predicates()
            .map(|(p, _)| p.to_string())
            .filter(|p| p != keep)
            .collect();
        for p in &preds {
            for atom in self.open_tuples(p)? {
                db.set(atom, self.lambda);
            }
        }
        Ok(OpenPdb {
            db,
            lambda: self.lambda,
        })
    }
}

/// Open atoms of `rel` that occur in some grounding of `q`, in canonical
/// order. Adding any other open atom never changes the probability of `q`.
pub fn relevant_open_tuples(g: &OpenPdb, rel: &str, q: &Ucq) -> Result<Vec<GroundAtom>> {
    g.check_relation(rel)?;
    let schema = g.schema();
    let domain = schema.domain();
    let mut out = BTreeSet::new();
    for atom in q.atoms().filter(|a| a.pred == rel) {
        let vars: Vec<&str> = atom
            .vars()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let count = (domain.len() as u128).saturating_pow(vars.len() as u32);
        if count > RELEVANT_CAP {
            return Err(Error::ResourceLimit {
                what: "relevant open tuples",
                needed: count,
                limit: RELEVANT_CAP,
            });
        }
        let mut assignment = vec![0usize; vars.len()];
        'odometer: loop {
            let args: Vec<String> = atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => {
                        let i = vars.iter().position(|w| w == v).expect("collected var");
                        domain[assignment[i]].clone()
                    }
                })
                .collect();
            let ground = GroundAtom::new(rel, args);
            if g.is_open(rel, &ground) {
                out.insert(schema.atom_key(&ground));
            }
            for slot in assignment.iter_mut().rev() {
                *slot += 1;
                if *slot < domain.len() {
                    continue 'odometer;
                }
                *slot = 0;
            }
            break;
        }
    }
    Ok(out
        .into_iter()
        .map(|(pred, idx)| GroundAtom::new(pred, idx.into_iter().map(|i| domain[i].clone())))
        .collect())
}

/// Upper bound on the mean tuple probability of one relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtpConstraint {
    pub relation: String,
    pub mean_bound: f64,
}

impl MtpConstraint {
    pub fn new(relation: impl Into<String>, mean_bound: f64) -> Result<MtpConstraint> {
        if !(mean_bound > 0.0 && mean_bound <= 1.0) {
            return Err(Error::InvalidProbability {
                value: mean_bound,
                context: "MTP mean bound".into(),
            });
        }
        Ok(MtpConstraint {
            relation: relation.into(),
            mean_bound,
        })
    }
}

/// How many tuples the MTP mean is taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MtpDenominator {
    /// Every Herbrand atom of the relation.
    #[default]
    Herbrand,
    /// Nonzero existing tuples plus the tuples being added.
    Support,
}

/// The largest number of λ-tuples addable to one relation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Budget {
    pub relation: String,
    pub max_added: usize,
    /// The existing tuples already violate the constraint.
    pub infeasible: bool,
}

impl Budget {
    pub fn new(relation: impl Into<String>, max_added: usize) -> Budget {
        Budget {
            relation: relation.into(),
            max_added,
            infeasible: false,
        }
    }
}

/// Converts an MTP constraint into a tuple budget over the Herbrand base.
pub fn budget_from_mtp(g: &OpenPdb, c: &MtpConstraint) -> Result<Budget> {
    budget_from_mtp_with(g, c, MtpDenominator::Herbrand)
}

pub fn budget_from_mtp_with(
    g: &OpenPdb,
    c: &MtpConstraint,
    denominator: MtpDenominator,
) -> Result<Budget> {
    g.check_relation(&c.relation)?;
    let open = g.open_count(&c.relation)?;
    let mass = g.db.mass(&c.relation);
    let herbrand = g.schema().herbrand_size(&c.relation).unwrap_or(0) as f64;
    let support = g.db.nonzero_count(&c.relation) as f64;
    let limit = c.mean_bound - MTP_EPSILON;
    let mean = |b: f64| -> f64 {
        let n = match denominator {
            MtpDenominator::Herbrand => herbrand,
            MtpDenominator::Support => support + b,
        };
        if n == 0.0 {
            0.0
        } else {
            (mass + b * g.lambda) / n
        }
    };
    let cap = open.min(usize::MAX as u128) as usize;
    let infeasible = Budget {
        relation: c.relation.clone(),
        max_added: 0,
        infeasible: true,
    };
    let mut b = match denominator {
        // The support mean moves toward λ as tuples are added.
        MtpDenominator::Support if g.lambda < limit => {
            if mean(cap as f64) >= limit {
                return Ok(infeasible);
            }
            cap
        }
        _ if mean(0.0) >= limit => return Ok(infeasible),
        _ if g.lambda <= 0.0 => cap,
        MtpDenominator::Herbrand => {
            let room = (limit * herbrand - mass) / g.lambda;
            room.max(0.0).floor().min(cap as f64) as usize
        }
        MtpDenominator::Support => {
            let room = (limit * support - mass) / (g.lambda - limit);
            room.max(0.0).floor().min(cap as f64) as usize
        }
    };
    // Settle rounding at the boundary against the defining inequality.
    while b > 0 && mean(b as f64) >= limit {
        b -= 1;
    }
    while b < cap && mean((b + 1) as f64) < limit {
        b += 1;
    }
    Ok(Budget {
        relation: c.relation.clone(),
        max_added: b,
        infeasible: false,
    })
}

/// Combines several constraints on one relation into the tightest budget.
pub fn budget_from_constraints(
    g: &OpenPdb,
    cs: &[MtpConstraint],
    denominator: MtpDenominator,
) -> Result<Budget> {
    let first = cs
        .first()
        .ok_or_else(|| Error::Invalid("no MTP constraint given".into()))?;
    let mut best = budget_from_mtp_with(g, first, denominator)?;
    for c in &cs[1..] {
        if c.relation != first.relation {
            return Err(Error::Invalid(format!(
                "constraints on both {} and {}; only one relation can be constrained",
                first.relation, c.relation
            )));
        }
        let b = budget_from_mtp_with(g, c, denominator)?;
        best.infeasible |= b.infeasible;
        best.max_added = best.max_added.min(b.max_added);
    }
    Ok(best)
}

/// A set of open tuples added at probability λ, canonical order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CompletionChoice {
    pub added: Vec<GroundAtom>,
}

impl CompletionChoice {
    pub fn new(schema: &Schema, mut added: Vec<GroundAtom>) -> CompletionChoice {
        added.sort_by_key(|a| schema.atom_key(a));
        added.dedup();
        CompletionChoice { added }
    }

    pub fn len(&self) -> usize {
        self.added.len()
    }

    pub fn is_empty(&self) -> bool {
        self.added.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Closed,
    OpenUpper,
    MtpExact,
    MtpGreedy,
    MtpOracle,
}

/// A probability or probability interval with how it was obtained.
#[derive(Clone, Debug)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub value: Prob,
    pub interval: Option<(f64, f64)>,
    pub witness: Option<CompletionChoice>,
}

impl BoundResult {
    pub fn lower(&self) -> Option<f64> {
        self.interval.map(|i| i.0)
    }

    pub fn upper(&self) -> Option<f64> {
        self.interval.map(|i| i.1)
    }
}

/// Closed-world probability as the lower end and the full λ-completion as
/// the upper end.
pub fn interval_unconstrained(g: &OpenPdb, q: &Ucq) -> Result<BoundResult> {
    let lower = Lifted::new(&g.db).eval(q)?;
    let upper = Lifted::new(&g.full_completion()).eval(q)?;
    Ok(BoundResult {
        kind: BoundKind::OpenUpper,
        value: upper,
        interval: Some((lower.value(), upper.value())),
        witness: None,
    })
}

/// Orders candidate completions: higher value first, then fewer atoms, then
/// lexicographically smaller. Values within [`TIE_TOLERANCE`] tie.
pub fn compare_candidates<K: Ord>(a: (Prob, &[K]), b: (Prob, &[K])) -> Ordering {
    if !a.0.approx_eq(b.0, TIE_TOLERANCE) {
        return b.0.total_cmp(&a.0);
    }
    a.1.len().cmp(&b.1.len()).then_with(|| a.1.cmp(b.1))
}
