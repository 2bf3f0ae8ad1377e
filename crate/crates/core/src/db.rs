//! Schemas, tuple-independent databases and probability sources.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::query::{write_constant, Atom, Term};

/// Predicates with their arities plus an explicit, ordered domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    predicates: BTreeMap<String, usize>,
    domain: Vec<String>,
    index: HashMap<String, usize>,
}

impl Schema {
    pub fn new<P, S>(predicates: P, domain: Vec<String>) -> Result<Schema>
    where
        P: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut preds = BTreeMap::new();
        for (name, arity) in predicates {
            let name = name.into();
            if arity == 0 {
                return Err(Error::Invalid(format!("predicate `{name}` has arity 0")));
            }
            if preds.insert(name.clone(), arity).is_some() {
                return Err(Error::Invalid(format!("predicate `{name}` declared twice")));
            }
        }
        if domain.is_empty() {
            return Err(Error::Invalid("domain is empty".into()));
        }
        let mut index = HashMap::with_capacity(domain.len());
        for (i, c) in domain.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::Invalid("empty constant in domain".into()));
            }
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::Invalid(format!("constant `{c}` listed twice")));
            }
        }
        Ok(Schema {
            predicates: preds,
            domain,
            index,
        })
    }

    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.predicates.get(pred).copied()
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, usize)> {
        self.predicates.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn constant_index(&self, c: &str) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn contains_constant(&self, c: &str) -> bool {
        self.index.contains_key(c)
    }

    /// `|domain|^arity`, the size of the relation's Herbrand base.
    pub fn herbrand_size(&self, pred: &str) -> Option<u128> {
        let arity = self.arity(pred)?;
        Some((self.domain.len() as u128).pow(arity as u32))
    }

    /// All ground atoms of `pred`, lexicographic in domain order.
    pub fn herbrand_atoms<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = GroundAtom> + 'a {
        let arity = self.arity(pred).unwrap_or(0);
        let n = self.domain.len();
        let total = if arity == 0 { 0 } else { n.pow(arity as u32) };
        (0..total).map(move |mut code| {
            let mut idx = vec![0; arity];
            for slot in idx.iter_mut().rev() {
                *slot = code % n;
                code /= n;
            }
            GroundAtom {
                pred: pred.to_string(),
                args: idx.into_iter().map(|i| self.domain[i].clone()).collect(),
            }
        })
    }

    /// Sort key placing atoms in canonical (domain-order lexicographic) order.
    pub fn atom_key(&self, atom: &GroundAtom) -> (String, Vec<usize>) {
        (
            atom.pred.clone(),
            atom.args
                .iter()
                .map(|c| self.constant_index(c).unwrap_or(usize::MAX))
                .collect(),
        )
    }
}

/// An atom without variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(pred: impl Into<String>, args: impl IntoIterator<Item = S>) -> Self {
        GroundAtom {
            pred: pred.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn from_atom(atom: &Atom) -> Option<GroundAtom> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom {
            pred: atom.pred.clone(),
            args,
        })
    }

    pub fn to_atom(&self) -> Atom {
        Atom::new(
            self.pred.clone(),
            self.args.iter().cloned().map(Term::Const).collect(),
        )
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, c) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write_constant(f, c)?;
        }
        f.write_str(")")
    }
}

/// Anything that assigns a marginal probability to ground atoms.
pub trait TupleSource: Sync {
    fn schema(&self) -> &Schema;
    fn prob(&self, atom: &GroundAtom) -> f64;
}

/// A tuple-independent probabilistic database over an explicit schema.
///
/// Absent atoms have probability zero. An atom may be stored with
/// probability zero, which marks it as known-false rather than unknown.
#[derive(Clone, Debug)]
pub struct Database {
    schema: Schema,
    relations: BTreeMap<String, HashMap<Vec<String>, f64>>,
}

impl Database {
    pub fn new(schema: Schema) -> Database {
        let relations = schema
            .predicates()
            .map(|(p, _)| (p.to_string(), HashMap::new()))
            .collect();
        Database { schema, relations }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn insert(&mut self, atom: GroundAtom, p: f64) -> Result<()> {
        let arity = self
            .schema
            .arity(&atom.pred)
            .ok_or_else(|| Error::UnknownPredicate(atom.pred.clone()))?;
        if arity != atom.args.len() {
            return Err(Error::ArityMismatch {
                pred: atom.pred,
                expected: arity,
                found: atom.args.len(),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability {
                value: p,
                context: atom.to_string(),
            });
        }
        if let Some(c) = atom.args.iter().find(|c| !self.schema.contains_constant(c)) {
            return Err(Error::Invalid(format!(
                "constant `{c}` of {atom} is not in the domain"
            )));
        }
        let rel = self.relations.get_mut(&atom.pred).expect("relation exists");
        if rel.contains_key(&atom.args) {
            return Err(Error::Invalid(format!("duplicate tuple {atom}")));
        }
        rel.insert(atom.args, p);
        Ok(())
    }

    /// Inserts or replaces a tuple without duplicate checking.
    pub(crate) fn set(&mut self, atom: GroundAtom, p: f64) {
        self.relations
            .entry(atom.pred)
            .or_default()
            .insert(atom.args, p);
    }

    pub fn get(&self, atom: &GroundAtom) -> Option<f64> {
        self.relations.get(&atom.pred)?.get(&atom.args).copied()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.get(atom).is_some()
    }

    /// Stored tuples of `pred` in canonical order.
    pub fn tuples(&self, pred: &str) -> Vec<(GroundAtom, f64)> {
        let mut out: Vec<(GroundAtom, f64)> = self
            .relations
            .get(pred)
            .into_iter()
            .flatten()
            .map(|(args, &p)| (GroundAtom::new(pred, args.iter().cloned()), p))
            .collect();
        out.sort_by_key(|(a, _)| self.schema.atom_key(a));
        out
    }

    /// All stored tuples, canonical order.
    pub fn all_tuples(&self) -> Vec<(GroundAtom, f64)> {
        self.relations
            .keys()
            .flat_map(|p| self.tuples(p))
            .collect()
    }

    pub fn len(&self, pred: &str) -> usize {
        self.relations.get(pred).map_or(0, HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.relations.values().all(HashMap::is_empty)
    }

    /// Sum of stored probabilities in `pred`.
    pub fn mass(&self, pred: &str) -> f64 {
        self.relations.get(pred).map_or(0.0, |r| r.values().sum())
    }

    pub fn nonzero_count(&self, pred: &str) -> usize {
        self.relations
            .get(pred)
            .map_or(0, |r| r.values().filter(|&&p| p > 0.0).count())
    }
}

impl TupleSource for Database {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn prob(&self, atom: &GroundAtom) -> f64 {
        self.get(atom).unwrap_or(0.0)
    }
}

/// A source with some atoms overridden.
pub struct Overlay<'a> {
    base: &'a dyn TupleSource,
    overrides: HashMap<GroundAtom, f64>,
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a dyn TupleSource) -> Self {
        Overlay {
            base,
            overrides: HashMap::new(),
        }
    }

    pub fn with(mut self, atom: GroundAtom, p: f64) -> Self {
        self.overrides.insert(atom, p);
        self
    }

    pub fn set(&mut self, atom: GroundAtom, p: f64) {
        self.overrides.insert(atom, p);
    }
}

impl TupleSource for Overlay<'_> {
    fn schema(&self) -> &Schema {
        self.base.schema()
    }

    fn prob(&self, atom: &GroundAtom) -> f64 {
        match self.overrides.get(atom) {
            Some(&p) => p,
            None => self.base.prob(atom),
        }
    }
}

/// The λ-completion assigning `lambda` to every absent Herbrand atom,
/// optionally only within one relation. Nothing is materialized.
pub struct Completion<'a> {
    db: &'a Database,
    lambda: f64,
    relation: Option<&'a str>,
}

impl<'a> Completion<'a> {
    pub fn full(db: &'a Database, lambda: f64) -> Self {
        Completion {
            db,
            lambda,
            relation: None,
        }
    }

    pub fn relation(db: &'a Database, lambda: f64, relation: &'a str) -> Self {
        Completion {
            db,
            lambda,
            relation: Some(relation),
        }
    }
}

impl TupleSource for Completion<'_> {
    fn schema(&self) -> &Schema {
        &self.db.schema
    }

    fn prob(&self, atom: &GroundAtom) -> f64 {
        if let Some(p) = self.db.get(atom) {
            return p;
        }
        let in_scope = self.relation.is_none_or(|r| r == atom.pred);
        let in_base = self.db.schema.arity(&atom.pred) == Some(atom.args.len())
            && atom.args.iter().all(|c| self.db.schema.contains_constant(c));
        if in_scope && in_base {
            self.lambda
        } else {
            0.0
        }
    }
}
