//! Boolean unions of conjunctive queries.
//!
//! Variables are scoped per disjunct: `R(x) | S(x)` mentions two unrelated
//! variables that happen to share a name. Constructors canonicalize atom and
//! disjunct order so structurally equal queries compare equal.

mod analysis;
mod ground;
mod parse;
pub(crate) mod rewrite;

use std::collections::BTreeSet;
use std::fmt;

pub use analysis::{has_self_join, is_hierarchical, is_inversion_free, QueryProfile};
pub use ground::{ground, GroundDnf, DEFAULT_GROUND_CAP};
pub use parse::parse_ucq;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) => f.write_str(n),
            Term::Const(c) => write_constant(f, c),
        }
    }
}

/// Writes a constant bare when it lexes as one, quoted otherwise.
pub(crate) fn write_constant(f: &mut impl fmt::Write, c: &str) -> fmt::Result {
    let mut chars = c.chars();
    let bare = matches!(chars.next(), Some(ch) if ch.is_ascii_uppercase())
        && chars.all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    if bare {
        f.write_str(c)
    } else {
        f.write_char('"')?;
        for ch in c.chars() {
            if ch == '"' || ch == '\\' {
                f.write_char('\\')?;
            }
            f.write_char(ch)?;
        }
        f.write_char('"')
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom {
            pred: pred.into(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// An existentially quantified conjunction of atoms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConjunctiveQuery {
    atoms: Vec<Atom>,
}

impl ConjunctiveQuery {
    /// Sorts and deduplicates `atoms`. An empty list denotes `true` and is
    /// only produced internally during simplification.
    pub fn new(mut atoms: Vec<Atom>) -> ConjunctiveQuery {
        atoms.sort();
        atoms.dedup();
        ConjunctiveQuery { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn vars(&self) -> BTreeSet<&str> {
        self.atoms.iter().flat_map(Atom::vars).collect()
    }

    pub fn is_ground(&self) -> bool {
        self.atoms.iter().all(Atom::is_ground)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A union of conjunctive queries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ucq {
    disjuncts: Vec<ConjunctiveQuery>,
}

impl Ucq {
    /// Sorts and deduplicates the disjuncts. An empty list denotes `false`.
    pub fn new(mut disjuncts: Vec<ConjunctiveQuery>) -> Ucq {
        disjuncts.sort();
        disjuncts.dedup();
        Ucq { disjuncts }
    }

    pub fn from_cq(cq: ConjunctiveQuery) -> Ucq {
        Ucq {
            disjuncts: vec![cq],
        }
    }

    pub fn disjuncts(&self) -> &[ConjunctiveQuery] {
        &self.disjuncts
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.disjuncts.iter().flat_map(|cq| cq.atoms.iter())
    }

    pub fn predicates(&self) -> BTreeSet<&str> {
        self.atoms().map(|a| a.pred.as_str()).collect()
    }

    pub fn constants(&self) -> BTreeSet<&str> {
        self.atoms()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.as_str()),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// True for the query with no disjuncts.
    pub fn is_false(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// True when some disjunct has no atoms left.
    pub fn is_true(&self) -> bool {
        self.disjuncts.iter().any(|cq| cq.atoms.is_empty())
    }
}

impl fmt::Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return f.write_str("false");
        }
        for (i, cq) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            if cq.atoms.is_empty() {
                f.write_str("true")?;
            } else {
                write!(f, "{cq}")?;
            }
        }
        Ok(())
    }
}
