//! Probabilistic databases with open-world semantics and MTP-constrained
//! upper bounds. See the guide in `book/` for a walkthrough.

pub mod db;
pub mod engine;
pub mod error;
pub mod exact_dp;
pub mod greedy;
pub mod io;
pub mod oracle;
pub mod open_world;
pub mod prob;
pub mod query;
pub mod synthetic;

pub use db::{Database, GroundAtom, Schema, TupleSource};
pub use error::{Error, Result};
pub use prob::Prob;
pub use query::{parse_ucq, Atom, ConjunctiveQuery, Term, Ucq};
