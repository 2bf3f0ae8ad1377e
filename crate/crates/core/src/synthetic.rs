//! A synthetic population for comparing closed-world, constrained and
//! unconstrained open-world upper bounds.
//!
//! 500 people `C000..C499`; `LiLA` (lives in Los Angeles), `S` (scientist)
//! and `LiSpr` (lives in Springfield) each hold known tuples at 0.9 on
//! disjoint blocks of people, so every closed-world join is empty. Each row
//! constrains one relation by its mean and completes the other relations at
//! λ; the constrained bound is computed by the exact DP.

use std::fmt;

use crate::db::{Database, GroundAtom, Schema};
use crate::engine::{prob_lifted, Lifted};
use crate::error::Result;
use crate::exact_dp::{mtp_upper_exact_budget, DpConfig};
use crate::open_world::{budget_from_mtp, MtpConstraint, OpenPdb};
use crate::prob::Prob;
use crate::query::parse_ucq;

#[derive(Clone, Debug)]
pub struct PopulationConfig {
    pub people: usize,
    pub lambda: f64,
    pub known_prob: f64,
    /// `(relation, first person, count)`.
    pub blocks: Vec<(&'static str, usize, usize)>,
    /// `(query, constrained relation, mean bound)`.
    pub rows: Vec<(&'static str, &'static str, f64)>,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            people: 500,
            lambda: 0.6,
            known_prob: 0.9,
            blocks: vec![("LiLA", 0, 250), ("S", 250, 25), ("LiSpr", 275, 2)],
            rows: vec![("LiLA(x), S(x)", "S", 0.05), ("LiSpr(x), S(x)", "LiSpr", 0.005)],
        }
    }
}

impl PopulationConfig {
    pub fn open_pdb(&self) -> Result<OpenPdb> {
        let people: Vec<String> = (0..self.people).map(|i| format!("C{i:03}")).collect();
        let schema = Schema::new([("LiLA", 1), ("LiSpr", 1), ("S", 1)], people.clone())?;
        let mut db = Database::new(schema);
        for &(rel, start, count) in &self.blocks {
            for c in &people[start..start + count] {
                db.insert(GroundAtom::new(rel, [c.clone()]), self.known_prob)?;
            }
        }
        OpenPdb::new(db, self.lambda)
    }
}

#[derive(Clone, Debug)]
pub struct BoundRow {
    pub query: String,
    pub constrained: String,
    pub mean_bound: f64,
    pub budget: usize,
    pub closed: Prob,
    pub constrained_open: Prob,
    pub open: Prob,
}

impl fmt::Display for BoundRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: Prob| {
            if p.value() > 0.5 {
                format!("1 - 10^{:.2}", p.log10_complement())
            } else {
                format!("{:.6}", p.value())
            }
        };
        write!(
            f,
            "{:<16} CW = {}  COW[{} <= {}, B = {}] = {}  OW = {}",
            self.query,
            show(self.closed),
            self.constrained,
            self.mean_bound,
            self.budget,
            show(self.constrained_open),
            show(self.open)
        )
    }
}

pub fn bound_table(cfg: &PopulationConfig) -> Result<Vec<BoundRow>> {
    let g = cfg.open_pdb()?;
    let mut rows = Vec::new();
    for &(text, rel, mean) in &cfg.rows {
        let q = parse_ucq(text, g.schema())?;
        let closed = Prob::new(prob_lifted(&q, &g.db)?);
        let open = Lifted::new(&g.full_completion()).eval(&q)?;
        let partial = g.complete_other_relations(rel)?;
        let budget = budget_from_mtp(&g, &MtpConstraint::new(rel, mean)?)?;
        let constrained_open = mtp_upper_exact_budget(&partial, &budget, &q, &DpConfig::default())?.value;
        rows.push(BoundRow {
            query: q.to_string(),
            constrained: rel.to_string(),
            mean_bound: mean,
            budget: budget.max_added,
            closed,
            constrained_open,
            open,
        });
    }
    Ok(rows)
}
