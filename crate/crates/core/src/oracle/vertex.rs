//! Checks that fractional completions under an MTP constraint do not beat
//! the best completion using only probabilities `0` and `λ`, beyond the
//! rounding slack of one fractional coordinate.

use std::fmt;

use super::evaluate;
use crate::db::{GroundAtom, Overlay};
use crate::engine::{is_safe, EngineConfig};
use crate::error::{Error, Result};
use crate::open_world::{budget_from_mtp, MtpConstraint, OpenPdb, MTP_EPSILON, TIE_TOLERANCE};
use crate::query::Ucq;

/// Most open tuples the grid search accepts.
pub const MAX_OPEN: usize = 8;

/// Grid steps per λ.
pub const GRID_STEPS: usize = 10;

#[derive(Clone, Debug)]
pub struct VertexReport {
    pub open: usize,
    pub budget: usize,
    pub best_vertex: f64,
    pub best_grid: f64,
    pub slack: f64,
    /// Fewest coordinates strictly inside `(0, λ)` among best grid points.
    pub interior: usize,
    pub passed: bool,
}

impl fmt::Display for VertexReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "open={} budget={} vertex={:.12} grid={:.12} slack={:.3e} interior={}",
            self.open, self.budget, self.best_vertex, self.best_grid, self.slack, self.interior
        )
    }
}

/// The query probability as a multilinear polynomial in the probabilities
/// of `atoms`: coefficient `c[S]` multiplies `prod_{i in S} x_i`.
pub fn multilinear_coefficients(
    g: &OpenPdb,
    q: &Ucq,
    atoms: &[GroundAtom],
    engine: &EngineConfig,
) -> Result<Vec<f64>> {
    let n = atoms.len();
    let safe = is_safe(q);
    let mut c = Vec::with_capacity(1 << n);
    for mask in 0..1usize << n {
        let mut overlay = Overlay::new(&g.db);
        for (i, a) in atoms.iter().enumerate() {
            if mask >> i & 1 == 1 {
                overlay.set(a.clone(), 1.0);
            }
        }
        c.push(evaluate(q, &overlay, safe, engine)?.value());
    }
    for i in 0..n {
        for mask in 0..1usize << n {
            if mask >> i & 1 == 1 {
                c[mask] -= c[mask ^ (1 << i)];
            }
        }
    }
    Ok(c)
}

fn eval_poly(c: &[f64], x: &[f64]) -> f64 {
    c.iter()
        .enumerate()
        .map(|(mask, &coef)| {
            x.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, v)| v)
                .product::<f64>()
                * coef
        })
        .sum()
}

struct Grid<'a> {
    step: f64,
    room: f64,
    best: f64,
    interior: usize,
    scratch: Vec<Vec<f64>>,
    coefs: &'a [f64],
}

impl Grid<'_> {
    /// Fixes coordinate `i`; `level[i]` holds the polynomial in the
    /// remaining coordinates with bit 0 standing for coordinate `i`.
    fn search(&mut self, i: usize, used: f64, interior: usize) {
        let n = self.scratch.len();
        if i == n {
            let v = if n == 0 { self.coefs[0] } else { self.scratch[n - 1][0] };
            if v > self.best + TIE_TOLERANCE {
                self.best = v;
                self.interior = interior;
            } else if v >= self.best - TIE_TOLERANCE {
                self.best = self.best.max(v);
                self.interior = self.interior.min(interior);
            }
            return;
        }
        for j in 0..=GRID_STEPS {
            let x = j as f64 * self.step;
            if used + x >= self.room {
                break;
            }
            let (done, rest) = self.scratch.split_at_mut(i);
            let src: &[f64] = if i == 0 { self.coefs } else { &done[i - 1] };
            let dst = &mut rest[0];
            for (m, d) in dst.iter_mut().enumerate() {
                *d = src[2 * m] + x * src[2 * m + 1];
            }
            let inner = usize::from(j != 0 && j != GRID_STEPS);
            self.search(i + 1, used + x, interior + inner);
        }
    }
}

/// Compares the best grid completion (step λ/10) against the best `{0, λ}`
/// completion allowed by the budget, over all open tuples of the
/// constrained relation.
pub fn vertex_attainment(
    g: &OpenPdb,
    c: &MtpConstraint,
    q: &Ucq,
    engine: &EngineConfig,
) -> Result<VertexReport> {
    let atoms = g.open_tuples(&c.relation)?;
    let n = atoms.len();
    if n > MAX_OPEN {
        return Err(Error::ResourceLimit {
            what: "open tuples in the vertex grid search",
            needed: n as u128,
            limit: MAX_OPEN as u128,
        });
    }
    let budget = budget_from_mtp(g, c)?;
    let coefs = multilinear_coefficients(g, q, &atoms, engine)?;
    let lambda = g.lambda;
    let herbrand = g.schema().herbrand_size(&c.relation).unwrap_or(0) as f64;
    // Added mass must stay strictly below this for the mean to satisfy the bound.
    let room = (c.mean_bound - MTP_EPSILON) * herbrand - g.db.mass(&c.relation);

    let mut best_vertex = f64::NEG_INFINITY;
    for mask in 0..1usize << n {
        if mask.count_ones() as usize <= budget.max_added {
            let x: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { lambda } else { 0.0 }).collect();
            best_vertex = best_vertex.max(eval_poly(&coefs, &x));
        }
    }
    let base = coefs[0];
    let slack = (0..n)
        .map(|i| {
            let mut x = vec![0.0; n];
            x[i] = lambda;
            eval_poly(&coefs, &x) - base
        })
        .fold(0.0, f64::max)
        + TIE_TOLERANCE;

    let mut grid = Grid {
        step: lambda / GRID_STEPS as f64,
        room,
        best: f64::NEG_INFINITY,
        interior: usize::MAX,
        scratch: (0..n).map(|i| vec![0.0; 1 << (n - i - 1)]).collect(),
        coefs: &coefs,
    };
    if room > 0.0 {
        grid.search(0, 0.0, 0);
    }
    let (best_grid, interior) = if grid.best.is_finite() {
        (grid.best, grid.interior)
    } else {
        (best_vertex, 0)
    };
    Ok(VertexReport {
        open: n,
        budget: budget.max_added,
        best_vertex,
        best_grid,
        slack,
        interior,
        passed: best_grid <= best_vertex + slack && interior <= 1,
    })
}
