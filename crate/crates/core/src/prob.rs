//! Probabilities carried together with their log-complement.
//!
//! Query probabilities for large domains routinely sit within `1e-200` of
//! one, where `1.0 - q` in plain `f64` rounds to exactly one. [`Prob`] keeps
//! the probability `p` and `ln(1 - p)` side by side; every combinator
//! computes each side from the representation that carries it without
//! cancellation.

use std::cmp::Ordering;
use std::fmt;

/// A probability in `[0, 1]` with an accurately tracked complement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prob {
    p: f64,
    log_q: f64,
}

/// Largest clamp applied to a combined value before it is considered a bug.
pub const CLAMP_SLACK: f64 = 1e-12;

impl Prob {
    pub const ZERO: Prob = Prob { p: 0.0, log_q: 0.0 };
    pub const ONE: Prob = Prob {
        p: 1.0,
        log_q: f64::NEG_INFINITY,
    };

    pub fn new(p: f64) -> Prob {
        debug_assert!(
            (-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&p),
            "probability {p} out of range"
        );
        let p = p.clamp(0.0, 1.0);
        Prob {
            p,
            log_q: (-p).ln_1p(),
        }
    }

    /// Builds a probability from `ln(1 - p)`.
    pub fn from_log_complement(log_q: f64) -> Prob {
        let log_q = log_q.min(0.0);
        Prob {
            p: -log_q.exp_m1(),
            log_q,
        }
    }

    pub fn value(self) -> f64 {
        self.p
    }

    /// `ln(1 - p)`, exact down to complements far below `f64::MIN_POSITIVE`.
    pub fn log_complement(self) -> f64 {
        self.log_q
    }

    /// `1 - p`, computed from the log-complement.
    pub fn complement(self) -> f64 {
        self.log_q.exp()
    }

    /// `log10(1 - p)`.
    pub fn log10_complement(self) -> f64 {
        self.log_q / std::f64::consts::LN_10
    }

    /// Independent disjunction `1 - (1 - a)(1 - b)`.
    pub fn or(self, other: Prob) -> Prob {
        let log_q = self.log_q + other.log_q;
        // 1 - q1 q2 = p1 + q1 p2, all terms non-negative
        let p = self.p + self.complement() * other.p;
        Prob {
            p: p.min(1.0),
            log_q,
        }
    }

    /// Independent conjunction `a * b`.
    pub fn and(self, other: Prob) -> Prob {
        let p = self.p * other.p;
        let log_q = if p < 0.5 {
            (-p).ln_1p()
        } else {
            // 1 - p1 p2 = q1 + p1 q2
            log_add_exp(self.log_q, self.p.ln() + other.log_q)
        };
        Prob { p, log_q }
    }

    /// Signed combination `sum_i c_i * P_i` whose coefficients sum to one, as
    /// produced by inclusion-exclusion. The complement is then `sum_i c_i * Q_i`.
    pub fn signed_sum<I>(terms: I) -> Prob
    where
        I: IntoIterator<Item = (i64, Prob)>,
    {
        let mut p = 0.0;
        let mut q = 0.0;
        let mut coef_sum = 0;
        let terms: Vec<(i64, Prob)> = terms.into_iter().collect();
        for &(c, t) in &terms {
            coef_sum += c;
            p += c as f64 * t.p;
        }
        if coef_sum != 1 || p < 0.5 {
            return Prob::new(p.clamp(0.0, 1.0));
        }
        // Near one the complements carry the precision. Factor out the
        // largest log-complement so that tiny complements do not underflow.
        let max_lq = terms
            .iter()
            .map(|(_, t)| t.log_q)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_lq == f64::NEG_INFINITY {
            return Prob::ONE;
        }
        for &(c, t) in &terms {
            q += c as f64 * (t.log_q - max_lq).exp();
        }
        if q <= 0.0 {
            return Prob::ONE;
        }
        let log_q = (q.ln() + max_lq).min(0.0);
        Prob {
            p: p.clamp(0.0, 1.0),
            log_q,
        }
    }

    /// Orders by probability, comparing log-complements so that values
    /// within `1e-300` of one still order correctly.
    pub fn total_cmp(&self, other: &Prob) -> Ordering {
        other
            .log_q
            .total_cmp(&self.log_q)
            .then_with(|| self.p.total_cmp(&other.p))
    }

    /// Equal up to `tol` in value and in relative log-complement.
    pub fn approx_eq(self, other: Prob, tol: f64) -> bool {
        if (self.p - other.p).abs() > tol {
            return false;
        }
        if self.log_q == other.log_q {
            return true;
        }
        let scale = self.log_q.abs().max(other.log_q.abs()).max(1.0);
        (self.log_q - other.log_q).abs() <= tol * scale
    }
}

impl Default for Prob {
    fn default() -> Self {
        Prob::ZERO
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
