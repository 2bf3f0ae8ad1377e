//! Seeded property suites. Each suite draws its own instances from a
//! generator seeded by the run seed and the suite name, so a suite's
//! outcome does not depend on which other suites run.

use std::fmt;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gen::{
    random_database, random_mtp_instance, random_query, random_safe_query, random_schema,
    GenConfig, MtpInstance, QueryFilter,
};
use super::matching::{verify_maxmatch, ThreeDmInstance};
use super::vertex::vertex_attainment;
use super::{mtp_upper_bruteforce_budget, OracleConfig};
use crate::db::{Database, GroundAtom, Overlay};
use crate::engine::{prob_ground, prob_lifted, EngineConfig, Lifted};
use crate::error::Error;
use crate::exact_dp::{mtp_upper_exact_budget, DpConfig};
use crate::greedy::{greedy_upper_budget, set_query_prob};
use crate::open_world::{
    budget_from_mtp, interval_unconstrained, relevant_open_tuples, CompletionChoice, MtpConstraint,
    OpenPdb,
};
use crate::query::parse_ucq;

/// Result of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub passed: usize,
    /// Largest deviation observed, where the suite measures one.
    pub max_error: f64,
    /// The smallest failing instance, if any.
    pub counterexample: Option<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str) -> SuiteOutcome {
        SuiteOutcome {
            name,
            trials: 0,
            passed: 0,
            max_error: 0.0,
            counterexample: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.trials && self.counterexample.is_none()
    }

    pub fn failed(&self) -> usize {
        self.trials - self.passed
    }
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}/{} passed, max error {:.3e}",
            self.name, self.passed, self.trials, self.max_error
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n  counterexample: {c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub outcomes: Vec<SuiteOutcome>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.outcomes.iter().all(SuiteOutcome::ok)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let failed: usize = self.outcomes.iter().map(SuiteOutcome::failed).sum();
        writeln!(f, "suites: {}, failed trials: {failed}", self.outcomes.len())
    }
}

/// Runs every suite with `trials` instances each.
pub fn property_suites(seed: u64, trials: usize) -> SuiteReport {
    let mut outcomes = Vec::new();
    if trials > 0 {
        let suites: [fn(u64, usize) -> SuiteOutcome; 11] = [
            roundtrip,
            lifted_vs_ground,
            monotonicity,
            ie_consistency,
            budget_monotonicity,
            interval_sandwich,
            exact_vs_oracle,
            submodularity,
            greedy_guarantee,
            vertex_attainment_suite,
            three_dm,
        ];
        outcomes = suites.iter().map(|s| s(seed, trials)).collect();
    }
    SuiteReport { seed, outcomes }
}

fn rng_for(seed: u64, name: &str) -> ChaCha8Rng {
    let salt = name
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

/// Drives a suite: `trial` returns `None` to reject an instance,
/// `Some(Ok(err))` on success with a measured error, and
/// `Some(Err((size, description)))` on failure.
fn drive(
    name: &'static str,
    seed: u64,
    trials: usize,
    mut trial: impl FnMut(&mut ChaCha8Rng) -> Option<Result<f64, (usize, String)>>,
) -> SuiteOutcome {
    let mut rng = rng_for(seed, name);
    let mut out = SuiteOutcome::new(name);
    let mut smallest = usize::MAX;
    let max_attempts = trials * 50 + 100;
    let mut attempts = 0;
    while out.trials < trials {
        attempts += 1;
        if attempts > max_attempts {
            out.counterexample = Some(format!(
                "generator produced only {} usable instances",
                out.trials
            ));
            break;
        }
        match trial(&mut rng) {
            None => continue,
            Some(Ok(err)) => {
                out.trials += 1;
                out.passed += 1;
                out.max_error = out.max_error.max(err);
            }
            Some(Err((size, desc))) => {
                out.trials += 1;
                if size < smallest {
                    smallest = size;
                    out.counterexample = Some(desc);
                }
            }
        }
    }
    out
}

fn check(ok: bool, err: f64, size: usize, desc: impl FnOnce() -> String) -> Option<Result<f64, (usize, String)>> {
    Some(if ok { Ok(err) } else { Err((size, desc())) })
}

fn describe_db(db: &Database) -> String {
    let tuples: Vec<String> = db
        .all_tuples()
        .iter()
        .map(|(a, p)| format!("{a}:{p}"))
        .collect();
    format!("domain = {:?}; db = [{}]", db.schema().domain(), tuples.join(", "))
}

/// Skips instances that hit a resource guard; reports any other error.
macro_rules! attempt {
    ($e:expr, $size:expr, $desc:expr) => {
        match $e {
            Ok(v) => v,
            Err(Error::ResourceLimit { .. }) => return None,
            Err(e) => return Some(Err(($size, format!("{}: {e}", $desc)))),
        }
    };
}

/// Printing and re-parsing a query gives it back unchanged.
pub fn roundtrip(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("roundtrip", seed, trials, |rng| {
        let schema = random_schema(rng, &cfg);
        let q = random_query(rng, &schema, &cfg);
        let text = q.to_string();
        let back = parse_ucq(&text, &schema);
        check(matches!(&back, Ok(b) if *b == q), 0.0, text.len(), || format!("{text} -> {back:?}"))
    })
}

/// Lifted evaluation agrees with world enumeration.
pub fn lifted_vs_ground(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("lifted_vs_ground", seed, trials, |rng| {
        let schema = random_schema(rng, &cfg);
        let q = random_safe_query(rng, &schema, &cfg, QueryFilter::default(), 20)?;
        let db = random_database(rng, &schema, &cfg);
        let size = db.all_tuples().len() + q.atoms().count();
        let desc = || format!("q = {q}; {}", describe_db(&db));
        let lifted = attempt!(prob_lifted(&q, &db), size, desc());
        let ground = attempt!(prob_ground(&q, &db, &EngineConfig::default()), size, desc());
        let err = (lifted - ground).abs();
        check(err <= 1e-9, err, size, || format!("{}; lifted {lifted} ground {ground}", desc()))
    })
}

/// Raising one tuple probability never lowers a query probability.
pub fn monotonicity(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("monotonicity", seed, trials, |rng| {
        let schema = random_schema(rng, &cfg);
        let q = random_safe_query(rng, &schema, &cfg, QueryFilter::default(), 20)?;
        let db = random_database(rng, &schema, &cfg);
        let pred = q.predicates().into_iter().choose(rng)?.to_string();
        let atom = schema.herbrand_atoms(&pred).choose(rng)?;
        let old = db.get(&atom).unwrap_or(0.0);
        let new = rng.gen_range(old..=1.0);
        let size = db.all_tuples().len() + q.atoms().count();
        let desc = || format!("q = {q}; {}; {atom}: {old} -> {new}", describe_db(&db));
        let before = attempt!(prob_lifted(&q, &db), size, desc());
        let raised = Overlay::new(&db).with(atom.clone(), new);
        let after = attempt!(prob_lifted(&q, &raised), size, desc());
        check(after >= before - 1e-12, (before - after).max(0.0), size, || {
            format!("{}; {before} -> {after}", desc())
        })
    })
}

/// Forcing inclusion-exclusion for every conjunction changes nothing.
pub fn ie_consistency(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("ie_consistency", seed, trials, |rng| {
        let schema = random_schema(rng, &cfg);
        let q = random_safe_query(rng, &schema, &cfg, QueryFilter::default(), 20)?;
        let db = random_database(rng, &schema, &cfg);
        let size = db.all_tuples().len() + q.atoms().count();
        let desc = || format!("q = {q}; {}", describe_db(&db));
        let plain = attempt!(Lifted::new(&db).eval(&q), size, desc()).value();
        let forced_cfg = EngineConfig {
            force_inclusion_exclusion: true,
            ..EngineConfig::default()
        };
        let forced = attempt!(Lifted::with_config(&db, forced_cfg).eval(&q), size, desc()).value();
        let err = (plain - forced).abs();
        check(err <= 1e-9, err, size, || format!("{}; {plain} vs {forced}", desc()))
    })
}

/// Budgets grow with the mean bound and shrink as λ grows.
pub fn budget_monotonicity(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("budget_monotonicity", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, QueryFilter::default(), 12, 4);
        let rel = inst.constraint.relation.clone();
        let a = rng.gen_range(0.01..=1.0f64);
        let b = rng.gen_range(0.01..=1.0f64);
        let (lo, hi) = (a.min(b), a.max(b));
        let budget = |g: &OpenPdb, mean: f64| {
            budget_from_mtp(g, &MtpConstraint::new(rel.clone(), mean).expect("in range"))
                .expect("relation exists")
                .max_added
        };
        let by_mean = budget(&inst.g, lo) <= budget(&inst.g, hi);
        let mut small = inst.g.clone();
        small.lambda = 0.2;
        let mut large = inst.g.clone();
        large.lambda = 0.8;
        let by_lambda = budget(&small, hi) >= budget(&large, hi);
        check(by_mean && by_lambda, 0.0, inst.size(), || {
            format!("{}; means {lo} {hi}", inst.describe())
        })
    })
}

/// Closed world ≤ budgeted optimum ≤ full completion.
pub fn interval_sandwich(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    drive("interval_sandwich", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, QueryFilter::default(), 12, 4);
        let size = inst.size();
        let interval = attempt!(interval_unconstrained(&inst.g, &inst.q), size, inst.describe());
        let (lo, hi) = interval.interval.expect("intervals carry bounds");
        let opt = attempt!(
            mtp_upper_bruteforce_budget(&inst.g, &inst.budget, &inst.q, &OracleConfig::default()),
            size,
            inst.describe()
        )
        .value
        .value();
        let ok = lo <= opt + 1e-12 && opt <= hi + 1e-12;
        check(ok, 0.0, size, || format!("{}; [{lo}, {hi}] vs {opt}", inst.describe()))
    })
}

fn reevaluate(inst: &MtpInstance, witness: &CompletionChoice) -> Result<f64, Error> {
    let db = inst.g.apply_completion(witness)?;
    prob_lifted(&inst.q, &db)
}

/// The dynamic program matches brute force and its witness reproduces
/// the value.
pub fn exact_vs_oracle(seed: u64, trials: usize) -> SuiteOutcome {
    let cfg = GenConfig::default();
    let filter = QueryFilter {
        inversion_free: true,
        self_join_free: false,
    };
    drive("exact_vs_oracle", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, filter, 12, 4);
        let size = inst.size();
        let exact = attempt!(
            mtp_upper_exact_budget(&inst.g, &inst.budget, &inst.q, &DpConfig::default()),
            size,
            inst.describe()
        );
        let oracle = attempt!(
            mtp_upper_bruteforce_budget(&inst.g, &inst.budget, &inst.q, &OracleConfig::default()),
            size,
            inst.describe()
        );
        let witness = exact.witness.clone().unwrap_or_default();
        let again = attempt!(reevaluate(&inst, &witness), size, inst.describe());
        let (e, o) = (exact.value.value(), oracle.value.value());
        let err = (e - o).abs();
        let ok = err <= 1e-9 && (again - e).abs() <= 1e-12 && witness.len() <= inst.budget.max_added;
        check(ok, err, size, || {
            format!(
                "{}; exact {e} oracle {o} witness {:?} re-evaluated {again}",
                inst.describe(),
                witness.added.iter().map(ToString::to_string).collect::<Vec<_>>()
            )
        })
    })
}

fn self_join_free_cfg() -> (GenConfig, QueryFilter) {
    let cfg = GenConfig {
        self_join_free: true,
        ..GenConfig::default()
    };
    let filter = QueryFilter {
        inversion_free: false,
        self_join_free: true,
    };
    (cfg, filter)
}

/// Marginal gains of the set query probability shrink as the set grows.
pub fn submodularity(seed: u64, trials: usize) -> SuiteOutcome {
    let (cfg, filter) = self_join_free_cfg();
    drive("submodularity", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, filter, 12, 4);
        let size = inst.size();
        let open = attempt!(
            relevant_open_tuples(&inst.g, &inst.constraint.relation, &inst.q),
            size,
            inst.describe()
        );
        if open.is_empty() {
            return None;
        }
        let mut shuffled = open.clone();
        shuffled.shuffle(rng);
        let x = shuffled.pop().expect("non-empty");
        let y_len = rng.gen_range(0..=shuffled.len());
        let big: Vec<GroundAtom> = shuffled[..y_len].to_vec();
        let small: Vec<GroundAtom> = big.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        let with = |set: &[GroundAtom]| {
            let mut v = set.to_vec();
            v.push(x.clone());
            v
        };
        let s = |set: &[GroundAtom]| set_query_prob(&inst.g, &inst.q, set).map(|p| p.value());
        let s_x = attempt!(s(&small), size, inst.describe());
        let s_xa = attempt!(s(&with(&small)), size, inst.describe());
        let s_y = attempt!(s(&big), size, inst.describe());
        let s_ya = attempt!(s(&with(&big)), size, inst.describe());
        let violation = (s_ya - s_y) - (s_xa - s_x);
        let ok = violation <= 1e-12 && s_x <= s_y + 1e-12;
        check(ok, violation.max(0.0), size, || {
            format!(
                "{}; X = {:?}, Y = {:?}, x = {x}; gains {} vs {}",
                inst.describe(),
                small.iter().map(ToString::to_string).collect::<Vec<_>>(),
                big.iter().map(ToString::to_string).collect::<Vec<_>>(),
                s_xa - s_x,
                s_ya - s_y
            )
        })
    })
}

/// The optimum lies in the greedy interval and greedy recovers at least a
/// `1 - 1/e` share of the achievable gain.
pub fn greedy_guarantee(seed: u64, trials: usize) -> SuiteOutcome {
    let (cfg, filter) = self_join_free_cfg();
    drive("greedy_guarantee", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, filter, 12, 4);
        let size = inst.size();
        let (result, trace) = attempt!(
            greedy_upper_budget(&inst.g, &inst.budget, &inst.q, false),
            size,
            inst.describe()
        );
        let opt = attempt!(
            mtp_upper_bruteforce_budget(&inst.g, &inst.budget, &inst.q, &OracleConfig::default()),
            size,
            inst.describe()
        )
        .value
        .value();
        let (lower, upper) = result.interval.expect("self-join-free queries carry bounds");
        let closed = trace.p_closed.value();
        let share = (1.0 - 1.0 / std::f64::consts::E) * (opt - closed);
        let gains_shrink = trace.picks.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
        let ok = lower <= opt + 1e-9
            && opt <= upper + 1e-9
            && lower - closed >= share - 1e-9
            && gains_shrink;
        check(ok, (share - (lower - closed)).max(0.0), size, || {
            format!(
                "{}; greedy {lower} upper {upper} closed {closed} opt {opt}",
                inst.describe()
            )
        })
    })
}

/// Fractional completions do not beat `{0, λ}` ones beyond the slack.
pub fn vertex_attainment_suite(seed: u64, trials: usize) -> SuiteOutcome {
    let (cfg, filter) = self_join_free_cfg();
    drive("vertex_attainment", seed, trials, |rng| {
        let inst = random_mtp_instance(rng, &cfg, filter, 6, 3);
        let rel = inst.constraint.relation.clone();
        let n = inst.g.schema().herbrand_size(&rel).expect("declared") as f64;
        let open = inst.g.open_tuples(&rel).ok()?.len();
        // Leave a fractional remainder of λ in the room.
        let units = rng.gen_range(0..open) as f64 + rng.gen_range(0.05..0.95);
        let mean = (inst.g.db.mass(&rel) + units * inst.g.lambda) / n;
        let c = MtpConstraint::new(rel, mean.min(1.0)).ok()?;
        let size = inst.size();
        let report = attempt!(
            vertex_attainment(&inst.g, &c, &inst.q, &EngineConfig::default()),
            size,
            inst.describe()
        );
        let excess = (report.best_grid - report.best_vertex - report.slack).max(0.0);
        check(report.passed, excess, size, || format!("{}; {report}", inst.describe()))
    })
}

/// Random 3DM instances with three nodes per side satisfy the matching
/// claims.
pub fn three_dm(seed: u64, trials: usize) -> SuiteOutcome {
    drive("three_dm", seed, trials, |rng| {
        let edges = rng.gen_range(5..=7);
        let inst = ThreeDmInstance::random(rng, 3, edges);
        let size = inst.edges.len();
        let report = attempt!(verify_maxmatch(&inst, &OracleConfig::default()), size, inst.to_string());
        check(report.passed, 0.0, size, || format!("{inst}{report}"))
    })
}
