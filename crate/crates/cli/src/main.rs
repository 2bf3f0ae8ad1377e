use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use openpdb::engine::{prob_ground, EngineConfig, Lifted, DEFAULT_WORLD_CAP};
use openpdb::exact_dp::{mtp_upper_exact_budget, DpConfig};
use openpdb::greedy::greedy_upper_budget;
use openpdb::io::{load_3dm, load_dir};
use openpdb::open_world::{
    budget_from_constraints, interval_unconstrained, BoundResult, Budget, MtpConstraint,
    MtpDenominator, OpenPdb,
};
use openpdb::oracle::matching::{verify_maxmatch, ThreeDmInstance};
use openpdb::oracle::suites::property_suites;
use openpdb::oracle::{mtp_upper_bruteforce_budget, OracleConfig};
use openpdb::query::QueryProfile;
use openpdb::{parse_ucq, Database, Error, Prob, Ucq};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Analyze,
    Eval,
    Interval,
    Exact,
    Greedy,
    Oracle,
    Demo3dm,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Denominator {
    Herbrand,
    Support,
}

/// Query probabilities and MTP-constrained open-world bounds.
#[derive(Parser, Debug)]
#[command(name = "openpdb", version)]
struct Args {
    /// Directory with `schema.txt`, `domain.txt`, `<PRED>.csv` and `constraints.txt`.
    #[arg(long)]
    db: Option<PathBuf>,
    #[arg(long, conflicts_with = "query_file")]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Probability of added tuples; overrides constraints.txt.
    #[arg(long)]
    lambda: Option<f64>,
    /// MTP constraint `REL=MEAN`; replaces the constraints file's list.
    #[arg(long, value_parser = parse_mtp)]
    mtp: Vec<MtpConstraint>,
    /// Use this budget instead of the one derived from the MTP bound.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Most uncertain tuples the world enumerator accepts.
    #[arg(long, default_value_t = DEFAULT_WORLD_CAP)]
    cap_worlds: usize,
    /// Most completions the oracle and the DP fallback may enumerate.
    #[arg(long, default_value_t = 200_000)]
    cap_subsets: u128,
    /// Run greedy on queries with self-joins (no guarantee).
    #[arg(long)]
    force: bool,
    /// Complete every relation other than the constrained one at λ.
    #[arg(long)]
    complete_others: bool,
    #[arg(long, value_enum, default_value = "herbrand")]
    mtp_denominator: Denominator,
    /// 3DM instance file for demo3dm; a random instance otherwise.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Instances per suite for verify.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long)]
    timings: bool,
}

fn parse_mtp(s: &str) -> Result<MtpConstraint, String> {
    let (rel, mean) = s.split_once('=').ok_or("expected REL=MEAN")?;
    let mean: f64 = mean.trim().parse().map_err(|_| format!("bad mean `{mean}`"))?;
    MtpConstraint::new(rel.trim(), mean).map_err(|e| e.to_string())
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnsafeQuery(_) | Error::NotInversionFree(_) => 2,
            Error::ResourceLimit { .. } => 3,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

/// What a mode reports.
struct Report {
    query: Option<String>,
    lambda: Option<f64>,
    mtp: Vec<MtpConstraint>,
    budget: Value,
    result: Value,
    text: Vec<String>,
    notices: Vec<String>,
    ok: bool,
}

impl Report {
    fn new(result: Value) -> Report {
        Report {
            query: None,
            lambda: None,
            mtp: Vec::new(),
            budget: Value::Null,
            result,
            text: Vec::new(),
            notices: Vec::new(),
            ok: true,
        }
    }
}

fn result_json(kind: &str, value: Option<Prob>, lower: Option<f64>, upper: Option<f64>, witness: Vec<String>) -> Value {
    json!({
        "kind": kind,
        "value": value.map(Prob::value),
        "log10_complement": value.map(Prob::log10_complement),
        "lower": lower,
        "upper": upper,
        "witness": witness,
    })
}

fn bound_json(r: &BoundResult) -> Value {
    let kind = serde_json::to_value(r.kind).expect("kind serializes");
    let witness = r
        .witness
        .iter()
        .flat_map(|w| w.added.iter().map(|a| a.to_string()))
        .collect();
    let mut v = result_json("", Some(r.value), r.lower(), r.upper(), witness);
    v["kind"] = kind;
    v
}

fn show(p: Prob) -> String {
    if p.value() > 0.999 {
        format!("{:.12} (1 - 10^{:.3})", p.value(), p.log10_complement())
    } else {
        format!("{:.12}", p.value())
    }
}

struct Ctx {
    db: Database,
    file_lambda: Option<f64>,
    file_mtp: Vec<MtpConstraint>,
    q: Ucq,
    query_text: String,
}

fn load(args: &Args) -> Result<Ctx, Failure> {
    let dir = args.db.as_ref().ok_or_else(|| invalid("--db is required for this mode"))?;
    let loaded = load_dir(dir)?;
    let text = match (&args.query, &args.query_file) {
        (Some(q), _) => q.clone(),
        (None, Some(f)) => std::fs::read_to_string(f).map_err(|e| invalid(format!("{}: {e}", f.display())))?,
        (None, None) => return Err(invalid("--query or --query-file is required")),
    };
    let q = parse_ucq(text.trim(), loaded.db.schema())?;
    Ok(Ctx {
        db: loaded.db,
        file_lambda: loaded.constraints.lambda,
        file_mtp: loaded.constraints.mtp,
        query_text: q.to_string(),
        q,
    })
}

fn engine_config(args: &Args) -> EngineConfig {
    EngineConfig {
        world_cap: args.cap_worlds,
        ..EngineConfig::default()
    }
}

fn run_closed(args: &Args, ctx: Ctx) -> Result<Report, Failure> {
    let mut notices = Vec::new();
    let mut report = match args.mode {
        Mode::Analyze => {
            let p = QueryProfile::of(&ctx.q);
            let mut r = Report::new(json!({
                "kind": "profile",
                "value": null,
                "log10_complement": null,
                "lower": null,
                "upper": null,
                "witness": [],
                "profile": serde_json::to_value(&p).expect("profile serializes"),
            }));
            r.text = vec![
                format!("hierarchical per disjunct: {:?}", p.hierarchical_per_cq),
                format!("inversion-free: {}", p.inversion_free),
                format!("self-join-free: {}", p.self_join_free),
                format!("safe: {}", p.safe),
            ];
            r
        }
        _ => {
            let value = match Lifted::new(&ctx.db).eval(&ctx.q) {
                Ok(p) => p,
                Err(Error::UnsafeQuery(_)) => {
                    notices.push("query is unsafe; falling back to world enumeration".into());
                    Prob::new(prob_ground(&ctx.q, &ctx.db, &engine_config(args))?)
                }
                Err(e) => return Err(e.into()),
            };
            let mut r = Report::new(result_json("closed", Some(value), Some(value.value()), Some(value.value()), vec![]));
            r.text = vec![format!("P = {}", show(value))];
            r
        }
    };
    report.query = Some(ctx.query_text);
    report.lambda = args.lambda.or(ctx.file_lambda);
    report.notices = notices;
    Ok(report)
}

fn run_open(args: &Args, ctx: Ctx) -> Result<Report, Failure> {
    let lambda = args
        .lambda
        .or(ctx.file_lambda)
        .ok_or_else(|| invalid("λ is required: pass --lambda or set lambda= in constraints.txt"))?;
    let g = OpenPdb::new(ctx.db, lambda)?;
    let mut out = if args.mode == Mode::Interval {
        let r = interval_unconstrained(&g, &ctx.q)?;
        let mut out = Report::new(bound_json(&r));
        let (lo, _) = r.interval.expect("interval is set");
        out.text = vec![format!("closed world  = {lo:.12}"), format!("open upper    = {}", show(r.value))];
        out
    } else {
        bounded(args, &g, &ctx.q, if args.mtp.is_empty() { ctx.file_mtp } else { args.mtp.clone() })?
    };
    out.query = Some(ctx.query_text);
    out.lambda = Some(lambda);
    Ok(out)
}

fn bounded(args: &Args, g: &OpenPdb, q: &Ucq, mtp: Vec<MtpConstraint>) -> Result<Report, Failure> {
    if mtp.is_empty() {
        return Err(invalid("an MTP constraint is required: pass --mtp REL=MEAN or add `mtp` to constraints.txt"));
    }
    let denominator = match args.mtp_denominator {
        Denominator::Herbrand => MtpDenominator::Herbrand,
        Denominator::Support => MtpDenominator::Support,
    };
    let derived = budget_from_constraints(g, &mtp, denominator)?;
    let mut notices = Vec::new();
    if derived.infeasible {
        notices.push(format!(
            "the known mass of {} already violates the MTP bound; no tuples may be added",
            derived.relation
        ));
    }
    let used = Budget::new(derived.relation.clone(), args.budget.unwrap_or(derived.max_added));
    let completed;
    let g = if args.complete_others {
        completed = g.complete_other_relations(&used.relation)?;
        &completed
    } else {
        g
    };
    let oracle_cfg = OracleConfig {
        subset_cap: args.cap_subsets,
        engine: engine_config(args),
    };
    let (result, extra) = match args.mode {
        Mode::Exact => {
            let cfg = DpConfig {
                subset_cap: args.cap_subsets,
                ..DpConfig::default()
            };
            (mtp_upper_exact_budget(g, &used, q, &cfg)?, None)
        }
        Mode::Greedy => {
            let (r, trace) = greedy_upper_budget(g, &used, q, args.force)?;
            if !trace.guaranteed {
                notices.push("query has self-joins; the greedy value carries no guarantee".into());
            }
            (r, Some(trace))
        }
        Mode::Oracle => (mtp_upper_bruteforce_budget(g, &used, q, &oracle_cfg)?, None),
        _ => unreachable!("bounded modes only"),
    };
    let mut out = Report::new(bound_json(&result));
    out.mtp = mtp;
    out.budget = json!({
        "relation": used.relation,
        "derived": derived.max_added,
        "used": used.max_added,
        "infeasible": derived.infeasible,
    });
    out.text.push(format!(
        "budget on {}: {} (derived {})",
        used.relation, used.max_added, derived.max_added
    ));
    out.text.push(format!("upper bound = {}", show(result.value)));
    if let Some((lo, hi)) = result.interval {
        out.text.push(format!("interval    = [{lo:.12}, {hi:.12}]"));
    }
    if let Some(t) = extra {
        out.result["greedy"] = json!({
            "closed": t.p_closed.value(),
            "picks": t.picks.iter().map(|(a, g)| json!({"atom": a.to_string(), "gain": g})).collect::<Vec<_>>(),
        });
    }
    let witness: Vec<String> = result
        .witness
        .iter()
        .flat_map(|w| w.added.iter().map(|a| a.to_string()))
        .collect();
    out.text.push(format!("witness     = {{{}}}", witness.join(", ")));
    out.notices = notices;
    Ok(out)
}

fn run_demo(args: &Args) -> Result<Report, Failure> {
    let inst = match &args.instance {
        Some(path) => load_3dm(path)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let edges = rng.gen_range(5..=7);
            ThreeDmInstance::random(&mut rng, 3, edges)
        }
    };
    let report = verify_maxmatch(
        &inst,
        &OracleConfig {
            subset_cap: args.cap_subsets,
            engine: engine_config(args),
        },
    )?;
    let mut out = Report::new(json!({
        "kind": "demo3dm",
        "value": report.optimum,
        "log10_complement": null,
        "lower": null,
        "upper": null,
        "witness": [],
        "report": {
            "k": report.k,
            "max_matching": report.max_matching,
            "matching_value": report.matching_value,
            "maximizers": report.maximizers,
            "maximizers_are_matchings": report.maximizers_are_matchings,
            "ordercomp": report.ordercomp,
            "passed": report.passed,
        },
    }));
    out.budget = json!({"relation": "R", "derived": report.budget, "used": report.budget, "infeasible": false});
    out.text = inst.to_string().lines().map(String::from).collect();
    out.text.extend(report.to_string().lines().map(String::from));
    out.ok = report.passed;
    Ok(out)
}

fn run_verify(args: &Args) -> Report {
    let report = property_suites(args.seed, args.trials);
    let suites: Vec<Value> = report
        .outcomes
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "trials": o.trials,
                "passed": o.passed,
                "max_error": o.max_error,
                "counterexample": o.counterexample,
            })
        })
        .collect();
    let mut out = Report::new(json!({
        "kind": "verify",
        "value": null,
        "log10_complement": null,
        "lower": null,
        "upper": null,
        "witness": [],
        "suites": suites,
    }));
    out.text = report.to_string().lines().map(String::from).collect();
    out.ok = report.ok();
    out
}

fn run(args: &Args) -> Result<Report, Failure> {
    if let Some(l) = args.lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(invalid(format!("λ must be in [0, 1], got {l}")));
        }
    }
    match args.mode {
        Mode::Demo3dm => run_demo(args),
        Mode::Verify => Ok(run_verify(args)),
        Mode::Analyze | Mode::Eval => run_closed(args, load(args)?),
        Mode::Interval | Mode::Exact | Mode::Greedy | Mode::Oracle => run_open(args, load(args)?),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let start = Instant::now();
    let report = match run(&args) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            return ExitCode::from(f.code);
        }
    };
    for n in &report.notices {
        eprintln!("note: {n}");
    }
    let mode = Mode::value_variants()
        .iter()
        .find(|m| **m == args.mode)
        .and_then(|m| m.to_possible_value())
        .map(|v| v.get_name().to_string())
        .expect("mode has a name");
    let mut out = String::new();
    match args.output {
        Output::Json => {
            let timings = args
                .timings
                .then(|| json!({"total": start.elapsed().as_secs_f64() * 1e3}));
            let doc = json!({
                "mode": mode,
                "query": report.query,
                "lambda": report.lambda,
                "mtp": report.mtp.iter().map(|c| json!({"relation": c.relation, "mean_bound": c.mean_bound})).collect::<Vec<_>>(),
                "budget": report.budget,
                "result": report.result,
                "timings_ms": timings,
            });
            out.push_str(&serde_json::to_string_pretty(&doc).expect("json serializes"));
            out.push('\n');
        }
        Output::Text => {
            if let Some(q) = &report.query {
                out.push_str(&format!("query: {q}\n"));
            }
            for l in &report.text {
                out.push_str(l);
                out.push('\n');
            }
            if args.timings {
                out.push_str(&format!("time: {:.3} ms\n", start.elapsed().as_secs_f64() * 1e3));
            }
        }
    }
    // A closed pipe (e.g. `| head`) is not an error.
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
