//! Text file formats: database directories, constraint files and 3DM instances.
//!
//! A database directory holds `schema.txt` (`PRED/arity` per line),
//! `domain.txt` (one constant per line), an optional `<PRED>.csv` per
//! predicate with rows `c1,...,ck,p`, and an optional `constraints.txt`
//! with one `lambda=<float>` line and any number of `mtp <PRED> <mean>` lines.
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::fs;
use std::path::{Path, PathBuf};

use crate::db::{Database, GroundAtom, Schema};
use crate::error::{Error, Result};
use crate::open_world::MtpConstraint;
use crate::oracle::matching::ThreeDmInstance;

/// Parsed `constraints.txt`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Constraints {
    pub lambda: Option<f64>,
    pub mtp: Vec<MtpConstraint>,
}

/// Everything read from a database directory.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub db: Database,
    pub constraints: Constraints,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Attach a location to errors raised by lower layers.
fn located(path: &Path, line: usize, e: Error) -> Error {
    match e {
        e @ (Error::Format { .. } | Error::Io { .. }) => e,
        other => format_err(path, line, other.to_string()),
    }
}

pub fn parse_schema(text: &str, path: &Path) -> Result<Vec<(String, usize)>> {
    let mut preds = Vec::new();
    for (n, l) in lines(text) {
        let (name, arity) = l
            .split_once('/')
            .ok_or_else(|| format_err(path, n, format!("expected PRED/arity, found `{l}`")))?;
        let arity: usize = arity
            .trim()
            .parse()
            .map_err(|_| format_err(path, n, format!("bad arity `{}`", arity.trim())))?;
        preds.push((name.trim().to_string(), arity));
    }
    Ok(preds)
}

pub fn parse_domain(text: &str) -> Vec<String> {
    lines(text).map(|(_, l)| l.to_string()).collect()
}

pub fn parse_relation(text: &str, path: &Path, pred: &str, db: &mut Database) -> Result<()> {
    for (n, l) in lines(text) {
        let fields: Vec<&str> = l.split(',').map(str::trim).collect();
        let (p, args) = fields.split_last().expect("split yields at least one field");
        let p: f64 = p
            .parse()
            .map_err(|_| format_err(path, n, format!("bad probability `{p}`")))?;
        if db.contains(&GroundAtom::new(pred, args.iter().copied())) {
            return Err(format_err(path, n, "duplicate tuple"));
        }
        db.insert(GroundAtom::new(pred, args.iter().copied()), p)
            .map_err(|e| located(path, n, e))?;
    }
    Ok(())
}

pub fn parse_constraints(text: &str, path: &Path) -> Result<Constraints> {
    let mut out = Constraints::default();
    for (n, l) in lines(text) {
        if let Some(v) = l.strip_prefix("lambda") {
            let v = v
                .trim_start()
                .strip_prefix('=')
                .ok_or_else(|| format_err(path, n, "expected lambda=<float>"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| format_err(path, n, format!("bad lambda `{}`", v.trim())))?;
            if out.lambda.replace(v).is_some() {
                return Err(format_err(path, n, "lambda given twice"));
            }
        } else if let Some(rest) = l.strip_prefix("mtp ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [rel, mean] = parts[..] else {
                return Err(format_err(path, n, "expected `mtp PRED mean`"));
            };
            let mean: f64 = mean
                .parse()
                .map_err(|_| format_err(path, n, format!("bad mean `{mean}`")))?;
            out.mtp
                .push(MtpConstraint::new(rel, mean).map_err(|e| located(path, n, e))?);
        } else {
            return Err(format_err(path, n, format!("unrecognized line `{l}`")));
        }
    }
    if out.lambda.is_none() {
        return Err(format_err(path, 0, "missing lambda=<float>"));
    }
    Ok(out)
}

/// Load a database directory.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<Loaded> {
    let dir = dir.as_ref();
    let schema_path = dir.join("schema.txt");
    let preds = parse_schema(&read(&schema_path)?, &schema_path)?;
    let domain = parse_domain(&read(&dir.join("domain.txt"))?);
    let schema = Schema::new(preds.clone(), domain).map_err(|e| located(&schema_path, 0, e))?;
    let mut db = Database::new(schema);
    for (pred, _) in &preds {
        let path = dir.join(format!("{pred}.csv"));
        if path.exists() {
            parse_relation(&read(&path)?, &path, pred, &mut db)?;
        }
    }
    let cpath = dir.join("constraints.txt");
    let constraints = if cpath.exists() {
        let c = parse_constraints(&read(&cpath)?, &cpath)?;
        for m in &c.mtp {
            if db.schema().arity(&m.relation).is_none() {
                return Err(format_err(&cpath, 0, format!("unknown predicate `{}`", m.relation)));
            }
        }
        c
    } else {
        Constraints::default()
    };
    Ok(Loaded { db, constraints })
}

pub fn parse_3dm(text: &str, path: &Path) -> Result<ThreeDmInstance> {
    let (mut xs, mut ys, mut zs) = (None, None, None);
    let mut edges = Vec::new();
    let mut k = None;
    for (n, l) in lines(text) {
        let (tag, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let nodes = || rest.split_whitespace().map(String::from).collect::<Vec<_>>();
        let slot = match tag {
            "X" => &mut xs,
            "Y" => &mut ys,
            "Z" => &mut zs,
            "E" => {
                let t: Vec<&str> = rest.split(',').map(str::trim).collect();
                let [x, y, z] = t[..] else {
                    return Err(format_err(path, n, "expected `E x,y,z`"));
                };
                edges.push((x.to_string(), y.to_string(), z.to_string()));
                continue;
            }
            "k" => {
                let v = rest
                    .trim()
                    .parse()
                    .map_err(|_| format_err(path, n, format!("bad k `{}`", rest.trim())))?;
                if k.replace(v).is_some() {
                    return Err(format_err(path, n, "k given twice"));
                }
                continue;
            }
            _ => return Err(format_err(path, n, format!("unrecognized line `{l}`"))),
        };
        if slot.replace(nodes()).is_some() {
            return Err(format_err(path, n, format!("{tag} given twice")));
        }
    }
    let missing = |what: &str| format_err(path, 0, format!("missing {what} line"));
    ThreeDmInstance::new(
        xs.ok_or_else(|| missing("X"))?,
        ys.ok_or_else(|| missing("Y"))?,
        zs.ok_or_else(|| missing("Z"))?,
        edges,
        k.ok_or_else(|| missing("k"))?,
    )
    .map_err(|e| located(path, 0, e))
}

pub fn load_3dm(path: impl AsRef<Path>) -> Result<ThreeDmInstance> {
    let path = path.as_ref();
    parse_3dm(&read(path)?, path)
}

/// Write a database in directory form; the inverse of [`load_dir`].
pub fn write_dir(dir: impl AsRef<Path>, db: &Database, constraints: &Constraints) -> Result<()> {
    let dir = dir.as_ref();
    let io = |path: PathBuf| move |source| Error::Io { path, source };
    fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let write = |name: String, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(path))
    };
    let schema = db.schema();
    let mut s = String::new();
    for (p, a) in schema.predicates() {
        s.push_str(&format!("{p}/{a}\n"));
    }
    write("schema.txt".into(), s)?;
    write("domain.txt".into(), schema.domain().iter().map(|c| format!("{c}\n")).collect())?;
    for (p, _) in schema.predicates() {
        let rows: String = db
            .tuples(p)
            .iter()
            .map(|(a, pr)| format!("{},{pr}\n", a.args.join(",")))
            .collect();
        write(format!("{p}.csv"), rows)?;
    }
    if let Some(l) = constraints.lambda {
        let mut c = format!("lambda={l}\n");
        for m in &constraints.mtp {
            c.push_str(&format!("mtp {} {}\n", m.relation, m.mean_bound));
        }
        write("constraints.txt".into(), c)?;
    }
    Ok(())
}
