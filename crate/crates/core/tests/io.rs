mod common;

use std::fs;

use common::{data, coauthors};
use openpdb::io::{load_dir, write_dir, Constraints};
use openpdb::open_world::MtpConstraint;
use openpdb::Error;

#[test]
fn coauthors_directory_loads() {
    let loaded = load_dir(data("coauthors")).unwrap();
    assert_eq!(loaded.db.schema().domain().len(), 4);
    assert_eq!(loaded.db.len("S"), 4);
    assert_eq!(loaded.db.len("CoA"), 3);
    assert_eq!(loaded.constraints.lambda, Some(0.5));
    assert_eq!(loaded.constraints.mtp, vec![MtpConstraint::new("CoA", 0.25).unwrap()]);
}

#[test]
fn write_then_load_roundtrips() {
    let (g, _) = coauthors();
    let dir = tempfile::tempdir().unwrap();
    let c = Constraints {
        lambda: Some(0.3),
        mtp: vec![MtpConstraint::new("S", 0.9).unwrap()],
    };
    write_dir(dir.path(), &g.db, &c).unwrap();
    let back = load_dir(dir.path()).unwrap();
    assert_eq!(back.db.all_tuples(), g.db.all_tuples());
    assert_eq!(back.db.schema().domain(), g.db.schema().domain());
    assert_eq!(back.constraints, c);
}

#[test]
fn errors_carry_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("schema.txt"), "R/1\n").unwrap();
    fs::write(p.join("domain.txt"), "a\nb\n").unwrap();
    fs::write(p.join("R.csv"), "a,0.5\n\nb,2\n").unwrap();
    match load_dir(p).unwrap_err() {
        Error::Format { path, line, .. } => {
            assert!(path.ends_with("R.csv"));
            assert_eq!(line, 3);
        }
        e => panic!("unexpected {e}"),
    }
    fs::write(p.join("R.csv"), "a,0.5\n").unwrap();
    fs::write(p.join("constraints.txt"), "lambda=0.5\nmtp Q 0.1\n").unwrap();
    assert!(matches!(load_dir(p), Err(Error::Format { .. })));
    assert!(matches!(load_dir(p.join("missing")), Err(Error::Io { .. })));
}
