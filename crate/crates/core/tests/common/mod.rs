#![allow(dead_code)]

use std::path::PathBuf;

use openpdb::io::load_dir;
use openpdb::open_world::OpenPdb;
use openpdb::Ucq;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

/// The co-authorship database with its λ, and Q1.
pub fn coauthors() -> (OpenPdb, Ucq) {
    let loaded = load_dir(data("coauthors")).unwrap();
    let lambda = loaded.constraints.lambda.unwrap();
    let g = OpenPdb::new(loaded.db, lambda).unwrap();
    let q = openpdb::parse_ucq("S(x), CoA(x,y)", g.schema()).unwrap();
    (g, q)
}

pub const PEOPLE: [&str; 4] = ["Einstein", "Erdos", "VonNeumann", "Shakespeare"];
pub const S: [f64; 4] = [0.8, 0.8, 0.9, 0.2];

/// Q1 on the co-authorship database where `coa(x, y)` gives each co-author probability:
/// persons are independent, so P = 1 - Π_x (1 - S(x) (1 - Π_y (1 - CoA(x,y)))).
pub fn q1_by_persons(coa: impl Fn(usize, usize) -> f64) -> f64 {
    1.0 - (0..4)
        .map(|x| {
            let none = (0..4).map(|y| 1.0 - coa(x, y)).product::<f64>();
            1.0 - S[x] * (1.0 - none)
        })
        .product::<f64>()
}

/// Stored co-authorships by index.
pub fn stored_coa(x: usize, y: usize) -> Option<f64> {
    match (x, y) {
        (0, 1) => Some(0.8),
        (1, 2) => Some(0.9),
        (2, 0) => Some(0.5),
        _ => None,
    }
}
