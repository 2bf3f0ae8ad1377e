//! 3-dimensional matching instances and the M₀ construction that encodes
//! them as MTP-constrained query maximization.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{enumerate_completions, OracleConfig};
use crate::db::{Database, GroundAtom, Schema};
use crate::error::{Error, Result};
use crate::greedy::set_query_prob;
use crate::open_world::{budget_from_mtp, MtpConstraint, OpenPdb, TIE_TOLERANCE};
use crate::query::{parse_ucq, Ucq};

/// The six-disjunct query whose MTP maximization encodes 3DM.
pub const M0: &str =
    "R(x,y,z), U(x) | R(x,y,z), V(y) | R(x,y,z), W(z) | U(x), V(y) | U(x), W(z) | V(y), W(z)";

/// Default probability of the node relations and of added tuples.
pub const DEFAULT_WEIGHT: f64 = 0.8;

pub type Triple = (String, String, String);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeDmInstance {
    pub x_nodes: Vec<String>,
    pub y_nodes: Vec<String>,
    pub z_nodes: Vec<String>,
    pub edges: Vec<Triple>,
    pub k: usize,
}

impl ThreeDmInstance {
    pub fn new(
        x_nodes: Vec<String>,
        y_nodes: Vec<String>,
        z_nodes: Vec<String>,
        mut edges: Vec<Triple>,
        k: usize,
    ) -> Result<ThreeDmInstance> {
        let mut all = BTreeSet::new();
        for n in x_nodes.iter().chain(&y_nodes).chain(&z_nodes) {
            if !all.insert(n.as_str()) {
                return Err(Error::Invalid(format!("node `{n}` appears twice")));
            }
        }
        for (x, y, z) in &edges {
            if !(x_nodes.contains(x) && y_nodes.contains(y) && z_nodes.contains(z)) {
                return Err(Error::Invalid(format!("edge ({x}, {y}, {z}) is not in X × Y × Z")));
            }
        }
        edges.sort();
        edges.dedup();
        if k > edges.len() {
            return Err(Error::Invalid(format!(
                "k = {k} exceeds the {} hyperedges",
                edges.len()
            )));
        }
        Ok(ThreeDmInstance {
            x_nodes,
            y_nodes,
            z_nodes,
            edges,
            k,
        })
    }

    /// `n` nodes per side named `X0, Y0, Z0, ...`, `m` distinct random
    /// edges and `k` drawn from `1..=n`.
    pub fn random(rng: &mut impl Rng, n: usize, m: usize) -> ThreeDmInstance {
        let side = |p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let (xs, ys, zs) = (side("X"), side("Y"), side("Z"));
        let mut all: Vec<Triple> = Vec::with_capacity(n * n * n);
        for x in &xs {
            for y in &ys {
                for z in &zs {
                    all.push((x.clone(), y.clone(), z.clone()));
                }
            }
        }
        all.shuffle(rng);
        all.truncate(m.min(all.len()));
        let k = rng.gen_range(1..=n).min(all.len());
        ThreeDmInstance::new(xs, ys, zs, all, k).expect("generated instance is valid")
    }

    pub fn is_matching(edges: &[Triple]) -> bool {
        let mut seen = BTreeSet::new();
        edges
            .iter()
            .all(|(x, y, z)| seen.insert(("x", x)) && seen.insert(("y", y)) && seen.insert(("z", z)))
    }

    /// Size of a largest matching, by exhaustive search.
    pub fn max_matching(&self) -> usize {
        fn go(edges: &[Triple], used: &mut Vec<Triple>) -> usize {
            let Some((first, rest)) = edges.split_first() else {
                return used.len();
            };
            let skip = go(rest, used);
            used.push(first.clone());
            let take = if ThreeDmInstance::is_matching(used) {
                go(rest, used)
            } else {
                0
            };
            used.pop();
            skip.max(take)
        }
        go(&self.edges, &mut Vec::new())
    }

    fn domain(&self) -> Vec<String> {
        self.x_nodes
            .iter()
            .chain(&self.y_nodes)
            .chain(&self.z_nodes)
            .cloned()
            .collect()
    }
}

impl fmt::Display for ThreeDmInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "X {}", self.x_nodes.join(" "))?;
        writeln!(f, "Y {}", self.y_nodes.join(" "))?;
        writeln!(f, "Z {}", self.z_nodes.join(" "))?;
        for (x, y, z) in &self.edges {
            writeln!(f, "E {x},{y},{z}")?;
        }
        writeln!(f, "k {}", self.k)
    }
}

fn r_atom((x, y, z): &Triple) -> GroundAtom {
    GroundAtom::new("R", [x.clone(), y.clone(), z.clone()])
}

/// Node relations at `w` on their node sets, `R` known false off the
/// hyperedges and open on them, λ = `w`, and an MTP bound on `R` that
/// admits exactly `k` added tuples.
pub fn build_m0_instance(inst: &ThreeDmInstance, w: f64) -> Result<(OpenPdb, MtpConstraint, Ucq)> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidProbability {
            value: w,
            context: "3DM weight".into(),
        });
    }
    let domain = inst.domain();
    let schema = Schema::new([("R", 3), ("U", 1), ("V", 1), ("W", 1)], domain)?;
    let mut db = Database::new(schema);
    for (pred, nodes) in [("U", &inst.x_nodes), ("V", &inst.y_nodes), ("W", &inst.z_nodes)] {
        for n in nodes {
            db.insert(GroundAtom::new(pred, [n.clone()]), w)?;
        }
    }
    let edges: BTreeSet<GroundAtom> = inst.edges.iter().map(r_atom).collect();
    let herbrand: Vec<GroundAtom> = db.schema().herbrand_atoms("R").collect();
    for atom in herbrand {
        if !edges.contains(&atom) {
            db.insert(atom, 0.0)?;
        }
    }
    let n = db.schema().herbrand_size("R").expect("R declared") as f64;
    let mean = ((inst.k as f64 + 0.5) * w / n).min(1.0);
    let c = MtpConstraint::new("R", mean)?;
    let q = parse_ucq(M0, db.schema())?;
    Ok((OpenPdb::new(db, w)?, c, q))
}

/// Outcome of checking the matching claims on one instance.
#[derive(Clone, Debug)]
pub struct MaxMatchReport {
    pub k: usize,
    pub budget: usize,
    pub max_matching: usize,
    pub optimum: f64,
    /// Value of a completion formed by a size-`k` matching, when one fits.
    pub matching_value: Option<f64>,
    pub maximizers: usize,
    pub maximizers_are_matchings: bool,
    /// Values of the fresh-node and reused-node completions.
    pub ordercomp: Option<(f64, f64)>,
    pub passed: bool,
}

impl fmt::Display for MaxMatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "k = {}, budget = {}, max matching = {}", self.k, self.budget, self.max_matching)?;
        writeln!(f, "optimum = {:.12}", self.optimum)?;
        match self.matching_value {
            Some(v) => writeln!(f, "size-k matching value = {v:.12}")?,
            None => writeln!(f, "size-k matching value = n/a")?,
        }
        writeln!(
            f,
            "maximizers = {}, all matchings of size k = {}",
            self.maximizers, self.maximizers_are_matchings
        )?;
        if let Some((p1, p2)) = self.ordercomp {
            writeln!(f, "ordercomp: fresh = {p1:.12}, reused = {p2:.12}")?;
        }
        writeln!(f, "result: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

/// Checks that optimal completions are exactly the size-`k` matchings when
/// one exists, that the optimum drops below the matching value otherwise,
/// and that swapping in a triple on fresh nodes beats reusing a node.
pub fn verify_maxmatch(inst: &ThreeDmInstance, config: &OracleConfig) -> Result<MaxMatchReport> {
    let (g, c, q) = build_m0_instance(inst, DEFAULT_WEIGHT)?;
    let budget = budget_from_mtp(&g, &c)?;
    let mut visited: Vec<(Vec<Triple>, f64)> = Vec::new();
    enumerate_completions(&g, &budget, &q, config, |added, value| {
        let triples = added
            .iter()
            .map(|a| (a.args[0].clone(), a.args[1].clone(), a.args[2].clone()))
            .collect();
        visited.push((triples, value.value()));
    })?;
    let optimum = visited.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<&Vec<Triple>> = visited
        .iter()
        .filter(|v| v.1 >= optimum - TIE_TOLERANCE)
        .map(|v| &v.0)
        .collect();
    let is_k_matching = |m: &Vec<Triple>| m.len() == inst.k && ThreeDmInstance::is_matching(m);
    let maximizers_are_matchings = maximizers.iter().all(|m| is_k_matching(m));
    let max_matching = inst.max_matching();
    let fits = inst.k <= inst.x_nodes.len().min(inst.y_nodes.len()).min(inst.z_nodes.len());
    let matching_value = if fits {
        let diagonal: Vec<Triple> = (0..inst.k)
            .map(|i| (inst.x_nodes[i].clone(), inst.y_nodes[i].clone(), inst.z_nodes[i].clone()))
            .collect();
        Some(completion_value(inst, &diagonal)?)
    } else {
        None
    };
    let mut passed = budget.max_added == inst.k;
    if max_matching >= inst.k {
        passed &= maximizers_are_matchings;
    } else {
        passed &= !maximizers.iter().any(|m| is_k_matching(m));
        if let Some(v) = matching_value {
            passed &= optimum < v - TIE_TOLERANCE;
        }
    }
    let ordercomp = ordercomp_values(inst)?;
    if let Some((p1, p2)) = ordercomp {
        passed &= p1 > p2;
    }
    Ok(MaxMatchReport {
        k: inst.k,
        budget: budget.max_added,
        max_matching,
        optimum,
        matching_value,
        maximizers: maximizers.len(),
        maximizers_are_matchings,
        ordercomp,
        passed,
    })
}

/// Probability of M₀ on the instance's node sets with `triples` added.
fn completion_value(inst: &ThreeDmInstance, triples: &[Triple]) -> Result<f64> {
    let synthetic = ThreeDmInstance::new(
        inst.x_nodes.clone(),
        inst.y_nodes.clone(),
        inst.z_nodes.clone(),
        triples.to_vec(),
        0,
    )?;
    let (g, _, q) = build_m0_instance(&synthetic, DEFAULT_WEIGHT)?;
    let added: Vec<GroundAtom> = triples.iter().map(r_atom).collect();
    Ok(set_query_prob(&g, &q, &added)?.value())
}

/// Compares `{(x1,y1,z1), (x0,y0,z0)}` against `{(x1,y1,z1), (x1,y0,z0)}`.
fn ordercomp_values(inst: &ThreeDmInstance) -> Result<Option<(f64, f64)>> {
    let (xs, ys, zs) = (&inst.x_nodes, &inst.y_nodes, &inst.z_nodes);
    if xs.len() < 2 || ys.len() < 2 || zs.len() < 2 {
        return Ok(None);
    }
    let p0 = (xs[1].clone(), ys[1].clone(), zs[1].clone());
    let fresh = (xs[0].clone(), ys[0].clone(), zs[0].clone());
    let reused = (xs[1].clone(), ys[0].clone(), zs[0].clone());
    let p1 = completion_value(inst, &[p0.clone(), fresh])?;
    let p2 = completion_value(inst, &[p0, reused])?;
    Ok(Some((p1, p2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::prob_ground;
    use crate::engine::EngineConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn names(p: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{p}{i}")).collect()
    }

    fn triple(x: &str, y: &str, z: &str) -> Triple {
        (x.into(), y.into(), z.into())
    }

    #[test]
    fn single_triple() {
        let inst = ThreeDmInstance::new(
            names("X", 1),
            names("Y", 1),
            names("Z", 1),
            vec![triple("X1", "Y1", "Z1")],
            1,
        )
        .unwrap();
        let (g, c, q) = build_m0_instance(&inst, 0.8).unwrap();
        assert_eq!(budget_from_mtp(&g, &c).unwrap().max_added, 1);
        let report = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
        // M₀ fails iff at most one of U, V, W holds and, if one does, R is absent.
        let none = 0.2f64.powi(3);
        let one_without_r = 3.0 * 0.8 * 0.04 * 0.2;
        assert!((report.optimum - (1.0 - none - one_without_r)).abs() < 1e-12);
        assert!((report.optimum - 0.9728).abs() < 1e-12);
        let added = g.with_added(&[GroundAtom::new("R", ["X1", "Y1", "Z1"])]);
        let ground = prob_ground(&q, &added, &EngineConfig::default()).unwrap();
        assert!((ground - 0.9728).abs() < 1e-12);
        assert!(report.passed, "{report}");
    }

    #[test]
    fn zero_k_is_closed_world() {
        let inst = ThreeDmInstance::new(
            names("X", 1),
            names("Y", 1),
            names("Z", 1),
            vec![triple("X1", "Y1", "Z1")],
            0,
        )
        .unwrap();
        let (g, _, q) = build_m0_instance(&inst, 0.8).unwrap();
        let report = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
        let closed = set_query_prob(&g, &q, &[]).unwrap().value();
        assert_eq!(report.budget, 0);
        assert!((report.optimum - closed).abs() < 1e-15);
        // Without R only the pairwise disjuncts remain.
        let expect = 1.0 - 0.2f64.powi(3) - 3.0 * 0.8 * 0.04;
        assert!((closed - expect).abs() < 1e-12);
    }

    #[test]
    fn two_disjoint_edges_both_picked() {
        let inst = ThreeDmInstance::new(
            names("X", 2),
            names("Y", 2),
            names("Z", 2),
            vec![triple("X1", "Y1", "Z1"), triple("X2", "Y2", "Z2")],
            2,
        )
        .unwrap();
        let report = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
        assert_eq!(report.maximizers, 1);
        let single = completion_value(&inst, &[triple("X1", "Y1", "Z1")]).unwrap();
        assert!(report.optimum > single);
        assert!(report.passed, "{report}");
        let (p1, p2) = report.ordercomp.unwrap();
        assert!(p1 > p2);
    }

    #[test]
    fn missing_matching_lowers_optimum() {
        // Every edge shares X1, so the largest matching has size 1.
        let inst = ThreeDmInstance::new(
            names("X", 2),
            names("Y", 2),
            names("Z", 2),
            vec![triple("X1", "Y1", "Z1"), triple("X1", "Y2", "Z2")],
            2,
        )
        .unwrap();
        assert_eq!(inst.max_matching(), 1);
        let report = verify_maxmatch(&inst, &OracleConfig::default()).unwrap();
        assert!(report.optimum < report.matching_value.unwrap());
        assert!(report.passed, "{report}");
    }

    #[test]
    fn invalid_instances() {
        let bad_edge = ThreeDmInstance::new(
            names("X", 1),
            names("Y", 1),
            names("Z", 1),
            vec![triple("X1", "Z1", "Y1")],
            1,
        );
        assert!(bad_edge.is_err());
        let shared = ThreeDmInstance::new(names("A", 1), names("A", 1), names("Z", 1), vec![], 0);
        assert!(shared.is_err());
        let big_k = ThreeDmInstance::new(names("X", 1), names("Y", 1), names("Z", 1), vec![], 1);
        assert!(big_k.is_err());
    }

    #[test]
    fn random_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let inst = ThreeDmInstance::random(&mut rng, 3, 7);
            assert_eq!(inst.edges.len(), 7);
            assert!((1..=3).contains(&inst.k));
        }
    }
}
