//! Closed-world query probability.
//!
//! [`Lifted`] evaluates a UCQ by recursive decomposition: ground atom lookup,
//! independent conjunction and disjunction, inclusion-exclusion over a CNF
//! rewrite, and separator variables. Queries where no rule applies are
//! rejected with [`Error::UnsafeQuery`]. [`prob_ground`] sums world
//! probabilities directly and serves as the reference for small inputs.

use std::collections::HashMap;

use crate::db::{GroundAtom, Overlay, Schema, TupleSource};
use crate::error::{Error, Result};
use crate::prob::{Prob, CLAMP_SLACK};
use crate::query::rewrite::{
    self, cnf, find_separator, independent_conjunct_groups, independent_disjunct_groups,
    inclusion_exclusion_terms, separator_constants, simplify, substitute_root, Fixed,
};
use crate::query::{ground, Ucq, DEFAULT_GROUND_CAP};

pub const DEFAULT_WORLD_CAP: usize = 24;

const MAX_DEPTH: usize = 256;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Most uncertain tuples [`prob_ground`] will enumerate worlds over.
    pub world_cap: usize,
    /// Most ground conjuncts [`prob_ground`] will build.
    pub ground_cap: u128,
    /// Skip the independent-conjunction rule so that every conjunction goes
    /// through inclusion-exclusion.
    pub force_inclusion_exclusion: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            world_cap: DEFAULT_WORLD_CAP,
            ground_cap: DEFAULT_GROUND_CAP,
            force_inclusion_exclusion: false,
        }
    }
}

/// Lifted probability of `q`.
pub fn prob_lifted(q: &Ucq, src: &dyn TupleSource) -> Result<f64> {
    Ok(Lifted::new(src).eval(q)?.value())
}

/// Lifted probability with `fixed` atoms forced true or false.
pub fn prob_conditioned(
    q: &Ucq,
    src: &dyn TupleSource,
    fixed: &[(GroundAtom, bool)],
) -> Result<f64> {
    let mut overlay = Overlay::new(src);
    for (atom, truth) in fixed {
        overlay.set(atom.clone(), if *truth { 1.0 } else { 0.0 });
    }
    prob_lifted(q, &overlay)
}

/// Whether lifted evaluation succeeds on `q` independently of the data.
pub fn is_safe(q: &Ucq) -> bool {
    let preds: Vec<(String, usize)> = q
        .atoms()
        .map(|a| (a.pred.clone(), a.args.len()))
        .collect::<std::collections::BTreeMap<_, _>>()
        .into_iter()
        .collect();
    let Ok(schema) = Schema::new(preds, vec!["#a".into(), "#b".into()]) else {
        return false;
    };
    struct Uniform(Schema);
    impl TupleSource for Uniform {
        fn schema(&self) -> &Schema {
            &self.0
        }
        fn prob(&self, _: &GroundAtom) -> f64 {
            0.5
        }
    }
    Lifted::new(&Uniform(schema)).eval(q).is_ok()
}

/// One lifted evaluation over a fixed tuple source, with a memo table.
pub struct Lifted<'a> {
    src: &'a dyn TupleSource,
    config: EngineConfig,
    memo: HashMap<String, Prob>,
    depth: usize,
}

impl<'a> Lifted<'a> {
    pub fn new(src: &'a dyn TupleSource) -> Self {
        Self::with_config(src, EngineConfig::default())
    }

    pub fn with_config(src: &'a dyn TupleSource, config: EngineConfig) -> Self {
        Lifted {
            src,
            config,
            memo: HashMap::new(),
            depth: 0,
        }
    }

    pub fn eval(&mut self, q: &Ucq) -> Result<Prob> {
        let src = self.src;
        let q = simplify(q, &|a| match src.prob(a) {
            p if p <= 0.0 => Fixed::False,
            p if p >= 1.0 => Fixed::True,
            _ => Fixed::Unknown,
        });
        if q.is_false() {
            return Ok(Prob::ZERO);
        }
        if q.is_true() {
            return Ok(Prob::ONE);
        }
        let key = rewrite::key(&q);
        if let Some(&p) = self.memo.get(&key) {
            return Ok(p);
        }
        if self.depth >= MAX_DEPTH {
            return Err(Error::UnsafeQuery(q.to_string()));
        }
        self.depth += 1;
        let r = self.eval_simplified(&q);
        self.depth -= 1;
        let p = r?;
        debug_assert!((-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&p.value()));
        self.memo.insert(key, p);
        Ok(p)
    }

    fn eval_simplified(&mut self, q: &Ucq) -> Result<Prob> {
        // Base case: a single ground atom.
        if let [cq] = q.disjuncts() {
            if let [atom] = cq.atoms() {
                if let Some(g) = GroundAtom::from_atom(atom) {
                    return Ok(Prob::new(self.src.prob(&g)));
                }
            }
        }
        // Independent disjunction. Checked before the CNF rewrite since it
        // never changes the result and keeps the rewrite small.
        let groups = independent_disjunct_groups(q);
        if groups.len() > 1 {
            let mut acc = Prob::ZERO;
            for g in &groups {
                acc = acc.or(self.eval(g)?);
            }
            return Ok(acc);
        }
        // Rewrite into a conjunction of UCQs over connected disjuncts.
        if let Some(conj) = cnf(q)? {
            return self.eval_conjunction(conj);
        }
        // Separator variable.
        let cqs: Vec<_> = q.disjuncts().iter().collect();
        if let Some(sep) = find_separator(&cqs) {
            let mut acc = Prob::ZERO;
            for c in separator_constants(self.src.schema().domain(), q) {
                let sub: Vec<_> = q
                    .disjuncts()
                    .iter()
                    .zip(&sep.roots)
                    .filter_map(|(cq, root)| substitute_root(cq, root.as_deref(), &sep, &c))
                    .collect();
                if sub.is_empty() {
                    continue;
                }
                acc = acc.or(self.eval(&Ucq::new(sub))?);
            }
            return Ok(acc);
        }
        Err(Error::UnsafeQuery(q.to_string()))
    }

    fn eval_conjunction(&mut self, conj: Vec<Ucq>) -> Result<Prob> {
        if let [single] = conj.as_slice() {
            return self.eval(single);
        }
        if !self.config.force_inclusion_exclusion {
            let groups = independent_conjunct_groups(&conj);
            if groups.len() > 1 {
                let mut acc = Prob::ONE;
                for g in groups {
                    acc = acc.and(self.eval_conjunction(g)?);
                }
                return Ok(acc);
            }
        }
        let terms = inclusion_exclusion_terms(&conj)?;
        let mut values = Vec::with_capacity(terms.len());
        for (c, t) in &terms {
            values.push((*c, self.eval(t)?));
        }
        Ok(Prob::signed_sum(values))
    }
}

/// Probability of `q` by summing over possible worlds of the uncertain
/// tuples that occur in its grounding.
pub fn prob_ground(q: &Ucq, src: &dyn TupleSource, config: &EngineConfig) -> Result<f64> {
    let domain = separator_constants(src.schema().domain(), q);
    let dnf = ground(q, &domain, config.ground_cap)?;
    let mut index: HashMap<GroundAtom, usize> = HashMap::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut masks: Vec<u64> = Vec::new();
    'conj: for conjunct in dnf {
        let mut mask = 0u64;
        for atom in conjunct {
            let p = src.prob(&atom);
            if p <= 0.0 {
                continue 'conj;
            }
            if p >= 1.0 {
                continue;
            }
            let next = index.len();
            let i = *index.entry(atom).or_insert_with(|| {
                probs.push(p);
                next
            });
            if i >= 63 {
                return Err(Error::ResourceLimit {
                    what: "uncertain tuples in world enumeration",
                    needed: index.len() as u128,
                    limit: config.world_cap as u128,
                });
            }
            mask |= 1 << i;
        }
        if mask == 0 {
            return Ok(1.0);
        }
        masks.push(mask);
    }
    let n = probs.len();
    if n > config.world_cap {
        return Err(Error::ResourceLimit {
            what: "uncertain tuples in world enumeration",
            needed: n as u128,
            limit: config.world_cap as u128,
        });
    }
    if masks.is_empty() {
        return Ok(0.0);
    }
    masks.sort_unstable();
    masks.dedup();
    // Split the world weight into two halves to avoid an inner product loop.
    let lo_bits = n / 2;
    let weights = |bits: std::ops::Range<usize>| -> Vec<f64> {
        let width = bits.len();
        (0..1u64 << width)
            .map(|w| {
                bits.clone()
                    .enumerate()
                    .map(|(k, i)| if w >> k & 1 == 1 { probs[i] } else { 1.0 - probs[i] })
                    .product()
            })
            .collect()
    };
    let lo = weights(0..lo_bits);
    let hi = weights(lo_bits..n);
    let lo_mask = (1u64 << lo_bits) - 1;
    let mut sat = 0.0;
    let mut unsat = 0.0;
    for w in 0..1u64 << n {
        let weight = lo[(w & lo_mask) as usize] * hi[(w >> lo_bits) as usize];
        if masks.iter().any(|&m| m & !w == 0) {
            sat += weight;
        } else {
            unsat += weight;
        }
    }
    Ok(if sat <= 0.5 { sat } else { 1.0 - unsat }.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::Database;
    use crate::query::parse_ucq;

    fn coauthors() -> Database {
        let schema = Schema::new(
            [("S", 1), ("CoA", 2)],
            ["Einstein", "Erdos", "VonNeumann", "Shakespeare"]
                .map(String::from)
                .to_vec(),
        )
        .unwrap();
        let mut db = Database::new(schema);
        for (c, p) in [("Einstein", 0.8), ("Erdos", 0.8), ("VonNeumann", 0.9), ("Shakespeare", 0.2)] {
            db.insert(GroundAtom::new("S", [c]), p).unwrap();
        }
        for (a, b, p) in [
            ("Einstein", "Erdos", 0.8),
            ("Erdos", "VonNeumann", 0.9),
            ("VonNeumann", "Einstein", 0.5),
        ] {
            db.insert(GroundAtom::new("CoA", [a, b]), p).unwrap();
        }
        db
    }

    #[test]
    fn ground_atom_lookup() {
        let db = coauthors();
        let q = parse_ucq("S(Einstein)", db.schema()).unwrap();
        assert_eq!(prob_lifted(&q, &db).unwrap(), 0.8);
    }

    #[test]
    fn q1_matches_world_enumeration() {
        let db = coauthors();
        let q = parse_ucq("S(x), CoA(x,y)", db.schema()).unwrap();
        let lifted = prob_lifted(&q, &db).unwrap();
        let ground = prob_ground(&q, &db, &EngineConfig::default()).unwrap();
        assert!((lifted - 0.94456).abs() < 1e-12, "{lifted}");
        assert!((lifted - ground).abs() < 1e-12);
    }

    #[test]
    fn empty_database_is_zero() {
        let db = Database::new(coauthors().schema().clone());
        let q = parse_ucq("S(x), CoA(x,y) | S(Erdos)", db.schema()).unwrap();
        assert_eq!(prob_lifted(&q, &db).unwrap(), 0.0);
        assert_eq!(prob_ground(&q, &db, &EngineConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn ground_enumeration_basics() {
        let schema = Schema::new([("T", 1)], vec!["A".into(), "B".into()]).unwrap();
        let mut db = Database::new(schema);
        db.insert(GroundAtom::new("T", ["A"]), 0.5).unwrap();
        db.insert(GroundAtom::new("T", ["B"]), 0.5).unwrap();
        let cfg = EngineConfig::default();
        let t = parse_ucq("T(A)", db.schema()).unwrap();
        assert_eq!(prob_ground(&t, &db, &cfg).unwrap(), 0.5);
        let either = parse_ucq("T(A) | T(B)", db.schema()).unwrap();
        assert!((prob_ground(&either, &db, &cfg).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn world_cap_is_enforced() {
        let db = coauthors();
        let q = parse_ucq("S(x), CoA(x,y)", db.schema()).unwrap();
        let cfg = EngineConfig {
            world_cap: 3,
            ..EngineConfig::default()
        };
        assert!(matches!(prob_ground(&q, &db, &cfg), Err(Error::ResourceLimit { .. })));
    }

    #[test]
    fn conditioning() {
        let db = coauthors();
        let q = parse_ucq("S(x), CoA(x,y)", db.schema()).unwrap();
        let einstein = GroundAtom::new("S", ["Einstein"]);
        let fixed = [(einstein.clone(), true)];
        let cond = prob_conditioned(&q, &db, &fixed).unwrap();
        let overlay = Overlay::new(&db).with(einstein, 1.0);
        let oracle = prob_ground(&q, &overlay, &EngineConfig::default()).unwrap();
        assert!((cond - oracle).abs() < 1e-12);
        assert!((cond - (1.0 - 0.2 * 0.28 * 0.55)).abs() < 1e-12);
        assert_eq!(prob_conditioned(&q, &db, &[]).unwrap(), prob_lifted(&q, &db).unwrap());
        let s = parse_ucq("S(Erdos)", db.schema()).unwrap();
        let off = [(GroundAtom::new("S", ["Erdos"]), false)];
        assert_eq!(prob_conditioned(&s, &db, &off).unwrap(), 0.0);
    }

    #[test]
    fn unsafe_query_is_rejected() {
        let schema = Schema::new([("R", 1), ("E", 2), ("T", 1)], vec!["A".into(), "B".into()]).unwrap();
        let mut db = Database::new(schema);
        for (a, p) in [("A", 0.5), ("B", 0.4)] {
            db.insert(GroundAtom::new("R", [a]), p).unwrap();
            db.insert(GroundAtom::new("T", [a]), p).unwrap();
            db.insert(GroundAtom::new("E", [a, a]), p).unwrap();
        }
        db.insert(GroundAtom::new("E", ["A", "B"]), 0.3).unwrap();
        let q = parse_ucq("R(x), E(x,y), T(y)", db.schema()).unwrap();
        assert!(!is_safe(&q));
        assert!(matches!(prob_lifted(&q, &db), Err(Error::UnsafeQuery(_))));
        assert!(prob_ground(&q, &db, &EngineConfig::default()).is_ok());
    }

    #[test]
    fn m0_is_safe() {
        let schema = Schema::new(
            [("R", 3), ("U", 1), ("V", 1), ("W", 1)],
            vec!["X1".into(), "Y1".into(), "Z1".into()],
        )
        .unwrap();
        let mut db = Database::new(schema);
        db.insert(GroundAtom::new("U", ["X1"]), 0.8).unwrap();
        db.insert(GroundAtom::new("V", ["Y1"]), 0.8).unwrap();
        db.insert(GroundAtom::new("W", ["Z1"]), 0.8).unwrap();
        db.insert(GroundAtom::new("R", ["X1", "Y1", "Z1"]), 0.8).unwrap();
        let m0 = parse_ucq(
            "R(x,y,z), U(x) | R(x,y,z), V(y) | R(x,y,z), W(z) | U(x), V(y) | U(x), W(z) | V(y), W(z)",
            db.schema(),
        )
        .unwrap();
        assert!(is_safe(&m0));
        let lifted = prob_lifted(&m0, &db).unwrap();
        let ground = prob_ground(&m0, &db, &EngineConfig::default()).unwrap();
        assert!((lifted - 0.9728).abs() < 1e-12, "{lifted}");
        assert!((ground - 0.9728).abs() < 1e-12);
    }
}
