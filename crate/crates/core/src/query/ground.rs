use super::{Term, Ucq};
use crate::db::GroundAtom;
use crate::error::{Error, Result};

pub const DEFAULT_GROUND_CAP: u128 = 1_000_000;

/// A grounded query: one conjunct per disjunct and substitution of its
/// variables, in disjunct order then domain-lexicographic substitution order.
pub type GroundDnf = Vec<Vec<GroundAtom>>;

/// Grounds `q` over `domain`, refusing when more than `cap` conjuncts would
/// be produced.
pub fn ground(q: &Ucq, domain: &[String], cap: u128) -> Result<GroundDnf> {
    if domain.is_empty() {
        return Err(Error::Invalid("cannot ground over an empty domain".into()));
    }
    let n = domain.len() as u128;
    let mut needed: u128 = 0;
    for cq in q.disjuncts() {
        let vars = cq.vars().len() as u32;
        let count = n.checked_pow(vars).unwrap_or(u128::MAX);
        needed = needed.saturating_add(count);
    }
    if needed > cap {
        return Err(Error::ResourceLimit {
            what: "ground conjuncts",
            needed,
            limit: cap,
        });
    }
    let mut out = Vec::with_capacity(needed as usize);
    for cq in q.disjuncts() {
        let vars: Vec<&str> = cq.vars().into_iter().collect();
        let mut assignment = vec![0usize; vars.len()];
        'odometer: loop {
            let mut conjunct: Vec<GroundAtom> = cq
                .atoms()
                .iter()
                .map(|a| GroundAtom {
                    pred: a.pred.clone(),
                    args: a
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Const(c) => c.clone(),
                            Term::Var(v) => {
                                let i = vars.iter().position(|w| w == v).expect("bound var");
                                domain[assignment[i]].clone()
                            }
                        })
                        .collect(),
                })
                .collect();
            conjunct.sort();
            conjunct.dedup();
            out.push(conjunct);
            // Last variable varies fastest.
            let mut i = vars.len();
            loop {
                if i == 0 {
                    break 'odometer;
                }
                i -= 1;
                assignment[i] += 1;
                if assignment[i] < domain.len() {
                    continue 'odometer;
                }
                assignment[i] = 0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::db::Schema;
    use crate::query::parse_ucq;

    fn schema(n: usize) -> Schema {
        Schema::new(
            [("R", 1), ("S", 1), ("CoA", 2)],
            (0..n).map(|i| format!("C{i}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn unary_exists() {
        let s = schema(2);
        let dnf = ground(&parse_ucq("R(x)", &s).unwrap(), s.domain(), DEFAULT_GROUND_CAP).unwrap();
        assert_eq!(
            dnf,
            vec![vec![GroundAtom::new("R", ["C0"])], vec![GroundAtom::new("R", ["C1"])]]
        );
    }

    #[test]
    fn conjunct_count_formula() {
        let s = schema(4);
        let q = parse_ucq("S(x), CoA(x,y)", &s).unwrap();
        let dnf = ground(&q, s.domain(), DEFAULT_GROUND_CAP).unwrap();
        assert_eq!(dnf.len(), 16);
        assert!(dnf.iter().all(|c| c.len() == 2));
        let q = parse_ucq("S(x), CoA(x,y) | R(z) | R(C1)", &s).unwrap();
        assert_eq!(ground(&q, s.domain(), DEFAULT_GROUND_CAP).unwrap().len(), 16 + 4 + 1);
    }

    #[test]
    fn ground_query_is_single_conjunct() {
        let s = schema(3);
        let q = parse_ucq("S(C2)", &s).unwrap();
        let dnf = ground(&q, s.domain(), DEFAULT_GROUND_CAP).unwrap();
        assert_eq!(dnf, vec![vec![GroundAtom::new("S", ["C2"])]]);
    }

    #[test]
    fn cap_is_enforced() {
        let s = schema(4);
        let q = parse_ucq("S(x), CoA(x,y)", &s).unwrap();
        assert!(matches!(ground(&q, s.domain(), 15), Err(Error::ResourceLimit { .. })));
    }
}
