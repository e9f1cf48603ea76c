//! First-order stochastic dominance and the allocation-level predicates
//! built on it: individual rationality, envy, equal treatment of equals,
//! equal-endowment no envy, and sd-efficiency.
//!
//! Every comparison goes through [`CumVector`]: entry `t` is the share of the
//! agent's `t + 1` most preferred objects.

use num_traits::Zero;

use crate::economy::{Allocation, Economy, Preference};
use crate::error::DominanceError;
use crate::lp::{self, LinearProgram, LpOutcome, Relation, Sense};
use crate::scalar::{Rational, Scalar};

/// Prefix sums of an assignment along one preference order.
#[derive(Debug, Clone, PartialEq)]
pub struct CumVector<T>(pub Vec<T>);

impl<T: Scalar> CumVector<T> {
    pub fn entries(&self) -> &[T] {
        &self.0
    }

    /// Entrywise `self ≥ other`.
    pub fn dominates(&self, other: &CumVector<T>) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a.approx_ge(b))
    }

    pub fn differs(&self, other: &CumVector<T>) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| !a.approx_eq(b))
    }
}

fn check_len(pref: &Preference, len: usize) -> Result<(), DominanceError> {
    if pref.len() == len {
        Ok(())
    } else {
        Err(DominanceError::Dimension {
            expected: pref.len(),
            found: len,
        })
    }
}

pub fn cum<T: Scalar>(pref: &Preference, a: &[T]) -> Result<CumVector<T>, DominanceError> {
    check_len(pref, a.len())?;
    let mut acc = T::zero();
    let entries = pref
        .order()
        .iter()
        .map(|&o| {
            acc += &a[o];
            acc.clone()
        })
        .collect();
    Ok(CumVector(entries))
}

/// `a` weakly sd-dominates `b` under `pref`.
pub fn weak_sd<T: Scalar>(pref: &Preference, a: &[T], b: &[T]) -> Result<bool, DominanceError> {
    Ok(cum(pref, a)?.dominates(&cum(pref, b)?))
}

/// `a` weakly dominates `b` and some prefix is strictly larger.
pub fn strict_sd<T: Scalar>(pref: &Preference, a: &[T], b: &[T]) -> Result<bool, DominanceError> {
    let (ca, cb) = (cum(pref, a)?, cum(pref, b)?);
    Ok(ca.dominates(&cb) && ca.differs(&cb))
}

fn check_dims<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<(), DominanceError> {
    let n = e.n();
    if p.n() != n {
        return Err(DominanceError::Dimension {
            expected: n,
            found: p.n(),
        });
    }
    match p.rows().iter().find(|r| r.len() != n) {
        Some(r) => Err(DominanceError::Dimension {
            expected: n,
            found: r.len(),
        }),
        None => Ok(()),
    }
}

/// Lowest-index agent whose assignment does not weakly dominate their endowment.
pub fn ir_violator<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<Option<usize>, DominanceError> {
    check_dims(e, p)?;
    for i in 0..e.n() {
        if !weak_sd(e.pref(i), p.row(i), e.endowment_row(i))? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

pub fn is_ir<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<bool, DominanceError> {
    Ok(ir_violator(e, p)?.is_none())
}

/// Agent `i` envies `j` when `p_i` does not weakly dominate `p_j` for `i`.
pub fn envies<T: Scalar>(e: &Economy<T>, p: &Allocation<T>, i: usize, j: usize) -> Result<bool, DominanceError> {
    if i == j {
        return Err(DominanceError::SameAgent(i));
    }
    check_dims(e, p)?;
    Ok(!weak_sd(e.pref(i), p.row(i), p.row(j))?)
}

/// First pair `(i, j)`, `i < j`, of equals holding different assignments.
pub fn ete_violation<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<Option<(usize, usize)>, DominanceError> {
    check_dims(e, p)?;
    for group in e.equal_class_partition().groups() {
        for (a, &i) in group.iter().enumerate() {
            for &j in &group[a + 1..] {
                let same = p.row(i).iter().zip(p.row(j)).all(|(x, y)| x.approx_eq(y));
                if !same {
                    return Ok(Some((i, j)));
                }
            }
        }
    }
    Ok(None)
}

pub fn satisfies_ete<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<bool, DominanceError> {
    Ok(ete_violation(e, p)?.is_none())
}

/// Lexicographically first ordered pair `(i, j)` with `ω_i = ω_j` where `i` envies `j`.
pub fn eene_violation<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<Option<(usize, usize)>, DominanceError> {
    check_dims(e, p)?;
    let n = e.n();
    for i in 0..n {
        for j in 0..n {
            if i != j && e.endowment_row(i) == e.endowment_row(j) && envies(e, p, i, j)? {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

pub fn satisfies_eene<T: Scalar>(e: &Economy<T>, p: &Allocation<T>) -> Result<bool, DominanceError> {
    Ok(eene_violation(e, p)?.is_none())
}

/// Terms `(offset + o, 1)` for the top `t` objects of `pref`.
pub fn prefix_terms<T: Scalar>(pref: &Preference, t: usize, offset: usize) -> Vec<(usize, T)> {
    pref.order()[..t].iter().map(|&o| (offset + o, T::one())).collect()
}

/// Doubly stochastic constraints over `n × n` variables `q[i*n + o]`.
pub(crate) fn add_birkhoff_rows<T: Scalar>(lp: &mut LinearProgram<T>, n: usize) {
    for i in 0..n {
        let terms: Vec<(usize, T)> = (0..n).map(|o| (i * n + o, T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
    }
    for o in 0..n {
        let terms: Vec<(usize, T)> = (0..n).map(|i| (i * n + o, T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
    }
}

/// Solves and, in debug builds, re-verifies the certificate.
pub(crate) fn solve_checked<T: Scalar>(lp: &LinearProgram<T>) -> LpOutcome<T> {
    let out = lp::solve(lp);
    debug_assert!(
        lp::check_certificate(lp, &out).unwrap_or(false),
        "certificate failed for\n{}",
        lp.dump()
    );
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Efficiency {
    Efficient,
    /// An allocation weakly dominating `p` for everyone and strictly for someone.
    Dominated(Allocation<Rational>),
}

/// sd-efficiency by LP: maximize the total prefix slack of an allocation `q`
/// over `p`; `p` is efficient iff the optimum is zero.
pub fn is_sd_efficient(e: &Economy, p: &Allocation) -> Result<Efficiency, DominanceError> {
    check_dims(e, p)?;
    let n = e.n();
    let mut lp = LinearProgram::new(n * n, Sense::Maximize);
    add_birkhoff_rows(&mut lp, n);
    let mut objective = Vec::new();
    let mut baseline = Rational::zero();
    for i in 0..n {
        let c = cum(e.pref(i), p.row(i))?;
        for t in 1..n {
            let terms = prefix_terms(e.pref(i), t, i * n);
            lp.add_sparse(&terms, Relation::Ge, c.0[t - 1].clone());
            baseline += &c.0[t - 1];
            objective.extend(terms);
        }
    }
    lp.set_objective_sparse(&objective);
    match solve_checked(&lp) {
        LpOutcome::Optimal { value, point, .. } if value > baseline => {
            let rows = point.chunks(n).map(|r| r.to_vec()).collect();
            Ok(Efficiency::Dominated(Allocation::new_unchecked(rows)))
        }
        LpOutcome::Optimal { .. } => Ok(Efficiency::Efficient),
        other => unreachable!("p itself is feasible and the region is bounded: {}", other.tag()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::ratio;

    fn q(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    fn row(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(n, d)| q(n, d)).collect()
    }

    #[test]
    fn cum_examples() {
        let e = fixtures::e1();
        let p1 = e.pref(0);
        assert_eq!(cum(p1, e.endowment_row(0)).unwrap().0, row(&[(0, 1), (1, 2), (1, 2), (1, 1)]));
        assert_eq!(cum(p1, e.endowment_row(2)).unwrap().0, row(&[(1, 2), (1, 2), (1, 1), (1, 1)]));
        let uniform = vec![q(1, 4); 4];
        assert_eq!(cum(p1, &uniform).unwrap().0, row(&[(1, 4), (1, 2), (3, 4), (1, 1)]));
        assert!(cum(p1, &uniform[..3]).is_err());
    }

    #[test]
    fn sd_comparisons() {
        let e = fixtures::e1();
        let (w1, w3) = (e.endowment_row(0), e.endowment_row(2));
        assert!(weak_sd(e.pref(0), w3, w1).unwrap());
        assert!(weak_sd(e.pref(0), w1, w1).unwrap());
        assert!(!weak_sd(e.pref(0), w1, w3).unwrap());
        assert!(strict_sd(e.pref(0), w3, w1).unwrap());
        assert!(!strict_sd(e.pref(0), w1, w1).unwrap());
        assert!(strict_sd(e.pref(2), w1, w3).unwrap());
    }

    #[test]
    fn individual_rationality() {
        let e = fixtures::e1();
        assert!(is_ir(&e, &e.endowment_allocation()).unwrap());
        let mut p = e.endowment_allocation();
        p.set_row(3, row(&[(1, 2), (0, 1), (1, 2), (0, 1)]));
        p.set_row(0, row(&[(0, 1), (1, 2), (0, 1), (1, 2)]));
        assert_eq!(ir_violator(&e, &p).unwrap(), Some(3));
        // 1 and 3 swap, 2 and 4 keep: cum checks as in the weak_sd cases above.
        let mut swap = e.endowment_allocation();
        swap.set_row(0, e.endowment_row(2).to_vec());
        swap.set_row(2, e.endowment_row(0).to_vec());
        assert!(is_ir(&e, &swap).unwrap());
    }

    #[test]
    fn envy_cases() {
        let e = fixtures::e1();
        let p = e.endowment_allocation();
        assert!(envies(&e, &p, 0, 2).unwrap());
        assert!(!envies(&e, &p, 2, 3).unwrap());
        assert!(!envies(&e, &p, 0, 1).unwrap());
        assert_eq!(envies(&e, &p, 1, 1), Err(DominanceError::SameAgent(1)));
    }

    #[test]
    fn ete_cases() {
        let e = fixtures::e1();
        assert!(satisfies_ete(&e, &e.endowment_allocation()).unwrap());
        let mut p = e.endowment_allocation();
        p.set_row(0, row(&[(1, 1), (0, 1), (0, 1), (0, 1)]));
        p.set_row(1, row(&[(0, 1), (0, 1), (1, 1), (0, 1)]));
        assert_eq!(ete_violation(&e, &p).unwrap(), Some((0, 1)));
        let singletons = fixtures::ttc3();
        let perm = Allocation::from_permutation(&[2, 0, 1]);
        assert!(satisfies_ete(&singletons, &perm).unwrap());
    }

    #[test]
    fn eene_cases() {
        let e = fixtures::e1_prime();
        assert!(satisfies_eene(&fixtures::e1(), &fixtures::e1().endowment_allocation()).unwrap());
        let p = fixtures::eene_construction();
        // Independent check: for each equal-endowment pair, compare prefix sums entrywise.
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            let ci = cum(e.pref(i), p.row(i)).unwrap();
            let cj = cum(e.pref(i), p.row(j)).unwrap();
            assert!(ci.0.iter().zip(&cj.0).all(|(a, b)| a >= b), "{i} envies {j}");
        }
        assert!(satisfies_eene(&e, &p).unwrap());
        // Move o_4 mass from agent 2 to agent 1: agent 2 ranks o_4 third and
        // now falls behind at the prefix (o_1, o_2, o_4).
        let bad = Allocation::new_unchecked(vec![
            row(&[(0, 1), (1, 2), (0, 1), (1, 2)]),
            row(&[(1, 2), (0, 1), (1, 2), (0, 1)]),
            row(&[(1, 4), (1, 4), (1, 2), (0, 1)]),
            row(&[(1, 4), (1, 4), (0, 1), (1, 2)]),
        ]);
        assert!(!envies(&e, &bad, 0, 1).unwrap());
        assert!(envies(&e, &bad, 1, 0).unwrap());
        assert_eq!(eene_violation(&e, &bad).unwrap(), Some((1, 0)));
    }

    #[test]
    fn sd_efficiency() {
        let e = fixtures::e1();
        match is_sd_efficient(&e, &e.endowment_allocation()).unwrap() {
            Efficiency::Dominated(q) => {
                for i in 0..4 {
                    assert!(weak_sd(e.pref(i), q.row(i), e.endowment_row(i)).unwrap());
                }
                assert!((0..4).any(|i| strict_sd(e.pref(i), q.row(i), e.endowment_row(i)).unwrap()));
            }
            Efficiency::Efficient => panic!("endowment is dominated by the 1-3 swap"),
        }
        let single = crate::economy::parse_economy("1\no_1\n1\n").unwrap();
        assert_eq!(is_sd_efficient(&single, single.endowment()).unwrap(), Efficiency::Efficient);
        let favorites = fixtures::two_agent_swap();
        let p = Allocation::from_permutation(&[1, 0]);
        assert_eq!(is_sd_efficient(&favorites, &p).unwrap(), Efficiency::Efficient);
    }
}
