//! Relaxed consumption sets and utility-maximizing demand.

use crate::economy::Economy;
use crate::equilibrium::UtilityProfile;
use crate::lp::{self, dot, Constraint, LinearProgram, LpOutcome, Relation, Sense};
use crate::scalar::Scalar;

/// `X^ε_i` over `n` variables: `Σ x ≤ 1` and every prefix at least the
/// endowment's prefix minus `ε`. Nonnegativity is the LP default bound.
pub fn consumption_constraints<T: Scalar>(e: &Economy<T>, i: usize, eps: &T) -> Vec<Constraint<T>> {
    let n = e.n();
    let order = e.pref(i).order();
    let mut out = vec![Constraint {
        coeffs: vec![T::one(); n],
        relation: Relation::Le,
        rhs: T::one(),
    }];
    let mut target = T::zero();
    for t in 1..=n {
        target += &e.endowment_row(i)[order[t - 1]];
        let mut coeffs = vec![T::zero(); n];
        for &o in &order[..t] {
            coeffs[o] = T::one();
        }
        out.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: target.clone() - eps,
        });
    }
    out
}

/// Budget row `P · x ≤ P · ω_i + α`.
pub fn budget_constraint<T: Scalar>(e: &Economy<T>, i: usize, prices: &[T], alpha: &T) -> Constraint<T> {
    Constraint {
        coeffs: prices.to_vec(),
        relation: Relation::Le,
        rhs: dot(prices, e.endowment_row(i)) + alpha,
    }
}

/// The budget-and-consumption LP maximizing `u_i · x`.
pub fn demand_lp<T: Scalar>(e: &Economy<T>, u: &UtilityProfile<T>, i: usize, prices: &[T], alpha: &T, eps: &T) -> LinearProgram<T> {
    let mut lp = LinearProgram::new(e.n(), Sense::Maximize);
    for c in consumption_constraints(e, i, eps) {
        lp.add_constraint(c.coeffs, c.relation, c.rhs);
    }
    let b = budget_constraint(e, i, prices, alpha);
    lp.add_constraint(b.coeffs, b.relation, b.rhs);
    lp.set_objective(u.row(i).to_vec());
    lp
}

/// Optimal utility over the budget set; `ω_i` is always feasible.
pub fn indirect_utility<T: Scalar>(e: &Economy<T>, u: &UtilityProfile<T>, i: usize, prices: &[T], alpha: &T, eps: &T) -> T {
    match lp::solve(&demand_lp(e, u, i, prices, alpha, eps)) {
        LpOutcome::Optimal { value, .. } => value,
        other => unreachable!("endowment is affordable and the set is bounded: {}", other.tag()),
    }
}

/// Utility-maximizing bundle; ties go to the larger top-prefix mass, then
/// the next prefix, and so on down the preference order.
pub fn demand<T: Scalar>(e: &Economy<T>, u: &UtilityProfile<T>, i: usize, prices: &[T], alpha: &T, eps: &T) -> Vec<T> {
    let n = e.n();
    let mut lp = demand_lp(e, u, i, prices, alpha, eps);
    let mut point = match lp::solve(&lp) {
        LpOutcome::Optimal { value, point, .. } => {
            let floor = value - T::tolerance();
            lp.add_constraint(u.row(i).to_vec(), Relation::Ge, floor);
            point
        }
        other => unreachable!("endowment is affordable and the set is bounded: {}", other.tag()),
    };
    let order = e.pref(i).order().to_vec();
    for t in 1..=n {
        let mut prefix = vec![T::zero(); n];
        for &o in &order[..t] {
            prefix[o] = T::one();
        }
        lp.set_objective(prefix.clone());
        if let LpOutcome::Optimal { value, point: p, .. } = lp::solve(&lp) {
            lp.add_constraint(prefix, Relation::Ge, value - T::tolerance());
            point = p;
        }
    }
    point
}
