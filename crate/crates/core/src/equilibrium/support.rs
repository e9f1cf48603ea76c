//! Exact equilibrium checks and the two linear programs that snap an
//! approximate equilibrium onto an exact one.
//!
//! With prices fixed, the allocations supported as demands form a polytope,
//! so [`cleared_allocation`] finds one by LP. With the allocation fixed,
//! dividing each agent's optimality conditions by the budget multiplier
//! makes them linear in the prices, so [`supporting_prices`] is an LP too.

use num_traits::{One, Signed, Zero};

use crate::economy::{Allocation, Economy};
use crate::equilibrium::demand::{budget_constraint, consumption_constraints, indirect_utility};
use crate::equilibrium::UtilityProfile;
use crate::lp::{self, dot, LinearProgram, LpOutcome, Relation, Sense};
use crate::scalar::Rational;

/// Exact prices and slack, normalized to `ΣP + α = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSystem {
    pub prices: Vec<Rational>,
    pub alpha: Rational,
}

impl PriceSystem {
    /// Scales nonnegative `(P, α)` onto the normalizing slice; `None` at zero.
    pub fn normalized(prices: Vec<Rational>, alpha: Rational) -> Option<Self> {
        if prices.iter().any(Signed::is_negative) || alpha.is_negative() {
            return None;
        }
        let total = prices.iter().fold(alpha.clone(), |s, p| s + p);
        if total.is_zero() {
            return None;
        }
        Some(PriceSystem {
            prices: prices.iter().map(|p| p / &total).collect(),
            alpha: alpha / total,
        })
    }
}

/// Conditions 1 to 3 exactly: prices in the simplex, clearing, and every
/// row optimal in its budget set. Returns the first failing agent or check.
pub fn exact_we_slack_violation(e: &Economy, u: &UtilityProfile, x: &Allocation, ps: &PriceSystem, eps: &Rational) -> Option<String> {
    let n = e.n();
    let total = ps.prices.iter().fold(Rational::zero(), |s, p| s + p);
    if ps.prices.iter().any(Signed::is_negative) || ps.alpha.is_negative() || total > Rational::one() {
        return Some("prices outside the simplex".into());
    }
    if let Some(o) = (0..n).find(|&o| x.column_sum(o) != Rational::one()) {
        return Some(format!("column o_{} does not clear", o + 1));
    }
    for i in 0..n {
        let mut rows = consumption_constraints(e, i, eps);
        rows.push(budget_constraint(e, i, &ps.prices, &ps.alpha));
        if x.row(i).iter().any(Signed::is_negative) || rows.iter().any(|c| !c.is_satisfied(x.row(i))) {
            return Some(format!("agent {} bundle outside the budget set", i + 1));
        }
        if u.value(i, x.row(i)) != indirect_utility(e, u, i, &ps.prices, &ps.alpha, eps) {
            return Some(format!("agent {} bundle is not a demand", i + 1));
        }
    }
    None
}

/// Clearing allocation, equal within classes, that comes closest to every
/// agent's demand utility at `ps`. The second component is the total
/// utility shortfall; zero means an exact equilibrium.
pub fn cleared_allocation(e: &Economy, u: &UtilityProfile, ps: &PriceSystem, eps: &Rational) -> Option<(Allocation, Rational)> {
    let n = e.n();
    let groups = e.equal_class_partition().groups().to_vec();
    let k = groups.len();
    let mut lp = LinearProgram::new(k * n + k, Sense::Minimize);
    for (l, g) in groups.iter().enumerate() {
        let i = g[0];
        let offset = l * n;
        let mut rows = consumption_constraints(e, i, eps);
        rows.push(budget_constraint(e, i, &ps.prices, &ps.alpha));
        for c in rows {
            let terms: Vec<(usize, Rational)> = c.coeffs.into_iter().enumerate().filter(|(_, a)| !a.is_zero()).map(|(o, a)| (offset + o, a)).collect();
            lp.add_sparse(&terms, c.relation, c.rhs);
        }
        let v = indirect_utility(e, u, i, &ps.prices, &ps.alpha, eps);
        let mut terms: Vec<(usize, Rational)> = (0..n).map(|o| (offset + o, u.row(i)[o].clone())).collect();
        terms.push((k * n + l, Rational::one()));
        lp.add_sparse(&terms, Relation::Ge, v);
    }
    for o in 0..n {
        let terms: Vec<(usize, Rational)> = groups.iter().enumerate().map(|(l, g)| (l * n + o, Rational::from_integer(g.len().into()))).collect();
        lp.add_sparse(&terms, Relation::Eq, Rational::one());
    }
    let weights: Vec<(usize, Rational)> = groups.iter().enumerate().map(|(l, g)| (k * n + l, Rational::from_integer(g.len().into()))).collect();
    lp.set_objective_sparse(&weights);
    let (value, point) = match crate::dominance::solve_checked(&lp) {
        LpOutcome::Optimal { value, point, .. } => (value, point),
        _ => return None,
    };
    let mut rows = vec![Vec::new(); n];
    for (l, g) in groups.iter().enumerate() {
        for &i in g {
            rows[i] = point[l * n..(l + 1) * n].to_vec();
        }
    }
    Some((Allocation::new_unchecked(rows), value))
}

/// Prices under which every row of `x` is a demand, if any exist.
///
/// An agent whose row already maximizes utility over the whole relaxed
/// consumption set only needs it to be affordable. For the others the
/// budget binds and the optimality conditions, divided by the budget
/// multiplier, read `θ u_o ≤ σ + P_o − Σ_{t ∋ o} π_t` with equality on the
/// support of the row and multipliers only on tight constraints; the LP
/// maximizes the smallest `θ`, which must be positive.
pub fn supporting_prices(e: &Economy, u: &UtilityProfile, x: &Allocation, eps: &Rational) -> Option<PriceSystem> {
    let n = e.n();
    let (alpha, t) = (n, n + 1);
    let reps: Vec<usize> = e.equal_class_partition().groups().iter().map(|g| g[0]).collect();
    let bound_by_budget: Vec<bool> = reps.iter().map(|&i| !maximizes_without_budget(e, u, i, x.row(i), eps)).collect();
    let blocks = bound_by_budget.iter().filter(|b| **b).count();
    let mut lp = LinearProgram::new(n + 2 + blocks * (n + 2), Sense::Maximize);
    lp.set_bound(t, Some(Rational::zero()), Some(Rational::one()));
    let norm: Vec<(usize, Rational)> = (0..=n).map(|v| (v, Rational::one())).collect();
    lp.add_sparse(&norm, Relation::Eq, Rational::one());
    let mut base = n + 2;
    for (&i, &bound) in reps.iter().zip(&bound_by_budget) {
        let row = x.row(i);
        let mut budget: Vec<(usize, Rational)> = (0..n).map(|o| (o, &row[o] - &e.endowment_row(i)[o])).collect();
        budget.push((alpha, -Rational::one()));
        if !bound {
            lp.add_sparse(&budget, Relation::Le, Rational::zero());
            continue;
        }
        lp.add_sparse(&budget, Relation::Eq, Rational::zero());
        let (theta, sigma) = (base, base + 1);
        let order = e.pref(i).order();
        let mut target = Rational::zero();
        let mut prefix = Rational::zero();
        for (step, &o) in order.iter().enumerate() {
            target += &e.endowment_row(i)[o];
            prefix += &row[o];
            if prefix > &target - eps {
                lp.set_bound(base + 2 + step, Some(Rational::zero()), Some(Rational::zero()));
            }
        }
        if prefix < Rational::one() {
            lp.set_bound(sigma, Some(Rational::zero()), Some(Rational::zero()));
        }
        for o in 0..n {
            let mut terms = vec![(theta, u.row(i)[o].clone()), (sigma, -Rational::one()), (o, -Rational::one())];
            terms.extend((e.pref(i).rank(o)..n).map(|s| (base + 2 + s, Rational::one())));
            let rel = if row[o].is_positive() { Relation::Eq } else { Relation::Le };
            lp.add_sparse(&terms, rel, Rational::zero());
        }
        lp.add_sparse(&[(theta, Rational::one()), (t, -Rational::one())], Relation::Ge, Rational::zero());
        base += n + 2;
    }
    lp.set_objective_sparse(&[(t, Rational::one())]);
    let point = match crate::dominance::solve_checked(&lp) {
        LpOutcome::Optimal { point, .. } if blocks == 0 || point[t].is_positive() => point,
        _ => return None,
    };
    Some(PriceSystem {
        prices: point[..n].to_vec(),
        alpha: point[alpha].clone(),
    })
}

fn maximizes_without_budget(e: &Economy, u: &UtilityProfile, i: usize, row: &[Rational], eps: &Rational) -> bool {
    let mut lp = LinearProgram::new(e.n(), Sense::Maximize);
    for c in consumption_constraints(e, i, eps) {
        lp.add_constraint(c.coeffs, c.relation, c.rhs);
    }
    lp.set_objective(u.row(i).to_vec());
    lp::solve(&lp).value() == Some(&u.value(i, row))
}

/// Budget violation `P·x'_i − P·ω_i − α` of each proposed member bundle.
/// For a coalition that reshuffles its own endowment the violations sum to
/// `−|I′| α ≤ 0`, so the members cannot all be priced out of their bundles.
pub fn budget_violations(e: &Economy<f64>, prices: &[f64], alpha: f64, bundles: &[(usize, Vec<f64>)]) -> Vec<f64> {
    bundles
        .iter()
        .map(|(i, b)| dot(prices, b) - dot(prices, e.endowment_row(*i)) - alpha)
        .collect()
}
