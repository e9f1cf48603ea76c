//! Price adjustment for Walrasian equilibria with slack over `f64`.
//!
//! At each `(P, α)` the demand selection is the one closest to clearing
//! among bundles within `η` of every agent's optimum; prices of
//! over-demanded objects rise, under-demanded ones fall, `α` rises when
//! total demand falls short, and `(P, α)` is renormalized to `ΣP + α = 1`.

use num_traits::{FromPrimitive, Zero};
use rand::Rng;

use crate::economy::{Allocation, Economy};
use crate::equilibrium::demand::{budget_constraint, consumption_constraints, indirect_utility};
use crate::equilibrium::UtilityProfile;
use crate::error::EquilibriumError;
use crate::lp::{self, LinearProgram, LpOutcome, Relation, Sense};
use crate::equilibrium::rationalize::rationalize;
use crate::equilibrium::support::{cleared_allocation, exact_we_slack_violation, supporting_prices, PriceSystem};
use crate::sampling::{rng, SampleRng};
use crate::scalar::{best_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct WeSlack {
    pub x: Allocation<f64>,
    pub prices: Vec<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    /// `max_o |Σ_i x_{i,o} − 1|`.
    pub residual: f64,
    /// Each row is within `eta · max u` of its demand utility.
    pub eta: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Final relative utility slack admitted by the clearing selection.
    pub eta: f64,
    /// Starting slack; each stage divides it by ten down to `eta`.
    pub eta_start: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-9,
            max_iterations: 1200,
            restarts: 3,
            seed: 0,
            eta: 1e-6,
            eta_start: 1e-2,
        }
    }
}

/// Bundles within `η · max u` of each agent's optimum, chosen to minimize
/// the L1 clearing error and then to maximize total utility. Returns the
/// selection and the excess per object.
pub fn clearing_selection(e: &Economy<f64>, u: &UtilityProfile<f64>, prices: &[f64], alpha: f64, eps: f64, eta: f64) -> (Allocation<f64>, Vec<f64>) {
    let n = e.n();
    let slack = eta * u.max_entry();
    let vars = n * n + 2 * n;
    let mut lp = LinearProgram::new(vars, Sense::Minimize);
    for i in 0..n {
        let v = indirect_utility(e, u, i, prices, &alpha, &eps);
        let offset = i * n;
        let mut rows = consumption_constraints(e, i, &eps);
        rows.push(budget_constraint(e, i, prices, &alpha));
        for c in rows {
            let terms: Vec<(usize, f64)> = c.coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(o, a)| (offset + o, *a)).collect();
            lp.add_sparse(&terms, c.relation, c.rhs);
        }
        let terms: Vec<(usize, f64)> = (0..n).map(|o| (offset + o, u.row(i)[o])).collect();
        lp.add_sparse(&terms, Relation::Ge, v - slack);
    }
    for o in 0..n {
        let mut terms: Vec<(usize, f64)> = (0..n).map(|i| (i * n + o, 1.0)).collect();
        terms.push((n * n + o, -1.0));
        terms.push((n * n + n + o, 1.0));
        lp.add_sparse(&terms, Relation::Eq, 1.0);
    }
    // Utility breaks ties among equally clearing selections.
    let weight = 1e-3 / u.max_entry();
    let mut objective: Vec<(usize, f64)> = (0..n * n).map(|v| (v, -weight * u.row(v / n)[v % n])).collect();
    objective.extend((n * n..vars).map(|v| (v, 1.0)));
    lp.set_objective_sparse(&objective);
    let point = match lp::solve(&lp) {
        LpOutcome::Optimal { point, .. } => point,
        other => unreachable!("excess variables make the selection feasible: {}", other.tag()),
    };
    let rows: Vec<Vec<f64>> = point[..n * n].chunks(n).map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect();
    let excess = (0..n).map(|o| rows.iter().map(|r| r[o]).sum::<f64>() - 1.0).collect();
    (Allocation::new_unchecked(rows), excess)
}

fn normalize(prices: &mut [f64], alpha: &mut f64) {
    prices.iter_mut().for_each(|p| *p = p.max(0.0));
    *alpha = alpha.max(0.0);
    let total: f64 = prices.iter().sum::<f64>() + *alpha;
    if total <= 0.0 {
        let share = 1.0 / prices.len() as f64;
        prices.iter_mut().for_each(|p| *p = share);
        *alpha = 0.0;
    } else {
        prices.iter_mut().for_each(|p| *p /= total);
        *alpha /= total;
    }
}

fn random_start(rng: &mut SampleRng, n: usize) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut a = rng.gen_range(0.0..0.2);
    normalize(&mut p, &mut a);
    (p, a)
}

struct Best {
    prices: Vec<f64>,
    alpha: f64,
    x: Allocation<f64>,
    residual: f64,
    eta: f64,
}

impl Best {
    /// Converged results rank by their utility slack, the rest by residual.
    fn key(&self, tol: f64) -> (f64, f64) {
        (if self.residual <= tol { self.eta } else { f64::INFINITY }, self.residual)
    }
}

/// Backtracking price adjustment. A step along the excess is kept only if
/// it lowers the total excess; otherwise the step halves from the best
/// point. A vanishing step falls back to a coordinate pattern search over
/// the prices and `α`, and any pattern improvement resumes the excess steps.
#[allow(clippy::too_many_arguments)]
fn adjust(e: &Economy<f64>, u: &UtilityProfile<f64>, eps: f64, eta: f64, tol: f64, start: (Vec<f64>, f64), step: f64, budget: usize) -> (Best, usize) {
    let n = e.n();
    let (mut p, mut a) = start;
    normalize(&mut p, &mut a);
    let initial = step;
    let mut step = step;
    let mut pattern: Option<(f64, usize)> = None;
    let mut best: Option<(Best, Vec<f64>, f64)> = None;
    let mut used = 0;
    while used < budget {
        used += 1;
        let (x, z) = clearing_selection(e, u, &p, a, eps, eta);
        let r = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        if best.as_ref().is_none_or(|(_, _, s)| l1 < *s) {
            best = Some((
                Best {
                    prices: p.clone(),
                    alpha: a,
                    x,
                    residual: r,
                    eta,
                },
                z,
                l1,
            ));
            match pattern {
                Some(_) => {
                    pattern = None;
                    step = initial;
                }
                None => step = (step * 1.5).min(0.5),
            }
        } else {
            match pattern.as_mut() {
                None => {
                    step *= 0.5;
                    if step < 1e-6 {
                        pattern = Some(((10.0 * eta).min(0.05), 0));
                    }
                }
                Some((h, dir)) => {
                    *dir += 1;
                    if *dir == 2 * (n + 1) {
                        *dir = 0;
                        *h *= 0.5;
                    }
                    if *h < 1e-12 {
                        break;
                    }
                }
            }
        }
        let (b, z, _) = best.as_ref().expect("set on the first iteration");
        if b.residual <= tol {
            break;
        }
        p = b.prices.clone();
        a = b.alpha;
        match pattern {
            None => {
                let shortfall: f64 = -z.iter().sum::<f64>();
                p.iter_mut().zip(z).for_each(|(po, zo)| *po += step * zo);
                a += step * shortfall;
            }
            Some((h, dir)) => {
                let delta = if dir % 2 == 0 { h } else { -h };
                match dir / 2 {
                    k if k < n => p[k] += delta,
                    _ => a += delta,
                }
            }
        }
        normalize(&mut p, &mut a);
    }
    (best.expect("at least one iteration").0, used)
}

/// Warm-started stages of decreasing utility slack. Returns the tightest
/// stage that cleared, or the failed first stage.
fn staged(e: &Economy<f64>, u: &UtilityProfile<f64>, eps: f64, opts: &SolverOptions, start: (Vec<f64>, f64), step: f64, budget: usize) -> (Best, usize) {
    let mut eta = opts.eta_start.max(opts.eta);
    let (mut best, mut used) = adjust(e, u, eps, eta, opts.tol, start, step, budget);
    while best.residual <= opts.tol && eta > opts.eta && used < budget {
        eta = (eta / 10.0).max(opts.eta);
        let (b, k) = adjust(e, u, eps, eta, opts.tol, (best.prices.clone(), best.alpha), (10.0 * eta).min(step), budget - used);
        used += k;
        if b.residual > opts.tol {
            break;
        }
        best = b;
    }
    (best, used)
}

/// Rounds the prices, or the allocation, of a cleared float point and
/// checks for an exact WE-slack at `eps` in rational arithmetic.
fn snap(e: &Economy, u: &UtilityProfile, eps: f64, b: &Best) -> Option<Best> {
    let eps_exact = Rational::from_f64(eps)?;
    let part = e.equal_class_partition();
    for maxden in [64, 512] {
        let prices: Option<Vec<Rational>> = b.prices.iter().map(|p| best_rational(p.max(0.0), maxden)).collect();
        let ps = PriceSystem::normalized(prices?, best_rational(b.alpha.max(0.0), maxden)?);
        let mut found = ps.and_then(|ps| match cleared_allocation(e, u, &ps, &eps_exact) {
            Some((x, gap)) if gap.is_zero() => Some((x, ps)),
            _ => None,
        });
        if found.is_none() {
            if let Ok(x) = rationalize(b.x.rows(), maxden, &part) {
                found = supporting_prices(e, u, &x, &eps_exact).map(|ps| (x, ps));
            }
        }
        if let Some((x, ps)) = found {
            if exact_we_slack_violation(e, u, &x, &ps, &eps_exact).is_none() {
                return Some(Best {
                    prices: ps.prices.iter().map(Scalar::to_f64).collect(),
                    alpha: ps.alpha.to_f64(),
                    x: x.to_f64(),
                    residual: 0.0,
                    eta: 0.0,
                });
            }
        }
    }
    None
}

/// Best `(x, P, α)` found from `start` (or uniform prices) and seeded
/// restarts. Converged means `residual ≤ tol` with `eta` at the target.
/// A best point that clears only at a looser slack is handed to an exact
/// rounding step, which reports `eta = 0` when it proves an exact WE-slack.
pub fn search_we_slack(e: &Economy, u: &UtilityProfile, eps: f64, opts: &SolverOptions, start: Option<(Vec<f64>, f64)>) -> WeSlack {
    let (ef, uf) = (e.to_f64(), u.to_f64());
    let n = e.n();
    let mut r = rng(opts.seed);
    let mut step = if start.is_some() { 0.05 } else { 0.5 };
    let mut start = start.unwrap_or_else(|| (vec![1.0 / n as f64; n], 0.0));
    let per_run = (opts.max_iterations / (opts.restarts + 1)).max(1);
    let mut best: Option<Best> = None;
    let mut total = 0;
    for _ in 0..=opts.restarts {
        let (b, used) = staged(&ef, &uf, eps, opts, start, step, per_run);
        total += used;
        if best.as_ref().is_none_or(|cur| b.key(opts.tol) < cur.key(opts.tol)) {
            best = Some(b);
        }
        let cur = best.as_ref().expect("set above");
        if cur.residual <= opts.tol && cur.eta <= opts.eta {
            break;
        }
        start = random_start(&mut r, n);
        step = 0.5;
    }
    let mut b = best.expect("at least one run");
    if b.residual <= opts.tol && b.eta > opts.eta {
        if let Some(exact) = snap(e, u, eps, &b) {
            b = exact;
        }
    }
    WeSlack {
        x: b.x,
        prices: b.prices,
        alpha: b.alpha,
        epsilon: eps,
        residual: b.residual,
        eta: b.eta,
        iterations: total,
    }
}

/// [`search_we_slack`] that fails with the best residual unless it converged.
pub fn solve_we_slack_from(e: &Economy, u: &UtilityProfile, eps: f64, opts: &SolverOptions, start: Option<(Vec<f64>, f64)>) -> Result<WeSlack, EquilibriumError> {
    let we = search_we_slack(e, u, eps, opts, start);
    if we.residual <= opts.tol && we.eta <= opts.eta {
        Ok(we)
    } else {
        Err(EquilibriumError::NoConvergence { best_residual: we.residual })
    }
}

/// WE-slack for relaxation `eps` with default solver settings and tolerance `tol`.
pub fn solve_we_slack(e: &Economy, u: &UtilityProfile, eps: f64, tol: f64) -> Result<WeSlack, EquilibriumError> {
    let opts = SolverOptions {
        tol,
        ..SolverOptions::default()
    };
    solve_we_slack_from(e, u, eps, &opts, None)
}
