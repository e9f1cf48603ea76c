//! From WE-slack iterates on a shrinking relaxation to a verified allocation.
//!
//! The float iterates only propose candidates. A candidate is returned
//! only after the exact checks for individual rationality, equal treatment
//! of equals and weak-core membership all pass.

use std::fmt;

use num_traits::Zero;

use crate::dominance::{is_ir, satisfies_eene, satisfies_ete};
use crate::economy::{Allocation, Economy};
use crate::equilibrium::rationalize::{rationalize, symmetrize};
use crate::equilibrium::support::{cleared_allocation, supporting_prices, PriceSystem};
use crate::equilibrium::tatonnement::{search_we_slack, SolverOptions};
use crate::equilibrium::{default_utilities, UtilityProfile};
use crate::error::EquilibriumError;
use crate::membership::{core_membership, CoreMembershipReport, CoreNotion};
use crate::scalar::{best_rational, Rational};

/// Strictly decreasing positive relaxations `ε^1 > ε^2 > ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule(Vec<f64>);

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self, EquilibriumError> {
        if values.is_empty() {
            return Err(EquilibriumError::Schedule("schedule is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(EquilibriumError::Schedule("relaxations must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(EquilibriumError::Schedule("relaxations must strictly decrease".into()));
        }
        Ok(EpsilonSchedule(values))
    }

    /// `2^-k` for `k = 1..=count`.
    pub fn halving(count: usize) -> Self {
        EpsilonSchedule((1..=count as i32).map(|k| 0.5f64.powi(k)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// The same schedule followed by `more` further halvings.
    pub fn extended(&self, more: usize) -> Self {
        let mut v = self.0.clone();
        let last = *v.last().expect("nonempty");
        v.extend((1..=more as i32).map(|k| last * 0.5f64.powi(k)));
        EpsilonSchedule(v)
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::halving(20)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FindCoreOptions {
    pub schedule: EpsilonSchedule,
    /// First rounding denominator; doubled on each retry up to `maxden_limit`.
    pub maxden: u64,
    pub maxden_limit: u64,
    pub tol: f64,
    /// Iterates closer than this in max norm count as converged.
    pub convergence_threshold: f64,
    /// Extra halvings tried after the whole denominator range fails.
    pub extension: usize,
    pub solver: SolverOptions,
    pub utilities: Option<UtilityProfile>,
}

impl Default for FindCoreOptions {
    fn default() -> Self {
        FindCoreOptions {
            schedule: EpsilonSchedule::default(),
            maxden: 64,
            maxden_limit: 4096,
            tol: 1e-9,
            convergence_threshold: 1e-6,
            extension: 10,
            solver: SolverOptions::default(),
            utilities: None,
        }
    }
}

/// One relaxation of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub epsilon: f64,
    pub residual: f64,
    pub eta: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm distance to the previous symmetrized iterate.
    pub change: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// The rounded limit iterate.
    Rounded,
    /// The clearing allocation closest to demand at rounded limit prices.
    Cleared,
}

impl fmt::Display for CandidateSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateSource::Rounded => "rounded",
            CandidateSource::Cleared => "cleared",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub source: CandidateSource,
    pub maxden: u64,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakCoreReport {
    pub allocation: Allocation,
    pub utilities: UtilityProfile,
    pub source: CandidateSource,
    pub maxden: u64,
    pub stages: Vec<StageTrace>,
    /// The last step between iterates fell below the threshold.
    pub limit_converged: bool,
    /// Exact prices making the allocation a WE-slack with no relaxation.
    pub equilibrium: Option<PriceSystem>,
    pub ir: bool,
    pub ete: bool,
    pub membership: CoreMembershipReport,
    pub eene: bool,
    pub attempts: Vec<Attempt>,
}

struct Limit {
    x: Allocation<f64>,
    prices: Vec<f64>,
    alpha: f64,
}

fn max_norm(a: &Allocation<f64>, b: &Allocation<f64>) -> f64 {
    a.max_abs_diff(b)
}

fn run_schedule(e: &Economy, u: &UtilityProfile, schedule: &[f64], opts: &FindCoreOptions, start: Option<(Vec<f64>, f64)>, stages: &mut Vec<StageTrace>, prev: &mut Option<Allocation<f64>>) -> Option<Limit> {
    let mut start = start;
    let mut limit = None;
    let part = e.equal_class_partition();
    for (k, &eps) in schedule.iter().enumerate() {
        let solver = SolverOptions {
            tol: opts.tol,
            seed: opts.solver.seed.wrapping_add(k as u64),
            ..opts.solver.clone()
        };
        let we = search_we_slack(e, u, eps, &solver, start.clone());
        let y = symmetrize(&we.x, &part);
        let converged = we.residual <= opts.tol && we.eta <= solver.eta;
        stages.push(StageTrace {
            epsilon: eps,
            residual: we.residual,
            eta: we.eta,
            converged,
            iterations: we.iterations,
            change: prev.as_ref().map(|p| max_norm(p, &y)),
        });
        start = Some((we.prices.clone(), we.alpha));
        *prev = Some(y.clone());
        limit = Some(Limit {
            x: y,
            prices: we.prices,
            alpha: we.alpha,
        });
    }
    limit
}

fn verify(e: &Economy, x: &Allocation) -> Result<Option<CoreMembershipReport>, EquilibriumError> {
    let internal = |err: &dyn fmt::Display| EquilibriumError::Verification(err.to_string());
    if !is_ir(e, x).map_err(|err| internal(&err))? || !satisfies_ete(e, x).map_err(|err| internal(&err))? {
        return Ok(None);
    }
    let report = core_membership(e, x, CoreNotion::Weak, e.n()).map_err(|err| internal(&err))?;
    Ok(report.is_member().then_some(report))
}

fn rounded_prices(limit: &Limit, maxden: u64) -> Option<PriceSystem> {
    let prices: Vec<Rational> = limit.prices.iter().map(|p| best_rational(p.max(0.0), maxden)).collect::<Option<_>>()?;
    let alpha = best_rational(limit.alpha.max(0.0), maxden)?;
    PriceSystem::normalized(prices, alpha)
}

/// Weak-core allocation with equal treatment of equals, verified exactly.
///
/// Runs the price search along the schedule with warm starts, averages each
/// iterate over equal classes, and takes the final iterate as the limit.
/// Candidates are the rounded limit and the exact clearing allocation at
/// rounded limit prices, for each denominator bound from `maxden` to
/// `maxden_limit`; if none verifies, the schedule is extended once.
pub fn find_weak_core_ete(e: &Economy, opts: &FindCoreOptions) -> Result<WeakCoreReport, EquilibriumError> {
    let u = match &opts.utilities {
        Some(u) => {
            u.validate(e)?;
            u.clone()
        }
        None => default_utilities(e),
    };
    let part = e.equal_class_partition();
    let zero = Rational::zero();
    let mut stages = Vec::new();
    let mut attempts = Vec::new();
    let mut prev = None;
    let mut limit = run_schedule(e, &u, opts.schedule.values(), opts, None, &mut stages, &mut prev).expect("schedule is nonempty");
    let mut tried: Vec<Allocation> = Vec::new();
    for round in 0..2 {
        if round == 1 {
            if opts.extension == 0 {
                break;
            }
            let more: Vec<f64> = opts.schedule.extended(opts.extension).values()[opts.schedule.values().len()..].to_vec();
            let start = Some((limit.prices.clone(), limit.alpha));
            limit = run_schedule(e, &u, &more, opts, start, &mut stages, &mut prev).expect("extension is nonempty");
        }
        let limit_converged = stages.last().and_then(|s| s.change).is_some_and(|c| c <= opts.convergence_threshold);
        let mut maxden = opts.maxden.max(1);
        loop {
            let mut candidates = Vec::new();
            match rationalize(limit.x.rows(), maxden, &part) {
                Ok(x) => candidates.push((CandidateSource::Rounded, x)),
                Err(err) => attempts.push(Attempt {
                    source: CandidateSource::Rounded,
                    maxden,
                    outcome: err.to_string(),
                }),
            }
            if let Some(ps) = rounded_prices(&limit, maxden) {
                if let Some((x, _)) = cleared_allocation(e, &u, &ps, &zero) {
                    candidates.push((CandidateSource::Cleared, x));
                }
            }
            for (source, x) in candidates {
                if tried.contains(&x) {
                    continue;
                }
                let verdict = verify(e, &x)?;
                tried.push(x.clone());
                match verdict {
                    Some(membership) => {
                        attempts.push(Attempt {
                            source,
                            maxden,
                            outcome: "verified".into(),
                        });
                        let eene = satisfies_eene(e, &x).map_err(|err| EquilibriumError::Verification(err.to_string()))?;
                        return Ok(WeakCoreReport {
                            equilibrium: supporting_prices(e, &u, &x, &zero),
                            allocation: x,
                            utilities: u,
                            source,
                            maxden,
                            stages,
                            limit_converged,
                            ir: true,
                            ete: true,
                            membership,
                            eene,
                            attempts,
                        });
                    }
                    None => attempts.push(Attempt {
                        source,
                        maxden,
                        outcome: "rejected".into(),
                    }),
                }
            }
            if maxden >= opts.maxden_limit {
                break;
            }
            maxden = (maxden * 2).min(opts.maxden_limit);
        }
    }
    let last = stages.last().expect("schedule is nonempty");
    Err(EquilibriumError::Verification(format!(
        "{} candidates rejected; final stage epsilon {:e} residual {:e} eta {:e}",
        tried.len(),
        last.epsilon,
        last.residual,
        last.eta
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::{coalitions, find_blocking_coalition, BlockMode};
    use crate::equilibrium::budget_violations;
    use crate::fixtures;
    use crate::scalar::{ratio, Scalar};
    use crate::economy::EqualClassPartition;
    use crate::sampling::rng;
    use rand::Rng;

    #[test]
    fn schedule_validation() {
        assert!(EpsilonSchedule::new(vec![]).is_err());
        assert!(EpsilonSchedule::new(vec![0.5, 0.0]).is_err());
        assert!(EpsilonSchedule::new(vec![0.5, 0.5]).is_err());
        assert!(EpsilonSchedule::new(vec![f64::NAN]).is_err());
        assert_eq!(EpsilonSchedule::new(vec![0.5, 0.1]).unwrap().values(), &[0.5, 0.1]);
        let h = EpsilonSchedule::halving(3);
        assert_eq!(h.values(), &[0.5, 0.25, 0.125]);
        assert_eq!(h.extended(2).values(), EpsilonSchedule::halving(5).values());
        assert_eq!(EpsilonSchedule::default().values().len(), 20);
    }

    #[test]
    fn equal_division_of_two() {
        let e = fixtures::equal_division(2);
        let r = find_weak_core_ete(&e, &FindCoreOptions::default()).unwrap();
        assert!(r.allocation.rows().iter().all(|row| row == &vec![ratio(1, 2), ratio(1, 2)]));
        assert!(r.ir && r.ete && r.membership.is_member());
    }

    fn independently_verified(e: &Economy, r: &WeakCoreReport) {
        let x = &r.allocation;
        assert!(x.violations().is_empty());
        assert!(is_ir(e, x).unwrap());
        assert!(satisfies_ete(e, x).unwrap());
        assert!(find_blocking_coalition(e, x, BlockMode::Strong, e.n()).unwrap().certificate.is_none());
    }

    #[test]
    fn e1_weak_core() {
        let e = fixtures::e1();
        let r = find_weak_core_ete(&e, &FindCoreOptions::default()).unwrap();
        independently_verified(&e, &r);
        assert_eq!(r.attempts.last().unwrap().outcome, "verified");
    }

    #[test]
    fn e1_prime_weak_core_violates_eene() {
        let e = fixtures::e1_prime();
        let r = find_weak_core_ete(&e, &FindCoreOptions::default()).unwrap();
        independently_verified(&e, &r);
        assert!(!r.eene);
        assert!(!satisfies_eene(&e, &r.allocation).unwrap());
    }

    /// Random reshuffles of coalition endowments that raise every member's
    /// utility must overspend in total; the total is `−|S| α`, so none exist.
    #[test]
    fn improving_reshuffles_are_unaffordable() {
        let mut priced = 0;
        for e in [fixtures::e1(), fixtures::e1_prime()] {
            let r = find_weak_core_ete(&e, &FindCoreOptions::default()).unwrap();
            let Some(ps) = &r.equilibrium else { continue };
            priced += 1;
            let ef = e.to_f64();
            let uf = r.utilities.to_f64();
            let x = r.allocation.to_f64();
            let prices: Vec<f64> = ps.prices.iter().map(Scalar::to_f64).collect();
            let alpha = ps.alpha.to_f64();
            let mut rng = rng(7);
            for s in coalitions(e.n(), e.n()).filter(|s| s.len() >= 2) {
                let m = s.members();
                for _ in 0..200 {
                    // Row-stochastic weights, columns fixed by Sinkhorn rescaling.
                    let mut w: Vec<Vec<f64>> = m.iter().map(|_| m.iter().map(|_| rng.gen::<f64>() + 1e-3).collect()).collect();
                    for _ in 0..200 {
                        for row in w.iter_mut() {
                            let t: f64 = row.iter().sum();
                            row.iter_mut().for_each(|v| *v /= t);
                        }
                        for c in 0..m.len() {
                            let t: f64 = w.iter().map(|row| row[c]).sum();
                            w.iter_mut().for_each(|row| row[c] /= t);
                        }
                    }
                    let bundles: Vec<(usize, Vec<f64>)> = m
                        .iter()
                        .enumerate()
                        .map(|(a, &i)| (i, (0..e.n()).map(|o| m.iter().enumerate().map(|(b, &j)| w[a][b] * ef.endowment_row(j)[o]).sum()).collect()))
                        .collect();
                    let improving = bundles.iter().all(|(i, b)| uf.value(*i, b) > uf.value(*i, x.row(*i)) + 1e-9);
                    let total: f64 = budget_violations(&ef, &prices, alpha, &bundles).iter().sum();
                    assert!((total + m.len() as f64 * alpha).abs() < 1e-9);
                    assert!(!improving || total > 0.0, "coalition {m:?} improves at prices {prices:?}");
                }
            }
        }
        assert!(priced > 0);
    }

    #[test]
    fn symmetrize_keeps_columns() {
        let e = fixtures::e1();
        let part = EqualClassPartition::from_groups(vec![vec![0, 1], vec![2, 3]]);
        let y = symmetrize(e.endowment(), &part);
        for o in 0..e.n() {
            assert_eq!(y.column_sum(o), e.endowment().column_sum(o));
        }
        assert!(satisfies_ete(&e, &y).unwrap());
    }
}
