use fhm_core::equilibrium::{cleared_allocation, consumption_constraints, default_utilities, demand, demand_lp, indirect_utility, symmetrize, budget_constraint, PriceSystem};
use fhm_core::dominance::is_ir;
use fhm_core::sampling::{random_doubly_stochastic, random_economy, rng, EconomyOptions};
use fhm_core::{solve, Economy, LpOutcome, Rational};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::Rng;

fn small(r: &mut impl Rng, d: i64) -> Rational {
    Rational::new(BigInt::from(r.gen_range(0..=d)), BigInt::from(d))
}

fn setup(seed: u64, n: usize) -> (Economy, PriceSystem, Rational) {
    let mut r = rng(seed);
    let e = random_economy(&mut r, n, &EconomyOptions::default());
    let ps = loop {
        let prices = (0..n).map(|_| small(&mut r, 6)).collect();
        if let Some(ps) = PriceSystem::normalized(prices, small(&mut r, 4)) {
            break ps;
        }
    };
    let eps = Rational::new(BigInt::from(r.gen_range(0..=2)), BigInt::from(8));
    (e, ps, eps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn demand_is_in_budget_and_optimal(seed in any::<u64>(), n in 1usize..=4) {
        let (e, ps, eps) = setup(seed, n);
        let u = default_utilities(&e);
        for i in 0..n {
            let x = demand(&e, &u, i, &ps.prices, &ps.alpha, &eps);
            for c in consumption_constraints(&e, i, &eps) {
                prop_assert!(c.is_satisfied(&x));
            }
            prop_assert!(budget_constraint(&e, i, &ps.prices, &ps.alpha).is_satisfied(&x));
            prop_assert!(x.iter().all(|v| *v >= Rational::from_integer(0.into())));
            prop_assert_eq!(u.value(i, &x), indirect_utility(&e, &u, i, &ps.prices, &ps.alpha, &eps));
        }
    }

    #[test]
    fn averaging_optimal_rows_stays_optimal(seed in any::<u64>(), n in 1usize..=4) {
        let (e, ps, eps) = setup(seed, n);
        let u = default_utilities(&e);
        for i in 0..n {
            let lp = demand_lp(&e, &u, i, &ps.prices, &ps.alpha, &eps);
            let LpOutcome::Optimal { value, point, .. } = solve(&lp) else { panic!("demand LP is bounded and feasible") };
            let tie_broken = demand(&e, &u, i, &ps.prices, &ps.alpha, &eps);
            let half = Rational::new(1.into(), 2.into());
            let avg: Vec<Rational> = point.iter().zip(&tie_broken).map(|(a, b)| (a + b) * &half).collect();
            prop_assert!(lp.is_feasible(&avg));
            prop_assert_eq!(lp.objective_value(&avg), value);
        }
    }

    #[test]
    fn symmetrize_preserves_columns(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let e = random_economy(&mut r, n, &EconomyOptions { group_prob: 0.6, ..EconomyOptions::default() });
        let x = random_doubly_stochastic(&mut r, n, 6);
        let y = symmetrize(&x, &e.equal_class_partition());
        for o in 0..n {
            prop_assert_eq!(y.column_sum(o), x.column_sum(o));
        }
        prop_assert!(fhm_core::dominance::satisfies_ete(&e, &y).unwrap());
    }

    #[test]
    fn exact_clearing_without_relaxation_is_ir(seed in any::<u64>(), n in 1usize..=4) {
        let (e, ps, _) = setup(seed, n);
        let u = default_utilities(&e);
        if let Some((x, _)) = cleared_allocation(&e, &u, &ps, &Rational::from_integer(0.into())) {
            prop_assert!(x.violations().is_empty());
            prop_assert!(is_ir(&e, &x).unwrap());
        }
    }
}
