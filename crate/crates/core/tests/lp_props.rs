use fhm_core::sampling::{random_lp, rng};
use fhm_core::{check_certificate, solve, LpOutcome};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_outcome_certifies(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed), 12, 16);
        let out = solve(&lp);
        prop_assert!(check_certificate(&lp, &out).unwrap(), "{}", lp.dump());
        if let LpOutcome::Optimal { point, value, .. } = &out {
            prop_assert!(lp.is_feasible(point));
            prop_assert_eq!(&lp.objective_value(point), value);
        }
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed), 8, 10);
        prop_assert_eq!(solve(&lp), solve(&lp));
    }
}
