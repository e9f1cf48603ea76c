mod common;

use fhm_core::dominance::{cum, is_ir, is_sd_efficient, satisfies_eene, satisfies_ete, strict_sd, weak_sd, Efficiency};
use fhm_core::equilibrium::symmetrize;
use fhm_core::sampling::{random_doubly_stochastic, random_economy, random_preference, rng, EconomyOptions};
use fhm_core::{EqualClassPartition, Rational};
use proptest::prelude::*;

/// Groups agents by endowment row alone.
fn endowment_classes(e: &fhm_core::Economy) -> EqualClassPartition {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..e.n() {
        match groups.iter_mut().find(|g| e.endowment_row(g[0]) == e.endowment_row(i)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    EqualClassPartition::from_groups(groups)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sd_is_a_partial_order(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = rng(seed);
        let pref = random_preference(&mut r, n);
        let rows = random_doubly_stochastic(&mut r, 3.max(n), 4).rows().to_vec();
        let (a, b, c) = (&rows[0][..n], &rows[1][..n], &rows[2 % rows.len()][..n]);
        let sd = |x: &[Rational], y: &[Rational]| weak_sd(&pref, x, y).unwrap();
        prop_assert!(sd(a, a));
        prop_assert_eq!(sd(a, b), common::weakly(pref.order(), a, b));
        if sd(a, b) && sd(b, c) {
            prop_assert!(sd(a, c));
        }
        if sd(a, b) && sd(b, a) {
            prop_assert_eq!(cum(&pref, a).unwrap(), cum(&pref, b).unwrap());
        }
        if strict_sd(&pref, a, b).unwrap() {
            prop_assert!(sd(a, b) && !sd(b, a));
        }
    }

    #[test]
    fn eene_implies_ete(seed in any::<u64>(), n in 2usize..=5, average in any::<bool>()) {
        let mut r = rng(seed);
        let e = random_economy(&mut r, n, &EconomyOptions { group_prob: 0.6, ..EconomyOptions::default() });
        let mut p = random_doubly_stochastic(&mut r, n, 6);
        if average {
            p = symmetrize(&p, &endowment_classes(&e));
        }
        if satisfies_eene(&e, &p).unwrap() {
            prop_assert!(satisfies_ete(&e, &p).unwrap());
        }
    }

    #[test]
    fn endowment_is_ir(seed in any::<u64>(), n in 1usize..=6) {
        let e = random_economy(&mut rng(seed), n, &EconomyOptions::default());
        prop_assert!(is_ir(&e, &e.endowment_allocation()).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sd_efficiency_agrees_with_quarter_grid(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let e = random_economy(&mut r, n, &EconomyOptions { max_denominator: 4, ..EconomyOptions::default() });
        let p = random_doubly_stochastic(&mut r, n, 4);
        let verdict = is_sd_efficient(&e, &p).unwrap();
        if let Efficiency::Dominated(q) = &verdict {
            prop_assert!(q.violations().is_empty());
            prop_assert!((0..n).all(|i| common::weakly(e.pref(i).order(), q.row(i), p.row(i))));
            prop_assert!((0..n).any(|i| common::strictly(e.pref(i).order(), q.row(i), p.row(i))));
        }
        if common::grid_dominator(&e, &p, 4).is_some() {
            prop_assert!(matches!(verdict, Efficiency::Dominated(_)));
        }
    }
}
