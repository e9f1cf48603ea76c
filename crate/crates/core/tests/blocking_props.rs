mod common;

use fhm_core::blocking::{block_lp, coalitions, find_blocking_coalition, strong_block_lp, weak_block_lp, BlockMode, Coalition};
use fhm_core::sampling::{random_doubly_stochastic, random_economy, random_preference, rng, EconomyOptions};
use fhm_core::{Allocation, Economy, Rational};
use proptest::prelude::*;
use rand::Rng;

fn independently_blocks(e: &Economy, p: &Allocation, s: &Coalition, mode: BlockMode, rows: &[Vec<Rational>]) -> bool {
    let members = s.members();
    let feasible = (0..e.n()).all(|o| {
        let supply: Rational = members.iter().map(|&i| e.endowment_row(i)[o].clone()).sum();
        let used: Rational = rows.iter().map(|r| r[o].clone()).sum();
        supply == used
    });
    let weak: Vec<bool> = members.iter().zip(rows).map(|(&i, r)| common::weakly(e.pref(i).order(), r, p.row(i))).collect();
    let strict: Vec<bool> = members.iter().zip(rows).map(|(&i, r)| common::strictly(e.pref(i).order(), r, p.row(i))).collect();
    let nonneg = rows.iter().flatten().all(|v| *v >= Rational::from_integer(0.into()));
    feasible
        && nonneg
        && match mode {
            BlockMode::Weak => weak.iter().all(|&b| b) && strict.iter().any(|&b| b),
            BlockMode::Strong => strict.iter().all(|&b| b),
        }
}

/// Economy and allocation both on the `1/8` grid.
fn eighth_grid(seed: u64, n: usize) -> (Economy, Allocation) {
    let mut r = rng(seed);
    let prefs = (0..n).map(|_| random_preference(&mut r, n)).collect();
    let cells = common::grid_allocations(n, 8);
    let w = cells[r.gen_range(0..cells.len())].clone();
    let p = if r.gen_bool(0.3) { w.clone() } else { cells[r.gen_range(0..cells.len())].clone() };
    (Economy::new_unchecked(prefs, w), p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificates_reverify(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let e = random_economy(&mut r, n, &EconomyOptions::default());
        let p = random_doubly_stochastic(&mut r, n, 6);
        for s in coalitions(n, n).filter(|s| s.len() >= 2) {
            let weak = weak_block_lp(&e, &p, &s).unwrap();
            let strong = strong_block_lp(&e, &p, &s).unwrap();
            for (mode, cert) in [(BlockMode::Weak, &weak), (BlockMode::Strong, &strong)] {
                if let Some(c) = cert {
                    prop_assert_eq!(c.mode, mode);
                    prop_assert!(c.verify(&e, &p).is_ok());
                    prop_assert!(independently_blocks(&e, &p, &s, mode, &c.rows));
                }
            }
            if strong.is_some() {
                prop_assert!(weak.is_some());
            }
        }
    }

    #[test]
    fn larger_searches_keep_certificates(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let e = random_economy(&mut r, n, &EconomyOptions::default());
        let p = random_doubly_stochastic(&mut r, n, 6);
        for mode in [BlockMode::Weak, BlockMode::Strong] {
            for k in 1..n {
                if find_blocking_coalition(&e, &p, mode, k).unwrap().certificate.is_some() {
                    prop_assert!(find_blocking_coalition(&e, &p, mode, k + 1).unwrap().certificate.is_some());
                }
            }
        }
    }

    #[test]
    fn grid_blocks_are_found(seed in any::<u64>(), n in 2usize..=3) {
        let (e, p) = eighth_grid(seed, n);
        for s in coalitions(n, n).filter(|s| s.len() >= 2) {
            for mode in [BlockMode::Weak, BlockMode::Strong] {
                let lp = block_lp(&e, &p, &s, mode).unwrap();
                if common::grid_block(&e, &p, s.members(), mode, 8).unwrap() {
                    prop_assert!(lp.is_some(), "{mode} block of {:?} missed", s.members());
                }
            }
        }
    }
}
