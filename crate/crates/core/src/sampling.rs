//! Seeded random economies, allocations and linear programs.
//!
//! Doubly stochastic matrices come from alternating row/column scaling of a
//! sparse positive matrix, followed by flooring to a common denominator and
//! a northwest-corner repair of the row and column deficits, so every sample
//! is exact.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::economy::{Allocation, Economy, Preference};
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::membership::{ConstraintSet, Functional};
use crate::scalar::Rational;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_preference(rng: &mut SampleRng, n: usize) -> Preference {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    Preference::new_unchecked(order)
}

/// Nonnegative integer matrix with the given row and column sums.
/// `zero_prob` thins the support before scaling; a random permutation
/// keeps it feasible.
pub fn transport_matrix(rng: &mut SampleRng, rows: &[u64], cols: &[u64], zero_prob: f64) -> Vec<Vec<u64>> {
    let (m, n) = (rows.len(), cols.len());
    debug_assert_eq!(rows.iter().sum::<u64>(), cols.iter().sum::<u64>());
    let mut x: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| if rng.gen_bool(zero_prob) { 0.0 } else { rng.gen_range(0.05..1.0) }).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    for i in 0..m {
        x[i][perm[i % n]] += 0.5;
    }
    for _ in 0..200 {
        for (i, row) in x.iter_mut().enumerate() {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v *= rows[i] as f64 / s);
            }
        }
        for j in 0..n {
            let s: f64 = x.iter().map(|r| r[j]).sum();
            if s > 0.0 {
                x.iter_mut().for_each(|r| r[j] *= cols[j] as f64 / s);
            }
        }
    }
    // Capped flooring: no row or column exceeds its target, so the
    // remaining deficits balance.
    let mut row_def = rows.to_vec();
    let mut col_def = cols.to_vec();
    let mut out = vec![vec![0u64; n]; m];
    for i in 0..m {
        for j in 0..n {
            let t = (x[i][j].max(0.0).floor() as u64).min(row_def[i]).min(col_def[j]);
            out[i][j] = t;
            row_def[i] -= t;
            col_def[j] -= t;
        }
    }
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let t = row_def[i].min(col_def[j]);
        out[i][j] += t;
        row_def[i] -= t;
        col_def[j] -= t;
        if row_def[i] == 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

fn scaled(row: &[u64], denom: u64) -> Vec<Rational> {
    row.iter().map(|&v| Rational::new(BigInt::from(v), BigInt::from(denom))).collect()
}

/// Doubly stochastic with entries on the grid `1/d`, `d ≤ max_denominator`.
pub fn random_doubly_stochastic(rng: &mut SampleRng, n: usize, max_denominator: u64) -> Allocation {
    let d = rng.gen_range(1..=max_denominator.max(1));
    let m = transport_matrix(rng, &vec![d; n], &vec![d; n], 0.4);
    Allocation::new_unchecked(m.iter().map(|r| scaled(r, d)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyOptions {
    pub max_denominator: u64,
    /// Chance that an agent shares the previous agent's endowment row.
    pub group_prob: f64,
    /// Chance that a grouped agent also copies the preference.
    pub same_pref_prob: f64,
    pub zero_prob: f64,
}

impl Default for EconomyOptions {
    fn default() -> Self {
        EconomyOptions {
            max_denominator: 8,
            group_prob: 0.3,
            same_pref_prob: 0.7,
            zero_prob: 0.4,
        }
    }
}

/// Random valid economy; grouped agents share endowment rows exactly.
pub fn random_economy(rng: &mut SampleRng, n: usize, opts: &EconomyOptions) -> Economy {
    let mut group_of = vec![0usize; n];
    let mut sizes: Vec<u64> = vec![1];
    for g in group_of.iter_mut().skip(1) {
        if rng.gen_bool(opts.group_prob) {
            *sizes.last_mut().expect("one group exists") += 1;
        } else {
            sizes.push(1);
        }
        *g = sizes.len() - 1;
    }
    let d = rng.gen_range(1..=opts.max_denominator.max(1));
    let row_targets: Vec<u64> = sizes.iter().map(|s| s * d).collect();
    let class_rows = transport_matrix(rng, &row_targets, &vec![d; n], opts.zero_prob);
    let mut prefs: Vec<Preference> = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let g = group_of[i];
        rows.push(scaled(&class_rows[g], sizes[g] * d));
        let copy = i > 0 && group_of[i - 1] == g && rng.gen_bool(opts.same_pref_prob);
        prefs.push(if copy { prefs[i - 1].clone() } else { random_preference(rng, n) });
    }
    let e = Economy::new_unchecked(prefs, Allocation::new_unchecked(rows));
    debug_assert!(e.validate().is_empty());
    e
}

/// Random preferences over a random permutation endowment.
pub fn random_integral_market(rng: &mut SampleRng, n: usize) -> Economy {
    let prefs = (0..n).map(|_| random_preference(rng, n)).collect();
    let mut owns: Vec<usize> = (0..n).collect();
    owns.shuffle(rng);
    Economy::new_unchecked(prefs, Allocation::from_permutation(&owns))
}

/// A point of `c`: the midpoint of two LP vertices for random objectives.
/// `None` when `c` is empty.
pub fn random_polytope_point(rng: &mut SampleRng, c: &ConstraintSet) -> Option<Allocation> {
    let n = c.n();
    let vertex = |rng: &mut SampleRng| {
        let f = Functional {
            terms: (0..n)
                .flat_map(|i| (0..n).map(move |o| (i, o)))
                .map(|(i, o)| (i, o, Rational::from_integer(BigInt::from(rng.gen_range(-5i64..=5)))))
                .collect(),
        };
        match crate::lp::solve(&c.to_lp(Sense::Maximize, &f)) {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    };
    let a = vertex(rng)?;
    let b = vertex(rng)?;
    let w = Rational::new(BigInt::from(rng.gen_range(0..=4)), BigInt::from(4));
    let mid: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| &w * x + (Rational::from_integer(1.into()) - &w) * y).collect();
    Some(Allocation::new_unchecked(mid.chunks(n).map(|r| r.to_vec()).collect()))
}

fn small_rational(rng: &mut SampleRng, span: i64) -> Rational {
    let d = rng.gen_range(1..=4i64);
    Rational::new(BigInt::from(rng.gen_range(-span..=span)), BigInt::from(d))
}

/// Random LP with up to `max_vars` variables and `max_cons` constraints,
/// mixing relations, senses, bounds and free variables. Half the instances
/// plant a point inside the bounds and choose right-hand sides it satisfies.
pub fn random_lp(rng: &mut SampleRng, max_vars: usize, max_cons: usize) -> LinearProgram<Rational> {
    let m = rng.gen_range(1..=max_vars);
    let k = rng.gen_range(0..=max_cons);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(m, sense);
    let planted = rng.gen_bool(0.5);
    let mut point = Vec::with_capacity(m);
    for v in 0..m {
        let offset = Rational::from_integer(BigInt::from(rng.gen_range(0..=2)));
        let x = match rng.gen_range(0..8) {
            0 => {
                lp.set_bound(v, None, None);
                small_rational(rng, 3)
            }
            1 => {
                let lo = small_rational(rng, 3);
                lp.set_bound(v, Some(lo.clone()), None);
                lo + offset
            }
            2 => {
                let lo = small_rational(rng, 3);
                let hi = &lo + Rational::from_integer(BigInt::from(rng.gen_range(0..=4)));
                lp.set_bound(v, Some(lo.clone()), Some(hi.clone()));
                if rng.gen_bool(0.5) { lo } else { hi }
            }
            3 => {
                let hi = small_rational(rng, 3);
                lp.set_bound(v, None, Some(hi.clone()));
                hi - offset
            }
            _ => offset,
        };
        point.push(x);
    }
    let density = rng.gen_range(0.2..0.9);
    for _ in 0..k {
        let coeffs: Vec<Rational> = (0..m)
            .map(|_| if rng.gen_bool(density) { small_rational(rng, 6) } else { Rational::zero() })
            .collect();
        let relation = match rng.gen_range(0..6) {
            0..=2 => Relation::Le,
            3 | 4 => Relation::Ge,
            _ => Relation::Eq,
        };
        let rhs = if planted {
            let lhs = coeffs.iter().zip(&point).fold(Rational::zero(), |s, (a, x)| s + a * x);
            let slack = Rational::from_integer(BigInt::from(rng.gen_range(0..=3)));
            match relation {
                Relation::Le => lhs + slack,
                Relation::Ge => lhs - slack,
                Relation::Eq => lhs,
            }
        } else {
            small_rational(rng, 10)
        };
        lp.add_constraint(coeffs, relation, rhs);
    }
    lp.set_objective((0..m).map(|_| small_rational(rng, 5)).collect());
    lp
}
