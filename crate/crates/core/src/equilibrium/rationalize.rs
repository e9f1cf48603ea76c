//! Equal-class averaging and exact rounding of solver output.

use num_traits::{One, Signed, Zero};

use crate::economy::{Allocation, EqualClassPartition};
use crate::error::EquilibriumError;
use crate::scalar::{best_rational, Rational, Scalar};

/// Replaces every row by the average of its class's rows.
pub fn symmetrize<T: Scalar>(x: &Allocation<T>, part: &EqualClassPartition) -> Allocation<T> {
    let n = x.n();
    let mut out = x.clone();
    for group in part.groups() {
        if group.len() < 2 {
            continue;
        }
        let size = T::from_usize(group.len());
        let avg: Vec<T> = (0..n)
            .map(|o| group.iter().fold(T::zero(), |s, &i| s + x.get(i, o)) / size.clone())
            .collect();
        for &i in group {
            out.set_row(i, avg.clone());
        }
    }
    out
}

/// Rounds `m` to an exact allocation whose rows agree within each class.
///
/// Class rows are averaged, rounded to denominators at most `maxden`, then
/// repaired: each row's deficit or excess goes to its largest entries, and
/// column imbalances move mass between objects inside a single class.
pub fn rationalize(m: &[Vec<f64>], maxden: u64, part: &EqualClassPartition) -> Result<Allocation, EquilibriumError> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(EquilibriumError::Repair("matrix is not square".into()));
    }
    if let Some(v) = m.iter().flatten().find(|v| !v.is_finite() || **v < -0.5 || **v > 1.5) {
        return Err(EquilibriumError::Repair(format!("entry {v} is far outside [0,1]")));
    }
    if maxden == 0 {
        return Err(EquilibriumError::Repair("maximum denominator is zero".into()));
    }
    let groups = part.groups();
    let mut rows: Vec<Vec<Rational>> = groups
        .iter()
        .map(|g| {
            (0..n)
                .map(|o| {
                    let avg = g.iter().map(|&i| m[i][o]).sum::<f64>() / g.len() as f64;
                    best_rational(avg.clamp(0.0, 1.0), maxden).expect("finite and maxden positive")
                })
                .collect()
        })
        .collect();
    for row in rows.iter_mut() {
        repair_row(row);
    }
    let sizes: Vec<Rational> = groups.iter().map(|g| Rational::from_usize(g.len())).collect();
    let mut deficit: Vec<Rational> = (0..n)
        .map(|o| Rational::one() - rows.iter().zip(&sizes).fold(Rational::zero(), |s, (r, k)| s + &r[o] * k))
        .collect();
    // Each transfer zeroes a deficit, an excess, or a class entry.
    while let Some(plus) = deficit.iter().position(Signed::is_positive) {
        let minus = deficit.iter().position(Signed::is_negative).expect("deficits sum to zero");
        let (class, mass) = rows
            .iter()
            .zip(&sizes)
            .map(|(r, k)| &r[minus] * k)
            .enumerate()
            .max_by(|a, b| a.1.cmp(&b.1))
            .expect("at least one class");
        debug_assert!(mass.is_positive(), "an over-full column has positive mass");
        let delta = deficit[plus].clone().min(-deficit[minus].clone()).min(mass);
        let share = &delta / &sizes[class];
        rows[class][minus] -= &share;
        rows[class][plus] += &share;
        deficit[plus] -= &delta;
        deficit[minus] += &delta;
    }
    let mut out = vec![Vec::new(); n];
    for (g, row) in groups.iter().zip(rows) {
        for &i in g {
            out[i] = row.clone();
        }
    }
    let p = Allocation::new_unchecked(out);
    debug_assert!(p.violations().is_empty());
    Ok(p)
}

/// Brings an entrywise `[0,1]` row to sum exactly one.
fn repair_row(row: &mut [Rational]) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].cmp(&row[a]).then(a.cmp(&b)));
    let mut gap = Rational::one() - row.iter().fold(Rational::zero(), |s, v| s + v);
    for &o in &order {
        if gap.is_zero() {
            break;
        }
        let change = if gap.is_positive() {
            gap.clone().min(Rational::one() - &row[o])
        } else {
            -(-gap.clone()).min(row[o].clone())
        };
        row[o] += &change;
        gap -= change;
    }
    debug_assert!(gap.is_zero(), "n entries in [0,1] can reach any sum in [0,n]");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn singletons(n: usize) -> EqualClassPartition {
        EqualClassPartition::from_groups((0..n).map(|i| vec![i]).collect())
    }

    #[test]
    fn averaging_classes() {
        let x = Allocation::new_unchecked(vec![vec![ratio(1, 1), ratio(0, 1)], vec![ratio(0, 1), ratio(1, 1)]]);
        let both = EqualClassPartition::from_groups(vec![vec![0, 1]]);
        let y = symmetrize(&x, &both);
        assert!(y.rows().iter().all(|r| r == &vec![ratio(1, 2), ratio(1, 2)]));
        assert_eq!(symmetrize(&x, &singletons(2)), x);
        assert_eq!(symmetrize(&y, &both), y);
    }

    #[test]
    fn rounding_examples() {
        let r = rationalize(&[vec![0.4999999, 0.5000001], vec![0.5, 0.5]], 64, &singletons(2)).unwrap();
        assert_eq!(r.get(0, 0), &ratio(1, 2));
        let exact = Allocation::new_unchecked(vec![vec![ratio(1, 3), ratio(2, 3)], vec![ratio(2, 3), ratio(1, 3)]]);
        assert_eq!(rationalize(exact.to_f64().rows(), 64, &singletons(2)).unwrap(), exact);
    }

    #[test]
    fn quarter_repair() {
        let m = vec![
            vec![0.26, 0.24, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.24, 0.26, 0.25, 0.25],
        ];
        let r = rationalize(&m, 4, &singletons(4)).unwrap();
        assert!(r.violations().is_empty());
        assert!(r.rows().iter().flatten().all(|v| (v * ratio(4, 1)).is_integer()));
    }

    #[test]
    fn repairs_columns_inside_classes() {
        // Rows sum to one but columns are off by 1/8 after rounding.
        let m = vec![vec![0.6, 0.4, 0.0], vec![0.6, 0.4, 0.0], vec![0.02, 0.1, 0.88]];
        let part = EqualClassPartition::from_groups(vec![vec![0, 1], vec![2]]);
        let r = rationalize(&m, 8, &part).unwrap();
        assert!(r.violations().is_empty());
        assert_eq!(r.row(0), r.row(1));
    }

    #[test]
    fn rejects_garbage() {
        assert!(rationalize(&[vec![f64::NAN]], 8, &singletons(1)).is_err());
        assert!(rationalize(&[vec![3.0]], 8, &singletons(1)).is_err());
        assert!(rationalize(&[vec![1.0]], 0, &singletons(1)).is_err());
    }
}
