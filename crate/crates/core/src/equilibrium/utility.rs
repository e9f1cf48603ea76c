//! Cardinal utilities consistent with the ordinal preferences.

use num_traits::Zero;

use crate::economy::{parse_row, Economy};
use crate::error::EquilibriumError;
use crate::scalar::{Rational, Scalar};

/// `u[i][o]`, positive and strictly decreasing along each agent's order.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityProfile<T = Rational> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> UtilityProfile<T> {
    pub fn new_unchecked(rows: Vec<Vec<T>>) -> Self {
        UtilityProfile { rows }
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    /// Expected utility of a (sub-)assignment.
    pub fn value(&self, i: usize, x: &[T]) -> T {
        self.rows[i].iter().zip(x).fold(T::zero(), |acc, (u, v)| acc + u.clone() * v)
    }

    pub fn max_entry(&self) -> T {
        self.rows
            .iter()
            .flatten()
            .fold(T::zero(), |m, v| if *v > m { v.clone() } else { m })
    }
}

impl UtilityProfile<Rational> {
    pub fn to_f64(&self) -> UtilityProfile<f64> {
        UtilityProfile {
            rows: self.rows.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect(),
        }
    }

    /// Rank consistency, positivity and equal utilities within equal classes.
    pub fn validate(&self, e: &Economy) -> Result<(), EquilibriumError> {
        let n = e.n();
        if self.rows.len() != n || self.rows.iter().any(|r| r.len() != n) {
            return Err(EquilibriumError::Utility(format!("expected {n} rows of {n} entries")));
        }
        for i in 0..n {
            let order = e.pref(i).order();
            if let Some(o) = (0..n).find(|&o| self.rows[i][o] <= Rational::zero()) {
                return Err(EquilibriumError::Utility(format!("agent {} has non-positive utility for o_{}", i + 1, o + 1)));
            }
            if let Some(w) = order.windows(2).find(|w| self.rows[i][w[0]] <= self.rows[i][w[1]]) {
                return Err(EquilibriumError::Utility(format!(
                    "agent {} ranks o_{} above o_{} but utilities disagree",
                    i + 1,
                    w[0] + 1,
                    w[1] + 1
                )));
            }
        }
        for group in e.equal_class_partition().groups() {
            if let Some(&j) = group.iter().find(|&&j| self.rows[j] != self.rows[group[0]]) {
                return Err(EquilibriumError::Utility(format!("agents {} and {} are equals with different utilities", group[0] + 1, j + 1)));
            }
        }
        Ok(())
    }
}

/// `u_{i,o} = n + 1 − rank`, favorite first.
pub fn default_utilities(e: &Economy) -> UtilityProfile {
    let n = e.n();
    let rows = (0..n)
        .map(|i| (0..n).map(|o| Rational::from_usize(n - e.pref(i).rank(o))).collect())
        .collect();
    UtilityProfile { rows }
}

/// `n` lines of `n` positive rationals, validated against `e`.
pub fn parse_utilities(text: &str, e: &Economy) -> Result<UtilityProfile, EquilibriumError> {
    let rows: Vec<Vec<Rational>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_row(&l.split_whitespace().collect::<Vec<_>>().join(",")).ok_or_else(|| EquilibriumError::Utility(format!("bad row `{l}`"))))
        .collect::<Result<_, _>>()?;
    let u = UtilityProfile { rows };
    u.validate(e)?;
    Ok(u)
}
