//! Linear programs with self-checking outcomes.
//!
//! [`solve`] runs a two-phase dense simplex with Bland's rule and returns an
//! [`LpOutcome`] that carries a certificate. [`check_certificate`] verifies
//! that certificate by substitution alone, without trusting the solver.
//!
//! Multipliers are always stated for the *maximization form* of the program
//! (a minimization of `c·x` is read as a maximization of `-c·x`). With that
//! convention a multiplier attached to a `≤` row or an upper bound is
//! nonnegative, one attached to a `≥` row or a lower bound is nonpositive,
//! and one attached to an `=` row is free.

mod simplex;

use std::fmt::{self, Write};

use crate::error::LpError;
use crate::scalar::Scalar;

pub use simplex::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<T>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn lhs(&self, x: &[T]) -> T {
        dot(&self.coeffs, x)
    }

    pub fn is_satisfied(&self, x: &[T]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => self.rhs.approx_ge(&lhs),
            Relation::Ge => lhs.approx_ge(&self.rhs),
            Relation::Eq => lhs.approx_eq(&self.rhs),
        }
    }
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Scalar> Default for Bound<T> {
    fn default() -> Self {
        Bound {
            lower: Some(T::zero()),
            upper: None,
        }
    }
}

/// `optimize objective·x` subject to linear rows and variable bounds.
/// Variables default to `x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    num_vars: usize,
    constraints: Vec<Constraint<T>>,
    objective: Vec<T>,
    sense: Sense,
    bounds: Vec<Bound<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            num_vars,
            constraints: Vec::new(),
            objective: vec![T::zero(); num_vars],
            sense,
            bounds: vec![Bound::default(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn bounds(&self) -> &[Bound<T>] {
        &self.bounds
    }

    pub fn set_sense(&mut self, sense: Sense) {
        self.sense = sense;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<T>, relation: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Adds `Σ coef·x[var] relation rhs` from `(var, coef)` terms; repeated
    /// variables accumulate.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], relation: Relation, rhs: T) {
        self.add_constraint(self.densify(terms), relation, rhs);
    }

    pub fn set_objective(&mut self, objective: Vec<T>) {
        assert_eq!(objective.len(), self.num_vars, "objective width");
        self.objective = objective;
    }

    pub fn set_objective_sparse(&mut self, terms: &[(usize, T)]) {
        self.objective = self.densify(terms);
    }

    pub fn set_bound(&mut self, var: usize, lower: Option<T>, upper: Option<T>) {
        self.bounds[var] = Bound { lower, upper };
    }

    fn densify(&self, terms: &[(usize, T)]) -> Vec<T> {
        let mut dense = vec![T::zero(); self.num_vars];
        for (var, coef) in terms {
            dense[*var] += coef;
        }
        dense
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        dot(&self.objective, x)
    }

    /// All rows and bounds hold at `x` (exactly, or up to tolerance for floats).
    pub fn is_feasible(&self, x: &[T]) -> bool {
        x.len() == self.num_vars
            && self.constraints.iter().all(|c| c.is_satisfied(x))
            && self.bounds.iter().zip(x).all(|(b, v)| {
                b.lower.as_ref().is_none_or(|l| v.approx_ge(l)) && b.upper.as_ref().is_none_or(|u| u.approx_ge(v))
            })
    }

    /// Objective coefficients of the maximization form.
    fn max_form_objective(&self) -> Vec<T> {
        match self.sense {
            Sense::Maximize => self.objective.clone(),
            Sense::Minimize => self.objective.iter().map(|c| -c.clone()).collect(),
        }
    }

    /// Plain-text dump for bug reports. Not a stable format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "maximize",
            Sense::Minimize => "minimize",
        };
        let _ = writeln!(out, "{sense} {}", join(&self.objective));
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "r{k}: {} {} {}", join(&c.coeffs), c.relation, c.rhs);
        }
        for (j, b) in self.bounds.iter().enumerate() {
            let lower = b.lower.as_ref().map_or("-inf".to_string(), |v| v.to_string());
            let upper = b.upper.as_ref().map_or("+inf".to_string(), |v| v.to_string());
            let _ = writeln!(out, "x{j} in [{lower}, {upper}]");
        }
        out
    }
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y)
}

/// Multipliers for every row and every finite bound, in the maximization form.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers<T> {
    pub rows: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    /// `value` is in the program's own sense; `dual` proves optimality.
    Optimal {
        value: T,
        point: Vec<T>,
        dual: Multipliers<T>,
    },
    /// `farkas` combines the rows into `0 ≤ negative`.
    Infeasible { farkas: Multipliers<T> },
    /// `point` is feasible and `ray` improves the objective without bound.
    Unbounded { point: Vec<T>, ray: Vec<T> },
}

impl<T> LpOutcome<T> {
    pub fn tag(&self) -> &'static str {
        match self {
            LpOutcome::Optimal { .. } => "Optimal",
            LpOutcome::Infeasible { .. } => "Infeasible",
            LpOutcome::Unbounded { .. } => "Unbounded",
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, LpOutcome::Infeasible { .. })
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[T]> {
        match self {
            LpOutcome::Optimal { point, .. } | LpOutcome::Unbounded { point, .. } => Some(point),
            LpOutcome::Infeasible { .. } => None,
        }
    }
}

fn check_multiplier_shape<T: Scalar>(lp: &LinearProgram<T>, m: &Multipliers<T>) -> Result<(), LpError> {
    if m.rows.len() != lp.constraints.len() || m.lower.len() != lp.num_vars || m.upper.len() != lp.num_vars {
        return Err(LpError::Dimension(format!(
            "multipliers {}/{}/{} for {} rows and {} variables",
            m.rows.len(),
            m.lower.len(),
            m.upper.len(),
            lp.constraints.len(),
            lp.num_vars
        )));
    }
    Ok(())
}

/// Sign conventions of the maximization form.
fn multiplier_signs_ok<T: Scalar>(lp: &LinearProgram<T>, m: &Multipliers<T>) -> bool {
    let rows_ok = lp.constraints.iter().zip(&m.rows).all(|(c, y)| match c.relation {
        Relation::Le => !y.is_neg(),
        Relation::Ge => !y.is_pos(),
        Relation::Eq => true,
    });
    let bounds_ok = lp.bounds.iter().zip(m.lower.iter().zip(&m.upper)).all(|(b, (lo, up))| {
        let lower_ok = if b.lower.is_some() { !lo.is_pos() } else { lo.is_negligible() };
        let upper_ok = if b.upper.is_some() { !up.is_neg() } else { up.is_negligible() };
        lower_ok && upper_ok
    });
    rows_ok && bounds_ok
}

/// `Σ_k y_k a_k + lower + upper`, one entry per variable.
fn combined_row<T: Scalar>(lp: &LinearProgram<T>, m: &Multipliers<T>) -> Vec<T> {
    (0..lp.num_vars)
        .map(|j| {
            lp.constraints
                .iter()
                .zip(&m.rows)
                .fold(m.lower[j].clone() + &m.upper[j], |acc, (c, y)| acc + y.clone() * &c.coeffs[j])
        })
        .collect()
}

/// `Σ_k y_k b_k + Σ_j lower_j l_j + Σ_j upper_j u_j`.
fn combined_rhs<T: Scalar>(lp: &LinearProgram<T>, m: &Multipliers<T>) -> T {
    let rows = lp
        .constraints
        .iter()
        .zip(&m.rows)
        .fold(T::zero(), |acc, (c, y)| acc + y.clone() * &c.rhs);
    lp.bounds
        .iter()
        .zip(m.lower.iter().zip(&m.upper))
        .fold(rows, |mut acc, (b, (lo, up))| {
            if let Some(l) = &b.lower {
                acc += lo.clone() * l;
            }
            if let Some(u) = &b.upper {
                acc += up.clone() * u;
            }
            acc
        })
}

/// Independently verifies `outcome` against `lp` using substitution and
/// duality identities only.
pub fn check_certificate<T: Scalar>(lp: &LinearProgram<T>, outcome: &LpOutcome<T>) -> Result<bool, LpError> {
    if lp.objective.len() != lp.num_vars || lp.constraints.iter().any(|c| c.coeffs.len() != lp.num_vars) {
        return Err(LpError::Dimension("malformed linear program".into()));
    }
    match outcome {
        LpOutcome::Optimal { value, point, dual } => {
            if point.len() != lp.num_vars {
                return Err(LpError::Dimension(format!(
                    "point has {} entries for {} variables",
                    point.len(),
                    lp.num_vars
                )));
            }
            check_multiplier_shape(lp, dual)?;
            if !lp.is_feasible(point) || !lp.objective_value(point).approx_eq(value) {
                return Ok(false);
            }
            let c = lp.max_form_objective();
            let stationary = combined_row(lp, dual).iter().zip(&c).all(|(a, b)| a.approx_eq(b));
            let max_value = match lp.sense {
                Sense::Maximize => value.clone(),
                Sense::Minimize => -value.clone(),
            };
            Ok(multiplier_signs_ok(lp, dual) && stationary && combined_rhs(lp, dual).approx_eq(&max_value))
        }
        LpOutcome::Infeasible { farkas } => {
            check_multiplier_shape(lp, farkas)?;
            let vanishes = combined_row(lp, farkas).iter().all(|v| v.is_negligible());
            Ok(multiplier_signs_ok(lp, farkas) && vanishes && combined_rhs(lp, farkas).is_neg())
        }
        LpOutcome::Unbounded { point, ray } => {
            if point.len() != lp.num_vars || ray.len() != lp.num_vars {
                return Err(LpError::Dimension("ray or point has the wrong length".into()));
            }
            if !lp.is_feasible(point) || !dot(&lp.max_form_objective(), ray).is_pos() {
                return Ok(false);
            }
            let rows_ok = lp.constraints.iter().all(|c| {
                let d = c.lhs(ray);
                match c.relation {
                    Relation::Le => !d.is_pos(),
                    Relation::Ge => !d.is_neg(),
                    Relation::Eq => d.is_negligible(),
                }
            });
            let bounds_ok = lp.bounds.iter().zip(ray).all(|(b, d)| {
                (b.lower.is_none() || !d.is_neg()) && (b.upper.is_none() || !d.is_pos())
            });
            Ok(rows_ok && bounds_ok)
        }
    }
}
