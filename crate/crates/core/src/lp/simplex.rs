//! Two-phase dense tableau simplex with Bland's rule.
//!
//! The original program is rewritten as `max c·y, A y = b, y ≥ 0, b ≥ 0`:
//! lower-bounded variables are shifted, free variables split, finite upper
//! bounds become rows, inequality rows get a slack or surplus column. Rows
//! whose slack cannot start in the basis get an artificial column. The
//! column that is basic for row `k` at the start is the `k`-th column of the
//! identity, so after any sequence of pivots it holds `B⁻¹ e_k`; duals and
//! Farkas vectors are read from those columns.

use super::{LinearProgram, LpOutcome, Multipliers, Relation};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum VarMap<T> {
    Shift { col: usize, lower: T },
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy)]
enum RowOrigin {
    Constraint(usize),
    Upper(usize),
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Reduced costs `c_j - c_B B⁻¹ A_j` for the current phase.
    reduced: Vec<T>,
    costs: Vec<T>,
    /// Columns at or past this index are artificial.
    art_start: usize,
}

impl<T: Scalar> Tableau<T> {
    fn set_costs(&mut self, costs: Vec<T>) {
        let ncols = costs.len();
        let mut reduced = costs.clone();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, d) in reduced.iter_mut().enumerate().take(ncols) {
                if !self.rows[r][j].is_zero() {
                    *d -= cb.clone() * &self.rows[r][j];
                }
            }
        }
        self.costs = costs;
        self.reduced = reduced;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let inv = T::one() / &self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[pr] *= &inv;
        self.rows[pr][pc] = T::one();
        let nz: Vec<usize> = (0..self.rows[pr].len()).filter(|&j| !self.rows[pr][j].is_zero()).collect();
        let pivot_row = self.rows[pr].clone();
        let pivot_rhs = self.rhs[pr].clone();
        for r in 0..self.rows.len() {
            if r == pr || self.rows[r][pc].is_zero() {
                continue;
            }
            let f = self.rows[r][pc].clone();
            let row = &mut self.rows[r];
            for &j in &nz {
                row[j] -= f.clone() * &pivot_row[j];
                chop(&mut row[j]);
            }
            row[pc] = T::zero();
            self.rhs[r] -= f * &pivot_rhs;
            chop(&mut self.rhs[r]);
        }
        if !self.reduced[pc].is_zero() {
            let f = self.reduced[pc].clone();
            for &j in &nz {
                self.reduced[j] -= f.clone() * &pivot_row[j];
                chop(&mut self.reduced[j]);
            }
            self.reduced[pc] = T::zero();
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland's rule to optimality. `Err(col)` reports an unbounded column.
    fn optimize(&mut self, allow_artificial: bool) -> Result<(), usize> {
        loop {
            let limit = if allow_artificial { self.reduced.len() } else { self.art_start };
            let Some(enter) = (0..limit).find(|&j| self.reduced[j].is_pos()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][enter];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Err(enter),
            }
        }
    }

    fn objective(&self) -> T {
        self.basis
            .iter()
            .zip(&self.rhs)
            .fold(T::zero(), |acc, (&b, v)| acc + self.costs[b].clone() * v)
    }

    /// `c_B B⁻¹`, using the recorded identity columns.
    fn row_prices(&self, identity_cols: &[usize]) -> Vec<T> {
        identity_cols
            .iter()
            .map(|&col| {
                self.basis
                    .iter()
                    .enumerate()
                    .fold(T::zero(), |acc, (r, &b)| acc + self.costs[b].clone() * &self.rows[r][col])
            })
            .collect()
    }

    fn basic_values(&self, ncols: usize) -> Vec<T> {
        let mut y = vec![T::zero(); ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            y[b] = self.rhs[r].clone();
        }
        y
    }
}

fn chop<T: Scalar>(v: &mut T) {
    if !T::EXACT && v.abs() < T::from_ratio(1, 1_000_000_000_000) {
        *v = T::zero();
    }
}

struct Standard<T> {
    vars: Vec<VarMap<T>>,
    origins: Vec<RowOrigin>,
    /// `true` where the row was multiplied by -1 to make its rhs nonnegative.
    negated: Vec<bool>,
    identity_cols: Vec<usize>,
    structural: usize,
}

/// Solves `lp` exactly (for rational scalars) and attaches a certificate.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> LpOutcome<T> {
    let mut vars = Vec::with_capacity(lp.num_vars());
    let mut structural = 0;
    for b in lp.bounds() {
        match &b.lower {
            Some(l) => {
                vars.push(VarMap::Shift {
                    col: structural,
                    lower: l.clone(),
                });
                structural += 1;
            }
            None => {
                vars.push(VarMap::Split {
                    pos: structural,
                    neg: structural + 1,
                });
                structural += 2;
            }
        }
    }

    // Rows over structural columns: (coeffs, relation, rhs, origin).
    let mut raw: Vec<(Vec<T>, Relation, T, RowOrigin)> = Vec::new();
    let expand = |coeffs: &[T], rhs: &T| -> (Vec<T>, T) {
        let mut row = vec![T::zero(); structural];
        let mut rhs = rhs.clone();
        for (j, a) in coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &vars[j] {
                VarMap::Shift { col, lower } => {
                    row[*col] = a.clone();
                    rhs -= a.clone() * lower;
                }
                VarMap::Split { pos, neg } => {
                    row[*pos] = a.clone();
                    row[*neg] = -a.clone();
                }
            }
        }
        (row, rhs)
    };
    for (k, c) in lp.constraints().iter().enumerate() {
        let (row, rhs) = expand(&c.coeffs, &c.rhs);
        raw.push((row, c.relation, rhs, RowOrigin::Constraint(k)));
    }
    for (j, b) in lp.bounds().iter().enumerate() {
        if let Some(u) = &b.upper {
            let mut unit = vec![T::zero(); lp.num_vars()];
            unit[j] = T::one();
            let (row, rhs) = expand(&unit, u);
            raw.push((row, Relation::Le, rhs, RowOrigin::Upper(j)));
        }
    }

    let m = raw.len();
    let slack_count = raw.iter().filter(|r| r.1 != Relation::Eq).count();
    let mut slack_of = vec![None; m];
    let mut next = structural;
    for (k, r) in raw.iter().enumerate() {
        if r.1 != Relation::Eq {
            slack_of[k] = Some(next);
            next += 1;
        }
    }
    let art_start = structural + slack_count;

    let mut negated = vec![false; m];
    let mut needs_art = vec![false; m];
    for (k, r) in raw.iter().enumerate() {
        negated[k] = r.2.is_neg();
        let slack_sign_positive = match r.1 {
            Relation::Le => !negated[k],
            Relation::Ge => negated[k],
            Relation::Eq => false,
        };
        needs_art[k] = !slack_sign_positive;
    }
    let art_count = needs_art.iter().filter(|&&b| b).count();
    let ncols = art_start + art_count;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut identity_cols = Vec::with_capacity(m);
    let mut origins = Vec::with_capacity(m);
    let mut next_art = art_start;
    for (k, (coeffs, rel, b, origin)) in raw.into_iter().enumerate() {
        let mut row = coeffs;
        row.resize(ncols, T::zero());
        if let Some(s) = slack_of[k] {
            row[s] = if rel == Relation::Le { T::one() } else { -T::one() };
        }
        let mut b = b;
        if negated[k] {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
            b = -b;
        }
        let start = if needs_art[k] {
            row[next_art] = T::one();
            next_art += 1;
            next_art - 1
        } else {
            slack_of[k].expect("slack basis")
        };
        basis.push(start);
        identity_cols.push(start);
        rows.push(row);
        rhs.push(b);
        origins.push(origin);
    }

    let std = Standard {
        vars,
        origins,
        negated,
        identity_cols,
        structural,
    };
    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        reduced: Vec::new(),
        costs: Vec::new(),
        art_start,
    };

    if art_count > 0 {
        let mut phase1 = vec![T::zero(); ncols];
        for c in phase1.iter_mut().skip(art_start) {
            *c = -T::one();
        }
        tab.set_costs(phase1);
        tab.optimize(true).expect("phase one is bounded");
        if tab.objective().is_neg() {
            let w = tab.row_prices(&std.identity_cols);
            let farkas = std.map_multipliers(lp, &w, None);
            return LpOutcome::Infeasible { farkas };
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| !tab.rows[r][j].is_negligible()) {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let c_max = match lp.sense() {
        super::Sense::Maximize => lp.objective().to_vec(),
        super::Sense::Minimize => lp.objective().iter().map(|c| -c.clone()).collect(),
    };
    let mut phase2 = vec![T::zero(); ncols];
    for (j, map) in std.vars.iter().enumerate() {
        match map {
            VarMap::Shift { col, .. } => phase2[*col] = c_max[j].clone(),
            VarMap::Split { pos, neg } => {
                phase2[*pos] = c_max[j].clone();
                phase2[*neg] = -c_max[j].clone();
            }
        }
    }
    tab.set_costs(phase2);
    match tab.optimize(false) {
        Ok(()) => {
            let y = tab.basic_values(ncols);
            let point = std.map_point(&y);
            let value = lp.objective_value(&point);
            let prices = tab.row_prices(&std.identity_cols);
            let dual = std.map_multipliers(lp, &prices, Some(&c_max));
            LpOutcome::Optimal { value, point, dual }
        }
        Err(enter) => {
            let y = tab.basic_values(ncols);
            let point = std.map_point(&y);
            let mut dir = vec![T::zero(); ncols];
            dir[enter] = T::one();
            for (r, &b) in tab.basis.iter().enumerate() {
                dir[b] = -tab.rows[r][enter].clone();
            }
            let ray = std.map_direction(&dir);
            LpOutcome::Unbounded { point, ray }
        }
    }
}

impl<T: Scalar> Standard<T> {
    fn map_point(&self, y: &[T]) -> Vec<T> {
        self.vars
            .iter()
            .map(|map| match map {
                VarMap::Shift { col, lower } => lower.clone() + &y[*col],
                VarMap::Split { pos, neg } => y[*pos].clone() - &y[*neg],
            })
            .collect()
    }

    fn map_direction(&self, d: &[T]) -> Vec<T> {
        debug_assert!(d.len() >= self.structural);
        self.vars
            .iter()
            .map(|map| match map {
                VarMap::Shift { col, .. } => d[*col].clone(),
                VarMap::Split { pos, neg } => d[*pos].clone() - &d[*neg],
            })
            .collect()
    }

    /// Translates standard-form row prices into original multipliers. Lower
    /// bound multipliers close the stationarity identity against `c_max`
    /// (or against zero for Farkas vectors).
    fn map_multipliers(&self, lp: &LinearProgram<T>, prices: &[T], c_max: Option<&[T]>) -> Multipliers<T> {
        let n = lp.num_vars();
        let mut rows = vec![T::zero(); lp.constraints().len()];
        let mut upper = vec![T::zero(); n];
        for (k, origin) in self.origins.iter().enumerate() {
            let v = if self.negated[k] { -prices[k].clone() } else { prices[k].clone() };
            match origin {
                RowOrigin::Constraint(c) => rows[*c] = v,
                RowOrigin::Upper(j) => upper[*j] = v,
            }
        }
        let lower = (0..n)
            .map(|j| {
                let combined = lp
                    .constraints()
                    .iter()
                    .zip(&rows)
                    .fold(upper[j].clone(), |acc, (c, y)| acc + y.clone() * &c.coeffs[j]);
                let target = c_max.map_or_else(T::zero, |c| c[j].clone());
                let v = target - combined;
                // Free columns force this to vanish; for floats only noise remains.
                if !T::EXACT && (lp.bounds()[j].lower.is_none() || v.is_negligible()) {
                    T::zero()
                } else {
                    v
                }
            })
            .collect();
        Multipliers { rows, lower, upper }
    }
}
