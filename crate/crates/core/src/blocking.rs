//! Coalitional blocking by reallocating the coalition's own endowments.
//!
//! Only coalition rows enter the LPs; outside agents keep their endowments,
//! which completes any coalition reallocation to a full allocation.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::dominance::{cum, solve_checked, strict_sd, weak_sd};
use crate::economy::{format_row, Allocation, Economy};
use crate::error::BlockingError;
use crate::lp::{LinearProgram, LpOutcome, Relation, Sense};
use crate::scalar::Rational;

/// Sorted set of distinct 0-based agent indices, displayed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(Vec<usize>);

impl Coalition {
    /// Validates and sorts; blocking needs at least two members.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self, BlockingError> {
        members.sort_unstable();
        if let Some(&i) = members.iter().find(|&&i| i >= n) {
            return Err(BlockingError::OutOfRange(i));
        }
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(BlockingError::Duplicate(w[0]));
        }
        if members.len() < 2 {
            return Err(BlockingError::Singleton);
        }
        Ok(Coalition(members))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.0.binary_search(&agent).is_ok()
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Coalitions of size `2..=max_size` by size, then lexicographically.
pub fn coalitions(n: usize, max_size: usize) -> impl Iterator<Item = Coalition> {
    (2..=max_size.min(n)).flat_map(move |k| Combinations::new(n, k).map(Coalition))
}

struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // Rightmost position that can still advance.
        match (0..k).rev().find(|&j| next[j] < self.n - k + j) {
            Some(j) => {
                next[j] += 1;
                for l in j + 1..k {
                    next[l] = next[l - 1] + 1;
                }
                self.current = Some(next);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockMode {
    /// Everyone weakly better, someone strictly.
    Weak,
    /// Everyone strictly better.
    Strong,
}

impl fmt::Display for BlockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockMode::Weak => "weak",
            BlockMode::Strong => "strong",
        })
    }
}

/// Coalition reallocation witnessing a block of `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCertificate {
    pub coalition: Coalition,
    pub mode: BlockMode,
    /// One row per member, in coalition order.
    pub rows: Vec<Vec<Rational>>,
    /// `slacks[k][t] = cum(p′)_t − cum(p)_t` for member `k`, prefix `t + 1`.
    pub slacks: Vec<Vec<Rational>>,
}

impl BlockCertificate {
    /// Direct substitution check of feasibility, slacks and the mode's dominance.
    pub fn verify(&self, e: &Economy, p: &Allocation) -> Result<(), String> {
        let n = e.n();
        let members = self.coalition.members();
        if self.rows.len() != members.len() || self.slacks.len() != members.len() {
            return Err("row count differs from coalition size".into());
        }
        for o in 0..n {
            let supply: Rational = members.iter().map(|&i| &e.endowment_row(i)[o]).sum();
            let used: Rational = self.rows.iter().map(|r| &r[o]).sum();
            if supply != used {
                return Err(format!("column {} uses {used} of {supply}", crate::economy::object_name(o)));
            }
        }
        let mut strict = 0;
        for (k, &i) in members.iter().enumerate() {
            let row = &self.rows[k];
            if row.len() != n || row.iter().any(|x| x.is_negative()) || row.iter().sum::<Rational>() != Rational::one() {
                return Err(format!("row for agent {} is not an assignment", i + 1));
            }
            let (new, old) = (cum(e.pref(i), row).map_err(|x| x.to_string())?, cum(e.pref(i), p.row(i)).map_err(|x| x.to_string())?);
            let diff: Vec<Rational> = new.0.iter().zip(&old.0).map(|(a, b)| a - b).collect();
            if diff != self.slacks[k] {
                return Err(format!("slack table for agent {} is wrong", i + 1));
            }
            if !weak_sd(e.pref(i), row, p.row(i)).map_err(|x| x.to_string())? {
                return Err(format!("agent {} is worse off", i + 1));
            }
            if strict_sd(e.pref(i), row, p.row(i)).map_err(|x| x.to_string())? {
                strict += 1;
            }
        }
        match self.mode {
            BlockMode::Weak if strict == 0 => Err("no member strictly improves".into()),
            BlockMode::Strong if strict < members.len() => Err("some member does not strictly improve".into()),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for BlockCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "coalition {}", self.coalition)?;
        writeln!(f, "mode {}", self.mode)?;
        for (k, &i) in self.coalition.members().iter().enumerate() {
            writeln!(f, "row {}: {}", i + 1, format_row(&self.rows[k]))?;
        }
        for (k, &i) in self.coalition.members().iter().enumerate() {
            writeln!(f, "slack {}: {}", i + 1, format_row(&self.slacks[k]))?;
        }
        Ok(())
    }
}

/// Reduced coalition LP: a member's variables stop at the first prefix
/// where they already hold full mass, and objects the coalition does not
/// own get no variables.
struct CoalitionLp {
    lp: LinearProgram<Rational>,
    /// `(member, object)` for each variable.
    vars: Vec<(usize, usize)>,
    /// Per member: objective terms summing their open prefixes.
    prefix_terms: Vec<Vec<(usize, Rational)>>,
    /// Per member: Σ of `cum(p_i)` over the open prefixes.
    baselines: Vec<Rational>,
}

fn check_inputs(e: &Economy, p: &Allocation, s: &Coalition) -> Result<(), BlockingError> {
    let n = e.n();
    if p.n() != n {
        return Err(crate::error::DominanceError::Dimension { expected: n, found: p.n() }.into());
    }
    Coalition::new(s.members().to_vec(), n).map(|_| ())
}

fn build(e: &Economy, p: &Allocation, s: &Coalition) -> Result<CoalitionLp, BlockingError> {
    let n = e.n();
    let members = s.members();
    let supply: Vec<Rational> = (0..n)
        .map(|o| members.iter().map(|&i| &e.endowment_row(i)[o]).sum())
        .collect();
    let mut vars = Vec::new();
    let mut index = vec![vec![None; n]; members.len()];
    let mut open = Vec::with_capacity(members.len());
    for (k, &i) in members.iter().enumerate() {
        let c = cum(e.pref(i), p.row(i))?;
        // Objects after the first full prefix must get zero.
        let full = c.0.iter().position(|x| x.is_one()).unwrap_or(n - 1) + 1;
        for &o in &e.pref(i).order()[..full] {
            if !supply[o].is_zero() {
                index[k][o] = Some(vars.len());
                vars.push((k, o));
            }
        }
        open.push((full, c));
    }
    let mut lp = LinearProgram::new(vars.len(), Sense::Maximize);
    for row in &index {
        let terms: Vec<(usize, Rational)> = row.iter().flatten().map(|&v| (v, Rational::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, Rational::one());
    }
    for o in 0..n {
        let terms: Vec<(usize, Rational)> = index.iter().filter_map(|r| r[o]).map(|v| (v, Rational::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, supply[o].clone());
    }
    let mut prefix_terms = Vec::with_capacity(members.len());
    let mut baselines = Vec::with_capacity(members.len());
    for (k, &i) in members.iter().enumerate() {
        let (full, c) = &open[k];
        let order = e.pref(i).order();
        let mut total = Vec::new();
        let mut baseline = Rational::zero();
        // Prefixes from `full` on are pinned at 1 by the row sum.
        for t in 1..*full {
            let terms: Vec<(usize, Rational)> = order[..t]
                .iter()
                .filter_map(|&o| index[k][o])
                .map(|v| (v, Rational::one()))
                .collect();
            lp.add_sparse(&terms, Relation::Ge, c.0[t - 1].clone());
            baseline += &c.0[t - 1];
            total.extend(terms);
        }
        prefix_terms.push(total);
        baselines.push(baseline);
    }
    Ok(CoalitionLp {
        lp,
        vars,
        prefix_terms,
        baselines,
    })
}

fn certificate(e: &Economy, p: &Allocation, s: &Coalition, mode: BlockMode, vars: &[(usize, usize)], point: &[Rational]) -> BlockCertificate {
    let n = e.n();
    let mut rows = vec![vec![Rational::zero(); n]; s.len()];
    for (&(k, o), x) in vars.iter().zip(point) {
        rows[k][o] = x.clone();
    }
    let slacks = s
        .members()
        .iter()
        .zip(&rows)
        .map(|(&i, row)| {
            let new = cum(e.pref(i), row).expect("row has n entries");
            let old = cum(e.pref(i), p.row(i)).expect("row has n entries");
            new.0.iter().zip(&old.0).map(|(a, b)| a - b).collect()
        })
        .collect();
    let cert = BlockCertificate {
        coalition: s.clone(),
        mode,
        rows,
        slacks,
    };
    debug_assert_eq!(cert.verify(e, p), Ok(()));
    cert
}

/// Maximizes the total prefix slack of the coalition over `p`.
pub fn weak_block_lp(e: &Economy, p: &Allocation, s: &Coalition) -> Result<Option<BlockCertificate>, BlockingError> {
    check_inputs(e, p, s)?;
    let mut c = build(e, p, s)?;
    let objective: Vec<(usize, Rational)> = c.prefix_terms.concat();
    c.lp.set_objective_sparse(&objective);
    let baseline: Rational = c.baselines.iter().sum();
    match solve_checked(&c.lp) {
        LpOutcome::Optimal { value, point, .. } if value > baseline => Ok(Some(certificate(e, p, s, BlockMode::Weak, &c.vars, &point))),
        LpOutcome::Optimal { .. } => Ok(None),
        // No reallocation keeps every member weakly as well off.
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Unbounded { .. } => unreachable!("coalition region is bounded"),
    }
}

/// Maximizes the smallest per-member total prefix slack.
pub fn strong_block_lp(e: &Economy, p: &Allocation, s: &Coalition) -> Result<Option<BlockCertificate>, BlockingError> {
    check_inputs(e, p, s)?;
    // A member already holding their favorite outright cannot improve.
    if s.members().iter().any(|&i| p.row(i)[e.pref(i).favorite()].is_one()) {
        return Ok(None);
    }
    let c = build(e, p, s)?;
    let delta = c.vars.len();
    let mut lp = LinearProgram::new(delta + 1, Sense::Maximize);
    for con in c.lp.constraints() {
        let mut coeffs = con.coeffs.clone();
        coeffs.push(Rational::zero());
        lp.add_constraint(coeffs, con.relation, con.rhs.clone());
    }
    for (terms, base) in c.prefix_terms.iter().zip(&c.baselines) {
        let mut terms = terms.clone();
        terms.push((delta, -Rational::one()));
        lp.add_sparse(&terms, Relation::Ge, base.clone());
    }
    lp.set_objective_sparse(&[(delta, Rational::one())]);
    match solve_checked(&lp) {
        LpOutcome::Optimal { value, point, .. } if value.is_positive() => {
            Ok(Some(certificate(e, p, s, BlockMode::Strong, &c.vars, &point[..delta])))
        }
        LpOutcome::Optimal { .. } => Ok(None),
        // No reallocation keeps every member weakly as well off.
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Unbounded { .. } => unreachable!("coalition region is bounded"),
    }
}

pub fn block_lp(e: &Economy, p: &Allocation, s: &Coalition, mode: BlockMode) -> Result<Option<BlockCertificate>, BlockingError> {
    match mode {
        BlockMode::Weak => weak_block_lp(e, p, s),
        BlockMode::Strong => strong_block_lp(e, p, s),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSearch {
    pub certificate: Option<BlockCertificate>,
    /// Coalitions examined, including the blocking one.
    pub checked: usize,
}

/// First blocking coalition in canonical order.
pub fn find_blocking_coalition(e: &Economy, p: &Allocation, mode: BlockMode, max_size: usize) -> Result<BlockSearch, BlockingError> {
    let mut checked = 0;
    for s in coalitions(e.n(), max_size) {
        checked += 1;
        match block_lp(e, p, &s, mode) {
            Ok(Some(cert)) => {
                return Ok(BlockSearch {
                    certificate: Some(cert),
                    checked,
                })
            }
            Ok(None) => {}
            Err(other) => return Err(other),
        }
    }
    Ok(BlockSearch {
        certificate: None,
        checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economy::parse_economy;
    use crate::fixtures;
    use crate::scalar::ratio;

    fn coalition(m: &[usize], n: usize) -> Coalition {
        Coalition::new(m.iter().map(|i| i - 1).collect(), n).unwrap()
    }

    #[test]
    fn coalition_validation_and_order() {
        assert_eq!(Coalition::new(vec![1], 3), Err(BlockingError::Singleton));
        assert_eq!(Coalition::new(vec![0, 3], 3), Err(BlockingError::OutOfRange(3)));
        assert_eq!(Coalition::new(vec![1, 1], 3), Err(BlockingError::Duplicate(1)));
        assert_eq!(coalition(&[3, 1], 4).to_string(), "{1,3}");
        let all: Vec<String> = coalitions(4, 4).map(|c| c.to_string()).collect();
        assert_eq!(
            all,
            ["{1,2}", "{1,3}", "{1,4}", "{2,3}", "{2,4}", "{3,4}", "{1,2,3}", "{1,2,4}", "{1,3,4}", "{2,3,4}", "{1,2,3,4}"]
        );
        assert_eq!(coalitions(6, 6).count(), 64 - 6 - 1);
        assert_eq!(coalitions(3, 1).count(), 0);
    }

    #[test]
    fn swap_weakly_and_strongly_blocks_endowment() {
        let e = fixtures::e1();
        let p = e.endowment_allocation();
        let s = coalition(&[1, 3], 4);
        for mode in [BlockMode::Weak, BlockMode::Strong] {
            let cert = block_lp(&e, &p, &s, mode).unwrap().expect("swap blocks");
            assert_eq!(cert.verify(&e, &p), Ok(()));
            assert_eq!(cert.rows, vec![e.endowment_row(2).to_vec(), e.endowment_row(0).to_vec()]);
        }
    }

    #[test]
    fn equals_cannot_strongly_block_each_other() {
        let e = fixtures::e1();
        let p = e.endowment_allocation();
        let s = coalition(&[1, 2], 4);
        assert_eq!(strong_block_lp(&e, &p, &s).unwrap(), None);
        assert_eq!(weak_block_lp(&e, &p, &s).unwrap(), None);
    }

    #[test]
    fn favorites_held_cannot_block() {
        let e = fixtures::no_trade(3);
        let p = e.endowment_allocation();
        for s in coalitions(3, 3) {
            assert_eq!(weak_block_lp(&e, &p, &s).unwrap(), None);
            assert_eq!(strong_block_lp(&e, &p, &s).unwrap(), None);
        }
    }

    #[test]
    fn common_favorite_two_agents() {
        let e = parse_economy("2\no_1 o_2\no_1 o_2\n1 0\n0 1\n").unwrap();
        let p = e.endowment_allocation();
        let s = coalition(&[1, 2], 2);
        // Oracle: reallocations are p′_1 = (1 − t, t), p′_2 = (t, 1 − t).
        for k in 0..=64 {
            let t = ratio(k, 64);
            let a = vec![Rational::one() - &t, t.clone()];
            let b = vec![t.clone(), Rational::one() - &t];
            let both = weak_sd(e.pref(0), &a, p.row(0)).unwrap() && weak_sd(e.pref(1), &b, p.row(1)).unwrap();
            let some = strict_sd(e.pref(0), &a, p.row(0)).unwrap() || strict_sd(e.pref(1), &b, p.row(1)).unwrap();
            assert!(!(both && some));
        }
        assert_eq!(weak_block_lp(&e, &p, &s).unwrap(), None);
    }

    #[test]
    fn canonical_search() {
        let e = fixtures::e1();
        let found = find_blocking_coalition(&e, &e.endowment_allocation(), BlockMode::Weak, 4).unwrap();
        assert_eq!(found.checked, 2);
        assert_eq!(found.certificate.unwrap().coalition.to_string(), "{1,3}");
        let e = fixtures::two_agent_swap();
        let swapped = Allocation::from_permutation(&[1, 0]);
        assert_eq!(find_blocking_coalition(&e, &swapped, BlockMode::Weak, 2).unwrap().certificate, None);
    }

    #[test]
    fn certificate_text_and_tamper() {
        let e = fixtures::e1();
        let p = e.endowment_allocation();
        let mut cert = weak_block_lp(&e, &p, &coalition(&[1, 3], 4)).unwrap().unwrap();
        let text = cert.to_string();
        assert!(text.starts_with("coalition {1,3}\nmode weak\nrow 1: 0 1/2 0 1/2\nrow 3: 1/2 0 1/2 0\n"));
        assert!(text.contains("slack 1: 1/2 0 1/2 0\n"));
        cert.rows[0][1] = ratio(1, 4);
        assert!(cert.verify(&e, &p).is_err());
    }
}
