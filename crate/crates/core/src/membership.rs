//! Core membership and the polytope tools used for scripted certifications.
//!
//! Allocation variables are flattened as `p[i * n + o]`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::blocking::{find_blocking_coalition, BlockCertificate, BlockMode, Coalition};
use crate::dominance::{add_birkhoff_rows, cum, ir_violator, solve_checked};
use crate::economy::{object_name, Allocation, Economy};
use crate::error::{BlockingError, CoreError};
use crate::lp::{LinearProgram, LpOutcome, Multipliers, Relation, Sense};
use crate::scalar::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintTag {
    Allocation,
    Ir,
    Eene,
    Custom,
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintTag::Allocation => "allocation",
            ConstraintTag::Ir => "IR",
            ConstraintTag::Eene => "EENE",
            ConstraintTag::Custom => "custom",
        })
    }
}

/// Linear combination `Σ c · p_{i,o}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Functional {
    /// `(agent, object, coefficient)`, 0-based.
    pub terms: Vec<(usize, usize, Rational)>,
}

impl Functional {
    pub fn entry(agent: usize, object: usize) -> Self {
        Functional {
            terms: vec![(agent, object, Rational::one())],
        }
    }

    /// Prefix sum of `agent`'s top `t` objects under `order`.
    pub fn prefix(agent: usize, order: &[usize], t: usize) -> Self {
        Functional {
            terms: order[..t].iter().map(|&o| (agent, o, Rational::one())).collect(),
        }
    }

    pub fn sparse(&self, n: usize) -> Vec<(usize, Rational)> {
        self.terms.iter().map(|(i, o, c)| (i * n + o, c.clone())).collect()
    }

    pub fn eval(&self, p: &Allocation) -> Rational {
        self.terms.iter().map(|(i, o, c)| c * p.get(*i, *o)).sum()
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, o, c)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else if k > 0 { "+" } else { "" };
            let mag = c.abs();
            let coef = if mag.is_one() { String::new() } else { format!("{}*", format_rational(&mag)) };
            write!(f, "{sign}{coef}p({},o{})", i + 1, o + 1)?;
        }
        if self.terms.is_empty() {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedConstraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
    pub tag: ConstraintTag,
}

/// Linear constraints over an economy's allocation variables; always
/// includes the doubly stochastic rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    n: usize,
    constraints: Vec<TaggedConstraint>,
}

impl ConstraintSet {
    pub fn birkhoff(n: usize) -> Self {
        let mut lp = LinearProgram::<Rational>::new(n * n, Sense::Maximize);
        add_birkhoff_rows(&mut lp, n);
        let constraints = lp
            .constraints()
            .iter()
            .map(|c| TaggedConstraint {
                terms: c.coeffs.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(v, x)| (v, x.clone())).collect(),
                relation: c.relation,
                rhs: c.rhs.clone(),
                tag: ConstraintTag::Allocation,
            })
            .collect();
        ConstraintSet { n, constraints }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[TaggedConstraint] {
        &self.constraints
    }

    pub fn add(&mut self, f: &Functional, relation: Relation, rhs: Rational, tag: ConstraintTag) {
        assert!(f.terms.iter().all(|&(i, o, _)| i < self.n && o < self.n), "functional index out of range");
        self.constraints.push(TaggedConstraint {
            terms: f.sparse(self.n),
            relation,
            rhs,
            tag,
        });
    }

    pub fn count(&self, tag: ConstraintTag) -> usize {
        self.constraints.iter().filter(|c| c.tag == tag).count()
    }

    pub fn to_lp(&self, sense: Sense, objective: &Functional) -> LinearProgram<Rational> {
        let mut lp = LinearProgram::new(self.n * self.n, sense);
        for c in &self.constraints {
            lp.add_sparse(&c.terms, c.relation, c.rhs.clone());
        }
        lp.set_objective_sparse(&objective.sparse(self.n));
        lp
    }

    pub fn contains(&self, p: &Allocation) -> bool {
        let x: Vec<Rational> = p.rows().iter().flatten().cloned().collect();
        x.len() == self.n * self.n && self.to_lp(Sense::Maximize, &Functional::default()).is_feasible(&x)
    }
}

/// Allocation rows plus the requested IR and EENE prefix inequalities.
pub fn build_constraints(e: &Economy, tags: &[ConstraintTag]) -> ConstraintSet {
    let n = e.n();
    let mut c = ConstraintSet::birkhoff(n);
    if tags.contains(&ConstraintTag::Ir) {
        for i in 0..n {
            let w = cum(e.pref(i), e.endowment_row(i)).expect("economy rows have n entries");
            for t in 1..=n {
                c.add(&Functional::prefix(i, e.pref(i).order(), t), Relation::Ge, w.0[t - 1].clone(), ConstraintTag::Ir);
            }
        }
    }
    if tags.contains(&ConstraintTag::Eene) {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i && e.endowment_row(i) == e.endowment_row(j)) {
                let order = e.pref(i).order();
                for t in 1..=n {
                    let mut f = Functional::prefix(i, order, t);
                    f.terms.extend(order[..t].iter().map(|&o| (j, o, -Rational::one())));
                    c.add(&f, Relation::Ge, Rational::zero(), ConstraintTag::Eene);
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundsOutcome {
    Bounds {
        min: Rational,
        max: Rational,
        argmin: Allocation,
        argmax: Allocation,
    },
    Infeasible {
        farkas: Multipliers<Rational>,
    },
}

impl BoundsOutcome {
    pub fn range(&self) -> Option<(&Rational, &Rational)> {
        match self {
            BoundsOutcome::Bounds { min, max, .. } => Some((min, max)),
            BoundsOutcome::Infeasible { .. } => None,
        }
    }
}

fn reshape(n: usize, point: &[Rational]) -> Allocation {
    Allocation::new_unchecked(point.chunks(n).map(|r| r.to_vec()).collect())
}

/// Minimum and maximum of `f` over `c`, each from a certified LP.
pub fn forced_bounds(c: &ConstraintSet, f: &Functional) -> BoundsOutcome {
    let n = c.n();
    let lo = solve_checked(&c.to_lp(Sense::Minimize, f));
    let hi = solve_checked(&c.to_lp(Sense::Maximize, f));
    match (lo, hi) {
        (LpOutcome::Optimal { value: min, point: a, .. }, LpOutcome::Optimal { value: max, point: b, .. }) => BoundsOutcome::Bounds {
            min,
            max,
            argmin: reshape(n, &a),
            argmax: reshape(n, &b),
        },
        (LpOutcome::Infeasible { farkas }, _) => BoundsOutcome::Infeasible { farkas },
        _ => unreachable!("the Birkhoff rows bound every functional"),
    }
}

/// Feasibility of `c` alone, with a Farkas certificate when empty.
pub fn feasibility(c: &ConstraintSet) -> LpOutcome<Rational> {
    solve_checked(&c.to_lp(Sense::Maximize, &Functional::default()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeDominance {
    pub holds: bool,
    /// `gaps[t] = cum(b)_{t+1} − max_{p ∈ c} cum(p_i)_{t+1}`.
    pub gaps: Vec<Rational>,
}

/// Whether `b` weakly dominates agent `i`'s row at every point of `c`.
pub fn dominates_over_polytope(e: &Economy, c: &ConstraintSet, i: usize, b: &[Rational]) -> Result<PolytopeDominance, CoreError> {
    let order = e.pref(i).order();
    let target = cum(e.pref(i), b)?;
    let mut gaps = Vec::with_capacity(e.n());
    for t in 1..=e.n() {
        let f = Functional::prefix(i, order, t);
        match solve_checked(&c.to_lp(Sense::Maximize, &f)) {
            LpOutcome::Optimal { value, .. } => gaps.push(&target.0[t - 1] - value),
            _ => return Err(CoreError::InfeasibleConstraints),
        }
    }
    Ok(PolytopeDominance {
        holds: gaps.iter().all(|g| !g.is_negative()),
        gaps,
    })
}

/// Checks that bundle rows `b` (coalition order) redistribute the coalition's endowment.
pub fn check_coalition_bundle(e: &Economy, s: &Coalition, b: &[Vec<Rational>]) -> Result<(), CoreError> {
    let n = e.n();
    if b.len() != s.len() || b.iter().any(|r| r.len() != n) {
        return Err(BlockingError::Infeasible(format!("expected {} rows of {n} entries", s.len())).into());
    }
    for (row, &i) in b.iter().zip(s.members()) {
        if row.iter().any(|x| x.is_negative()) || row.iter().sum::<Rational>() != Rational::one() {
            return Err(BlockingError::Infeasible(format!("row for agent {} is not an assignment", i + 1)).into());
        }
    }
    for o in 0..n {
        let supply: Rational = s.members().iter().map(|&i| &e.endowment_row(i)[o]).sum();
        let used: Rational = b.iter().map(|r| &r[o]).sum();
        if supply != used {
            return Err(BlockingError::Infeasible(format!("{} uses {used} of {supply}", object_name(o))).into());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberGaps {
    pub agent: usize,
    pub dominance: PolytopeDominance,
}

impl MemberGaps {
    /// 1-based prefix lengths with a strictly positive gap.
    pub fn strict_prefixes(&self) -> Vec<usize> {
        self.dominance.gaps.iter().enumerate().filter(|(_, g)| g.is_positive()).map(|(t, _)| t + 1).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformBlock {
    pub coalition: Coalition,
    pub bundle: Vec<Vec<Rational>>,
    pub members: Vec<MemberGaps>,
}

impl UniformBlock {
    /// Every member gains weakly at every prefix and strictly at one, for every point of `c`.
    pub fn certified(&self) -> bool {
        self.members.iter().all(|m| m.dominance.holds && !m.strict_prefixes().is_empty())
    }

    /// First member failing the certification, with the reason.
    pub fn failure(&self) -> Option<(usize, String)> {
        self.members.iter().find_map(|m| {
            if let Some(t) = m.dominance.gaps.iter().position(|g| g.is_negative()) {
                Some((m.agent, format!("prefix {} gap {}", t + 1, format_rational(&m.dominance.gaps[t]))))
            } else if m.strict_prefixes().is_empty() {
                Some((m.agent, "no strictly positive gap".to_string()))
            } else {
                None
            }
        })
    }
}

/// Whether `s` strongly blocks every allocation of `c` through the fixed bundle `b`.
pub fn certify_uniform_strong_block(e: &Economy, c: &ConstraintSet, s: &Coalition, b: &[Vec<Rational>]) -> Result<UniformBlock, CoreError> {
    check_coalition_bundle(e, s, b)?;
    let members = s
        .members()
        .iter()
        .zip(b)
        .map(|(&i, row)| {
            Ok(MemberGaps {
                agent: i,
                dominance: dominates_over_polytope(e, c, i, row)?,
            })
        })
        .collect::<Result<_, CoreError>>()?;
    Ok(UniformBlock {
        coalition: s.clone(),
        bundle: b.to_vec(),
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoreNotion {
    /// IR and not weakly blocked.
    Strong,
    /// IR and not strongly blocked.
    Weak,
}

impl CoreNotion {
    pub fn block_mode(self) -> BlockMode {
        match self {
            CoreNotion::Strong => BlockMode::Weak,
            CoreNotion::Weak => BlockMode::Strong,
        }
    }
}

impl fmt::Display for CoreNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoreNotion::Strong => "strong",
            CoreNotion::Weak => "weak",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Member { coalitions_checked: usize },
    NotIndividuallyRational { agent: usize },
    Blocked(BlockCertificate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreMembershipReport {
    pub allocation: Allocation,
    pub notion: CoreNotion,
    pub max_size: usize,
    pub verdict: Verdict,
}

impl CoreMembershipReport {
    pub fn is_member(&self) -> bool {
        matches!(self.verdict, Verdict::Member { .. })
    }
}

impl fmt::Display for CoreMembershipReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "notion {}", self.notion)?;
        writeln!(f, "max-size {}", self.max_size)?;
        match &self.verdict {
            Verdict::Member { coalitions_checked } => {
                writeln!(f, "verdict member")?;
                writeln!(f, "coalitions-checked {coalitions_checked}")
            }
            Verdict::NotIndividuallyRational { agent } => {
                writeln!(f, "verdict non-member")?;
                writeln!(f, "ir-violator {}", agent + 1)
            }
            Verdict::Blocked(cert) => {
                writeln!(f, "verdict non-member")?;
                write!(f, "{cert}")
            }
        }
    }
}

/// IR check, then canonical coalition search up to `max_size`.
pub fn core_membership(e: &Economy, p: &Allocation, notion: CoreNotion, max_size: usize) -> Result<CoreMembershipReport, CoreError> {
    let violations = p.violations();
    if !violations.is_empty() || p.n() != e.n() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CoreError::InvalidAllocation(if text.is_empty() { format!("size {} for {} agents", p.n(), e.n()) } else { text.join("; ") }));
    }
    let verdict = match ir_violator(e, p)? {
        Some(agent) => Verdict::NotIndividuallyRational { agent },
        None => {
            let search = find_blocking_coalition(e, p, notion.block_mode(), max_size)?;
            match search.certificate {
                Some(cert) => Verdict::Blocked(cert),
                None => Verdict::Member {
                    coalitions_checked: search.checked,
                },
            }
        }
    };
    Ok(CoreMembershipReport {
        allocation: p.clone(),
        notion,
        max_size,
        verdict,
    })
}

pub fn in_strong_core(e: &Economy, p: &Allocation) -> Result<CoreMembershipReport, CoreError> {
    core_membership(e, p, CoreNotion::Strong, e.n())
}

pub fn in_weak_core(e: &Economy, p: &Allocation) -> Result<CoreMembershipReport, CoreError> {
    core_membership(e, p, CoreNotion::Weak, e.n())
}
