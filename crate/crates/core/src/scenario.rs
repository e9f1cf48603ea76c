//! Scripted certification chains over one economy.
//!
//! A script is a list of directives, one per line, `#` starts a comment:
//!
//! ```text
//! constraints IR|IR+EENE|none
//! forced eq|le|ge <functional> <rational>
//! best-exchange {i,j,..} <row> <row> ..
//! conclude-equalities p1=w3 p2=w3 ..
//! expect infeasible
//! uniform-block {i,j,..} <row> <row> .. over IR+EENE
//! ```
//!
//! A functional is a single token such as `p(1,o1)+p(1,o2)-1/2*p(3,o4)`.
//! Rows are comma-separated rationals, one per coalition member in order.
//! `forced` and `best-exchange` read the current constraint set;
//! `conclude-equalities` adds `p_i = ω_j` rows, each justified by an earlier
//! best-exchange bundle or by every entry already being pinned.

use std::fmt;

use num_traits::Zero;

use crate::blocking::Coalition;
use crate::economy::{format_row, parse_object_name, Economy};
use crate::error::{CoreError, ScriptError};
use crate::lp::{check_certificate, LpOutcome, Multipliers, Relation};
use crate::membership::{
    build_constraints, certify_uniform_strong_block, check_coalition_bundle, dominates_over_polytope, feasibility, forced_bounds, BoundsOutcome,
    ConstraintSet, ConstraintTag, Functional, MemberGaps, UniformBlock,
};
use crate::scalar::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcedKind {
    /// `min = max = value`.
    Eq,
    /// `max ≤ value`.
    Le,
    /// `min ≥ value`.
    Ge,
}

impl fmt::Display for ForcedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcedKind::Eq => "eq",
            ForcedKind::Le => "le",
            ForcedKind::Ge => "ge",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Constraints(Vec<ConstraintTag>),
    Forced {
        kind: ForcedKind,
        functional: Functional,
        value: Rational,
    },
    /// 0-based members, bundle rows in member order.
    BestExchange { members: Vec<usize>, bundle: Vec<Vec<Rational>> },
    /// `(agent, endowment owner)` pairs, 0-based.
    ConcludeEqualities(Vec<(usize, usize)>),
    ExpectInfeasible,
    UniformBlock {
        members: Vec<usize>,
        bundle: Vec<Vec<Rational>>,
        tags: Vec<ConstraintTag>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    /// `(line, directive)`, lines 1-based.
    pub directives: Vec<(usize, Directive)>,
}

fn err(line: usize, message: impl Into<String>) -> ScriptError {
    ScriptError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_tags(line: usize, token: &str) -> Result<Vec<ConstraintTag>, ScriptError> {
    if token == "none" {
        return Ok(Vec::new());
    }
    token
        .split('+')
        .map(|t| match t {
            "IR" => Ok(ConstraintTag::Ir),
            "EENE" => Ok(ConstraintTag::Eene),
            other => Err(err(line, format!("unknown constraint family `{other}`"))),
        })
        .collect()
}

fn parse_index(line: usize, token: &str) -> Result<usize, ScriptError> {
    match token.trim().parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k - 1),
        _ => Err(err(line, format!("expected a positive index, found `{token}`"))),
    }
}

/// `[c*]p(i,oj)` terms joined by `+` or `-`.
pub fn parse_functional(token: &str) -> Result<Functional, String> {
    let mut terms = Vec::new();
    let mut rest = token;
    let mut negative = false;
    if let Some(r) = rest.strip_prefix('-') {
        negative = true;
        rest = r;
    }
    loop {
        let end = rest.find(')').ok_or_else(|| format!("unterminated term in `{token}`"))?;
        let (term, tail) = rest.split_at(end + 1);
        let (coef, var) = match term.split_once('*') {
            Some((c, v)) => (parse_rational(c).map_err(|e| e.to_string())?, v),
            None => (num_traits::One::one(), term),
        };
        let inner = var
            .strip_prefix("p(")
            .and_then(|v| v.strip_suffix(')'))
            .ok_or_else(|| format!("expected p(i,oj), found `{var}`"))?;
        let (i, o) = inner.split_once(',').ok_or_else(|| format!("expected p(i,oj), found `{var}`"))?;
        let i = match i.parse::<usize>() {
            Ok(k) if k >= 1 => k - 1,
            _ => return Err(format!("bad agent index in `{var}`")),
        };
        let o = parse_object_name(o).ok_or_else(|| format!("bad object in `{var}`"))?;
        terms.push((i, o, if negative { -coef } else { coef }));
        if tail.is_empty() {
            break;
        }
        negative = tail.starts_with('-');
        rest = tail.strip_prefix(['+', '-']).ok_or_else(|| format!("expected + or - in `{token}`"))?;
    }
    Ok(Functional { terms })
}

fn parse_coalition(line: usize, token: &str) -> Result<Vec<usize>, ScriptError> {
    let inner = token
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| err(line, format!("expected {{i,j,..}}, found `{token}`")))?;
    inner.split(',').map(|t| parse_index(line, t)).collect()
}

fn parse_bundle(line: usize, tokens: &[&str]) -> Result<Vec<Vec<Rational>>, ScriptError> {
    tokens
        .iter()
        .map(|t| {
            t.split(',')
                .map(|x| parse_rational(x).map_err(|e| err(line, e.to_string())))
                .collect()
        })
        .collect()
}

pub fn parse_script(text: &str) -> Result<Script, ScriptError> {
    let mut directives = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let d = match tokens[0] {
            "constraints" if tokens.len() == 2 => Directive::Constraints(parse_tags(line, tokens[1])?),
            "forced" if tokens.len() == 4 => {
                let kind = match tokens[1] {
                    "eq" => ForcedKind::Eq,
                    "le" => ForcedKind::Le,
                    "ge" => ForcedKind::Ge,
                    other => return Err(err(line, format!("unknown bound kind `{other}`"))),
                };
                Directive::Forced {
                    kind,
                    functional: parse_functional(tokens[2]).map_err(|m| err(line, m))?,
                    value: parse_rational(tokens[3]).map_err(|e| err(line, e.to_string()))?,
                }
            }
            "best-exchange" if tokens.len() >= 3 => Directive::BestExchange {
                members: parse_coalition(line, tokens[1])?,
                bundle: parse_bundle(line, &tokens[2..])?,
            },
            "uniform-block" if tokens.len() >= 5 && tokens[tokens.len() - 2] == "over" => Directive::UniformBlock {
                members: parse_coalition(line, tokens[1])?,
                bundle: parse_bundle(line, &tokens[2..tokens.len() - 2])?,
                tags: parse_tags(line, tokens[tokens.len() - 1])?,
            },
            "conclude-equalities" if tokens.len() >= 2 => {
                let pairs = tokens[1..]
                    .iter()
                    .map(|t| {
                        let (l, r) = t.split_once('=').ok_or_else(|| err(line, format!("expected pI=wJ, found `{t}`")))?;
                        let i = l.strip_prefix('p').ok_or_else(|| err(line, format!("expected pI, found `{l}`")))?;
                        let j = r.strip_prefix('w').ok_or_else(|| err(line, format!("expected wJ, found `{r}`")))?;
                        Ok((parse_index(line, i)?, parse_index(line, j)?))
                    })
                    .collect::<Result<_, ScriptError>>()?;
                Directive::ConcludeEqualities(pairs)
            }
            "expect" if tokens.len() == 2 && tokens[1] == "infeasible" => Directive::ExpectInfeasible,
            other => return Err(err(line, format!("malformed `{other}` directive"))),
        };
        directives.push((line, d));
    }
    Ok(Script { directives })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Justification {
    BestExchange(Coalition),
    Pinned,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepDetail {
    Constraints(Vec<ConstraintTag>),
    Forced {
        kind: ForcedKind,
        functional: Functional,
        value: Rational,
        /// `None` when the constraint set is empty.
        range: Option<(Rational, Rational)>,
    },
    BestExchange {
        coalition: Option<Coalition>,
        members: Vec<MemberGaps>,
    },
    Conclude(Vec<(usize, usize, Option<Justification>)>),
    Infeasible {
        /// Farkas multipliers when the system is empty.
        farkas: Option<Multipliers<Rational>>,
        certificate_checked: bool,
    },
    UniformBlock(Option<UniformBlock>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub line: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: StepDetail,
    /// Reason when the step failed.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub steps: Vec<StepReport>,
}

impl ScenarioReport {
    pub fn all_passed(&self) -> bool {
        self.steps.iter().all(|s| s.passed)
    }

    pub fn failed_step(&self) -> Option<&StepReport> {
        self.steps.iter().find(|s| !s.passed)
    }

    pub fn last_name(&self) -> Option<&'static str> {
        self.steps.last().map(|s| s.name)
    }
}

fn gap_line(m: &MemberGaps) -> String {
    let strict: Vec<String> = m.strict_prefixes().iter().map(|t| t.to_string()).collect();
    format!(
        "agent {} gaps {} strict-prefixes [{}]",
        m.agent + 1,
        format_row(&m.dominance.gaps),
        strict.join(",")
    )
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "ok" } else { "FAILED" };
        write!(f, "line {} {} {status}", self.line, self.name)?;
        match &self.detail {
            StepDetail::Constraints(tags) => {
                let t: Vec<String> = tags.iter().map(|t| t.to_string()).collect();
                writeln!(f, ": {}", if t.is_empty() { "none".into() } else { t.join("+") })?;
            }
            StepDetail::Forced { kind, functional, value, range } => {
                write!(f, ": {functional} {kind} {}", format_rational(value))?;
                match range {
                    Some((lo, hi)) => writeln!(f, " min {} max {}", format_rational(lo), format_rational(hi))?,
                    None => writeln!(f, " constraint set empty")?,
                }
            }
            StepDetail::BestExchange { coalition, members } => {
                writeln!(f, ": {}", coalition.as_ref().map(|c| c.to_string()).unwrap_or_default())?;
                for m in members {
                    writeln!(f, "  {}", gap_line(m))?;
                }
            }
            StepDetail::UniformBlock(block) => {
                writeln!(f, ": {}", block.as_ref().map(|b| b.coalition.to_string()).unwrap_or_default())?;
                for m in block.iter().flat_map(|b| &b.members) {
                    writeln!(f, "  {}", gap_line(m))?;
                }
            }
            StepDetail::Conclude(eqs) => {
                writeln!(f)?;
                for (i, j, why) in eqs {
                    let why = match why {
                        Some(Justification::BestExchange(c)) => format!("best-exchange {c}"),
                        Some(Justification::Pinned) => "pinned".into(),
                        None => "unjustified".into(),
                    };
                    writeln!(f, "  p{}=w{} by {why}", i + 1, j + 1)?;
                }
            }
            StepDetail::Infeasible { farkas, certificate_checked } => {
                match farkas {
                    Some(m) => {
                        let used = m.rows.iter().filter(|y| !y.is_zero()).count();
                        write!(f, ": Farkas certificate over {used} rows")?;
                    }
                    None => write!(f, ": system is feasible")?,
                }
                writeln!(f, "{}", if *certificate_checked { ", verified" } else { "" })?;
            }
        }
        if let Some(note) = &self.note {
            writeln!(f, "  reason: {note}")?;
        }
        Ok(())
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

struct Runner<'a> {
    e: &'a Economy,
    c: ConstraintSet,
    /// Bundles established by passing best-exchange steps.
    bundles: Vec<(usize, Vec<Rational>, Coalition)>,
}

impl Runner<'_> {
    fn coalition(&self, members: &[usize]) -> Result<Coalition, String> {
        Coalition::new(members.to_vec(), self.e.n()).map_err(|e| e.to_string())
    }

    fn step(&mut self, directive: &Directive) -> (bool, StepDetail, Option<String>) {
        let n = self.e.n();
        match directive {
            Directive::Constraints(tags) => {
                self.c = build_constraints(self.e, tags);
                (true, StepDetail::Constraints(tags.clone()), None)
            }
            Directive::Forced { kind, functional, value } => {
                if functional.terms.iter().any(|&(i, o, _)| i >= n || o >= n) {
                    let detail = StepDetail::Forced {
                        kind: *kind,
                        functional: functional.clone(),
                        value: value.clone(),
                        range: None,
                    };
                    return (false, detail, Some("functional index out of range".into()));
                }
                let range = match forced_bounds(&self.c, functional) {
                    BoundsOutcome::Bounds { min, max, .. } => Some((min, max)),
                    BoundsOutcome::Infeasible { .. } => None,
                };
                let passed = match (&range, kind) {
                    (Some((lo, hi)), ForcedKind::Eq) => lo == value && hi == value,
                    (Some((_, hi)), ForcedKind::Le) => hi <= value,
                    (Some((lo, _)), ForcedKind::Ge) => lo >= value,
                    (None, _) => false,
                };
                let note = (!passed).then(|| match &range {
                    Some((lo, hi)) => format!("range [{}, {}] does not meet the bound", format_rational(lo), format_rational(hi)),
                    None => "constraint set is empty".into(),
                });
                let detail = StepDetail::Forced {
                    kind: *kind,
                    functional: functional.clone(),
                    value: value.clone(),
                    range,
                };
                (passed, detail, note)
            }
            Directive::BestExchange { members, bundle } => {
                let fail = |note: String| {
                    (
                        false,
                        StepDetail::BestExchange {
                            coalition: None,
                            members: Vec::new(),
                        },
                        Some(note),
                    )
                };
                let s = match self.coalition(members) {
                    Ok(s) if s.members() == members.as_slice() => s,
                    Ok(_) => return fail("coalition members must be listed in increasing order".into()),
                    Err(e) => return fail(e),
                };
                if let Err(e) = check_coalition_bundle(self.e, &s, bundle) {
                    return fail(e.to_string());
                }
                let mut gaps = Vec::new();
                for (&i, b) in members.iter().zip(bundle) {
                    match dominates_over_polytope(self.e, &self.c, i, b) {
                        Ok(d) => gaps.push(MemberGaps { agent: i, dominance: d }),
                        Err(e) => return fail(e.to_string()),
                    }
                }
                let passed = gaps.iter().all(|m| m.dominance.holds);
                let note = gaps.iter().find(|m| !m.dominance.holds).map(|m| {
                    let t = m.dominance.gaps.iter().position(|g| g < &Rational::zero()).unwrap_or(0);
                    format!("agent {} prefix {} gap {}", m.agent + 1, t + 1, format_rational(&m.dominance.gaps[t]))
                });
                if passed {
                    for (&i, b) in members.iter().zip(bundle) {
                        self.bundles.push((i, b.clone(), s.clone()));
                    }
                }
                (
                    passed,
                    StepDetail::BestExchange {
                        coalition: Some(s),
                        members: gaps,
                    },
                    note,
                )
            }
            Directive::ConcludeEqualities(pairs) => {
                let mut out = Vec::new();
                let mut note = None;
                for &(i, j) in pairs {
                    if i >= n || j >= n {
                        out.push((i, j, None));
                        note.get_or_insert_with(|| "index out of range".to_string());
                        continue;
                    }
                    let target = self.e.endowment_row(j);
                    let why = self
                        .bundles
                        .iter()
                        .find(|(a, b, _)| *a == i && b.as_slice() == target)
                        .map(|(_, _, s)| Justification::BestExchange(s.clone()))
                        .or_else(|| {
                            (0..n)
                                .all(|o| match forced_bounds(&self.c, &Functional::entry(i, o)) {
                                    BoundsOutcome::Bounds { min, max, .. } => min == target[o] && max == target[o],
                                    BoundsOutcome::Infeasible { .. } => false,
                                })
                                .then_some(Justification::Pinned)
                        });
                    if why.is_none() {
                        note.get_or_insert_with(|| format!("p{}=w{} is not justified", i + 1, j + 1));
                    }
                    out.push((i, j, why));
                }
                let passed = note.is_none();
                if passed {
                    for &(i, j) in pairs {
                        for o in 0..n {
                            let rhs = self.e.endowment_row(j)[o].clone();
                            self.c.add(&Functional::entry(i, o), Relation::Eq, rhs, ConstraintTag::Custom);
                        }
                    }
                }
                (passed, StepDetail::Conclude(out), note)
            }
            Directive::ExpectInfeasible => {
                let lp = self.c.to_lp(crate::lp::Sense::Maximize, &Functional::default());
                let out = feasibility(&self.c);
                let checked = check_certificate(&lp, &out).unwrap_or(false);
                match out {
                    LpOutcome::Infeasible { farkas } => (
                        checked,
                        StepDetail::Infeasible {
                            farkas: Some(farkas),
                            certificate_checked: checked,
                        },
                        (!checked).then(|| "Farkas certificate failed verification".into()),
                    ),
                    _ => (
                        false,
                        StepDetail::Infeasible {
                            farkas: None,
                            certificate_checked: checked,
                        },
                        Some("the constraint system is feasible".into()),
                    ),
                }
            }
            Directive::UniformBlock { members, bundle, tags } => {
                let s = match self.coalition(members) {
                    Ok(s) if s.members() == members.as_slice() => s,
                    Ok(_) => return (false, StepDetail::UniformBlock(None), Some("coalition members must be listed in increasing order".into())),
                    Err(e) => return (false, StepDetail::UniformBlock(None), Some(e)),
                };
                let c = build_constraints(self.e, tags);
                match certify_uniform_strong_block(self.e, &c, &s, bundle) {
                    Ok(block) => {
                        let note = block.failure().map(|(agent, why)| format!("agent {}: {why}", agent + 1));
                        (block.certified(), StepDetail::UniformBlock(Some(block)), note)
                    }
                    Err(CoreError::InfeasibleConstraints) => (false, StepDetail::UniformBlock(None), Some("constraint set is empty".into())),
                    Err(e) => (false, StepDetail::UniformBlock(None), Some(e.to_string())),
                }
            }
        }
    }
}

fn name(d: &Directive) -> &'static str {
    match d {
        Directive::Constraints(_) => "constraints",
        Directive::Forced { .. } => "forced",
        Directive::BestExchange { .. } => "best-exchange",
        Directive::ConcludeEqualities(_) => "conclude-equalities",
        Directive::ExpectInfeasible => "expect-infeasible",
        Directive::UniformBlock { .. } => "uniform-block",
    }
}

/// Runs directives in order and stops at the first failing step.
/// The constraint set starts as the IR polytope.
pub fn run_script(e: &Economy, script: &Script) -> ScenarioReport {
    let mut runner = Runner {
        e,
        c: build_constraints(e, &[ConstraintTag::Ir]),
        bundles: Vec::new(),
    };
    let mut steps = Vec::new();
    for (line, d) in &script.directives {
        let (passed, detail, note) = runner.step(d);
        steps.push(StepReport {
            line: *line,
            name: name(d),
            passed,
            detail,
            note,
        });
        if !passed {
            break;
        }
    }
    ScenarioReport { steps }
}

/// Strong-core emptiness: every step passes and the chain ends in a
/// certified infeasibility.
pub fn certify_statement1(e: &Economy, script: &str) -> Result<ScenarioReport, ScriptError> {
    let script = parse_script(script)?;
    if !matches!(script.directives.last(), Some((_, Directive::ExpectInfeasible))) {
        return Err(err(script.directives.last().map_or(0, |d| d.0), "an emptiness script must end with `expect infeasible`"));
    }
    Ok(run_script(e, &script))
}

/// Weak core incompatible with equal-endowment no envy: every step passes
/// and the chain ends in a certified uniform strong block over IR+EENE.
pub fn certify_statement3(e: &Economy, script: &str) -> Result<ScenarioReport, ScriptError> {
    let script = parse_script(script)?;
    match script.directives.last() {
        Some((_, Directive::UniformBlock { tags, .. })) if tags.contains(&ConstraintTag::Ir) && tags.contains(&ConstraintTag::Eene) => {
            Ok(run_script(e, &script))
        }
        other => Err(err(other.map_or(0, |d| d.0), "an incompatibility script must end with `uniform-block .. over IR+EENE`")),
    }
}
