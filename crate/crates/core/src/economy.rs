//! Economies, allocations, and their canonical text formats.
//!
//! Agents and objects are indexed from zero internally and printed from one:
//! agent `i` is shown as `i + 1`, object `o` as `o_{o + 1}`.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::EconomyError;
use crate::scalar::{format_rational, parse_rational, Rational, Scalar};

/// Printable name of object `o` (zero-based index).
pub fn object_name(o: usize) -> String {
    format!("o_{}", o + 1)
}

/// Parses `o_3` or `o3` into the zero-based index 2.
pub fn parse_object_name(token: &str) -> Option<usize> {
    let digits = token.strip_prefix("o_").or_else(|| token.strip_prefix('o'))?;
    let k: usize = digits.parse().ok()?;
    k.checked_sub(1)
}

/// Strict preference over objects, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Preference {
    order: Vec<usize>,
}

impl Preference {
    /// Builds a preference, rejecting anything that is not a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Option<Self> {
        let pref = Preference { order };
        pref.is_permutation_of(pref.order.len()).then_some(pref)
    }

    pub fn new_unchecked(order: Vec<usize>) -> Self {
        Preference { order }
    }

    pub fn identity(n: usize) -> Self {
        Preference {
            order: (0..n).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Zero-based rank of `object` (0 = favorite).
    pub fn rank(&self, object: usize) -> usize {
        self.order
            .iter()
            .position(|&o| o == object)
            .expect("object missing from preference")
    }

    pub fn favorite(&self) -> usize {
        self.order[0]
    }

    /// `true` iff `a` is strictly preferred to `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        a != b && self.rank(a) < self.rank(b)
    }

    pub fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &o in &self.order {
            if o >= n || seen[o] {
                return false;
            }
            seen[o] = true;
        }
        true
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.order.iter().map(|&o| object_name(o)).collect();
        write!(f, "{}", names.join(" "))
    }
}

/// Square matrix of shares; row `i` is agent `i`'s assignment.
///
/// Constructed through [`Allocation::new`] it is doubly stochastic (exactly for
/// rationals, up to tolerance for floats). The unchecked constructor is used
/// for intermediate solver matrices and for deliberately invalid test data.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T = Rational> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> Allocation<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, EconomyError> {
        let alloc = Allocation { rows };
        alloc.check_square()?;
        let violations = alloc.violations();
        if violations.is_empty() {
            Ok(alloc)
        } else {
            Err(EconomyError::Invalid(ValidationReport { violations }))
        }
    }

    pub fn new_unchecked(rows: Vec<Vec<T>>) -> Self {
        Allocation { rows }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|o| if i == o { T::one() } else { T::zero() }).collect())
            .collect();
        Allocation { rows }
    }

    pub fn uniform(n: usize) -> Self {
        let share = T::one() / T::from_usize(n);
        Allocation {
            rows: vec![vec![share; n]; n],
        }
    }

    /// Permutation allocation: agent `i` receives object `objects[i]` fully.
    pub fn from_permutation(objects: &[usize]) -> Self {
        let n = objects.len();
        let rows = objects
            .iter()
            .map(|&obj| (0..n).map(|o| if o == obj { T::one() } else { T::zero() }).collect())
            .collect();
        Allocation { rows }
    }

    fn check_square(&self) -> Result<(), EconomyError> {
        let n = self.rows.len();
        match self.rows.iter().position(|r| r.len() != n) {
            Some(i) => Err(EconomyError::Dimension(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                self.rows[i].len()
            ))),
            None => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<T>> {
        self.rows
    }

    pub fn get(&self, i: usize, o: usize) -> &T {
        &self.rows[i][o]
    }

    pub fn set(&mut self, i: usize, o: usize, value: T) {
        self.rows[i][o] = value;
    }

    pub fn set_row(&mut self, i: usize, row: Vec<T>) {
        self.rows[i] = row;
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.rows[i].iter().fold(T::zero(), |acc, x| acc + x)
    }

    pub fn column_sum(&self, o: usize) -> T {
        self.rows.iter().fold(T::zero(), |acc, r| acc + &r[o])
    }

    pub fn map<U, F: Fn(&T) -> U>(&self, f: F) -> Allocation<U> {
        Allocation {
            rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Allocation<T>) -> T {
        let mut best = T::zero();
        for (a, b) in self.rows.iter().zip(&other.rows) {
            for (x, y) in a.iter().zip(b) {
                let d = (x.clone() - y).abs();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// Doubly-stochastic violations, lowest indices first.
    pub fn violations(&self) -> Vec<Violation> {
        let n = self.n();
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                out.push(Violation::RowLength {
                    agent: i,
                    found: row.len(),
                    expected: n,
                });
                continue;
            }
            for (o, x) in row.iter().enumerate() {
                if x.is_neg() || (x.clone() - T::one()).is_pos() {
                    out.push(Violation::EntryOutOfRange {
                        agent: i,
                        object: o,
                        value: x.to_string(),
                    });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        for i in 0..n {
            let s = self.row_sum(i);
            if !s.approx_eq(&T::one()) {
                out.push(Violation::RowSum {
                    agent: i,
                    sum: s.to_string(),
                });
            }
        }
        for o in 0..n {
            let s = self.column_sum(o);
            if !s.approx_eq(&T::one()) {
                out.push(Violation::ColumnSum {
                    object: o,
                    sum: s.to_string(),
                });
            }
        }
        out
    }
}

impl Allocation<Rational> {
    pub fn to_f64(&self) -> Allocation<f64> {
        self.map(Scalar::to_f64)
    }
}

/// A single broken invariant, with zero-based indices (printed one-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EntryOutOfRange {
        agent: usize,
        object: usize,
        value: String,
    },
    RowLength {
        agent: usize,
        found: usize,
        expected: usize,
    },
    RowSum {
        agent: usize,
        sum: String,
    },
    ColumnSum {
        object: usize,
        sum: String,
    },
    NotPermutation {
        agent: usize,
    },
    PreferenceCount {
        found: usize,
        expected: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryOutOfRange {
                agent,
                object,
                value,
            } => write!(
                f,
                "entry ({}, {}) = {value} outside [0,1]",
                agent + 1,
                object_name(*object)
            ),
            Violation::RowLength {
                agent,
                found,
                expected,
            } => write!(f, "row {} has {found} entries, expected {expected}", agent + 1),
            Violation::RowSum { agent, sum } => {
                write!(f, "row {} sum {sum} \u{2260} 1", agent + 1)
            }
            Violation::ColumnSum { object, sum } => {
                write!(f, "column {} sum {sum} \u{2260} 1", object_name(*object))
            }
            Violation::NotPermutation { agent } => {
                write!(f, "preference of agent {} is not a permutation", agent + 1)
            }
            Violation::PreferenceCount { found, expected } => {
                write!(f, "{found} preference lists for {expected} agents")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

/// Agents, strict preferences, and a doubly stochastic endowment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Economy<T = Rational> {
    prefs: Vec<Preference>,
    endowment: Allocation<T>,
}

impl<T: Scalar> Economy<T> {
    pub fn new(prefs: Vec<Preference>, endowment: Allocation<T>) -> Result<Self, EconomyError> {
        endowment.check_square()?;
        let e = Economy { prefs, endowment };
        let report = e.validate();
        if report.is_empty() {
            Ok(e)
        } else {
            Err(EconomyError::Invalid(report))
        }
    }

    pub fn new_unchecked(prefs: Vec<Preference>, endowment: Allocation<T>) -> Self {
        Economy { prefs, endowment }
    }

    pub fn n(&self) -> usize {
        self.prefs.len()
    }

    pub fn pref(&self, i: usize) -> &Preference {
        &self.prefs[i]
    }

    pub fn prefs(&self) -> &[Preference] {
        &self.prefs
    }

    pub fn endowment(&self) -> &Allocation<T> {
        &self.endowment
    }

    pub fn endowment_row(&self, i: usize) -> &[T] {
        self.endowment.row(i)
    }

    /// Lists every broken invariant; empty iff the economy is valid.
    pub fn validate(&self) -> ValidationReport {
        let n = self.endowment.n();
        let mut violations = Vec::new();
        if self.prefs.len() != n {
            violations.push(Violation::PreferenceCount {
                found: self.prefs.len(),
                expected: n,
            });
        }
        for (i, p) in self.prefs.iter().enumerate() {
            if !p.is_permutation_of(n) {
                violations.push(Violation::NotPermutation { agent: i });
            }
        }
        violations.extend(self.endowment.violations());
        ValidationReport { violations }
    }

    /// The reference point of individual rationality: `p = ω`.
    pub fn endowment_allocation(&self) -> Allocation<T> {
        self.endowment.clone()
    }

    /// Coarsest partition into agents with identical preferences and
    /// endowment rows, groups ordered by their smallest member.
    pub fn equal_class_partition(&self) -> EqualClassPartition {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.n() {
            let found = groups.iter_mut().find(|g| {
                let j = g[0];
                self.prefs[i] == self.prefs[j] && self.endowment.row(i) == self.endowment.row(j)
            });
            match found {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        EqualClassPartition { groups }
    }

    pub fn with_preferences(&self, prefs: Vec<Preference>) -> Self {
        Economy {
            prefs,
            endowment: self.endowment.clone(),
        }
    }

    pub fn map<U: Scalar, F: Fn(&T) -> U>(&self, f: F) -> Economy<U> {
        Economy {
            prefs: self.prefs.clone(),
            endowment: self.endowment.map(f),
        }
    }
}

impl Economy<Rational> {
    pub fn to_f64(&self) -> Economy<f64> {
        self.map(Scalar::to_f64)
    }

    /// `true` iff the endowment is a 0/1 permutation matrix.
    pub fn is_integral(&self) -> bool {
        self.endowment
            .rows()
            .iter()
            .all(|r| r.iter().all(|x| x.is_zero() || x.is_one()))
    }
}

/// Ordered groups `I_1..I_K` of agents with equal preferences and endowments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualClassPartition {
    groups: Vec<Vec<usize>>,
}

impl EqualClassPartition {
    pub fn from_groups(groups: Vec<Vec<usize>>) -> Self {
        EqualClassPartition { groups }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn class_of(&self, agent: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&agent))
            .expect("agent not in partition")
    }
}

impl fmt::Display for EqualClassPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                let members: Vec<String> = g.iter().map(|i| (i + 1).to_string()).collect();
                format!("{{{}}}", members.join(","))
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
}

fn content_lines(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(idx, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let mut tokens = Vec::new();
            let mut start = None;
            for (col, ch) in body.char_indices() {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(col),
                    (true, Some(s)) => {
                        tokens.push((s + 1, &body[s..col]));
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some(s) = start {
                tokens.push((s + 1, &body[s..]));
            }
            (!tokens.is_empty()).then_some(Line {
                number: idx + 1,
                tokens,
            })
        })
        .collect()
}

fn parse_matrix_rows(lines: &[Line<'_>], n: usize) -> Result<Vec<Vec<Rational>>, EconomyError> {
    lines
        .iter()
        .map(|line| {
            if line.tokens.len() != n {
                return Err(EconomyError::Dimension(format!(
                    "line {}: {} entries, expected {n}",
                    line.number,
                    line.tokens.len()
                )));
            }
            line.tokens
                .iter()
                .map(|&(col, tok)| {
                    parse_rational(tok).map_err(|e| EconomyError::syntax(line.number, col, e.to_string()))
                })
                .collect()
        })
        .collect()
}

/// Parses the economy file format: `n`, then `n` preference lines (object
/// names best first), then `n` endowment rows. `#` starts a comment.
pub fn parse_economy(text: &str) -> Result<Economy, EconomyError> {
    let lines = content_lines(text);
    let first = lines
        .first()
        .ok_or_else(|| EconomyError::syntax(1, 1, "empty economy file"))?;
    if first.tokens.len() != 1 {
        return Err(EconomyError::syntax(
            first.number,
            first.tokens[1].0,
            "expected a single agent count",
        ));
    }
    let (col, tok) = first.tokens[0];
    let n: usize = tok
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| EconomyError::syntax(first.number, col, format!("invalid agent count `{tok}`")))?;
    if lines.len() != 1 + 2 * n {
        return Err(EconomyError::Dimension(format!(
            "expected {} content lines for n = {n}, found {}",
            1 + 2 * n,
            lines.len()
        )));
    }
    let mut prefs = Vec::with_capacity(n);
    for line in &lines[1..=n] {
        if line.tokens.len() != n {
            return Err(EconomyError::Dimension(format!(
                "line {}: {} objects in preference, expected {n}",
                line.number,
                line.tokens.len()
            )));
        }
        let mut order = Vec::with_capacity(n);
        for &(col, tok) in &line.tokens {
            let o = parse_object_name(tok)
                .filter(|&o| o < n)
                .ok_or_else(|| EconomyError::syntax(line.number, col, format!("unknown object `{tok}`")))?;
            order.push(o);
        }
        prefs.push(Preference::new_unchecked(order));
    }
    let rows = parse_matrix_rows(&lines[n + 1..], n)?;
    Economy::new(prefs, Allocation::new_unchecked(rows))
}

/// Canonical economy text; parses back to an identical economy.
pub fn serialize_economy(e: &Economy) -> String {
    let mut out = format!("{}\n", e.n());
    for p in e.prefs() {
        out.push_str(&p.to_string());
        out.push('\n');
    }
    out.push_str(&serialize_allocation(e.endowment()));
    out
}

/// Parses `n` lines of `n` rationals into a validated allocation.
pub fn parse_allocation(text: &str) -> Result<Allocation, EconomyError> {
    let lines = content_lines(text);
    let n = lines.len();
    if n == 0 {
        return Err(EconomyError::syntax(1, 1, "empty allocation file"));
    }
    let rows = parse_matrix_rows(&lines, n)?;
    Allocation::new(rows)
}

pub fn serialize_allocation(p: &Allocation) -> String {
    let mut out = String::new();
    for row in p.rows() {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

pub fn format_row(row: &[Rational]) -> String {
    row.iter().map(format_rational).collect::<Vec<_>>().join(" ")
}

/// Parses a comma-separated row such as `0,1/2,0,1/2`.
pub fn parse_row(text: &str) -> Option<Vec<Rational>> {
    text.split(',').map(|t| parse_rational(t.trim()).ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    const E1: &str = "\
4
o_2 o_1 o_4 o_3
o2 o1 o4 o3
o1 o2 o3 o4
o2 o1 o4 o3
1/2 0 1/2 0
1/2 0 1/2 0
0 1/2 0 1/2 # agent 3
0 1/2 0 1/2
";

    #[test]
    fn parses_e1() {
        let e = parse_economy(E1).unwrap();
        assert_eq!(e.n(), 4);
        let half = ratio(1, 2);
        let zero = ratio(0, 1);
        assert_eq!(e.endowment_row(0), &[half.clone(), zero.clone(), half.clone(), zero.clone()]);
        assert_eq!(e.endowment_row(3), &[zero.clone(), half.clone(), zero, half]);
        assert_eq!(e.pref(0).order(), &[1, 0, 3, 2]);
        assert!(e.validate().is_empty());
    }

    #[test]
    fn rejects_bad_row_sum() {
        let text = "2\no1 o2\no1 o2\n1/2 1/4\n1/2 3/4\n";
        match parse_economy(text) {
            Err(EconomyError::Invalid(report)) => {
                assert!(report.to_string().contains("row 1 sum 3/4 \u{2260} 1"), "{report}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_agent() {
        let e = parse_economy("1\no_1\n1\n").unwrap();
        assert_eq!(e.endowment(), &Allocation::identity(1));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_economy("2\no1 o2\no1 o2\n1 x\n0 1\n").unwrap_err();
        assert_eq!(
            err,
            EconomyError::Syntax {
                line: 4,
                column: 3,
                message: "invalid rational literal `x`".into()
            }
        );
        let err = parse_economy("2\no1 o9\no1 o2\n1 0\n0 1\n").unwrap_err();
        assert!(matches!(err, EconomyError::Syntax { line: 2, column: 4, .. }));
        assert!(matches!(
            parse_economy("2\no1 o2\no1\n1 0\n0 1\n"),
            Err(EconomyError::Dimension(_))
        ));
    }

    #[test]
    fn validate_names_negative_entry_and_duplicate_object() {
        let rows = vec![
            vec![ratio(-1, 2), ratio(3, 2)],
            vec![ratio(3, 2), ratio(-1, 2)],
        ];
        let e = Economy::new_unchecked(
            vec![Preference::new_unchecked(vec![0, 0]), Preference::identity(2)],
            Allocation::new_unchecked(rows),
        );
        let report = e.validate();
        assert!(report.violations.contains(&Violation::NotPermutation { agent: 0 }));
        assert!(report.violations.contains(&Violation::EntryOutOfRange {
            agent: 0,
            object: 0,
            value: "-1/2".into()
        }));
    }

    #[test]
    fn partition_of_e1() {
        let e = parse_economy(E1).unwrap();
        let part = e.equal_class_partition();
        assert_eq!(part.groups(), &[vec![0, 1], vec![2], vec![3]]);
        assert_eq!(part.to_string(), "{1,2} {3} {4}");
    }

    #[test]
    fn partition_extremes() {
        let n = 3;
        let e: Economy = Economy::new(vec![Preference::identity(n); n], Allocation::uniform(n)).unwrap();
        assert_eq!(e.equal_class_partition().groups(), &[vec![0, 1, 2]]);
        let prefs = vec![
            Preference::new(vec![0, 1, 2]).unwrap(),
            Preference::new(vec![1, 0, 2]).unwrap(),
            Preference::new(vec![2, 1, 0]).unwrap(),
        ];
        let e: Economy = Economy::new(prefs, Allocation::identity(n)).unwrap();
        assert_eq!(e.equal_class_partition().len(), 3);
    }

    #[test]
    fn endowment_allocation_cases() {
        let e = parse_economy(E1).unwrap();
        assert_eq!(&e.endowment_allocation(), e.endowment());
        let e: Economy = Economy::new(vec![Preference::identity(3); 3], Allocation::uniform(3)).unwrap();
        assert!(e.endowment_allocation().rows().iter().flatten().all(|x| *x == ratio(1, 3)));
    }

    #[test]
    fn canonical_round_trip() {
        let e = parse_economy(E1).unwrap();
        let text = serialize_economy(&e);
        assert_eq!(parse_economy(&text).unwrap(), e);
        assert_eq!(serialize_economy(&parse_economy(&text).unwrap()), text);
    }

    #[test]
    fn allocation_file() {
        let p = parse_allocation("1/2 1/2\n1/2 1/2\n").unwrap();
        assert_eq!(p, Allocation::uniform(2));
        assert!(parse_allocation("1 0\n1 0\n").is_err());
    }

    #[test]
    fn object_names() {
        assert_eq!(parse_object_name("o_12"), Some(11));
        assert_eq!(parse_object_name("o3"), Some(2));
        assert_eq!(parse_object_name("o0"), None);
        assert_eq!(parse_object_name("x1"), None);
    }
}
