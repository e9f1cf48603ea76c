//! Brute-force grid oracles shared by the property and acceptance tests.
//! Everything here is written against the raw definitions, not the crate's
//! dominance or blocking code.

#![allow(dead_code)]

use fhm_core::blocking::BlockMode;
use fhm_core::{Allocation, Economy, Rational};
use num_bigint::BigInt;

pub fn cum_of(order: &[usize], row: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::from_integer(0.into());
    order
        .iter()
        .map(|&o| {
            acc += &row[o];
            acc.clone()
        })
        .collect()
}

/// `a` weakly sd-dominates `b` under `order`.
pub fn weakly(order: &[usize], a: &[Rational], b: &[Rational]) -> bool {
    cum_of(order, a).iter().zip(cum_of(order, b)).all(|(x, y)| *x >= y)
}

/// `a` weakly dominates `b` and some prefix is strictly larger.
pub fn strictly(order: &[usize], a: &[Rational], b: &[Rational]) -> bool {
    weakly(order, a, b) && cum_of(order, a) != cum_of(order, b)
}

/// All length-`n` vectors of nonnegative integers summing to `total`.
pub fn compositions(n: usize, total: u64) -> Vec<Vec<u64>> {
    if n == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Integer matrices with `k` rows summing to `d` and the given column sums.
pub fn transports(k: usize, d: u64, cols: &[u64]) -> Vec<Vec<Vec<u64>>> {
    if k == 0 {
        return if cols.iter().all(|&c| c == 0) { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for row in compositions(cols.len(), d) {
        if row.iter().zip(cols).any(|(r, c)| r > c) {
            continue;
        }
        let left: Vec<u64> = cols.iter().zip(&row).map(|(c, r)| c - r).collect();
        for mut rest in transports(k - 1, d, &left) {
            rest.insert(0, row.clone());
            out.push(rest);
        }
    }
    out
}

pub fn to_rational(rows: &[Vec<u64>], d: u64) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&v| Rational::new(BigInt::from(v), BigInt::from(d))).collect())
        .collect()
}

/// All doubly stochastic `n × n` matrices on the grid `1/d`.
pub fn grid_allocations(n: usize, d: u64) -> Vec<Allocation> {
    transports(n, d, &vec![d; n]).iter().map(|m| Allocation::new_unchecked(to_rational(m, d))).collect()
}

/// `v · d` as an integer, if `v` lies on the grid.
pub fn on_grid(v: &Rational, d: u64) -> Option<u64> {
    let s = v * Rational::from_integer(BigInt::from(d));
    s.is_integer().then(|| u64::try_from(s.to_integer()).expect("nonnegative"))
}

/// Some grid reallocation of the members' endowments blocks `p` in `mode`.
/// `None` when the coalition supply is off the grid.
pub fn grid_block(e: &Economy, p: &Allocation, members: &[usize], mode: BlockMode, d: u64) -> Option<bool> {
    let n = e.n();
    let mut supply = vec![0u64; n];
    for &i in members {
        for (o, s) in supply.iter_mut().enumerate() {
            *s += on_grid(&e.endowment_row(i)[o], d)?;
        }
    }
    Some(transports(members.len(), d, &supply).iter().any(|m| {
        let rows = to_rational(m, d);
        let better = |k: usize, strict: bool| {
            let order = e.pref(members[k]).order();
            let mine = p.row(members[k]);
            if strict {
                strictly(order, &rows[k], mine)
            } else {
                weakly(order, &rows[k], mine)
            }
        };
        match mode {
            BlockMode::Strong => (0..members.len()).all(|k| better(k, true)),
            BlockMode::Weak => (0..members.len()).all(|k| better(k, false)) && (0..members.len()).any(|k| better(k, true)),
        }
    }))
}

/// Some grid allocation weakly improves everyone and strictly improves someone.
pub fn grid_dominator(e: &Economy, p: &Allocation, d: u64) -> Option<Allocation> {
    grid_allocations(e.n(), d).into_iter().find(|q| {
        let all = (0..e.n()).all(|i| weakly(e.pref(i).order(), q.row(i), p.row(i)));
        all && (0..e.n()).any(|i| strictly(e.pref(i).order(), q.row(i), p.row(i)))
    })
}

/// All strict orders on `n` objects.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}
