//! Bundled economies, allocations and scenario scripts.

use crate::economy::{parse_allocation, parse_economy, Allocation, Economy};
use crate::scalar::ratio;

pub const E1: &str = include_str!("../data/e1.economy");
pub const E1_PRIME: &str = include_str!("../data/e1_prime.economy");
pub const TTC3: &str = include_str!("../data/ttc3.economy");
pub const EENE_CONSTRUCTION: &str = include_str!("../data/eene_construction.allocation");
pub const STATEMENT1_SCRIPT: &str = include_str!("../data/statement1.script");
pub const STATEMENT3_SCRIPT: &str = include_str!("../data/statement3.script");

/// Four agents, no strong-core allocation.
pub fn e1() -> Economy {
    parse_economy(E1).expect("bundled economy parses")
}

/// `e1` with agents 2 and 4 ranking `o_1` first.
pub fn e1_prime() -> Economy {
    parse_economy(E1_PRIME).expect("bundled economy parses")
}

/// Integral three-agent market where agents 1 and 2 trade.
pub fn ttc3() -> Economy {
    parse_economy(TTC3).expect("bundled economy parses")
}

/// IR allocation of `e1_prime` with equal-endowment no envy.
pub fn eene_construction() -> Allocation {
    parse_allocation(EENE_CONSTRUCTION).expect("bundled allocation parses")
}

/// Two agents owning each other's favorite.
pub fn two_agent_swap() -> Economy {
    parse_economy("2\no_2 o_1\no_1 o_2\n1 0\n0 1\n").expect("literal parses")
}

/// `n` agents with one common order and equal shares of everything.
pub fn equal_division(n: usize) -> Economy {
    let order: Vec<String> = (0..n).map(crate::economy::object_name).collect();
    let share = crate::scalar::format_rational(&ratio(1, n as i64));
    let mut text = format!("{n}\n");
    for _ in 0..n {
        text.push_str(&order.join(" "));
        text.push('\n');
    }
    for _ in 0..n {
        text.push_str(&vec![share.as_str(); n].join(" "));
        text.push('\n');
    }
    parse_economy(&text).expect("generated economy parses")
}

/// Everyone owns their favorite outright.
pub fn no_trade(n: usize) -> Economy {
    let e = Economy::new_unchecked(
        (0..n)
            .map(|i| {
                let mut order: Vec<usize> = (0..n).filter(|&o| o != i).collect();
                order.insert(0, i);
                crate::economy::Preference::new_unchecked(order)
            })
            .collect(),
        Allocation::identity(n),
    );
    debug_assert!(e.validate().is_empty());
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_parse() {
        let e = e1();
        assert_eq!(e.n(), 4);
        assert_eq!(e.endowment_row(0), &[ratio(1, 2), ratio(0, 1), ratio(1, 2), ratio(0, 1)]);
        assert_eq!(e.endowment_row(3), &[ratio(0, 1), ratio(1, 2), ratio(0, 1), ratio(1, 2)]);
        assert_eq!(e1_prime().pref(1).order(), &[0, 1, 3, 2]);
        assert_eq!(e1_prime().pref(3).order(), &[0, 1, 3, 2]);
        assert!(ttc3().is_integral());
        assert!(eene_construction().violations().is_empty());
        assert!(equal_division(3).validate().is_empty());
        assert_eq!(equal_division(3).equal_class_partition().len(), 1);
        assert_eq!(no_trade(3).equal_class_partition().len(), 3);
    }
}
