//! Top trading cycles for integral housing markets.

use num_traits::One;

use crate::economy::{Allocation, Economy};
use crate::error::CoreError;

/// Object owned by each agent when every endowment row is a unit vector.
pub fn ownership(e: &Economy) -> Result<Vec<usize>, CoreError> {
    (0..e.n())
        .map(|i| {
            let row = e.endowment_row(i);
            match row.iter().position(|x| x.is_one()) {
                Some(o) => Ok(o),
                None => Err(CoreError::NotIntegral(format!("agent {} owns fractional shares", i + 1))),
            }
        })
        .collect()
}

/// Each round every remaining agent points at the owner of their favorite
/// remaining object; agents on cycles trade and leave.
pub fn ttc(e: &Economy) -> Result<Allocation, CoreError> {
    let n = e.n();
    let owns = ownership(e)?;
    let mut owner = vec![0; n];
    for (i, &o) in owns.iter().enumerate() {
        owner[o] = i;
    }
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut active = vec![true; n];
    let mut remaining = n;
    while remaining > 0 {
        let points: Vec<usize> = (0..n)
            .map(|i| {
                if !active[i] {
                    return usize::MAX;
                }
                let o = *e.pref(i).order().iter().find(|&&o| active[owner[o]]).expect("own object remains");
                owner[o]
            })
            .collect();
        // Walking from any active agent reaches a cycle within `n` steps.
        let mut on_cycle = vec![false; n];
        for start in (0..n).filter(|&i| active[i]) {
            let mut a = start;
            for _ in 0..n {
                a = points[a];
            }
            let first = a;
            loop {
                on_cycle[a] = true;
                a = points[a];
                if a == first {
                    break;
                }
            }
        }
        for i in (0..n).filter(|&i| on_cycle[i]) {
            assigned[i] = Some(owns[points[i]]);
        }
        for i in (0..n).filter(|&i| on_cycle[i]) {
            active[i] = false;
            remaining -= 1;
        }
    }
    let objects: Vec<usize> = assigned.into_iter().map(|o| o.expect("every agent trades")).collect();
    Ok(Allocation::from_permutation(&objects))
}
