//! Exhaustive enumeration of every tree realising a small schedule.

use std::sync::Arc;

use super::{slot_multiset, Tree};
use crate::schedule::DegreeSchedule;
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// `prod_i D_i! / prod_j d_{i,j}!`, or `None` on overflow.
pub fn multinomial_count(schedule: &DegreeSchedule) -> Option<u128> {
    let mut total: u128 = 1;
    for i in 0..schedule.height() {
        let mut remaining = schedule.generation_size(i) as u128;
        for d in schedule.row(i).degrees() {
            total = total.checked_mul(binomial(remaining, d as u128)?)?;
            remaining -= d as u128;
        }
    }
    Some(total)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.checked_mul(n - j)? / (j + 1);
    }
    Some(acc)
}

/// Steps `v` to its next distinct permutation in lexicographic order;
/// returns false (leaving `v` sorted) after the last one.
fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Every distinct parent assignment exactly once. Each has probability
/// `1 / count` under the uniform law.
pub struct TreeEnumeration {
    schedule: Arc<DegreeSchedule>,
    state: Vec<Vec<u32>>,
    count: u128,
    done: bool,
}

impl TreeEnumeration {
    pub fn total(&self) -> u128 {
        self.count
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.count as f64
    }
}

impl Iterator for TreeEnumeration {
    type Item = Tree;

    fn next(&mut self) -> Option<Tree> {
        if self.done {
            return None;
        }
        let tree = Tree::assemble(Arc::clone(&self.schedule), self.state.clone());
        // odometer over heights, highest height turning fastest
        self.done = true;
        for level in (1..self.state.len()).rev() {
            if next_permutation(&mut self.state[level]) {
                self.done = false;
                break;
            }
        }
        Some(tree)
    }
}

pub fn enumerate_trees(schedule: Arc<DegreeSchedule>, cap: u64) -> Result<TreeEnumeration> {
    schedule.ensure_valid()?;
    let count = match multinomial_count(&schedule) {
        Some(c) if c <= cap as u128 => c,
        Some(c) => return Err(Error::EnumerationCap { count: c.to_string(), cap }),
        None => return Err(Error::EnumerationCap { count: "more than 2^128".into(), cap }),
    };
    let h = schedule.height();
    let mut state = Vec::with_capacity(h + 1);
    state.push(Vec::new());
    for i in 1..=h {
        state.push(slot_multiset(&schedule, i - 1));
    }
    Ok(TreeEnumeration { schedule, state, count, done: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Row;
    use std::collections::HashSet;

    #[test]
    fn small_example_has_sixty_trees() {
        let e = enumerate_trees(Arc::new(DegreeSchedule::small_example()), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(e.total(), 60);
        let keys: HashSet<Vec<u32>> = e.map(|t| t.parent_key()).collect();
        assert_eq!(keys.len(), 60);
    }

    #[test]
    fn path_has_one_tree() {
        let e = enumerate_trees(Arc::new(DegreeSchedule::path(7)), 10).unwrap();
        assert_eq!(e.total(), 1);
        assert_eq!(e.collect::<Vec<_>>().len(), 1);
    }

    #[test]
    fn two_children_swap_parents() {
        let s = DegreeSchedule::new(2, vec![Row::from_degrees(&[2]), Row::from_degrees(&[1, 1])]);
        let e = enumerate_trees(Arc::new(s), 10).unwrap();
        assert_eq!(e.total(), 2);
        let total = e.total();
        assert_eq!(total, e.collect::<Vec<_>>().len() as u128);
    }

    #[test]
    fn cap_is_enforced() {
        let s = Arc::new(DegreeSchedule::kingman(50, 10));
        match enumerate_trees(s, 1000) {
            Err(Error::EnumerationCap { cap, .. }) => assert_eq!(cap, 1000),
            _ => panic!("expected cap error"),
        }
    }
}
