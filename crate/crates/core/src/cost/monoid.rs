use crate::name::Label;
use num_traits::{CheckedAdd, FromPrimitive, Unsigned};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// A commutative monoid of costs.
pub trait CostMonoid: Clone + Eq + Ord + fmt::Debug + fmt::Display + Send + Sync {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    /// The cost of `n` unit operations.
    fn units(n: u64) -> Self;
}

impl<T> CostMonoid for T
where
    T: Unsigned + CheckedAdd + FromPrimitive + Clone + Eq + Ord + fmt::Debug + fmt::Display + Send + Sync,
{
    fn zero() -> T {
        T::zero()
    }

    fn plus(&self, other: &T) -> T {
        self.checked_add(other).expect("cost overflow")
    }

    fn units(n: u64) -> T {
        T::from_u64(n).expect("unit count not representable")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("no cost recorded for label `{0}`")]
pub struct MissingCost(pub String);

/// Per-label costs, extended to label sequences by summation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostTable<M> {
    pub entries: BTreeMap<Label, M>,
}

impl<M: CostMonoid> Default for CostTable<M> {
    fn default() -> Self {
        CostTable { entries: BTreeMap::new() }
    }
}

impl<M: CostMonoid> CostTable<M> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, l: Label, m: M) {
        self.entries.insert(l, m);
    }

    pub fn get(&self, l: &Label) -> Result<&M, MissingCost> {
        self.entries.get(l).ok_or_else(|| MissingCost(l.to_string()))
    }

    pub fn costof(&self, trace: &[Label]) -> Result<M, MissingCost> {
        trace.iter().try_fold(M::zero(), |acc, l| Ok(acc.plus(self.get(l)?)))
    }

    /// Two-column rendering, one label per line.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(l, m)| format!("{l}\t{m}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;
    use num_bigint::BigUint;

    #[test]
    fn trace_cost_is_additive() {
        let mut t: CostTable<u64> = CostTable::new();
        t.insert(Name::new("a"), 2);
        t.insert(Name::new("b"), 5);
        let a = Name::new("a");
        let b = Name::new("b");
        assert_eq!(t.costof(&[a.clone(), b.clone(), a.clone()]).unwrap(), 9);
        assert_eq!(t.costof(&[]).unwrap(), 0);
        assert!(t.costof(&[Name::new("c")]).is_err());
    }

    #[test]
    fn big_costs_do_not_overflow() {
        let big = BigUint::units(u64::MAX);
        assert_eq!(big.plus(&BigUint::units(1)), BigUint::from(u64::MAX) + 1u32);
    }

    #[test]
    #[should_panic(expected = "cost overflow")]
    fn machine_costs_are_checked() {
        let _ = u64::MAX.plus(&1);
    }
}
