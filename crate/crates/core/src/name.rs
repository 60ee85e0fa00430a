//! Identifiers, labels, region names and fresh-name supplies.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// An interned-by-value name. Equality is equality of the rendered string.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(Arc<str>);

pub type Ident = Name;
pub type Label = Name;
pub type RegionId = Name;
pub type TyVar = Name;

/// Prefix reserved for machine-generated names; rejected in user input.
pub const RESERVED_PREFIX: char = '_';
pub const HALT: &str = "halt";
pub const VAR_PREFIX: &str = "_k";
pub const LABEL_PREFIX: &str = "_l";
pub const REGION_PREFIX: &str = "_r";
pub const TYVAR_PREFIX: &str = "_t";

impl Name {
    pub fn new(s: &str) -> Name {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_reserved(&self) -> bool {
        self.0.starts_with(RESERVED_PREFIX)
    }

    pub fn is_halt(&self) -> bool {
        &*self.0 == HALT
    }

    pub fn halt() -> Name {
        Name::new(HALT)
    }

    /// Numeric suffix if this name has the shape `<prefix><digits>`.
    pub fn suffix_after(&self, prefix: &str) -> Option<u64> {
        self.0.strip_prefix(prefix).and_then(|d| {
            if !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) {
                d.parse().ok()
            } else {
                None
            }
        })
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::new(s)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Deterministic generator of names `<prefix><n>` with increasing `n`.
#[derive(Clone, Debug)]
pub struct NameSupply {
    prefix: String,
    counter: u64,
}

impl NameSupply {
    pub fn new(prefix: &str) -> NameSupply {
        NameSupply { prefix: prefix.to_string(), counter: 0 }
    }

    pub fn vars() -> NameSupply {
        NameSupply::new(VAR_PREFIX)
    }

    pub fn labels() -> NameSupply {
        NameSupply::new(LABEL_PREFIX)
    }

    pub fn regions() -> NameSupply {
        NameSupply::new(REGION_PREFIX)
    }

    /// A supply whose draws avoid every name in `seen` carrying this prefix.
    pub fn above<'a, I>(prefix: &str, seen: I) -> NameSupply
    where
        I: IntoIterator<Item = &'a Name>,
    {
        let mut s = NameSupply::new(prefix);
        s.avoid(seen);
        s
    }

    pub fn avoid<'a, I>(&mut self, seen: I)
    where
        I: IntoIterator<Item = &'a Name>,
    {
        for n in seen {
            if let Some(k) = n.suffix_after(&self.prefix) {
                self.counter = self.counter.max(k + 1);
            }
        }
    }

    pub fn fresh(&mut self) -> Name {
        let n = Name::new(&format!("{}{}", self.prefix, self.counter));
        self.counter += 1;
        n
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_distinct_and_reserved() {
        let mut s = NameSupply::vars();
        let a = s.fresh();
        let b = s.fresh();
        assert_ne!(a, b);
        assert!(a.is_reserved());
        assert_eq!(a.as_str(), "_k0");
    }

    #[test]
    fn above_skips_existing_suffixes() {
        let seen = [Name::new("_k4"), Name::new("x"), Name::new("_l9")];
        let mut s = NameSupply::above(VAR_PREFIX, seen.iter());
        assert_eq!(s.fresh().as_str(), "_k5");
    }
}
