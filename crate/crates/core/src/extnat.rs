//! Naturals extended with infinity, the codomain of size and production
//! functions.
//!
//! Arithmetic is absorbing at the top: `inf - n = inf`, `n + inf = inf`,
//! `n * inf = inf`. Subtraction on the finite part is truncated at zero
//! (monus), which is the only subtraction the calculus needs.

use std::fmt;

/// A natural number or infinity, totally ordered with `n <= Inf` for all `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

pub use ExtNat::{Fin, Inf};

impl ExtNat {
    pub const ZERO: ExtNat = Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Fin(_))
    }

    /// Finite value, or `None` for infinity.
    pub fn finite(self) -> Option<u64> {
        match self {
            Fin(n) => Some(n),
            Inf => None,
        }
    }

    pub fn add(self, k: u64) -> ExtNat {
        match self {
            Fin(n) => Fin(n + k),
            Inf => Inf,
        }
    }

    /// Truncated subtraction: `max(0, self - k)`; infinity is absorbing.
    pub fn monus(self, k: u64) -> ExtNat {
        match self {
            Fin(n) => Fin(n.saturating_sub(k)),
            Inf => Inf,
        }
    }

    pub fn min(self, other: ExtNat) -> ExtNat {
        std::cmp::min(self, other)
    }
}

impl From<u64> for ExtNat {
    fn from(n: u64) -> Self {
        Fin(n)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fin(n) => write!(f, "{n}"),
            Inf => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_puts_infinity_on_top() {
        assert!(Fin(0) < Fin(1));
        assert!(Fin(u64::MAX) < Inf);
        assert_eq!(Fin(3).min(Inf), Fin(3));
    }

    #[test]
    fn arithmetic_is_absorbing() {
        assert_eq!(Inf.monus(17), Inf);
        assert_eq!(Fin(2).monus(5), Fin(0));
        assert_eq!(Inf.add(1), Inf);
        assert_eq!(Fin(4).add(1), Fin(5));
    }
}
