//! The closure-ordinal example: a unary relation on naturals-with-infinity
//! whose defining operator needs one step past the first limit to close.
//!
//! Rules: membership of n+1 needs membership of n, and membership of
//! infinity needs membership of some natural. Finite stages keep
//! `{m | m >= n}` plus infinity, the limit keeps only infinity, and one
//! more application empties the relation.

use std::collections::BTreeSet;

use crate::extnat::{ExtNat, Fin, Inf};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureTrace {
    pub window: u64,
    /// Finite stages 1..=window restricted to {0..window, inf}.
    pub stages: Vec<BTreeSet<ExtNat>>,
    /// The limit snapshot: the intersection of all finite stages.
    pub omega: BTreeSet<ExtNat>,
    /// Further applications of the operator past the limit.
    pub post_omega: Vec<BTreeSet<ExtNat>>,
}

fn full_window(window: u64) -> BTreeSet<ExtNat> {
    let mut s: BTreeSet<ExtNat> = (0..=window).map(Fin).collect();
    s.insert(Inf);
    s
}

fn apply(window: u64, x: &BTreeSet<ExtNat>) -> BTreeSet<ExtNat> {
    let mut out = BTreeSet::new();
    let mut has_nat = false;
    for v in x {
        if let Fin(n) = v {
            has_nat = true;
            if n + 1 <= window {
                out.insert(Fin(n + 1));
            }
        }
    }
    if has_nat {
        out.insert(Inf);
    }
    out
}

/// Computes the finite stages on the window, the limit snapshot, and
/// `extra_steps` further operator applications.
///
/// The window is trustworthy up to stage `window + 1`: beyond that the
/// witnesses for the infinity rule would lie outside the window, so the
/// limit is taken as the intersection of stages 1..=window+1 (a descending
/// chain whose finite part has emptied by then).
pub fn closure_ordinal_trace(window: u64, extra_steps: usize) -> ClosureTrace {
    let mut cur = full_window(window);
    let mut stages = Vec::new();
    let mut omega = full_window(window);
    for _ in 0..=window {
        cur = apply(window, &cur);
        omega = omega.intersection(&cur).cloned().collect();
        stages.push(cur.clone());
    }
    // The returned stages are 1..=window; the extra stage only feeds omega.
    stages.truncate(window as usize);
    let mut post_omega = Vec::new();
    let mut p = omega.clone();
    for _ in 0..extra_steps {
        p = apply(window, &p);
        post_omega.push(p.clone());
    }
    ClosureTrace {
        window,
        stages,
        omega,
        post_omega,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_match_the_closed_form() {
        let trace = closure_ordinal_trace(8, 2);
        for (i, stage) in trace.stages.iter().enumerate() {
            let n = (i + 1) as u64;
            let mut expect: BTreeSet<ExtNat> = (n..=8).map(Fin).collect();
            expect.insert(Inf);
            assert_eq!(stage, &expect, "stage {n}");
        }
    }

    #[test]
    fn omega_keeps_only_infinity_and_then_empties() {
        let trace = closure_ordinal_trace(8, 2);
        let expect: BTreeSet<ExtNat> = [Inf].into_iter().collect();
        assert_eq!(trace.omega, expect);
        assert!(trace.post_omega[0].is_empty());
        assert!(trace.post_omega[1].is_empty());
    }
}
