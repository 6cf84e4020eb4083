//! A workbench for corecursion and coinduction: lazily unfolded coterms with
//! depth-bounded approximants, the production-function calculus with a
//! Kleene solver and productivity verdicts, a small DSL for corecursive
//! stream definitions, a stage-bounded engine for coinductively defined
//! relations, and an infinitary lambda engine computing Böhm trees through
//! head reduction.

pub mod coterm;
pub mod extnat;
pub mod prodfun;
pub mod signature;
pub mod streamlang;

pub use coterm::{bisimilar_to_depth, cut, Approximant, Coterm, CotermError, MemoBudget, Position};
pub use extnat::ExtNat;
pub use prodfun::{
    check_productivity, PfSystem, PfValue, ProdFun, ProductivityStatus, ProductivityVerdict,
};
pub use signature::{CtorTag, Signature, SortId};
