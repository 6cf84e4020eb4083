//! A small language for corecursive stream and coterm definitions: parser,
//! production-function derivation, guardedness analysis, and a whole-system
//! Kleene evaluator on approximants.

pub mod ast;
mod builtins;
mod derive;
mod eval;
mod guarded;
mod parse;

pub use ast::{EquationSystem, Sort};
pub use builtins::builtin_library;
pub use derive::{derive_pf, DeriveError, DerivedPfs};
pub use eval::{evaluate_prefix, stream_coterm, EvalError, Evaluator, Val};
pub use guarded::check_guarded;
pub use parse::{parse_defs, ParseError};
