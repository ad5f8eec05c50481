//! Linear temporal properties over state predicates and rule labels:
//! parsing, translation to Büchi automata and explicit-state checking.

mod buchi;
mod check;
mod formula;

pub use buchi::{Automaton, BuchiState, Letter};
pub use check::{check, CheckResult, CheckStats, SearchBudget, StatePredicates, Verdict};
pub use formula::{parse_formula, Atom, Formula, Nnf};

use crate::rewrite::RewriteError;

#[derive(Debug, thiserror::Error)]
pub enum LtlError {
    #[error("formula syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("predicate evaluation failed: {0}")]
    Predicate(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("internal check failure: {0}")]
    Internal(String),
}
