//! Conditional rewriting modulo AC with explicit, replayable steps.

mod engine;
mod rule;
mod trace;

pub use engine::Transition;
pub use rule::{
    doc_hash, Builtins, Condition, ConditionDoc, Dependency, DependencyRecord, NoBuiltins, Relation, Rule, RuleDoc,
    Theory, TheoryDoc,
};
pub use trace::{RewriteStep, StepDoc, StepKind, Trace, TraceDoc, TRACE_FORMAT_VERSION};

use crate::term::TermError;

#[derive(Debug, thiserror::Error)]
pub enum RewriteError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("rule {0}: {1}")]
    BadRule(String, String),
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("unknown builtin {0}")]
    UnknownBuiltin(String),
    #[error("builtin {0}: {1}")]
    Builtin(String, String),
    #[error("condition: {0}")]
    Condition(String),
    #[error("replay: {0}")]
    Replay(String),
    #[error("trace format: {0}")]
    Format(String),
}
