//! Many-sorted terms, positions, AC canonical forms and matching.

mod canon;
mod filter;
mod gen;
mod matching;
mod parse;
mod position;
mod signature;
mod sliced;
#[allow(clippy::module_inception)]
mod term;

pub use canon::{ac_equal, flatten, flatten_recorded, replace_at, unflatten, PermutationRecord, Shape};
pub use filter::{filter_match, FilterPattern};
pub use gen::TermGenerator;
pub use matching::{match_capped, match_modulo, match_syntactic, match_with_views, Match, Substitution, DEFAULT_MATCH_CAP};
pub use parse::{parse_term, parse_term_raw, parse_term_with_vars};
pub use position::Position;
pub use signature::{literal_kind, LiteralKind, LiteralSorts, OpAttrs, OperatorDecl, Signature};
pub use sliced::SlicedTerm;
pub use term::{Symbol, Term};

#[derive(Debug, thiserror::Error)]
pub enum TermError {
    #[error("malformed position `{0}`")]
    BadPosition(String),
    #[error("position {0} does not exist in the term")]
    InvalidPosition(Position),
    #[error("bad declaration of {0}: {1}")]
    BadDeclaration(String, String),
    #[error("unknown sort {0}")]
    UnknownSort(String),
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("{op} expects {expected} argument(s), got {found}")]
    Arity { op: String, expected: usize, found: usize },
    #[error("argument {index} of {op} has sort {found}, expected {expected}")]
    SortClash { op: String, index: usize, expected: String, found: String },
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {source}")]
    At { line: usize, col: usize, source: Box<TermError> },
    #[error("{0} is not a rearrangement of {1}")]
    ShapeMismatch(String, String),
    #[error("more than {0} matches")]
    MatchCap(usize),
    #[error("bad filter pattern: {0}")]
    BadPattern(String),
}
