//! Filter patterns select the part of a state a slice should explain.
//!
//! `?` marks a relevant subterm, `_` an irrelevant one, a quoted literal
//! matches that constant exactly and a bare name matches any operator whose
//! name contains it. Arguments are matched positionally and arities must
//! agree.

use std::collections::BTreeSet;
use std::fmt;

use super::parse::{parse_sx, Sx};
use super::{Position, SlicedTerm, Term, TermError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterPattern {
    Relevant,
    Blank,
    Named { name: String, exact: bool, args: Vec<FilterPattern> },
}

impl FilterPattern {
    pub fn parse(text: &str) -> Result<Self, TermError> {
        let p = Self::from_sx(&parse_sx(text)?)?;
        if p.all_blank() {
            return Err(TermError::BadPattern(format!("`{text}` selects nothing")));
        }
        Ok(p)
    }

    fn from_sx(sx: &Sx) -> Result<Self, TermError> {
        if sx.var_sort.is_some() {
            return Err(TermError::BadPattern(format!("variables are not allowed in patterns ({})", sx.name)));
        }
        let args = sx.args.iter().map(Self::from_sx).collect::<Result<Vec<_>, _>>()?;
        match sx.name.as_str() {
            "?" | "_" if !args.is_empty() => {
                Err(TermError::BadPattern(format!("`{}` takes no arguments", sx.name)))
            }
            "?" => Ok(FilterPattern::Relevant),
            "_" => Ok(FilterPattern::Blank),
            n => Ok(FilterPattern::Named { name: n.to_string(), exact: n.starts_with('"'), args }),
        }
    }

    fn all_blank(&self) -> bool {
        match self {
            FilterPattern::Blank => true,
            FilterPattern::Relevant => false,
            // a named leaf selects itself
            FilterPattern::Named { args, .. } => !args.is_empty() && args.iter().all(Self::all_blank),
        }
    }

    fn name_matches(name: &str, exact: bool, op: &str) -> bool {
        if exact {
            name == op
        } else {
            op.contains(name)
        }
    }

    /// Matches at the root of `t`; on success pushes the selected positions
    /// (relative to `t`, offset by `at`).
    fn select(&self, t: &Term, at: &Position, out: &mut Vec<Position>) -> bool {
        match self {
            FilterPattern::Blank => true,
            FilterPattern::Relevant => {
                t.collect_positions(at.clone(), out);
                true
            }
            FilterPattern::Named { name, exact, args } => {
                if t.is_var() || t.arity() != args.len() || !Self::name_matches(name, *exact, t.head()) {
                    return false;
                }
                let mark = out.len();
                if args.is_empty() {
                    out.push(at.clone());
                    return true;
                }
                for (i, (p, a)) in args.iter().zip(t.args()).enumerate() {
                    if !p.select(a, &at.child(i as u32 + 1), out) {
                        out.truncate(mark);
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Positions of `t` where the pattern matches.
    pub fn matches(&self, t: &Term) -> Vec<Position> {
        let mut scratch = Vec::new();
        t.positions()
            .into_iter()
            .filter(|p| {
                scratch.clear();
                self.select(t.subterm_at(p).expect("own position"), p, &mut scratch)
            })
            .collect()
    }

    /// The slicing criterion: the positions selected by some match (whole
    /// `?` subterms and matched named leaves). Enclosing operators are not
    /// included; a slice keeps them as context.
    pub fn criterion(&self, t: &Term) -> BTreeSet<Position> {
        let mut out = BTreeSet::new();
        for p in t.positions() {
            let mut local = Vec::new();
            if self.select(t.subterm_at(&p).expect("own position"), &p, &mut local) {
                out.extend(local);
            }
        }
        out
    }
}

/// Criterion of `fp` on `subject` and the induced slice.
pub fn filter_match(fp: &FilterPattern, subject: &Term) -> (SlicedTerm, BTreeSet<Position>) {
    let crit = fp.criterion(subject);
    (SlicedTerm::new(subject.clone(), crit.iter().cloned()), crit)
}

impl fmt::Display for FilterPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterPattern::Relevant => f.write_str("?"),
            FilterPattern::Blank => f.write_str("_"),
            FilterPattern::Named { name, args, .. } => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}
