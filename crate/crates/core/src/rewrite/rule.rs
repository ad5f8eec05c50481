use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RewriteError;
use crate::term::{flatten, parse_term_raw, Position, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Neq,
    /// Numeric comparison of natural-number literals.
    Lt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    Test { rel: Relation, lhs: Term, rhs: Term },
    /// A builtin predicate over variables of the left-hand side.
    Pred { name: String, args: Vec<Term> },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Test { rel, lhs, rhs } => {
                let op = match rel {
                    Relation::Eq => "=",
                    Relation::Neq => "!=",
                    Relation::Lt => "<",
                };
                write!(f, "{lhs} {op} {rhs}")
            }
            Condition::Pred { name, args } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub lhs: Term,
    pub rhs: Term,
    pub conditions: Vec<Condition>,
    /// Applies only at the root of the state.
    pub top_only: bool,
}

impl Rule {
    /// Checks that the rule is well formed: same sort on both sides, no
    /// builtin symbols on the left, right-hand and condition variables bound
    /// by the left, predicate arguments are variables.
    pub fn validate(&self, sig: &Signature) -> Result<(), RewriteError> {
        let bad = |msg: String| RewriteError::BadRule(self.label.clone(), msg);
        if self.lhs.sort() != self.rhs.sort() {
            return Err(bad(format!("sides have sorts {} and {}", self.lhs.sort(), self.rhs.sort())));
        }
        if self.lhs.is_var() {
            return Err(bad("left-hand side is a variable".into()));
        }
        for p in self.lhs.positions() {
            let t = self.lhs.subterm_at(&p).expect("own position");
            if !t.is_var() && sig.is_builtin(t.head()) {
                return Err(bad(format!("builtin {} on the left-hand side", t.head())));
            }
        }
        let bound: Vec<_> = self.lhs.vars().into_iter().map(|(n, _)| n).collect();
        let mut used = self.rhs.vars();
        for c in &self.conditions {
            match c {
                Condition::Test { lhs, rhs, .. } => {
                    used.extend(lhs.vars());
                    used.extend(rhs.vars());
                }
                Condition::Pred { args, .. } => {
                    for a in args {
                        if !a.is_var() {
                            return Err(bad(format!("predicate argument {a} is not a variable")));
                        }
                        used.extend(a.vars());
                    }
                }
            }
        }
        for (n, _) in used {
            if !bound.contains(&n) {
                return Err(bad(format!("variable {n} is not bound by the left-hand side")));
            }
        }
        Ok(())
    }
}

/// How the output of a builtin call depends on its arguments. Positions
/// are relative to the call term: outputs index into the result, inputs
/// start with the argument number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependency {
    /// The output subterm is a verbatim copy of the input subterm.
    Copy { output: Position, input: Position },
    /// The output symbol was computed from the listed input symbols.
    Computed { output: Position, inputs: Vec<Position> },
}

/// Output positions covered by no entry are constants of the builtin.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DependencyRecord(pub Vec<Dependency>);

impl DependencyRecord {
    pub fn copy(&mut self, output: Position, input: Position) {
        self.0.push(Dependency::Copy { output, input });
    }

    pub fn computed(&mut self, output: Position, inputs: Vec<Position>) {
        self.0.push(Dependency::Computed { output, inputs });
    }

    /// Input symbols that the output symbol at `q` depends on.
    pub fn sources(&self, q: &Position) -> Vec<Position> {
        let best = self
            .0
            .iter()
            .filter(|d| match d {
                Dependency::Copy { output, .. } => output.is_prefix_of(q),
                Dependency::Computed { output, .. } => output == q,
            })
            .max_by_key(|d| match d {
                Dependency::Copy { output, .. } | Dependency::Computed { output, .. } => output.len(),
            });
        match best {
            Some(Dependency::Copy { output, input }) => {
                vec![input.join(&q.strip_prefix(output).expect("prefix"))]
            }
            Some(Dependency::Computed { inputs, .. }) => inputs.clone(),
            None => vec![],
        }
    }
}

/// Symbols evaluated natively rather than by rules.
pub trait Builtins: Send + Sync + fmt::Debug {
    /// Name under which the set is resolved when a trace is loaded.
    fn name(&self) -> &str;

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::new()
    }

    fn eval(&self, op: &str, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError>;

    /// Result only; the checker's hot path.
    fn eval_value(&self, op: &str, args: &[Term], sig: &Signature) -> Result<Term, RewriteError> {
        Ok(self.eval(op, args, sig)?.0)
    }

    /// `None` when the predicate is false; otherwise the symbols it read as
    /// `(argument index, position within the argument)`.
    fn predicate(&self, name: &str, args: &[Term], sig: &Signature) -> Result<Option<Vec<(usize, Position)>>, RewriteError>;
}

#[derive(Debug, Default)]
pub struct NoBuiltins;

impl Builtins for NoBuiltins {
    fn name(&self) -> &str {
        "none"
    }

    fn eval(&self, op: &str, _: &[Term], _: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        Err(RewriteError::UnknownBuiltin(op.to_string()))
    }

    fn predicate(&self, name: &str, _: &[Term], _: &Signature) -> Result<Option<Vec<(usize, Position)>>, RewriteError> {
        Err(RewriteError::UnknownBuiltin(name.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct Theory {
    pub sig: Signature,
    pub rules: Vec<Rule>,
    pub builtins: Arc<dyn Builtins>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionDoc {
    Test { rel: Relation, lhs: String, rhs: String },
    Pred { name: String, args: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDoc {
    pub label: String,
    pub lhs: String,
    pub rhs: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditions: Vec<ConditionDoc>,
    pub top_only: bool,
}

/// Serialisable form of a theory; builtins are referred to by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoryDoc {
    pub signature: Signature,
    pub rules: Vec<RuleDoc>,
    pub builtins: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Theory {
    /// Left-hand sides are brought to canonical form so they can be matched
    /// modulo AC.
    pub fn new(sig: Signature, mut rules: Vec<Rule>, builtins: Arc<dyn Builtins>) -> Result<Self, RewriteError> {
        let mut seen = std::collections::BTreeSet::new();
        for r in &mut rules {
            r.lhs = flatten(&r.lhs, &sig);
            if !seen.insert(r.label.clone()) {
                return Err(RewriteError::BadRule(r.label.clone(), "duplicate label".into()));
            }
            r.validate(&sig)?;
        }
        Ok(Theory { sig, rules, builtins })
    }

    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.label == label)
    }

    pub fn to_doc(&self) -> TheoryDoc {
        TheoryDoc {
            signature: self.sig.clone(),
            rules: self
                .rules
                .iter()
                .map(|r| RuleDoc {
                    label: r.label.clone(),
                    lhs: r.lhs.to_string(),
                    rhs: r.rhs.to_string(),
                    conditions: r
                        .conditions
                        .iter()
                        .map(|c| match c {
                            Condition::Test { rel, lhs, rhs } => {
                                ConditionDoc::Test { rel: *rel, lhs: lhs.to_string(), rhs: rhs.to_string() }
                            }
                            Condition::Pred { name, args } => ConditionDoc::Pred {
                                name: name.clone(),
                                args: args.iter().map(Term::to_string).collect(),
                            },
                        })
                        .collect(),
                    top_only: r.top_only,
                })
                .collect(),
            builtins: self.builtins.name().to_string(),
            params: self.builtins.params(),
        }
    }

    pub fn from_doc(doc: &TheoryDoc, builtins: Arc<dyn Builtins>) -> Result<Self, RewriteError> {
        let sig = doc.signature.clone();
        let p = |s: &str| parse_term_raw(s, &sig);
        let mut rules = Vec::new();
        for r in &doc.rules {
            let mut conditions = Vec::new();
            for c in &r.conditions {
                conditions.push(match c {
                    ConditionDoc::Test { rel, lhs, rhs } => Condition::Test { rel: *rel, lhs: p(lhs)?, rhs: p(rhs)? },
                    ConditionDoc::Pred { name, args } => Condition::Pred {
                        name: name.clone(),
                        args: args.iter().map(|a| p(a)).collect::<Result<_, _>>()?,
                    },
                });
            }
            rules.push(Rule { label: r.label.clone(), lhs: p(&r.lhs)?, rhs: p(&r.rhs)?, conditions, top_only: r.top_only });
        }
        Theory::new(sig, rules, builtins)
    }

    /// SHA-256 of the serialised theory.
    pub fn hash(&self) -> String {
        doc_hash(&self.to_doc())
    }
}

pub fn doc_hash(doc: &TheoryDoc) -> String {
    let bytes = serde_json::to_vec(doc).expect("theory serialises");
    hex::encode(Sha256::digest(&bytes))
}
