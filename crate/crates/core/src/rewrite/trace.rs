use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::rule::{doc_hash, Builtins, DependencyRecord, Theory, TheoryDoc};
use super::RewriteError;
use crate::term::{parse_term_raw, PermutationRecord, Position, Substitution, Term};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Flat,
    Unflat,
    RuleApp,
    Builtin,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Flat => "flat",
            StepKind::Unflat => "unflat",
            StepKind::RuleApp => "rule_app",
            StepKind::Builtin => "builtin",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewriteStep {
    pub kind: StepKind,
    /// Rule label, builtin operator, or `flat`/`unflat`.
    pub label: String,
    pub position: Position,
    pub matcher: Option<Substitution>,
    pub permutation: Option<PermutationRecord>,
    pub dependencies: Option<DependencyRecord>,
    /// Symbols read by rule conditions, relative to the redex.
    pub test_reads: Vec<Position>,
}

impl RewriteStep {
    pub fn new(kind: StepKind, label: &str, position: Position) -> Self {
        RewriteStep {
            kind,
            label: label.to_string(),
            position,
            matcher: None,
            permutation: None,
            dependencies: None,
            test_reads: vec![],
        }
    }

    pub fn with_permutation(mut self, rec: PermutationRecord) -> Self {
        self.permutation = Some(rec);
        self
    }
}

/// A finite execution: `steps[k]` rewrites `states[k]` into
/// `states[k + 1]`. Counterexamples also carry the index of the state the
/// final state loops back to.
#[derive(Clone, Debug)]
pub struct Trace {
    pub theory: Arc<Theory>,
    pub property: Option<String>,
    pub lasso_start: Option<usize>,
    pub states: Vec<Term>,
    pub steps: Vec<RewriteStep>,
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        self.theory.to_doc() == other.theory.to_doc()
            && self.property == other.property
            && self.lasso_start == other.lasso_start
            && self.states == other.states
            && self.steps == other.steps
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDoc {
    pub kind: StepKind,
    pub label: String,
    pub position: Position,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matcher: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<PermutationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<DependencyRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub test_reads: Vec<Position>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub version: u32,
    pub theory_hash: String,
    pub theory: TheoryDoc,
    #[serde(default)]
    pub property: Option<String>,
    #[serde(default)]
    pub lasso_start: Option<usize>,
    pub states: Vec<String>,
    pub steps: Vec<StepDoc>,
}

impl Trace {
    pub fn new(theory: Arc<Theory>, initial: Term) -> Self {
        Trace { theory, property: None, lasso_start: None, states: vec![initial], steps: vec![] }
    }

    pub fn last_state(&self) -> &Term {
        self.states.last().expect("a trace has at least one state")
    }

    pub fn push(&mut self, step: RewriteStep, state: Term) {
        self.steps.push(step);
        self.states.push(state);
    }

    /// Indices of states at transition boundaries (canonical states between
    /// two rule applications), including the first and last.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = vec![0];
        for (k, st) in self.steps.iter().enumerate() {
            let starts_next = self
                .steps
                .get(k + 1)
                .map_or(true, |n| matches!(n.kind, StepKind::Unflat | StepKind::RuleApp));
            let inside_unflat = st.kind == StepKind::Unflat;
            if starts_next && !inside_unflat {
                out.push(k + 1);
            }
        }
        out
    }

    /// Rule labels in order.
    pub fn rule_labels(&self) -> Vec<&str> {
        self.steps.iter().filter(|s| s.kind == StepKind::RuleApp).map(|s| s.label.as_str()).collect()
    }

    /// Replays every step from the first state and checks that each
    /// recorded state is reproduced exactly.
    pub fn verify(&self) -> Result<(), RewriteError> {
        for (k, step) in self.steps.iter().enumerate() {
            let next = self.theory.replay_step(&self.states[k], step, true)?;
            if next != self.states[k + 1] {
                return Err(RewriteError::Replay(format!("step {k} ({} {}) yields a different state", step.kind, step.label)));
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> TraceDoc {
        let theory = self.theory.to_doc();
        TraceDoc {
            version: TRACE_FORMAT_VERSION,
            theory_hash: doc_hash(&theory),
            theory,
            property: self.property.clone(),
            lasso_start: self.lasso_start,
            states: self.states.iter().map(Term::to_string).collect(),
            steps: self
                .steps
                .iter()
                .map(|s| StepDoc {
                    kind: s.kind,
                    label: s.label.clone(),
                    position: s.position.clone(),
                    matcher: s.matcher.as_ref().map(|m| m.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()),
                    permutation: s.permutation.clone(),
                    dependencies: s.dependencies.clone(),
                    test_reads: s.test_reads.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("trace serialises")
    }

    /// Rebuilds a trace; `resolve` supplies the builtin set named in the
    /// document.
    pub fn from_doc(
        doc: &TraceDoc,
        resolve: impl Fn(&str, &BTreeMap<String, String>) -> Option<Arc<dyn Builtins>>,
    ) -> Result<Self, RewriteError> {
        if doc.version != TRACE_FORMAT_VERSION {
            return Err(RewriteError::Format(format!("unsupported trace version {}", doc.version)));
        }
        if doc_hash(&doc.theory) != doc.theory_hash {
            return Err(RewriteError::Format("theory hash mismatch".into()));
        }
        let builtins = resolve(&doc.theory.builtins, &doc.theory.params)
            .ok_or_else(|| RewriteError::Format(format!("unknown builtin set {}", doc.theory.builtins)))?;
        let theory = Arc::new(Theory::from_doc(&doc.theory, builtins)?);
        let sig = &theory.sig;
        let states = doc.states.iter().map(|s| parse_term_raw(s, sig)).collect::<Result<Vec<_>, _>>()?;
        if states.is_empty() || states.len() != doc.steps.len() + 1 {
            return Err(RewriteError::Format("states must be one more than steps".into()));
        }
        let mut steps = Vec::with_capacity(doc.steps.len());
        for s in &doc.steps {
            let matcher = match &s.matcher {
                None => None,
                Some(m) => {
                    let rule = theory.rule(&s.label).ok_or_else(|| RewriteError::UnknownRule(s.label.clone()))?;
                    let mut sub = Substitution::new();
                    for (k, v) in m {
                        if !rule.lhs.vars().iter().any(|(n, _)| **n == **k) {
                            return Err(RewriteError::Format(format!("matcher binds unknown variable {k}")));
                        }
                        sub.insert(k.as_str(), parse_term_raw(v, sig)?);
                    }
                    Some(sub)
                }
            };
            steps.push(RewriteStep {
                kind: s.kind,
                label: s.label.clone(),
                position: s.position.clone(),
                matcher,
                permutation: s.permutation.clone(),
                dependencies: s.dependencies.clone(),
                test_reads: s.test_reads.clone(),
            });
        }
        if let Some(l) = doc.lasso_start {
            if l >= states.len() {
                return Err(RewriteError::Format(format!("lasso start {l} out of range")));
            }
        }
        Ok(Trace { theory, property: doc.property.clone(), lasso_start: doc.lasso_start, states, steps })
    }

    pub fn from_json(
        text: &str,
        resolve: impl Fn(&str, &BTreeMap<String, String>) -> Option<Arc<dyn Builtins>>,
    ) -> Result<Self, RewriteError> {
        let doc: TraceDoc = serde_json::from_str(text).map_err(|e| RewriteError::Format(e.to_string()))?;
        Self::from_doc(&doc, resolve)
    }
}
