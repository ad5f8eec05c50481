//! Backward slicing of traces: relevance is pushed from a criterion in one
//! state back to the initial state, one recorded step at a time.

mod replay;

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

pub use replay::{replay_check, ReplayFailure, ReplayReport};

use crate::rewrite::{Builtins, RewriteError, RewriteStep, StepKind, Theory, Trace, TraceDoc};
use crate::term::{FilterPattern, Position, SlicedTerm, Term, TermError};

#[derive(Debug, thiserror::Error)]
pub enum SliceError {
    #[error("state index {0} out of range")]
    BadIndex(usize),
    #[error("position {1} is not valid in state {0}")]
    BadPosition(usize, Position),
    #[error("step {0}: {1}")]
    Step(usize, String),
    #[error("malformed sliced trace: {0}")]
    Doc(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// Ancestor-closed positions of one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlicingCriterion {
    pub state_index: usize,
    pub positions: BTreeSet<Position>,
}

fn close(positions: impl IntoIterator<Item = Position>) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for p in positions {
        if out.contains(&p) {
            continue;
        }
        out.extend(p.ancestors());
        out.insert(p);
    }
    out
}

impl SlicingCriterion {
    pub fn new(trace: &Trace, state_index: usize, positions: impl IntoIterator<Item = Position>) -> Result<Self, SliceError> {
        let state = trace.states.get(state_index).ok_or(SliceError::BadIndex(state_index))?;
        let positions = close(positions);
        if let Some(p) = positions.iter().find(|p| !state.is_valid_position(p)) {
            return Err(SliceError::BadPosition(state_index, p.clone()));
        }
        Ok(SlicingCriterion { state_index, positions })
    }
}

/// The criterion selected by `fp` in the given state; empty when the
/// pattern matches nothing.
pub fn criterion_from_pattern(trace: &Trace, state_index: usize, fp: &FilterPattern) -> Result<SlicingCriterion, SliceError> {
    let state = trace.states.get(state_index).ok_or(SliceError::BadIndex(state_index))?;
    SlicingCriterion::new(trace, state_index, fp.criterion(state))
}

fn below(p: &Position, w: &Position) -> Option<Position> {
    p.strip_prefix(w)
}

/// Where a position of the instantiated right-hand side comes from: a
/// variable and the offset inside its binding, or `None` on a skeleton
/// symbol.
fn rhs_origin(rhs: &Term, q: &Position) -> Option<(String, Position)> {
    let mut t = rhs;
    for (depth, &i) in q.path().iter().enumerate() {
        if t.is_var() {
            return Some((t.head().to_string(), Position::new(q.path()[depth..].to_vec())));
        }
        t = t.args().get(i as usize - 1)?;
    }
    t.is_var().then(|| (t.head().to_string(), Position::root()))
}

/// Source positions needed to produce `target_positions` across `step`.
pub fn slice_step_backward(
    theory: &Theory,
    step: &RewriteStep,
    source: &Term,
    target: &Term,
    target_positions: &BTreeSet<Position>,
) -> Result<BTreeSet<Position>, SliceError> {
    let bad = |msg: String| SliceError::Step(0, format!("{} {} at {}: {msg}", step.kind, step.label, step.position));
    if let Some(p) = target_positions.iter().find(|p| !target.is_valid_position(p)) {
        return Err(bad(format!("relevant position {p} not in target")));
    }
    let w = &step.position;
    let mut out = BTreeSet::new();
    let mut inside = vec![];
    for p in target_positions {
        match below(p, w) {
            Some(q) => inside.push(q),
            None => {
                out.insert(p.clone());
            }
        }
    }
    if inside.is_empty() {
        return Ok(out);
    }
    match step.kind {
        StepKind::Flat | StepKind::Unflat => {
            let rec = step.permutation.as_ref().ok_or_else(|| bad("missing permutation".into()))?;
            for q in &inside {
                out.extend(rec.backward(q)?.into_iter().map(|r| w.join(&r)));
            }
        }
        StepKind::RuleApp => {
            let rule = theory.rule(&step.label).ok_or_else(|| RewriteError::UnknownRule(step.label.clone()))?;
            for q in &inside {
                if let Some((x, offset)) = rhs_origin(&rule.rhs, q) {
                    for occ in rule.lhs.var_positions(&x) {
                        out.insert(w.join(&occ).join(&offset));
                    }
                }
            }
            // what the rule needs to fire: its left-hand side skeleton and
            // whatever the conditions inspected
            for l in rule.lhs.positions() {
                if !rule.lhs.subterm_at(&l)?.is_var() {
                    out.insert(w.join(&l));
                }
            }
            out.extend(step.test_reads.iter().map(|r| w.join(r)));
        }
        StepKind::Builtin => {
            out.insert(w.clone());
            match &step.dependencies {
                Some(deps) => {
                    for q in &inside {
                        out.extend(deps.sources(q).into_iter().map(|r| w.join(&r)));
                    }
                }
                None => {
                    let call = source.subterm_at(w)?;
                    out.extend(call.positions().into_iter().map(|r| w.join(&r)));
                }
            }
        }
    }
    let out = close(out);
    if let Some(p) = out.iter().find(|p| !source.is_valid_position(p)) {
        return Err(bad(format!("computed position {p} not in source")));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    /// |T|: symbols of the original states.
    pub original: usize,
    /// |T•|: symbols of the sliced states, one per hole.
    pub sliced: usize,
    pub ratio: f64,
    /// Percentage of symbols removed.
    pub reduction: f64,
}

impl SliceMetrics {
    fn new(original: usize, sliced: usize) -> Self {
        let ratio = if original == 0 { 0.0 } else { sliced as f64 / original as f64 };
        SliceMetrics { original, sliced, ratio, reduction: 100.0 * (1.0 - ratio) }
    }
}

#[derive(Clone, Debug)]
pub struct SlicedTrace {
    pub criterion: SlicingCriterion,
    pub states: Vec<SlicedTerm>,
    pub steps: Vec<RewriteStep>,
}

impl SlicedTrace {
    /// Metrics over the states in `range`.
    pub fn metrics_over(&self, range: RangeInclusive<usize>) -> SliceMetrics {
        let slice = &self.states[range];
        SliceMetrics::new(slice.iter().map(|s| s.term().size()).sum(), slice.iter().map(SlicedTerm::symbol_count).sum())
    }

    pub fn metrics(&self) -> SliceMetrics {
        self.metrics_over(0..=self.states.len() - 1)
    }

    /// Metrics of the last `n` states up to the criterion state.
    pub fn metrics_last(&self, n: usize) -> SliceMetrics {
        let end = self.criterion.state_index;
        self.metrics_over(end + 1 - n.min(end + 1)..=end)
    }

    pub fn to_doc(&self, trace: &Trace) -> SlicedTraceDoc {
        let sig = &trace.theory.sig;
        SlicedTraceDoc {
            trace: trace.to_doc(),
            state_index: self.criterion.state_index,
            criterion: self.criterion.positions.iter().cloned().collect(),
            slices: self
                .states
                .iter()
                .map(|s| StateSliceDoc { kept_positions: s.kept().iter().cloned().collect(), slice: s.render_with(Some(sig), '*') })
                .collect(),
            metrics: self.metrics(),
        }
    }

    /// Rebuilds a sliced trace from its document; the kept positions are
    /// authoritative and the rendered slices must agree with them (either
    /// `*` or `•` holes).
    pub fn from_doc(
        doc: &SlicedTraceDoc,
        resolve: impl Fn(&str, &std::collections::BTreeMap<String, String>) -> Option<std::sync::Arc<dyn Builtins>>,
    ) -> Result<(Trace, SlicedTrace), SliceError> {
        let trace = Trace::from_doc(&doc.trace, resolve)?;
        if doc.slices.len() != trace.states.len() {
            return Err(SliceError::Doc("one slice per state expected".into()));
        }
        let criterion = SlicingCriterion::new(&trace, doc.state_index, doc.criterion.iter().cloned())?;
        let mut states = vec![];
        for (i, (sd, t)) in doc.slices.iter().zip(&trace.states).enumerate() {
            if let Some(p) = sd.kept_positions.iter().find(|p| !t.is_valid_position(p)) {
                return Err(SliceError::BadPosition(i, p.clone()));
            }
            let st = SlicedTerm::new(t.clone(), sd.kept_positions.iter().cloned());
            if st.kept().len() != sd.kept_positions.len() {
                return Err(SliceError::Doc(format!("kept positions of state {i} are not ancestor-closed")));
            }
            if sd.slice.replace('•', "*") != st.render_with(Some(&trace.theory.sig), '*') {
                return Err(SliceError::Doc(format!("rendered slice of state {i} disagrees with its positions")));
            }
            states.push(st);
        }
        let sliced = SlicedTrace { criterion, states, steps: trace.steps.clone() };
        Ok((trace, sliced))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSliceDoc {
    pub kept_positions: Vec<Position>,
    pub slice: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicedTraceDoc {
    #[serde(flatten)]
    pub trace: TraceDoc,
    pub state_index: usize,
    pub criterion: Vec<Position>,
    pub slices: Vec<StateSliceDoc>,
    pub metrics: SliceMetrics,
}

/// Slices every state from the criterion back to the first; later states
/// are all holes.
pub fn slice_trace(trace: &Trace, criterion: &SlicingCriterion) -> Result<SlicedTrace, SliceError> {
    let n = criterion.state_index;
    if n >= trace.states.len() {
        return Err(SliceError::BadIndex(n));
    }
    let mut kept: Vec<BTreeSet<Position>> = vec![BTreeSet::new(); trace.states.len()];
    kept[n] = criterion.positions.clone();
    for k in (0..n).rev() {
        kept[k] = slice_step_backward(&trace.theory, &trace.steps[k], &trace.states[k], &trace.states[k + 1], &kept[k + 1])
            .map_err(|e| match e {
                SliceError::Step(_, m) => SliceError::Step(k, m),
                e => e,
            })?;
    }
    let states = trace.states.iter().zip(kept).map(|(t, k)| SlicedTerm::new(t.clone(), k)).collect();
    Ok(SlicedTrace { criterion: criterion.clone(), states, steps: trace.steps.clone() })
}
