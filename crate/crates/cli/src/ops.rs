//! Operations behind both front ends.

use std::time::Duration;

use navslice::ltl::{self, parse_formula, LtlError, SearchBudget, Verdict};
use navslice::rewrite::Trace;
use navslice::slicer::{criterion_from_pattern, replay_check, slice_trace, SliceError, SlicedTrace};
use navslice::term::{FilterPattern, Position, Term};
use navslice::webapp::{render_dot, resolve_builtins, WebModel};

use crate::docs::*;
use crate::error::AppError;
use crate::store::{IndexEntry, TraceStore};

/// `label` prefixes diagnostics, normally the file name.
pub fn load_spec(label: &str, text: &str) -> Result<WebModel, AppError> {
    WebModel::parse(text).map_err(|e| AppError::Load(format!("{label}:{e}")))
}

impl BudgetDoc {
    pub fn to_search(&self) -> SearchBudget {
        let d = SearchBudget::default();
        SearchBudget {
            max_states: self.max_states.unwrap_or(d.max_states),
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            time_limit: Duration::from_secs(600),
        }
    }
}

fn refuted(entry: &IndexEntry, trace: &Trace) -> VerdictDoc {
    VerdictDoc {
        version: DOC_VERSION,
        verdict: "refuted".into(),
        property: entry.property.clone(),
        theory_hash: entry.theory_hash.clone(),
        trace_id: Some(entry.id.clone()),
        trace_states: Some(trace.states.len()),
        lasso_start: trace.lasso_start,
        reason: None,
        stats: entry.stats,
    }
}

/// Checks `property` on the model, storing any counterexample. A stored
/// counterexample for the same theory and property is reused.
pub fn check(store: &TraceStore, label: &str, req: &CheckRequest) -> Result<VerdictDoc, AppError> {
    let model = load_spec(label, &req.spec)?;
    let f = parse_formula(&req.property).map_err(|e| AppError::Load(format!("property: {e}")))?;
    let property = f.to_string();
    let theory_hash = model.theory.hash();
    // models differing only in their pages share the theory, so the
    // initial state has to match too
    for entry in store.find(&theory_hash, &property)? {
        let trace = store.load(&entry.id)?;
        if trace.states[0] == model.initial {
            return Ok(refuted(&entry, &trace));
        }
    }
    let res = ltl::check(&model.theory, &model.initial, &model, &f, &req.budget.to_search()).map_err(|e| match e {
        LtlError::Syntax { .. } | LtlError::UnknownPredicate(_) => AppError::Load(format!("property: {e}")),
        e => AppError::Internal(e.to_string()),
    })?;
    let stats = SearchStats::from(&res.stats);
    let mut doc = VerdictDoc {
        version: DOC_VERSION,
        verdict: res.verdict.kind().into(),
        property,
        theory_hash,
        trace_id: None,
        trace_states: None,
        lasso_start: None,
        reason: None,
        stats,
    };
    match res.verdict {
        Verdict::Fulfilled => {}
        Verdict::Exhausted { reason } => doc.reason = Some(reason),
        Verdict::Refuted { trace, .. } => {
            let entry = store.put(&trace, "refuted", stats)?;
            doc = refuted(&entry, &trace);
        }
    }
    Ok(doc)
}

pub fn meta(entry: &IndexEntry, trace: &Trace) -> TraceMeta {
    TraceMeta {
        version: DOC_VERSION,
        id: entry.id.clone(),
        theory_hash: entry.theory_hash.clone(),
        property: entry.property.clone(),
        verdict: entry.verdict.clone(),
        created_at: entry.created_at.clone(),
        states: trace.states.len(),
        lasso_start: trace.lasso_start,
        boundaries: trace.boundaries(),
        rules: trace.rule_labels().into_iter().map(String::from).collect(),
    }
}

fn tree(t: &Term, at: Position) -> TreeNode {
    TreeNode {
        symbol: t.head().to_string(),
        sort: t.sort().to_string(),
        children: t.args().iter().enumerate().map(|(i, a)| tree(a, at.child(i as u32 + 1))).collect(),
        position: at,
    }
}

pub fn state(trace_id: &str, trace: &Trace, index: usize) -> Result<StateDoc, AppError> {
    let t = trace
        .states
        .get(index)
        .ok_or_else(|| AppError::NotFound(format!("state {index} of trace {trace_id}")))?;
    Ok(StateDoc {
        version: DOC_VERSION,
        trace_id: trace_id.into(),
        index,
        term: t.to_string(),
        tree: tree(t, Position::root()),
        next_step: trace.steps.get(index).map(|s| StepSummary {
            kind: s.kind.to_string(),
            label: s.label.clone(),
            position: s.position.clone(),
        }),
    })
}

pub fn select_state(trace: &Trace, selector: &str) -> Result<usize, AppError> {
    let last = trace.states.len() - 1;
    let i = match selector {
        "last" => last,
        s => s.parse().map_err(|_| AppError::BadRequest(format!("state selector `{s}` is neither an index nor `last`")))?,
    };
    if i > last {
        return Err(AppError::BadRequest(format!("state index {i} out of range (trace has {} states)", last + 1)));
    }
    Ok(i)
}

fn slice_error(e: SliceError) -> AppError {
    match e {
        SliceError::BadIndex(_) | SliceError::BadPosition(..) => AppError::BadRequest(e.to_string()),
        SliceError::Doc(_) => AppError::Load(e.to_string()),
        e => AppError::Internal(e.to_string()),
    }
}

pub fn slice(trace_id: &str, trace: &Trace, req: &SliceRequest) -> Result<SliceDoc, AppError> {
    let index = select_state(trace, &req.state)?;
    let fp = FilterPattern::parse(&req.pattern).map_err(|e| AppError::BadRequest(format!("pattern: {e}")))?;
    if req.window == 0 {
        return Err(AppError::BadRequest("window must be positive".into()));
    }
    let criterion = criterion_from_pattern(trace, index, &fp).map_err(slice_error)?;
    let sliced = slice_trace(trace, &criterion).map_err(slice_error)?;
    Ok(SliceDoc {
        version: DOC_VERSION,
        trace_id: trace_id.into(),
        pattern: req.pattern.clone(),
        window: req.window,
        window_metrics: sliced.metrics_last(req.window),
        sliced: sliced.to_doc(trace),
    })
}

pub fn graph(label: &str, spec: &str) -> Result<GraphDoc, AppError> {
    let model = load_spec(label, spec)?;
    let app = &model.app;
    Ok(GraphDoc {
        version: DOC_VERSION,
        format: "dot".into(),
        nodes: app.pages.iter().map(|p| p.name.clone()).collect(),
        solid_edges: app.pages.iter().map(|p| p.links.len()).sum(),
        dashed_edges: app.pages.iter().map(|p| p.continuations.len()).sum(),
        dot: render_dot(app),
    })
}

pub fn replay(doc: &SliceDoc, samples: usize, seed: u64) -> Result<ReplayDoc, AppError> {
    let (trace, sliced): (Trace, SlicedTrace) = SlicedTrace::from_doc(&doc.sliced, resolve_builtins).map_err(|e| AppError::Load(e.to_string()))?;
    let report = replay_check(&trace, &sliced, samples, seed).map_err(slice_error)?;
    Ok(ReplayDoc {
        version: DOC_VERSION,
        trace_id: doc.trace_id.clone(),
        state_index: sliced.criterion.state_index,
        seed,
        samples,
        agreed: report.agreed,
        ok: report.ok(),
        failures: report.failures,
    })
}
