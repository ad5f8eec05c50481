//! Documents exchanged by the command line and the service. Both emit them
//! through [`to_json`], so equal inputs give byte-identical output.

use navslice::ltl::CheckStats;
use navslice::slicer::{ReplayFailure, SliceMetrics, SlicedTraceDoc};
use navslice::term::Position;
use serde::{Deserialize, Serialize};

use crate::error::ErrorBody;

pub const DOC_VERSION: u32 = 1;

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialises");
    s.push('\n');
    s
}

/// Search statistics without wall-clock time, which would make documents
/// differ between identical runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub states: usize,
    pub product_nodes: usize,
    pub max_depth: usize,
}

impl From<&CheckStats> for SearchStats {
    fn from(s: &CheckStats) -> Self {
        SearchStats { states: s.states, product_nodes: s.product_nodes, max_depth: s.max_depth }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub version: u32,
    /// `fulfilled`, `refuted` or `exhausted`.
    pub verdict: String,
    pub property: String,
    pub theory_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lasso_start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub stats: SearchStats,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRequest {
    /// Navigation model source text.
    pub spec: String,
    pub property: String,
    #[serde(default)]
    pub budget: BudgetDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStatus {
    pub job_id: String,
    /// `running`, `done` or `failed`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub kind: String,
    pub label: String,
    pub position: Position,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub version: u32,
    pub id: String,
    pub theory_hash: String,
    pub property: String,
    pub verdict: String,
    pub created_at: String,
    pub states: usize,
    pub lasso_start: Option<usize>,
    /// Canonical states between two rule applications.
    pub boundaries: Vec<usize>,
    pub rules: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub position: Position,
    pub symbol: String,
    pub sort: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDoc {
    pub version: u32,
    pub trace_id: String,
    pub index: usize,
    pub term: String,
    pub tree: TreeNode,
    /// The step leaving this state, absent on the last one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_step: Option<StepSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceRequest {
    /// A state index or `last`.
    pub state: String,
    pub pattern: String,
    #[serde(default = "default_window")]
    pub window: usize,
}

pub fn default_window() -> usize {
    7
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceDoc {
    pub version: u32,
    pub trace_id: String,
    pub pattern: String,
    /// Number of states, ending at the criterion, that `window_metrics`
    /// covers.
    pub window: usize,
    pub window_metrics: SliceMetrics,
    pub sliced: SlicedTraceDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub version: u32,
    pub format: String,
    pub nodes: Vec<String>,
    pub solid_edges: usize,
    pub dashed_edges: usize,
    pub dot: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphRequest {
    pub spec: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayDoc {
    pub version: u32,
    pub trace_id: String,
    pub state_index: usize,
    pub seed: u64,
    pub samples: usize,
    pub agreed: usize,
    pub ok: bool,
    pub failures: Vec<ReplayFailure>,
}
