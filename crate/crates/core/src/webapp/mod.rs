//! Web applications as rewrite theories: navigation models, server scripts,
//! the browser/server protocol and the state predicates used in
//! properties.

mod builtins;
mod dsl;
mod encode;
mod graph;
mod model;
mod rules;
mod script;

use std::sync::Arc;

pub use builtins::WebBuiltins;
pub use dsl::{parse_script, parse_webapp};
pub use encode::{
    collection, cond_of, elements, initial_state, page_of, page_term, queue_items, store_of, web_signature, PageView,
    BLANK_PAGE,
};
pub use graph::render_dot;
pub use model::{BrowserSpec, Cond, Link, PageDef, Scenario, WebApp};
pub use rules::protocol_rules;
pub use script::{eval_script, expr_to_term, script_to_term, term_to_expr, term_to_script, Expr, ScriptOutcome, Stmt, Store, Test};

use crate::rewrite::{RewriteError, Theory};
use crate::term::{Term, TermError};

#[derive(Debug, thiserror::Error)]
pub enum WebError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("cannot decode {0}")]
    Decode(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// A parsed model together with its rewrite theory and initial state.
#[derive(Clone, Debug)]
pub struct WebModel {
    pub app: WebApp,
    pub theory: Arc<Theory>,
    pub initial: Term,
}

impl WebModel {
    pub fn new(app: WebApp) -> Result<Self, WebError> {
        app.validate()?;
        let sig = web_signature(&app)?;
        let rules = protocol_rules(&sig, &app.scenario)?;
        let initial = initial_state(&app, &sig)?;
        let builtins = WebBuiltins::new(app.scenario.alphabet.clone(), app.scenario.history_cap);
        let theory = Arc::new(Theory::new(sig, rules, Arc::new(builtins))?);
        Ok(WebModel { app, theory, initial })
    }

    pub fn parse(text: &str) -> Result<Self, WebError> {
        Self::new(parse_webapp(text)?)
    }

    /// Truth of a state predicate: `curPage(idb, page)` or a user predicate
    /// declared in the model.
    pub fn eval_predicate(&self, name: &str, args: &[String], state: &Term) -> Result<bool, WebError> {
        if name == "curPage" {
            let [idb, page] = args else {
                return Err(WebError::UnknownPredicate(format!("curPage/{}", args.len())));
            };
            return Ok(cur_page(state, idb, page));
        }
        match self.app.predicates.get(name) {
            Some(fp) if args.is_empty() => Ok(!fp.matches(state).is_empty()),
            _ => Err(WebError::UnknownPredicate(format!("{name}/{}", args.len()))),
        }
    }

    /// Checks that a predicate name and arity exist, without a state.
    pub fn has_predicate(&self, name: &str, arity: usize) -> bool {
        (name == "curPage" && arity == 2) || (arity == 0 && self.app.predicates.contains_key(name))
    }
}

/// Some browser `idb` currently displays `page`.
pub fn cur_page(state: &Term, idb: &str, page: &str) -> bool {
    let Some(brs) = state.args().first() else { return false };
    elements(brs, "brs", "br-empty")
        .into_iter()
        .any(|b| b.arity() == 9 && **b.args()[0].head() == *idb && **b.args()[2].head() == *page)
}

/// Builtin sets that traces of Web theories may name.
pub fn resolve_builtins(
    name: &str,
    params: &std::collections::BTreeMap<String, String>,
) -> Option<Arc<dyn crate::rewrite::Builtins>> {
    match name {
        WebBuiltins::NAME => Some(Arc::new(WebBuiltins::from_params(params)?)),
        "none" => Some(Arc::new(crate::rewrite::NoBuiltins)),
        _ => None,
    }
}
