use std::collections::BTreeMap;

use super::script::{Stmt, Store};
use super::WebError;
use crate::term::FilterPattern;

/// Guard over session values: a conjunction of `key = value` tests, empty
/// meaning true.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cond(pub Vec<(String, String)>);

impl Cond {
    pub fn truth() -> Self {
        Cond(vec![])
    }

    pub fn holds(&self, session: &Store) -> bool {
        self.0.iter().all(|(k, v)| session.get(k) == Some(v))
    }

    /// Some session satisfies both guards.
    pub fn overlaps(&self, other: &Cond) -> bool {
        let mut need: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in self.0.iter().chain(&other.0) {
            if let Some(w) = need.insert(k, v) {
                if w != v {
                    return false;
                }
            }
        }
        true
    }

    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return "true".into();
        }
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" && ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub cond: Cond,
    pub target: String,
    pub params: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PageDef {
    pub name: String,
    pub script: Stmt,
    pub continuations: Vec<(Cond, String)>,
    pub links: Vec<Link>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BrowserSpec {
    pub id: String,
    pub tab: String,
    pub sigma: Store,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub browsers: Vec<BrowserSpec>,
    pub db: Store,
    pub entry: String,
    pub refresh: bool,
    pub back: bool,
    /// Values tried for query parameters missing from a browser's sigma.
    pub alphabet: Vec<String>,
    pub max_refresh: u32,
    pub history_cap: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            browsers: vec![],
            db: Store::new(),
            entry: String::new(),
            refresh: false,
            back: false,
            alphabet: vec![String::new()],
            max_refresh: 2,
            history_cap: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct WebApp {
    pub pages: Vec<PageDef>,
    pub scenario: Scenario,
    /// User state predicates, true when the pattern matches somewhere in
    /// the state.
    pub predicates: BTreeMap<String, FilterPattern>,
}

impl WebApp {
    pub fn page(&self, name: &str) -> Option<&PageDef> {
        self.pages.iter().find(|p| p.name == name)
    }

    /// Load-time checks: entry and link targets exist, pages are unique,
    /// continuation guards of a page are pairwise exclusive.
    pub fn validate(&self) -> Result<(), WebError> {
        if self.pages.is_empty() || self.scenario.entry.is_empty() {
            return Err(WebError::Invalid("no entry page".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.pages {
            if !seen.insert(p.name.as_str()) {
                return Err(WebError::Invalid(format!("page {} defined twice", p.name)));
            }
        }
        if self.page(&self.scenario.entry).is_none() {
            return Err(WebError::Invalid(format!("entry page {} is not defined", self.scenario.entry)));
        }
        for p in &self.pages {
            for (_, t) in &p.continuations {
                if self.page(t).is_none() {
                    return Err(WebError::Invalid(format!("page {}: continuation to undefined page {t}", p.name)));
                }
            }
            for l in &p.links {
                if self.page(&l.target).is_none() {
                    return Err(WebError::Invalid(format!("page {}: link to undefined page {}", p.name, l.target)));
                }
            }
            for (i, (a, ta)) in p.continuations.iter().enumerate() {
                for (b, tb) in &p.continuations[i + 1..] {
                    if a.overlaps(b) {
                        return Err(WebError::Invalid(format!(
                            "page {}: continuations to {ta} ({}) and {tb} ({}) can hold together",
                            p.name,
                            a.render(),
                            b.render()
                        )));
                    }
                }
            }
        }
        if self.scenario.browsers.is_empty() {
            return Err(WebError::Invalid("scenario has no browsers".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for b in &self.scenario.browsers {
            if !ids.insert((&b.id, &b.tab)) {
                return Err(WebError::Invalid(format!("browser {} tab {} declared twice", b.id, b.tab)));
            }
        }
        if self.scenario.alphabet.is_empty() {
            return Err(WebError::Invalid("alphabet must not be empty".into()));
        }
        Ok(())
    }
}
