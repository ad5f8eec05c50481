//! Server-side scripts: abstract syntax, big-step evaluation with read and
//! write sets, and the term encoding stored in the server state.

use std::collections::{BTreeMap, BTreeSet};

use super::WebError;
use crate::term::{Signature, Term, TermError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Str(String),
    Null,
    Var(String),
    GetSession(Box<Expr>),
    SelectDb(Box<Expr>),
    GetQuery(String),
    Cat(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Test {
    pub negated: bool,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Skip,
    Seq(Box<Stmt>, Box<Stmt>),
    Assign(String, Expr),
    SetSession(Expr, Expr),
    UpdateDb(Expr, Expr),
    If(Test, Box<Stmt>, Box<Stmt>),
}

impl Stmt {
    /// Right-nested sequence of `stmts`, `skip` when empty.
    pub fn seq(mut stmts: Vec<Stmt>) -> Stmt {
        let Some(mut acc) = stmts.pop() else { return Stmt::Skip };
        while let Some(s) = stmts.pop() {
            acc = Stmt::Seq(Box::new(s), Box::new(acc));
        }
        acc
    }
}

pub type Store = BTreeMap<String, String>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScriptOutcome {
    pub session: Store,
    pub db: Store,
    pub session_reads: BTreeSet<String>,
    pub db_reads: BTreeSet<String>,
    pub query_reads: BTreeSet<String>,
    pub session_writes: BTreeSet<String>,
    pub db_writes: BTreeSet<String>,
}

struct Eval<'a> {
    query: &'a Store,
    vars: BTreeMap<String, Option<String>>,
    out: ScriptOutcome,
}

impl Eval<'_> {
    fn expr(&mut self, e: &Expr) -> Option<String> {
        match e {
            Expr::Str(s) => Some(s.clone()),
            Expr::Null => None,
            Expr::Var(v) => self.vars.get(v).cloned().flatten(),
            Expr::GetSession(k) => {
                let k = self.expr(k)?;
                self.out.session_reads.insert(k.clone());
                self.out.session.get(&k).cloned()
            }
            Expr::SelectDb(k) => {
                let k = self.expr(k)?;
                self.out.db_reads.insert(k.clone());
                self.out.db.get(&k).cloned()
            }
            Expr::GetQuery(k) => {
                self.out.query_reads.insert(k.clone());
                self.query.get(k).cloned()
            }
            Expr::Cat(a, b) => {
                let a = self.expr(a);
                let b = self.expr(b);
                match (a, b) {
                    (None, None) => None,
                    (a, b) => Some(a.unwrap_or_default() + &b.unwrap_or_default()),
                }
            }
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Skip => {}
            Stmt::Seq(a, b) => {
                self.stmt(a);
                self.stmt(b);
            }
            Stmt::Assign(v, e) => {
                let x = self.expr(e);
                self.vars.insert(v.clone(), x);
            }
            Stmt::SetSession(k, v) => {
                // a null key writes nothing
                let (Some(k), v) = (self.expr(k), self.expr(v)) else { return };
                self.out.session_writes.insert(k.clone());
                match v {
                    Some(v) => self.out.session.insert(k, v),
                    None => self.out.session.remove(&k),
                };
            }
            Stmt::UpdateDb(k, v) => {
                let (Some(k), v) = (self.expr(k), self.expr(v)) else { return };
                self.out.db_writes.insert(k.clone());
                match v {
                    Some(v) => self.out.db.insert(k, v),
                    None => self.out.db.remove(&k),
                };
            }
            Stmt::If(t, a, b) => {
                let l = self.expr(&t.lhs);
                let r = self.expr(&t.rhs);
                if (l == r) != t.negated {
                    self.stmt(a);
                } else {
                    self.stmt(b);
                }
            }
        }
    }
}

/// Big-step evaluation. Unset session, database and query entries read as
/// null; setting a key to null removes it.
pub fn eval_script(script: &Stmt, session: &Store, db: &Store, query: &Store) -> ScriptOutcome {
    let mut ev = Eval {
        query,
        vars: BTreeMap::new(),
        out: ScriptOutcome { session: session.clone(), db: db.clone(), ..Default::default() },
    };
    ev.stmt(script);
    ev.out
}

fn lit(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub(crate) fn str_term(sig: &Signature, s: &str) -> Result<Term, TermError> {
    sig.constant(&lit(s))
}

/// Value of a string literal constant.
pub(crate) fn str_value(t: &Term) -> Option<String> {
    let h = t.head();
    if t.arity() == 0 && h.len() >= 2 && h.starts_with('"') && h.ends_with('"') {
        Some(h[1..h.len() - 1].to_string())
    } else {
        None
    }
}

fn qid(sig: &Signature, v: &str) -> Result<Term, TermError> {
    sig.constant(&format!("'{v}"))
}

pub fn expr_to_term(e: &Expr, sig: &Signature) -> Result<Term, TermError> {
    match e {
        Expr::Str(s) => sig.app("s", vec![str_term(sig, s)?]),
        Expr::Null => sig.constant("null"),
        Expr::Var(v) => sig.app("v", vec![qid(sig, v)?]),
        Expr::GetSession(k) => sig.app("getSession", vec![expr_to_term(k, sig)?]),
        Expr::SelectDb(k) => sig.app("selectDB", vec![expr_to_term(k, sig)?]),
        Expr::GetQuery(k) => sig.app("getQuery", vec![str_term(sig, k)?]),
        Expr::Cat(a, b) => sig.app("cat", vec![expr_to_term(a, sig)?, expr_to_term(b, sig)?]),
    }
}

pub fn script_to_term(s: &Stmt, sig: &Signature) -> Result<Term, TermError> {
    match s {
        Stmt::Skip => sig.constant("skip"),
        Stmt::Seq(a, b) => sig.app("seq", vec![script_to_term(a, sig)?, script_to_term(b, sig)?]),
        Stmt::Assign(v, e) => sig.app("assign", vec![qid(sig, v)?, expr_to_term(e, sig)?]),
        Stmt::SetSession(k, v) => sig.app("setSession", vec![expr_to_term(k, sig)?, expr_to_term(v, sig)?]),
        Stmt::UpdateDb(k, v) => sig.app("updateDB", vec![expr_to_term(k, sig)?, expr_to_term(v, sig)?]),
        Stmt::If(t, a, b) => {
            let test = sig.app(if t.negated { "neq" } else { "eq" }, vec![expr_to_term(&t.lhs, sig)?, expr_to_term(&t.rhs, sig)?])?;
            sig.app("ifte", vec![test, script_to_term(a, sig)?, script_to_term(b, sig)?])
        }
    }
}

fn bad(t: &Term) -> WebError {
    WebError::Decode(format!("not a script term: {t}"))
}

pub fn term_to_expr(t: &Term) -> Result<Expr, WebError> {
    let a = t.args();
    Ok(match (t.head().as_ref(), a.len()) {
        ("s", 1) => Expr::Str(str_value(&a[0]).ok_or_else(|| bad(t))?),
        ("null", 0) => Expr::Null,
        ("v", 1) => Expr::Var(a[0].head().trim_start_matches('\'').to_string()),
        ("getSession", 1) => Expr::GetSession(Box::new(term_to_expr(&a[0])?)),
        ("selectDB", 1) => Expr::SelectDb(Box::new(term_to_expr(&a[0])?)),
        ("getQuery", 1) => Expr::GetQuery(str_value(&a[0]).ok_or_else(|| bad(t))?),
        ("cat", 2) => Expr::Cat(Box::new(term_to_expr(&a[0])?), Box::new(term_to_expr(&a[1])?)),
        _ => return Err(bad(t)),
    })
}

pub fn term_to_script(t: &Term) -> Result<Stmt, WebError> {
    let a = t.args();
    Ok(match (t.head().as_ref(), a.len()) {
        ("skip", 0) => Stmt::Skip,
        ("seq", 2) => Stmt::Seq(Box::new(term_to_script(&a[0])?), Box::new(term_to_script(&a[1])?)),
        ("assign", 2) => Stmt::Assign(a[0].head().trim_start_matches('\'').to_string(), term_to_expr(&a[1])?),
        ("setSession", 2) => Stmt::SetSession(term_to_expr(&a[0])?, term_to_expr(&a[1])?),
        ("updateDB", 2) => Stmt::UpdateDb(term_to_expr(&a[0])?, term_to_expr(&a[1])?),
        ("ifte", 3) => {
            let test = &a[0];
            let negated = match test.head().as_ref() {
                "eq" => false,
                "neq" => true,
                _ => return Err(bad(test)),
            };
            Stmt::If(
                Test { negated, lhs: term_to_expr(&test.args()[0])?, rhs: term_to_expr(&test.args()[1])? },
                Box::new(term_to_script(&a[1])?),
                Box::new(term_to_script(&a[2])?),
            )
        }
        _ => return Err(bad(t)),
    })
}
