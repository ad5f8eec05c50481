//! Term encoding of Web states and navigation models.

use super::model::{Cond, PageDef, WebApp};
use super::script::{script_to_term, str_term, str_value, term_to_script, Stmt, Store};
use super::WebError;
use crate::term::{flatten, LiteralSorts, Signature, Term, TermError};

/// Page shown by a browser before its first response.
pub const BLANK_PAGE: &str = "blank";

/// Declares the fixed part of the Web-state signature plus one constant
/// per page name and browser/tab id.
pub fn web_signature(app: &WebApp) -> Result<Signature, TermError> {
    let mut sig = Signature::new();
    sig.set_literal_sorts(LiteralSorts { string: Some("Str".into()), nat: Some("Nat".into()), qid: Some("Qid".into()) });
    for s in ["Str", "Nat", "Qid"] {
        sig.add_sort(s);
    }
    sig.op("ws", &["Browser", "Message", "Server"], "WebState")?;
    sig.ac_op("brs", "Browser", Some("br-empty"))?;
    sig.op("B", &["Id", "Id", "PageName", "URL", "Session", "Sigma", "Message", "History", "Nat"], "Browser")?;
    sig.ac_op("msgs", "Message", Some("mes-empty"))?;
    sig.op("B2S", &["Id", "Id", "URL", "Nat"], "Message")?;
    sig.op("S2B", &["Id", "Id", "PageName", "URL", "Session", "Nat"], "Message")?;
    sig.op("url", &["PageName", "Query"], "URL")?;
    sig.ac_op("urls", "URL", Some("url-empty"))?;
    sig.op("qp", &["Str", "Str"], "Query")?;
    sig.ac_op("qs", "Query", Some("q-empty"))?;
    sig.op("sv", &["Str", "Str"], "Session")?;
    sig.ac_op("ses", "Session", Some("ses-empty"))?;
    sig.op("fill", &["Str", "Str"], "Sigma")?;
    sig.ac_op("form", "Sigma", Some("form-empty"))?;
    sig.op("hist", &["PageName", "History"], "History")?;
    sig.op("hist-empty", &[], "History")?;

    sig.op("S", &["Web", "UserSessions", "DB", "Queue", "Queue"], "Server")?;
    sig.op("pg", &["PageName", "St", "Conts", "Navs"], "Web")?;
    sig.ac_op("web", "Web", Some("web-empty"))?;
    sig.op("cont", &["Cond", "PageName"], "Conts")?;
    sig.ac_op("conts", "Conts", Some("cont-empty"))?;
    sig.op("nav", &["Cond", "PageName", "Params"], "Navs")?;
    sig.ac_op("navs", "Navs", Some("nav-empty"))?;
    sig.op("prm", &["Str"], "Params")?;
    sig.ac_op("prms", "Params", Some("prm-empty"))?;
    sig.op("ceq", &["Str", "Str"], "Cond")?;
    sig.ac_op("cand", "Cond", Some("TRUE"))?;
    sig.op("us", &["Id", "Session"], "UserSessions")?;
    sig.ac_op("uss", "UserSessions", Some("us-empty"))?;
    sig.op("dbe", &["Str", "Str"], "DB")?;
    sig.ac_op("db", "DB", Some("db-empty"))?;
    sig.op("fq", &["Message", "Queue"], "Queue")?;
    sig.op("fq-empty", &[], "Queue")?;

    sig.op("skip", &[], "St")?;
    sig.op("seq", &["St", "St"], "St")?;
    sig.op("assign", &["Qid", "Ex"], "St")?;
    sig.op("setSession", &["Ex", "Ex"], "St")?;
    sig.op("updateDB", &["Ex", "Ex"], "St")?;
    sig.op("ifte", &["Tst", "St", "St"], "St")?;
    sig.op("eq", &["Ex", "Ex"], "Tst")?;
    sig.op("neq", &["Ex", "Ex"], "Tst")?;
    sig.op("s", &["Str"], "Ex")?;
    sig.op("null", &[], "Ex")?;
    sig.op("v", &["Qid"], "Ex")?;
    sig.op("getSession", &["Ex"], "Ex")?;
    sig.op("selectDB", &["Ex"], "Ex")?;
    sig.op("getQuery", &["Str"], "Ex")?;
    sig.op("cat", &["Ex", "Ex"], "Ex")?;

    sig.builtin_op("evalScript", &["Web", "UserSessions", "DB", "Message", "Queue", "Queue"], "Server")?;
    sig.builtin_op("enqueue", &["Queue", "Message"], "Queue")?;
    sig.builtin_op("fillQuery", &["URL", "Sigma"], "URL")?;
    sig.builtin_op("inc", &["Nat"], "Nat")?;
    sig.builtin_op("pushHist", &["PageName", "History"], "History")?;

    sig.op(BLANK_PAGE, &[], "PageName")?;
    for p in &app.pages {
        sig.op(&p.name, &[], "PageName")?;
    }
    let mut ids = std::collections::BTreeSet::new();
    for b in &app.scenario.browsers {
        ids.insert(b.id.as_str());
        ids.insert(b.tab.as_str());
    }
    for id in ids {
        sig.op(id, &[], "Id")?;
    }
    Ok(sig)
}

/// Arguments of an AC collection: the children of a `op` node, nothing for
/// the identity, the term itself otherwise.
pub fn elements<'a>(t: &'a Term, op: &str, identity: &str) -> Vec<&'a Term> {
    if **t.head() == *op {
        t.args().iter().collect()
    } else if **t.head() == *identity {
        vec![]
    } else {
        vec![t]
    }
}

/// Canonical AC collection of `items`.
pub fn collection(sig: &Signature, op: &str, identity: &str, items: Vec<Term>) -> Result<Term, TermError> {
    let t = match items.len() {
        0 => sig.constant(identity)?,
        1 => items.into_iter().next().expect("one item"),
        _ => sig.app(op, items)?,
    };
    Ok(flatten(&t, sig))
}

/// Elements of a `fq` queue, head first.
pub fn queue_items(q: &Term) -> Vec<&Term> {
    let mut out = vec![];
    let mut cur = q;
    while **cur.head() == *"fq" {
        out.push(&cur.args()[0]);
        cur = &cur.args()[1];
    }
    out
}

pub fn queue(sig: &Signature, items: Vec<Term>) -> Result<Term, TermError> {
    let mut acc = sig.constant("fq-empty")?;
    for m in items.into_iter().rev() {
        acc = sig.app("fq", vec![m, acc])?;
    }
    Ok(acc)
}

fn pairs(sig: &Signature, op: &str, coll: &str, id: &str, store: &Store) -> Result<Term, TermError> {
    let items = store
        .iter()
        .map(|(k, v)| sig.app(op, vec![str_term(sig, k)?, str_term(sig, v)?]))
        .collect::<Result<Vec<_>, _>>()?;
    collection(sig, coll, id, items)
}

pub fn session_term(sig: &Signature, s: &Store) -> Result<Term, TermError> {
    pairs(sig, "sv", "ses", "ses-empty", s)
}

pub fn db_term(sig: &Signature, s: &Store) -> Result<Term, TermError> {
    pairs(sig, "dbe", "db", "db-empty", s)
}

pub fn sigma_term(sig: &Signature, s: &Store) -> Result<Term, TermError> {
    pairs(sig, "fill", "form", "form-empty", s)
}

pub fn query_term(sig: &Signature, s: &Store) -> Result<Term, TermError> {
    pairs(sig, "qp", "qs", "q-empty", s)
}

/// Reads a `sv`/`dbe`/`fill`/`qp` collection back into a map.
pub fn store_of(t: &Term) -> Result<Store, WebError> {
    let mut out = Store::new();
    for (coll, id) in [("ses", "ses-empty"), ("db", "db-empty"), ("form", "form-empty"), ("qs", "q-empty")] {
        if **t.head() == *coll || **t.head() == *id {
            for e in elements(t, coll, id) {
                entry_into(e, &mut out)?;
            }
            return Ok(out);
        }
    }
    entry_into(t, &mut out)?;
    Ok(out)
}

fn entry_into(e: &Term, out: &mut Store) -> Result<(), WebError> {
    let bad = || WebError::Decode(format!("not a key/value entry: {e}"));
    if e.arity() != 2 {
        return Err(bad());
    }
    let k = str_value(&e.args()[0]).ok_or_else(bad)?;
    let v = str_value(&e.args()[1]).ok_or_else(bad)?;
    out.insert(k, v);
    Ok(())
}

pub fn cond_term(sig: &Signature, c: &Cond) -> Result<Term, TermError> {
    let items =
        c.0.iter().map(|(k, v)| sig.app("ceq", vec![str_term(sig, k)?, str_term(sig, v)?])).collect::<Result<Vec<_>, _>>()?;
    collection(sig, "cand", "TRUE", items)
}

pub fn cond_of(t: &Term) -> Result<Cond, WebError> {
    let mut c = Cond::truth();
    for e in elements(t, "cand", "TRUE") {
        let bad = || WebError::Decode(format!("not a condition: {e}"));
        if **e.head() != *"ceq" {
            return Err(bad());
        }
        c.0.push((str_value(&e.args()[0]).ok_or_else(bad)?, str_value(&e.args()[1]).ok_or_else(bad)?));
    }
    Ok(c)
}

pub fn page_term(sig: &Signature, p: &PageDef) -> Result<Term, TermError> {
    let conts = p
        .continuations
        .iter()
        .map(|(c, t)| sig.app("cont", vec![cond_term(sig, c)?, sig.constant(t)?]))
        .collect::<Result<Vec<_>, _>>()?;
    let navs = p
        .links
        .iter()
        .map(|l| {
            let prms = l.params.iter().map(|k| sig.app("prm", vec![str_term(sig, k)?])).collect::<Result<Vec<_>, _>>()?;
            sig.app("nav", vec![cond_term(sig, &l.cond)?, sig.constant(&l.target)?, collection(sig, "prms", "prm-empty", prms)?])
        })
        .collect::<Result<Vec<_>, _>>()?;
    sig.app(
        "pg",
        vec![
            sig.constant(&p.name)?,
            script_to_term(&p.script, sig)?,
            collection(sig, "conts", "cont-empty", conts)?,
            collection(sig, "navs", "nav-empty", navs)?,
        ],
    )
}

/// A page as stored in the server state.
#[derive(Clone, Debug)]
pub struct PageView {
    pub name: String,
    pub script: Stmt,
    pub continuations: Vec<(Cond, String)>,
    pub links: Vec<(Cond, String, Vec<String>)>,
}

pub fn page_of(t: &Term) -> Result<PageView, WebError> {
    if **t.head() != *"pg" || t.arity() != 4 {
        return Err(WebError::Decode(format!("not a page: {t}")));
    }
    let a = t.args();
    let mut continuations = vec![];
    for c in elements(&a[2], "conts", "cont-empty") {
        continuations.push((cond_of(&c.args()[0])?, c.args()[1].head().to_string()));
    }
    let mut links = vec![];
    for n in elements(&a[3], "navs", "nav-empty") {
        let mut params = vec![];
        for p in elements(&n.args()[2], "prms", "prm-empty") {
            params.push(str_value(&p.args()[0]).ok_or_else(|| WebError::Decode(format!("bad parameter {p}")))?);
        }
        links.push((cond_of(&n.args()[0])?, n.args()[1].head().to_string(), params));
    }
    Ok(PageView { name: a[0].head().to_string(), script: term_to_script(&a[1])?, continuations, links })
}

/// Initial Web state of the scenario.
pub fn initial_state(app: &WebApp, sig: &Signature) -> Result<Term, TermError> {
    let sc = &app.scenario;
    let mut browsers = vec![];
    for b in &sc.browsers {
        let entry = sig.app("url", vec![sig.constant(&sc.entry)?, sig.constant("q-empty")?])?;
        browsers.push(sig.app(
            "B",
            vec![
                sig.constant(&b.id)?,
                sig.constant(&b.tab)?,
                sig.constant(BLANK_PAGE)?,
                entry,
                sig.constant("ses-empty")?,
                sigma_term(sig, &b.sigma)?,
                sig.constant("mes-empty")?,
                sig.constant("hist-empty")?,
                sig.constant("1")?,
            ],
        )?);
    }
    let pages = app.pages.iter().map(|p| page_term(sig, p)).collect::<Result<Vec<_>, _>>()?;
    let server = sig.app(
        "S",
        vec![
            collection(sig, "web", "web-empty", pages)?,
            sig.constant("us-empty")?,
            db_term(sig, &sc.db)?,
            sig.constant("fq-empty")?,
            sig.constant("fq-empty")?,
        ],
    )?;
    let st = sig.app("ws", vec![collection(sig, "brs", "br-empty", browsers)?, sig.constant("mes-empty")?, server])?;
    Ok(flatten(&st, sig))
}
