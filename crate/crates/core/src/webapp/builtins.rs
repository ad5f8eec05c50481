//! Native operators of the Web theory. Every result comes with a
//! dependency record that the slicer follows backwards; positions listed as
//! inputs are single symbols of the call's arguments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use super::encode::{collection, elements, page_of, query_term, queue, queue_items, session_term, store_of, db_term, PageView};
use super::script::{eval_script, Store};
use crate::rewrite::{Builtins, DependencyRecord, RewriteError};
use crate::term::{Position, Signature, Term};

#[derive(Debug, Default)]
pub struct WebBuiltins {
    pub alphabet: Vec<String>,
    pub history_cap: usize,
    /// Decoded pages by term; pages never change during a run.
    pages: Mutex<HashMap<Term, Arc<PageView>>>,
}

impl WebBuiltins {
    pub const NAME: &'static str = "webapp";

    pub fn new(alphabet: Vec<String>, history_cap: usize) -> Self {
        WebBuiltins { alphabet, history_cap, pages: Mutex::default() }
    }

    pub fn from_params(params: &BTreeMap<String, String>) -> Option<Self> {
        let alphabet = serde_json::from_str(params.get("alphabet")?).ok()?;
        let history_cap = params.get("history_cap")?.parse().ok()?;
        Some(Self::new(alphabet, history_cap))
    }

    fn page(&self, t: &Term) -> Result<Arc<PageView>, RewriteError> {
        if let Some(p) = self.pages.lock().expect("page cache").get(t) {
            return Ok(p.clone());
        }
        let p = Arc::new(page_of(t).map_err(|e| fail("evalScript", e.to_string()))?);
        self.pages.lock().expect("page cache").insert(t.clone(), p.clone());
        Ok(p)
    }
}

fn pos(s: &str) -> Position {
    s.parse().expect("literal position")
}

fn all_positions(t: &Term, at: &Position) -> Vec<Position> {
    let mut out = vec![];
    t.collect_positions(at.clone(), &mut out);
    out
}

/// Position of the `k`-th cell of a cons list rooted at `at`.
fn spine(at: &Position, k: usize) -> Position {
    let mut p = at.clone();
    for _ in 0..k {
        p = p.child(2);
    }
    p
}

/// `(element, position)` pairs of an AC collection rooted at `at`.
fn located<'a>(t: &'a Term, at: &Position, op: &str, id: &str) -> Vec<(&'a Term, Position)> {
    let es = elements(t, op, id);
    if **t.head() == *op {
        es.into_iter().enumerate().map(|(i, e)| (e, at.child(i as u32 + 1))).collect()
    } else {
        es.into_iter().map(|e| (e, at.clone())).collect()
    }
}

/// Dependencies of a list built from the first `copied` cells of the input
/// list at `inp` (of length `in_len`) followed by fresh cells, `out_len`
/// cells in total. Each spine cell depends on the input spine up to the
/// same depth.
fn list_deps(rec: &mut DependencyRecord, out: &Position, inp: &Position, in_len: usize, out_len: usize, copied: usize) {
    for k in 0..=out_len {
        let reads = (0..=k.min(in_len)).map(|j| spine(inp, j)).collect();
        rec.computed(spine(out, k), reads);
    }
    for k in 0..copied {
        rec.copy(spine(out, k).child(1), spine(inp, k).child(1));
    }
}

fn computed_all(rec: &mut DependencyRecord, t: &Term, at: &Position, reads: &[Position]) {
    for p in all_positions(t, at) {
        rec.computed(p, reads.to_vec());
    }
}

/// Dependencies of a key/value collection `t` placed at `at` whose entries
/// are copied from `old` when their key was not written.
fn store_deps(
    rec: &mut DependencyRecord,
    t: &Term,
    at: &Position,
    coll: (&str, &str),
    old: &[(&Term, Position)],
    writes: &BTreeSet<String>,
    reads: &[Position],
) {
    if **t.head() == *coll.0 || **t.head() == *coll.1 {
        rec.computed(at.clone(), reads.to_vec());
    }
    for (e, p) in located(t, at, coll.0, coll.1) {
        let key = super::script::str_value(&e.args()[0]).unwrap_or_default();
        match old.iter().find(|(o, _)| *o == e) {
            Some((_, src)) if !writes.contains(&key) => rec.copy(p, src.clone()),
            _ => computed_all(rec, e, &p, reads),
        }
    }
}

fn fail(op: &str, msg: impl Into<String>) -> RewriteError {
    RewriteError::Builtin(op.to_string(), msg.into())
}

fn key_of(e: &Term) -> Option<String> {
    super::script::str_value(&e.args()[0])
}

impl WebBuiltins {
    /// Query assignments for link parameters: every parameter ranges over
    /// the alphabet.
    fn assignments(&self, params: &[String]) -> Vec<Store> {
        let mut out = vec![Store::new()];
        for p in params {
            let mut next = vec![];
            for a in &out {
                for v in &self.alphabet {
                    let mut b = a.clone();
                    b.insert(p.clone(), v.clone());
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    fn eval_script_call(&self, args: &[Term], sig: &Signature, deps: bool) -> Result<(Term, DependencyRecord), RewriteError> {
        const OP: &str = "evalScript";
        let [w, us, dbt, msg, fqq, fr] = args else { return Err(fail(OP, "expects 6 arguments")) };
        if **msg.head() != *"B2S" {
            return Err(fail(OP, format!("not a request: {msg}")));
        }
        let (idb, idt, url, ack) = (&msg.args()[0], &msg.args()[1], &msg.args()[2], &msg.args()[3]);
        if **url.head() != *"url" {
            return Err(fail(OP, format!("not a URL: {url}")));
        }
        let req_name = url.args()[0].head().to_string();
        let query = store_of(&url.args()[1]).map_err(|e| fail(OP, e.to_string()))?;

        let pages = located(w, &pos("1"), "web", "web-empty");
        let find_page = |name: &str| -> Result<(Arc<PageView>, Position, &Term), RewriteError> {
            let (t, p) = pages
                .iter()
                .find(|(t, _)| **t.args()[0].head() == *name)
                .ok_or_else(|| fail(OP, format!("no page {name}")))?;
            Ok((self.page(t)?, p.clone(), *t))
        };
        let (req, req_pos, req_term) = find_page(&req_name)?;

        let entries = located(us, &pos("2"), "uss", "us-empty");
        let mine = entries.iter().find(|(e, _)| &e.args()[0] == idb);
        let (old_session, old_ses_elems) = match mine {
            Some((e, p)) => (
                store_of(&e.args()[1]).map_err(|er| fail(OP, er.to_string()))?,
                located(&e.args()[1], &p.child(2), "ses", "ses-empty"),
            ),
            None => (Store::new(), vec![]),
        };
        let db = store_of(dbt).map_err(|e| fail(OP, e.to_string()))?;

        let out = eval_script(&req.script, &old_session, &db, &query);
        let target = req
            .continuations
            .iter()
            .find(|(c, _)| c.holds(&out.session))
            .map_or(req_name.clone(), |(_, t)| t.clone());
        let (shown, shown_pos, shown_term) = find_page(&target)?;

        let mut links = BTreeSet::new();
        for (cond, tgt, params) in &shown.links {
            if !cond.holds(&out.session) {
                continue;
            }
            for a in self.assignments(params) {
                links.insert(sig.app("url", vec![sig.constant(tgt)?, query_term(sig, &a)?])?);
            }
        }
        let urls = collection(sig, "urls", "url-empty", links.into_iter().collect())?;
        let ses = session_term(sig, &out.session)?;
        let response = sig.app("S2B", vec![idb.clone(), idt.clone(), sig.constant(&target)?, urls, ses.clone(), ack.clone()])?;

        let mut sessions: Vec<Term> = entries.iter().filter(|(e, _)| &e.args()[0] != idb).map(|(e, _)| (*e).clone()).collect();
        sessions.push(sig.app("us", vec![idb.clone(), ses.clone()])?);
        let new_us = collection(sig, "uss", "us-empty", sessions)?;
        let new_db = db_term(sig, &out.db)?;
        let old_res: Vec<Term> = queue_items(fr).into_iter().cloned().collect();
        let n = old_res.len();
        let mut res_items = old_res;
        res_items.push(response.clone());
        let new_fr = queue(sig, res_items)?;
        let result = sig.app("S", vec![w.clone(), new_us.clone(), new_db.clone(), fqq.clone(), new_fr])?;

        let mut rec = DependencyRecord::default();
        if !deps {
            return Ok((result, rec));
        }

        // symbols that decide the computed parts of the result
        let mut reads: Vec<Position> = vec![pos("4"), pos("4.1"), pos("4.2")];
        reads.extend(all_positions(url, &pos("4.3")));
        reads.push(pos("1"));
        for (_, p) in &pages {
            reads.push(p.clone());
            reads.push(p.child(1));
        }
        reads.extend(all_positions(req_term, &req_pos));
        reads.extend(all_positions(shown_term, &shown_pos));
        let mut session_keys: BTreeSet<String> = out.session_reads.clone();
        for (c, _) in &req.continuations {
            session_keys.extend(c.0.iter().map(|(k, _)| k.clone()));
        }
        for (c, _, _) in &shown.links {
            session_keys.extend(c.0.iter().map(|(k, _)| k.clone()));
        }
        reads.push(pos("2"));
        for (_, p) in &entries {
            reads.push(p.clone());
            reads.push(p.child(1));
        }
        if let Some((_, p)) = mine {
            reads.push(p.child(2));
            for (e, q) in &old_ses_elems {
                reads.push(q.clone());
                reads.push(q.child(1));
                if key_of(e).is_some_and(|k| session_keys.contains(&k)) {
                    reads.push(q.child(2));
                }
            }
        }
        reads.push(pos("3"));
        let old_db_elems = located(dbt, &pos("3"), "db", "db-empty");
        for (e, q) in &old_db_elems {
            reads.push(q.clone());
            reads.push(q.child(1));
            if key_of(e).is_some_and(|k| out.db_reads.contains(&k)) {
                reads.push(q.child(2));
            }
        }
        reads.sort();
        reads.dedup();

        rec.copy(pos("1"), pos("1"));
        rec.copy(pos("4"), pos("5"));

        if **new_us.head() == *"uss" {
            let mut r: Vec<Position> = vec![pos("2"), pos("4.1")];
            for (_, p) in &entries {
                r.push(p.clone());
                r.push(p.child(1));
            }
            rec.computed(pos("2"), r);
        }
        for (e, p) in located(&new_us, &pos("2"), "uss", "us-empty") {
            if &e.args()[0] == idb {
                rec.computed(p.clone(), reads.clone());
                rec.copy(p.child(1), pos("4.1"));
                store_deps(&mut rec, &e.args()[1], &p.child(2), ("ses", "ses-empty"), &old_ses_elems, &out.session_writes, &reads);
            } else if let Some((_, src)) = entries.iter().find(|(o, _)| o.args()[0] == e.args()[0]) {
                rec.copy(p, src.clone());
            }
        }

        store_deps(&mut rec, &new_db, &pos("3"), ("db", "db-empty"), &old_db_elems, &out.db_writes, &reads);

        list_deps(&mut rec, &pos("5"), &pos("6"), n, n + 1, n);
        let r = spine(&pos("5"), n).child(1);
        rec.computed(r.clone(), reads.clone());
        rec.copy(r.child(1), pos("4.1"));
        rec.copy(r.child(2), pos("4.2"));
        rec.computed(r.child(3), reads.clone());
        computed_all(&mut rec, &response.args()[3], &r.child(4), &reads);
        store_deps(&mut rec, &ses, &r.child(5), ("ses", "ses-empty"), &old_ses_elems, &out.session_writes, &reads);
        rec.copy(r.child(6), pos("4.4"));
        Ok((result, rec))
    }

    fn fill_query(&self, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        const OP: &str = "fillQuery";
        let [u, sg] = args else { return Err(fail(OP, "expects 2 arguments")) };
        if **u.head() != *"url" {
            return Err(fail(OP, format!("not a URL: {u}")));
        }
        let sigma = store_of(sg).map_err(|e| fail(OP, e.to_string()))?;
        let mut q = store_of(&u.args()[1]).map_err(|e| fail(OP, e.to_string()))?;
        for (k, v) in q.iter_mut() {
            if let Some(s) = sigma.get(k) {
                *v = s.clone();
            }
        }
        let qt = query_term(sig, &q)?;
        let out = sig.app("url", vec![u.args()[0].clone(), qt.clone()])?;
        let mut rec = DependencyRecord::default();
        rec.computed(Position::root(), vec![pos("1")]);
        rec.copy(pos("1"), pos("1.1"));
        let mut r = all_positions(&u.args()[1], &pos("1.2"));
        r.extend(all_positions(sg, &pos("2")));
        computed_all(&mut rec, &qt, &pos("2"), &r);
        Ok((out, rec))
    }

    fn push_hist(&self, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        let [p, h] = args else { return Err(fail("pushHist", "expects 2 arguments")) };
        let mut rec = DependencyRecord::default();
        if **p.head() == *super::encode::BLANK_PAGE {
            // nothing to go back to before the first page
            rec.copy(Position::root(), pos("2"));
            return Ok((h.clone(), rec));
        }
        let mut items = vec![];
        let mut cur = h;
        while **cur.head() == *"hist" {
            items.push(cur.args()[0].clone());
            cur = &cur.args()[1];
        }
        let in_len = items.len();
        let keep = in_len.min(self.history_cap.saturating_sub(1));
        items.truncate(keep);
        let mut tail = sig.constant("hist-empty")?;
        for it in items.into_iter().rev() {
            tail = sig.app("hist", vec![it, tail])?;
        }
        let out = sig.app("hist", vec![p.clone(), tail])?;
        rec.copy(pos("1"), pos("1"));
        if keep == in_len {
            rec.copy(pos("2"), pos("2"));
        } else {
            list_deps(&mut rec, &pos("2"), &pos("2"), in_len, keep, keep);
        }
        Ok((out, rec))
    }

    fn enqueue(&self, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        let [q, m] = args else { return Err(fail("enqueue", "expects 2 arguments")) };
        let mut items: Vec<Term> = queue_items(q).into_iter().cloned().collect();
        let n = items.len();
        items.push(m.clone());
        let mut rec = DependencyRecord::default();
        list_deps(&mut rec, &Position::root(), &pos("1"), n, n + 1, n);
        rec.copy(spine(&Position::root(), n).child(1), pos("2"));
        Ok((queue(sig, items)?, rec))
    }
}

fn is_for(m: &Term, i: &Term, t: &Term) -> bool {
    matches!(&**m.head(), "B2S" | "S2B") && &m.args()[0] == i && &m.args()[1] == t
}

impl Builtins for WebBuiltins {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn params(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("alphabet".to_string(), serde_json::to_string(&self.alphabet).expect("strings serialise")),
            ("history_cap".to_string(), self.history_cap.to_string()),
        ])
    }

    fn eval(&self, op: &str, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        match op {
            "evalScript" => self.eval_script_call(args, sig, true),
            "fillQuery" => self.fill_query(args, sig),
            "pushHist" => self.push_hist(args, sig),
            "enqueue" => self.enqueue(args, sig),
            "inc" => {
                let n: u64 = args
                    .first()
                    .and_then(|a| a.head().parse().ok())
                    .ok_or_else(|| fail(op, "expects a natural number"))?;
                let mut rec = DependencyRecord::default();
                rec.computed(Position::root(), vec![pos("1")]);
                Ok((sig.constant(&(n + 1).to_string())?, rec))
            }
            _ => Err(RewriteError::UnknownBuiltin(op.to_string())),
        }
    }

    fn eval_value(&self, op: &str, args: &[Term], sig: &Signature) -> Result<Term, RewriteError> {
        if op == "evalScript" {
            return Ok(self.eval_script_call(args, sig, false)?.0);
        }
        Ok(self.eval(op, args, sig)?.0)
    }

    /// `idle(I, T, M, FQ, FR)`: no message of browser tab `(I, T)` is in
    /// flight or queued.
    fn predicate(&self, name: &str, args: &[Term], _: &Signature) -> Result<Option<Vec<(usize, Position)>>, RewriteError> {
        if name != "idle" {
            return Err(RewriteError::UnknownBuiltin(name.to_string()));
        }
        let [i, t, m, fq, fr] = args else { return Err(fail(name, "expects 5 arguments")) };
        let mut reads = vec![(0, Position::root()), (1, Position::root()), (2, Position::root())];
        for (e, p) in located(m, &Position::root(), "msgs", "mes-empty") {
            if is_for(e, i, t) {
                return Ok(None);
            }
            reads.push((2, p.clone()));
            if e.arity() >= 2 {
                reads.push((2, p.child(1)));
                reads.push((2, p.child(2)));
            }
        }
        for (k, q) in [(3, fq), (4, fr)] {
            let items = queue_items(q);
            for j in 0..=items.len() {
                reads.push((k, spine(&Position::root(), j)));
            }
            for (j, e) in items.into_iter().enumerate() {
                if is_for(e, i, t) {
                    return Ok(None);
                }
                let p = spine(&Position::root(), j).child(1);
                reads.push((k, p.clone()));
                reads.push((k, p.child(1)));
                reads.push((k, p.child(2)));
            }
        }
        Ok(Some(reads))
    }
}
