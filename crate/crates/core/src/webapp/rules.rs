//! Request/response protocol between browsers and the server.

use super::model::Scenario;
use crate::rewrite::{Condition, Relation, RewriteError, Rule};
use crate::term::{parse_term_raw, Signature, Term};

const SERVER: &str = "S(W:Web, US:UserSessions, DB:DB, FQ:Queue, FR:Queue)";

fn browser(page: &str, urls: &str, session: &str, lm: &str, hist: &str, n: &str) -> String {
    format!("B(I:Id, T:Id, {page}, {urls}, {session}, SG:Sigma, {lm}, {hist}, {n})")
}

fn idle() -> Condition {
    let v = |n: &str, s: &str| Term::var(n, s);
    Condition::Pred {
        name: "idle".into(),
        args: vec![v("I", "Id"), v("T", "Id"), v("M", "Message"), v("FQ", "Queue"), v("FR", "Queue")],
    }
}

fn rule(sig: &Signature, label: &str, lhs: &str, rhs: &str, conditions: Vec<Condition>) -> Result<Rule, RewriteError> {
    Ok(Rule {
        label: label.into(),
        lhs: parse_term_raw(lhs, sig)?,
        rhs: parse_term_raw(rhs, sig)?,
        conditions,
        top_only: true,
    })
}

/// The protocol rules enabled by the scenario's action toggles.
pub fn protocol_rules(sig: &Signature, sc: &Scenario) -> Result<Vec<Rule>, RewriteError> {
    let p = |s: &str| parse_term_raw(s, sig);
    let mut rules = vec![];

    // a browser with no pending request follows one of its links
    let b = browser("P:PageName", "urls(url(PG:PageName, Q:Query), UR:URL)", "SS:Session", "LM:Message", "H:History", "N:Nat");
    let req = "B2S(I:Id, T:Id, fillQuery(url(PG:PageName, Q:Query), SG:Sigma), N:Nat)";
    let b2 = browser("P:PageName", "urls(url(PG:PageName, Q:Query), UR:URL)", "SS:Session", req, "H:History", "N:Nat");
    rules.push(rule(
        sig,
        "ReqIni",
        &format!("ws(brs({b}, BR:Browser), M:Message, {SERVER})"),
        &format!("ws(brs({b2}, BR:Browser), msgs(M:Message, {req}), {SERVER})"),
        vec![idle()],
    )?);

    rules.push(rule(
        sig,
        "ReqFin",
        &format!("ws(BR:Browser, msgs(B2S(I:Id, T:Id, U:URL, N:Nat), M:Message), {SERVER})"),
        "ws(BR:Browser, M:Message, S(W:Web, US:UserSessions, DB:DB, enqueue(FQ:Queue, B2S(I:Id, T:Id, U:URL, N:Nat)), FR:Queue))",
        vec![],
    )?);

    rules.push(rule(
        sig,
        "ScriptEval",
        "ws(BR:Browser, M:Message, S(W:Web, US:UserSessions, DB:DB, fq(MSG:Message, FQ:Queue), FR:Queue))",
        "ws(BR:Browser, M:Message, evalScript(W:Web, US:UserSessions, DB:DB, MSG:Message, FQ:Queue, FR:Queue))",
        vec![],
    )?);

    rules.push(rule(
        sig,
        "ResIni",
        "ws(BR:Browser, M:Message, S(W:Web, US:UserSessions, DB:DB, FQ:Queue, fq(MSG:Message, FR:Queue)))",
        &format!("ws(BR:Browser, msgs(M:Message, MSG:Message), {SERVER})"),
        vec![],
    )?);

    // the browser displays a response answering its latest request
    let b = browser("P:PageName", "UR:URL", "SS:Session", "LM:Message", "H:History", "N:Nat");
    let resp = "S2B(I:Id, T:Id, P2:PageName, UR2:URL, SS2:Session, A:Nat)";
    let hist = if sc.back { "pushHist(P:PageName, H:History)" } else { "H:History" };
    let b2 = browser("P2:PageName", "UR2:URL", "SS2:Session", "LM:Message", hist, "N:Nat");
    let same_ack = Condition::Test { rel: Relation::Eq, lhs: p("A:Nat")?, rhs: p("N:Nat")? };
    rules.push(rule(
        sig,
        "ResFin",
        &format!("ws(brs({b}, BR:Browser), msgs({resp}, M:Message), SV:Server)"),
        &format!("ws(brs({b2}, BR:Browser), M:Message, SV:Server)"),
        vec![same_ack],
    )?);

    if sc.refresh {
        // responses to requests superseded by a refresh are discarded
        let stale = Condition::Test { rel: Relation::Lt, lhs: p("A:Nat")?, rhs: p("N:Nat")? };
        rules.push(rule(
            sig,
            "ResDrop",
            &format!("ws(brs({b}, BR:Browser), msgs({resp}, M:Message), SV:Server)"),
            &format!("ws(brs({b}, BR:Browser), M:Message, SV:Server)"),
            vec![stale],
        )?);

        let last = "B2S(I:Id, T:Id, U:URL, A:Nat)";
        let b = browser("P:PageName", "UR:URL", "SS:Session", last, "H:History", "N:Nat");
        let again = "B2S(I:Id, T:Id, U:URL, inc(N:Nat))";
        let b2 = browser("P:PageName", "UR:URL", "SS:Session", again, "H:History", "inc(N:Nat)");
        let limit = Condition::Test { rel: Relation::Lt, lhs: p("N:Nat")?, rhs: p(&(sc.max_refresh + 1).to_string())? };
        rules.push(rule(
            sig,
            "Refresh",
            &format!("ws(brs({b}, BR:Browser), M:Message, SV:Server)"),
            &format!("ws(brs({b2}, BR:Browser), msgs(M:Message, {again}), SV:Server)"),
            vec![limit],
        )?);
    }

    if sc.back {
        let b = browser("P:PageName", "UR:URL", "SS:Session", "LM:Message", "hist(P2:PageName, H:History)", "N:Nat");
        let req = "B2S(I:Id, T:Id, url(P2:PageName, q-empty), N:Nat)";
        let b2 = browser("P:PageName", "UR:URL", "SS:Session", req, "H:History", "N:Nat");
        rules.push(rule(
            sig,
            "Back",
            &format!("ws(brs({b}, BR:Browser), M:Message, {SERVER})"),
            &format!("ws(brs({b2}, BR:Browser), msgs(M:Message, {req}), {SERVER})"),
            vec![idle()],
        )?);
    }
    Ok(rules)
}
