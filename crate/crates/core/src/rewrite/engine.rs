//! Rule application. `successors` is the fast path used by the checker;
//! `transitions` produces the same targets together with the expanded step
//! sequence (unflat, rule application, builtin calls, flat).

use std::collections::HashSet;

use super::rule::{Condition, Relation, Rule, Theory};
use super::trace::{RewriteStep, StepKind};
use super::RewriteError;
use crate::term::{
    flatten, flatten_recorded, match_capped, match_syntactic, match_with_views, Match, Position, Substitution, Term,
    DEFAULT_MATCH_CAP,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub label: String,
    pub target: Term,
    pub steps: Vec<RewriteStep>,
    /// `states[k]` is the state after `steps[k]`; the last one is `target`.
    pub states: Vec<Term>,
}

fn nat_value(t: &Term) -> Result<u64, RewriteError> {
    if t.arity() == 0 && !t.is_var() {
        if let Ok(n) = t.head().parse() {
            return Ok(n);
        }
    }
    Err(RewriteError::Condition(format!("{t} is not a natural number")))
}

impl Theory {
    fn redex_positions(&self, rule: &Rule, s: &Term) -> Vec<Position> {
        if rule.top_only {
            return vec![Position::root()];
        }
        s.positions()
            .into_iter()
            .filter(|p| {
                let t = s.subterm_at(p).expect("own position");
                !t.is_var() && t.sort() == rule.lhs.sort()
            })
            .collect()
    }

    /// Evaluates builtin calls bottom-up, value only.
    pub fn eval_calls(&self, t: &Term) -> Result<Term, RewriteError> {
        if t.is_var() || t.arity() == 0 {
            return Ok(t.clone());
        }
        let args = t.args().iter().map(|a| self.eval_calls(a)).collect::<Result<Vec<_>, _>>()?;
        if self.sig.is_builtin(t.head()) {
            return self.builtins.eval_value(t.head(), &args, &self.sig);
        }
        let unchanged = args.iter().zip(t.args()).all(|(a, b)| a.ptr_eq(b));
        Ok(if unchanged { t.clone() } else { t.with_args(args) })
    }

    /// `eval_calls(sigma.apply(t))` without walking the bindings, which
    /// never contain calls.
    fn instantiate(&self, t: &Term, sigma: &Substitution) -> Result<Term, RewriteError> {
        if t.is_var() {
            return Ok(sigma.apply(t));
        }
        if t.arity() == 0 {
            return Ok(t.clone());
        }
        let args = t.args().iter().map(|a| self.instantiate(a, sigma)).collect::<Result<Vec<_>, _>>()?;
        if self.sig.is_builtin(t.head()) {
            return self.builtins.eval_value(t.head(), &args, &self.sig);
        }
        Ok(t.with_args(args))
    }

    /// Evaluates the conditions under `sigma`. When `reads` is given, the
    /// symbols inspected are added to it (positions in the left-hand side,
    /// extended into variable bindings).
    pub fn check_conditions(
        &self,
        rule: &Rule,
        sigma: &Substitution,
        mut reads: Option<&mut Vec<Position>>,
    ) -> Result<bool, RewriteError> {
        for c in &rule.conditions {
            match c {
                Condition::Test { rel, lhs, rhs } => {
                    let l = flatten(&self.instantiate(lhs, sigma)?, &self.sig);
                    let r = flatten(&self.instantiate(rhs, sigma)?, &self.sig);
                    let ok = match rel {
                        Relation::Eq => l == r,
                        Relation::Neq => l != r,
                        Relation::Lt => nat_value(&l)? < nat_value(&r)?,
                    };
                    if !ok {
                        return Ok(false);
                    }
                    if let Some(out) = reads.as_deref_mut() {
                        for (v, _) in lhs.vars().into_iter().chain(rhs.vars()) {
                            let bound = sigma.get(&v).expect("validated rule");
                            for occ in rule.lhs.var_positions(&v) {
                                bound.collect_positions(occ, out);
                            }
                        }
                    }
                }
                Condition::Pred { name, args } => {
                    let vals: Vec<Term> = args.iter().map(|a| sigma.apply(a)).collect();
                    let Some(rs) = self.builtins.predicate(name, &vals, &self.sig)? else {
                        return Ok(false);
                    };
                    if let Some(out) = reads.as_deref_mut() {
                        for (i, p) in rs {
                            for occ in rule.lhs.var_positions(args[i].head()) {
                                out.push(occ.join(&p));
                            }
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    fn matches(&self, rule: &Rule, sub: &Term) -> Result<Vec<Match>, RewriteError> {
        if sub.sort() != rule.lhs.sort() {
            return Ok(vec![]);
        }
        Ok(match_with_views(&rule.lhs, sub, &self.sig, DEFAULT_MATCH_CAP)?)
    }

    /// One-step successors of canonical `s` as `(rule label, canonical
    /// target)`, without duplicates.
    pub fn successors(&self, s: &Term) -> Result<Vec<(String, Term)>, RewriteError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for rule in &self.rules {
            for w in self.redex_positions(rule, s) {
                let sub = s.subterm_at(&w)?;
                if sub.sort() != rule.lhs.sort() {
                    continue;
                }
                for m in match_capped(&rule.lhs, sub, &self.sig, DEFAULT_MATCH_CAP)? {
                    if !self.check_conditions(rule, &m, None)? {
                        continue;
                    }
                    let rhs = self.instantiate(&rule.rhs, &m)?;
                    let target = flatten(&s.replace_at_raw(&w, rhs)?, &self.sig);
                    if seen.insert((rule.label.clone(), target.clone())) {
                        out.push((rule.label.clone(), target));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Like [`successors`](Self::successors) with every step made explicit.
    pub fn transitions(&self, s: &Term) -> Result<Vec<Transition>, RewriteError> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for rule in &self.rules {
            for w in self.redex_positions(rule, s) {
                let sub = s.subterm_at(&w)?;
                for m in self.matches(rule, sub)? {
                    if let Some(t) = self.expand(rule, s, &w, m)? {
                        if seen.insert((t.label.clone(), t.target.clone())) {
                            out.push(t);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn expand(&self, rule: &Rule, s: &Term, w: &Position, m: Match) -> Result<Option<Transition>, RewriteError> {
        let mut reads = Vec::new();
        if !self.check_conditions(rule, &m.subst, Some(&mut reads))? {
            return Ok(None);
        }
        reads.sort();
        reads.dedup();
        let mut steps = Vec::new();
        let mut states = Vec::new();
        let mut cur = s.clone();
        if !m.view.is_identity() {
            let viewed = m.view.apply(cur.subterm_at(w)?)?;
            cur = cur.replace_at_raw(w, viewed)?;
            steps.push(RewriteStep::new(StepKind::Unflat, "unflat", w.clone()).with_permutation(m.view.clone()));
            states.push(cur.clone());
        }
        let rhs = m.subst.apply(&rule.rhs);
        let mut calls = Vec::new();
        builtin_calls(&self.sig, &rhs, Position::root(), &mut calls);
        cur = cur.replace_at_raw(w, rhs)?;
        let mut app = RewriteStep::new(StepKind::RuleApp, &rule.label, w.clone());
        app.matcher = Some(m.subst);
        app.test_reads = reads;
        steps.push(app);
        states.push(cur.clone());
        for p in calls {
            let at = w.join(&p);
            let call = cur.subterm_at(&at)?.clone();
            let (res, deps) = self.builtins.eval(call.head(), call.args(), &self.sig)?;
            cur = cur.replace_at_raw(&at, res)?;
            let mut st = RewriteStep::new(StepKind::Builtin, call.head(), at);
            st.dependencies = Some(deps);
            steps.push(st);
            states.push(cur.clone());
        }
        let (flat, rec) = flatten_recorded(&cur, &self.sig);
        if !rec.is_identity() {
            steps.push(RewriteStep::new(StepKind::Flat, "flat", Position::root()).with_permutation(rec));
            states.push(flat.clone());
        }
        Ok(Some(Transition { label: rule.label.clone(), target: flat, steps, states }))
    }

    /// Applies one recorded step. In strict mode the rule matcher must be
    /// the recorded one and flat steps must produce the canonical form;
    /// otherwise the left-hand side is re-matched and flat steps just
    /// follow their record (used when replaying with altered subterms).
    pub fn replay_step(&self, s: &Term, step: &RewriteStep, strict: bool) -> Result<Term, RewriteError> {
        let fail = |msg: String| RewriteError::Replay(format!("{} {} at {}: {msg}", step.kind, step.label, step.position));
        match step.kind {
            StepKind::Unflat | StepKind::Flat => {
                let rec = step.permutation.as_ref().ok_or_else(|| fail("missing permutation".into()))?;
                let sub = s.subterm_at(&step.position)?;
                let out = s.replace_at_raw(&step.position, rec.apply(sub)?)?;
                if strict && step.kind == StepKind::Flat && flatten(s, &self.sig) != out {
                    return Err(fail("record does not produce the canonical form".into()));
                }
                if strict && step.kind == StepKind::Unflat && flatten(&out, &self.sig) != flatten(s, &self.sig) {
                    return Err(fail("record is not a rearrangement".into()));
                }
                Ok(out)
            }
            StepKind::RuleApp => {
                let rule = self.rule(&step.label).ok_or_else(|| RewriteError::UnknownRule(step.label.clone()))?;
                let sub = s.subterm_at(&step.position)?;
                let sigma = match_syntactic(&rule.lhs, sub).ok_or_else(|| fail("left-hand side does not match".into()))?;
                if strict && step.matcher.as_ref() != Some(&sigma) {
                    return Err(fail("matcher differs from the recorded one".into()));
                }
                if !self.check_conditions(rule, &sigma, None)? {
                    return Err(fail("condition does not hold".into()));
                }
                Ok(s.replace_at_raw(&step.position, sigma.apply(&rule.rhs))?)
            }
            StepKind::Builtin => {
                let call = s.subterm_at(&step.position)?;
                if call.is_var() || **call.head() != *step.label {
                    return Err(fail(format!("expected a call to {}", step.label)));
                }
                let v = self.builtins.eval_value(call.head(), call.args(), &self.sig)?;
                Ok(s.replace_at_raw(&step.position, v)?)
            }
        }
    }
}

/// Positions of builtin calls in `t`, innermost first, left to right.
fn builtin_calls(sig: &crate::term::Signature, t: &Term, at: Position, out: &mut Vec<Position>) {
    for (i, a) in t.args().iter().enumerate() {
        builtin_calls(sig, a, at.child(i as u32 + 1), out);
    }
    if !t.is_var() && sig.is_builtin(t.head()) {
        out.push(at);
    }
}
