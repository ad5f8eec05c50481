use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use navslice::corpus;
use navslice::ltl::{check, parse_formula, SearchBudget, Verdict};
use navslice::rewrite::*;
use navslice::slicer::*;
use navslice::term::*;
use navslice::webapp::{resolve_builtins, WebModel};
use proptest::prelude::*;

fn pos(s: &str) -> Position {
    s.parse().unwrap()
}

fn set(ps: &[&str]) -> BTreeSet<Position> {
    ps.iter().map(|p| pos(p)).collect()
}

#[derive(Debug)]
struct Sum;

impl Builtins for Sum {
    fn name(&self) -> &str {
        "sum"
    }

    fn eval(&self, op: &str, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        assert_eq!(op, "sum");
        let n: u64 = args.iter().map(|a| a.head().parse::<u64>().unwrap()).sum();
        let mut deps = DependencyRecord::default();
        deps.computed(Position::root(), vec![pos("1"), pos("2")]);
        Ok((sig.constant(&n.to_string())?, deps))
    }

    fn predicate(&self, _: &str, _: &[Term], _: &Signature) -> Result<Option<Vec<(usize, Position)>>, RewriteError> {
        Ok(None)
    }
}

fn small_theory() -> Arc<Theory> {
    let mut sig = Signature::new();
    sig.set_literal_sorts(LiteralSorts { nat: Some("Nat".into()), ..Default::default() });
    sig.ac_op("f", "S", None).unwrap();
    for c in ["a", "b", "c"] {
        sig.op(c, &[], "S").unwrap();
    }
    sig.op("g", &["S"], "S").unwrap();
    sig.op("h", &["S", "S"], "S").unwrap();
    sig.op("pair", &["S", "S"], "S").unwrap();
    sig.op("n", &["Nat"], "S").unwrap();
    sig.builtin_op("sum", &["Nat", "Nat"], "Nat").unwrap();
    let p = |s: &str| parse_term_raw(s, &sig).unwrap();
    let rule = |label: &str, lhs: &str, rhs: &str| Rule { label: label.into(), lhs: p(lhs), rhs: p(rhs), conditions: vec![], top_only: false };
    let rules = vec![
        rule("dup", "g(X:S)", "h(X:S, X:S)"),
        rule("same", "h(X:S, X:S)", "g(X:S)"),
        rule("add", "h(n(A:Nat), n(B:Nat))", "n(sum(A:Nat, B:Nat))"),
    ];
    Arc::new(Theory::new(sig, rules, Arc::new(Sum)).unwrap())
}

fn one_transition(th: &Theory, s: &str, label: &str) -> (Term, Transition) {
    let s = parse_term(s, &th.sig).unwrap();
    let t = th.transitions(&s).unwrap().into_iter().find(|t| t.label == label).unwrap();
    (s, t)
}

#[test]
fn unflat_remaps_through_the_permutation() {
    let th = small_theory();
    let nested = parse_term_raw("f(f(b, c), f(a, b))", &th.sig).unwrap();
    let flat = flatten(&nested, &th.sig);
    assert_eq!(flat.to_string(), "f(a, b, b, c)");
    let (back, rec) = unflatten(&flat, Some(&nested), &th.sig).unwrap();
    assert_eq!(back, nested);
    let step = RewriteStep::new(StepKind::Unflat, "unflat", Position::root()).with_permutation(rec);
    // `a` sits at Λ.2.1 after unflattening
    let src = slice_step_backward(&th, &step, &flat, &nested, &set(&["Λ", "Λ.2", "Λ.2.1"])).unwrap();
    assert!(src.contains(&pos("Λ.1")));
    assert!(!src.iter().any(|p| ["Λ.2", "Λ.3", "Λ.4"].contains(&p.to_string().as_str())));
}

#[test]
fn rule_context_is_untouched() {
    let th = small_theory();
    let (s, t) = one_transition(&th, "pair(g(a), c)", "dup");
    let app = t.steps.iter().find(|s| s.kind == StepKind::RuleApp).unwrap();
    assert_eq!(app.position, pos("Λ.1"));
    let target = set(&["Λ", "Λ.2"]);
    assert_eq!(slice_step_backward(&th, app, &s, &t.target, &target).unwrap(), target);
}

#[test]
fn rule_variables_map_to_their_left_occurrences() {
    let th = small_theory();
    let (s, t) = one_transition(&th, "pair(g(a), c)", "dup");
    let app = t.steps.iter().find(|s| s.kind == StepKind::RuleApp).unwrap();
    // the second copy of X, plus the g skeleton that let the rule fire
    let src = slice_step_backward(&th, app, &s, &t.target, &set(&["Λ", "Λ.1", "Λ.1.2"])).unwrap();
    assert_eq!(src, set(&["Λ", "Λ.1", "Λ.1.1"]));
    // a skeleton-only target still activates the redex
    let src = slice_step_backward(&th, app, &s, &t.target, &set(&["Λ", "Λ.1"])).unwrap();
    assert_eq!(src, set(&["Λ", "Λ.1"]));

    let (s, t) = one_transition(&th, "pair(h(b, b), c)", "same");
    let app = &t.steps[0];
    let src = slice_step_backward(&th, app, &s, &t.target, &set(&["Λ", "Λ.1", "Λ.1.1"])).unwrap();
    assert_eq!(src, set(&["Λ", "Λ.1", "Λ.1.1", "Λ.1.2"]));
}

#[test]
fn builtin_dependencies() {
    let th = small_theory();
    let (_, t) = one_transition(&th, "pair(h(n(2), n(3)), c)", "add");
    assert_eq!(t.target.to_string(), "pair(n(5), c)");
    let call = t.steps.iter().position(|s| s.kind == StepKind::Builtin).unwrap();
    let (before, after) = (&t.states[call - 1], &t.states[call]);
    let step = &t.steps[call];
    assert_eq!(step.position, pos("Λ.1.1"));
    let src = slice_step_backward(&th, step, before, after, &set(&["Λ", "Λ.1", "Λ.1.1"])).unwrap();
    assert_eq!(src, set(&["Λ", "Λ.1", "Λ.1.1", "Λ.1.1.1", "Λ.1.1.2"]));
    // untouched context only
    assert_eq!(slice_step_backward(&th, step, before, after, &set(&["Λ", "Λ.2"])).unwrap(), set(&["Λ", "Λ.2"]));

    let mut blind = step.clone();
    blind.dependencies = None;
    let src = slice_step_backward(&th, &blind, before, after, &set(&["Λ", "Λ.1", "Λ.1.1"])).unwrap();
    assert_eq!(src, set(&["Λ", "Λ.1", "Λ.1.1", "Λ.1.1.1", "Λ.1.1.2"]));
}

#[test]
fn bad_positions_are_engine_errors() {
    let th = small_theory();
    let (s, t) = one_transition(&th, "pair(g(a), c)", "dup");
    let app = t.steps.iter().find(|s| s.kind == StepKind::RuleApp).unwrap();
    assert!(slice_step_backward(&th, app, &s, &t.target, &set(&["Λ.7"])).is_err());
}

#[test]
fn full_criterion_on_a_single_step_keeps_everything() {
    let th = small_theory();
    let (s, t) = one_transition(&th, "g(a)", "dup");
    let mut trace = Trace::new(th.clone(), s.clone());
    for (st, state) in t.steps.into_iter().zip(t.states) {
        trace.push(st, state);
    }
    let n = trace.states.len() - 1;
    let crit = SlicingCriterion::new(&trace, n, trace.states[n].positions()).unwrap();
    let sliced = slice_trace(&trace, &crit).unwrap();
    assert_eq!(sliced.states[0], SlicedTerm::full(s));
    assert_eq!(sliced.metrics().ratio, 1.0);
    assert!(replay_check(&trace, &sliced, 20, 1).unwrap().ok());
}

struct Cex {
    trace: Trace,
}

fn cex(src: &str, formula: &str) -> Cex {
    let model = WebModel::parse(src).unwrap();
    let f = parse_formula(formula).unwrap();
    let r = check(&model.theory, &model.initial, &model, &f, &SearchBudget::default()).unwrap();
    let Verdict::Refuted { trace, .. } = r.verdict else { panic!("{formula} holds") };
    Cex { trace }
}

fn forum() -> &'static Cex {
    static C: OnceLock<Cex> = OnceLock::new();
    C.get_or_init(|| cex(corpus::FORUM_BUGGY, corpus::ADMIN_EXCLUSION))
}

fn shop() -> &'static Cex {
    static C: OnceLock<Cex> = OnceLock::new();
    C.get_or_init(|| cex(corpus::SHOP, "[] ~ {ResDrop}"))
}

const BROWSERS: &str = "B(?,_,?,_,_,_,_,_,_)";

fn slice_last(c: &Cex, pattern: &str) -> (SlicingCriterion, SlicedTrace) {
    let n = c.trace.states.len() - 1;
    let crit = criterion_from_pattern(&c.trace, n, &FilterPattern::parse(pattern).unwrap()).unwrap();
    let sliced = slice_trace(&c.trace, &crit).unwrap();
    (crit, sliced)
}

#[test]
fn forum_criterion_and_reduction() {
    let c = forum();
    let (crit, sliced) = slice_last(c, BROWSERS);
    assert_eq!(crit.positions, set(&["Λ", "Λ.1", "Λ.1.1", "Λ.1.1.1", "Λ.1.1.3", "Λ.1.2", "Λ.1.2.1", "Λ.1.2.3"]));
    let m = sliced.metrics_last(7);
    assert!(m.ratio <= 0.15, "{m:?}");
    assert_eq!(m.original, c.trace.states[c.trace.states.len() - 7..].iter().map(Term::size).sum::<usize>());
    // the request whose answer put Alfred on Admin is part of the slice
    let sig = &c.trace.theory.sig;
    assert!(sliced.states.iter().any(|s| s.render(Some(sig)).contains("B2S(bidAlfred, tidAlfred, url(Admin, q-empty), 1)")));
}

#[test]
fn criterion_fidelity_and_trailing_holes() {
    let c = forum();
    let n = c.trace.states.len() - 1;
    let crit = criterion_from_pattern(&c.trace, n - 10, &FilterPattern::parse(BROWSERS).unwrap()).unwrap();
    let sliced = slice_trace(&c.trace, &crit).unwrap();
    let at = &sliced.states[n - 10];
    let (fm, _) = filter_match(&FilterPattern::parse(BROWSERS).unwrap(), &c.trace.states[n - 10]);
    assert_eq!(at, &fm);
    for p in &crit.positions {
        assert!(at.is_kept(p));
        assert_eq!(at.term().subterm_at(p).unwrap(), c.trace.states[n - 10].subterm_at(p).unwrap());
    }
    assert!(sliced.states[n - 9..].iter().all(|s| s.kept().is_empty() && s.symbol_count() == 1));
}

#[test]
fn empty_criterion() {
    let c = forum();
    let (crit, sliced) = slice_last(c, "nosuchop(?)");
    assert!(crit.positions.is_empty());
    assert!(sliced.states.iter().all(|s| s.kept().is_empty()));
    assert!(sliced.metrics().ratio < 0.01);
    assert!(replay_check(&c.trace, &sliced, 5, 0).unwrap().ok());
}

#[test]
fn replay_agrees_on_corpus_traces() {
    for (c, pattern) in [(forum(), BROWSERS), (shop(), BROWSERS), (shop(), "B(_,_,_,_,?,_,_,_,_)")] {
        let (_, sliced) = slice_last(c, pattern);
        let report = replay_check(&c.trace, &sliced, 100, 42).unwrap();
        assert!(report.ok(), "{pattern}: {:?}", &report.failures[..report.failures.len().min(3)]);
    }
}

#[test]
fn dropping_a_needed_position_is_detected() {
    let c = forum();
    let (_, sliced) = slice_last(c, BROWSERS);
    let s0 = &sliced.states[0];
    let t0 = s0.term();
    let alfred_pw = t0
        .positions()
        .into_iter()
        .find(|p| {
            let t = t0.subterm_at(p).unwrap();
            t.head().as_ref() == "dbe" && t.args()[0].head().as_ref() == "\"alfred\""
        })
        .expect("alfred's password entry")
        .child(2);
    for p in [pos("Λ.1.1.1"), alfred_pw] {
        assert!(s0.is_kept(&p), "{p}");
        let mut broken = sliced.clone();
        broken.states[0] = s0.without(&p);
        let report = replay_check(&c.trace, &broken, 100, 9).unwrap();
        assert!(!report.ok(), "dropping {p} went unnoticed");
    }
}

#[test]
fn sliced_trace_documents_round_trip() {
    let c = shop();
    let (_, sliced) = slice_last(c, BROWSERS);
    let doc = sliced.to_doc(&c.trace);
    assert!(doc.slices.iter().all(|s| !s.slice.contains('•')));
    let json = serde_json::to_string(&doc).unwrap();
    let back: SlicedTraceDoc = serde_json::from_str(&json).unwrap();
    let (trace, again) = SlicedTrace::from_doc(&back, resolve_builtins).unwrap();
    assert!(trace == c.trace);
    assert_eq!(again.states, sliced.states);

    let mut bullets = back.clone();
    for s in &mut bullets.slices {
        s.slice = s.slice.replace('*', "•");
    }
    assert!(SlicedTrace::from_doc(&bullets, resolve_builtins).is_ok());
    let mut wrong = back;
    wrong.slices[0].kept_positions.pop();
    assert!(SlicedTrace::from_doc(&wrong, resolve_builtins).is_err());
}

fn subset_of(t: &Term, seed: u64, keep: f64) -> Vec<Position> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    t.positions().into_iter().filter(|_| rng.gen_bool(keep)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn enlarging_the_criterion_never_shrinks_a_slice(seed in any::<u64>()) {
        let c = shop();
        let n = c.trace.states.len() - 1;
        let small = subset_of(&c.trace.states[n], seed, 0.02);
        let mut large = small.clone();
        large.extend(subset_of(&c.trace.states[n], seed ^ 0x5555, 0.05));
        let a = slice_trace(&c.trace, &SlicingCriterion::new(&c.trace, n, small).unwrap()).unwrap();
        let b = slice_trace(&c.trace, &SlicingCriterion::new(&c.trace, n, large).unwrap()).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            prop_assert!(x.kept().is_subset(y.kept()));
        }
    }

    #[test]
    fn positions_outside_the_redex_pass_through(seed in any::<u64>(), k in 0usize..400) {
        let c = shop();
        let k = k % c.trace.steps.len();
        let step = &c.trace.steps[k];
        let target = &c.trace.states[k + 1];
        let w = &step.position;
        let outside: BTreeSet<Position> = subset_of(target, seed, 0.2)
            .into_iter()
            .filter(|p| !w.is_prefix_of(p) && !p.is_prefix_of(w))
            .flat_map(|p| p.ancestors().filter(|a| !a.is_prefix_of(w)).collect::<Vec<_>>().into_iter().chain([p]))
            .collect();
        let mut with_anc = outside.clone();
        for p in &outside {
            with_anc.extend(p.ancestors());
        }
        let src = slice_step_backward(&c.trace.theory, step, &c.trace.states[k], target, &with_anc).unwrap();
        for p in &outside {
            prop_assert!(src.contains(p));
        }
    }
}
