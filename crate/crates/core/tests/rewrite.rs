use std::collections::BTreeMap;
use std::sync::Arc;

use navslice::rewrite::*;
use navslice::term::*;

#[derive(Debug)]
struct Arith;

impl Builtins for Arith {
    fn name(&self) -> &str {
        "arith"
    }

    fn eval(&self, op: &str, args: &[Term], sig: &Signature) -> Result<(Term, DependencyRecord), RewriteError> {
        assert_eq!(op, "add");
        let n: u64 = args.iter().map(|a| a.head().parse::<u64>().unwrap()).sum();
        let mut deps = DependencyRecord::default();
        deps.computed(Position::root(), vec!["1".parse().unwrap(), "2".parse().unwrap()]);
        Ok((sig.constant(&n.to_string())?, deps))
    }

    fn predicate(&self, name: &str, args: &[Term], _: &Signature) -> Result<Option<Vec<(usize, Position)>>, RewriteError> {
        assert_eq!(name, "nonempty");
        Ok((args[0].head().as_ref() != "none").then(|| vec![(0, Position::root())]))
    }
}

fn theory() -> Theory {
    let mut sig = Signature::new();
    sig.set_literal_sorts(LiteralSorts { nat: Some("Nat".into()), ..Default::default() });
    sig.ac_op("bag", "Bag", Some("none")).unwrap();
    sig.op("item", &["Nat"], "Bag").unwrap();
    sig.op("st", &["Bag", "Nat"], "State").unwrap();
    sig.builtin_op("add", &["Nat", "Nat"], "Nat").unwrap();
    let p = |s: &str| parse_term_raw(s, &sig).unwrap();
    let rules = vec![
        Rule {
            label: "take".into(),
            lhs: p("st(bag(item(N:Nat), B:Bag), C:Nat)"),
            rhs: p("st(B:Bag, add(C:Nat, N:Nat))"),
            conditions: vec![
                Condition::Test { rel: Relation::Lt, lhs: p("N:Nat"), rhs: p("5") },
                Condition::Pred { name: "nonempty".into(), args: vec![p("B:Bag")] },
            ],
            top_only: true,
        },
        Rule { label: "dup".into(), lhs: p("item(N:Nat)"), rhs: p("bag(item(N:Nat), item(N:Nat))"), conditions: vec![], top_only: false },
    ];
    Theory::new(sig, rules, Arc::new(Arith)).unwrap()
}

fn resolve(name: &str, _: &BTreeMap<String, String>) -> Option<Arc<dyn Builtins>> {
    (name == "arith").then(|| Arc::new(Arith) as Arc<dyn Builtins>)
}

fn build_trace(th: &Arc<Theory>, init: &Term, labels: &[&str]) -> Trace {
    let mut trace = Trace::new(th.clone(), init.clone());
    for l in labels {
        let ts = th.transitions(trace.last_state()).unwrap();
        let Some(t) = ts.into_iter().find(|t| t.label == *l) else { break };
        for (st, s) in t.steps.into_iter().zip(t.states) {
            trace.push(st, s);
        }
    }
    trace
}

#[test]
fn transitions_agree_with_successors() {
    let th = theory();
    let s = parse_term("st(bag(item(1), item(7), item(2)), 0)", &th.sig).unwrap();
    let fast: Vec<(String, Term)> = th.successors(&s).unwrap();
    let full: Vec<(String, Term)> = th.transitions(&s).unwrap().into_iter().map(|t| (t.label, t.target)).collect();
    assert_eq!(fast, full);
    let mut takes: Vec<String> = fast.iter().filter(|(l, _)| l == "take").map(|(_, t)| t.to_string()).collect();
    takes.sort();
    assert_eq!(takes, vec!["st(bag(item(1), item(7)), 2)", "st(bag(item(2), item(7)), 1)"]);
    // dup at each of the three items
    assert_eq!(fast.iter().filter(|(l, _)| l == "dup").count(), 3);
    for (_, t) in &fast {
        assert_eq!(&flatten(t, &th.sig), t);
    }
}

#[test]
fn conditions_block_steps() {
    let th = theory();
    // 7 fails the bound, and taking the last item leaves an empty bag
    let s = parse_term("st(bag(item(7), item(3)), 0)", &th.sig).unwrap();
    let takes = th.successors(&s).unwrap().into_iter().filter(|(l, _)| l == "take").count();
    assert_eq!(takes, 1);
    let s = parse_term("st(item(3), 0)", &th.sig).unwrap();
    assert!(th.successors(&s).unwrap().iter().all(|(l, _)| l != "take"));
}

#[test]
fn expanded_steps_replay_and_round_trip() {
    let th = Arc::new(theory());
    let init = parse_term("st(bag(item(1), item(2), item(3), item(4)), 0)", &th.sig).unwrap();
    let mut trace = build_trace(&th, &init, &["take", "dup", "take"]);
    trace.property = Some("[] true".into());
    trace.lasso_start = Some(0);
    trace.verify().unwrap();
    let kinds: Vec<StepKind> = trace.steps.iter().map(|s| s.kind).collect();
    assert!(kinds.contains(&StepKind::Unflat));
    assert!(kinds.contains(&StepKind::Builtin));
    assert!(kinds.contains(&StepKind::Flat));
    let rule_app = trace.steps.iter().find(|s| s.kind == StepKind::RuleApp).unwrap();
    assert!(!rule_app.test_reads.is_empty());

    let json = trace.to_json();
    let back = Trace::from_json(&json, resolve).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.to_json(), json);
    back.verify().unwrap();

    for &b in &trace.boundaries() {
        assert_eq!(flatten(&trace.states[b], &th.sig), trace.states[b]);
    }
}

#[test]
fn tampered_traces_are_rejected() {
    let th = Arc::new(theory());
    let init = parse_term("st(bag(item(1), item(2), item(3)), 0)", &th.sig).unwrap();
    let trace = build_trace(&th, &init, &["take", "take"]);
    let mut doc = trace.to_doc();
    doc.theory.rules.pop();
    assert!(Trace::from_doc(&doc, resolve).is_err());

    let mut bad = trace.clone();
    let last = bad.states.len() - 1;
    bad.states[last] = parse_term("st(none, 99)", &th.sig).unwrap();
    assert!(bad.verify().is_err());
}
