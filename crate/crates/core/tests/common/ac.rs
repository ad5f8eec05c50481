//! Brute-force oracles for AC matching and AC equivalence. They work on raw
//! binary terms and share no code with the library's flattener or matcher.

use std::collections::{BTreeSet, HashSet, VecDeque};

use navslice::term::{Signature, Substitution, Term};
use rand::Rng;

pub fn ac_signature() -> Signature {
    let mut sig = Signature::new();
    sig.ac_op("f", "S", Some("e")).unwrap();
    sig.ac_op("u", "S", None).unwrap();
    for c in ["a", "b", "c", "d"] {
        sig.op(c, &[], "S").unwrap();
    }
    sig.op("g", &["S"], "S").unwrap();
    sig.op("h", &["S", "S"], "S").unwrap();
    sig
}

fn c(name: &str) -> Term {
    Term::app_unchecked(name, "S", vec![])
}

fn app(op: &str, args: Vec<Term>) -> Term {
    Term::app_unchecked(op, "S", args)
}

/// A binary (unflattened) ground term.
pub fn random_raw<R: Rng>(rng: &mut R, depth: usize) -> Term {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return c(["a", "b", "c", "e"][rng.gen_range(0..4)]);
    }
    match rng.gen_range(0..5) {
        0 => app("g", vec![random_raw(rng, depth - 1)]),
        1 => app("h", vec![random_raw(rng, depth - 1), random_raw(rng, depth - 1)]),
        2 => app("u", vec![random_raw(rng, depth - 1), random_raw(rng, depth - 1)]),
        _ => app("f", vec![random_raw(rng, depth - 1), random_raw(rng, depth - 1)]),
    }
}

/// Randomly re-brackets and permutes every AC node (and drops or inserts
/// identities), giving an AC-equivalent raw term.
pub fn scramble<R: Rng>(t: &Term, rng: &mut R) -> Term {
    let op = t.head().to_string();
    if op == "f" || op == "u" {
        let mut leaves = Vec::new();
        collect(t, &op, &mut leaves);
        let mut leaves: Vec<Term> = leaves.iter().map(|l| scramble(l, rng)).collect();
        if op == "f" {
            leaves.retain(|l| l.head().as_ref() != "e" || rng.gen_bool(0.5));
            if rng.gen_bool(0.3) {
                leaves.push(c("e"));
            }
            if leaves.is_empty() {
                return c("e");
            }
        }
        for i in (1..leaves.len()).rev() {
            leaves.swap(i, rng.gen_range(0..=i));
        }
        while leaves.len() > 1 {
            let i = rng.gen_range(0..leaves.len() - 1);
            let l = leaves.remove(i);
            let r = leaves.remove(i);
            leaves.insert(i, app(&op, vec![l, r]));
        }
        return leaves.pop().unwrap();
    }
    if t.arity() == 0 {
        return t.clone();
    }
    app(&op, t.args().iter().map(|a| scramble(a, rng)).collect())
}

fn collect(t: &Term, op: &str, out: &mut Vec<Term>) {
    if t.head().as_ref() == op && t.arity() == 2 {
        collect(&t.args()[0], op, out);
        collect(&t.args()[1], op, out);
    } else {
        out.push(t.clone());
    }
}

/// One-step AC/identity moves anywhere in a binary term.
fn moves(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let op = t.head().to_string();
    if (op == "f" || op == "u") && t.arity() == 2 {
        let (x, y) = (&t.args()[0], &t.args()[1]);
        out.push(app(&op, vec![y.clone(), x.clone()]));
        if x.head().as_ref() == op && x.arity() == 2 {
            out.push(app(&op, vec![x.args()[0].clone(), app(&op, vec![x.args()[1].clone(), y.clone()])]));
        }
        if y.head().as_ref() == op && y.arity() == 2 {
            out.push(app(&op, vec![app(&op, vec![x.clone(), y.args()[0].clone()]), y.args()[1].clone()]));
        }
        if op == "f" {
            if y.head().as_ref() == "e" {
                out.push(x.clone());
            }
            if x.head().as_ref() == "e" {
                out.push(y.clone());
            }
        }
    }
    for (i, a) in t.args().iter().enumerate() {
        for m in moves(a) {
            let mut args = t.args().to_vec();
            args[i] = m;
            out.push(app(&op, args));
        }
    }
    out
}

fn closure(t: &Term) -> HashSet<String> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([t.clone()]);
    seen.insert(t.to_string());
    while let Some(x) = queue.pop_front() {
        for m in moves(&x) {
            if seen.insert(m.to_string()) {
                queue.push_back(m);
            }
        }
    }
    seen
}

/// Equivalence modulo AC of f and u and identity e of f, by exhaustive
/// search of both equivalence-class closures.
pub fn brute_ac_equivalent(a: &Term, b: &Term) -> bool {
    let ca = closure(a);
    closure(b).iter().any(|x| ca.contains(x))
}

fn merge(a: &Substitution, b: &Substitution) -> Option<Substitution> {
    let mut out = a.clone();
    for (k, v) in b.iter() {
        match out.get(k) {
            Some(w) if w != v => return None,
            Some(_) => {}
            None => out.insert(k.clone(), v.clone()),
        }
    }
    Some(out)
}

fn block_term(op: &str, mut block: Vec<Term>, sig: &Signature) -> Option<Term> {
    match block.len() {
        0 => sig.identity_of(op).map(c),
        1 => block.pop(),
        _ => {
            block.sort();
            Some(app(op, block))
        }
    }
}

/// All matchers of a canonical pattern against a canonical subject,
/// enumerating every assignment of AC arguments to pattern arguments.
pub fn brute_match(p: &Term, s: &Term, sig: &Signature) -> BTreeSet<Substitution> {
    let mut out = BTreeSet::new();
    if p.is_var() {
        let mut sg = Substitution::new();
        sg.insert(p.head().to_string(), s.clone());
        out.insert(sg);
        return out;
    }
    let op = p.head().to_string();
    if sig.is_ac(&op) {
        let elems: Vec<Term> = if s.head().as_ref() == op {
            s.args().to_vec()
        } else if sig.identity_of(&op) == Some(s.head().as_ref()) {
            vec![]
        } else {
            vec![s.clone()]
        };
        let k = p.arity();
        let total = k.pow(elems.len() as u32);
        for code in 0..total {
            let mut blocks: Vec<Vec<Term>> = vec![vec![]; k];
            let mut x = code;
            for e in &elems {
                blocks[x % k].push(e.clone());
                x /= k;
            }
            let mut partial: Vec<Substitution> = vec![Substitution::new()];
            for (pa, block) in p.args().iter().zip(blocks) {
                if !pa.is_var() && block.len() != 1 {
                    partial.clear();
                    break;
                }
                let Some(bt) = block_term(&op, block, sig) else {
                    partial.clear();
                    break;
                };
                let sub = brute_match(pa, &bt, sig);
                partial = partial.iter().flat_map(|x| sub.iter().filter_map(move |y| merge(x, y))).collect();
            }
            out.extend(partial);
        }
        return out;
    }
    if s.head() != p.head() || s.arity() != p.arity() {
        return out;
    }
    let mut partial: Vec<Substitution> = vec![Substitution::new()];
    for (pa, sa) in p.args().iter().zip(s.args()) {
        let sub = brute_match(pa, sa, sig);
        partial = partial.iter().flat_map(|x| sub.iter().filter_map(move |y| merge(x, y))).collect();
    }
    out.extend(partial);
    out
}

/// Canonical AC subject with at most `max_args` flattened arguments under f
/// or u.
pub fn random_subject<R: Rng>(rng: &mut R, max_args: usize) -> Term {
    let op = if rng.gen_bool(0.7) { "f" } else { "u" };
    let n = rng.gen_range(0..=max_args);
    let mut args: Vec<Term> = (0..n)
        .map(|_| match rng.gen_range(0..6) {
            0 => app("g", vec![c(["a", "b"][rng.gen_range(0..2)])]),
            1 => app("h", vec![c("a"), c(["a", "b"][rng.gen_range(0..2)])]),
            _ => c(["a", "b", "c"][rng.gen_range(0..3)]),
        })
        .collect();
    match args.len() {
        0 if op == "f" => c("e"),
        0 | 1 => args.pop().unwrap_or_else(|| c("a")),
        _ => {
            args.sort();
            app(op, args)
        }
    }
}

pub const PATTERNS: &[&str] = &[
    "f(X:S, Y:S)",
    "f(X:S, X:S)",
    "f(a, X:S)",
    "f(g(X:S), Y:S)",
    "f(g(X:S), Y:S, Z:S)",
    "f(h(a, X:S), g(X:S), Y:S)",
    "f(X:S, Y:S, Z:S)",
    "u(X:S, Y:S)",
    "u(a, X:S)",
    "u(g(X:S), X:S)",
    "h(X:S, f(X:S, Y:S))",
];
