//! Direct semantics of formulas on ultimately periodic words, used as the
//! oracle for the automaton translation. Atoms `p` and `q` are bits 0 and 1.

use navslice::ltl::{Atom, Automaton, Formula, Letter};
use rand::Rng;

/// `prefix · cycle^ω` as one array of positions with a back edge.
pub struct Lasso {
    pub letters: Vec<Letter>,
    pub loop_at: usize,
}

impl Lasso {
    fn after(&self, i: usize) -> usize {
        if i + 1 < self.letters.len() {
            i + 1
        } else {
            self.loop_at
        }
    }
}

fn bit(a: &Atom) -> usize {
    match a {
        Atom::Pred { name, .. } if name == "p" => 0,
        Atom::Pred { name, .. } if name == "q" => 1,
        _ => panic!("oracle atoms are p and q"),
    }
}

fn eval(f: &Formula, w: &Lasso) -> Vec<bool> {
    let n = w.letters.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        Formula::Atom(a) => w.letters.iter().map(|l| l >> bit(a) & 1 == 1).collect(),
        Formula::Not(a) => eval(a, w).into_iter().map(|x| !x).collect(),
        Formula::And(a, b) => eval(a, w).into_iter().zip(eval(b, w)).map(|(x, y)| x && y).collect(),
        Formula::Or(a, b) => eval(a, w).into_iter().zip(eval(b, w)).map(|(x, y)| x || y).collect(),
        Formula::Implies(a, b) => eval(a, w).into_iter().zip(eval(b, w)).map(|(x, y)| !x || y).collect(),
        Formula::Next(a) => {
            let v = eval(a, w);
            (0..n).map(|i| v[w.after(i)]).collect()
        }
        Formula::Always(a) => {
            let v = eval(a, w);
            let mut r = vec![true; n];
            for _ in 0..=n {
                for i in (0..n).rev() {
                    r[i] = v[i] && r[w.after(i)];
                }
            }
            r
        }
        Formula::Until(a, b) => {
            let (va, vb) = (eval(a, w), eval(b, w));
            let mut r = vec![false; n];
            for _ in 0..=n {
                for i in (0..n).rev() {
                    r[i] = vb[i] || (va[i] && r[w.after(i)]);
                }
            }
            r
        }
    }
}

pub fn holds(f: &Formula, w: &Lasso) -> bool {
    eval(f, w)[0]
}

/// Acceptance by `aut`, whose atom order may differ from the oracle's.
pub fn accepts(aut: &Automaton, w: &Lasso) -> bool {
    let map = |l: Letter| {
        aut.atoms.iter().enumerate().fold(0, |acc, (i, a)| acc | ((l >> bit(a) & 1) << i))
    };
    let letters: Vec<Letter> = w.letters.iter().map(|&l| map(l)).collect();
    aut.accepts_lasso(&letters[..w.loop_at], &letters[w.loop_at..])
}

/// Every ultimately periodic word over `atoms` atoms that has a lasso
/// with at most `max_len` positions, each in its shortest form (the cycle
/// is not a power and the prefix does not end with the cycle's last letter).
pub fn all_lassos(atoms: usize, max_len: usize) -> Vec<Lasso> {
    let k = 1u64 << atoms;
    let mut out = vec![];
    for n in 1..=max_len {
        for code in 0..k.pow(n as u32) {
            let letters: Vec<Letter> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
            for loop_at in 0..n {
                let cycle = &letters[loop_at..];
                let c = cycle.len();
                let power = (1..c).any(|d| c % d == 0 && (d..c).all(|i| cycle[i] == cycle[i - d]));
                let rotatable = loop_at > 0 && letters[loop_at - 1] == letters[n - 1];
                if !power && !rotatable {
                    out.push(Lasso { letters: letters.clone(), loop_at });
                }
            }
        }
    }
    out
}

fn leaf(i: usize) -> Formula {
    match i {
        0 => Formula::atom("p", &[]),
        1 => Formula::atom("q", &[]),
        2 => Formula::True,
        _ => Formula::False,
    }
}

fn unary(op: usize, a: Formula) -> Formula {
    match op {
        0 => a.not(),
        1 => a.next(),
        2 => a.always(),
        _ => a.eventually(),
    }
}

fn binary(op: usize, a: Formula, b: Formula) -> Formula {
    match op {
        0 => a.and(b),
        1 => a.or(b),
        2 => a.implies(b),
        _ => a.until(b),
    }
}

/// All formulas over p, q, true, false with exactly `size` operator and
/// leaf nodes.
pub fn formulas_of_size(size: usize) -> Vec<Formula> {
    if size == 1 {
        return (0..4).map(leaf).collect();
    }
    let mut out = vec![];
    for a in formulas_of_size(size - 1) {
        for op in 0..4 {
            out.push(unary(op, a.clone()));
        }
    }
    for left in 1..size - 1 {
        let rs = formulas_of_size(size - 1 - left);
        for a in formulas_of_size(left) {
            for b in &rs {
                for op in 0..4 {
                    out.push(binary(op, a.clone(), b.clone()));
                }
            }
        }
    }
    out
}

pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        let n = if rng.gen_bool(0.85) { 2 } else { 4 };
        return leaf(rng.gen_range(0..n));
    }
    if rng.gen_bool(0.4) {
        unary(rng.gen_range(0..4), random_formula(rng, depth - 1))
    } else {
        binary(rng.gen_range(0..4), random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    }
}

/// Every formula with up to four nodes plus `random` deeper ones, all
/// with at most three temporal operators.
pub fn formula_corpus<R: Rng>(rng: &mut R, random: usize) -> Vec<Formula> {
    let mut out: Vec<Formula> = (1..=4).flat_map(formulas_of_size).filter(|f| f.temporal_count() <= 3).collect();
    let mut added = 0;
    while added < random {
        let f = random_formula(rng, 4);
        if f.temporal_count() <= 3 {
            out.push(f);
            added += 1;
        }
    }
    out
}

/// Mismatches between automaton acceptance and the semantics, checked in
/// parallel over `formulas`. Returns the first few for reporting.
pub fn translation_mismatches(formulas: &[Formula], words: &[Lasso]) -> Vec<String> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = formulas.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = formulas
            .chunks(chunk)
            .map(|fs| {
                s.spawn(move || {
                    let mut bad = vec![];
                    for f in fs {
                        let (pos, neg) = (Automaton::for_formula(f), Automaton::for_negation(f));
                        for w in words {
                            let sem = holds(f, w);
                            if accepts(&pos, w) != sem || accepts(&neg, w) == sem {
                                bad.push(format!("{f} on {:?} loop {}", w.letters, w.loop_at));
                                break;
                            }
                        }
                    }
                    bad
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).take(5).collect()
    })
}
