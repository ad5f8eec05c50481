//! Tableau translation of NNF formulas into state-labelled generalized
//! Büchi automata, degeneralized with a round counter.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::formula::{Atom, Formula, Nnf};

/// A valuation of up to 64 atoms; bit `i` is atom `i`.
pub type Letter = u64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuchiState {
    /// Atoms that must hold / must not hold in the letter read here.
    pub pos: Letter,
    pub neg: Letter,
    pub succ: Vec<usize>,
    pub accepting: bool,
}

impl BuchiState {
    pub fn admits(&self, a: Letter) -> bool {
        a & self.pos == self.pos && a & self.neg == 0
    }
}

/// A run reads the letter of position `k` in the state it occupies at `k`,
/// starting from one of `initial`.
#[derive(Clone, Debug)]
pub struct Automaton {
    pub atoms: Vec<Atom>,
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
}

const INIT: usize = usize::MAX;

struct Node {
    incoming: BTreeSet<usize>,
    new: Vec<Nnf>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

struct Tableau {
    done: Vec<Node>,
    index: HashMap<(BTreeSet<Nnf>, BTreeSet<Nnf>), usize>,
}

fn negation(f: &Nnf) -> Option<Nnf> {
    match f {
        Nnf::Lit(i, b) => Some(Nnf::Lit(*i, !b)),
        Nnf::True => Some(Nnf::False),
        Nnf::False => Some(Nnf::True),
        _ => None,
    }
}

impl Tableau {
    fn expand(&mut self, root: Node) {
        let mut work = vec![root];
        while let Some(mut n) = work.pop() {
            let Some(f) = n.new.pop() else {
                let key = (n.old.clone(), n.next.clone());
                if let Some(&i) = self.index.get(&key) {
                    self.done[i].incoming.extend(n.incoming);
                    continue;
                }
                let id = self.done.len();
                self.index.insert(key, id);
                let next = n.next.iter().cloned().collect();
                self.done.push(n);
                work.push(Node { incoming: BTreeSet::from([id]), new: next, old: BTreeSet::new(), next: BTreeSet::new() });
                continue;
            };
            if n.old.contains(&f) {
                work.push(n);
                continue;
            }
            match &f {
                Nnf::False => {}
                Nnf::True | Nnf::Lit(..) => {
                    if negation(&f).is_some_and(|g| n.old.contains(&g)) {
                        continue;
                    }
                    n.old.insert(f);
                    work.push(n);
                }
                Nnf::And(a, b) => {
                    for g in [a, b] {
                        if !n.old.contains(&**g) {
                            n.new.push((**g).clone());
                        }
                    }
                    n.old.insert(f);
                    work.push(n);
                }
                Nnf::Next(a) => {
                    n.next.insert((**a).clone());
                    n.old.insert(f);
                    work.push(n);
                }
                Nnf::Or(a, b) | Nnf::Until(a, b) | Nnf::Release(a, b) => {
                    // first branch: (new1, next1), second branch: new2
                    let (new1, next1, new2): (Vec<&Nnf>, Option<Nnf>, Vec<&Nnf>) = match &f {
                        Nnf::Or(..) => (vec![a], None, vec![b]),
                        Nnf::Until(..) => (vec![a], Some(f.clone()), vec![b]),
                        _ => (vec![b], Some(f.clone()), vec![a, b]),
                    };
                    let mut old = n.old.clone();
                    old.insert(f.clone());
                    let branch = |add: Vec<&Nnf>, nx: Option<Nnf>| {
                        let mut new = n.new.clone();
                        new.extend(add.into_iter().filter(|g| !old.contains(*g)).cloned());
                        let mut next = n.next.clone();
                        next.extend(nx);
                        Node { incoming: n.incoming.clone(), new, old: old.clone(), next }
                    };
                    let n1 = branch(new1, next1);
                    let n2 = branch(new2, None);
                    work.push(n2);
                    work.push(n1);
                }
            }
        }
    }
}

fn untils(f: &Nnf, out: &mut BTreeSet<Nnf>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::Next(a) => untils(a, out),
        Nnf::And(a, b) | Nnf::Or(a, b) | Nnf::Release(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Nnf::Until(a, b) => {
            out.insert(f.clone());
            untils(a, out);
            untils(b, out);
        }
    }
}

impl Automaton {
    /// Automaton accepting exactly the words satisfying `f` in NNF.
    pub fn from_nnf(f: &Nnf, atoms: Vec<Atom>) -> Automaton {
        let mut t = Tableau { done: vec![], index: HashMap::new() };
        t.expand(Node { incoming: BTreeSet::from([INIT]), new: vec![f.clone()], old: BTreeSet::new(), next: BTreeSet::new() });

        let mut us = BTreeSet::new();
        untils(f, &mut us);
        // acceptance set j: nodes fulfilling the j-th until or not owing it
        let fsets: Vec<Vec<bool>> = us
            .iter()
            .map(|u| {
                let Nnf::Until(_, b) = u else { unreachable!() };
                t.done.iter().map(|n| n.old.contains(&**b) || !n.old.contains(u)).collect()
            })
            .collect();
        let m = fsets.len();

        let mut succ: Vec<Vec<usize>> = vec![vec![]; t.done.len()];
        let mut init = vec![];
        for (j, n) in t.done.iter().enumerate() {
            for &i in &n.incoming {
                if i == INIT {
                    init.push(j);
                } else {
                    succ[i].push(j);
                }
            }
        }
        let label = |n: &Node| {
            let (mut pos, mut neg) = (0, 0);
            for g in &n.old {
                if let Nnf::Lit(i, b) = g {
                    if *b {
                        pos |= 1 << i;
                    } else {
                        neg |= 1 << i;
                    }
                }
            }
            (pos, neg)
        };

        // (node, round counter); accepting when the node closes a round
        let closes = |q: usize, k: usize| (k..m).all(|j| fsets[j][q]);
        let advance = |q: usize, k: usize| if closes(q, k) { 0 } else { (k..m).find(|&j| !fsets[j][q]).unwrap() };
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut states = vec![];
        let mut queue = VecDeque::new();
        let mut intern = |key: (usize, usize), states: &mut Vec<BuchiState>, queue: &mut VecDeque<(usize, usize)>| {
            *ids.entry(key).or_insert_with(|| {
                let (pos, neg) = label(&t.done[key.0]);
                states.push(BuchiState { pos, neg, succ: vec![], accepting: closes(key.0, key.1) });
                queue.push_back(key);
                states.len() - 1
            })
        };
        let initial: Vec<usize> = init.iter().map(|&q| intern((q, 0), &mut states, &mut queue)).collect();
        while let Some((q, k)) = queue.pop_front() {
            let me = intern((q, k), &mut states, &mut queue);
            let k2 = advance(q, k);
            let next: Vec<usize> = succ[q].iter().map(|&r| intern((r, k2), &mut states, &mut queue)).collect();
            states[me].succ = next;
        }
        Automaton { atoms, states, initial }
    }

    /// Automaton for the words violating `f`.
    pub fn for_negation(f: &Formula) -> Automaton {
        let atoms = f.atoms();
        assert!(atoms.len() <= 64, "at most 64 atoms");
        Automaton::from_nnf(&Nnf::of(f, &atoms, true), atoms)
    }

    /// Automaton for the words satisfying `f`.
    pub fn for_formula(f: &Formula) -> Automaton {
        let atoms = f.atoms();
        assert!(atoms.len() <= 64, "at most 64 atoms");
        Automaton::from_nnf(&Nnf::of(f, &atoms, false), atoms)
    }

    /// From this state every infinite word is accepted.
    pub fn is_universal(&self, q: usize) -> bool {
        let s = &self.states[q];
        s.accepting && s.pos == 0 && s.neg == 0 && s.succ.contains(&q)
    }

    pub fn is_empty(&self) -> bool {
        // no reachable accepting state on a cycle
        let n = self.states.len();
        let mut reach = vec![false; n];
        let mut stack = self.initial.clone();
        while let Some(q) = stack.pop() {
            if !std::mem::replace(&mut reach[q], true) {
                stack.extend(&self.states[q].succ);
            }
        }
        !(0..n).any(|q| reach[q] && self.states[q].accepting && self.reaches(&self.states[q].succ, q))
    }

    fn reaches(&self, from: &[usize], target: usize) -> bool {
        let mut seen = vec![false; self.states.len()];
        let mut stack = from.to_vec();
        while let Some(q) = stack.pop() {
            if q == target {
                return true;
            }
            if !std::mem::replace(&mut seen[q], true) {
                stack.extend(&self.states[q].succ);
            }
        }
        false
    }

    /// Acceptance of the ultimately periodic word `prefix · cycle^ω`.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        assert!(!cycle.is_empty());
        let len = prefix.len() + cycle.len();
        let nq = self.states.len();
        let letter = |k: usize| if k < prefix.len() { prefix[k] } else { cycle[k - prefix.len()] };
        // product node k * nq + q: the run is in q when reading position k
        let succ = |v: usize, out: &mut Vec<usize>| {
            let (q, k) = (v % nq, v / nq);
            if self.states[q].admits(letter(k)) {
                let k2 = if k + 1 < len { k + 1 } else { prefix.len() };
                out.extend(self.states[q].succ.iter().map(|&r| k2 * nq + r));
            }
        };
        let mut stamp = vec![0u32; nq * len];
        let mut stack: Vec<usize> = self.initial.clone();
        while let Some(v) = stack.pop() {
            if stamp[v] == 0 {
                stamp[v] = 1;
                succ(v, &mut stack);
            }
        }
        let reached: Vec<usize> = (prefix.len() * nq..len * nq).filter(|&v| stamp[v] == 1 && self.states[v % nq].accepting).collect();
        for (round, &v) in reached.iter().enumerate() {
            let mark = round as u32 + 2;
            succ(v, &mut stack);
            while let Some(w) = stack.pop() {
                if w == v {
                    return true;
                }
                if stamp[w] != mark {
                    stamp[w] = mark;
                    succ(w, &mut stack);
                }
            }
        }
        false
    }
}
