//! Product of the reachable state graph with the automaton of the negated
//! property, searched by nested DFS. Deadlocked states stutter.

use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::buchi::{Automaton, Letter};
use super::formula::{Atom, Formula};
use super::LtlError;
use crate::rewrite::{Theory, Trace};
use crate::term::Term;

/// Truth of state predicates, evaluated on one state at a time.
pub trait StatePredicates {
    fn has_predicate(&self, name: &str, arity: usize) -> bool;
    fn eval(&self, name: &str, args: &[String], state: &Term) -> Result<bool, String>;
}

impl StatePredicates for crate::webapp::WebModel {
    fn has_predicate(&self, name: &str, arity: usize) -> bool {
        crate::webapp::WebModel::has_predicate(self, name, arity)
    }

    fn eval(&self, name: &str, args: &[String], state: &Term) -> Result<bool, String> {
        self.eval_predicate(name, args, state).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_states: usize,
    pub max_depth: usize,
    #[serde(with = "secs")]
    pub time_limit: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_states: 2_000_000, max_depth: 1_000_000, time_limit: Duration::from_secs(600) }
    }
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Fulfilled,
    /// `trace.states[lasso_start]` equals the final state, or `lasso_start`
    /// is the final index when any continuation violates the property.
    Refuted { trace: Trace, lasso_start: usize },
    Exhausted { reason: String },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::Fulfilled => "fulfilled",
            Verdict::Refuted { .. } => "refuted",
            Verdict::Exhausted { .. } => "exhausted",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStats {
    pub states: usize,
    pub product_nodes: usize,
    pub max_depth: usize,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub stats: CheckStats,
}

const STUTTER: u32 = u32::MAX;

enum Halt {
    Budget(String),
    Err(LtlError),
}

impl From<LtlError> for Halt {
    fn from(e: LtlError) -> Self {
        Halt::Err(e)
    }
}

type Node = u64;
type Frame = (Node, Vec<Node>, usize);

#[derive(Default)]
struct Tarjan {
    index: HashMap<Node, (usize, usize)>,
    comp_stack: Vec<Node>,
    on_comp: HashSet<Node>,
    counter: usize,
}

fn node(s: u32, q: usize) -> Node {
    (s as u64) << 32 | q as u64
}

fn split(n: Node) -> (u32, usize) {
    ((n >> 32) as u32, (n & 0xffff_ffff) as usize)
}

enum Found {
    /// Every continuation from this node is accepted.
    Dead(Node),
    Cycle { seed: Node, entry: Node },
}

struct Search<'a> {
    theory: &'a Theory,
    preds: &'a dyn StatePredicates,
    aut: Automaton,
    pred_atoms: Vec<(usize, String, Vec<String>)>,
    rule_bits: HashMap<String, Letter>,
    rule_mask: Letter,
    budget: SearchBudget,
    start: Instant,
    states: Vec<Term>,
    ids: HashMap<Term, u32>,
    masks: Vec<Letter>,
    edges: Vec<Option<Rc<[(u32, u32)]>>>,
    labels: Vec<String>,
    label_ids: HashMap<String, u32>,
    max_depth: usize,
    /// Product nodes entered by the blue search.
    visited: usize,
}

impl<'a> Search<'a> {
    fn intern(&mut self, t: Term) -> Result<u32, Halt> {
        if let Some(&i) = self.ids.get(&t) {
            return Ok(i);
        }
        if self.states.len() >= self.budget.max_states {
            return Err(Halt::Budget(format!("more than {} states", self.budget.max_states)));
        }
        let mut mask = 0;
        for (bit, name, args) in &self.pred_atoms {
            if self.preds.eval(name, args, &t).map_err(LtlError::Predicate)? {
                mask |= 1 << bit;
            }
        }
        let i = self.states.len() as u32;
        self.ids.insert(t.clone(), i);
        self.states.push(t);
        self.masks.push(mask);
        self.edges.push(None);
        Ok(i)
    }

    fn sys_edges(&mut self, s: u32) -> Result<Rc<[(u32, u32)]>, Halt> {
        if let Some(e) = &self.edges[s as usize] {
            return Ok(e.clone());
        }
        if self.start.elapsed() > self.budget.time_limit {
            return Err(Halt::Budget(format!("time limit of {:?} reached", self.budget.time_limit)));
        }
        let succ = self.theory.successors(&self.states[s as usize]).map_err(LtlError::from)?;
        let mut out = Vec::with_capacity(succ.len());
        for (label, t) in succ {
            let next = self.labels.len() as u32;
            let l = *self.label_ids.entry(label.clone()).or_insert(next);
            if l == next {
                self.labels.push(label);
            }
            out.push((l, self.intern(t)?));
        }
        if out.is_empty() {
            out.push((STUTTER, s));
        }
        let e: Rc<[(u32, u32)]> = out.into();
        self.edges[s as usize] = Some(e.clone());
        Ok(e)
    }

    fn letter(&self, s: u32, label: u32) -> Letter {
        let rule = if label == STUTTER { 0 } else { self.rule_bits.get(&self.labels[label as usize]).copied().unwrap_or(0) };
        self.masks[s as usize] | rule
    }

    fn succ(&mut self, n: Node) -> Result<Vec<Node>, Halt> {
        let (s, q) = split(n);
        let mut out = vec![];
        for &(l, t) in self.sys_edges(s)?.iter() {
            if self.aut.states[q].admits(self.letter(s, l)) {
                out.extend(self.aut.states[q].succ.iter().map(|&r| node(t, r)));
            }
        }
        Ok(out)
    }

    /// From here every continuation is accepted, whatever the next step.
    fn dead_end(&self, n: Node) -> bool {
        let (s, q) = split(n);
        let st = &self.aut.states[q];
        self.aut.is_universal(q)
            || ((st.pos | st.neg) & self.rule_mask == 0
                && st.admits(self.masks[s as usize])
                && st.succ.iter().any(|&r| self.aut.is_universal(r)))
    }

    fn initial_nodes(&mut self, s0: &Term) -> Result<Vec<Node>, Halt> {
        let s = self.intern(s0.clone())?;
        Ok(self.aut.initial.clone().into_iter().map(|q| node(s, q)).collect())
    }

    fn enter(
        &mut self,
        n: Node,
        stack: &mut Vec<Frame>,
        blue: &mut HashSet<Node>,
        on_stack: &mut HashSet<Node>,
        truncated: &mut bool,
    ) -> Result<Option<Found>, Halt> {
        blue.insert(n);
        self.visited += 1;
        on_stack.insert(n);
        if self.dead_end(n) {
            return Ok(Some(Found::Dead(n)));
        }
        let succ = if stack.len() >= self.budget.max_depth {
            *truncated = true;
            vec![]
        } else {
            self.succ(n)?
        };
        stack.push((n, succ, 0));
        self.max_depth = self.max_depth.max(stack.len());
        Ok(None)
    }

    fn ndfs(&mut self, init: &[Node]) -> Result<(Option<Found>, bool), Halt> {
        let mut blue: HashSet<Node> = HashSet::new();
        let mut red: HashSet<Node> = HashSet::new();
        let mut on_stack: HashSet<Node> = HashSet::new();
        let mut truncated = false;
        for &root in init {
            if blue.contains(&root) {
                continue;
            }
            let mut stack: Vec<Frame> = vec![];
            if let Some(f) = self.enter(root, &mut stack, &mut blue, &mut on_stack, &mut truncated)? {
                return Ok((Some(f), truncated));
            }
            while let Some(top) = stack.last_mut() {
                if top.2 < top.1.len() {
                    let n = top.1[top.2];
                    top.2 += 1;
                    if !blue.contains(&n) {
                        if let Some(f) = self.enter(n, &mut stack, &mut blue, &mut on_stack, &mut truncated)? {
                            return Ok((Some(f), truncated));
                        }
                    }
                    continue;
                }
                let (seed, _, _) = stack.pop().unwrap();
                if self.aut.states[split(seed).1].accepting {
                    if let Some(entry) = self.red(seed, &mut red, &on_stack)? {
                        return Ok((Some(Found::Cycle { seed, entry }), truncated));
                    }
                }
                on_stack.remove(&seed);
            }
        }
        Ok((None, truncated))
    }

    /// Looks for a path from `seed` back into the blue stack (which holds
    /// `seed` itself).
    fn red(&mut self, seed: Node, red: &mut HashSet<Node>, on_stack: &HashSet<Node>) -> Result<Option<Node>, Halt> {
        let mut work = self.succ(seed)?;
        while let Some(n) = work.pop() {
            if on_stack.contains(&n) {
                return Ok(Some(n));
            }
            if red.insert(n) {
                work.extend(self.succ(n)?.into_iter().rev());
            }
        }
        Ok(None)
    }

    /// Shortest path `from ... to`; with `nonempty` it has at least one edge.
    fn path(&mut self, from: &[Node], to: Node, nonempty: bool) -> Result<Vec<Node>, Halt> {
        let mut parent: HashMap<Node, Node> = HashMap::new();
        let mut queue = VecDeque::new();
        if !nonempty {
            if let Some(&f) = from.iter().find(|&&f| f == to) {
                return Ok(vec![f]);
            }
        }
        let mut seen: HashSet<Node> = HashSet::new();
        for &f in from {
            if seen.insert(f) {
                queue.push_back(f);
            }
        }
        while let Some(n) = queue.pop_front() {
            for m in self.succ(n)? {
                if m == to {
                    let mut out = vec![m, n];
                    let mut cur = n;
                    while let Some(&p) = parent.get(&cur) {
                        out.push(p);
                        cur = p;
                    }
                    out.reverse();
                    return Ok(out);
                }
                if seen.insert(m) {
                    parent.insert(m, n);
                    queue.push_back(m);
                }
            }
        }
        Err(Halt::Err(LtlError::Internal("counterexample path lost".into())))
    }

    /// Rule label of a product edge.
    fn edge_label(&mut self, a: Node, b: Node) -> Result<u32, Halt> {
        let ((s, q), (t, r)) = (split(a), split(b));
        for &(l, u) in self.sys_edges(s)?.iter() {
            if u == t && self.aut.states[q].admits(self.letter(s, l)) && self.aut.states[q].succ.contains(&r) {
                return Ok(l);
            }
        }
        Err(Halt::Err(LtlError::Internal("no edge between consecutive nodes".into())))
    }

    fn open(&mut self, n: Node, call: &mut Vec<Frame>, t: &mut Tarjan) -> Result<bool, Halt> {
        t.index.insert(n, (t.counter, t.counter));
        t.counter += 1;
        t.comp_stack.push(n);
        t.on_comp.insert(n);
        call.push((n, self.succ(n)?, 0));
        Ok(self.dead_end(n))
    }

    /// Second emptiness check over the whole product: an accepting node in
    /// a cycle (strongly connected component with an edge) or a dead end.
    fn has_accepting_cycle(&mut self, init: &[Node]) -> Result<bool, Halt> {
        let mut t = Tarjan::default();
        for &root in init {
            if t.index.contains_key(&root) {
                continue;
            }
            let mut call: Vec<Frame> = vec![];
            if self.open(root, &mut call, &mut t)? {
                return Ok(true);
            }
            while let Some(top) = call.last_mut() {
                let v = top.0;
                if top.2 < top.1.len() {
                    let w = top.1[top.2];
                    top.2 += 1;
                    match t.index.get(&w) {
                        None => {
                            if self.open(w, &mut call, &mut t)? {
                                return Ok(true);
                            }
                        }
                        Some(&(wi, _)) if t.on_comp.contains(&w) => {
                            let e = t.index.get_mut(&v).unwrap();
                            e.1 = e.1.min(wi);
                        }
                        _ => {}
                    }
                    continue;
                }
                let (_, succ, _) = call.pop().unwrap();
                let (vi, vl) = t.index[&v];
                if let Some((u, _, _)) = call.last() {
                    let e = t.index.get_mut(u).unwrap();
                    e.1 = e.1.min(vl);
                }
                if vi == vl {
                    let mut comp = vec![];
                    loop {
                        let w = t.comp_stack.pop().unwrap();
                        t.on_comp.remove(&w);
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let cyclic = comp.len() > 1 || succ.contains(&v);
                    if cyclic && comp.iter().any(|&w| self.aut.states[split(w).1].accepting) {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}

fn halt(h: Halt, stats: CheckStats) -> Result<CheckResult, LtlError> {
    match h {
        Halt::Budget(reason) => Ok(CheckResult { verdict: Verdict::Exhausted { reason }, stats }),
        Halt::Err(e) => Err(e),
    }
}

/// Checks `f` on all paths from `initial`. A refutation comes with a full
/// expanded trace that has been replayed and re-accepted by the automaton.
pub fn check(
    theory: &Arc<Theory>,
    initial: &Term,
    preds: &dyn StatePredicates,
    f: &Formula,
    budget: &SearchBudget,
) -> Result<CheckResult, LtlError> {
    let aut = Automaton::for_negation(f);
    let mut pred_atoms = vec![];
    let mut rule_bits = HashMap::new();
    for (i, a) in aut.atoms.iter().enumerate() {
        match a {
            Atom::Pred { name, args } => {
                if !preds.has_predicate(name, args.len()) {
                    return Err(LtlError::UnknownPredicate(a.to_string()));
                }
                pred_atoms.push((i, name.clone(), args.clone()));
            }
            Atom::Rule(l) => {
                if theory.rule(l).is_none() {
                    return Err(LtlError::UnknownPredicate(a.to_string()));
                }
                rule_bits.insert(l.clone(), 1 << i);
            }
        }
    }
    let rule_mask = rule_bits.values().fold(0, |m, b| m | b);
    let mut search = Search {
        theory,
        preds,
        aut,
        pred_atoms,
        rule_bits,
        rule_mask,
        budget: *budget,
        start: Instant::now(),
        states: vec![],
        ids: HashMap::new(),
        masks: vec![],
        edges: vec![],
        labels: vec![],
        label_ids: HashMap::new(),
        max_depth: 0,
        visited: 0,
    };
    let stats = |s: &Search| CheckStats {
        states: s.states.len(),
        product_nodes: s.visited,
        max_depth: s.max_depth,
        elapsed_ms: s.start.elapsed().as_millis() as u64,
    };

    let init = match search.initial_nodes(initial) {
        Ok(i) => i,
        Err(h) => return halt(h, stats(&search)),
    };
    let (found, truncated) = match search.ndfs(&init) {
        Ok(r) => r,
        Err(h) => return halt(h, stats(&search)),
    };
    let Some(found) = found else {
        if truncated {
            let reason = format!("depth bound {} reached", budget.max_depth);
            return Ok(CheckResult { verdict: Verdict::Exhausted { reason }, stats: stats(&search) });
        }
        match search.has_accepting_cycle(&init) {
            Ok(false) => {}
            Ok(true) => return Err(LtlError::Internal("emptiness checks disagree".into())),
            Err(h) => return halt(h, stats(&search)),
        }
        return Ok(CheckResult { verdict: Verdict::Fulfilled, stats: stats(&search) });
    };
    let lasso = match lasso_nodes(&mut search, &init, found) {
        Ok(l) => l,
        Err(h) => return halt(h, stats(&search)),
    };
    let (trace, lasso_start) = build_trace(&mut search, theory, f, lasso)?;
    Ok(CheckResult { verdict: Verdict::Refuted { trace, lasso_start }, stats: stats(&search) })
}

/// Product nodes of the counterexample and the index the last one loops
/// back to (`len - 1` for dead ends).
fn lasso_nodes(search: &mut Search, init: &[Node], found: Found) -> Result<(Vec<Node>, usize), Halt> {
    match found {
        Found::Dead(n) => {
            let p = search.path(init, n, false)?;
            let end = p.len() - 1;
            Ok((p, end))
        }
        Found::Cycle { seed, entry } => {
            let mut p = search.path(init, entry, false)?;
            let start = p.len() - 1;
            let (s, _) = split(entry);
            if search.sys_edges(s)?.iter().any(|&(l, _)| l == STUTTER) {
                return Ok((p, start));
            }
            let to_seed = search.path(&[entry], seed, false)?;
            let back = search.path(&[seed], entry, true)?;
            p.extend(&to_seed[1..]);
            p.extend(&back[1..]);
            Ok((p, start))
        }
    }
}

fn build_trace(
    search: &mut Search,
    theory: &Arc<Theory>,
    f: &Formula,
    (nodes, loop_at): (Vec<Node>, usize),
) -> Result<(Trace, usize), LtlError> {
    let sys: Vec<u32> = nodes.iter().map(|&n| split(n).0).collect();
    let mut labels = vec![];
    for w in nodes.windows(2) {
        labels.push(match search.edge_label(w[0], w[1]) {
            Ok(l) => l,
            Err(Halt::Err(e)) => return Err(e),
            Err(Halt::Budget(r)) => return Err(LtlError::Internal(r)),
        });
    }
    let mut trace = Trace::new(theory.clone(), search.states[sys[0] as usize].clone());
    let mut lasso_start = if loop_at == 0 { Some(0) } else { None };
    for (k, &l) in labels.iter().enumerate() {
        let (from, to) = (&search.states[sys[k] as usize], &search.states[sys[k + 1] as usize]);
        let label = &search.labels[l as usize];
        let t = theory
            .transitions(from)?
            .into_iter()
            .find(|t| &t.label == label && &t.target == to)
            .ok_or_else(|| LtlError::Internal(format!("step {k} ({label}) not reproducible")))?;
        for (st, state) in t.steps.into_iter().zip(t.states) {
            trace.push(st, state);
        }
        if k + 1 == loop_at {
            lasso_start = Some(trace.states.len() - 1);
        }
    }
    let lasso_start = lasso_start.expect("loop index within the path");
    trace.property = Some(f.to_string());
    trace.lasso_start = Some(lasso_start);

    // every counterexample is replayed and re-read by the automaton
    trace.verify()?;
    let letters: Vec<Letter> = labels.iter().enumerate().map(|(k, &l)| search.letter(sys[k], l)).collect();
    let accepted = if loop_at == sys.len() - 1 {
        search.aut.accepts_lasso(&letters, &[search.masks[*sys.last().unwrap() as usize]])
    } else {
        search.aut.accepts_lasso(&letters[..loop_at], &letters[loop_at..])
    };
    if !accepted {
        return Err(LtlError::Internal("counterexample rejected by the property automaton".into()));
    }
    Ok((trace, lasso_start))
}
