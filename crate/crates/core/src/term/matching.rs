//! Matching modulo associativity, commutativity and identity.
//!
//! Besides the substitution, every match carries a *view*: a permutation
//! record that re-nests the (canonical) subject so that the pattern matches
//! it syntactically. The rewrite engine materialises the view as an
//! explicit unflat step.

use std::collections::BTreeMap;
use std::fmt;

use super::{PermutationRecord, Position, Shape, Signature, Symbol, Term, TermError};

#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Substitution(BTreeMap<Symbol, Term>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: impl Into<Symbol>, t: Term) {
        self.0.insert(var.into(), t);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.0.iter()
    }

    /// Instantiates `t`; no normalisation.
    pub fn apply(&self, t: &Term) -> Term {
        if t.is_var() {
            return self.0.get(t.head().as_ref()).cloned().unwrap_or_else(|| t.clone());
        }
        if t.is_ground() {
            return t.clone();
        }
        t.with_args(t.args().iter().map(|a| self.apply(a)).collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} ↦ {v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Match {
    pub subst: Substitution,
    /// Re-nesting of the subject under which the pattern matches
    /// syntactically.
    pub view: PermutationRecord,
}

pub const DEFAULT_MATCH_CAP: usize = 256;

struct Matcher<'a> {
    sig: &'a Signature,
    /// Build views; without them shapes and positions are placeholders.
    views: bool,
}

type Partial = (Substitution, Vec<Shape>);

impl Matcher<'_> {
    fn m(&self, p: &Term, s: &Term, spos: &Position, sigma: &Substitution) -> Vec<(Substitution, Shape)> {
        if p.is_var() {
            let name = p.head().as_ref();
            return match sigma.get(name) {
                Some(b) if b == s => vec![(sigma.clone(), Shape::Keep(spos.clone()))],
                Some(_) => vec![],
                None if p.sort() == s.sort() => {
                    let mut sg = sigma.clone();
                    sg.insert(p.head().clone(), s.clone());
                    vec![(sg, Shape::Keep(spos.clone()))]
                }
                None => vec![],
            };
        }
        if p.is_ground() && !self.sig.is_ac(p.head()) && p.arity() == 0 {
            return if p == s { vec![(sigma.clone(), Shape::Keep(spos.clone()))] } else { vec![] };
        }
        let op = p.head();
        if self.sig.is_ac(op) {
            return self.m_ac(p, s, spos, sigma);
        }
        if s.is_var() || s.head() != op || s.arity() != p.arity() {
            return vec![];
        }
        let mut states: Vec<Partial> = vec![(sigma.clone(), Vec::new())];
        for (i, (pa, sa)) in p.args().iter().zip(s.args()).enumerate() {
            let cpos = self.child(spos, i);
            let mut next = Vec::new();
            for (sg, shapes) in states {
                for (sg2, sh) in self.m(pa, sa, &cpos, &sg) {
                    let mut sh2 = shapes.clone();
                    sh2.push(sh);
                    next.push((sg2, sh2));
                }
            }
            if next.is_empty() {
                return vec![];
            }
            states = next;
        }
        if !self.views {
            return states.into_iter().map(|(sg, _)| (sg, Shape::Keep(Position::root()))).collect();
        }
        states
            .into_iter()
            .map(|(sg, children)| {
                (
                    sg,
                    Shape::Node {
                        op: op.to_string(),
                        sort: p.sort().to_string(),
                        origins: vec![spos.clone()],
                        children,
                    },
                )
            })
            .collect()
    }

    fn m_ac(&self, p: &Term, s: &Term, spos: &Position, sigma: &Substitution) -> Vec<(Substitution, Shape)> {
        let op = p.head().clone();
        if s.sort() != p.sort() {
            return vec![];
        }
        let elems: Vec<(Term, Position)> = if !s.is_var() && *s.head() == op {
            s.args().iter().enumerate().map(|(i, a)| (a.clone(), self.child(spos, i))).collect()
        } else if self.is_identity(&op, s) {
            vec![]
        } else {
            vec![(s.clone(), spos.clone())]
        };
        let pargs = p.args();
        let nonvar: Vec<usize> = (0..pargs.len()).filter(|&i| !pargs[i].is_var()).collect();
        let vars: Vec<usize> = (0..pargs.len()).filter(|&i| pargs[i].is_var()).collect();

        let mut out = Vec::new();
        let mut slots: Vec<Option<Shape>> = vec![None; pargs.len()];
        self.assign_nonvars(&op, p, &elems, &nonvar, &vars, 0, &mut vec![false; elems.len()], sigma, &mut slots, spos, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn assign_nonvars(
        &self,
        op: &Symbol,
        p: &Term,
        elems: &[(Term, Position)],
        nonvar: &[usize],
        vars: &[usize],
        k: usize,
        used: &mut Vec<bool>,
        sigma: &Substitution,
        slots: &mut Vec<Option<Shape>>,
        spos: &Position,
        out: &mut Vec<(Substitution, Shape)>,
    ) {
        if k == nonvar.len() {
            self.assign_vars(op, p, elems, vars, 0, used, sigma, slots, spos, out);
            return;
        }
        let pa = &p.args()[nonvar[k]];
        let mut tried: Vec<&Term> = Vec::new();
        for j in 0..elems.len() {
            if used[j] {
                continue;
            }
            let (e, epos) = &elems[j];
            if !e.is_var() && e.head() != pa.head() && !self.sig.is_ac(pa.head()) {
                continue;
            }
            // equal subject arguments give the same matches
            if tried.contains(&e) {
                continue;
            }
            tried.push(e);
            for (sg, sh) in self.m(pa, e, epos, sigma) {
                used[j] = true;
                slots[nonvar[k]] = Some(sh);
                self.assign_nonvars(op, p, elems, nonvar, vars, k + 1, used, &sg, slots, spos, out);
                slots[nonvar[k]] = None;
                used[j] = false;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assign_vars(
        &self,
        op: &Symbol,
        p: &Term,
        elems: &[(Term, Position)],
        vars: &[usize],
        k: usize,
        used: &mut Vec<bool>,
        sigma: &Substitution,
        slots: &mut Vec<Option<Shape>>,
        spos: &Position,
        out: &mut Vec<(Substitution, Shape)>,
    ) {
        let has_identity = self.sig.identity_of(op).is_some();
        if k == vars.len() {
            if used.iter().all(|u| *u) {
                if !self.views {
                    out.push((sigma.clone(), Shape::Keep(Position::root())));
                    return;
                }
                let children = slots.iter().map(|s| s.clone().expect("slot filled")).collect();
                out.push((
                    sigma.clone(),
                    Shape::Node { op: op.to_string(), sort: p.sort().to_string(), origins: vec![spos.clone()], children },
                ));
            }
            return;
        }
        let pv = &p.args()[vars[k]];
        let name = pv.head().as_ref();
        if pv.sort() != p.sort() {
            return;
        }
        if let Some(bound) = sigma.get(name) {
            let want: Vec<Term> = if !bound.is_var() && bound.head() == op {
                bound.args().to_vec()
            } else if self.is_identity(op, bound) {
                vec![]
            } else {
                vec![bound.clone()]
            };
            let mut chosen = Vec::new();
            for w in &want {
                match (0..elems.len()).find(|&j| !used[j] && !chosen.contains(&j) && elems[j].0 == *w) {
                    Some(j) => chosen.push(j),
                    None => return,
                }
            }
            chosen.sort_unstable();
            for &j in &chosen {
                used[j] = true;
            }
            slots[vars[k]] = Some(self.binding_shape(op, p.sort(), elems, &chosen, spos));
            self.assign_vars(op, p, elems, vars, k + 1, used, sigma, slots, spos, out);
            slots[vars[k]] = None;
            for &j in &chosen {
                used[j] = false;
            }
            return;
        }
        let free: Vec<usize> = (0..elems.len()).filter(|&j| !used[j]).collect();
        let last_unbound = vars[k + 1..].iter().all(|&v| {
            let n = p.args()[v].head().as_ref();
            n != name && sigma.get(n).is_some()
        });
        let n = free.len();
        let masks: Vec<u64> = if last_unbound {
            vec![if n == 64 { u64::MAX } else { (1u64 << n) - 1 }]
        } else {
            (0..(1u64 << n)).collect()
        };
        for mask in masks {
            let chosen: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).map(|b| free[b]).collect();
            if chosen.is_empty() && !has_identity {
                continue;
            }
            let value = self.binding_term(op, p.sort(), elems, &chosen);
            let mut sg = sigma.clone();
            sg.insert(pv.head().clone(), value);
            for &j in &chosen {
                used[j] = true;
            }
            slots[vars[k]] = Some(self.binding_shape(op, p.sort(), elems, &chosen, spos));
            self.assign_vars(op, p, elems, vars, k + 1, used, &sg, slots, spos, out);
            slots[vars[k]] = None;
            for &j in &chosen {
                used[j] = false;
            }
        }
    }

    fn child(&self, spos: &Position, i: usize) -> Position {
        if self.views {
            spos.child(i as u32 + 1)
        } else {
            Position::root()
        }
    }

    fn is_identity(&self, op: &str, t: &Term) -> bool {
        !t.is_var() && t.arity() == 0 && self.sig.identity_of(op).is_some_and(|id| **t.head() == *id)
    }

    fn binding_term(&self, op: &Symbol, sort: &Symbol, elems: &[(Term, Position)], chosen: &[usize]) -> Term {
        match chosen {
            [] => {
                let id = self.sig.identity_of(op).expect("identity");
                Term::make_app(Symbol::from(id), sort.clone(), vec![], true)
            }
            [j] => elems[*j].0.clone(),
            _ => {
                let mut args: Vec<Term> = chosen.iter().map(|&j| elems[j].0.clone()).collect();
                args.sort();
                Term::make_app(op.clone(), sort.clone(), args, true)
            }
        }
    }

    fn binding_shape(&self, op: &Symbol, sort: &Symbol, elems: &[(Term, Position)], chosen: &[usize], spos: &Position) -> Shape {
        if !self.views {
            return Shape::Keep(Position::root());
        }
        match chosen {
            [] => Shape::Node {
                op: self.sig.identity_of(op).expect("identity").to_string(),
                sort: sort.to_string(),
                origins: vec![spos.clone()],
                children: vec![],
            },
            [j] => Shape::Keep(elems[*j].1.clone()),
            _ => {
                let mut idx = chosen.to_vec();
                idx.sort_by(|a, b| elems[*a].0.cmp(&elems[*b].0));
                Shape::Node {
                    op: op.to_string(),
                    sort: sort.to_string(),
                    origins: vec![spos.clone()],
                    children: idx.iter().map(|&j| Shape::Keep(elems[j].1.clone())).collect(),
                }
            }
        }
    }
}

/// All matches of `pattern` against `subject`, one per distinct
/// substitution (the first view found is kept), sorted by substitution.
/// More than `cap` distinct substitutions is an error.
pub fn match_with_views(pattern: &Term, subject: &Term, sig: &Signature, cap: usize) -> Result<Vec<Match>, TermError> {
    let raw = Matcher { sig, views: true }.m(pattern, subject, &Position::root(), &Substitution::new());
    let mut by_subst: BTreeMap<Substitution, Shape> = BTreeMap::new();
    for (sg, sh) in raw {
        by_subst.entry(sg).or_insert(sh);
        if by_subst.len() > cap {
            return Err(TermError::MatchCap(cap));
        }
    }
    Ok(by_subst
        .into_iter()
        .map(|(subst, shape)| Match { subst, view: PermutationRecord { shape }.simplified(subject) })
        .collect())
}

/// The complete set of matchers of `pattern` against ground `subject`
/// modulo the AC/identity attributes of `sig`.
pub fn match_modulo(pattern: &Term, subject: &Term, sig: &Signature) -> Vec<Substitution> {
    match match_capped(pattern, subject, sig, usize::MAX) {
        Ok(ms) => ms,
        Err(_) => unreachable!("uncapped"),
    }
}

/// Like [`match_with_views`] without the views.
pub fn match_capped(pattern: &Term, subject: &Term, sig: &Signature, cap: usize) -> Result<Vec<Substitution>, TermError> {
    let raw = Matcher { sig, views: false }.m(pattern, subject, &Position::root(), &Substitution::new());
    let mut out: Vec<Substitution> = raw.into_iter().map(|(sg, _)| sg).collect();
    out.sort();
    out.dedup();
    if out.len() > cap {
        return Err(TermError::MatchCap(cap));
    }
    Ok(out)
}

/// Plain syntactic matching (every operator free).
pub fn match_syntactic(pattern: &Term, subject: &Term) -> Option<Substitution> {
    fn go(p: &Term, s: &Term, sg: &mut Substitution) -> bool {
        if p.is_var() {
            let name = p.head().as_ref();
            return match sg.get(name) {
                Some(b) => b == s,
                None => {
                    if p.sort() != s.sort() {
                        return false;
                    }
                    sg.insert(p.head().clone(), s.clone());
                    true
                }
            };
        }
        if s.is_var() || p.head() != s.head() || p.arity() != s.arity() {
            return false;
        }
        p.args().iter().zip(s.args()).all(|(a, b)| go(a, b, sg))
    }
    let mut sg = Substitution::new();
    go(pattern, subject, &mut sg).then_some(sg)
}
