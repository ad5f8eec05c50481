//! Canonical (flattened) forms for AC operators, and the permutation
//! records that expose flat/unflat rearrangements as explicit steps.

use serde::{Deserialize, Serialize};

use super::{Position, Signature, Symbol, Term, TermError};

/// How a target term is assembled from a source term. `Keep` copies the
/// source subterm at a position; `Node` builds an operator node whose
/// symbol stands for the source symbols listed in `origins` (empty when
/// the symbol has no source counterpart).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Keep(Position),
    Node {
        op: String,
        sort: String,
        origins: Vec<Position>,
        children: Vec<Shape>,
    },
}

/// Positions are relative to the subterm the record is applied at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PermutationRecord {
    pub shape: Shape,
}

impl PermutationRecord {
    pub fn identity() -> Self {
        PermutationRecord { shape: Shape::Keep(Position::root()) }
    }

    pub fn is_identity(&self) -> bool {
        matches!(&self.shape, Shape::Keep(p) if p.is_root())
    }

    /// Builds the target from `source`.
    pub fn apply(&self, source: &Term) -> Result<Term, TermError> {
        fn go(s: &Shape, src: &Term) -> Result<Term, TermError> {
            match s {
                Shape::Keep(p) => Ok(src.subterm_at(p)?.clone()),
                Shape::Node { op, sort, children, .. } => {
                    let args = children.iter().map(|c| go(c, src)).collect::<Result<Vec<_>, _>>()?;
                    Ok(Term::app_unchecked(op.as_str(), sort.as_str(), args))
                }
            }
        }
        go(&self.shape, source)
    }

    /// Source positions a target position was obtained from.
    pub fn backward(&self, target: &Position) -> Result<Vec<Position>, TermError> {
        let mut shape = &self.shape;
        let path = target.path();
        for (depth, &i) in path.iter().enumerate() {
            match shape {
                Shape::Keep(p) => {
                    return Ok(vec![p.join(&Position::new(path[depth..].to_vec()))]);
                }
                Shape::Node { children, .. } => {
                    shape = children
                        .get(i as usize - 1)
                        .ok_or_else(|| TermError::InvalidPosition(target.clone()))?;
                }
            }
        }
        Ok(match shape {
            Shape::Keep(p) => vec![p.clone()],
            Shape::Node { origins, .. } => origins.clone(),
        })
    }

    /// Target position of a source position, when the source symbol
    /// survives (first occurrence in preorder of the shape).
    pub fn forward(&self, source: &Position) -> Option<Position> {
        fn go(s: &Shape, at: Position, src: &Position) -> Option<Position> {
            match s {
                Shape::Keep(p) => src.strip_prefix(p).map(|rest| at.join(&rest)),
                Shape::Node { origins, children, .. } => {
                    if origins.iter().any(|o| o == src) {
                        return Some(at);
                    }
                    children
                        .iter()
                        .enumerate()
                        .find_map(|(i, c)| go(c, at.child(i as u32 + 1), src))
                }
            }
        }
        go(&self.shape, Position::root(), source)
    }

    /// Collapses nodes that rebuild a source node unchanged.
    pub fn simplified(self, source: &Term) -> Self {
        PermutationRecord { shape: simplify(self.shape, source) }
    }
}

fn simplify(shape: Shape, source: &Term) -> Shape {
    match shape {
        Shape::Keep(p) => Shape::Keep(p),
        Shape::Node { op, sort, origins, children } => {
            let children: Vec<Shape> = children.into_iter().map(|c| simplify(c, source)).collect();
            if let [o] = origins.as_slice() {
                if let Ok(st) = source.subterm_at(o) {
                    let same = st.op().is_some_and(|sop| **sop == *op)
                        && st.arity() == children.len()
                        && children
                            .iter()
                            .enumerate()
                            .all(|(i, c)| matches!(c, Shape::Keep(p) if *p == o.child(i as u32 + 1)));
                    if same {
                        return Shape::Keep(o.clone());
                    }
                }
            }
            Shape::Node { op, sort, origins, children }
        }
    }
}

fn identity_term(sig: &Signature, op: &str) -> Option<Term> {
    let id = sig.identity_of(op)?;
    let sort = sig.result_sort(id)?;
    Some(Term::make_app(Symbol::from(id), Symbol::from(sort), vec![], true))
}

fn is_identity_of(sig: &Signature, op: &str, t: &Term) -> bool {
    t.arity() == 0 && !t.is_var() && sig.identity_of(op).is_some_and(|id| **t.head() == *id)
}

struct Flattener<'a> {
    sig: &'a Signature,
    record: bool,
}

impl Flattener<'_> {
    fn go(&self, t: &Term, pos: &Position) -> (Term, Option<Shape>) {
        let keep = || if self.record { Some(Shape::Keep(pos.clone())) } else { None };
        if t.is_var() || t.is_marked_canonical() {
            return (t.clone(), keep());
        }
        let op = t.head().clone();
        if t.arity() == 0 {
            return (t.clone().mark_canonical(), keep());
        }
        let kids: Vec<(Term, Option<Shape>)> = t
            .args()
            .iter()
            .enumerate()
            .map(|(i, a)| self.go(a, &pos.child(i as u32 + 1)))
            .collect();
        if !self.sig.is_ac(&op) {
            let unchanged = kids.iter().zip(t.args()).all(|((k, _), a)| k.ptr_eq(a));
            let shape = if !self.record {
                None
            } else if kids
                .iter()
                .enumerate()
                .all(|(i, (_, s))| matches!(s, Some(Shape::Keep(p)) if *p == pos.child(i as u32 + 1)))
            {
                Some(Shape::Keep(pos.clone()))
            } else {
                Some(Shape::Node {
                    op: op.to_string(),
                    sort: t.sort().to_string(),
                    origins: vec![pos.clone()],
                    children: kids.iter().map(|(_, s)| s.clone().unwrap()).collect(),
                })
            };
            let term = if unchanged {
                t.clone().mark_canonical()
            } else {
                Term::make_app(op, t.sort().clone(), kids.into_iter().map(|(k, _)| k).collect(), true)
            };
            return (term, shape);
        }

        let mut origins = vec![pos.clone()];
        let mut items: Vec<(Term, Option<Shape>)> = Vec::with_capacity(kids.len());
        for (k, s) in kids {
            if !k.is_var() && *k.head() == op {
                match s {
                    Some(Shape::Node { origins: o, children, .. }) => {
                        origins.extend(o);
                        items.extend(k.args().iter().cloned().zip(children.into_iter().map(Some)));
                    }
                    Some(Shape::Keep(p)) => {
                        origins.push(p.clone());
                        items.extend(
                            k.args()
                                .iter()
                                .enumerate()
                                .map(|(i, a)| (a.clone(), Some(Shape::Keep(p.child(i as u32 + 1))))),
                        );
                    }
                    None => items.extend(k.args().iter().map(|a| (a.clone(), None))),
                }
            } else if is_identity_of(self.sig, &op, &k) {
                continue;
            } else {
                items.push((k, s));
            }
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        match items.len() {
            0 => {
                let id = identity_term(self.sig, &op).expect("AC node without arguments or identity");
                let shape = self.record.then(|| Shape::Node {
                    op: id.head().to_string(),
                    sort: id.sort().to_string(),
                    origins,
                    children: vec![],
                });
                (id, shape)
            }
            1 => items.pop().unwrap(),
            n => {
                let in_place = n == t.arity()
                    && items
                        .iter()
                        .enumerate()
                        .all(|(i, (k, _))| k.ptr_eq(&t.args()[i]) || k == &t.args()[i]);
                let shape = if !self.record {
                    None
                } else if origins.len() == 1
                    && n == t.arity()
                    && items
                        .iter()
                        .enumerate()
                        .all(|(i, (_, s))| matches!(s, Some(Shape::Keep(p)) if *p == pos.child(i as u32 + 1)))
                {
                    Some(Shape::Keep(pos.clone()))
                } else {
                    Some(Shape::Node {
                        op: op.to_string(),
                        sort: t.sort().to_string(),
                        origins,
                        children: items.iter().map(|(_, s)| s.clone().unwrap()).collect(),
                    })
                };
                let term = if in_place {
                    t.clone().mark_canonical()
                } else {
                    Term::make_app(op, t.sort().clone(), items.into_iter().map(|(k, _)| k).collect(), true)
                };
                (term, shape)
            }
        }
    }
}

/// Canonical form: identities absorbed, nested AC applications merged into
/// one variadic node, arguments sorted. Idempotent.
pub fn flatten(t: &Term, sig: &Signature) -> Term {
    Flattener { sig, record: false }.go(t, &Position::root()).0
}

/// [`flatten`] plus the record mapping target positions back to `t`.
pub fn flatten_recorded(t: &Term, sig: &Signature) -> (Term, PermutationRecord) {
    let (term, shape) = Flattener { sig, record: true }.go(t, &Position::root());
    (term, PermutationRecord { shape: shape.unwrap() })
}

pub fn ac_equal(a: &Term, b: &Term, sig: &Signature) -> bool {
    flatten(a, sig) == flatten(b, sig)
}

/// Re-nests the top AC node of canonical `t` following `template` (a term
/// AC-equal to `t`), or as a left comb when no template is given.
pub fn unflatten(t: &Term, template: Option<&Term>, sig: &Signature) -> Result<(Term, PermutationRecord), TermError> {
    let Some(op) = t.op().filter(|op| sig.is_ac(op)).cloned() else {
        return Ok((t.clone(), PermutationRecord::identity()));
    };
    let sort = t.sort().to_string();
    let shape = match template {
        None => {
            let mut acc = Shape::Keep(Position::new(vec![1]));
            for i in 2..=t.arity() as u32 {
                acc = Shape::Node {
                    op: op.to_string(),
                    sort: sort.clone(),
                    origins: vec![Position::root()],
                    children: vec![acc, Shape::Keep(Position::new(vec![i]))],
                };
            }
            acc
        }
        Some(tpl) => {
            if flatten(tpl, sig) != *t {
                return Err(TermError::ShapeMismatch(tpl.to_string(), t.to_string()));
            }
            let mut used = vec![false; t.arity()];
            fn go(
                tpl: &Term,
                op: &Symbol,
                src: &Term,
                used: &mut [bool],
                sig: &Signature,
            ) -> Result<Shape, TermError> {
                if tpl.op() == Some(op) {
                    let children =
                        tpl.args().iter().map(|a| go(a, op, src, used, sig)).collect::<Result<Vec<_>, _>>()?;
                    return Ok(Shape::Node {
                        op: op.to_string(),
                        sort: tpl.sort().to_string(),
                        origins: vec![Position::root()],
                        children,
                    });
                }
                let leaf = flatten(tpl, sig);
                let i = src
                    .args()
                    .iter()
                    .enumerate()
                    .position(|(i, a)| !used[i] && *a == leaf)
                    .ok_or_else(|| TermError::ShapeMismatch(tpl.to_string(), src.to_string()))?;
                used[i] = true;
                Ok(Shape::Keep(Position::new(vec![i as u32 + 1])))
            }
            go(tpl, &op, t, &mut used, sig)?
        }
    };
    let rec = PermutationRecord { shape }.simplified(t);
    let out = rec.apply(t)?;
    Ok((out, rec))
}

/// Replaces the subterm at `p` and re-canonicalises.
pub fn replace_at(t: &Term, p: &Position, s: Term, sig: &Signature) -> Result<Term, TermError> {
    let old = t.subterm_at(p)?;
    if old.sort() != s.sort() {
        return Err(TermError::SortClash {
            op: format!("replacement at {p}"),
            index: 0,
            expected: old.sort().to_string(),
            found: s.sort().to_string(),
        });
    }
    Ok(flatten(&t.replace_at_raw(p, s)?, sig))
}
