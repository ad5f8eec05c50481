use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{Position, TermError};

pub type Symbol = Arc<str>;

#[derive(Debug)]
enum Kind {
    Var(Symbol),
    App(Symbol, Vec<Term>),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    sort: Symbol,
    size: usize,
    hash: u64,
    canonical: bool,
}

/// An immutable, shared, sorted term. Cloning is cheap.
///
/// Equality and hashing are structural (the sort is a function of the
/// operator, so it does not take part). The total order compares the
/// preorder sequence of `(tag, name, arity)` symbols lexicographically; it
/// is the linear order used to sort arguments of AC operators.
#[derive(Clone)]
pub struct Term(Arc<Node>);

impl Term {
    pub fn var(name: impl Into<Symbol>, sort: impl Into<Symbol>) -> Term {
        let name = name.into();
        let mut h = DefaultHasher::new();
        0u8.hash(&mut h);
        name.hash(&mut h);
        Term(Arc::new(Node {
            hash: h.finish(),
            kind: Kind::Var(name),
            sort: sort.into(),
            size: 1,
            canonical: false,
        }))
    }

    /// Builds an application without any sort check; see
    /// [`Signature::app`](super::Signature::app) for the checked route.
    pub fn app_unchecked(op: impl Into<Symbol>, sort: impl Into<Symbol>, args: Vec<Term>) -> Term {
        Self::make_app(op.into(), sort.into(), args, false)
    }

    pub(crate) fn make_app(op: Symbol, sort: Symbol, args: Vec<Term>, canonical: bool) -> Term {
        let mut h = DefaultHasher::new();
        1u8.hash(&mut h);
        op.hash(&mut h);
        args.len().hash(&mut h);
        let mut size = 1;
        for a in &args {
            a.0.hash.hash(&mut h);
            size += a.0.size;
        }
        Term(Arc::new(Node {
            hash: h.finish(),
            kind: Kind::App(op, args),
            sort,
            size,
            canonical,
        }))
    }

    pub(crate) fn mark_canonical(self) -> Term {
        if self.0.canonical {
            return self;
        }
        match &self.0.kind {
            Kind::Var(_) => self,
            Kind::App(op, args) => Self::make_app(op.clone(), self.0.sort.clone(), args.clone(), true),
        }
    }

    pub(crate) fn is_marked_canonical(&self) -> bool {
        self.0.canonical
    }

    pub fn is_var(&self) -> bool {
        matches!(self.0.kind, Kind::Var(_))
    }

    /// The operator name, or the variable name for variables.
    pub fn head(&self) -> &Symbol {
        match &self.0.kind {
            Kind::Var(n) | Kind::App(n, _) => n,
        }
    }

    pub fn op(&self) -> Option<&Symbol> {
        match &self.0.kind {
            Kind::App(op, _) => Some(op),
            Kind::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.0.kind {
            Kind::App(_, args) => args,
            Kind::Var(_) => &[],
        }
    }

    pub fn arity(&self) -> usize {
        self.args().len()
    }

    pub fn sort(&self) -> &Symbol {
        &self.0.sort
    }

    /// Number of operator and variable occurrences.
    pub fn size(&self) -> usize {
        self.0.size
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn is_ground(&self) -> bool {
        match &self.0.kind {
            Kind::Var(_) => false,
            Kind::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn with_args(&self, args: Vec<Term>) -> Term {
        match &self.0.kind {
            Kind::App(op, _) => Term::app_unchecked(op.clone(), self.0.sort.clone(), args),
            Kind::Var(_) => self.clone(),
        }
    }

    pub fn subterm_at(&self, p: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for &i in p.path() {
            let args = cur.args();
            if i == 0 || i as usize > args.len() {
                return Err(TermError::InvalidPosition(p.clone()));
            }
            cur = &args[i as usize - 1];
        }
        Ok(cur)
    }

    pub fn is_valid_position(&self, p: &Position) -> bool {
        self.subterm_at(p).is_ok()
    }

    /// Replaces the subterm at `p` without any normalisation.
    pub fn replace_at_raw(&self, p: &Position, s: Term) -> Result<Term, TermError> {
        fn go(t: &Term, path: &[u32], s: Term, full: &Position) -> Result<Term, TermError> {
            match path.split_first() {
                None => Ok(s),
                Some((&i, rest)) => {
                    let args = t.args();
                    if i == 0 || i as usize > args.len() {
                        return Err(TermError::InvalidPosition(full.clone()));
                    }
                    let mut new_args = args.to_vec();
                    new_args[i as usize - 1] = go(&args[i as usize - 1], rest, s, full)?;
                    Ok(t.with_args(new_args))
                }
            }
        }
        go(self, p.path(), s, p)
    }

    /// Every position of the term in preorder.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::with_capacity(self.size());
        self.collect_positions(Position::root(), &mut out);
        out
    }

    pub fn collect_positions(&self, at: Position, out: &mut Vec<Position>) {
        let args = self.args();
        out.push(at.clone());
        for (i, a) in args.iter().enumerate() {
            a.collect_positions(at.child(i as u32 + 1), out);
        }
    }

    /// Variables in preorder, with repetitions.
    pub fn vars(&self) -> Vec<(Symbol, Symbol)> {
        let mut out = Vec::new();
        fn go(t: &Term, out: &mut Vec<(Symbol, Symbol)>) {
            match &t.0.kind {
                Kind::Var(n) => out.push((n.clone(), t.0.sort.clone())),
                Kind::App(_, args) => args.iter().for_each(|a| go(a, out)),
            }
        }
        go(self, &mut out);
        out
    }

    /// Positions at which variable `name` occurs.
    pub fn var_positions(&self, name: &str) -> Vec<Position> {
        let mut out = Vec::new();
        fn go(t: &Term, name: &str, at: Position, out: &mut Vec<Position>) {
            match &t.0.kind {
                Kind::Var(n) if &**n == name => out.push(at),
                Kind::Var(_) => {}
                Kind::App(_, args) => {
                    for (i, a) in args.iter().enumerate() {
                        go(a, name, at.child(i as u32 + 1), out);
                    }
                }
            }
        }
        go(self, name, Position::root(), &mut out);
        out
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash || self.0.size != other.0.size {
            return false;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::App(f, xs), Kind::App(g, ys)) => f == g && xs == ys,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        match (&self.0.kind, &other.0.kind) {
            (Kind::Var(a), Kind::Var(b)) => a.cmp(b),
            (Kind::Var(_), Kind::App(..)) => Ordering::Less,
            (Kind::App(..), Kind::Var(_)) => Ordering::Greater,
            (Kind::App(f, xs), Kind::App(g, ys)) => f
                .cmp(g)
                .then(xs.len().cmp(&ys.len()))
                .then_with(|| {
                    for (x, y) in xs.iter().zip(ys) {
                        match x.cmp(y) {
                            Ordering::Equal => {}
                            o => return o,
                        }
                    }
                    Ordering::Equal
                }),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            Kind::Var(n) => write!(f, "{}:{}", n, self.0.sort),
            Kind::App(op, args) => {
                if op.len() >= 2 && op.starts_with('"') && op.ends_with('"') {
                    let inner = &op[1..op.len() - 1];
                    write!(f, "\"{}\"", inner.replace('\\', "\\\\").replace('"', "\\\""))?;
                } else {
                    f.write_str(op)?;
                }
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::app_unchecked(n, "S", vec![])
    }

    #[test]
    fn positions_are_preorder() {
        let t = Term::app_unchecked("f", "S", vec![Term::app_unchecked("g", "S", vec![c("a")]), c("b")]);
        let ps: Vec<String> = t.positions().iter().map(|p| p.to_string()).collect();
        assert_eq!(ps, vec!["Λ", "Λ.1", "Λ.1.1", "Λ.2"]);
        assert_eq!(t.size(), 4);
    }

    #[test]
    fn order_is_total_and_structural() {
        let a = c("a");
        let b = c("b");
        assert!(a < b);
        let fa = Term::app_unchecked("f", "S", vec![a.clone()]);
        assert!(fa > a);
        assert_eq!(fa.cmp(&Term::app_unchecked("f", "S", vec![c("a")])), Ordering::Equal);
        assert!(Term::var("X", "S") < a);
    }

    #[test]
    fn replace_and_subterm() {
        let t = Term::app_unchecked("f", "S", vec![c("a"), c("b")]);
        let p: Position = "Λ.2".parse().unwrap();
        assert_eq!(t.subterm_at(&p).unwrap(), &c("b"));
        let u = t.replace_at_raw(&p, c("z")).unwrap();
        assert_eq!(u.to_string(), "f(a, z)");
        assert!(t.subterm_at(&"Λ.3".parse().unwrap()).is_err());
    }
}
