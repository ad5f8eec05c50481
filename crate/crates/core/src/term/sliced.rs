use std::collections::BTreeSet;

use super::{Position, Signature, Symbol, Term};

/// A term with some subterms replaced by holes. Stored as the original term
/// plus the ancestor-closed set of kept positions; every maximal
/// non-kept subterm is a hole of that subterm's sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlicedTerm {
    term: Term,
    kept: BTreeSet<Position>,
}

impl SlicedTerm {
    /// Keeps `positions` and their ancestors. Positions not in `term` are
    /// dropped.
    pub fn new(term: Term, positions: impl IntoIterator<Item = Position>) -> Self {
        let mut kept = BTreeSet::new();
        for p in positions {
            if !term.is_valid_position(&p) || kept.contains(&p) {
                continue;
            }
            for a in p.ancestors() {
                kept.insert(a);
            }
            kept.insert(p);
        }
        SlicedTerm { term, kept }
    }

    pub fn full(term: Term) -> Self {
        let kept = term.positions().into_iter().collect();
        SlicedTerm { term, kept }
    }

    pub fn hole(term: Term) -> Self {
        SlicedTerm { term, kept: BTreeSet::new() }
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn kept(&self) -> &BTreeSet<Position> {
        &self.kept
    }

    pub fn is_kept(&self, p: &Position) -> bool {
        self.kept.contains(p)
    }

    /// Kept operator occurrences.
    pub fn kept_symbols(&self) -> usize {
        self.kept.len()
    }

    /// Maximal holes with their sorts, in preorder.
    pub fn holes(&self) -> Vec<(Position, Symbol)> {
        let mut out = Vec::new();
        self.walk_holes(&self.term, Position::root(), &mut out);
        out
    }

    fn walk_holes(&self, t: &Term, at: Position, out: &mut Vec<(Position, Symbol)>) {
        if !self.kept.contains(&at) {
            out.push((at, t.sort().clone()));
            return;
        }
        for (i, a) in t.args().iter().enumerate() {
            self.walk_holes(a, at.child(i as u32 + 1), out);
        }
    }

    /// Size of the sliced term, counting each hole as one symbol.
    pub fn symbol_count(&self) -> usize {
        self.kept.len() + self.holes().len()
    }

    /// Renders holes as `•`. With a signature, runs of holes directly under
    /// an AC operator are shown as one.
    pub fn render(&self, sig: Option<&Signature>) -> String {
        self.render_with(sig, '•')
    }

    pub fn render_with(&self, sig: Option<&Signature>, hole: char) -> String {
        let mut s = String::new();
        self.render_into(&self.term, &Position::root(), sig, hole, &mut s);
        s
    }

    /// The same slice with `p` and everything below it turned into a hole.
    pub fn without(&self, p: &Position) -> SlicedTerm {
        let kept = self.kept.iter().filter(|k| !p.is_prefix_of(k)).cloned().collect();
        SlicedTerm { term: self.term.clone(), kept }
    }

    fn render_into(&self, t: &Term, at: &Position, sig: Option<&Signature>, mark: char, out: &mut String) {
        if !self.kept.contains(at) {
            out.push(mark);
            return;
        }
        if t.is_var() {
            out.push_str(&t.to_string());
            return;
        }
        let head = Term::app_unchecked(t.head().clone(), t.sort().clone(), vec![]).to_string();
        out.push_str(&head);
        if t.arity() == 0 {
            return;
        }
        let collapse = sig.is_some_and(|s| s.is_ac(t.head()));
        out.push('(');
        let mut first = true;
        let mut prev_hole = false;
        for (i, a) in t.args().iter().enumerate() {
            let cp = at.child(i as u32 + 1);
            let hole = !self.kept.contains(&cp);
            if collapse && hole && prev_hole {
                continue;
            }
            if !first {
                out.push_str(", ");
            }
            first = false;
            self.render_into(a, &cp, sig, mark, out);
            prev_hole = hole;
        }
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holes_and_counts() {
        let mut sig = Signature::new();
        sig.ac_op("u", "S", None).unwrap();
        for c in ["a", "b", "c"] {
            sig.op(c, &[], "S").unwrap();
        }
        sig.op("g", &["S"], "S").unwrap();
        let t = super::super::parse_term("g(u(a, b, c))", &sig).unwrap();
        let s = SlicedTerm::new(t.clone(), ["Λ.1.1".parse().unwrap()]);
        assert_eq!(s.kept_symbols(), 3);
        assert_eq!(s.symbol_count(), 5);
        assert_eq!(s.render(None), "g(u(a, •, •))");
        assert_eq!(s.render(Some(&sig)), "g(u(a, •))");
        assert_eq!(SlicedTerm::hole(t.clone()).render(None), "•");
        assert_eq!(SlicedTerm::full(t.clone()).kept_symbols(), t.size());
    }
}
