use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Symbol, Term, TermError};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpAttrs {
    #[serde(default, skip_serializing_if = "is_false")]
    pub assoc: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub comm: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub ctor: bool,
    /// Evaluated by a registered builtin rather than by rules.
    #[serde(default, skip_serializing_if = "is_false")]
    pub builtin: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorDecl {
    pub name: String,
    pub args: Vec<String>,
    pub result: String,
    #[serde(default)]
    pub attrs: OpAttrs,
}

impl OperatorDecl {
    pub fn is_ac(&self) -> bool {
        self.attrs.assoc && self.attrs.comm
    }
}

/// Sorts that literal tokens belong to. A token `"..."` is a string, a
/// digit sequence a natural, and `'name` a quoted identifier.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralSorts {
    pub string: Option<String>,
    pub nat: Option<String>,
    pub qid: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    sorts: BTreeSet<String>,
    ops: BTreeMap<String, OperatorDecl>,
    #[serde(default)]
    literals: LiteralSorts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralKind {
    Str,
    Nat,
    Qid,
}

pub fn literal_kind(name: &str) -> Option<LiteralKind> {
    if name.len() >= 2 && name.starts_with('"') && name.ends_with('"') {
        Some(LiteralKind::Str)
    } else if !name.is_empty() && name.bytes().all(|b| b.is_ascii_digit()) {
        Some(LiteralKind::Nat)
    } else if name.len() >= 2 && name.starts_with('\'') {
        Some(LiteralKind::Qid)
    } else {
        None
    }
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sort(&mut self, sort: &str) {
        self.sorts.insert(sort.to_string());
    }

    pub fn set_literal_sorts(&mut self, literals: LiteralSorts) {
        for s in [&literals.string, &literals.nat, &literals.qid].into_iter().flatten() {
            self.sorts.insert(s.clone());
        }
        self.literals = literals;
    }

    pub fn literal_sorts(&self) -> &LiteralSorts {
        &self.literals
    }

    pub fn sorts(&self) -> impl Iterator<Item = &str> {
        self.sorts.iter().map(String::as_str)
    }

    pub fn has_sort(&self, sort: &str) -> bool {
        self.sorts.contains(sort)
    }

    pub fn ops(&self) -> impl Iterator<Item = &OperatorDecl> {
        self.ops.values()
    }

    /// Declares an operator, checking the attribute invariants. Identity
    /// constants must already be declared.
    pub fn declare(&mut self, decl: OperatorDecl) -> Result<(), TermError> {
        let bad = |why: &str| TermError::BadDeclaration(decl.name.clone(), why.to_string());
        if self.ops.contains_key(&decl.name) {
            return Err(bad("duplicate operator name"));
        }
        for s in decl.args.iter().chain(std::iter::once(&decl.result)) {
            if !self.sorts.contains(s) {
                return Err(bad(&format!("unknown sort {s}")));
            }
        }
        let a = &decl.attrs;
        if a.assoc && (decl.args.len() != 2 || decl.args.iter().any(|s| s != &decl.result)) {
            return Err(bad("assoc requires a binary operator over its result sort"));
        }
        if a.comm && decl.args.len() != 2 {
            return Err(bad("comm requires a binary operator"));
        }
        if let Some(id) = &a.identity {
            if !a.assoc {
                return Err(bad("identity requires assoc"));
            }
            match self.ops.get(id) {
                Some(c) if c.args.is_empty() && c.result == decl.result => {}
                _ => return Err(bad(&format!("identity {id} is not a constant of sort {}", decl.result))),
            }
        }
        if a.assoc != a.comm {
            return Err(bad("only assoc+comm operators are supported for flattening"));
        }
        self.ops.insert(decl.name.clone(), decl);
        Ok(())
    }

    /// Shorthand for [`declare`](Self::declare) that also registers sorts.
    pub fn op(&mut self, name: &str, args: &[&str], result: &str) -> Result<(), TermError> {
        for s in args.iter().chain(std::iter::once(&result)) {
            self.add_sort(s);
        }
        self.declare(OperatorDecl {
            name: name.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
            result: result.into(),
            attrs: OpAttrs { ctor: true, ..Default::default() },
        })
    }

    /// Declares an AC operator over `sort` with the given identity constant
    /// (declared here if missing).
    pub fn ac_op(&mut self, name: &str, sort: &str, identity: Option<&str>) -> Result<(), TermError> {
        self.add_sort(sort);
        if let Some(id) = identity {
            if !self.ops.contains_key(id) {
                self.op(id, &[], sort)?;
            }
        }
        self.declare(OperatorDecl {
            name: name.into(),
            args: vec![sort.into(), sort.into()],
            result: sort.into(),
            attrs: OpAttrs {
                assoc: true,
                comm: true,
                identity: identity.map(str::to_string),
                ctor: true,
                builtin: false,
            },
        })
    }

    pub fn builtin_op(&mut self, name: &str, args: &[&str], result: &str) -> Result<(), TermError> {
        for s in args.iter().chain(std::iter::once(&result)) {
            self.add_sort(s);
        }
        self.declare(OperatorDecl {
            name: name.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
            result: result.into(),
            attrs: OpAttrs { builtin: true, ..Default::default() },
        })
    }

    pub fn get(&self, name: &str) -> Option<&OperatorDecl> {
        self.ops.get(name)
    }

    pub fn is_ac(&self, name: &str) -> bool {
        self.ops.get(name).is_some_and(OperatorDecl::is_ac)
    }

    pub fn is_builtin(&self, name: &str) -> bool {
        self.ops.get(name).is_some_and(|d| d.attrs.builtin)
    }

    pub fn identity_of(&self, name: &str) -> Option<&str> {
        self.ops.get(name).and_then(|d| d.attrs.identity.as_deref())
    }

    /// Result sort of an operator or literal token.
    pub fn result_sort(&self, name: &str) -> Option<&str> {
        if let Some(d) = self.ops.get(name) {
            return Some(&d.result);
        }
        match literal_kind(name)? {
            LiteralKind::Str => self.literals.string.as_deref(),
            LiteralKind::Nat => self.literals.nat.as_deref(),
            LiteralKind::Qid => self.literals.qid.as_deref(),
        }
    }

    /// Sort-checked application. AC operators accept two or more arguments
    /// (the flattened variadic form).
    pub fn app(&self, name: &str, args: Vec<Term>) -> Result<Term, TermError> {
        let Some(decl) = self.ops.get(name) else {
            let sort = self
                .result_sort(name)
                .ok_or_else(|| TermError::UnknownOperator(name.to_string()))?;
            if !args.is_empty() {
                return Err(TermError::Arity { op: name.into(), expected: 0, found: args.len() });
            }
            return Ok(Term::app_unchecked(name, sort, args));
        };
        if decl.is_ac() {
            if args.len() < 2 {
                return Err(TermError::Arity { op: name.into(), expected: 2, found: args.len() });
            }
        } else if args.len() != decl.args.len() {
            return Err(TermError::Arity { op: name.into(), expected: decl.args.len(), found: args.len() });
        }
        for (i, a) in args.iter().enumerate() {
            let want = if decl.is_ac() { &decl.result } else { &decl.args[i] };
            if &**a.sort() != want.as_str() {
                return Err(TermError::SortClash {
                    op: name.into(),
                    index: i + 1,
                    expected: want.clone(),
                    found: a.sort().to_string(),
                });
            }
        }
        Ok(Term::app_unchecked(name, decl.result.as_str(), args))
    }

    pub fn constant(&self, name: &str) -> Result<Term, TermError> {
        self.app(name, vec![])
    }

    /// Checks every node of `t` against the declarations.
    pub fn check(&self, t: &Term) -> Result<(), TermError> {
        if t.is_var() {
            return if self.has_sort(t.sort()) { Ok(()) } else { Err(TermError::UnknownSort(t.sort().to_string())) };
        }
        for a in t.args() {
            self.check(a)?;
        }
        let rebuilt = self.app(t.head(), t.args().to_vec())?;
        if rebuilt.sort() != t.sort() {
            return Err(TermError::UnknownOperator(t.head().to_string()));
        }
        Ok(())
    }

    pub fn sort_symbol(&self, sort: &str) -> Symbol {
        Symbol::from(sort)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assoc_requires_binary_homogeneous() {
        let mut sig = Signature::new();
        sig.add_sort("S");
        sig.add_sort("T");
        let err = sig.declare(OperatorDecl {
            name: "f".into(),
            args: vec!["S".into(), "T".into()],
            result: "S".into(),
            attrs: OpAttrs { assoc: true, comm: true, ..Default::default() },
        });
        assert!(matches!(err, Err(TermError::BadDeclaration(..))));
    }

    #[test]
    fn identity_must_be_declared_constant() {
        let mut sig = Signature::new();
        sig.add_sort("S");
        let err = sig.declare(OperatorDecl {
            name: "f".into(),
            args: vec!["S".into(), "S".into()],
            result: "S".into(),
            attrs: OpAttrs { assoc: true, comm: true, identity: Some("e".into()), ..Default::default() },
        });
        assert!(err.is_err());
        sig.ac_op("f", "S", Some("e")).unwrap();
        assert_eq!(sig.identity_of("f"), Some("e"));
    }

    #[test]
    fn sort_errors_name_the_operator() {
        let mut sig = Signature::new();
        sig.op("a", &[], "S").unwrap();
        sig.op("n", &[], "N").unwrap();
        sig.op("g", &["S"], "S").unwrap();
        let err = sig.app("g", vec![sig.constant("n").unwrap()]).unwrap_err();
        assert!(err.to_string().contains('g'));
    }

    #[test]
    fn literals_take_configured_sorts() {
        let mut sig = Signature::new();
        sig.set_literal_sorts(LiteralSorts { string: Some("Str".into()), nat: Some("Nat".into()), qid: None });
        assert_eq!(sig.constant("\"x\"").unwrap().sort().as_ref(), "Str");
        assert_eq!(sig.constant("42").unwrap().sort().as_ref(), "Nat");
        assert!(sig.constant("'q").is_err());
    }
}
