//! Random well-sorted ground terms, used to refill slice holes.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{flatten, OperatorDecl, Signature, Term, TermError};

pub struct TermGenerator<'a> {
    sig: &'a Signature,
    /// Least height of a ground term per sort.
    min_height: BTreeMap<String, usize>,
    pub string_pool: Vec<String>,
}

impl<'a> TermGenerator<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        let mut min_height: BTreeMap<String, usize> = BTreeMap::new();
        let lits = sig.literal_sorts();
        for s in [&lits.string, &lits.nat, &lits.qid].into_iter().flatten() {
            min_height.insert(s.clone(), 1);
        }
        loop {
            let mut changed = false;
            for d in Self::constructors(sig) {
                let h = d.args.iter().map(|a| min_height.get(a).copied()).collect::<Option<Vec<_>>>();
                let Some(h) = h else { continue };
                let h = 1 + h.into_iter().max().unwrap_or(0);
                let e = min_height.entry(d.result.clone()).or_insert(usize::MAX);
                if h < *e {
                    *e = h;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        TermGenerator { sig, min_height, string_pool: vec!["".into(), "free".into(), "busy".into(), "x".into()] }
    }

    fn constructors(sig: &Signature) -> impl Iterator<Item = &OperatorDecl> {
        sig.ops().filter(|d| !d.attrs.builtin)
    }

    pub fn inhabited(&self, sort: &str) -> bool {
        self.min_height.contains_key(sort)
    }

    /// A canonical ground term of `sort` of height at most
    /// `max(depth, least height)`.
    pub fn generate<R: Rng>(&self, sort: &str, depth: usize, rng: &mut R) -> Result<Term, TermError> {
        Ok(flatten(&self.go(sort, depth, rng)?, self.sig))
    }

    fn go<R: Rng>(&self, sort: &str, depth: usize, rng: &mut R) -> Result<Term, TermError> {
        let Some(&least) = self.min_height.get(sort) else {
            return Err(TermError::UnknownSort(format!("{sort} (no ground terms)")));
        };
        let budget = depth.max(least);
        let lits = self.sig.literal_sorts();
        let mut options: Vec<Option<&OperatorDecl>> = Self::constructors(self.sig)
            .filter(|d| d.result == sort)
            .filter(|d| d.args.iter().all(|a| self.min_height.get(a).is_some_and(|h| *h < budget)))
            .map(Some)
            .collect();
        let literal = [&lits.string, &lits.nat, &lits.qid].iter().any(|s| s.as_deref() == Some(sort));
        if literal {
            options.push(None);
        }
        let pick = options.choose(rng).copied().flatten();
        match pick {
            None => {
                let name = if lits.string.as_deref() == Some(sort) {
                    format!("\"{}\"", self.string_pool.choose(rng).expect("non-empty pool"))
                } else if lits.nat.as_deref() == Some(sort) {
                    rng.gen_range(0..4u32).to_string()
                } else {
                    format!("'q{}", rng.gen_range(0..4u32))
                };
                self.sig.constant(&name)
            }
            Some(d) => {
                let args = d
                    .args
                    .iter()
                    .map(|a| self.go(a, budget - 1, rng))
                    .collect::<Result<Vec<_>, _>>()?;
                self.sig.app(&d.name, args)
            }
        }
    }
}
