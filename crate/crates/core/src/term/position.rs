use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::TermError;

/// An access path into a term. Indices are 1-based; the empty path is the
/// root, rendered `Λ`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position(Vec<u32>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn new(path: Vec<u32>) -> Self {
        Position(path)
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, index: u32) -> Position {
        let mut p = self.0.clone();
        p.push(index);
        Position(p)
    }

    pub fn join(&self, suffix: &Position) -> Position {
        let mut p = self.0.clone();
        p.extend_from_slice(&suffix.0);
        Position(p)
    }

    pub fn parent(&self) -> Option<Position> {
        if self.0.is_empty() {
            None
        } else {
            Some(Position(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// True when `self` is a (non-strict) prefix of `other`.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The remainder of `self` after stripping `prefix`.
    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        if prefix.is_prefix_of(self) {
            Some(Position(self.0[prefix.0.len()..].to_vec()))
        } else {
            None
        }
    }

    /// All proper ancestors, root first.
    pub fn ancestors(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.0.len()).map(move |n| Position(self.0[..n].to_vec()))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Λ")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Position {
    type Err = TermError;

    /// Accepts `Λ.1.2`, `L.1.2`, `1.2` and the bare root markers `Λ`, `L`
    /// or the empty string.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let rest = s
            .strip_prefix('Λ')
            .or_else(|| s.strip_prefix('L'))
            .unwrap_or(s);
        let rest = rest.strip_prefix('.').unwrap_or(rest);
        if rest.is_empty() {
            return Ok(Position::root());
        }
        let mut path = Vec::new();
        for part in rest.split('.') {
            let n: u32 = part
                .parse()
                .map_err(|_| TermError::BadPosition(s.to_string()))?;
            if n == 0 {
                return Err(TermError::BadPosition(s.to_string()));
            }
            path.push(n);
        }
        Ok(Position(path))
    }
}

impl Serialize for Position {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Position {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
