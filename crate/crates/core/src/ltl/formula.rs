use std::fmt;

use super::LtlError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// State predicate with ground identifier arguments.
    Pred { name: String, args: Vec<String> },
    /// True on a transition produced by the rule with this label; written `{Label}`.
    Rule(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Pred { name, args } if args.is_empty() => write!(f, "{name}"),
            Atom::Pred { name, args } => write!(f, "{name}({})", args.join(", ")),
            Atom::Rule(l) => write!(f, "{{{l}}}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Always(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: &str, args: &[&str]) -> Formula {
        Formula::Atom(Atom::Pred { name: name.into(), args: args.iter().map(|a| a.to_string()).collect() })
    }

    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }
    pub fn and(self, b: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(b))
    }
    pub fn or(self, b: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(b))
    }
    pub fn implies(self, b: Formula) -> Formula {
        Formula::Implies(Box::new(self), Box::new(b))
    }
    pub fn next(self) -> Formula {
        Formula::Next(Box::new(self))
    }
    pub fn always(self) -> Formula {
        Formula::Always(Box::new(self))
    }
    pub fn until(self, b: Formula) -> Formula {
        Formula::Until(Box::new(self), Box::new(b))
    }
    /// `<> f`, kept as `true U f`.
    pub fn eventually(self) -> Formula {
        Formula::True.until(self)
    }

    /// Distinct atoms in order of first occurrence.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = vec![];
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone())
                }
            }
            Formula::Not(a) | Formula::Next(a) | Formula::Always(a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Number of temporal operators (`O`, `[]`, `U`).
    pub fn temporal_count(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 0,
            Formula::Not(a) => a.temporal_count(),
            Formula::Next(a) | Formula::Always(a) => 1 + a.temporal_count(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.temporal_count() + b.temporal_count(),
            Formula::Until(a, b) => 1 + a.temporal_count() + b.temporal_count(),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Implies(..) => 0,
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Until(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // parenthesize a child whose precedence is below `min`
        let sub = |f: &mut fmt::Formatter<'_>, c: &Formula, min: u8| {
            if c.prec() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        };
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(a) => {
                write!(f, "~ ")?;
                sub(f, a, 4)
            }
            Formula::Next(a) => {
                write!(f, "O ")?;
                sub(f, a, 4)
            }
            Formula::Always(a) => {
                write!(f, "[] ")?;
                sub(f, a, 4)
            }
            Formula::Until(a, b) if **a == Formula::True => {
                write!(f, "<> ")?;
                sub(f, b, 4)
            }
            Formula::Until(a, b) => {
                sub(f, a, 4)?;
                write!(f, " U ")?;
                sub(f, b, 3)
            }
            Formula::And(a, b) => {
                sub(f, a, 2)?;
                write!(f, " /\\ ")?;
                sub(f, b, 3)
            }
            Formula::Or(a, b) => {
                sub(f, a, 1)?;
                write!(f, " \\/ ")?;
                sub(f, b, 2)
            }
            Formula::Implies(a, b) => {
                sub(f, a, 1)?;
                write!(f, " -> ")?;
                sub(f, b, 0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Always,
    Eventually,
    Next,
    Until,
    And,
    Or,
    Implies,
    Not,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let mut out = vec![];
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        let two = text.get(i..i + 2).unwrap_or("");
        let tok = match two {
            "[]" => Some(Tok::Always),
            "<>" => Some(Tok::Eventually),
            "/\\" => Some(Tok::And),
            "\\/" => Some(Tok::Or),
            "->" => Some(Tok::Implies),
            _ => None,
        };
        if let Some(t) = tok {
            out.push((i, t));
            i += 2;
            continue;
        }
        let single = match c {
            '~' => Some(Tok::Not),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((i, t));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'\'' || b[i] == b'-' && b.get(i + 1) != Some(&b'>')) {
                i += 1;
            }
            let word = &text[start..i];
            out.push((
                start,
                match word {
                    "O" => Tok::Next,
                    "U" => Tok::Until,
                    _ => Tok::Ident(word.into()),
                },
            ));
        } else {
            return Err(LtlError::Syntax { pos: i, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LtlError> {
        Err(LtlError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), LtlError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn implies(&mut self) -> Result<Formula, LtlError> {
        let a = self.or()?;
        if self.eat(&Tok::Implies) {
            return Ok(a.implies(self.implies()?));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, LtlError> {
        let mut a = self.and()?;
        while self.eat(&Tok::Or) {
            a = a.or(self.and()?);
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, LtlError> {
        let mut a = self.until()?;
        while self.eat(&Tok::And) {
            a = a.and(self.until()?);
        }
        Ok(a)
    }

    fn until(&mut self) -> Result<Formula, LtlError> {
        let a = self.unary()?;
        if self.eat(&Tok::Until) {
            return Ok(a.until(self.until()?));
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Formula, LtlError> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.i += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Always) => {
                self.i += 1;
                Ok(self.unary()?.always())
            }
            Some(Tok::Eventually) => {
                self.i += 1;
                Ok(self.unary()?.eventually())
            }
            Some(Tok::Next) => {
                self.i += 1;
                Ok(self.unary()?.next())
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let f = self.implies()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(f)
            }
            Some(Tok::LBrace) => {
                self.i += 1;
                let Some(Tok::Ident(l)) = self.peek().cloned() else { return self.err("expected rule label") };
                self.i += 1;
                self.expect(Tok::RBrace, "'}'")?;
                Ok(Formula::Atom(Atom::Rule(l)))
            }
            Some(Tok::Ident(w)) => {
                self.i += 1;
                match w.as_str() {
                    "true" => return Ok(Formula::True),
                    "false" => return Ok(Formula::False),
                    _ => {}
                }
                let mut args = vec![];
                if self.eat(&Tok::LParen) {
                    loop {
                        let Some(Tok::Ident(a)) = self.peek().cloned() else { return self.err("expected identifier argument") };
                        self.i += 1;
                        args.push(a);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen, "')'")?;
                }
                Ok(Formula::Atom(Atom::Pred { name: w, args }))
            }
            _ => self.err("expected formula"),
        }
    }
}

/// Parses `[] <> O U /\ \/ -> ~` formulas. `<> f` becomes `true U f`.
pub fn parse_formula(text: &str) -> Result<Formula, LtlError> {
    let mut p = Parser { toks: lex(text)?, i: 0, end: text.len() };
    let f = p.implies()?;
    if p.i != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(f)
}

/// Negation normal form over indexed literals, with release as the dual of
/// until. Literal `(i, true)` is atom `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

impl Nnf {
    /// `f` (or its negation when `neg`) with atoms indexed by `atoms`.
    pub fn of(f: &Formula, atoms: &[Atom], neg: bool) -> Nnf {
        let b = |f: &Formula, neg| Box::new(Nnf::of(f, atoms, neg));
        match (f, neg) {
            (Formula::True, false) | (Formula::False, true) => Nnf::True,
            (Formula::True, true) | (Formula::False, false) => Nnf::False,
            (Formula::Atom(a), _) => Nnf::Lit(atoms.iter().position(|x| x == a).expect("atom indexed"), !neg),
            (Formula::Not(a), _) => Nnf::of(a, atoms, !neg),
            (Formula::And(x, y), false) | (Formula::Or(x, y), true) => Nnf::And(b(x, neg), b(y, neg)),
            (Formula::Or(x, y), false) | (Formula::And(x, y), true) => Nnf::Or(b(x, neg), b(y, neg)),
            (Formula::Implies(x, y), false) => Nnf::Or(b(x, true), b(y, false)),
            (Formula::Implies(x, y), true) => Nnf::And(b(x, false), b(y, true)),
            (Formula::Next(a), _) => Nnf::Next(b(a, neg)),
            (Formula::Always(a), false) => Nnf::Release(Box::new(Nnf::False), b(a, false)),
            (Formula::Always(a), true) => Nnf::Until(Box::new(Nnf::True), b(a, true)),
            (Formula::Until(x, y), false) => Nnf::Until(b(x, false), b(y, false)),
            (Formula::Until(x, y), true) => Nnf::Release(b(x, true), b(y, true)),
        }
    }
}
