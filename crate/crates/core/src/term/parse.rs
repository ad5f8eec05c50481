//! Concrete syntax for terms: `name`, `op(t1, ..., tn)`, string literals
//! `"..."`, and variables written `X:Sort`. Filter patterns reuse the same
//! surface with the extra leaves `?` and `_`.

use std::collections::BTreeMap;

use super::{flatten, Signature, Term, TermError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Sx {
    pub name: String,
    pub var_sort: Option<String>,
    pub args: Vec<Sx>,
    pub line: usize,
    pub col: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

fn is_name_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | ',' | ':' | '"'))
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, col: 1 }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> TermError {
        TermError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn next(&mut self) -> Result<(Tok, usize, usize), TermError> {
        while self.peek_char().is_some_and(char::is_whitespace) {
            self.bump();
        }
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, line, col));
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::LParen
            }
            ')' => {
                self.bump();
                Tok::RParen
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            ':' => {
                self.bump();
                Tok::Colon
            }
            '"' => {
                let mut s = String::from('"');
                self.bump();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated string literal")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(self.err("bad escape in string literal")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                s.push('"');
                Tok::Name(s)
            }
            _ => {
                let mut s = String::new();
                while let Some(c) = self.peek_char().filter(|c| is_name_char(*c)) {
                    s.push(c);
                    self.bump();
                }
                Tok::Name(s)
            }
        };
        Ok((tok, line, col))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    look: (Tok, usize, usize),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, TermError> {
        let mut lex = Lexer::new(src);
        let look = lex.next()?;
        Ok(Parser { lex, look })
    }

    fn advance(&mut self) -> Result<(Tok, usize, usize), TermError> {
        let next = self.lex.next()?;
        Ok(std::mem::replace(&mut self.look, next))
    }

    fn err_here(&self, msg: impl Into<String>) -> TermError {
        TermError::Syntax { line: self.look.1, col: self.look.2, msg: msg.into() }
    }

    fn term(&mut self) -> Result<Sx, TermError> {
        let (tok, line, col) = self.advance()?;
        let Tok::Name(name) = tok else {
            return Err(TermError::Syntax { line, col, msg: format!("expected a name, found {tok:?}") });
        };
        if self.look.0 == Tok::Colon {
            self.advance()?;
            let (tok, l2, c2) = self.advance()?;
            let Tok::Name(sort) = tok else {
                return Err(TermError::Syntax { line: l2, col: c2, msg: "expected a sort after ':'".into() });
            };
            return Ok(Sx { name, var_sort: Some(sort), args: vec![], line, col });
        }
        let mut args = Vec::new();
        if self.look.0 == Tok::LParen {
            self.advance()?;
            loop {
                args.push(self.term()?);
                match self.advance()? {
                    (Tok::Comma, ..) => continue,
                    (Tok::RParen, ..) => break,
                    (t, l, c) => {
                        return Err(TermError::Syntax { line: l, col: c, msg: format!("expected ',' or ')', found {t:?}") })
                    }
                }
            }
        }
        Ok(Sx { name, var_sort: None, args, line, col })
    }
}

pub(crate) fn parse_sx(text: &str) -> Result<Sx, TermError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    if p.look.0 != Tok::Eof {
        return Err(p.err_here("trailing input after term"));
    }
    Ok(t)
}

fn build(sx: &Sx, sig: &Signature, vars: &BTreeMap<String, String>) -> Result<Term, TermError> {
    let located = |e: TermError| match e {
        e @ TermError::Syntax { .. } => e,
        e => TermError::At { line: sx.line, col: sx.col, source: Box::new(e) },
    };
    if let Some(sort) = &sx.var_sort {
        if !sig.has_sort(sort) {
            return Err(located(TermError::UnknownSort(sort.clone())));
        }
        return Ok(Term::var(sx.name.as_str(), sort.as_str()));
    }
    if sx.args.is_empty() && sig.get(&sx.name).is_none() {
        if let Some(sort) = vars.get(&sx.name) {
            return Ok(Term::var(sx.name.as_str(), sort.as_str()));
        }
    }
    let args = sx.args.iter().map(|a| build(a, sig, vars)).collect::<Result<Vec<_>, _>>()?;
    sig.app(&sx.name, args).map_err(located)
}

/// Parses without normalisation; the result mirrors the text exactly.
pub fn parse_term_raw(text: &str, sig: &Signature) -> Result<Term, TermError> {
    build(&parse_sx(text)?, sig, &BTreeMap::new())
}

/// Parses with a table of declared variable names (`name -> sort`) in
/// addition to the `X:Sort` syntax; no normalisation.
pub fn parse_term_with_vars(text: &str, sig: &Signature, vars: &BTreeMap<String, String>) -> Result<Term, TermError> {
    build(&parse_sx(text)?, sig, vars)
}

/// Parses and returns the canonical form.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, TermError> {
    Ok(flatten(&parse_term_raw(text, sig)?, sig))
}
