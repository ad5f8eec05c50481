//! Text format for navigation models:
//!
//! ```text
//! page Login {
//!   script { skip }
//!   continuations { ("reg" = "yes") => Index; }
//!   links { true -> Access ? [user, pass]; }
//! }
//! scenario {
//!   browser bidAlfred tab tidAlfred sigma { user = "alfred"; }
//!   db { "alfred" = "secretAlfred"; }
//!   entry Index;
//!   actions { refresh; back; }
//!   alphabet { "" }
//! }
//! predicate name = <filter pattern>;
//! ```
//!
//! `---` and `//` start comments.

use std::collections::BTreeMap;

use super::model::{BrowserSpec, Cond, Link, PageDef, Scenario, WebApp};
use super::script::{Expr, Stmt, Store, Test};
use super::WebError;
use crate::term::FilterPattern;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Qid(String),
    Str(String),
    Num(u64),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[":=", "=>", "->", "!=", "&&", "'.", "{", "}", "(", ")", "[", "]", ";", ",", "=", "?"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> WebError {
        WebError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }

    fn skip_trivia(&mut self) {
        loop {
            while self.peek().is_some_and(char::is_whitespace) {
                self.bump();
            }
            let rest = &self.src[self.pos..];
            if rest.starts_with("---") || rest.starts_with("//") {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else {
                return;
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize, usize), WebError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let Some(c) = self.peek() else { return Ok((Tok::Eof, line, col)) };
        let rest = &self.src[self.pos..];
        if c == '"' {
            self.bump();
            let mut s = String::new();
            loop {
                match self.bump() {
                    None | Some('\n') => return Err(self.err("unterminated string")),
                    Some('"') => break,
                    Some('\\') => match self.bump() {
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => return Err(self.err("bad escape")),
                    },
                    Some(c) => s.push(c),
                }
            }
            return Ok((Tok::Str(s), line, col));
        }
        if c == '\'' && rest[1..].chars().next().is_some_and(ident_char) {
            self.bump();
            let mut s = String::new();
            while let Some(c) = self.peek().filter(|c| ident_char(*c)) {
                s.push(c);
                self.bump();
            }
            return Ok((Tok::Qid(s), line, col));
        }
        for sym in SYMBOLS {
            if rest.starts_with(sym) {
                for _ in 0..sym.chars().count() {
                    self.bump();
                }
                return Ok((Tok::Sym(sym), line, col));
            }
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                s.push(c);
                self.bump();
            }
            return Ok((Tok::Num(s.parse().map_err(|_| self.err("number too large"))?), line, col));
        }
        if ident_char(c) {
            let mut s = String::new();
            while let Some(c) = self.peek().filter(|c| ident_char(*c)) {
                s.push(c);
                self.bump();
            }
            return Ok((Tok::Ident(s), line, col));
        }
        Err(self.err(format!("unexpected character `{c}`")))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    look: (Tok, usize, usize),
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> WebError {
        WebError::Syntax { line: self.look.1, col: self.look.2, msg: msg.into() }
    }

    fn advance(&mut self) -> Result<Tok, WebError> {
        let next = self.lex.next()?;
        Ok(std::mem::replace(&mut self.look, next).0)
    }

    fn at(&self, sym: &str) -> bool {
        matches!(&self.look.0, Tok::Sym(s) if *s == sym)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.look.0, Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, sym: &str) -> Result<bool, WebError> {
        if self.at(sym) {
            self.advance()?;
            return Ok(true);
        }
        Ok(false)
    }

    fn expect(&mut self, sym: &str) -> Result<(), WebError> {
        if !self.eat(sym)? {
            return Err(self.err(format!("expected `{sym}`, found {}", describe(&self.look.0))));
        }
        Ok(())
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), WebError> {
        if !self.at_kw(kw) {
            return Err(self.err(format!("expected `{kw}`, found {}", describe(&self.look.0))));
        }
        self.advance()?;
        Ok(())
    }

    fn ident(&mut self) -> Result<String, WebError> {
        match &self.look.0 {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance()?;
                Ok(s)
            }
            t => Err(self.err(format!("expected a name, found {}", describe(t)))),
        }
    }

    fn string(&mut self) -> Result<String, WebError> {
        match &self.look.0 {
            Tok::Str(s) => {
                let s = s.clone();
                self.advance()?;
                Ok(s)
            }
            t => Err(self.err(format!("expected a string, found {}", describe(t)))),
        }
    }

    fn word(&mut self) -> Result<String, WebError> {
        match &self.look.0 {
            Tok::Str(_) => self.string(),
            Tok::Ident(_) => self.ident(),
            t => Err(self.err(format!("expected a name or string, found {}", describe(t)))),
        }
    }

    fn number(&mut self) -> Result<u64, WebError> {
        match self.look.0 {
            Tok::Num(n) => {
                self.advance()?;
                Ok(n)
            }
            ref t => Err(self.err(format!("expected a number, found {}", describe(t)))),
        }
    }

    // --- scripts

    fn stmts(&mut self) -> Result<Stmt, WebError> {
        let mut out = Vec::new();
        loop {
            if self.at("}") || self.at_kw("fi") || self.at_kw("else") {
                break;
            }
            out.push(self.stmt()?);
            if !self.eat(";")? {
                break;
            }
        }
        Ok(Stmt::seq(out))
    }

    fn stmt(&mut self) -> Result<Stmt, WebError> {
        match self.look.0.clone() {
            Tok::Ident(k) if k == "skip" => {
                self.advance()?;
                Ok(Stmt::Skip)
            }
            Tok::Qid(v) => {
                self.advance()?;
                self.expect(":=")?;
                Ok(Stmt::Assign(v, self.expr()?))
            }
            Tok::Ident(k) if k == "setSession" || k == "updateDB" => {
                self.advance()?;
                self.expect("(")?;
                let key = self.expr()?;
                self.expect(",")?;
                let val = self.expr()?;
                self.expect(")")?;
                Ok(if k == "setSession" { Stmt::SetSession(key, val) } else { Stmt::UpdateDb(key, val) })
            }
            Tok::Ident(k) if k == "if" => {
                self.advance()?;
                let test = self.test()?;
                self.expect_kw("then")?;
                let a = self.stmts()?;
                let b = if self.at_kw("else") {
                    self.advance()?;
                    self.stmts()?
                } else {
                    Stmt::Skip
                };
                self.expect_kw("fi")?;
                Ok(Stmt::If(test, Box::new(a), Box::new(b)))
            }
            t => Err(self.err(format!("expected a statement, found {}", describe(&t)))),
        }
    }

    fn test(&mut self) -> Result<Test, WebError> {
        let paren = self.eat("(")?;
        let lhs = self.expr()?;
        let negated = if self.eat("=")? {
            false
        } else if self.eat("!=")? {
            true
        } else {
            return Err(self.err("expected `=` or `!=`"));
        };
        let rhs = self.expr()?;
        if paren {
            self.expect(")")?;
        }
        Ok(Test { negated, lhs, rhs })
    }

    fn expr(&mut self) -> Result<Expr, WebError> {
        let mut e = self.atom()?;
        while self.eat("'.")? {
            e = Expr::Cat(Box::new(e), Box::new(self.atom()?));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, WebError> {
        match self.look.0.clone() {
            Tok::Str(s) => {
                self.advance()?;
                Ok(Expr::Str(s))
            }
            Tok::Qid(v) => {
                self.advance()?;
                Ok(Expr::Var(v))
            }
            Tok::Sym("(") => {
                self.advance()?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(k) if k == "null" => {
                self.advance()?;
                Ok(Expr::Null)
            }
            Tok::Ident(k) if k == "getSession" || k == "selectDB" => {
                self.advance()?;
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(if k == "getSession" { Expr::GetSession(Box::new(e)) } else { Expr::SelectDb(Box::new(e)) })
            }
            Tok::Ident(k) if k == "getQuery" => {
                self.advance()?;
                self.expect("(")?;
                let key = match self.advance()? {
                    Tok::Qid(q) | Tok::Str(q) => q,
                    t => return Err(self.err(format!("expected a query key, found {}", describe(&t)))),
                };
                self.expect(")")?;
                Ok(Expr::GetQuery(key))
            }
            t => Err(self.err(format!("expected an expression, found {}", describe(&t)))),
        }
    }

    // --- pages

    fn cond(&mut self) -> Result<Cond, WebError> {
        let mut c = Cond::truth();
        loop {
            if self.at_kw("true") {
                self.advance()?;
            } else {
                self.expect("(")?;
                let k = self.word()?;
                self.expect("=")?;
                let v = self.word()?;
                self.expect(")")?;
                c.0.push((k, v));
            }
            if !self.eat("&&")? {
                return Ok(c);
            }
        }
    }

    fn page(&mut self) -> Result<PageDef, WebError> {
        let name = self.ident()?;
        self.expect("{")?;
        let mut page = PageDef { name, script: Stmt::Skip, continuations: vec![], links: vec![] };
        while !self.eat("}")? {
            let section = self.ident()?;
            self.expect("{")?;
            match section.as_str() {
                "script" => {
                    page.script = self.stmts()?;
                }
                "continuations" => {
                    while !self.at("}") {
                        let c = self.cond()?;
                        self.expect("=>")?;
                        page.continuations.push((c, self.ident()?));
                        self.expect(";")?;
                    }
                }
                "links" => {
                    while !self.at("}") {
                        let cond = self.cond()?;
                        self.expect("->")?;
                        let target = self.ident()?;
                        let mut params = vec![];
                        if self.eat("?")? {
                            self.expect("[")?;
                            while !self.eat("]")? {
                                params.push(self.word()?);
                                if !self.eat(",")? {
                                    self.expect("]")?;
                                    break;
                                }
                            }
                        }
                        page.links.push(Link { cond, target, params });
                        self.expect(";")?;
                    }
                }
                other => return Err(self.err(format!("unknown page section `{other}`"))),
            }
            self.expect("}")?;
        }
        Ok(page)
    }

    fn store(&mut self) -> Result<Store, WebError> {
        self.expect("{")?;
        let mut out = BTreeMap::new();
        while !self.eat("}")? {
            let k = self.word()?;
            self.expect("=")?;
            let v = self.string()?;
            self.expect(";")?;
            out.insert(k, v);
        }
        Ok(out)
    }

    fn scenario(&mut self) -> Result<Scenario, WebError> {
        let mut sc = Scenario::default();
        self.expect("{")?;
        while !self.eat("}")? {
            let item = self.ident()?;
            match item.as_str() {
                "browser" => {
                    let id = self.ident()?;
                    self.expect_kw("tab")?;
                    let tab = self.ident()?;
                    let sigma = if self.at_kw("sigma") {
                        self.advance()?;
                        self.store()?
                    } else {
                        Store::new()
                    };
                    sc.browsers.push(BrowserSpec { id, tab, sigma });
                }
                "db" => sc.db = self.store()?,
                "entry" => {
                    sc.entry = self.ident()?;
                    self.expect(";")?;
                }
                "actions" => {
                    self.expect("{")?;
                    while !self.eat("}")? {
                        match self.ident()?.as_str() {
                            "refresh" => sc.refresh = true,
                            "back" => sc.back = true,
                            "click" => {}
                            a => return Err(self.err(format!("unknown action `{a}`"))),
                        }
                        self.expect(";")?;
                    }
                }
                "alphabet" => {
                    self.expect("{")?;
                    sc.alphabet.clear();
                    while !self.eat("}")? {
                        sc.alphabet.push(self.string()?);
                        self.eat(",")?;
                    }
                }
                "max_refresh" => {
                    sc.max_refresh = self.number()? as u32;
                    self.expect(";")?;
                }
                "history" => {
                    sc.history_cap = self.number()? as usize;
                    self.expect(";")?;
                }
                other => return Err(self.err(format!("unknown scenario item `{other}`"))),
            }
        }
        Ok(sc)
    }

    /// Raw text up to the next `;` outside strings and parentheses.
    fn raw_until_semicolon(&mut self) -> Result<String, WebError> {
        // the lookahead token has already been lexed; restart from its start
        let start = self.token_start();
        let bytes = self.lex.src.as_bytes();
        let (mut i, mut depth, mut in_str) = (start, 0i32, false);
        while i < bytes.len() {
            let c = bytes[i];
            if in_str {
                if c == b'\\' {
                    i += 1;
                } else if c == b'"' {
                    in_str = false;
                }
            } else {
                match c {
                    b'"' => in_str = true,
                    b'(' => depth += 1,
                    b')' => depth -= 1,
                    b';' if depth == 0 => break,
                    _ => {}
                }
            }
            i += 1;
        }
        if i >= bytes.len() {
            return Err(self.err("expected `;` after predicate pattern"));
        }
        let text = self.lex.src[start..i].trim().to_string();
        while self.lex.pos < i {
            self.lex.bump();
        }
        self.lex.bump();
        self.look = self.lex.next()?;
        Ok(text)
    }

    fn token_start(&self) -> usize {
        let (line, col) = (self.look.1, self.look.2);
        let mut l = 1;
        let mut c = 1;
        for (i, ch) in self.lex.src.char_indices() {
            if l == line && c == col {
                return i;
            }
            if ch == '\n' {
                l += 1;
                c = 1;
            } else {
                c += 1;
            }
        }
        self.lex.src.len()
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Qid(s) => format!("`'{s}`"),
        Tok::Str(s) => format!("\"{s}\""),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses and validates a navigation model.
pub fn parse_webapp(text: &str) -> Result<WebApp, WebError> {
    let mut lex = Lexer { src: text, pos: 0, line: 1, col: 1 };
    let look = lex.next()?;
    let mut p = Parser { lex, look };
    let mut pages = Vec::new();
    let mut scenario = None;
    let mut predicates = BTreeMap::new();
    while p.look.0 != Tok::Eof {
        let kw = p.ident()?;
        match kw.as_str() {
            "page" => pages.push(p.page()?),
            "scenario" => {
                if scenario.is_some() {
                    return Err(p.err("more than one scenario"));
                }
                scenario = Some(p.scenario()?);
            }
            "predicate" => {
                let (line, col) = (p.look.1, p.look.2);
                let name = p.ident()?;
                p.expect("=")?;
                let text = p.raw_until_semicolon()?;
                let fp = FilterPattern::parse(&text).map_err(|e| WebError::Syntax { line, col, msg: e.to_string() })?;
                predicates.insert(name, fp);
            }
            other => return Err(p.err(format!("expected `page`, `scenario` or `predicate`, found `{other}`"))),
        }
    }
    let app = WebApp { pages, scenario: scenario.unwrap_or_default(), predicates };
    app.validate()?;
    Ok(app)
}

/// Parses a script in isolation.
pub fn parse_script(text: &str) -> Result<Stmt, WebError> {
    let mut lex = Lexer { src: text, pos: 0, line: 1, col: 1 };
    let look = lex.next()?;
    let mut p = Parser { lex, look };
    let s = p.stmts()?;
    if p.look.0 != Tok::Eof {
        return Err(p.err(format!("unexpected {}", describe(&p.look.0))));
    }
    Ok(s)
}
