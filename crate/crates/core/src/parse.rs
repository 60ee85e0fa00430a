//! Concrete syntax: one lexer shared by a parser per calculus.

use crate::cps::CpsTerm;
use crate::name::{Ident, Name};
use crate::source::{Param, Term};
use crate::types::Type;
use crate::vn::{Bindable, HoistProgram, VnTerm, VnValue};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Id(String),
    PreLabel(String),
    PostLabel(String),
    Int(usize),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Id(s) => write!(f, "`{s}`"),
            Tok::PreLabel(s) => write!(f, "`{s}>`"),
            Tok::PostLabel(s) => write!(f, "`>{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

const KEYWORDS: &[&str] = &["let", "in", "proj", "pack", "exists", "forall", "newreg", "dispose"];

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            adv(1, &mut i, &mut col);
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if ident_start(c) {
            let start = i;
            while i < chars.len() && ident_char(chars[i]) {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            if chars.get(i) == Some(&'>') && !KEYWORDS.contains(&s.as_str()) {
                i += 1;
                col += 1;
                out.push((Tok::PreLabel(s), l0, c0));
            } else {
                out.push((Tok::Id(s), l0, c0));
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            let n = s.parse().map_err(|_| err(l0, c0, format!("integer `{s}` out of range")))?;
            out.push((Tok::Int(n), l0, c0));
            continue;
        }
        if c == '>' {
            if chars.get(i + 1).is_some_and(|&d| ident_start(d)) {
                let start = i + 1;
                i += 1;
                while i < chars.len() && ident_char(chars[i]) {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start + 1;
                out.push((Tok::PostLabel(s), l0, c0));
                continue;
            }
            return Err(err(l0, c0, "`>` must be attached to a label".into()));
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        let sym: Option<(&'static str, usize)> = if three == "}->" {
            Some(("}->", 3))
        } else if two == "->" {
            Some(("->", 2))
        } else if two == "-{" {
            Some(("-{", 2))
        } else {
            match c {
                '\\' | 'λ' => Some(("\\", 1)),
                '.' => Some((".", 1)),
                '(' => Some(("(", 1)),
                ')' => Some((")", 1)),
                ',' => Some((",", 1)),
                '@' => Some(("@", 1)),
                '=' => Some(("=", 1)),
                ':' => Some((":", 1)),
                '[' => Some(("[", 1)),
                ']' => Some(("]", 1)),
                '{' => Some(("{", 1)),
                '}' => Some(("}", 1)),
                '!' => Some(("!", 1)),
                '*' | '×' => Some(("*", 1)),
                '→' => Some(("->", 1)),
                '∃' => None,
                '∀' => None,
                _ => None,
            }
        };
        match sym {
            Some((s, n)) => {
                out.push((Tok::Sym(s), l0, c0));
                adv(n, &mut i, &mut col);
            }
            None if c == '∃' => {
                out.push((Tok::Id("exists".into()), l0, c0));
                adv(1, &mut i, &mut col);
            }
            None if c == '∀' => {
                out.push((Tok::Id("forall".into()), l0, c0));
                adv(1, &mut i, &mut col);
            }
            None => return Err(err(l0, c0, format!("unexpected character `{c}`"))),
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

/// Whether machine-reserved names (leading `_`, `halt` as a binder) are accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    User,
    Internal,
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    pub(crate) fn new(src: &str, mode: Mode) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, mode })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    pub(crate) fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        let (_, line, col) = self.toks[self.pos];
        ParseError { line, col, msg: msg.into() }
    }

    pub(crate) fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub(crate) fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Id(x) if x == s)
    }

    pub(crate) fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.peek())))
        }
    }

    pub(crate) fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.next();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.peek())))
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after end of term", self.peek())))
        }
    }

    fn check_name(&self, s: &str) -> Result<Name, ParseError> {
        if KEYWORDS.contains(&s) {
            return Err(self.error(format!("keyword `{s}` used as a name")));
        }
        if self.mode == Mode::User && s.starts_with('_') {
            return Err(self.error(format!("names starting with `_` are reserved (`{s}`)")));
        }
        Ok(Name::new(s))
    }

    /// Any identifier occurrence.
    pub(crate) fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Id(s) => {
                let n = self.check_name(&s)?;
                self.next();
                Ok(n)
            }
            t => Err(self.error(format!("expected an identifier, found {t}"))),
        }
    }

    /// An identifier in binding position.
    pub(crate) fn binder(&mut self) -> Result<Ident, ParseError> {
        if self.mode == Mode::User && self.is_kw("halt") {
            return Err(self.error("`halt` is reserved and cannot be bound"));
        }
        self.ident()
    }

    pub(crate) fn label_name(&self, s: &str) -> Result<Name, ParseError> {
        self.check_name(s)
    }

    pub(crate) fn int(&mut self) -> Result<usize, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.next();
                Ok(n)
            }
            t => Err(self.error(format!("expected an index, found {t}"))),
        }
    }

    pub(crate) fn index(&mut self) -> Result<usize, ParseError> {
        let n = self.int()?;
        if n == 0 {
            return Err(self.error("projection indices start at 1"));
        }
        Ok(n)
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> Result<Type, ParseError> {
        if self.is_kw("exists") {
            self.next();
            let v = self.ident()?;
            self.expect_sym(".")?;
            let b = self.ty()?;
            return Ok(Type::Exists(v, Box::new(b)));
        }
        if self.eat_sym("(") {
            let mut items = Vec::new();
            if !self.is_sym(")") {
                items.push(self.ty()?);
                while self.eat_sym(",") {
                    items.push(self.ty()?);
                }
            }
            self.expect_sym(")")?;
            if self.eat_sym("->") {
                if items.is_empty() {
                    return Err(self.error("an arrow needs at least one argument type"));
                }
                let c = self.ty()?;
                return Ok(Type::Arrow(items, Box::new(c)));
            }
            if items.len() != 1 {
                return Err(self.error("a parenthesised type list must be followed by `->`; write products as `*(…)`"));
            }
            return Ok(items.pop().unwrap());
        }
        let a = self.ty_atom()?;
        if self.eat_sym("->") {
            let c = self.ty()?;
            return Ok(Type::Arrow(vec![a], Box::new(c)));
        }
        Ok(a)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        if self.eat_sym("*") {
            self.expect_sym("(")?;
            let mut items = Vec::new();
            if !self.is_sym(")") {
                items.push(self.ty()?);
                while self.eat_sym(",") {
                    items.push(self.ty()?);
                }
            }
            self.expect_sym(")")?;
            return Ok(Type::Product(items));
        }
        if self.is_kw("R") {
            self.next();
            return Ok(Type::Result);
        }
        Ok(Type::Var(self.ident()?))
    }

    // ---- source terms ----

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        let mut ps: Vec<Param> = Vec::new();
        loop {
            if self.eat_sym("(") {
                let x = self.binder()?;
                self.expect_sym(":")?;
                let t = self.ty()?;
                self.expect_sym(")")?;
                ps.push(Param::typed(x, t));
            } else if matches!(self.peek(), Tok::Id(_)) {
                let x = self.binder()?;
                ps.push(Param::new(x));
            } else {
                break;
            }
            self.eat_sym(",");
        }
        if ps.is_empty() {
            return Err(self.error("an abstraction needs at least one parameter"));
        }
        for (i, p) in ps.iter().enumerate() {
            if ps[..i].iter().any(|q| q.name == p.name) {
                return Err(self.error(format!("duplicate parameter `{}`", p.name)));
            }
        }
        Ok(ps)
    }

    pub(crate) fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat_sym("\\") {
            let ps = self.params()?;
            self.expect_sym(".")?;
            let b = self.term()?;
            return Ok(Term::Lam(ps, Box::new(b)));
        }
        if self.is_kw("let") {
            self.next();
            let x = self.binder()?;
            self.expect_sym("=")?;
            let m = self.term()?;
            self.expect_kw("in")?;
            let n = self.term()?;
            return Ok(Term::Let(x, Box::new(m), Box::new(n)));
        }
        if let Tok::PreLabel(l) = self.peek().clone() {
            let l = self.label_name(&l)?;
            self.next();
            let m = self.term()?;
            return Ok(Term::Pre(l, Box::new(m)));
        }
        let mut e = self.app()?;
        while let Tok::PostLabel(l) = self.peek().clone() {
            let l = self.label_name(&l)?;
            self.next();
            e = Term::Post(l, Box::new(e));
        }
        Ok(e)
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        if self.is_kw("proj") {
            self.next();
            let i = self.index()?;
            let m = self.app()?;
            return Ok(Term::Proj(i, Box::new(m)));
        }
        let mut e = self.atom()?;
        while self.is_sym("@") {
            self.next();
            self.expect_sym("(")?;
            let args = self.term_list()?;
            self.expect_sym(")")?;
            if args.is_empty() {
                return Err(self.error("an application needs at least one argument"));
            }
            e = Term::App(Box::new(e), args);
        }
        Ok(e)
    }

    fn term_list(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut out = Vec::new();
        if self.is_sym(")") {
            return Ok(out);
        }
        out.push(self.term()?);
        while self.eat_sym(",") {
            if self.is_sym(")") {
                break;
            }
            out.push(self.term()?);
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        if self.eat_sym("@") {
            // prefix form @(M, N1, ..., Nn)
            self.expect_sym("(")?;
            let mut ts = self.term_list()?;
            self.expect_sym(")")?;
            if ts.len() < 2 {
                return Err(self.error("prefix application needs a function and at least one argument"));
            }
            let f = ts.remove(0);
            return Ok(Term::App(Box::new(f), ts));
        }
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                return Ok(Term::Tuple(vec![]));
            }
            let first = self.term()?;
            if self.eat_sym(")") {
                return Ok(first);
            }
            let mut items = vec![first];
            while self.eat_sym(",") {
                if self.is_sym(")") {
                    break;
                }
                items.push(self.term()?);
            }
            self.expect_sym(")")?;
            return Ok(Term::Tuple(items));
        }
        Ok(Term::Var(self.ident()?))
    }

    // ---- value-named terms ----

    pub(crate) fn id_list(&mut self) -> Result<Vec<Ident>, ParseError> {
        self.expect_sym("(")?;
        let mut out = Vec::new();
        if !self.is_sym(")") {
            out.push(self.ident()?);
            while self.eat_sym(",") {
                out.push(self.ident()?);
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    pub(crate) fn vn_term(&mut self) -> Result<VnTerm, ParseError> {
        if self.is_kw("let") {
            self.next();
            let x = self.binder()?;
            self.expect_sym("=")?;
            let b = self.vn_bindable()?;
            self.expect_kw("in")?;
            let m = self.vn_term()?;
            return Ok(VnTerm::Let(x, b, Box::new(m)));
        }
        if let Tok::PreLabel(l) = self.peek().clone() {
            let l = self.label_name(&l)?;
            self.next();
            return Ok(VnTerm::Pre(l, Box::new(self.vn_term()?)));
        }
        if self.eat_sym("(") {
            let m = self.vn_term()?;
            self.expect_sym(")")?;
            return Ok(m);
        }
        if self.eat_sym("@") {
            let mut xs = self.id_list()?;
            if xs.len() < 2 {
                return Err(self.error("prefix application needs a function and at least one argument"));
            }
            let f = xs.remove(0);
            return Ok(VnTerm::App(f, xs));
        }
        let f = self.ident()?;
        self.expect_sym("@")?;
        let args = self.id_list()?;
        if args.is_empty() {
            return Err(self.error("an application needs at least one argument"));
        }
        Ok(VnTerm::App(f, args))
    }

    fn vn_bindable(&mut self) -> Result<Bindable, ParseError> {
        if self.eat_sym("\\") {
            let ps = self.params()?;
            self.expect_sym(".")?;
            let b = self.vn_term()?;
            return Ok(Bindable::Value(VnValue::Lam(ps, Box::new(b))));
        }
        if self.is_kw("proj") {
            self.next();
            let i = self.index()?;
            let y = self.ident()?;
            return Ok(Bindable::Proj(i, y));
        }
        if self.is_kw("pack") {
            self.next();
            self.expect_sym("[")?;
            let t = self.ty()?;
            self.expect_sym("]")?;
            self.expect_sym("(")?;
            let y = self.ident()?;
            self.expect_sym(")")?;
            if !matches!(t, Type::Exists(..)) {
                return Err(self.error("a pack annotation must be an existential type"));
            }
            return Ok(Bindable::Value(VnValue::Pack(y, t)));
        }
        Ok(Bindable::Value(VnValue::Tuple(self.id_list()?)))
    }
}

pub fn parse_term_mode(src: &str, mode: Mode) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, mode)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a source term written by a user (reserved names rejected).
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    parse_term_mode(src, Mode::User)
}

/// Parses printed compiler output (reserved names accepted).
pub fn parse_term_internal(src: &str) -> Result<Term, ParseError> {
    parse_term_mode(src, Mode::Internal)
}

pub fn parse_cps_mode(src: &str, mode: Mode) -> Result<CpsTerm, ParseError> {
    let t = parse_term_mode(src, mode)?;
    CpsTerm::from_source(&t).map_err(|msg| ParseError { line: 1, col: 1, msg })
}

pub fn parse_cps(src: &str) -> Result<CpsTerm, ParseError> {
    parse_cps_mode(src, Mode::Internal)
}

pub fn parse_vn_mode(src: &str, mode: Mode) -> Result<VnTerm, ParseError> {
    let mut p = Parser::new(src, mode)?;
    let t = p.vn_term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_vn(src: &str) -> Result<VnTerm, ParseError> {
    parse_vn_mode(src, Mode::Internal)
}

pub fn parse_hoist(src: &str) -> Result<HoistProgram, ParseError> {
    let t = parse_vn(src)?;
    HoistProgram::from_term(&t).map_err(|msg| ParseError { line: 1, col: 1, msg })
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src, Mode::Internal)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a typing context `x: A, y: B`.
pub fn parse_ctx(src: &str) -> Result<Vec<(Ident, Type)>, ParseError> {
    let mut p = Parser::new(src, Mode::Internal)?;
    let mut out = Vec::new();
    if *p.peek() == Tok::Eof {
        return Ok(out);
    }
    loop {
        let x = p.ident()?;
        p.expect_sym(":")?;
        let t = p.ty()?;
        out.push((x, t));
        if !p.eat_sym(",") {
            break;
        }
    }
    p.expect_eof()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;

    #[test]
    fn labels_attach_by_position() {
        let t = parse_term("l0> f @ (x) >l1").unwrap();
        assert_eq!(t.to_string(), "l0> f @ (x) >l1");
        match t {
            Term::Pre(l, b) => {
                assert_eq!(l.as_str(), "l0");
                assert!(matches!(*b, Term::Post(..)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn reserved_names_rejected_for_users() {
        let e = parse_term("\\_k1. _k1").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));
        assert!(parse_term("\\halt. halt").is_err());
        assert!(parse_term_internal("\\_k1. _k1").is_ok());
    }

    #[test]
    fn error_positions() {
        let e = parse_term("let x = \n  (a, b in x").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn prefix_and_infix_application_agree() {
        let a = parse_term("@(f, x, @(g, y))").unwrap();
        let b = parse_term("f @ (x, g @ (y))").unwrap();
        assert!(a.alpha_eq(&b));
    }

    #[test]
    fn one_tuples_round_trip() {
        let t = parse_term("(x,)").unwrap();
        assert_eq!(t, Term::Tuple(vec![Term::var("x")]));
        assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn types_round_trip() {
        for s in ["t", "(t, u) -> R", "*(t, *())", "exists t. *((t, u) -> R, t)", "(t -> u) -> t"] {
            let t = parse_type(s).unwrap();
            assert_eq!(parse_type(&t.to_string()).unwrap(), t, "{s}");
        }
    }

    #[test]
    fn vn_syntax() {
        let t = parse_vn("let e = (y) in let z = pack[exists t. t] (e) in let c = proj 1 z in c @ (e)").unwrap();
        assert_eq!(parse_vn(&t.to_string()).unwrap(), t);
    }
}
