//! Recursive descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' atom)?
//! atom   := integer | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! '/' is ordinary division; "1/2" folds to the rational constant 1/2 during
//! normalization. Identifiers with a trailing run of '_<integer>' segments
//! whose count equals the argument count are read as derivatives of an
//! abstract function, e.g. F_1_0(t, x) is dF/dt. Abstract function arities
//! are locked to their first use within a `ParseSession`.

use std::collections::HashMap;

use num_bigint::BigInt;

use super::{Builtin, Expr, Rat};
use crate::error::{Error, Result};

/// Tracks abstract function arities across related parse calls.
#[derive(Debug, Default, Clone)]
pub struct ParseSession {
    arities: HashMap<String, usize>,
}

impl ParseSession {
    pub fn new() -> ParseSession {
        ParseSession::default()
    }
}

/// Parse a single expression in a throwaway session.
pub fn parse_one(src: &str) -> Result<Expr> {
    parse_expr(src, &mut ParseSession::new())
}

pub fn parse_expr(src: &str, sess: &mut ParseSession) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, sess };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    LBrace,
    RBrace,
    Semi,
    Eq,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Semi => "';'".into(),
            Tok::Eq => "'='".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'{' => {
                out.push((Tok::LBrace, i));
                i += 1;
            }
            b'}' => {
                out.push((Tok::RBrace, i));
                i += 1;
            }
            b';' => {
                out.push((Tok::Semi, i));
                i += 1;
            }
            b'=' => {
                out.push((Tok::Eq, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let s = &src[start..i];
                let n: BigInt = s.parse().expect("digits");
                out.push((Tok::Int(n), start));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < b.len()
                    && (b[i].is_ascii_alphanumeric() || b[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            other => {
                return Err(Error::Syntax {
                    pos: i,
                    msg: format!("unexpected character {:?}", other as char),
                })
            }
        }
    }
    out.push((Tok::Eof, b.len()));
    Ok(out)
}

pub(crate) struct Parser<'a> {
    pub(crate) toks: Vec<(Tok, usize)>,
    pub(crate) i: usize,
    pub(crate) sess: &'a mut ParseSession,
}

impl<'a> Parser<'a> {
    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {}, found {}", t.describe(), self.peek().describe()),
            })
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<()> {
        self.expect(&Tok::Eof)
    }

    pub(crate) fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(&Tok::Plus) {
                terms.push(self.term()?);
            } else if self.eat(&Tok::Minus) {
                let t = self.term()?;
                terms.push(Expr::mul(vec![Expr::int(-1), t]));
            } else {
                break;
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        loop {
            if self.eat(&Tok::Star) {
                factors.push(self.factor()?);
            } else if self.eat(&Tok::Slash) {
                let f = self.factor()?;
                factors.push(Expr::pow(f, Expr::int(-1)));
            } else {
                break;
            }
        }
        Ok(Expr::mul(factors))
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            let f = self.factor()?;
            return Ok(Expr::mul(vec![Expr::int(-1), f]));
        }
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let exp = self.atom()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Expr::rat(Rat::from_integer(n))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.expr()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(&Tok::RParen)?;
                    self.resolve_call(name, args, pos)
                } else {
                    if Builtin::from_name(&name).is_some() {
                        return Err(Error::Syntax {
                            pos,
                            msg: format!("reserved function name {name} used without arguments"),
                        });
                    }
                    Ok(Expr::var(&name))
                }
            }
            other => Err(Error::Syntax {
                pos,
                msg: format!("expected atom, found {}", other.describe()),
            }),
        }
    }

    fn resolve_call(&mut self, name: String, mut args: Vec<Expr>, pos: usize) -> Result<Expr> {
        if let Some(b) = Builtin::from_name(&name) {
            if args.len() != 1 {
                return Err(Error::Arity {
                    name,
                    expected: 1,
                    got: args.len(),
                });
            }
            return Ok(Expr::fun(b, args.pop().unwrap()));
        }
        let (base, deriv) = split_deriv(&name, args.len());
        match self.sess.arities.get(&base) {
            Some(&n) if n != args.len() => {
                return Err(Error::Arity {
                    name: base,
                    expected: n,
                    got: args.len(),
                })
            }
            Some(_) => {}
            None => {
                self.sess.arities.insert(base.clone(), args.len());
            }
        }
        let _ = pos;
        Ok(Expr::call_deriv(&base, deriv, args))
    }
}

/// Split a trailing derivative multi-index off an identifier when the number
/// of trailing integer segments matches the argument count, e.g.
/// ("F_2_1", 2) -> ("F", [2, 1]). Otherwise the whole identifier is the name.
fn split_deriv(name: &str, argc: usize) -> (String, Vec<u32>) {
    if argc >= 1 {
        let parts: Vec<&str> = name.split('_').collect();
        if parts.len() >= argc + 1 {
            let tail = &parts[parts.len() - argc..];
            if tail
                .iter()
                .all(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && s.len() <= 4)
            {
                let base = parts[..parts.len() - argc].join("_");
                if !base.is_empty() && Builtin::from_name(&base).is_none() {
                    let deriv = tail.iter().map(|s| s.parse().unwrap()).collect();
                    return (base, deriv);
                }
            }
        }
    }
    (name.to_string(), vec![0; argc])
}
