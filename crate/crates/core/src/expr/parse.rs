//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 'x'N | 'u' '[' name (';' '(' n, ..., n ')')? ']'
//!         | head '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use super::{rational_is_integer, Context, DiffExpr, ExprError, Head, Rational};
use crate::multiindex::MultiIndex;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str) -> Result<Lexer, ExprError> {
    let bytes: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let c = bytes[p];
        if c.is_whitespace() {
            p += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(p + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = p;
            while p < bytes.len() && bytes[p].is_ascii_digit() {
                p += 1;
            }
            let int_part: String = bytes[start..p].iter().collect();
            let mut value = if int_part.is_empty() {
                Rational::zero()
            } else {
                Rational::from_integer(int_part.parse::<BigInt>().expect("digits"))
            };
            if p < bytes.len() && bytes[p] == '.' {
                p += 1;
                let fs = p;
                while p < bytes.len() && bytes[p].is_ascii_digit() {
                    p += 1;
                }
                let frac: String = bytes[fs..p].iter().collect();
                if !frac.is_empty() {
                    let num: BigInt = frac.parse().expect("digits");
                    let den = BigInt::from(10u32).pow(frac.len() as u32);
                    value += Rational::new(num, den);
                }
            }
            toks.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = p;
            while p < bytes.len() && (bytes[p].is_ascii_alphanumeric() || bytes[p] == '_') {
                p += 1;
            }
            toks.push((Tok::Ident(bytes[start..p].iter().collect()), start));
        } else if "+-*/^()[];,".contains(c) {
            toks.push((Tok::Sym(c), p));
            p += 1;
        } else {
            return Err(ExprError::Syntax { pos: p, msg: format!("unexpected character {c:?}") });
        }
    }
    toks.push((Tok::End, bytes.len()));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    ctx: &'a Context,
}

/// Parses `text` into a canonical expression over `ctx`.
pub fn parse(text: &str, ctx: &Context) -> Result<DiffExpr, ExprError> {
    let Lexer { toks } = lex(text)?;
    let mut p = Parser { toks, at: 0, ctx };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.err(format!("unexpected {}", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number {n}"),
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Sym(c) => format!("{c:?}"),
        Tok::End => "end of input".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: String) -> ExprError {
        ExprError::Syntax { pos: self.pos(), msg }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}, found {}", describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<DiffExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    acc = acc + self.term()?;
                }
                Tok::Sym('-') => {
                    self.bump();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<DiffExpr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Sym('/') => {
                    let pos = self.pos();
                    self.bump();
                    let d = self.unary()?;
                    acc = acc * self.reciprocal(d, pos)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn reciprocal(&self, d: DiffExpr, pos: usize) -> Result<DiffExpr, ExprError> {
        match d.as_constant() {
            Some(c) if c.is_zero() => Err(ExprError::DivisionByZero),
            Some(c) => Ok(DiffExpr::constant(c.recip())),
            None if self.ctx.transcendental() => DiffExpr::apply(Head::Inv, d),
            None => Err(ExprError::Syntax {
                pos,
                msg: ExprError::NonConstantDivisor.to_string(),
            }),
        }
    }

    fn unary(&mut self) -> Result<DiffExpr, ExprError> {
        match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                Ok(-self.unary()?)
            }
            Tok::Sym('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<DiffExpr, ExprError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        let pos = self.pos();
        self.bump();
        let exp = self.unary()?;
        let n = exp
            .as_constant()
            .as_ref()
            .and_then(rational_is_integer)
            .ok_or(ExprError::Syntax { pos, msg: ExprError::NonIntegerExponent.to_string() })?;
        if n >= 0 {
            let n = u32::try_from(n).map_err(|_| self.err("exponent too large".into()))?;
            return Ok(base.pow(n));
        }
        let n = u32::try_from(-n).map_err(|_| self.err("exponent too large".into()))?;
        Ok(self.reciprocal(base, pos)?.pow(n))
    }

    fn atom(&mut self) -> Result<DiffExpr, ExprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(n) => Ok(DiffExpr::constant(n)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "u" && *self.peek() == Tok::Sym('[') => self.jet(),
            Tok::Ident(name) => {
                if let Some(head) = Head::from_name(&name) {
                    if !self.ctx.transcendental() {
                        return Err(ExprError::Transcendental(format!("function {name}")));
                    }
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return DiffExpr::apply(head, arg);
                }
                if let Some(digits) = name.strip_prefix('x') {
                    if let Ok(k) = digits.parse::<usize>() {
                        if (1..=self.ctx.m()).contains(&k) && !digits.starts_with('0') {
                            return Ok(DiffExpr::x(k - 1));
                        }
                        return Err(ExprError::Syntax {
                            pos,
                            msg: format!("independent variable {name} out of range 1..={}", self.ctx.m()),
                        });
                    }
                }
                Err(ExprError::Syntax { pos, msg: format!("unknown identifier {name:?}") })
            }
            t => Err(ExprError::Syntax { pos, msg: format!("unexpected {}", describe(&t)) }),
        }
    }

    fn jet(&mut self) -> Result<DiffExpr, ExprError> {
        self.expect('[')?;
        let name = match self.bump() {
            Tok::Ident(s) => s,
            t => return Err(self.err(format!("expected dependent name, found {}", describe(&t)))),
        };
        let alpha = self.ctx.dep_index(&name).ok_or(ExprError::UnknownDependent(name))?;
        let index = if *self.peek() == Tok::Sym(';') {
            self.bump();
            self.expect('(')?;
            let mut entries = Vec::new();
            loop {
                match self.bump() {
                    Tok::Num(n) if n.is_integer() && n >= Rational::zero() => {
                        let v = rational_is_integer(&n)
                            .and_then(|v| u32::try_from(v).ok())
                            .ok_or_else(|| self.err("index entry too large".into()))?;
                        entries.push(v);
                    }
                    t => return Err(self.err(format!("expected index entry, found {}", describe(&t)))),
                }
                match self.bump() {
                    Tok::Sym(',') => continue,
                    Tok::Sym(')') => break,
                    t => return Err(self.err(format!("expected ',' or ')', found {}", describe(&t)))),
                }
            }
            let i = MultiIndex::new(entries);
            self.ctx.check_index(&i)?;
            i
        } else {
            self.ctx.zero_index()
        };
        self.expect(']')?;
        Ok(DiffExpr::u(alpha, index))
    }
}

