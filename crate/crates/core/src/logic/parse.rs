//! Concrete syntax for formulas, value expressions and intervals.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Formula, IntervalPredicate, Label, Linear, LogicError, Result, ValueExpr};

fn syntax(pos: usize, msg: impl Into<String>) -> LogicError {
    LogicError::Syntax {
        pos,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Num(f64),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if ch.is_ascii_digit() || ch == b'.' {
            let mut is_float = false;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                is_float |= bytes[i] == b'.';
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s = &text[start..i];
            let tok = if is_float {
                Tok::Num(s.parse().map_err(|_| syntax(start, format!("bad number `{s}`")))?)
            } else {
                Tok::Int(s.parse().map_err(|_| syntax(start, format!("bad integer `{s}`")))?)
            };
            out.push((start, tok));
        } else {
            let sym = match (ch, bytes.get(i + 1)) {
                (b'-', Some(b'>')) => "->",
                (b'!', _) => "!",
                (b'&', _) => "&",
                (b'|', _) => "|",
                (b'(', _) => "(",
                (b')', _) => ")",
                (b'[', _) => "[",
                (b']', _) => "]",
                (b'^', _) => "^",
                (b'+', _) => "+",
                (b'-', _) => "-",
                (b'*', _) => "*",
                (b'/', _) => "/",
                (b',', _) => ",",
                _ => {
                    let c = text[i..].chars().next().unwrap_or('?');
                    return Err(syntax(i, format!("unexpected character `{c}`")));
                }
            };
            i += sym.len();
            out.push((start, Tok::Sym(sym)));
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Cursor {
    fn new(text: &str) -> Result<Self> {
        Ok(Cursor {
            toks: tokenize(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected `{sym}`")))
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.toks.len() {
            Err(syntax(self.offset(), "unexpected trailing input"))
        } else {
            Ok(())
        }
    }
}

/// Parses a formula. `->` is right-associative and binds loosest, then `|`,
/// then `&`; `!`, `X`, `X^k`, `E`, `G` are prefix operators.
pub fn parse_formula(text: &str, labels: &[Label]) -> Result<Formula> {
    let mut cur = Cursor::new(text)?;
    if cur.toks.is_empty() {
        return Err(syntax(0, "empty formula"));
    }
    let f = implies(&mut cur, labels)?;
    cur.finish()?;
    Ok(f)
}

fn implies(cur: &mut Cursor, labels: &[Label]) -> Result<Formula> {
    let lhs = or(cur, labels)?;
    if cur.eat("->") {
        let rhs = implies(cur, labels)?;
        Ok(Formula::implies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn or(cur: &mut Cursor, labels: &[Label]) -> Result<Formula> {
    let mut lhs = and(cur, labels)?;
    while cur.eat("|") {
        let rhs = and(cur, labels)?;
        lhs = Formula::or(lhs, rhs);
    }
    Ok(lhs)
}

fn and(cur: &mut Cursor, labels: &[Label]) -> Result<Formula> {
    let mut lhs = unary(cur, labels)?;
    while cur.eat("&") {
        let rhs = unary(cur, labels)?;
        lhs = Formula::and(lhs, rhs);
    }
    Ok(lhs)
}

fn unary(cur: &mut Cursor, labels: &[Label]) -> Result<Formula> {
    let at = cur.offset();
    match cur.bump() {
        Some(Tok::Sym("!")) => Ok(Formula::not(unary(cur, labels)?)),
        Some(Tok::Sym("(")) => {
            let f = implies(cur, labels)?;
            cur.expect(")")?;
            Ok(f)
        }
        Some(Tok::Ident(id)) => match id.as_str() {
            "X" => {
                let k = if cur.eat("^") {
                    match cur.bump() {
                        Some(Tok::Int(k)) => u32::try_from(k)
                            .map_err(|_| syntax(at, "exponent too large"))?,
                        _ => return Err(syntax(cur.offset(), "expected an integer exponent")),
                    }
                } else {
                    1
                };
                Ok(Formula::next_k(unary(cur, labels)?, k))
            }
            "E" => Ok(Formula::eventually(unary(cur, labels)?)),
            "G" => Ok(Formula::globally(unary(cur, labels)?)),
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::not(Formula::True)),
            name => {
                if labels.iter().any(|l| l.name() == name) {
                    Ok(Formula::label(name))
                } else {
                    Err(LogicError::UnknownLabel(name.to_string()))
                }
            }
        },
        Some(_) => Err(syntax(at, "expected a formula")),
        None => Err(syntax(at, "unexpected end of formula")),
    }
}

// ---- value expressions ----------------------------------------------------

#[derive(Debug, Clone)]
enum Ast {
    Lin(Linear),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
}

impl Ast {
    fn linear(&self) -> Option<&Linear> {
        match self {
            Ast::Lin(l) => Some(l),
            _ => None,
        }
    }
}

/// Parses `val(N+o)`, `val(j)`, numbers, `+ - * /` and parentheses. Scaling
/// by constants is folded into linear forms; a product of two non-constant
/// linear forms or a quotient is only allowed at the top level.
pub fn parse_expr(text: &str) -> Result<ValueExpr> {
    let mut cur = Cursor::new(text)?;
    let ast = sum(&mut cur)?;
    cur.finish()?;
    let e = match ast {
        Ast::Lin(l) => ValueExpr::Linear(l),
        Ast::Mul(a, b) => {
            let (a, b) = (a.linear().cloned(), b.linear().cloned());
            match (a, b) {
                (Some(a), Some(b)) => ValueExpr::product(a, b),
                _ => return Err(LogicError::InvalidExpr("nested product".into())),
            }
        }
        Ast::Div(a, b) => {
            let (a, b) = (a.linear().cloned(), b.linear().cloned());
            match (a, b) {
                (Some(a), Some(b)) => ValueExpr::ratio(a, b)?,
                _ => return Err(LogicError::InvalidExpr("nested quotient".into())),
            }
        }
    };
    e.validate()?;
    Ok(e)
}

fn sum(cur: &mut Cursor) -> Result<Ast> {
    let mut lhs = term(cur)?;
    loop {
        let sign = if cur.eat("+") {
            1.0
        } else if cur.eat("-") {
            -1.0
        } else {
            return Ok(lhs);
        };
        let at = cur.offset();
        let rhs = term(cur)?;
        lhs = match (&lhs, &rhs) {
            (Ast::Lin(a), Ast::Lin(b)) => Ast::Lin(a.add(&b.scale(sign))),
            _ => {
                return Err(LogicError::InvalidExpr(format!(
                    "products and quotients cannot be added (at {at})"
                )))
            }
        };
    }
}

fn term(cur: &mut Cursor) -> Result<Ast> {
    let mut lhs = factor(cur)?;
    loop {
        let is_mul = if cur.eat("*") {
            true
        } else if cur.eat("/") {
            false
        } else {
            return Ok(lhs);
        };
        let rhs = factor(cur)?;
        lhs = combine(lhs, rhs, is_mul)?;
    }
}

fn combine(lhs: Ast, rhs: Ast, is_mul: bool) -> Result<Ast> {
    if let (Ast::Lin(a), Ast::Lin(b)) = (&lhs, &rhs) {
        if is_mul {
            if b.is_constant() {
                return Ok(Ast::Lin(a.scale(b.constant)));
            }
            if a.is_constant() {
                return Ok(Ast::Lin(b.scale(a.constant)));
            }
        } else if b.is_constant() {
            if b.constant == 0.0 {
                return Err(LogicError::InvalidExpr("division by zero".into()));
            }
            return Ok(Ast::Lin(a.scale(1.0 / b.constant)));
        }
    }
    if lhs.linear().is_none() || rhs.linear().is_none() {
        return Err(LogicError::InvalidExpr(
            "only two linear expressions may be multiplied or divided".into(),
        ));
    }
    Ok(if is_mul {
        Ast::Mul(Box::new(lhs), Box::new(rhs))
    } else {
        Ast::Div(Box::new(lhs), Box::new(rhs))
    })
}

fn factor(cur: &mut Cursor) -> Result<Ast> {
    let at = cur.offset();
    match cur.bump() {
        Some(Tok::Sym("-")) => match factor(cur)? {
            Ast::Lin(l) => Ok(Ast::Lin(l.scale(-1.0))),
            _ => Err(LogicError::InvalidExpr("cannot negate a product".into())),
        },
        Some(Tok::Sym("+")) => factor(cur),
        Some(Tok::Sym("(")) => {
            let a = sum(cur)?;
            cur.expect(")")?;
            Ok(a)
        }
        Some(Tok::Int(k)) => Ok(Ast::Lin(Linear::constant(k as f64))),
        Some(Tok::Num(x)) => Ok(Ast::Lin(Linear::constant(x))),
        Some(Tok::Ident(id)) if id == "val" => {
            cur.expect("(")?;
            let r = match cur.bump() {
                Some(Tok::Ident(n)) if n == "N" => {
                    if cur.eat("+") {
                        match cur.bump() {
                            Some(Tok::Int(o)) => {
                                let o = u32::try_from(o)
                                    .map_err(|_| LogicError::OffsetTooLarge(u32::MAX))?;
                                Linear::val(o)
                            }
                            _ => return Err(syntax(cur.offset(), "expected an offset")),
                        }
                    } else {
                        Linear::val(0)
                    }
                }
                Some(Tok::Int(j)) => {
                    if j == 0 {
                        return Err(LogicError::SizeOutOfRange(0));
                    }
                    Linear::fixed(j)
                }
                _ => return Err(syntax(cur.offset(), "expected `N`, `N+o` or a size")),
            };
            cur.expect(")")?;
            Ok(Ast::Lin(r))
        }
        Some(Tok::Ident(id)) if id == "inf" => Err(syntax(at, "infinite constant")),
        Some(_) => Err(syntax(at, "expected a value")),
        None => Err(syntax(at, "unexpected end of expression")),
    }
}

// ---- intervals -------------------------------------------------------------

/// Parses `(a, b)`, `[a, b]`, `(a, b]`, `[a, b)` with `inf` / `-inf`.
pub fn parse_interval(text: &str) -> Result<IntervalPredicate> {
    let mut cur = Cursor::new(text)?;
    let lower_open = if cur.eat("(") {
        true
    } else if cur.eat("[") {
        false
    } else {
        return Err(syntax(cur.offset(), "expected `(` or `[`"));
    };
    let lower = bound(&mut cur)?;
    cur.expect(",")?;
    let upper = bound(&mut cur)?;
    let upper_open = if cur.eat(")") {
        true
    } else if cur.eat("]") {
        false
    } else {
        return Err(syntax(cur.offset(), "expected `)` or `]`"));
    };
    cur.finish()?;
    IntervalPredicate::new(lower, upper, lower_open, upper_open)
}

fn bound(cur: &mut Cursor) -> Result<f64> {
    let neg = if cur.eat("-") {
        true
    } else {
        cur.eat("+");
        false
    };
    let at = cur.offset();
    let v = match cur.bump() {
        Some(Tok::Int(k)) => k as f64,
        Some(Tok::Num(x)) => x,
        Some(Tok::Ident(id)) if id == "inf" || id == "infinity" => f64::INFINITY,
        _ => return Err(syntax(at, "expected a bound")),
    };
    Ok(if neg { -v } else { v })
}
