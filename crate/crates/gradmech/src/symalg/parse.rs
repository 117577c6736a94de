//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := ['-'|'+'] term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := int ['/' uint] | ident ['^' uint] | 'exp' '(' expr ')' | '(' expr ')'
//! ```

use num_bigint::BigInt;

use crate::superalgebra::{Parity, Rational};

use super::expr::{linear_form_of, GradedExpr};
use super::table::{VarKind, VariableTable};
use super::SymError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SymError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().map(|(_, c)| c).collect()), pos));
            continue;
        }
        let t = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => return Err(SymError::Syntax { pos, msg: format!("unexpected character '{other}'") }),
        };
        out.push((t, pos));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

/// Non-fatal observations made while parsing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseWarning {
    /// An odd symbol raised to a power ≥ 2 vanished.
    OddSquare { name: String, pos: usize },
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    table: &'a VariableTable,
    warnings: Vec<ParseWarning>,
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
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SymError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(SymError::Syntax { pos: self.pos(), msg: format!("expected {what}") })
        }
    }

    fn uint(&mut self) -> Result<BigInt, SymError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(n),
            _ => Err(SymError::Syntax { pos, msg: "expected an unsigned integer".into() }),
        }
    }

    fn expr(&mut self) -> Result<GradedExpr, SymError> {
        let g = self.table.generators();
        let mut negate = false;
        match self.peek() {
            Tok::Minus => {
                self.bump();
                negate = true;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let first = self.term()?;
        let mut acc = if negate { -&first } else { first };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc.widened(g))
    }

    fn term(&mut self) -> Result<GradedExpr, SymError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<GradedExpr, SymError> {
        let g = self.table.generators();
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => {
                let mut q = Rational::from_integer(n);
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let dpos = self.pos();
                    let d = self.uint()?;
                    if d == BigInt::from(0) {
                        return Err(SymError::Syntax { pos: dpos, msg: "zero denominator".into() });
                    }
                    q /= Rational::from_integer(d);
                }
                Ok(GradedExpr::scalar(g, q))
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "exp" => {
                self.expect(Tok::LParen, "'(' after exp")?;
                let inner_pos = self.pos();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                let form = linear_form_of(&inner).map_err(|_| SymError::Syntax {
                    pos: inner_pos,
                    msg: "exp argument must be a homogeneous linear form in even variables".into(),
                })?;
                for (v, _) in &form.0 {
                    if self.table.parity(*v) != Parity::Even {
                        return Err(SymError::Syntax { pos: inner_pos, msg: "odd variable inside exp".into() });
                    }
                }
                Ok(GradedExpr::exp_of(g, form))
            }
            Tok::Ident(name) => {
                let v = self.table.lookup(&name).ok_or(SymError::UnknownIdentifier { name: name.clone(), pos })?;
                let base = GradedExpr::var(self.table, v);
                if *self.peek() != Tok::Caret {
                    return Ok(base);
                }
                self.bump();
                let epos = self.pos();
                let n = self.uint()?;
                let n: u32 = n
                    .try_into()
                    .map_err(|_| SymError::Syntax { pos: epos, msg: "exponent too large".into() })?;
                if n == 0 {
                    return Err(SymError::Syntax { pos: epos, msg: "exponent must be at least 1".into() });
                }
                let odd = self.table.parity(v) == Parity::Odd || matches!(self.table.kind(v), VarKind::GrassmannConst(_));
                if odd && n >= 2 {
                    self.warnings.push(ParseWarning::OddSquare { name, pos });
                    return Ok(GradedExpr::zero(g));
                }
                Ok(base.pow(n))
            }
            Tok::End => Err(SymError::Syntax { pos, msg: "unexpected end of input".into() }),
            other => Err(SymError::Syntax { pos, msg: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parses and reports warnings (e.g. vanishing odd squares).
pub fn parse_expr_with_warnings(text: &str, table: &VariableTable) -> Result<(GradedExpr, Vec<ParseWarning>), SymError> {
    let mut p = Parser { toks: lex(text)?, at: 0, table, warnings: Vec::new() };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(SymError::Syntax { pos: p.pos(), msg: "trailing input".into() });
    }
    Ok((e, p.warnings))
}

pub fn parse_expr(text: &str, table: &VariableTable) -> Result<GradedExpr, SymError> {
    parse_expr_with_warnings(text, table).map(|(e, _)| e)
}
