//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```

use super::{BinOp, FuncExpr, UnOp, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
            return Ok((Tok::Ident(s.to_string()), start));
        }
        self.pos += 1;
        let t = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let ch = std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok((t, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize)> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(|b| b.is_ascii_digit()) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(Error::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let v: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !v.is_finite() {
            return Err(Error::Syntax {
                offset: start,
                message: format!("number `{text}` out of range"),
            });
        }
        Ok((Tok::Num(v), start))
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<()> {
        let (t, at) = self.lex.next()?;
        self.tok = t;
        self.at = at;
        Ok(())
    }

    fn unexpected<T>(&self) -> Result<T> {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(v) => format!("unexpected number `{v}`"),
            Tok::Ident(s) => format!("unexpected identifier `{s}`"),
            Tok::Op(c) => format!("unexpected `{c}`"),
            Tok::LParen => "unexpected `(`".to_string(),
            Tok::RParen => "unexpected `)`".to_string(),
        };
        Err(Error::Syntax {
            offset: self.at,
            message,
        })
    }

    fn expr(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = FuncExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.factor()?;
            lhs = FuncExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<FuncExpr> {
        let base = self.base()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exp = self.factor()?;
            return Ok(FuncExpr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<FuncExpr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(FuncExpr::Const(v))
            }
            Tok::Op('-') => {
                self.bump()?;
                let inner = self.base()?;
                Ok(FuncExpr::Unary(UnOp::Neg, Box::new(inner)))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                let func = match name.as_str() {
                    "alpha" => {
                        self.bump()?;
                        return Ok(FuncExpr::Var(Var::Alpha));
                    }
                    "lambda" => {
                        self.bump()?;
                        return Ok(FuncExpr::Var(Var::Lambda));
                    }
                    "exp" => UnOp::Exp,
                    "ln" => UnOp::Ln,
                    "sqrt" => UnOp::Sqrt,
                    "abs" => UnOp::Abs,
                    "sin" => UnOp::Sin,
                    _ => {
                        return Err(Error::UnknownIdentifier { name, offset: at });
                    }
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return Err(Error::Syntax {
                        offset: self.at,
                        message: format!("expected `(` after `{name}`"),
                    });
                }
                self.bump()?;
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(FuncExpr::Unary(func, Box::new(arg)))
            }
            _ => self.unexpected(),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        if self.tok != Tok::RParen {
            if self.tok == Tok::End {
                return Err(Error::Syntax {
                    offset: self.at,
                    message: "expected `)`".into(),
                });
            }
            return self.unexpected();
        }
        self.bump()
    }
}

/// Parses DSL text into an expression tree. Errors carry byte offsets.
pub fn parse_expr(text: &str) -> Result<FuncExpr> {
    let mut p = Parser {
        lex: Lexer {
            src: text.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        at: 0,
    };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.unexpected();
    }
    if e.uses_both() {
        return Err(Error::MixedVariables);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> FuncExpr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn exp_of_quotient() {
        let e = p("exp(-1/alpha)");
        let want = FuncExpr::Unary(
            UnOp::Exp,
            Box::new(FuncExpr::Binary(
                BinOp::Div,
                Box::new(FuncExpr::Unary(UnOp::Neg, Box::new(FuncExpr::Const(1.0)))),
                Box::new(FuncExpr::Var(Var::Alpha)),
            )),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn quotient_tree() {
        match p("lambda/(1+lambda)") {
            FuncExpr::Binary(BinOp::Div, a, b) => {
                assert_eq!(*a, FuncExpr::Var(Var::Lambda));
                assert!(matches!(*b, FuncExpr::Binary(BinOp::Add, _, _)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn double_caret_offset() {
        match parse_expr("alpha^^2") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn power_is_right_assoc() {
        let e = p("2^3^2");
        assert_eq!(e.eval_with(&[]).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_binds_to_base() {
        // (-2)^2, not -(2^2)
        assert_eq!(p("-2^2").eval_with(&[]).unwrap(), 4.0);
        assert_eq!(p("1 - 2 - 3").eval_with(&[]).unwrap(), -4.0);
        assert_eq!(p("8/2/2").eval_with(&[]).unwrap(), 2.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_expr("foo(alpha)"),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(parse_expr("alpha+lambda"), Err(Error::MixedVariables)));
        assert!(matches!(parse_expr(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expr("(alpha"), Err(Error::Syntax { offset: 6, .. })));
        assert!(matches!(parse_expr("alpha)"), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse_expr("exp alpha"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse_expr("2 # 3"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_expr("1e999"), Err(Error::Syntax { offset: 0, .. })));
    }

    #[test]
    fn numbers() {
        assert_eq!(p("1.5e-3").eval_with(&[]).unwrap(), 1.5e-3);
        assert_eq!(p(".5").eval_with(&[]).unwrap(), 0.5);
        assert_eq!(p("2E2").eval_with(&[]).unwrap(), 200.0);
    }
}
