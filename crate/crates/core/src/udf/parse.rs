//! Recursive-descent parser for scalar expressions.
//!
//! ```text
//! expr    := or
//! or      := and (("||" | "or") and)*
//! and     := not (("&&" | "and") not)*
//! not     := ("!" | "not") not | cmp
//! cmp     := add (cmpop add)*          // a <= t <= b means a <= t && t <= b
//! add     := mul (("+" | "-") mul)*
//! mul     := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | string | null | ⊥ | true | false | ident
//!          | if(expr, expr, expr) | isNull(expr) | func(args) | "(" expr ")"
//! ```

use crate::error::{LaraError, Result};
use crate::udf::expr::{BinOp, Func, ScalarExpr};
use crate::udf::lex::{tokenize, Tok, Token};
use crate::value::Value;

/// A cursor over a token slice. The plan DSL drives one of these directly so
/// expressions can be embedded in statements.
pub struct TokenCursor<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> TokenCursor<'a> {
    pub fn new(toks: &'a [Token]) -> Self {
        TokenCursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    pub fn peek_tok(&self) -> Option<&'a Tok> {
        self.peek().map(|t| &t.tok)
    }

    pub fn peek_nth(&self, n: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    pub fn advance(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn error(&self, message: impl Into<String>) -> LaraError {
        let (line, column) = match self.peek().or_else(|| self.toks.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        };
        LaraError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek_tok(), Some(Tok::Sym(x)) if *x == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.describe())))
        }
    }

    /// Case-insensitive keyword test.
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek_tok(), Some(Tok::Ident(x)) if x.eq_ignore_ascii_case(kw))
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", self.describe())))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String> {
        match self.peek_tok() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error(format!("expected identifier, found {}", self.describe()))),
        }
    }

    pub fn expect_string(&mut self) -> Result<String> {
        match self.peek_tok() {
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error(format!("expected quoted name, found {}", self.describe()))),
        }
    }

    pub fn describe(&self) -> String {
        match self.peek_tok() {
            None => "end of input".into(),
            Some(Tok::Newline) => "end of line".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Int(i)) => format!("`{i}`"),
            Some(Tok::Float(x)) => format!("`{x}`"),
            Some(Tok::Str(s)) => format!("'{s}'"),
            Some(Tok::Bottom) => "`⊥`".into(),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    /// Skip newlines; used inside brackets where statements may wrap.
    pub fn skip_newlines(&mut self) {
        while matches!(self.peek_tok(), Some(Tok::Newline)) {
            self.pos += 1;
        }
    }

    pub fn parse_expr(&mut self) -> Result<ScalarExpr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.parse_and()?;
        while self.eat_sym("||") || self.eat_kw("or") {
            let rhs = self.parse_and()?;
            lhs = ScalarExpr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.parse_not()?;
        while self.eat_sym("&&") || self.eat_kw("and") {
            let rhs = self.parse_not()?;
            lhs = ScalarExpr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_not(&mut self) -> Result<ScalarExpr> {
        if self.eat_sym("!") || self.eat_kw("not") {
            let inner = self.parse_not()?;
            return Ok(ScalarExpr::Not(Box::new(inner)));
        }
        self.parse_cmp()
    }

    fn cmp_op(&self) -> Option<BinOp> {
        match self.peek_tok() {
            Some(Tok::Sym("=")) => Some(BinOp::Eq),
            Some(Tok::Sym("!=")) => Some(BinOp::Ne),
            Some(Tok::Sym("<")) => Some(BinOp::Lt),
            Some(Tok::Sym("<=")) => Some(BinOp::Le),
            Some(Tok::Sym(">")) => Some(BinOp::Gt),
            Some(Tok::Sym(">=")) => Some(BinOp::Ge),
            _ => None,
        }
    }

    fn parse_cmp(&mut self) -> Result<ScalarExpr> {
        let first = self.parse_add()?;
        let mut result: Option<ScalarExpr> = None;
        let mut left = first.clone();
        while let Some(op) = self.cmp_op() {
            self.pos += 1;
            let right = self.parse_add()?;
            let term = ScalarExpr::binary(op, left, right.clone());
            result = Some(match result {
                None => term,
                Some(prev) => ScalarExpr::binary(BinOp::And, prev, term),
            });
            left = right;
        }
        Ok(result.unwrap_or(first))
    }

    fn parse_add(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                break;
            };
            let rhs = self.parse_mul()?;
            lhs = ScalarExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_mul(&mut self) -> Result<ScalarExpr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                break;
            };
            let rhs = self.parse_unary()?;
            lhs = ScalarExpr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<ScalarExpr> {
        if self.eat_sym("-") {
            let inner = self.parse_unary()?;
            return Ok(match inner {
                ScalarExpr::Lit(Value::Int(i)) => ScalarExpr::Lit(Value::Int(i.wrapping_neg())),
                ScalarExpr::Lit(Value::Float(f)) => ScalarExpr::Lit(Value::Float(-f)),
                other => ScalarExpr::Neg(Box::new(other)),
            });
        }
        self.parse_primary()
    }

    fn parse_args(&mut self) -> Result<Vec<ScalarExpr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.parse_expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            self.expect_sym(",")?;
        }
    }

    fn parse_primary(&mut self) -> Result<ScalarExpr> {
        let tok = match self.peek_tok() {
            Some(t) => t.clone(),
            None => return Err(self.error("expected expression, found end of input")),
        };
        match tok {
            Tok::Int(i) => {
                self.pos += 1;
                Ok(ScalarExpr::Lit(Value::Int(i)))
            }
            Tok::Float(x) => {
                self.pos += 1;
                Ok(ScalarExpr::Lit(Value::Float(x)))
            }
            Tok::Str(s) => {
                self.pos += 1;
                Ok(ScalarExpr::Lit(Value::Str(s)))
            }
            Tok::Bottom => {
                self.pos += 1;
                Ok(ScalarExpr::null())
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let lower = name.to_ascii_lowercase();
                let is_call = matches!(self.peek_nth(1), Some(Tok::Sym("(")));
                match lower.as_str() {
                    "null" => {
                        self.pos += 1;
                        Ok(ScalarExpr::null())
                    }
                    "true" | "false" => {
                        self.pos += 1;
                        Ok(ScalarExpr::Lit(Value::Bool(lower == "true")))
                    }
                    "if" if is_call => {
                        self.pos += 1;
                        let args = self.parse_args()?;
                        let [c, t, e]: [ScalarExpr; 3] = args
                            .try_into()
                            .map_err(|_| self.error("if() takes three arguments"))?;
                        Ok(ScalarExpr::if_else(c, t, e))
                    }
                    "isnull" if is_call => {
                        self.pos += 1;
                        let mut args = self.parse_args()?;
                        if args.len() != 1 {
                            return Err(self.error("isNull() takes one argument"));
                        }
                        Ok(ScalarExpr::IsNull(Box::new(args.remove(0))))
                    }
                    _ if is_call => {
                        let func = Func::from_name(&lower)
                            .ok_or_else(|| self.error(format!("unknown function `{name}`")))?;
                        self.pos += 1;
                        let args = self.parse_args()?;
                        Ok(ScalarExpr::Call(func, args))
                    }
                    _ => {
                        self.pos += 1;
                        Ok(ScalarExpr::Attr(name))
                    }
                }
            }
            _ => Err(self.error(format!("expected expression, found {}", self.describe()))),
        }
    }
}

/// Parse a standalone expression.
pub fn parse_expr(src: &str) -> Result<ScalarExpr> {
    let toks: Vec<Token> = tokenize(src)?
        .into_iter()
        .filter(|t| t.tok != Tok::Newline)
        .collect();
    let mut cur = TokenCursor::new(&toks);
    let e = cur.parse_expr()?;
    if !cur.at_end() {
        return Err(cur.error(format!("unexpected {} after expression", cur.describe())));
    }
    Ok(e)
}
