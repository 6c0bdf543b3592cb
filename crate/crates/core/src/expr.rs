//! Coefficient expressions in the time variable `t`.
//!
//! The grammar is intentionally tiny so that every expression has a closed-form
//! derivative:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? integer)?
//! atom   := number | 't' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp | sqrt
//! ```

use std::fmt;

use thiserror::Error;

/// Parse failure with the 1-based column and offending token.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message} (at `{token}`)")]
pub struct ExprError {
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(tok) = p.peek() {
            return Err(tok.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::T => t,
            Expr::Add(a, b) => a.eval(t) + b.eval(t),
            Expr::Sub(a, b) => a.eval(t) - b.eval(t),
            Expr::Mul(a, b) => a.eval(t) * b.eval(t),
            Expr::Div(a, b) => a.eval(t) / b.eval(t),
            Expr::Neg(a) => -a.eval(t),
            Expr::Pow(a, n) => a.eval(t).powi(*n),
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }

    /// Symbolic derivative with respect to `t`, simplified.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        let d = match self {
            Num(_) => Num(0.0),
            T => Num(1.0),
            Add(a, b) => Add(bx(a.derivative()), bx(b.derivative())),
            Sub(a, b) => Sub(bx(a.derivative()), bx(b.derivative())),
            Mul(a, b) => Add(
                bx(Mul(bx(a.derivative()), b.clone())),
                bx(Mul(a.clone(), bx(b.derivative()))),
            ),
            Div(a, b) => Div(
                bx(Sub(
                    bx(Mul(bx(a.derivative()), b.clone())),
                    bx(Mul(a.clone(), bx(b.derivative()))),
                )),
                bx(Pow(b.clone(), 2)),
            ),
            Neg(a) => Neg(bx(a.derivative())),
            Pow(a, n) => Mul(
                bx(Mul(bx(Num(*n as f64)), bx(Pow(a.clone(), n - 1)))),
                bx(a.derivative()),
            ),
            Call(f, a) => {
                let inner = a.derivative();
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => Neg(bx(Call(Func::Sin, a.clone()))),
                    Func::Exp => Call(Func::Exp, a.clone()),
                    Func::Sqrt => Div(bx(Num(0.5)), bx(Call(Func::Sqrt, a.clone()))),
                };
                Mul(bx(outer), bx(inner))
            }
        };
        d.simplify()
    }

    /// Constant folding and removal of neutral elements.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        match self {
            Num(_) | T => self.clone(),
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x + y),
                (Num(z), e) | (e, Num(z)) if z == 0.0 => e,
                (x, Neg(y)) => Sub(bx(x), y),
                (x, y) => Add(bx(x), bx(y)),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x - y),
                (e, Num(0.0)) => e,
                (Num(0.0), e) => Neg(bx(e)).simplify(),
                (x, Neg(y)) => Add(bx(x), y),
                (x, y) => Sub(bx(x), bx(y)),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x * y),
                (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
                (Num(o), e) | (e, Num(o)) if o == 1.0 => e,
                (Num(x), Mul(inner_a, inner_b)) if matches!(*inner_a, Num(_)) => {
                    let Num(y) = *inner_a else { unreachable!() };
                    Mul(bx(Num(x * y)), inner_b).simplify()
                }
                (Num(x), Neg(e)) | (Neg(e), Num(x)) => Mul(bx(Num(-x)), e).simplify(),
                (e, Num(x)) => Mul(bx(Num(x)), bx(e)).simplify(),
                (Neg(x), Neg(y)) => Mul(x, y),
                (Neg(x), y) | (y, Neg(x)) => Neg(bx(Mul(x, bx(y)))),
                (x, y) => Mul(bx(x), bx(y)),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) if y != 0.0 => Num(x / y),
                (Num(0.0), _) => Num(0.0),
                (e, Num(1.0)) => e,
                (x, y) => Div(bx(x), bx(y)),
            },
            Neg(a) => match a.simplify() {
                Num(x) => Num(-x),
                Neg(e) => *e,
                e => Neg(bx(e)),
            },
            Pow(a, n) => match (a.simplify(), *n) {
                (_, 0) => Num(1.0),
                (e, 1) => e,
                (Num(x), n) => Num(x.powi(n)),
                (e, n) => Pow(bx(e), n),
            },
            Call(f, a) => match a.simplify() {
                Num(x) => Num(f.apply(x)),
                e => Call(*f, bx(e)),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(x) if *x < 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x}"),
            Expr::T => write!(f, "t"),
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, "+")?;
                write_child(f, b, 1)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, "-")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 4)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 2)
            }
            Expr::Pow(a, n) => {
                write_child(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
    text: String,
}

impl Token {
    fn error(&self, message: &str) -> ExprError {
        ExprError {
            column: self.column,
            token: self.text.clone(),
            message: message.to_string(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ExprError {
                column,
                token: text.clone(),
                message: "malformed number".into(),
            })?;
            out.push(Token { tok: Tok::Num(value), column, text });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(text.clone()), column, text });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Op(c), column, text: c.to_string() });
            i += 1;
        } else {
            return Err(ExprError {
                column,
                token: c.to_string(),
                message: "unexpected character".into(),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn eof_error(&self, message: &str) -> ExprError {
        let column = self.tokens.last().map(|t| t.column + t.text.len()).unwrap_or(1);
        ExprError {
            column,
            token: "<end>".into(),
            message: message.to_string(),
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token { tok: Tok::Op(c), .. }) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(tok.error(&format!("expected `{op}`"))),
            None => Err(self.eof_error(&format!("expected `{op}`"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(bx(lhs), bx(rhs))
            } else {
                Expr::Sub(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(bx(lhs), bx(rhs))
            } else {
                Expr::Div(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(bx(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let negative = if self.peek_op() == Some('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek().cloned() {
            Some(tok @ Token { tok: Tok::Num(v), .. }) => {
                if v.fract() != 0.0 || tok.text.contains(['.', 'e', 'E']) || v > i32::MAX as f64 {
                    return Err(tok.error("exponent must be an integer"));
                }
                self.pos += 1;
                let n = v as i32;
                Ok(Expr::Pow(bx(base), if negative { -n } else { n }))
            }
            Some(tok) => Err(tok.error("exponent must be an integer")),
            None => Err(self.eof_error("missing exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.eof_error("unexpected end of expression"));
        };
        self.pos += 1;
        match &tok.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let func = match name.as_str() {
                    "t" => return Ok(Expr::T),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    _ => return Err(tok.error("unknown identifier")),
                };
                self.expect_op('(')?;
                let arg = self.expr()?;
                self.expect_op(')')?;
                Ok(Expr::Call(func, bx(arg)))
            }
            Tok::Op(_) => Err(tok.error("unexpected operator")),
        }
    }
}

/// A scalar function of time together with its first two derivatives,
/// all obtained in closed form at parse time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFn {
    source: String,
    expr: Expr,
    first: Expr,
    second: Expr,
}

impl CoefficientFn {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let expr = Expr::parse(src)?;
        Ok(Self::from_expr_with_source(src.trim().to_string(), expr))
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expr_with_source(format!("{c}"), Expr::Num(c))
    }

    /// Wraps an already-built expression; the source text is its printed form.
    pub fn from_expr(expr: Expr) -> Self {
        Self::from_expr_with_source(expr.to_string(), expr)
    }

    fn from_expr_with_source(source: String, expr: Expr) -> Self {
        let first = expr.derivative();
        let second = first.derivative();
        CoefficientFn { source, expr, first, second }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn derivative_expr(&self) -> &Expr {
        &self.first
    }

    pub fn second_derivative_expr(&self) -> &Expr {
        &self.second
    }

    pub fn value(&self, t: f64) -> f64 {
        self.expr.eval(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.first.eval(t)
    }

    pub fn second_derivative(&self, t: f64) -> f64 {
        self.second.eval(t)
    }

    /// True when the expression does not depend on `t`.
    pub fn is_constant(&self) -> bool {
        matches!(self.first, Expr::Num(z) if z == 0.0)
    }
}

impl fmt::Display for CoefficientFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}
