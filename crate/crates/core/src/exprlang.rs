//! A small expression language for scalar functions of `t`.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = atom [ "^" [ "-" | "+" ] integer ] ;
//! atom    = number | "t" | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "sin" | "cos" | "log" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! Whitespace is ignored. There is no implicit multiplication, and
//! exponents are integer literals only; write `t^r` as `exp(r*log(t))`.

use std::fmt;

use crate::error::{Error, Result};
use crate::jets::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

/// Expression tree. Literals produced by the parser are finite and
/// nonnegative; negation is always an explicit [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var,
    Num(f64),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Var | Expr::Num(_) | Expr::Call(..) => 5,
        }
    }

    /// `sum_i coeffs[i] * terms[i]`, skipping zero coefficients.
    pub fn linear_combination(coeffs: &[f64], terms: &[Expr]) -> Expr {
        let mut acc: Option<Expr> = None;
        for (c, e) in coeffs.iter().zip(terms) {
            if *c == 0.0 {
                continue;
            }
            let scaled = if c.abs() == 1.0 {
                e.clone()
            } else {
                Expr::Mul(Box::new(Expr::Num(c.abs())), Box::new(e.clone()))
            };
            acc = Some(match (acc, *c < 0.0) {
                (None, false) => scaled,
                (None, true) => Expr::Neg(Box::new(scaled)),
                (Some(a), false) => Expr::Add(Box::new(a), Box::new(scaled)),
                (Some(a), true) => Expr::Sub(Box::new(a), Box::new(scaled)),
            });
        }
        acc.unwrap_or(Expr::Num(0.0))
    }

    /// Jet of the expression at `t0` to the given order.
    pub fn eval_jet(&self, t0: f64, order: usize) -> Result<Jet> {
        Ok(match self {
            Expr::Var => Jet::variable(t0, order),
            Expr::Num(v) => Jet::constant(t0, *v, order),
            Expr::Neg(e) => e.eval_jet(t0, order)?.scale(-1.0),
            Expr::Add(a, b) => a.eval_jet(t0, order)?.try_add(&b.eval_jet(t0, order)?)?,
            Expr::Sub(a, b) => a.eval_jet(t0, order)?.try_sub(&b.eval_jet(t0, order)?)?,
            Expr::Mul(a, b) => a.eval_jet(t0, order)?.try_mul(&b.eval_jet(t0, order)?)?,
            Expr::Div(a, b) => a.eval_jet(t0, order)?.try_div(&b.eval_jet(t0, order)?)?,
            Expr::Pow(b, e) => b.eval_jet(t0, order)?.powi(*e)?,
            Expr::Call(f, e) => {
                let inner = e.eval_jet(t0, order)?;
                let out = match f {
                    Func::Exp => inner.exp(),
                    Func::Sin => inner.sin(),
                    Func::Cos => inner.cos(),
                    Func::Log => inner.ln()?,
                };
                if !out.coeffs().iter().all(|c| c.is_finite()) {
                    return Err(Error::DomainViolation(format!(
                        "{}(...) overflows at t = {t0}",
                        f.name()
                    )));
                }
                out
            }
        })
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, p: u8| {
            a.fmt_child(f, p)?;
            write!(f, " {op} ")?;
            b.fmt_child(f, p + 1)
        };
        match self {
            Expr::Var => write!(f, "t"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.fmt_child(f, 3)
            }
            Expr::Add(a, b) => binary(f, a, "+", b, 1),
            Expr::Sub(a, b) => binary(f, a, "-", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Pow(b, e) => {
                b.fmt_child(f, 5)?;
                write!(f, "^{e}")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, integer: bool },
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

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, start));
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let mut integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            if !value.is_finite() {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("number '{text}' is out of range"),
                });
            }
            out.push((Tok::Num { value, integer }, start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let ch = src[start..].chars().next().expect("in bounds");
            return Err(Error::Syntax {
                offset: start,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            lhs = match self.peek() {
                Tok::Plus => {
                    self.bump();
                    Expr::Add(Box::new(lhs), Box::new(self.term()?))
                }
                Tok::Minus => {
                    self.bump();
                    Expr::Sub(Box::new(lhs), Box::new(self.term()?))
                }
                _ => return Ok(lhs),
            };
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            lhs = match self.peek() {
                Tok::Star => {
                    self.bump();
                    Expr::Mul(Box::new(lhs), Box::new(self.unary()?))
                }
                Tok::Slash => {
                    self.bump();
                    Expr::Div(Box::new(lhs), Box::new(self.unary()?))
                }
                _ => return Ok(lhs),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        let at = self.offset();
        match self.peek().clone() {
            Tok::Num { integer: false, .. } => Err(Error::NonIntegerExponent { offset: at }),
            Tok::Num {
                value,
                integer: true,
            } => {
                self.bump();
                let signed = if negative { -value } else { value };
                if signed.abs() > i32::MAX as f64 {
                    return Err(Error::Syntax {
                        offset: at,
                        message: "exponent out of range".into(),
                    });
                }
                Ok(Expr::Pow(Box::new(base), signed as i32))
            }
            _ => self.error("expected an integer exponent"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num { value, .. } => {
                self.bump();
                Ok(Expr::Num(value))
            }
            Tok::Ident(name) => {
                if name == "t" {
                    self.bump();
                    return Ok(Expr::Var);
                }
                let Some(func) = Func::from_name(&name) else {
                    return self.error(format!("unknown identifier '{name}'"));
                };
                self.bump();
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::End => self.error("unexpected end of input"),
            _ => self.error("expected a number, 't', a function or '('"),
        }
    }
}

/// Parses a complete expression.
pub fn parse_expr(source: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}

/// One scalar component function together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    source: String,
    ast: Expr,
}

impl FunctionSpec {
    pub fn from_expr(ast: Expr) -> Self {
        Self {
            source: ast.to_string(),
            ast,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval_jet(&self, t0: f64, order: usize) -> Result<Jet> {
        self.ast.eval_jet(t0, order)
    }

    pub fn eval(&self, t0: f64) -> Result<f64> {
        Ok(self.eval_jet(t0, 0)?.value())
    }
}

/// Parses `source` into a [`FunctionSpec`].
pub fn parse(source: &str) -> Result<FunctionSpec> {
    Ok(FunctionSpec {
        source: source.to_string(),
        ast: parse_expr(source)?,
    })
}

/// Jet of `spec` at `t0`.
pub fn eval_jet(spec: &FunctionSpec, t0: f64, order: usize) -> Result<Jet> {
    spec.eval_jet(t0, order)
}

/// Open interval, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Width of the window used when one end of the domain is unbounded.
const HALF_OPEN_WINDOW: f64 = 4.0;

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::DomainViolation(format!(
                "empty interval ({lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }

    /// Finite window standing in for the interval when sampling:
    /// `[-1, 1]` for the whole line, a window of width 4 at a finite end.
    pub fn sampling_window(&self) -> (f64, f64) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + HALF_OPEN_WINDOW),
            (false, true) => (self.hi - HALF_OPEN_WINDOW, self.hi),
            (false, false) => (-1.0, 1.0),
        }
    }

    /// `count` uniform points over the sampling window shrunk by 5% of its
    /// width at each end.
    pub fn sample_grid(&self, count: usize) -> Vec<f64> {
        let (lo, hi) = self.sampling_window();
        let w = hi - lo;
        let (a, b) = (lo + 0.05 * w, hi - 0.05 * w);
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (a + b)],
            _ => (0..count)
                .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    }
}

impl Default for Interval {
    fn default() -> Self {
        Self::REAL_LINE
    }
}

/// An `R^n`-valued function given componentwise, with a domain hint.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFunctionSpec {
    components: Vec<FunctionSpec>,
    domain: Interval,
}

impl VectorFunctionSpec {
    pub fn new(components: Vec<FunctionSpec>, domain: Interval) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self { components, domain })
    }

    /// Parses every component source.
    pub fn parse<S: AsRef<str>>(sources: &[S], domain: Interval) -> Result<Self> {
        let components = sources
            .iter()
            .map(|s| parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(components, domain)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[FunctionSpec] {
        &self.components
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// Jets of every component at `t0`.
    pub fn jets(&self, t0: f64, order: usize) -> Result<Vec<Jet>> {
        self.components
            .iter()
            .map(|c| c.eval_jet(t0, order))
            .collect()
    }

    /// The function `A * self` for a row-major matrix `A` with `dim()` columns.
    pub fn transformed(&self, a: &[f64], rows: usize) -> Result<Self> {
        let n = self.dim();
        if a.len() != rows * n || rows == 0 {
            return Err(Error::DimensionMismatch {
                expected: rows * n,
                found: a.len(),
            });
        }
        let terms: Vec<Expr> = self.components.iter().map(|c| c.ast.clone()).collect();
        let components = a
            .chunks(n)
            .map(|row| FunctionSpec::from_expr(Expr::linear_combination(row, &terms)))
            .collect();
        Self::new(components, self.domain)
    }
}
