//! Scalar expression language for right-hand sides, boundary data and
//! measure densities.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , exponent ] ;
//! exponent = "-" , exponent | power ;
//! primary = number | "x" | "y" | "pi"
//!         | ident , "(" , [ expr , { "," , expr } ] , ")"
//!         | "(" , expr , ")" ;
//! ident   = "sin" | "cos" | "exp" | "log" | "abs" | "sqrt"
//!         | "pow" | "rho" | "powplus" ;
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 = -(x^2)`) and associates to the
//! right. `rho(x)` / `rho(x, y)` is the distance to the boundary of the
//! ambient domain, `powplus(b, p) = max(b, 0)^p`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Domain, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
    Pow,
    Rho,
    PowPlus,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "rho" => Func::Rho,
            "powplus" => Func::PowPlus,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Rho => "rho",
            Func::PowPlus => "powplus",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Pow | Func::PowPlus => n == 2,
            Func::Rho => n == 1 || n == 2,
            _ => n == 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Pi,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown identifier `{name}` at column {column}")]
    UnknownIdentifier { column: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result in `{0}`")]
    NonFinite(String),
    #[error("rho() needs {0} coordinate(s) for this domain")]
    RhoArity(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
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
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                column: col,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ParseError::Syntax {
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end_col)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: char) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{op}`")))
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { column: self.col(), message }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_op('+') {
                BinOp::Add
            } else if self.eat_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_op('*') {
                BinOp::Mul
            } else if self.eat_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            Ok(negate(self.unary()?))
        } else {
            self.power()
        }
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op('-') {
            Ok(negate(self.exponent()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op('^') {
            let exp = self.exponent()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => return Ok(Expr::X),
                    "y" => return Ok(Expr::Y),
                    "pi" => return Ok(Expr::Pi),
                    _ => {}
                }
                let func = Func::from_name(&name)
                    .ok_or(ParseError::UnknownIdentifier { column: col, name: name.clone() })?;
                self.expect_op('(')?;
                let mut args = Vec::new();
                if !self.eat_op(')') {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_op(')') {
                            break;
                        }
                        self.expect_op(',')?;
                    }
                }
                if !func.arity_ok(args.len()) {
                    return Err(ParseError::Syntax {
                        column: col,
                        message: format!("wrong number of arguments ({}) for `{name}`", args.len()),
                    });
                }
                Ok(Expr::Call(func, args))
            }
            Some(Tok::Op(c)) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }
}

/// Unary minus on a literal folds into a negative literal so that printing
/// and re-parsing is structurally stable.
fn negate(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        other => Expr::Neg(Box::new(other)),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let toks = lex(src)?;
        let mut p = Parser { toks, pos: 0, end_col: src.chars().count() + 1 };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(p.error("trailing input".into()));
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// Evaluates at `p`; `domain` supplies `rho`.
    pub fn eval(&self, p: Point, domain: &Domain) -> Result<f64, EvalError> {
        let v = self.eval_inner(p, domain)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite(self.to_string()))
        }
    }

    fn eval_inner(&self, p: Point, domain: &Domain) -> Result<f64, EvalError> {
        let finite = |v: f64, e: &Expr| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::NonFinite(e.to_string()))
            }
        };
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::X => Ok(p.x),
            Expr::Y => Ok(p.y),
            Expr::Pi => Ok(std::f64::consts::PI),
            Expr::Neg(e) => Ok(-e.eval_inner(p, domain)?),
            Expr::Bin(op, l, r) => {
                let a = l.eval_inner(p, domain)?;
                let b = r.eval_inner(p, domain)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                };
                finite(v, self)
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_inner(p, domain)?;
                let v = match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::LogDomain(a));
                        }
                        a.ln()
                    }
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::SqrtDomain(a));
                        }
                        a.sqrt()
                    }
                    Func::Pow => a.powf(args[1].eval_inner(p, domain)?),
                    Func::PowPlus => {
                        let e = args[1].eval_inner(p, domain)?;
                        a.max(0.0).powf(e)
                    }
                    Func::Rho => {
                        let q = match (domain.dim(), args.len()) {
                            (1, 1) => Point::on_line(a),
                            (2, 2) => Point::new(a, args[1].eval_inner(p, domain)?),
                            (d, _) => return Err(EvalError::RhoArity(d)),
                        };
                        domain.rho(q)
                    }
                };
                finite(v, self)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Y => f.write_str("y"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Expr::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Domain {
        Domain::interval(-1.0, 1.0).unwrap()
    }

    fn ev(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval(Point::on_line(x), &line()).unwrap()
    }

    #[test]
    fn literals_and_precedence() {
        assert_eq!(ev("1", 0.0), 1.0);
        assert_eq!(ev("2+3*4", 0.0), 14.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("(-2)^2", 0.0), 4.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("1-2-3", 0.0), -4.0);
        assert_eq!(ev("1.5e1 + 2E-1", 0.0), 15.2);
    }

    #[test]
    fn builtins() {
        assert_eq!(ev("powplus(1 - x^2, 0.75)", 0.0), 1.0);
        assert_eq!(ev("powplus(1 - x^2, 0.75)", 1.5), 0.0);
        let v = ev("powplus(1-x^2,0.75)", 0.6);
        assert!((v - 0.64f64.powf(0.75)).abs() < 1e-15);
        assert_eq!(ev("rho(x)", 0.0), 1.0);
        assert!((ev("sin(pi*x)", 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(ev("pow(2, 10)", 0.0), 1024.0);
        assert_eq!(ev("abs(x) + sqrt(4) + exp(0) + log(1) + cos(0)", -3.0), 7.0);
    }

    #[test]
    fn rho_in_two_dimensions() {
        let disk = Domain::disk(Point::new(0.0, 0.0), 1.0).unwrap();
        let e = Expr::parse("rho(x, y)").unwrap();
        assert!((e.eval(Point::new(0.6, 0.0), &disk).unwrap() - 0.4).abs() < 1e-15);
        let e1 = Expr::parse("rho(x)").unwrap();
        assert_eq!(e1.eval(Point::new(0.6, 0.0), &disk), Err(EvalError::RhoArity(2)));
    }

    #[test]
    fn evaluation_errors() {
        let d = line();
        let p = Point::on_line(0.0);
        assert_eq!(Expr::parse("log(x)").unwrap().eval(p, &d), Err(EvalError::LogDomain(0.0)));
        assert_eq!(Expr::parse("1/x").unwrap().eval(p, &d), Err(EvalError::DivisionByZero));
        assert!(matches!(Expr::parse("sqrt(x-1)").unwrap().eval(p, &d), Err(EvalError::SqrtDomain(_))));
        assert!(matches!(Expr::parse("x^(-1)").unwrap().eval(p, &d), Err(EvalError::NonFinite(_))));
        assert!(matches!(Expr::parse("exp(1000)").unwrap().eval(p, &d), Err(EvalError::NonFinite(_))));
    }

    #[test]
    fn syntax_errors_report_columns() {
        assert_eq!(
            Expr::parse("1 + * 2"),
            Err(ParseError::Syntax { column: 5, message: "unexpected `*`".into() })
        );
        assert_eq!(
            Expr::parse("foo(x)"),
            Err(ParseError::UnknownIdentifier { column: 1, name: "foo".into() })
        );
        assert!(matches!(Expr::parse("(1 + 2"), Err(ParseError::Syntax { column: 7, .. })));
        assert!(matches!(Expr::parse("1 2"), Err(ParseError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse("sin(1, 2)"), Err(ParseError::Syntax { column: 1, .. })));
        assert!(matches!(Expr::parse("1 $ 2"), Err(ParseError::Syntax { column: 3, .. })));
        assert!(matches!(Expr::parse(""), Err(ParseError::Syntax { column: 1, .. })));
    }

    #[test]
    fn print_parse_round_trip_examples() {
        for src in ["-x^2", "2^-x", "powplus(1 - x^2, 0.75)", "-(-3)", "rho(x) * -2.5e-3", "1/(x-0.5)"] {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }
}
