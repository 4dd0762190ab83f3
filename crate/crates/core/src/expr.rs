//! Arithmetic expressions for user-defined models.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr    := term   { ("+" | "-") term }
//! term    := factor { ("*" | "/") factor }
//! factor  := ("-" | "+") factor | power
//! power   := atom [ "^" factor ]
//! atom    := number | ident | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "exp" | "log" | "sqrt"
//! number  := digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!          | "." digits [ exponent ]
//! ident   := (letter | "_") { letter | digit | "_" }
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-2^2`
//! is `-4` and `2^3^2` is `2^9`. Identifiers must be one of the declared
//! variable names; the name `pi` is accepted as the constant when it is
//! not itself a variable. `log` is the natural logarithm.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// Expression tree over variables indexed by position.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str, vars: &[String]) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
            src,
        };
        let expr = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input in `{src}` at token {}",
                parser.pos
            )));
        }
        Ok(expr)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let base = a.eval(x);
                match **b {
                    Expr::Num(e) if e.fract() == 0.0 && e.abs() < i32::MAX as f64 => {
                        base.powi(e as i32)
                    }
                    _ => base.powf(b.eval(x)),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(x)),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Whether the expression reads variable `var`.
    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(i) => *i == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        if !self.depends_on(var) {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), Num(2.0)),
            ),
            Pow(a, b) => {
                if !b.depends_on(var) {
                    // d(a^c) = c a^(c-1) a'
                    let reduced = match **b {
                        Num(c) => Num(c - 1.0),
                        _ => sub((**b).clone(), Num(1.0)),
                    };
                    mul(
                        mul((**b).clone(), pow((**a).clone(), reduced)),
                        a.derivative(var),
                    )
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    mul(
                        self.clone(),
                        add(
                            mul(b.derivative(var), Call(Func::Log, a.clone())),
                            div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                        ),
                    )
                }
            }
            Call(f, a) => {
                let inner = a.derivative(var);
                let outer = match f {
                    Func::Sin => Call(Func::Cos, a.clone()),
                    Func::Cos => neg(Call(Func::Sin, a.clone())),
                    Func::Exp => self.clone(),
                    Func::Log => div(Num(1.0), (**a).clone()),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                };
                mul(outer, inner)
            }
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if a.is_zero() => b,
        (a, b) if b.is_zero() => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) if a.is_zero() || b.is_zero() => Expr::Num(0.0),
        (Expr::Num(1.0), b) => b,
        (a, Expr::Num(1.0)) => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (a, _) if a.is_zero() => Expr::Num(0.0),
        (a, Expr::Num(1.0)) => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, Expr::Num(0.0)) => Expr::Num(1.0),
        (a, Expr::Num(1.0)) => a,
        (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{text}` in `{src}`")))?;
            tokens.push(Token::Num(value));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            tokens.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!(
                "unexpected character `{c}` in `{src}`"
            )));
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a [String],
    src: &'a str,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected `{op}` in `{}`", self.src)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let token = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| Error::Parse(format!("unexpected end of `{}`", self.src)))?;
        self.pos += 1;
        match token {
            Token::Num(v) => Ok(Expr::Num(*v)),
            Token::Op('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if let Some(idx) = self.vars.iter().position(|v| v == name) {
                    return Ok(Expr::Var(idx));
                }
                if let Some(func) = Func::from_name(name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                Err(Error::Parse(format!(
                    "unknown identifier `{name}` in `{}`",
                    self.src
                )))
            }
            Token::Op(c) => Err(Error::Parse(format!("unexpected `{c}` in `{}`", self.src))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn eval(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src, &names(&["x", "y"])).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[0.0, 0.0]), 7.0);
        assert_eq!(eval("-2^2", &[0.0, 0.0]), -4.0);
        assert_eq!(eval("2^3^2", &[0.0, 0.0]), 512.0);
        assert_eq!(eval("2^-1", &[0.0, 0.0]), 0.5);
        assert_eq!(eval("8 / 4 / 2", &[0.0, 0.0]), 1.0);
        assert_eq!(eval("(x - y) * 3", &[2.0, 1.0]), 3.0);
        assert_eq!(eval("1.5e1 + .5", &[0.0, 0.0]), 15.5);
    }

    #[test]
    fn functions_and_constants() {
        assert!(
            (eval(
                "sin(pi/2) + cos(0) + exp(0) + log(1) + sqrt(4)",
                &[0.0, 0.0]
            ) - 5.0)
                .abs()
                < 1e-15
        );
        assert_eq!(eval("(-2)^3", &[0.0, 0.0]), -8.0);
    }

    #[test]
    fn rejects_bad_input() {
        let v = names(&["x"]);
        assert!(Expr::parse("z + 1", &v).is_err());
        assert!(Expr::parse("sin x", &v).is_err());
        assert!(Expr::parse("1 +", &v).is_err());
        assert!(Expr::parse("(1", &v).is_err());
        assert!(Expr::parse("1 2", &v).is_err());
        assert!(Expr::parse("x $ 1", &v).is_err());
    }

    #[test]
    fn variable_shadows_pi() {
        let v = names(&["pi"]);
        assert_eq!(Expr::parse("pi", &v).unwrap().eval(&[3.0]), 3.0);
    }

    #[test]
    fn derivatives_match_hand_results() {
        let v = names(&["x", "y"]);
        let e = Expr::parse("x^3 * y + sin(x*y) + y/x + x^y", &v).unwrap();
        let (x, y): (f64, f64) = (1.3, 0.7);
        let dx = 3.0 * x * x * y + y * (x * y).cos() - y / (x * x) + y * x.powf(y - 1.0);
        let dy = x.powi(3) + x * (x * y).cos() + 1.0 / x + x.powf(y) * x.ln();
        assert!((e.derivative(0).eval(&[x, y]) - dx).abs() < 1e-12);
        assert!((e.derivative(1).eval(&[x, y]) - dy).abs() < 1e-12);
        assert!(Expr::parse("y^2", &v).unwrap().derivative(0).is_zero());
    }

    proptest! {
        #[test]
        fn symbolic_derivative_agrees_with_finite_differences(
            a in 0.2f64..2.0, b in -2.0f64..2.0, x in 0.3f64..2.0, y in -1.5f64..1.5
        ) {
            let v = names(&["x", "y"]);
            let src = format!("{a}*exp(sqrt(x)*y) - log(x + {a})*cos({b}*y) + x^2/(1 + y^2)");
            let e = Expr::parse(&src, &v).unwrap();
            let fd = fd::gradient(|p| e.eval(p), &[x, y]);
            for (k, approx) in fd.iter().enumerate() {
                let exact = e.derivative(k).eval(&[x, y]);
                prop_assert!((exact - approx).abs() < 1e-6 * (1.0 + exact.abs()));
            }
        }
    }
}
