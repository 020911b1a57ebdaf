//! A small real-valued expression language in one variable `t`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | tan | exp | ln | sqrt | abs
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so `-2^2`
//! is −4 and `2^3^2` is 512.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

impl ExprError {
    pub fn name(&self) -> &'static str {
        match self {
            ExprError::Syntax { .. } => "SyntaxError",
            ExprError::UnknownIdentifier { .. } => "UnknownIdentifier",
            ExprError::Domain(_) => "DomainError",
        }
    }

    pub fn offset(&self) -> Option<usize> {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UnknownIdentifier { offset, .. } => Some(*offset),
            ExprError::Domain(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [Func::Sin, Func::Cos, Func::Tan, Func::Exp, Func::Ln, Func::Sqrt, Func::Abs];

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> Result<f64, ExprError> {
        let v = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => {
                if x <= 0.0 {
                    return Err(ExprError::Domain(format!("ln of non-positive value {x}")));
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(ExprError::Domain(format!("sqrt of negative value {x}")));
                }
                x.sqrt()
            }
            Func::Abs => x.abs(),
        };
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let tokens = lex(src)?;
    let mut p = Parser { tokens, pos: 0, len: src.len() };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some((off, tok)) => Err(ExprError::Syntax { offset: off, message: format!("unexpected {}", tok.describe()) }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("operator '{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                // exponent only if followed by digits (optionally signed)
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = src[i..].chars().next().unwrap();
                    return Err(ExprError::Syntax { offset: i, message: format!("unexpected character '{ch}'") });
                }
            };
            out.push((i, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.tokens.get(self.pos).map(|(o, t)| (*o, t))
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some((_, Tok::Op(c))) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let end = self.len;
        match self.next() {
            None => Err(ExprError::Syntax { offset: end, message: "unexpected end of input".into() }),
            Some((_, Tok::Num(v))) => Ok(Expr::Num(v)),
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some((off, Tok::Ident(name))) => match name.as_str() {
                "t" => Ok(Expr::T),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                _ => {
                    let f = Func::from_name(&name)
                        .ok_or(ExprError::UnknownIdentifier { name: name.clone(), offset: off })?;
                    match self.next() {
                        Some((_, Tok::LParen)) => {}
                        Some((o, tok)) => {
                            return Err(ExprError::Syntax {
                                offset: o,
                                message: format!("expected '(' after {name}, found {}", tok.describe()),
                            })
                        }
                        None => {
                            return Err(ExprError::Syntax { offset: end, message: format!("expected '(' after {name}") })
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(f, Box::new(arg)))
                }
            },
            Some((off, tok)) => Err(ExprError::Syntax { offset: off, message: format!("unexpected {}", tok.describe()) }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let end = self.len;
        match self.next() {
            Some((_, Tok::RParen)) => Ok(()),
            Some((o, tok)) => Err(ExprError::Syntax { offset: o, message: format!("expected ')', found {}", tok.describe()) }),
            None => Err(ExprError::Syntax { offset: end, message: "missing ')'".into() }),
        }
    }
}

impl Expr {
    pub fn eval(&self, t: f64) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(t)?, b.eval(t)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain(format!("non-finite value in '{self}' at t = {t}")))
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::T => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_t(),
            Expr::Bin(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    /// Symbolic d/dt, lightly simplified.
    pub fn derivative(&self) -> Expr {
        use BinOp::*;
        let num = Expr::Num;
        match self {
            Expr::Num(_) => num(0.0),
            Expr::T => num(1.0),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Bin(op, a, b) => {
                let (da, db) = (a.derivative(), b.derivative());
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    Add => add(da, db),
                    Sub => sub(da, db),
                    Mul => add(mul(da, b.clone()), mul(a, db)),
                    Div => div(sub(mul(da, b.clone()), mul(a, db)), bin(Pow, b, num(2.0))),
                    Pow => {
                        if !b.depends_on_t() {
                            // b·a^(b−1)·a'
                            let exp = sub(b.clone(), num(1.0));
                            mul(mul(b, bin(Pow, a, exp)), da)
                        } else if !a.depends_on_t() {
                            // a^b·ln(a)·b'
                            mul(mul(self.clone(), call(Func::Ln, a)), db)
                        } else {
                            // a^b·(b'·ln a + b·a'/a)
                            let inner = add(mul(db, call(Func::Ln, a.clone())), div(mul(b, da), a));
                            mul(self.clone(), inner)
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative();
                let a = a.as_ref().clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => div(num(1.0), bin(Pow, call(Func::Cos, a), num(2.0))),
                    Func::Exp => self.clone(),
                    Func::Ln => div(num(1.0), a),
                    Func::Sqrt => div(num(0.5), self.clone()),
                    Func::Abs => div(a, self.clone()),
                };
                mul(outer, da)
            }
        }
    }

    pub fn eval_derivative(&self, t: f64) -> Result<f64, ExprError> {
        self.derivative().eval(t)
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) if x == 0.0 => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        b
    } else if is_num(&b, 0.0) {
        a
    } else {
        bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        a
    } else if is_num(&a, 0.0) {
        neg(b)
    } else {
        bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&a, 1.0) {
        b
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        Expr::Num(0.0)
    } else if is_num(&b, 1.0) {
        a
    } else {
        bin(BinOp::Div, a, b)
    }
}

/// Prints a fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 => write!(f, "(0 - {})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::T => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: f64) -> f64 {
        parse(s).unwrap().eval(t).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("1+2*3", 0.0), 7.0);
        assert_eq!(ev("(1+2)*3", 0.0), 9.0);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("t^2", 3.0), 9.0);
        assert_eq!(ev("pi", 0.0), std::f64::consts::PI);
        assert_eq!(ev("exp(0)", 7.0), 1.0);
        assert_eq!(ev("1.5e-1 + .5", 0.0), 0.65);
        assert!((ev("1+0.1*sin(t)", 1.0) - (1.0 + 0.1 * 1f64.sin())).abs() < 1e-16);
    }

    #[test]
    fn positioned_errors() {
        assert_eq!(parse("sin(q)"), Err(ExprError::UnknownIdentifier { name: "q".into(), offset: 4 }));
        assert_eq!(parse("foo(t)").unwrap_err().offset(), Some(0));
        assert_eq!(parse("1 + * 2").unwrap_err().offset(), Some(4));
        assert_eq!(parse("(1 + t").unwrap_err().offset(), Some(6));
        assert_eq!(parse("1 $ 2").unwrap_err().offset(), Some(2));
        assert_eq!(parse("sin t").unwrap_err().offset(), Some(4));
        assert_eq!(parse("2 3").unwrap_err().offset(), Some(2));
        assert_eq!(parse("").unwrap_err().name(), "SyntaxError");
    }

    #[test]
    fn domain_errors() {
        assert_eq!(parse("ln(t)").unwrap().eval(-1.0).unwrap_err().name(), "DomainError");
        assert!(parse("sqrt(t)").unwrap().eval(-1.0).is_err());
        assert!(parse("1/t").unwrap().eval(0.0).is_err());
    }

    #[test]
    fn derivatives() {
        let d = |s: &str, t: f64| parse(s).unwrap().eval_derivative(t).unwrap();
        assert_eq!(d("sin(t)", 0.0), 1.0);
        assert_eq!(d("t^3", 2.0), 12.0);
        assert!((d("2^t", 1.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((d("t^t", 2.0) - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-13);
        assert!((d("sqrt(1+t^2)", 1.0) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d("abs(t)", -3.0), -1.0);
    }

    #[test]
    fn print_parse_round_trip() {
        for s in ["1+0.1*sin(t)", "-2^2", "2^3^2", "-(t - 1)/(3*t)", "exp(-t^2)*cos(2*pi*t)", "0.1"] {
            let a = parse(s).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }
}
