//! Expression vocabulary for chart component functions.
//!
//! Grammar (usual precedence, `^` binds tightest and takes an integer
//! exponent):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' int | '^' '(' '-'? int ')')?
//! atom  := number | 'pi' | 'x1'..'x8' | func '(' expr ')' | '(' expr ')'
//! func  := exp | sin | cos | sqrt | bump
//! ```
//!
//! `bump(s) = exp(−1/(1−s²))` for `|s| < 1` and 0 otherwise. Numeric
//! literals are read exactly, so `0.1` is one tenth in every precision.

use std::fmt;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational, Real};

const PI: crate::dd::Dd = crate::dd::Dd { hi: std::f64::consts::PI, lo: 1.224_646_799_147_353_2e-16 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
    Bump,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Const(Rational),
    Pi,
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// A parsed scalar function of the chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    src: String,
    node: Node,
    vars: usize,
}

impl Expr {
    /// Parses `src`, rejecting variables beyond `x{dim}`.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0, src, vars: 0 };
        let node = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        if p.vars > dim {
            return Err(Error::Parse(format!("expression {src:?} uses x{} in dimension {dim}", p.vars)));
        }
        Ok(Expr { src: src.trim().to_string(), node, vars: p.vars })
    }

    pub fn constant(v: &Rational) -> Self {
        Expr { src: crate::scalar::format_rational(v), node: Node::Const(v.clone()), vars: 0 }
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    /// Highest variable index used (1-based); 0 for constants.
    pub fn max_var(&self) -> usize {
        self.vars
    }

    pub fn is_constant(&self) -> bool {
        self.vars == 0
    }

    pub fn eval<R: Real>(&self, x: &[R]) -> R {
        eval(&self.node, x)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

fn pi<R: Real>() -> R {
    R::from_f64(PI.hi) + R::from_f64(PI.lo)
}

fn eval<R: Real>(n: &Node, x: &[R]) -> R {
    match n {
        Node::Const(c) => R::from_rational(c),
        Node::Pi => pi(),
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, k) => eval(a, x).powi(*k),
        Node::Call(f, a) => {
            let v = eval(a, x);
            match f {
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sqrt => v.sqrt(),
                Func::Bump => {
                    let one = R::one();
                    let s2 = v * v;
                    if s2.to_f64() < 1.0 {
                        (-(one / (one - s2))).exp()
                    } else {
                        R::zero()
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let mantissa: String = chars[start..i].iter().collect();
            let mut value = parse_rational(&mantissa)
                .map_err(|_| Error::Parse(format!("bad number {mantissa:?} at column {}", start + 1)))?;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                    j += 1;
                }
                let ds = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == ds {
                    return Err(Error::Parse(format!("bad exponent at column {}", i + 1)));
                }
                let e: i32 = chars[i + 1..j]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent at column {}", i + 1)))?;
                let p = Rational::from_integer(num_traits::pow(BigInt::from(10), e.unsigned_abs() as usize));
                value = if e >= 0 { value * p } else { value / p };
                i = j;
            }
            out.push((Tok::Num(value), start));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character {c:?} at column {} in {src:?}", i + 1)));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    src: &'a str,
    vars: usize,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        let col = self.tokens.get(self.pos).map(|t| t.1 + 1).unwrap_or(self.src.chars().count() + 1);
        Error::Parse(format!("{what} at column {col} in {:?}", self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let paren = self.peek_op() == Some('(');
        if paren {
            self.pos += 1;
        }
        let neg = paren && self.peek_op() == Some('-');
        if neg {
            self.pos += 1;
        }
        let k = match self.tokens.get(self.pos) {
            Some((Tok::Num(v), _)) if v.is_integer() => {
                let k: i32 = v.numer().try_into().map_err(|_| self.error("exponent out of range"))?;
                self.pos += 1;
                k
            }
            _ => return Err(self.error("expected an integer exponent")),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(Node::Pow(Box::new(base), if neg { -k } else { k }))
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.tokens.get(self.pos).cloned();
        match tok {
            Some((Tok::Num(v), _)) => {
                self.pos += 1;
                Ok(Node::Const(v))
            }
            Some((Tok::Op('('), _)) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some((Tok::Ident(name), _)) => {
                let func = match name.as_str() {
                    "exp" => Some(Func::Exp),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "sqrt" => Some(Func::Sqrt),
                    "bump" => Some(Func::Bump),
                    _ => None,
                };
                if let Some(f) = func {
                    self.pos += 1;
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                if name == "pi" {
                    self.pos += 1;
                    return Ok(Node::Pi);
                }
                let idx =
                    name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()).filter(|&k| (1..=8).contains(&k));
                match idx {
                    Some(k) => {
                        self.pos += 1;
                        self.vars = self.vars.max(k);
                        Ok(Node::Var(k - 1))
                    }
                    None => Err(self.error(&format!("unknown identifier {name:?}"))),
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;

    fn ev(src: &str, x: &[f64]) -> f64 {
        Expr::parse(src, 4).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2*3", &[]), 7.0);
        assert_eq!(ev("(1 + 2)*3", &[]), 9.0);
        assert_eq!(ev("8/4/2", &[]), 1.0);
        assert_eq!(ev("2 - 3 - 4", &[]), -5.0);
        assert_eq!(ev("-x1^2", &[3.0]), -9.0);
        assert_eq!(ev("x1^(-2)", &[2.0]), 0.25);
        assert_eq!(ev("2*x2 + x1", &[1.0, 5.0]), 11.0);
    }

    #[test]
    fn literals_are_exact() {
        let e = Expr::parse("0.1*3 - 0.3", 1).unwrap();
        assert!(e.eval::<Dd>(&[]).to_f64().abs() < 1e-31);
        assert_eq!(ev("1.5e-3*1000", &[]), 1.5);
        assert_eq!(ev("2E2", &[]), 200.0);
    }

    #[test]
    fn functions() {
        assert!((ev("exp(1)", &[]) - std::f64::consts::E).abs() < 1e-15);
        assert!((ev("sin(pi/2) + cos(0)", &[]) - 2.0).abs() < 1e-15);
        assert!((ev("sqrt(x1)", &[2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(ev("bump(x1)", &[1.5]), 0.0);
        assert!((ev("bump(0)", &[]) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_locations() {
        for bad in ["1 +", "x9", "foo(1)", "2^x1", "(1", "1 $ 2", "sin 1"] {
            assert!(matches!(Expr::parse(bad, 8), Err(Error::Parse(_))), "{bad}");
        }
        match Expr::parse("x3", 2) {
            Err(Error::Parse(m)) => assert!(m.contains("x3")),
            other => panic!("{other:?}"),
        }
        match Expr::parse("1 + * 2", 2) {
            Err(Error::Parse(m)) => assert!(m.contains("column 5")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn source_round_trip() {
        let e = Expr::parse("  exp(2*x1) ", 2).unwrap();
        assert_eq!(e.source(), "exp(2*x1)");
        assert_eq!(Expr::parse(e.source(), 2).unwrap(), e);
        assert_eq!(e.max_var(), 1);
        assert!(Expr::constant(&crate::scalar::rat(1, 3)).is_constant());
    }

    #[test]
    fn precisions_agree() {
        let e = Expr::parse("exp(0.3*x1)*sin(x2) + x1^3/7 - bump(x2/2)", 2).unwrap();
        let x = [0.7, -0.4];
        let a: f64 = e.eval(&x);
        let b: Dd = e.eval(&[Dd::from_f64(x[0]), Dd::from_f64(x[1])]);
        assert!((a - b.to_f64()).abs() < 1e-15);
    }
}
