//! Scalar arithmetic expressions in the variables `x` and `y`.
//!
//! Coefficient fields (diffusion, reaction, advection components, source,
//! initial state) are given as text in the run configuration and compiled
//! into an [`Expression`] once. Evaluation is pure and the tree is immutable,
//! so one expression can be shared by every worker.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 'y' | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2` is `-4`, and it is
//! right-associative (`2^3^2` is `2^9`).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("domain error at (x={x}, y={y}): {msg}")]
    Domain { x: f64, y: f64, msg: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

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
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Const(f64),
    Var(Var),
    Neg(Box<Expression>),
    Binary(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

impl Expression {
    pub fn constant(value: f64) -> Self {
        Expression::Const(value)
    }

    /// True when the tree references neither `x` nor `y`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expression::Const(_) => true,
            Expression::Var(_) => false,
            Expression::Neg(e) | Expression::Call(_, e) => e.is_constant(),
            Expression::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    /// Evaluates at `(x, y)`. Non-finite results from finite inputs
    /// (division by zero, `sqrt` of a negative, overflow) are domain errors.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        let domain = |msg| ExprError::Domain { x, y, msg };
        let v = match self {
            Expression::Const(c) => *c,
            Expression::Var(Var::X) => x,
            Expression::Var(Var::Y) => y,
            Expression::Neg(e) => -e.evaluate(x, y)?,
            Expression::Binary(op, l, r) => {
                let a = l.evaluate(x, y)?;
                let b = r.evaluate(x, y)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let p = a.powf(b);
                        if p.is_nan() {
                            return Err(domain("power of a negative base"));
                        }
                        p
                    }
                }
            }
            Expression::Call(func, e) => {
                let a = e.evaluate(x, y)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain("square root of a negative number"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain("non-finite result"))
        }
    }
}

impl fmt::Display for Expression {
    /// Prints fully parenthesized; the output parses back to an equivalent
    /// tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Const(c) => {
                if *c < 0.0 {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expression::Var(Var::X) => f.write_str("x"),
            Expression::Var(Var::Y) => f.write_str("y"),
            Expression::Neg(e) => write!(f, "(-{e})"),
            Expression::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expression::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push((start, Token::Num(value)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(src[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.offset(),
            msg: msg.into(),
        })
    }

    fn sum(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(Token::Plus) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Token::Star) => BinOp::Mul,
                Some(Token::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(Expression::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expression, ExprError> {
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expression::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression, ExprError> {
        let Some((at, tok)) = self.tokens.get(self.pos).cloned() else {
            return self.error("unexpected end of input");
        };
        match tok {
            Token::Num(v) => {
                self.pos += 1;
                Ok(Expression::Const(v))
            }
            Token::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => return Ok(Expression::Var(Var::X)),
                    "y" => return Ok(Expression::Var(Var::Y)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ExprError::UnknownIdentifier { pos: at, name });
                };
                if self.peek() != Some(&Token::LParen) {
                    return self.error(format!("expected `(` after `{name}`"));
                }
                self.pos += 1;
                let arg = self.sum()?;
                self.expect_rparen()?;
                Ok(Expression::Call(func, Box::new(arg)))
            }
            Token::LParen => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => self.error("expected a number, variable, function or `(`"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.peek() == Some(&Token::RParen) {
            self.pos += 1;
            Ok(())
        } else {
            self.error("expected `)`")
        }
    }
}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expression, ExprError> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: source.len(),
    };
    let expr = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return parser.error("unexpected trailing input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(src: &str, x: f64, y: f64) -> f64 {
        parse(src).unwrap().evaluate(x, y).unwrap()
    }

    #[test]
    fn experiment_coefficients() {
        assert_eq!(eval("5", 0.3, 0.7), 5.0);
        assert_eq!(eval("-5*(y+1)", 0.0, 0.0), -5.0);
        assert_eq!(eval("5*(x+1)", 1.0, 0.0), 10.0);
        assert_eq!(eval("x^2 + y", 2.0, 3.0), 7.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("2+3*4", 0.0, 0.0), 14.0);
        assert_eq!(eval("(2+3)*4", 0.0, 0.0), 20.0);
        assert_eq!(eval("-2^2", 0.0, 0.0), -4.0);
        assert_eq!(eval("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(eval("8/4/2", 0.0, 0.0), 1.0);
        assert_eq!(eval("1-2-3", 0.0, 0.0), -4.0);
        assert_eq!(eval("2*-3", 0.0, 0.0), -6.0);
    }

    #[test]
    fn functions_and_numbers() {
        assert_eq!(eval("sqrt(x)", 4.0, 0.0), 2.0);
        assert_eq!(eval("abs(-3.5)", 0.0, 0.0), 3.5);
        assert_eq!(eval("1.5e2 + 2E-1", 0.0, 0.0), 150.2);
        assert!(
            (eval("sin(x)*cos(y) + exp(0)", 0.5, 0.25) - (0.5f64.sin() * 0.25f64.cos() + 1.0)).abs() < 1e-15
        );
    }

    #[test]
    fn domain_errors_carry_point() {
        let e = parse("1/x").unwrap();
        match e.evaluate(0.0, 2.0) {
            Err(ExprError::Domain { x, y, .. }) => {
                assert_eq!(x, 0.0);
                assert_eq!(y, 2.0);
            }
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(matches!(
            parse("sqrt(x)").unwrap().evaluate(-1.0, 0.0),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("(-1)^0.5").unwrap().evaluate(0.0, 0.0),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(
            parse("1 + * 2"),
            Err(ExprError::Syntax {
                pos: 4,
                msg: "expected a number, variable, function or `(`".into()
            })
        );
        assert!(matches!(parse("(1+2"), Err(ExprError::Syntax { pos: 4, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { pos: 0, .. })));
        assert!(matches!(parse("1 $ 2"), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse("1 2"), Err(ExprError::Syntax { pos: 2, .. })));
        assert_eq!(
            parse("2*z"),
            Err(ExprError::UnknownIdentifier {
                pos: 2,
                name: "z".into()
            })
        );
        assert!(matches!(
            parse("tan(x)"),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn constant_detection() {
        assert!(parse("2*(3+1)").unwrap().is_constant());
        assert!(!parse("2*(3+x)").unwrap().is_constant());
    }

    fn arb_expr() -> impl Strategy<Value = Expression> {
        let leaf = prop_oneof![
            (-10.0f64..10.0).prop_map(Expression::Const),
            Just(Expression::Var(Var::X)),
            Just(Expression::Var(Var::Y)),
        ];
        leaf.prop_recursive(5, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expression::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expression::Binary(op, Box::new(l), Box::new(r))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Sqrt),
                        Just(Func::Abs)
                    ],
                    inner
                )
                    .prop_map(|(f, e)| Expression::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(e in arb_expr(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let reparsed = parse(&e.to_string()).unwrap();
            match (e.evaluate(x, y), reparsed.evaluate(x, y)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "mismatch {:?} vs {:?}", a, b),
            }
        }
    }
}
