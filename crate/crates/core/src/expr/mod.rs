//! A small expression language for convex functions, domain inequalities
//! and parametrizations.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | factor
//! factor := base ("^" exponent)?          exponent must fold to a constant
//! base   := number | ident | "(" expr ")" | func "(" expr ")"
//! func   := ln | exp | sqrt | sin | cos | sinh | cosh
//! ident  := ("x" | "u") digits | "t"
//! ```
//!
//! `t` is variable 1 and `uK` is variable K, so a parametrization in
//! `(t, u2, .., un)` shares the index space of `x1 .. xn`.

mod eval;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eval::{Op, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Ln,
    Exp,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Expression tree. Variables are stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Func(Func, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
}

impl Node {
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Func(_, a) | Node::Pow(a, _) => a.max_var(),
            Node::Bin(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, p) if *p < 0.0 => write!(f, "({a})^(-{})", -p),
            Node::Pow(a, p) => write!(f, "({a})^{p}"),
        }
    }
}

/// A parsed expression over `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dim: usize,
}

impl Expression {
    pub fn parse(source: &str, dim: usize) -> Result<Self> {
        let root = parse::parse(source, dim)?;
        Ok(Expression { root, dim })
    }

    /// Wraps a hand-built tree, checking the variable bound.
    pub fn from_node(root: Node, dim: usize) -> Result<Self> {
        if let Some(i) = root.max_var() {
            if i >= dim {
                return Err(Error::VariableOutOfRange {
                    name: format!("x{}", i + 1),
                    dim,
                });
            }
        }
        Ok(Expression { root, dim })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(())
    }

    /// Tree-walking evaluation in `f64`.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        self.check_point(point)?;
        eval::eval_tree(&self.root, point)
    }

    /// Tree-walking evaluation in any [`Real`](crate::scalar::Real).
    pub fn evaluate_in<R: crate::scalar::Real>(&self, point: &[R]) -> Result<R> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        eval::eval_tree(&self.root, point)
    }

    pub fn compile(&self) -> Program {
        Program::compile(&self.root, self.dim)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Open set `{x : h_k(x) > 0 for every k}`. An empty list is all of R^n.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub inequalities: Vec<Expression>,
}

impl Domain {
    pub fn everywhere() -> Self {
        Domain::default()
    }

    pub fn new(inequalities: Vec<Expression>) -> Self {
        Domain { inequalities }
    }

    pub fn parse(sources: &[&str], dim: usize) -> Result<Self> {
        let inequalities = sources
            .iter()
            .map(|s| Expression::parse(s, dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(Domain { inequalities })
    }

    /// Smallest inequality value, `+inf` for the whole space and `None`
    /// when some inequality cannot be evaluated.
    pub fn margin(&self, point: &[f64]) -> Option<f64> {
        let mut m = f64::INFINITY;
        for h in &self.inequalities {
            match h.evaluate(point) {
                Ok(v) if v.is_finite() => m = m.min(v),
                _ => return None,
            }
        }
        Some(m)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        matches!(self.margin(point), Some(m) if m > 0.0)
    }
}

/// A function given by an expression on an open domain; convexity is
/// checked where it is used, never assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexFunction {
    pub body: Expression,
    pub domain: Domain,
    pub name: Option<String>,
}

impl ConvexFunction {
    pub fn new(body: Expression, domain: Domain, name: Option<String>) -> Result<Self> {
        if body.dim() == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for h in &domain.inequalities {
            if h.dim() != body.dim() {
                return Err(Error::DimensionMismatch {
                    expected: body.dim(),
                    got: h.dim(),
                });
            }
        }
        Ok(ConvexFunction { body, domain, name })
    }

    pub fn parse(body: &str, domain: &[&str], dim: usize) -> Result<Self> {
        Self::new(Expression::parse(body, dim)?, Domain::parse(domain, dim)?, None)
    }

    pub fn dim(&self) -> usize {
        self.body.dim()
    }

    pub fn descriptor(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.body.to_string())
    }

    /// Dimension and domain membership check.
    pub fn check_interior(&self, point: &[f64]) -> Result<()> {
        self.body.check_point(point)?;
        if !self.domain.contains(point) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    pub fn value(&self, point: &[f64]) -> Result<f64> {
        self.check_interior(point)?;
        self.body.evaluate(point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const THM13A_N2: &str = "-0.25*ln(x1 - x2^2/2)";
    const THM13B_N2: &str = "-0.25*ln(x1) + x2^2/(2*x1)";

    #[test]
    fn parses_log_parabolic_solution() {
        let e = Expression::parse(THM13A_N2, 2).unwrap();
        let expected = Node::Bin(
            BinOp::Mul,
            Box::new(Node::Neg(Box::new(Node::Const(0.25)))),
            Box::new(Node::Func(
                Func::Ln,
                Box::new(Node::Bin(
                    BinOp::Sub,
                    Box::new(Node::Var(0)),
                    Box::new(Node::Bin(
                        BinOp::Div,
                        Box::new(Node::Pow(Box::new(Node::Var(1)), 2.0)),
                        Box::new(Node::Const(2.0)),
                    )),
                )),
            )),
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn single_variable() {
        let e = Expression::parse("x1", 1).unwrap();
        assert_eq!(e.root(), &Node::Var(0));
    }

    #[test]
    fn variable_out_of_range() {
        let err = Expression::parse("ln(x3)", 2).unwrap_err();
        assert!(matches!(err, Error::VariableOutOfRange { ref name, dim: 2 } if name == "x3"));
        assert!(matches!(
            Expression::parse("x0", 2),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Expression::parse("x1 + * x2", 2) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expression::parse("(x1 + x2", 2),
            Err(Error::Syntax { offset: 8, .. })
        ));
        assert!(matches!(
            Expression::parse("x1 x2", 2),
            Err(Error::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            Expression::parse("foo(x1)", 1),
            Err(Error::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            Expression::parse("x1^x2", 2),
            Err(Error::NonConstantExponent { offset: 3 })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let p = |s: &str| Expression::parse(s, 2).unwrap();
        // ^ binds tighter than unary minus
        assert_eq!(p("-x1^2").evaluate(&[3.0, 0.0]).unwrap(), -9.0);
        // right-associative power folds the exponent
        assert_eq!(p("x1^3^2").evaluate(&[2.0, 0.0]).unwrap(), 512.0);
        // left-associative subtraction and division
        assert_eq!(p("x1 - x2 - 1").evaluate(&[5.0, 2.0]).unwrap(), 2.0);
        assert_eq!(p("x1 / x2 / 2").evaluate(&[8.0, 2.0]).unwrap(), 2.0);
        assert_eq!(p("1 + 2 * 3").evaluate(&[0.0, 0.0]).unwrap(), 7.0);
        assert_eq!(p("x1^-1").evaluate(&[4.0, 0.0]).unwrap(), 0.25);
        assert_eq!(p("x1^(1/2)").evaluate(&[4.0, 0.0]).unwrap(), 2.0);
        assert_eq!(p("2 * -x1").evaluate(&[4.0, 0.0]).unwrap(), -8.0);
    }

    #[test]
    fn parametrization_identifiers() {
        let e = Expression::parse("exp(2*t) * u2 + u3", 3).unwrap();
        assert_eq!(e.evaluate(&[0.0, 2.0, 1.0]).unwrap(), 3.0);
        assert!(Expression::parse("u4", 3).is_err());
    }

    #[test]
    fn evaluates_catalog_values() {
        let f = Expression::parse(THM13A_N2, 2).unwrap();
        assert_eq!(f.evaluate(&[1.0, 0.0]).unwrap(), 0.0);
        let g = Expression::parse(THM13B_N2, 2).unwrap();
        assert_eq!(g.evaluate(&[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_errors_are_typed() {
        let e = Expression::parse("ln(x1)", 1).unwrap();
        match e.evaluate(&[0.0]) {
            Err(Error::Eval { kind, subtree }) => {
                assert_eq!(kind, crate::error::EvalErrorKind::LogNonPositive);
                assert_eq!(subtree, "ln(x1)");
            }
            other => panic!("unexpected {other:?}"),
        }
        let d = Expression::parse("1/(x1 - 1)", 1).unwrap();
        assert!(matches!(
            d.evaluate(&[1.0]),
            Err(Error::Eval {
                kind: crate::error::EvalErrorKind::DivisionByZero,
                ..
            })
        ));
        let s = Expression::parse("sqrt(x1)", 1).unwrap();
        assert!(s.evaluate(&[-1.0]).is_err());
        assert!(matches!(e.evaluate(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn print_then_parse_is_identity_on_examples() {
        for src in [
            THM13A_N2,
            THM13B_N2,
            "0.25*sqrt(x1^2 + x2^2) - 0.25*ln(sqrt(x1^2 + x2^2) + 1)",
            "-x1^-2.5 / cosh(x2) + sinh(-3e-7)",
            "exp(sin(x1)) * cos(x2)^(1/3)",
        ] {
            let a = Expression::parse(src, 2).unwrap();
            let b = Expression::parse(&a.to_string(), 2).unwrap();
            assert_eq!(a, b, "{src} -> {a}");
        }
    }

    #[test]
    fn domain_membership() {
        let d = Domain::parse(&["x1 - x2^2/2"], 2).unwrap();
        assert!(d.contains(&[1.0, 0.0]));
        assert!(!d.contains(&[0.5, 1.0]));
        assert!(Domain::everywhere().contains(&[1e300, -1e300]));
        let l = Domain::parse(&["ln(x1)"], 1).unwrap();
        assert!(!l.contains(&[-1.0]));
    }
}
