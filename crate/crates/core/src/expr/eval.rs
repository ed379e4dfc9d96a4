use super::{BinOp, Func, Node};
use crate::error::{Error, EvalErrorKind, Result};
use crate::scalar::{integer_exponent, Real};

fn fail(kind: EvalErrorKind, node: &Node) -> Error {
    Error::Eval {
        kind,
        subtree: node.to_string(),
    }
}

pub(crate) fn apply_func<R: Real>(func: Func, x: R) -> std::result::Result<R, EvalErrorKind> {
    let v = x.to_f64();
    Ok(match func {
        Func::Ln if v <= 0.0 => return Err(EvalErrorKind::LogNonPositive),
        Func::Ln => x.ln(),
        Func::Sqrt if v < 0.0 => return Err(EvalErrorKind::SqrtNegative),
        Func::Sqrt => x.sqrt(),
        Func::Exp => x.exp(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
    })
}

pub(crate) fn apply_pow<R: Real>(x: R, p: f64) -> std::result::Result<R, EvalErrorKind> {
    let v = x.to_f64();
    if v == 0.0 && p < 0.0 {
        return Err(EvalErrorKind::DivisionByZero);
    }
    if v < 0.0 && integer_exponent(p).is_none() {
        return Err(EvalErrorKind::PowNegativeBase);
    }
    if v == 0.0 {
        // 0^p for p >= 0 without going through ln
        return Ok(if p == 0.0 { R::from_f64(1.0) } else { R::from_f64(0.0) });
    }
    Ok(x.powc(p))
}

fn finite<R: Real>(x: R) -> std::result::Result<R, EvalErrorKind> {
    if x.to_f64().is_finite() {
        Ok(x)
    } else {
        Err(EvalErrorKind::NonFinite)
    }
}

pub(crate) fn eval_tree<R: Real>(node: &Node, point: &[R]) -> Result<R> {
    let v = match node {
        Node::Const(c) => return Ok(R::from_f64(*c)),
        Node::Var(i) => return Ok(point[*i]),
        Node::Neg(a) => return Ok(-eval_tree(a, point)?),
        Node::Func(func, a) => {
            let x = eval_tree(a, point)?;
            apply_func(*func, x).and_then(finite)
        }
        Node::Pow(a, p) => {
            let x = eval_tree(a, point)?;
            apply_pow(x, *p).and_then(finite)
        }
        Node::Bin(op, a, b) => {
            let x = eval_tree(a, point)?;
            let y = eval_tree(b, point)?;
            match op {
                BinOp::Add => finite(x + y),
                BinOp::Sub => finite(x - y),
                BinOp::Mul => finite(x * y),
                BinOp::Div if y.to_f64() == 0.0 => Err(EvalErrorKind::DivisionByZero),
                BinOp::Div => finite(x / y),
            }
        }
    };
    v.map_err(|kind| fail(kind, node))
}

/// Postfix instruction for [`Program`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Func(Func),
    Pow(f64),
    Add,
    Sub,
    Mul,
    Div,
}

/// An expression flattened to a stack program. Evaluates in the same
/// operation order as the tree walk, so results agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    dim: usize,
    max_depth: usize,
}

impl Program {
    pub(super) fn compile(root: &Node, dim: usize) -> Program {
        fn emit(node: &Node, ops: &mut Vec<Op>) {
            match node {
                Node::Const(c) => ops.push(Op::Const(*c)),
                Node::Var(i) => ops.push(Op::Var(*i)),
                Node::Neg(a) => {
                    emit(a, ops);
                    ops.push(Op::Neg);
                }
                Node::Func(f, a) => {
                    emit(a, ops);
                    ops.push(Op::Func(*f));
                }
                Node::Pow(a, p) => {
                    emit(a, ops);
                    ops.push(Op::Pow(*p));
                }
                Node::Bin(op, a, b) => {
                    emit(a, ops);
                    emit(b, ops);
                    ops.push(match op {
                        BinOp::Add => Op::Add,
                        BinOp::Sub => Op::Sub,
                        BinOp::Mul => Op::Mul,
                        BinOp::Div => Op::Div,
                    });
                }
            }
        }
        let mut ops = Vec::new();
        emit(root, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div => depth -= 1,
                _ => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program { ops, dim, max_depth }
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: point.len(),
            });
        }
        let mut stack: Vec<f64> = Vec::with_capacity(self.max_depth);
        for (pc, op) in self.ops.iter().enumerate() {
            let res = match *op {
                Op::Const(c) => Ok(c),
                Op::Var(i) => Ok(point[i]),
                Op::Neg => Ok(-stack.pop().expect("stack underflow")),
                Op::Func(f) => apply_func(f, stack.pop().expect("stack underflow")).and_then(finite),
                Op::Pow(p) => apply_pow(stack.pop().expect("stack underflow"), p).and_then(finite),
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let y = stack.pop().expect("stack underflow");
                    let x = stack.pop().expect("stack underflow");
                    match *op {
                        Op::Add => finite(x + y),
                        Op::Sub => finite(x - y),
                        Op::Mul => finite(x * y),
                        _ if y == 0.0 => Err(EvalErrorKind::DivisionByZero),
                        _ => finite(x / y),
                    }
                }
            };
            match res {
                Ok(v) => stack.push(v),
                Err(kind) => {
                    return Err(Error::Eval {
                        kind,
                        subtree: format!("instruction {pc} ({op:?})"),
                    })
                }
            }
        }
        Ok(stack.pop().expect("empty program"))
    }
}
