use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::field::{Fe, PrimeField};

/// Polynomial over the cells of a single grid row. `Cell(j)` reads column `j`
/// of whichever row the expression is evaluated on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Cell(usize),
    Const(i128),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn col(c: usize) -> Self {
        Expr::Cell(c)
    }

    pub fn constant(k: i128) -> Self {
        Expr::Const(k)
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms.into_iter().reduce(|a, b| a + b).unwrap_or(Expr::Const(0))
    }

    pub fn degree(&self) -> usize {
        match self {
            Expr::Cell(_) => 1,
            Expr::Const(_) => 0,
            Expr::Neg(e) => e.degree(),
            Expr::Add(a, b) => a.degree().max(b.degree()),
            Expr::Mul(a, b) => a.degree() + b.degree(),
        }
    }

    /// Columns referenced, sorted and deduplicated.
    pub fn columns(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_columns(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Cell(c) => out.push(*c),
            Expr::Const(_) => {}
            Expr::Neg(e) => e.collect_columns(out),
            Expr::Add(a, b) | Expr::Mul(a, b) => {
                a.collect_columns(out);
                b.collect_columns(out);
            }
        }
    }

    pub fn compile(&self, field: &PrimeField) -> CompiledExpr {
        let mut ops = Vec::new();
        self.emit(field, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Cell(_) | Op::Const(_) => depth += 1,
                Op::Neg => {}
                Op::Add | Op::Mul => depth -= 1,
            }
            max_depth = max_depth.max(depth);
        }
        CompiledExpr { ops, max_depth }
    }

    fn emit(&self, field: &PrimeField, ops: &mut Vec<Op>) {
        match self {
            Expr::Cell(c) => ops.push(Op::Cell(*c)),
            Expr::Const(k) => ops.push(Op::Const(field.from_i128(*k))),
            Expr::Neg(e) => {
                e.emit(field, ops);
                ops.push(Op::Neg);
            }
            Expr::Add(a, b) => {
                a.emit(field, ops);
                b.emit(field, ops);
                ops.push(Op::Add);
            }
            Expr::Mul(a, b) => {
                a.emit(field, ops);
                b.emit(field, ops);
                ops.push(Op::Mul);
            }
        }
    }

    /// Stable binary encoding, used for circuit digests.
    pub fn encode(&self, out: &mut Vec<u8>) {
        match self {
            Expr::Cell(c) => {
                out.push(0);
                out.extend_from_slice(&(*c as u64).to_le_bytes());
            }
            Expr::Const(k) => {
                out.push(1);
                out.extend_from_slice(&k.to_le_bytes());
            }
            Expr::Neg(e) => {
                out.push(2);
                e.encode(out);
            }
            Expr::Add(a, b) => {
                out.push(3);
                a.encode(out);
                b.encode(out);
            }
            Expr::Mul(a, b) => {
                out.push(4);
                a.encode(out);
                b.encode(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Cell(c) => write!(f, "c{c}"),
            Expr::Const(k) => write!(f, "{k}"),
            Expr::Neg(e) => write!(f, "(- {e})"),
            Expr::Add(a, b) => write!(f, "(+ {a} {b})"),
            Expr::Mul(a, b) => write!(f, "(* {a} {b})"),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(Expr::Neg(Box::new(rhs))))
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl Mul<Expr> for i128 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Const(self) * rhs
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[derive(Clone, Debug)]
enum Op {
    Cell(usize),
    Const(Fe),
    Neg,
    Add,
    Mul,
}

/// Postfix form of an [`Expr`] with constants already lifted into the field.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    max_depth: usize,
}

impl CompiledExpr {
    pub fn stack_size(&self) -> usize {
        self.max_depth
    }

    /// Evaluates with `read(col)` supplying cell values; `None` from `read`
    /// aborts and reports the column.
    pub fn eval<F>(&self, field: &PrimeField, stack: &mut Vec<Fe>, mut read: F) -> Result<Fe, usize>
    where
        F: FnMut(usize) -> Option<Fe>,
    {
        stack.clear();
        for op in &self.ops {
            match op {
                Op::Cell(c) => stack.push(read(*c).ok_or(*c)?),
                Op::Const(k) => stack.push(*k),
                Op::Neg => {
                    let v = stack.pop().expect("well-formed");
                    stack.push(field.neg(v));
                }
                Op::Add => {
                    let b = stack.pop().expect("well-formed");
                    let a = stack.pop().expect("well-formed");
                    stack.push(field.add(a, b));
                }
                Op::Mul => {
                    let b = stack.pop().expect("well-formed");
                    let a = stack.pop().expect("well-formed");
                    stack.push(field.mul(a, b));
                }
            }
        }
        Ok(stack.pop().expect("well-formed"))
    }
}
