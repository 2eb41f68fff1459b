//! Small-step, call-by-value, left-to-right evaluation.
//!
//! Applying a function with an unset body halts the machine with the
//! argument: unset functions act as external continuations.

use crate::ir::{Expr, ExprKind, Label, Prim, Program};
use crate::transform::beta_reduce;
use crate::Error;

pub const DEFAULT_FUEL: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(Expr),
    /// An unset function `cont` was applied to `value`.
    Halt {
        cont: Label,
        value: Expr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("out of fuel after {0} steps")]
    OutOfFuel(u64),
    #[error(transparent)]
    Ir(#[from] Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Next(Expr),
    Value,
    Halt(Label, Expr),
}

pub fn is_value(p: &Program, e: Expr) -> bool {
    match p.kind(e) {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Prim(_) | ExprKind::Fun(_) => true,
        ExprKind::Tuple(es) => es.iter().all(|&x| is_value(p, x)),
        _ => false,
    }
}

/// One reduction step of `e`.
pub fn step(p: &mut Program, e: Expr) -> Result<Step, EvalError> {
    stacker::maybe_grow(64 * 1024, 2 << 20, || step_inner(p, e))
}

fn step_inner(p: &mut Program, e: Expr) -> Result<Step, EvalError> {
    match p.kind(e).clone() {
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Prim(_) | ExprKind::Fun(_) => Ok(Step::Value),
        ExprKind::Var(l) => Err(EvalError::Stuck(format!("free variable @{}", p.name(l)))),
        ExprKind::Tuple(es) => {
            let Some(i) = es.iter().position(|&x| !is_value(p, x)) else {
                return Ok(Step::Value);
            };
            match step(p, es[i])? {
                Step::Next(x) => {
                    let mut v = es.to_vec();
                    v[i] = x;
                    Ok(Step::Next(p.tuple(&v)))
                }
                other => Ok(other),
            }
        }
        ExprKind::Extract(x, i) => {
            if !is_value(p, x) {
                return match step(p, x)? {
                    Step::Next(x) => Ok(Step::Next(p.extract(x, i)?)),
                    other => Ok(other),
                };
            }
            match p.kind(x) {
                ExprKind::Tuple(vs) => Ok(Step::Next(vs[i as usize])),
                _ => Err(EvalError::Stuck(format!("extract from {}", p.expr_str(x)))),
            }
        }
        ExprKind::App(a, b) => {
            if !is_value(p, a) {
                return match step(p, a)? {
                    Step::Next(a) => Ok(Step::Next(p.app(a, b)?)),
                    other => Ok(other),
                };
            }
            if !is_value(p, b) {
                return match step(p, b)? {
                    Step::Next(b) => Ok(Step::Next(p.app(a, b)?)),
                    other => Ok(other),
                };
            }
            match p.kind(a).clone() {
                ExprKind::Fun(l) if p.body(l).is_none() => Ok(Step::Halt(l, b)),
                ExprKind::Fun(_) => Ok(Step::Next(beta_reduce(p, e)?.expr)),
                ExprKind::Prim(op) => delta(p, op, b).map(Step::Next),
                _ => Err(EvalError::Stuck(format!("apply {}", p.expr_str(a)))),
            }
        }
    }
}

fn delta(p: &mut Program, op: Prim, arg: Expr) -> Result<Expr, EvalError> {
    let stuck = |p: &Program| EvalError::Stuck(format!("%{} {}", op.name(), p.expr_str(arg)));
    let ExprKind::Tuple(vs) = p.kind(arg).clone() else { return Err(stuck(p)) };
    if let Prim::Br(_) = op {
        let (&ExprKind::Bool(c), [_, t, f]) = (p.kind(vs[0]), &vs[..]) else { return Err(stuck(p)) };
        let unit = p.tuple(&[]);
        return Ok(p.app(if c { *t } else { *f }, unit)?);
    }
    let (&ExprKind::Int(x), &ExprKind::Int(y)) = (p.kind(vs[0]), p.kind(vs[1])) else { return Err(stuck(p)) };
    Ok(match op {
        Prim::Add => p.int(x.wrapping_add(y)),
        Prim::Sub => p.int(x.wrapping_sub(y)),
        Prim::Mul => p.int(x.wrapping_mul(y)),
        Prim::Lt => p.bool(x < y),
        Prim::Le => p.bool(x <= y),
        Prim::Eq => p.bool(x == y),
        Prim::Br(_) => unreachable!(),
    })
}

/// Runs `e` to a value or a halt. Returns the outcome and the step count.
pub fn eval(p: &mut Program, e: Expr, fuel: u64) -> Result<(Outcome, u64), EvalError> {
    let mut cur = e;
    let mut steps = 0;
    loop {
        match step(p, cur)? {
            Step::Value => return Ok((Outcome::Value(cur), steps)),
            Step::Halt(cont, value) => return Ok((Outcome::Halt { cont, value }, steps)),
            Step::Next(x) => {
                steps += 1;
                if steps > fuel {
                    return Err(EvalError::OutOfFuel(fuel));
                }
                cur = x;
            }
        }
    }
}
