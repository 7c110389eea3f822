//! Slot-indexed postfix form of an expression for hot evaluation loops.
//!
//! Arithmetic is performed in exactly the same order as the tree
//! evaluator, so both paths produce bit-identical results.

use std::sync::Arc;

use super::eval::{apply_atan2, apply_div, apply_func, apply_pow, EvalError};
use super::{Expr, Func};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Load(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call(Func),
    Atan2,
}

/// An expression compiled against a fixed, ordered variable list.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    slots: Vec<Arc<str>>,
    depth: usize,
    source: Expr,
}

impl Compiled {
    /// Fails with the name of the first variable missing from `slots`.
    pub fn new<S: AsRef<str>>(expr: &Expr, slots: &[S]) -> Result<Compiled, EvalError> {
        let slots: Vec<Arc<str>> = slots.iter().map(|s| Arc::from(s.as_ref())).collect();
        let mut ops = Vec::with_capacity(expr.size());
        emit(expr, &slots, &mut ops)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Neg | Op::Call(_) => {}
                _ => depth -= 1,
            }
            max_depth = max_depth.max(depth);
        }
        Ok(Compiled {
            ops,
            slots,
            depth: max_depth,
            source: expr.clone(),
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.source
    }

    pub fn slots(&self) -> &[Arc<str>] {
        &self.slots
    }

    /// Evaluates with `values[i]` bound to the i-th slot.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(values.len(), self.slots.len());
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            let ok = match *op {
                Op::Const(c) => {
                    stack.push(c);
                    true
                }
                Op::Load(i) => {
                    stack.push(values[i]);
                    true
                }
                Op::Neg => {
                    let a = stack.last_mut().expect("stack");
                    *a = -*a;
                    true
                }
                Op::Call(f) => {
                    let a = stack.last_mut().expect("stack");
                    match apply_func(f, *a) {
                        Ok(v) => {
                            *a = v;
                            true
                        }
                        Err(_) => false,
                    }
                }
                binary => {
                    let b = stack.pop().expect("stack");
                    let a = stack.last_mut().expect("stack");
                    let result = match binary {
                        Op::Add => Ok(*a + b),
                        Op::Sub => Ok(*a - b),
                        Op::Mul => Ok(*a * b),
                        Op::Div => apply_div(*a, b),
                        Op::Pow => apply_pow(*a, b),
                        Op::Atan2 => apply_atan2(*a, b),
                        _ => unreachable!(),
                    };
                    match result {
                        Ok(v) => {
                            *a = v;
                            true
                        }
                        Err(_) => false,
                    }
                }
            };
            if !ok {
                return Err(self.explain(values));
            }
        }
        Ok(stack[0])
    }

    // The tree evaluator reproduces the failure with a readable subexpression.
    fn explain(&self, values: &[f64]) -> EvalError {
        let bindings: Vec<(&str, f64)> = self
            .slots
            .iter()
            .zip(values)
            .map(|(s, v)| (&**s, *v))
            .collect();
        match self.source.eval(&bindings) {
            Err(e) => e,
            Ok(_) => unreachable!("compiled and tree evaluation disagree"),
        }
    }
}

fn emit(e: &Expr, slots: &[Arc<str>], ops: &mut Vec<Op>) -> Result<(), EvalError> {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(name) => {
            let index = slots
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| EvalError::Unbound(name.to_string()))?;
            ops.push(Op::Load(index));
        }
        Expr::Neg(a) => {
            emit(a, slots, ops)?;
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, slots, ops)?;
            ops.push(Op::Call(*f));
        }
        Expr::Add(a, b)
        | Expr::Sub(a, b)
        | Expr::Mul(a, b)
        | Expr::Div(a, b)
        | Expr::Pow(a, b)
        | Expr::Atan2(a, b) => {
            emit(a, slots, ops)?;
            emit(b, slots, ops)?;
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                Expr::Div(..) => Op::Div,
                Expr::Pow(..) => Op::Pow,
                _ => Op::Atan2,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn matches_tree_evaluation_bitwise() {
        let vars = ["t", "u", "v"];
        let e = parse(
            "-(1/2)*((u+v)/(u-v))^2 + t*sin(u)*atan2(v, u) - ln(abs(1 - u^2 - v^2))",
            &vars,
        )
        .unwrap();
        let c = Compiled::new(&e, &vars).unwrap();
        for &(t, u, v) in &[(0.0, 2.0, 1.0), (1.5, -0.3, 0.7), (-2.0, 0.1, -2.5)] {
            let tree = e.eval(&[("t", t), ("u", u), ("v", v)]).unwrap();
            let flat = c.eval(&[t, u, v]).unwrap();
            assert_eq!(tree.to_bits(), flat.to_bits());
        }
    }

    #[test]
    fn errors_carry_subexpression() {
        let e = parse("1/(u-v)", &["u", "v"]).unwrap();
        let c = Compiled::new(&e, &["u", "v"]).unwrap();
        assert_eq!(c.eval(&[1.0, 1.0]).unwrap_err(), e.eval(&[("u", 1.0), ("v", 1.0)]).unwrap_err());
    }

    #[test]
    fn missing_slot() {
        let e = parse("u+v", &["u", "v"]).unwrap();
        assert_eq!(
            Compiled::new(&e, &["u"]).unwrap_err(),
            EvalError::Unbound("v".into())
        );
    }
}
