//! Smart constructors and the bottom-up simplifier.
//!
//! Every constructor here returns a node in normal form provided its
//! children already are, so rebuilding a tree bottom-up is idempotent.
//! Folding only happens when the folded value is finite and defined.

use super::eval::apply_func;
use super::{Expr, Func};

fn fold(value: f64) -> Option<Expr> {
    value.is_finite().then_some(Expr::Const(value))
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(folded) = fold(x + y) {
            return folded;
        }
    }
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    Expr::Add(Box::new(a), Box::new(b))
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(folded) = fold(x - y) {
            return folded;
        }
    }
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    if a == b {
        return Expr::zero();
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(folded) = fold(x * y) {
            return folded;
        }
    }
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    if a.as_const() == Some(-1.0) {
        return neg(b);
    }
    if b.as_const() == Some(-1.0) {
        return neg(a);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if y != 0.0 {
            if let Some(folded) = fold(x / y) {
                return folded;
            }
        }
    }
    if b.is_one() {
        return a;
    }
    if a.is_zero() && !b.is_zero() {
        return Expr::zero();
    }
    Expr::Div(Box::new(a), Box::new(b))
}

pub(crate) fn pow(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(folded) = fold(x.powf(y)) {
            return folded;
        }
    }
    if b.is_one() {
        return a;
    }
    if b.is_zero() {
        return Expr::one();
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

pub(crate) fn call(f: Func, a: Expr) -> Expr {
    if let Some(x) = a.as_const() {
        if let Ok(value) = apply_func(f, x) {
            if let Some(folded) = fold(value) {
                return folded;
            }
        }
    }
    Expr::Call(f, Box::new(a))
}

pub(crate) fn atan2(y: Expr, x: Expr) -> Expr {
    if let (Some(yc), Some(xc)) = (y.as_const(), x.as_const()) {
        if yc != 0.0 || xc != 0.0 {
            return Expr::Const(yc.atan2(xc));
        }
    }
    Expr::Atan2(Box::new(y), Box::new(x))
}

/// Constant folding plus the 0/1 identities and syntactic `x - x`.
pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(*c),
        Expr::Var(_) => e.clone(),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Add(a, b) => add(simplify(a), simplify(b)),
        Expr::Sub(a, b) => sub(simplify(a), simplify(b)),
        Expr::Mul(a, b) => mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => div(simplify(a), simplify(b)),
        Expr::Pow(a, b) => pow(simplify(a), simplify(b)),
        Expr::Call(f, a) => call(*f, simplify(a)),
        Expr::Atan2(y, x) => atan2(simplify(y), simplify(x)),
    }
}
