//! Small symbolic expression kernel.
//!
//! Expressions are immutable trees over named real variables. The kernel
//! parses the infix grammar used throughout the crate, evaluates with
//! explicit domain checks, differentiates exactly, and applies a light
//! constant-folding simplifier. There is deliberately no canonical form:
//! identities are certified numerically elsewhere.

mod compile;
mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::collections::BTreeSet;
use std::sync::Arc;

pub use compile::Compiled;
pub use eval::{Bindings, DomainKind, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use simplify::simplify;

/// Unary functions known to the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Ln,
    Sqrt,
    Abs,
    /// Derivative of `Abs`; undefined at zero.
    Sign,
    Sin,
    Cos,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

/// Names reserved for function-call syntax; they can never be variables.
pub const FUNCTION_NAMES: &[&str] = &["ln", "sqrt", "abs", "sign", "sin", "cos", "atan", "atan2"];

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// Two-argument arctangent `atan2(y, x)` with range (-pi, pi].
    Atan2(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        simplify::pow(self, exponent)
    }

    pub fn powi(self, exponent: i32) -> Expr {
        simplify::pow(self, Expr::Const(exponent as f64))
    }

    pub fn ln(self) -> Expr {
        simplify::call(Func::Ln, self)
    }

    pub fn sqrt(self) -> Expr {
        simplify::call(Func::Sqrt, self)
    }

    pub fn abs(self) -> Expr {
        simplify::call(Func::Abs, self)
    }

    pub fn sin(self) -> Expr {
        simplify::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        simplify::call(Func::Cos, self)
    }

    pub fn atan(self) -> Expr {
        simplify::call(Func::Atan, self)
    }

    pub fn atan2(y: Expr, x: Expr) -> Expr {
        simplify::atan2(y, x)
    }

    /// Exact partial derivative with respect to `var`.
    pub fn diff(&self, var: &str) -> Expr {
        diff::diff(self, var)
    }

    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// All variable names referenced by the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.to_string());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_variables(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Atan2(a, b) => {
                a.collect_variables(out);
                b.collect_variables(out);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => &**v == name,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(name),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Atan2(a, b) => a.depends_on(name) || b.depends_on(name),
        }
    }

    /// Replaces variables by expressions and re-simplifies the result.
    pub fn substitute(&self, replacements: &[(&str, &Expr)]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(name) => replacements
                .iter()
                .find(|(from, _)| *from == &**name)
                .map(|(_, to)| simplify::simplify(to))
                .unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => simplify::neg(a.substitute(replacements)),
            Expr::Add(a, b) => simplify::add(a.substitute(replacements), b.substitute(replacements)),
            Expr::Sub(a, b) => simplify::sub(a.substitute(replacements), b.substitute(replacements)),
            Expr::Mul(a, b) => simplify::mul(a.substitute(replacements), b.substitute(replacements)),
            Expr::Div(a, b) => simplify::div(a.substitute(replacements), b.substitute(replacements)),
            Expr::Pow(a, b) => simplify::pow(a.substitute(replacements), b.substitute(replacements)),
            Expr::Call(f, a) => simplify::call(*f, a.substitute(replacements)),
            Expr::Atan2(a, b) => {
                simplify::atan2(a.substitute(replacements), b.substitute(replacements))
            }
        }
    }

    /// Renames variables without touching structure.
    pub fn rename(&self, renames: &[(&str, &str)]) -> Expr {
        let targets: Vec<(&str, Expr)> = renames
            .iter()
            .map(|(from, to)| (*from, Expr::var(to)))
            .collect();
        let refs: Vec<(&str, &Expr)> = targets.iter().map(|(f, e)| (*f, e)).collect();
        self.substitute(&refs)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Atan2(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        simplify::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        simplify::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        simplify::mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        simplify::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        simplify::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_and_dependence() {
        let e = parse("u*v + atan2(v, w)", &["u", "v", "w"]).unwrap();
        let vars: Vec<_> = e.variables().into_iter().collect();
        assert_eq!(vars, ["u", "v", "w"]);
        assert!(e.depends_on("w"));
        assert!(!e.depends_on("t"));
    }

    #[test]
    fn substitution_resimplifies() {
        let e = parse("u - v", &["u", "v"]).unwrap();
        let u = Expr::var("u");
        assert_eq!(e.substitute(&[("v", &u)]), Expr::zero());
    }

    #[test]
    fn rename_keeps_shape() {
        let e = parse("r*(1 - r^2)", &["r"]).unwrap();
        let renamed = e.rename(&[("r", "v")]);
        assert_eq!(renamed, parse("v*(1 - v^2)", &["v"]).unwrap());
    }
}
