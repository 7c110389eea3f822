use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{Expr, Func};

/// Source of variable values during evaluation.
pub trait Bindings {
    fn value(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for HashMap<&str, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

impl Bindings for Vec<(&str, f64)> {
    fn value(&self, name: &str) -> Option<f64> {
        self.as_slice().value(name)
    }
}

impl Bindings for Vec<(String, f64)> {
    fn value(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    SignAtZero,
    InvalidPower,
    AngleAtOrigin,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtOfNegative => "square root of a negative value",
            DomainKind::SignAtZero => "derivative of abs at zero",
            DomainKind::InvalidPower => "power with no real value",
            DomainKind::AngleAtOrigin => "atan2 at the origin",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no value bound for variable `{0}`")]
    Unbound(String),
    #[error("{kind} in `{subexpr}`")]
    Domain { kind: DomainKind, subexpr: String },
}

pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, DomainKind> {
    Ok(match f {
        Func::Ln => {
            if x <= 0.0 {
                return Err(DomainKind::LogOfNonPositive);
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(DomainKind::SqrtOfNegative);
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
        Func::Sign => {
            if x == 0.0 {
                return Err(DomainKind::SignAtZero);
            }
            x.signum()
        }
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Atan => x.atan(),
    })
}

pub(crate) fn apply_div(a: f64, b: f64) -> Result<f64, DomainKind> {
    if b == 0.0 {
        Err(DomainKind::DivisionByZero)
    } else {
        Ok(a / b)
    }
}

pub(crate) fn apply_pow(a: f64, b: f64) -> Result<f64, DomainKind> {
    let value = a.powf(b);
    if value.is_nan() || (value.is_infinite() && a.is_finite() && b.is_finite() && a == 0.0) {
        Err(DomainKind::InvalidPower)
    } else {
        Ok(value)
    }
}

pub(crate) fn apply_atan2(y: f64, x: f64) -> Result<f64, DomainKind> {
    if y == 0.0 && x == 0.0 {
        Err(DomainKind::AngleAtOrigin)
    } else {
        Ok(y.atan2(x))
    }
}

impl Expr {
    /// Evaluates with real arithmetic; singular operations are reported,
    /// never silently turned into infinities or NaN.
    pub fn eval<B: Bindings + ?Sized>(&self, bindings: &B) -> Result<f64, EvalError> {
        let domain = |kind: DomainKind, node: &Expr| EvalError::Domain {
            kind,
            subexpr: node.to_string(),
        };
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => bindings
                .value(name)
                .ok_or_else(|| EvalError::Unbound(name.to_string())),
            Expr::Neg(a) => Ok(-a.eval(bindings)?),
            Expr::Add(a, b) => Ok(a.eval(bindings)? + b.eval(bindings)?),
            Expr::Sub(a, b) => Ok(a.eval(bindings)? - b.eval(bindings)?),
            Expr::Mul(a, b) => Ok(a.eval(bindings)? * b.eval(bindings)?),
            Expr::Div(a, b) => {
                let (x, y) = (a.eval(bindings)?, b.eval(bindings)?);
                apply_div(x, y).map_err(|k| domain(k, self))
            }
            Expr::Pow(a, b) => {
                let (x, y) = (a.eval(bindings)?, b.eval(bindings)?);
                apply_pow(x, y).map_err(|k| domain(k, self))
            }
            Expr::Call(f, a) => {
                let x = a.eval(bindings)?;
                apply_func(*f, x).map_err(|k| domain(k, self))
            }
            Expr::Atan2(a, b) => {
                let (y, x) = (a.eval(bindings)?, b.eval(bindings)?);
                apply_atan2(y, x).map_err(|k| domain(k, self))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    const UV: &[&str] = &["u", "v"];

    #[test]
    fn linear_component() {
        let e = parse("-u+v", UV).unwrap();
        assert_eq!(e.eval(&[("u", 2.0), ("v", 1.0)]).unwrap(), -1.0);
    }

    #[test]
    fn nonlinear_component_at_unit_point() {
        let e = parse("u+v-v^3-u^2*v", UV).unwrap();
        assert_eq!(e.eval(&[("u", 1.0), ("v", 1.0)]).unwrap(), 0.0);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = parse("1/(u-v)", UV).unwrap();
        let err = e.eval(&[("u", 1.0), ("v", 1.0)]).unwrap_err();
        match err {
            EvalError::Domain { kind, subexpr } => {
                assert_eq!(kind, DomainKind::DivisionByZero);
                assert_eq!(subexpr, "1/(u - v)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn log_and_sqrt_domains() {
        let ln = parse("ln(u)", UV).unwrap();
        assert!(ln.eval(&[("u", 0.0)]).is_err());
        let ln_abs = parse("ln(abs(u))", UV).unwrap();
        assert!((ln_abs.eval(&[("u", -1.0)]).unwrap()).abs() < 1e-15);
        let sq = parse("sqrt(u)", UV).unwrap();
        assert!(sq.eval(&[("u", -1e-300)]).is_err());
        assert_eq!(sq.eval(&[("u", 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn invalid_powers() {
        let e = parse("u^v", UV).unwrap();
        assert!(e.eval(&[("u", -2.0), ("v", 0.5)]).is_err());
        assert!(e.eval(&[("u", 0.0), ("v", -1.0)]).is_err());
        assert_eq!(e.eval(&[("u", -2.0), ("v", 3.0)]).unwrap(), -8.0);
    }

    #[test]
    fn unbound_variable() {
        let e = parse("u+v", UV).unwrap();
        assert_eq!(
            e.eval(&[("u", 1.0)]).unwrap_err(),
            EvalError::Unbound("v".into())
        );
    }

    #[test]
    fn deterministic() {
        let e = parse("sin(u)*cos(v)/(1+u^2) - atan2(v, u)", UV).unwrap();
        let b = [("u", 0.37), ("v", -1.21)];
        assert_eq!(e.eval(&b).unwrap().to_bits(), e.eval(&b).unwrap().to_bits());
    }
}
