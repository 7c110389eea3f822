//! Infix printing with the minimal parentheses the parser needs to
//! rebuild the same tree.

use std::fmt;

use super::Expr;

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => ADD,
        Expr::Mul(..) | Expr::Div(..) => MUL,
        Expr::Neg(_) => NEG,
        Expr::Const(c) if c.is_sign_negative() => NEG,
        Expr::Pow(..) => POW,
        Expr::Const(_) | Expr::Var(_) | Expr::Call(..) | Expr::Atan2(..) => ATOM,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if *c == 0.0 && c.is_sign_negative() {
                    f.write_str("-0")
                } else {
                    write_const(f, *c)
                }
            }
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, NEG)
            }
            Expr::Add(a, b) => {
                write_operand(f, a, ADD)?;
                f.write_str(" + ")?;
                write_operand(f, b, MUL)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, ADD)?;
                f.write_str(" - ")?;
                write_operand(f, b, MUL)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, MUL)?;
                f.write_str("*")?;
                write_operand(f, b, NEG)
            }
            Expr::Div(a, b) => {
                write_operand(f, a, MUL)?;
                f.write_str("/")?;
                write_operand(f, b, NEG)
            }
            Expr::Pow(a, b) => {
                write_operand(f, a, ATOM)?;
                f.write_str("^")?;
                write_operand(f, b, NEG)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Atan2(y, x) => write!(f, "atan2({y}, {x})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    const UV: &[&str] = &["u", "v"];

    fn roundtrip(text: &str) -> String {
        parse(text, UV).unwrap().to_string()
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(roundtrip("u - (v - u)"), "u - (v - u)");
        assert_eq!(roundtrip("(u - v) - u"), "u - v - u");
        assert_eq!(roundtrip("u/(v*u)"), "u/(v*u)");
        assert_eq!(roundtrip("(-u)^2"), "(-u)^2");
        assert_eq!(roundtrip("-(u^2)"), "-u^2");
        assert_eq!(roundtrip("(u^v)^2"), "(u^v)^2");
        assert_eq!(roundtrip("u^(v^2)"), "u^v^2");
        assert_eq!(roundtrip("-(u+v)"), "-(u + v)");
        assert_eq!(roundtrip("u*(-v)"), "u*-v");
    }

    #[test]
    fn constants() {
        assert_eq!(roundtrip("2"), "2");
        assert_eq!(roundtrip("0.5*u"), "0.5*u");
        assert_eq!(roundtrip("1e-7*u"), "1e-7*u");
        assert_eq!(roundtrip("(-2)^u"), "(-2)^u");
        assert_eq!(roundtrip("u + -2"), "u + -2");
    }

    #[test]
    fn reparse_is_stable() {
        for text in [
            "ln(u/sqrt(abs(1 - u^2))) - atan2(v, u)",
            "-(1/2)*((u + v)/(u - v))^2",
            "u - v - u^3 - u*v^2",
            "-u/10",
            "2^-u^2",
        ] {
            let once = parse(text, UV).unwrap();
            let twice = parse(&once.to_string(), UV).unwrap();
            assert_eq!(once, twice, "{text}");
        }
    }
}
