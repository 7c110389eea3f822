use super::simplify::{add, call, div, mul, neg, pow, sub};
use super::{Expr, Func};

pub(crate) fn diff(e: &Expr, var: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(name) => {
            if &**name == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Neg(a) => neg(diff(a, var)),
        Expr::Add(a, b) => add(diff(a, var), diff(b, var)),
        Expr::Sub(a, b) => sub(diff(a, var), diff(b, var)),
        Expr::Mul(a, b) => add(
            mul(diff(a, var), (**b).clone()),
            mul((**a).clone(), diff(b, var)),
        ),
        Expr::Div(a, b) => {
            let (a, b) = (&**a, &**b);
            let numerator = sub(mul(diff(a, var), b.clone()), mul(a.clone(), diff(b, var)));
            div(numerator, pow(b.clone(), Expr::Const(2.0)))
        }
        Expr::Pow(a, b) => diff_pow(a, b, var),
        Expr::Call(f, a) => {
            let inner = diff(a, var);
            if inner.is_zero() {
                return Expr::zero();
            }
            let a = (**a).clone();
            let outer = match f {
                Func::Ln => return div(inner, a),
                Func::Sqrt => {
                    return div(inner, mul(Expr::Const(2.0), call(Func::Sqrt, a)));
                }
                Func::Abs => call(Func::Sign, a),
                // sign is piecewise constant; its derivative vanishes off zero
                Func::Sign => return Expr::zero(),
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Atan => {
                    return div(inner, add(Expr::one(), pow(a, Expr::Const(2.0))));
                }
            };
            mul(outer, inner)
        }
        Expr::Atan2(y, x) => {
            let (y, x) = (&**y, &**x);
            let numerator = sub(mul(x.clone(), diff(y, var)), mul(y.clone(), diff(x, var)));
            if numerator.is_zero() {
                return Expr::zero();
            }
            let denominator = add(
                pow(x.clone(), Expr::Const(2.0)),
                pow(y.clone(), Expr::Const(2.0)),
            );
            div(numerator, denominator)
        }
    }
}

fn diff_pow(base: &Expr, exponent: &Expr, var: &str) -> Expr {
    let base_prime = diff(base, var);
    if !exponent.depends_on(var) {
        if base_prime.is_zero() {
            return Expr::zero();
        }
        // n * a^(n-1) * a'
        let reduced = match exponent.as_const() {
            Some(n) => Expr::Const(n - 1.0),
            None => sub(exponent.clone(), Expr::one()),
        };
        let power = pow(base.clone(), reduced);
        return mul(mul(exponent.clone(), power), base_prime);
    }
    // a^b * (b' ln a + b a' / a)
    let exponent_prime = diff(exponent, var);
    let log_term = mul(exponent_prime, call(Func::Ln, base.clone()));
    let base_term = div(mul(exponent.clone(), base_prime), base.clone());
    mul(
        pow(base.clone(), exponent.clone()),
        add(log_term, base_term),
    )
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    const UV: &[&str] = &["u", "v"];

    fn central_difference(text: &str, var: &str, at: &[(&str, f64)], h: f64) -> f64 {
        let e = parse(text, &["u", "v", "r"]).unwrap();
        let shifted = |delta: f64| {
            let b: Vec<(&str, f64)> = at
                .iter()
                .map(|(n, x)| (*n, if *n == var { x + delta } else { *x }))
                .collect();
            e.eval(&b).unwrap()
        };
        (shifted(h) - shifted(-h)) / (2.0 * h)
    }

    #[test]
    fn linear_rule() {
        let d = parse("-u+v", UV).unwrap().diff("u");
        assert_eq!(d.as_const(), Some(-1.0));
    }

    #[test]
    fn polynomial_rule() {
        let d = parse("u-v-u^3-u*v^2", UV).unwrap().diff("u");
        let expected = parse("1 - 3*u^2 - v^2", UV).unwrap();
        for &(u, v) in &[(0.3, -1.2), (2.0, 0.5), (-1.0, 1.0)] {
            let b = [("u", u), ("v", v)];
            let got = d.eval(&b).unwrap();
            let want = expected.eval(&b).unwrap();
            assert!((got - want).abs() < 1e-12, "{d} at ({u},{v})");
        }
    }

    #[test]
    fn log_of_abs_radius() {
        let text = "ln(r/sqrt(abs(1-r^2)))";
        let d = parse(text, &["r"]).unwrap().diff("r");
        let exact = d.eval(&[("r", 2.0)]).unwrap();
        let oracle = central_difference(text, "r", &[("r", 2.0)], 1e-6);
        // 1/r + r/(1 - r^2) at r = 2
        assert!((exact - (0.5 - 2.0 / 3.0)).abs() < 1e-12);
        assert!((exact - oracle).abs() < 1e-7);
    }

    #[test]
    fn abs_derivative_undefined_at_zero() {
        let d = parse("abs(u)", UV).unwrap().diff("u");
        assert_eq!(d.eval(&[("u", -3.0)]).unwrap(), -1.0);
        assert!(d.eval(&[("u", 0.0)]).is_err());
    }

    #[test]
    fn atan2_derivative() {
        let text = "atan2(v, u)";
        let e = parse(text, UV).unwrap();
        let at = [("u", -0.7), ("v", 0.4)];
        for var in ["u", "v"] {
            let exact = e.diff(var).eval(&at).unwrap();
            let oracle = central_difference(text, var, &at, 1e-6);
            assert!((exact - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn variable_exponent() {
        let text = "u^v";
        let e = parse(text, UV).unwrap();
        let at = [("u", 1.3), ("v", 0.7)];
        for var in ["u", "v"] {
            let exact = e.diff(var).eval(&at).unwrap();
            let oracle = central_difference(text, var, &at, 1e-6);
            assert!((exact - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn independent_variable_gives_zero() {
        let e = parse("sin(u)*cos(u)^2 + atan(u)", UV).unwrap();
        assert!(e.diff("v").is_zero());
    }
}
