//! Systems, generators and their first prolongations.
//!
//! Derivative coordinates are ordinary expression variables named after the
//! chart coordinates: on the time-domain jet space `(t, u, v, udot, vdot)`
//! and on the phase-plane jet space `(u, v, vprime)`. Restriction to the
//! solution set is plain substitution of the right-hand sides.

use crate::error::{Error, Result};
use crate::expr::{Expr, FUNCTION_NAMES};

/// Name of the independent time variable in every chart.
pub const TIME: &str = "t";

/// A named coordinate chart `(first, second)` on the state plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    name: String,
    first: String,
    second: String,
    first_dot: String,
    second_dot: String,
    first_prime: String,
    second_prime: String,
}

impl Chart {
    pub fn new(name: &str, first: &str, second: &str) -> Result<Chart> {
        let valid_ident = |s: &str| {
            let mut chars = s.chars();
            matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
                && chars.all(|c| c.is_alphanumeric() || c == '_')
        };
        for coord in [first, second] {
            if !valid_ident(coord) || coord == TIME || FUNCTION_NAMES.contains(&coord) {
                return Err(Error::InvalidChart(format!(
                    "`{coord}` cannot be used as a state coordinate"
                )));
            }
        }
        if first == second {
            return Err(Error::InvalidChart("coordinates must be distinct".into()));
        }
        let chart = Chart {
            name: name.to_string(),
            first: first.to_string(),
            second: second.to_string(),
            first_dot: format!("{first}dot"),
            second_dot: format!("{second}dot"),
            first_prime: format!("{first}prime"),
            second_prime: format!("{second}prime"),
        };
        let all = chart.jet_time_vars();
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) || *a == chart.second_prime || *a == chart.first_prime {
                return Err(Error::InvalidChart(format!("derived name `{a}` collides")));
            }
        }
        Ok(chart)
    }

    pub fn cartesian() -> Chart {
        Chart::new("cartesian-uv", "u", "v").expect("valid chart")
    }

    pub fn polar() -> Chart {
        Chart::new("polar-theta-r", "theta", "r").expect("valid chart")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn first(&self) -> &str {
        &self.first
    }

    pub fn second(&self) -> &str {
        &self.second
    }

    pub fn first_dot(&self) -> &str {
        &self.first_dot
    }

    pub fn second_dot(&self) -> &str {
        &self.second_dot
    }

    /// Slope coordinate `d second / d first` of the phase plane.
    pub fn second_prime(&self) -> &str {
        &self.second_prime
    }

    /// Slope coordinate of the swapped formulation, `d first / d second`.
    pub fn first_prime(&self) -> &str {
        &self.first_prime
    }

    pub fn state_vars(&self) -> [&str; 2] {
        [&self.first, &self.second]
    }

    pub fn time_vars(&self) -> [&str; 3] {
        [TIME, &self.first, &self.second]
    }

    pub fn jet_time_vars(&self) -> [&str; 5] {
        [TIME, &self.first, &self.second, &self.first_dot, &self.second_dot]
    }

    pub fn jet_phase_vars(&self) -> [&str; 3] {
        [&self.first, &self.second, &self.second_prime]
    }

    pub(crate) fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ChartMismatch {
                expected: self.name.clone(),
                found: other.name.clone(),
            })
        }
    }
}

fn check_vars(e: &Expr, allowed: &[&str], role: &str) -> Result<(), String> {
    match e.variables().into_iter().find(|v| !allowed.contains(&v.as_str())) {
        Some(v) => Err(format!("{role} references `{v}`, allowed: {}", allowed.join(", "))),
        None => Ok(()),
    }
}

/// An autonomous planar system `first' = omega_u`, `second' = omega_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct System2D {
    chart: Chart,
    omega_u: Expr,
    omega_v: Expr,
}

impl System2D {
    pub fn new(chart: Chart, omega_u: Expr, omega_v: Expr) -> Result<System2D> {
        let allowed = chart.state_vars();
        check_vars(&omega_u, &allowed, "omega_u").map_err(Error::InvalidSystem)?;
        check_vars(&omega_v, &allowed, "omega_v").map_err(Error::InvalidSystem)?;
        Ok(System2D {
            chart,
            omega_u,
            omega_v,
        })
    }

    pub fn parse(chart: Chart, omega_u: &str, omega_v: &str) -> Result<System2D> {
        let vars = chart.state_vars();
        let u = crate::parse(omega_u, &vars)?;
        let v = crate::parse(omega_v, &vars)?;
        System2D::new(chart, u, v)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn omega_u(&self) -> &Expr {
        &self.omega_u
    }

    pub fn omega_v(&self) -> &Expr {
        &self.omega_v
    }

    /// Applies the state vector field `omega_u d_u + omega_v d_v` to `phi`.
    pub fn apply_field(&self, phi: &Expr) -> Expr {
        let [u, v] = self.chart.state_vars();
        self.omega_u.clone() * phi.diff(u) + self.omega_v.clone() * phi.diff(v)
    }

    /// Substitutes `udot -> omega_u`, `vdot -> omega_v`.
    pub fn restrict(&self, e: &Expr) -> Expr {
        e.substitute(&[
            (self.chart.first_dot(), &self.omega_u),
            (self.chart.second_dot(), &self.omega_v),
        ])
    }
}

/// Time-domain generator `xi d_t + eta_u d_u + eta_v d_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGenerator {
    chart: Chart,
    xi: Expr,
    eta_u: Expr,
    eta_v: Expr,
}

impl TimeGenerator {
    /// Rejects state tangents that depend on time: they would break autonomy.
    pub fn new(chart: Chart, xi: Expr, eta_u: Expr, eta_v: Expr) -> Result<TimeGenerator> {
        check_vars(&xi, &chart.time_vars(), "xi").map_err(Error::InvalidGenerator)?;
        check_vars(&eta_u, &chart.state_vars(), "eta_u").map_err(Error::InvalidGenerator)?;
        check_vars(&eta_v, &chart.state_vars(), "eta_v").map_err(Error::InvalidGenerator)?;
        Ok(TimeGenerator {
            chart,
            xi,
            eta_u,
            eta_v,
        })
    }

    pub fn parse(chart: Chart, xi: &str, eta_u: &str, eta_v: &str) -> Result<TimeGenerator> {
        let vars = chart.time_vars();
        let xi = crate::parse(xi, &vars)?;
        let eta_u = crate::parse(eta_u, &vars)?;
        let eta_v = crate::parse(eta_v, &vars)?;
        TimeGenerator::new(chart, xi, eta_u, eta_v)
    }

    /// Builds a generator without the autonomy check. Only meant for
    /// exercising [`crate::verify::check_autonomy`].
    #[doc(hidden)]
    pub fn from_raw_parts(chart: Chart, xi: Expr, eta_u: Expr, eta_v: Expr) -> TimeGenerator {
        TimeGenerator {
            chart,
            xi,
            eta_u,
            eta_v,
        }
    }

    pub fn zero(chart: Chart) -> TimeGenerator {
        TimeGenerator::from_raw_parts(chart, Expr::zero(), Expr::zero(), Expr::zero())
    }

    /// `d_t`, the manifest symmetry of every autonomous system.
    pub fn time_translation(chart: Chart) -> TimeGenerator {
        TimeGenerator::from_raw_parts(chart, Expr::one(), Expr::zero(), Expr::zero())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn xi(&self) -> &Expr {
        &self.xi
    }

    pub fn eta_u(&self) -> &Expr {
        &self.eta_u
    }

    pub fn eta_v(&self) -> &Expr {
        &self.eta_v
    }

    pub fn with_xi(&self, xi: Expr) -> Result<TimeGenerator> {
        TimeGenerator::new(self.chart.clone(), xi, self.eta_u.clone(), self.eta_v.clone())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &TimeGenerator, b: f64) -> Result<TimeGenerator> {
        self.chart.ensure_same(&other.chart)?;
        let lin = |x: &Expr, y: &Expr| Expr::Const(a) * x.clone() + Expr::Const(b) * y.clone();
        TimeGenerator::new(
            self.chart.clone(),
            lin(&self.xi, &other.xi),
            lin(&self.eta_u, &other.eta_u),
            lin(&self.eta_v, &other.eta_v),
        )
    }
}

/// Phase-plane generator `zeta_u d_u + zeta_v d_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGenerator {
    chart: Chart,
    zeta_u: Expr,
    zeta_v: Expr,
}

impl PhaseGenerator {
    pub fn new(chart: Chart, zeta_u: Expr, zeta_v: Expr) -> Result<PhaseGenerator> {
        check_vars(&zeta_u, &chart.state_vars(), "zeta_u").map_err(Error::InvalidGenerator)?;
        check_vars(&zeta_v, &chart.state_vars(), "zeta_v").map_err(Error::InvalidGenerator)?;
        Ok(PhaseGenerator {
            chart,
            zeta_u,
            zeta_v,
        })
    }

    pub fn parse(chart: Chart, zeta_u: &str, zeta_v: &str) -> Result<PhaseGenerator> {
        let vars = chart.state_vars();
        let zu = crate::parse(zeta_u, &vars)?;
        let zv = crate::parse(zeta_v, &vars)?;
        PhaseGenerator::new(chart, zu, zv)
    }

    pub fn zero(chart: Chart) -> PhaseGenerator {
        PhaseGenerator {
            chart,
            zeta_u: Expr::zero(),
            zeta_v: Expr::zero(),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn zeta_u(&self) -> &Expr {
        &self.zeta_u
    }

    pub fn zeta_v(&self) -> &Expr {
        &self.zeta_v
    }

    /// Applies `zeta_u d_u + zeta_v d_v` to `phi`.
    pub fn apply(&self, phi: &Expr) -> Expr {
        let [u, v] = self.chart.state_vars();
        self.zeta_u.clone() * phi.diff(u) + self.zeta_v.clone() * phi.diff(v)
    }

    pub fn combine(&self, a: f64, other: &PhaseGenerator, b: f64) -> Result<PhaseGenerator> {
        self.chart.ensure_same(&other.chart)?;
        let lin = |x: &Expr, y: &Expr| Expr::Const(a) * x.clone() + Expr::Const(b) * y.clone();
        PhaseGenerator::new(
            self.chart.clone(),
            lin(&self.zeta_u, &other.zeta_u),
            lin(&self.zeta_v, &other.zeta_v),
        )
    }
}

/// A point `(t, u, v, udot, vdot)` of the time-domain jet space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetPointTime {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub udot: f64,
    pub vdot: f64,
}

impl JetPointTime {
    pub fn values(&self) -> [f64; 5] {
        [self.t, self.u, self.v, self.udot, self.vdot]
    }

    /// The jet of the solution through `(t, u, v)`.
    pub fn on_shell(s: &System2D, t: f64, u: f64, v: f64) -> Result<JetPointTime> {
        let b = [(s.chart.first(), u), (s.chart.second(), v)];
        Ok(JetPointTime {
            t,
            u,
            v,
            udot: s.omega_u.eval(&b)?,
            vdot: s.omega_v.eval(&b)?,
        })
    }

    pub fn is_on_shell(&self, s: &System2D) -> Result<bool> {
        let here = JetPointTime::on_shell(s, self.t, self.u, self.v)?;
        Ok((here.udot - self.udot).abs() <= 1e-12 && (here.vdot - self.vdot).abs() <= 1e-12)
    }

    /// Image under the reduction map `(t,u,v,udot,vdot) -> (u, v, vdot/udot)`.
    pub fn reduce(&self) -> Result<JetPointPhase> {
        if self.udot == 0.0 {
            return Err(Error::ZeroVelocity("udot".into()));
        }
        Ok(JetPointPhase {
            u: self.u,
            v: self.v,
            vprime: self.vdot / self.udot,
        })
    }
}

/// A point `(u, v, vprime)` of the phase-plane jet space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetPointPhase {
    pub u: f64,
    pub v: f64,
    pub vprime: f64,
}

impl JetPointPhase {
    pub fn values(&self) -> [f64; 3] {
        [self.u, self.v, self.vprime]
    }

    pub fn is_on_shell(&self, s: &System2D) -> Result<bool> {
        let omega = phase_rhs(s).eval(&[(s.chart.first(), self.u), (s.chart.second(), self.v)])?;
        Ok((omega - self.vprime).abs() <= 1e-12)
    }
}

/// Right-hand side `omega_v / omega_u` of the phase-plane equation.
pub fn phase_rhs(s: &System2D) -> Expr {
    s.omega_v.clone() / s.omega_u.clone()
}

/// Right-hand side `omega_u / omega_v` of the swapped phase-plane equation.
pub fn phase_rhs_swapped(s: &System2D) -> Expr {
    s.omega_u.clone() / s.omega_v.clone()
}

/// `D_t phi = d_t phi + udot d_u phi + vdot d_v phi`, optionally restricted
/// to solutions.
pub fn total_derivative_time(phi: &Expr, s: &System2D, on_shell: bool) -> Result<Expr> {
    let chart = &s.chart;
    check_vars(phi, &chart.time_vars(), "phi").map_err(Error::InvalidArgument)?;
    let [t, u, v] = chart.time_vars();
    let (udot, vdot) = if on_shell {
        (s.omega_u.clone(), s.omega_v.clone())
    } else {
        (Expr::var(chart.first_dot()), Expr::var(chart.second_dot()))
    };
    Ok(phi.diff(t) + udot * phi.diff(u) + vdot * phi.diff(v))
}

/// First-order prolonged tangents of a time-domain generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedTime {
    /// `D_t eta_u - udot D_t xi` over the full jet coordinates.
    pub eta_u1: Expr,
    pub eta_v1: Expr,
    /// The same tangents restricted to solutions.
    pub eta_u1_on_shell: Expr,
    pub eta_v1_on_shell: Expr,
}

pub fn prolong_time(x: &TimeGenerator, s: &System2D) -> Result<ProlongedTime> {
    s.chart.ensure_same(&x.chart)?;
    let chart = &s.chart;
    let d_xi = total_derivative_time(&x.xi, s, false)?;
    let udot = Expr::var(chart.first_dot());
    let vdot = Expr::var(chart.second_dot());
    let eta_u1 = total_derivative_time(&x.eta_u, s, false)? - udot * d_xi.clone();
    let eta_v1 = total_derivative_time(&x.eta_v, s, false)? - vdot * d_xi;
    Ok(ProlongedTime {
        eta_u1_on_shell: s.restrict(&eta_u1),
        eta_v1_on_shell: s.restrict(&eta_v1),
        eta_u1,
        eta_v1,
    })
}

/// `zeta_v^(1) = D_u zeta_v - v' D_u zeta_u` with `D_u = d_u + v' d_v`.
pub fn prolong_phase(y: &PhaseGenerator) -> Expr {
    let chart = &y.chart;
    let [u, v] = chart.state_vars();
    let slope = Expr::var(chart.second_prime());
    let total = |e: &Expr| e.diff(u) + slope.clone() * e.diff(v);
    total(&y.zeta_v) - slope.clone() * total(&y.zeta_u)
}

/// Prolongation in the swapped formulation with `v` independent:
/// `zeta_u^(1) = D_v zeta_u - u' D_v zeta_v`, `D_v = d_v + u' d_u`.
pub fn prolong_phase_swapped(y: &PhaseGenerator) -> Expr {
    let chart = &y.chart;
    let [u, v] = chart.state_vars();
    let slope = Expr::var(chart.first_prime());
    let total = |e: &Expr| e.diff(v) + slope.clone() * e.diff(u);
    total(&y.zeta_u) - slope.clone() * total(&y.zeta_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn cart() -> Chart {
        Chart::cartesian()
    }

    fn linear() -> System2D {
        models::linear_model().system
    }

    fn at5(e: &Expr, j: [f64; 5]) -> f64 {
        let chart = cart();
        let names = chart.jet_time_vars();
        let b: Vec<(&str, f64)> = names.iter().copied().zip(j).collect();
        e.eval(&b).unwrap()
    }

    #[test]
    fn phase_rhs_examples() {
        let s = linear();
        let omega = phase_rhs(&s);
        assert_eq!(omega.to_string(), "(u - v)/(-u + v)");
        assert_eq!(omega.eval(&[("u", 2.0), ("v", -0.5)]).unwrap(), -1.0);

        let flat = System2D::parse(cart(), "1", "0").unwrap();
        assert!(phase_rhs(&flat).is_zero());

        let nl = models::nonlinear_model().system;
        let value = phase_rhs(&nl).eval(&[("u", 2.0), ("v", 0.0)]).unwrap();
        assert!((value + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn total_derivative_examples() {
        let s = linear();
        let t = Expr::var("t");
        assert!(total_derivative_time(&t, &s, true).unwrap().is_one());

        let mass = crate::parse("u+v", &["u", "v"]).unwrap();
        let d = total_derivative_time(&mass, &s, true).unwrap();
        for &(u, v) in &[(2.0, 1.0), (-0.3, 0.8)] {
            assert_eq!(d.eval(&[("u", u), ("v", v)]).unwrap(), 0.0);
        }

        let product = crate::parse("u*v", &["u", "v"]).unwrap();
        let d = total_derivative_time(&product, &s, true).unwrap();
        assert_eq!(d.eval(&[("u", 2.0), ("v", 1.0)]).unwrap(), 1.0);

        let off = total_derivative_time(&product, &s, false).unwrap();
        assert_eq!(off.variables().into_iter().collect::<Vec<_>>(), ["u", "udot", "v", "vdot"]);
    }

    #[test]
    fn total_derivative_rejects_jet_variables() {
        let s = linear();
        let phi = crate::parse("udot", &["udot"]).unwrap();
        assert!(total_derivative_time(&phi, &s, true).is_err());
    }

    #[test]
    fn prolongation_of_time_scaling() {
        let s = linear();
        let x = TimeGenerator::parse(cart(), "t", "0", "0").unwrap();
        let p = prolong_time(&x, &s).unwrap();
        let j = [0.3, 1.0, 2.0, -0.7, 1.9];
        assert_eq!(at5(&p.eta_u1, j), 0.7);
        assert_eq!(at5(&p.eta_v1, j), -1.9);
    }

    #[test]
    fn prolongation_of_time_translation_vanishes() {
        let s = linear();
        let p = prolong_time(&TimeGenerator::time_translation(cart()), &s).unwrap();
        assert!(p.eta_u1.is_zero() && p.eta_v1.is_zero());
        let p = prolong_time(&TimeGenerator::zero(cart()), &s).unwrap();
        assert!(p.eta_u1.is_zero() && p.eta_v1.is_zero());
    }

    #[test]
    fn prolongation_of_scaling_off_shell() {
        let s = linear();
        let x = TimeGenerator::parse(cart(), "0", "u", "v").unwrap();
        let p = prolong_time(&x, &s).unwrap();
        assert_eq!(p.eta_u1, Expr::var("udot"));
        assert_eq!(p.eta_v1, Expr::var("vdot"));
    }

    #[test]
    fn phase_prolongation_examples() {
        let ys = PhaseGenerator::parse(cart(), "u", "v").unwrap();
        assert!(prolong_phase(&ys).is_zero());

        let yr = PhaseGenerator::parse(cart(), "-v", "u").unwrap();
        let p = prolong_phase(&yr);
        for vp in [-2.0, 0.0, 0.5, 3.0] {
            let got = p.eval(&[("u", 0.1), ("v", 0.2), ("vprime", vp)]).unwrap();
            assert_eq!(got, 1.0 + vp * vp);
        }

        let yu = PhaseGenerator::parse(cart(), "u", "0").unwrap();
        assert_eq!(prolong_phase(&yu), -Expr::var("vprime"));
        assert!(prolong_phase(&PhaseGenerator::zero(cart())).is_zero());
    }

    #[test]
    fn generators_reject_time_dependent_state_tangents() {
        assert!(TimeGenerator::parse(cart(), "t*u", "u", "v").is_ok());
        let err = TimeGenerator::parse(cart(), "0", "t*u", "v").unwrap_err();
        assert!(matches!(err, Error::InvalidGenerator(_)));
        assert!(PhaseGenerator::parse(cart(), "t", "0").is_err());
        assert!(System2D::parse(cart(), "t", "u").is_err());
    }

    #[test]
    fn charts_do_not_mix() {
        let polar = models::nonlinear_model_polar().system;
        let x = TimeGenerator::parse(cart(), "0", "-v", "u").unwrap();
        assert!(matches!(
            prolong_time(&x, &polar),
            Err(Error::ChartMismatch { .. })
        ));
        assert!(Chart::new("bad", "t", "v").is_err());
        assert!(Chart::new("bad", "u", "u").is_err());
        assert!(Chart::new("bad", "sin", "u").is_err());
    }

    #[test]
    fn jet_reduction() {
        let j = JetPointTime {
            t: 0.0,
            u: 2.0,
            v: 1.0,
            udot: -1.0,
            vdot: 1.0,
        };
        assert!(j.is_on_shell(&linear()).unwrap());
        let p = j.reduce().unwrap();
        assert_eq!(p.vprime, -1.0);
        assert!(p.is_on_shell(&linear()).unwrap());
        let stalled = JetPointTime { udot: 0.0, ..j };
        assert!(stalled.reduce().is_err());
    }
}
