//! Built-in models: the mass-conserved linear system and the nonlinear
//! oscillator in Cartesian and polar coordinates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::flow::{Sample, Trajectory};
use crate::jets::{Chart, PhaseGenerator, System2D, TimeGenerator};
use crate::region::{Exclusion, SampleRegion};

/// Variable name of the argument of the free function in a lift.
pub const LIFT_ARG: &str = "c";

/// Characteristic integration stops when a guard drops below this.
pub const GUARD_THRESHOLD: f64 = 1e-3;

/// Exact solution from `(u0, v0)` at time `t` (initial time 0).
pub type ClosedSolution = fn((f64, f64), f64) -> (f64, f64);

/// Closed-form lift of a named phase generator. The time tangent is
/// `xi_particular + F(c_expr)` for an arbitrary function `F` of one
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedLift {
    pub generator: String,
    pub xi_particular: Expr,
    /// Constant of motion the free function is composed with.
    pub c_expr: Expr,
    /// Expressions whose smallness makes the lift singular.
    pub guards: Vec<Expr>,
}

impl NamedLift {
    /// `xi_particular + F(c_expr)`, with `f` an expression in `c`.
    pub fn xi_with(&self, f: &Expr) -> Result<Expr> {
        if let Some(bad) = f.variables().into_iter().find(|v| v != LIFT_ARG) {
            return Err(Error::InvalidArgument(format!(
                "free function may only depend on `{LIFT_ARG}`, found `{bad}`"
            )));
        }
        Ok((self.xi_particular.clone() + f.substitute(&[(LIFT_ARG, &self.c_expr)])).simplify())
    }

    /// The lifted time-domain generator for the given free function.
    pub fn generator(&self, model: &NamedModel, f: &Expr) -> Result<TimeGenerator> {
        let y = model.generator(&self.generator).ok_or_else(|| {
            Error::InvalidArgument(format!("model has no generator `{}`", self.generator))
        })?;
        TimeGenerator::new(y.chart().clone(), self.xi_with(f)?, y.zeta_u().clone(), y.zeta_v().clone())
    }
}

#[derive(Debug, Clone)]
pub struct NamedModel {
    pub name: String,
    pub system: System2D,
    pub generators: Vec<(String, PhaseGenerator)>,
    pub lifts: Vec<NamedLift>,
    pub closed_solution: Option<ClosedSolution>,
    /// Default admissible sampling regions.
    pub regions: Vec<SampleRegion>,
}

impl NamedModel {
    pub fn generator(&self, name: &str) -> Option<&PhaseGenerator> {
        self.generators.iter().find(|(n, _)| n == name).map(|(_, y)| y)
    }

    pub fn lift(&self, generator: &str) -> Option<&NamedLift> {
        self.lifts.iter().find(|l| l.generator == generator)
    }

    pub fn chart(&self) -> &Chart {
        self.system.chart()
    }
}

fn state_expr(chart: &Chart, text: &str) -> Expr {
    parse(text, &chart.state_vars()).expect("built-in expression parses")
}

pub fn linear_model() -> NamedModel {
    let chart = Chart::cartesian();
    let e = |text: &str| state_expr(&chart, text);
    let system = System2D::new(chart.clone(), e("-u + v"), e("u - v")).expect("valid system");
    let scaling = PhaseGenerator::new(chart.clone(), e("u"), e("v")).expect("valid generator");
    let rotation = PhaseGenerator::new(chart.clone(), e("(u+v)/(u-v)*v"), e("-(u+v)/(u-v)*u"))
        .expect("valid generator");
    let region = SampleRegion::new((-3.0, 3.0), (-3.0, 3.0))
        .exclude_near(e("u - v"), 0.1)
        .exclude_near(system.omega_u().clone(), 0.05);
    NamedModel {
        name: "linear-mass-conserved".into(),
        generators: vec![("Y_S".into(), scaling), ("Y_G".into(), rotation)],
        lifts: vec![
            NamedLift {
                generator: "Y_S".into(),
                xi_particular: Expr::zero(),
                c_expr: e("u + v"),
                guards: Vec::new(),
            },
            NamedLift {
                generator: "Y_G".into(),
                xi_particular: e("-1/2*((u+v)/(u-v))^2"),
                c_expr: e("u + v"),
                guards: vec![e("u - v")],
            },
        ],
        closed_solution: Some(linear_solution),
        regions: vec![region],
        system,
    }
}

fn linear_solution((u0, v0): (f64, f64), t: f64) -> (f64, f64) {
    let mean = 0.5 * (u0 + v0);
    let half_gap = 0.5 * (u0 - v0) * (-2.0 * t).exp();
    (mean + half_gap, mean - half_gap)
}

/// Annuli `0.2 <= r <= 0.9` and `1.1 <= r <= 2.5` in Cartesian coordinates.
fn cartesian_annuli(chart: &Chart, omega_u: &Expr) -> Vec<SampleRegion> {
    let r2 = state_expr(chart, "u^2 + v^2");
    [(0.2, 0.9), (1.1, 2.5)]
        .into_iter()
        .map(|(lo, hi)| {
            SampleRegion::new((-hi, hi), (-hi, hi))
                .exclude(Exclusion::negative(r2.clone() - Expr::Const(lo * lo)))
                .exclude(Exclusion::negative(Expr::Const(hi * hi) - r2.clone()))
                .exclude_near(omega_u.clone(), 0.05)
        })
        .collect()
}

pub fn nonlinear_model() -> NamedModel {
    let chart = Chart::cartesian();
    let e = |text: &str| state_expr(&chart, text);
    let system = System2D::new(chart.clone(), e("u - v - u^3 - u*v^2"), e("u + v - v^3 - u^2*v"))
        .expect("valid system");
    let rotation = PhaseGenerator::new(chart.clone(), e("-v"), e("u")).expect("valid generator");
    NamedModel {
        name: "nonlinear-oscillator".into(),
        generators: vec![("Y_R".into(), rotation)],
        lifts: vec![NamedLift {
            generator: "Y_R".into(),
            xi_particular: Expr::zero(),
            c_expr: e("ln(sqrt((u^2+v^2)/abs(1-(u^2+v^2)))) - atan2(v, u)"),
            guards: vec![e("1 - (u^2+v^2)")],
        }],
        closed_solution: Some(oscillator_solution),
        regions: cartesian_annuli(&chart, system.omega_u()),
        system,
    }
}

fn oscillator_solution(p: (f64, f64), t: f64) -> (f64, f64) {
    let (theta, r) = to_polar(p).unwrap_or((0.0, 0.0));
    from_polar(polar_solution((theta, r), t))
}

pub fn nonlinear_model_polar() -> NamedModel {
    let chart = Chart::polar();
    let e = |text: &str| state_expr(&chart, text);
    let system = System2D::new(chart.clone(), Expr::one(), e("r*(1 - r^2)")).expect("valid system");
    let rotation = PhaseGenerator::new(chart.clone(), Expr::one(), Expr::zero()).expect("valid generator");
    NamedModel {
        name: "nonlinear-oscillator-polar".into(),
        generators: vec![("Y_R".into(), rotation)],
        lifts: vec![NamedLift {
            generator: "Y_R".into(),
            xi_particular: Expr::zero(),
            c_expr: e("ln(r/sqrt(abs(1 - r^2))) - theta"),
            guards: vec![e("1 - r^2")],
        }],
        closed_solution: Some(polar_solution),
        regions: [(0.2, 0.9), (1.1, 2.5)]
            .into_iter()
            .map(|band| SampleRegion::new((-PI, PI), band))
            .collect(),
        system,
    }
}

/// `theta = theta0 + t`, `r = r0 / sqrt(r0^2 + (1 - r0^2) e^{-2t})`.
pub fn polar_solution((theta0, r0): (f64, f64), t: f64) -> (f64, f64) {
    let r = r0 / (r0 * r0 + (1.0 - r0 * r0) * (-2.0 * t).exp()).sqrt();
    (theta0 + t, r)
}

pub fn by_name(name: &str) -> Option<NamedModel> {
    match name {
        "linear-mass-conserved" => Some(linear_model()),
        "nonlinear-oscillator" => Some(nonlinear_model()),
        "nonlinear-oscillator-polar" => Some(nonlinear_model_polar()),
        _ => None,
    }
}

pub fn builtin_models() -> Vec<NamedModel> {
    vec![linear_model(), nonlinear_model(), nonlinear_model_polar()]
}

/// `(u, v) -> (theta, r)` with `theta` in (-pi, pi].
pub fn to_polar((u, v): (f64, f64)) -> Result<(f64, f64)> {
    if u == 0.0 && v == 0.0 {
        return Err(Error::SingularPoint {
            what: "r".into(),
            value: 0.0,
            threshold: 0.0,
            point: "(u, v) = (0, 0)".into(),
        });
    }
    let theta = v.atan2(u);
    // atan2 returns -pi for (negative, -0.0)
    let theta = if theta == -PI { PI } else { theta };
    Ok((theta, u.hypot(v)))
}

pub fn from_polar((theta, r): (f64, f64)) -> (f64, f64) {
    (r * theta.cos(), r * theta.sin())
}

/// Converts a Cartesian trajectory to polar coordinates, unwrapping the
/// angle so it varies continuously along the curve.
pub fn trajectory_to_polar(traj: &Trajectory) -> Result<Trajectory> {
    traj.chart.ensure_same(&Chart::cartesian())?;
    let mut samples = Vec::with_capacity(traj.samples.len());
    let mut previous: Option<f64> = None;
    for s in &traj.samples {
        let (mut theta, r) = to_polar((s.u, s.v))?;
        if let Some(prev) = previous {
            theta += 2.0 * PI * ((prev - theta) / (2.0 * PI)).round();
        }
        previous = Some(theta);
        samples.push(Sample { t: s.t, u: theta, v: r });
    }
    Ok(Trajectory {
        chart: Chart::polar(),
        h: traj.h,
        samples,
    })
}

pub fn trajectory_from_polar(traj: &Trajectory) -> Result<Trajectory> {
    traj.chart.ensure_same(&Chart::polar())?;
    let samples = traj
        .samples
        .iter()
        .map(|s| {
            let (u, v) = from_polar((s.u, s.v));
            Sample { t: s.t, u, v }
        })
        .collect();
    Ok(Trajectory {
        chart: Chart::cartesian(),
        h: traj.h,
        samples,
    })
}
