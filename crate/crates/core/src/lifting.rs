//! Lifting phase-plane generators to the time domain by solving the
//! lifting condition `(D_t xi)|_Δ = G(u, v)` for the time tangent.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::flow::{march, time_grid as step_grid};
use crate::jets::{total_derivative_time, PhaseGenerator, System2D, TimeGenerator};
use crate::models::{NamedLift, NamedModel, GUARD_THRESHOLD, LIFT_ARG};
use crate::region::{Exclusion, ResidualReport, SampleRegion};
use crate::verify::{grid_report, time_grid, PhaseResidual, DEFAULT_OMEGA_THRESHOLD};

/// Which component of the system divides the lifting condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftForm {
    U,
    V,
}

/// `G = [(ω·∂)ζ - (ζ·∂)ω] / ω` for the chosen component.
pub fn lift_rhs(s: &System2D, y: &PhaseGenerator, form: LiftForm) -> Result<Expr> {
    s.chart().ensure_same(y.chart())?;
    let (omega, zeta) = match form {
        LiftForm::U => (s.omega_u(), y.zeta_u()),
        LiftForm::V => (s.omega_v(), y.zeta_v()),
    };
    let omega = omega.simplify();
    if omega.is_zero() {
        return Err(Error::ZeroDenominator(omega.to_string()));
    }
    Ok(((s.apply_field(zeta) - y.apply(&omega)) / omega).simplify())
}

/// Gap between the two forms of the lifting right-hand side, together with
/// the phase-plane residual of the generator over the same points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftConsistency {
    pub gap: ResidualReport,
    pub phase_residual: ResidualReport,
}

/// Compares the u-form and v-form of `G`. Points where either system
/// component is below [`DEFAULT_OMEGA_THRESHOLD`] are skipped.
pub fn check_lift_consistency(
    s: &System2D,
    y: &PhaseGenerator,
    region: &SampleRegion,
    tol: f64,
) -> Result<(bool, LiftConsistency)> {
    let vars = s.chart().state_vars();
    let gu = Compiled::new(&lift_rhs(s, y, LiftForm::U)?, &vars)?;
    let gv = Compiled::new(&lift_rhs(s, y, LiftForm::V)?, &vars)?;
    let residual = PhaseResidual::new(s, y)?;
    let region = region
        .clone()
        .exclude(Exclusion::near(s.omega_u().clone(), DEFAULT_OMEGA_THRESHOLD))
        .exclude(Exclusion::near(s.omega_v().clone(), DEFAULT_OMEGA_THRESHOLD));
    let points: Vec<Vec<f64>> = region.points(s.chart())?.into_iter().map(|p| p.to_vec()).collect();
    let gap = grid_report(&vars, &["gap"], &points, |p| {
        let wrap = |e| Error::eval_at(e, &vars, p);
        Ok(vec![gu.eval(p).map_err(wrap)? - gv.eval(p).map_err(wrap)?])
    })?
    .with_tolerance(tol);
    let phase_residual = grid_report(&vars, &["residual"], &points, |p| {
        Ok(vec![residual.eval((p[0], p[1]))?])
    })?;
    Ok((gap.passed(), LiftConsistency { gap, phase_residual }))
}

/// Inputs for integrating the time tangent along one characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    pub y: PhaseGenerator,
    /// Free function of `c`, composed with `c_expr`.
    pub f: Option<Expr>,
    pub c_expr: Option<Expr>,
    /// Integration stops when any of these falls below [`GUARD_THRESHOLD`]
    /// in absolute value.
    pub guards: Vec<Expr>,
}

impl LiftSpec {
    pub fn new(y: PhaseGenerator) -> LiftSpec {
        LiftSpec {
            y,
            f: None,
            c_expr: None,
            guards: Vec::new(),
        }
    }

    pub fn with_free_function(mut self, f: Expr, c_expr: Expr) -> LiftSpec {
        self.f = Some(f);
        self.c_expr = Some(c_expr);
        self
    }

    pub fn with_guard(mut self, guard: Expr) -> LiftSpec {
        self.guards.push(guard);
        self
    }

    /// Lift of a packaged generator; `f` defaults to no free function.
    pub fn from_named(model: &NamedModel, lift: &NamedLift, f: Option<Expr>) -> Result<LiftSpec> {
        let y = model
            .generator(&lift.generator)
            .ok_or_else(|| Error::InvalidArgument(format!("model has no generator `{}`", lift.generator)))?
            .clone();
        let mut spec = LiftSpec::new(y);
        spec.guards = lift.guards.clone();
        if let Some(f) = f {
            spec = spec.with_free_function(f, lift.c_expr.clone());
        }
        Ok(spec)
    }

    /// Value of the free-function term at a state.
    fn free_term(&self, p: [f64; 2]) -> Result<f64> {
        let (Some(f), c_expr) = (&self.f, &self.c_expr) else {
            return Ok(0.0);
        };
        let c_expr = c_expr
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("free function given without a constant of motion".into()))?;
        if let Some(bad) = f.variables().into_iter().find(|v| v != LIFT_ARG) {
            return Err(Error::InvalidArgument(format!(
                "free function may only depend on `{LIFT_ARG}`, found `{bad}`"
            )));
        }
        let vars = self.y.chart().state_vars();
        let c = c_expr
            .eval(&[(vars[0], p[0]), (vars[1], p[1])])
            .map_err(|e| Error::eval_at(e, &vars, &p))?;
        f.eval(&[(LIFT_ARG, c)]).map_err(|e| Error::eval_at(e, &[LIFT_ARG], &[c]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftSample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftResult {
    pub samples: Vec<LiftSample>,
    pub xi_closed: Option<Expr>,
    pub residual_report: Option<ResidualReport>,
}

impl LiftResult {
    /// Records the deviation of the numeric time tangent from `xi_closed`
    /// along the samples.
    pub fn compare_closed(mut self, s: &System2D, xi_closed: Expr, tol: f64) -> Result<LiftResult> {
        let vars = s.chart().time_vars();
        let closed = Compiled::new(&xi_closed, &vars)?;
        let points: Vec<[f64; 3]> = self.samples.iter().map(|p| [p.t, p.u, p.v]).collect();
        let diffs = self
            .samples
            .iter()
            .zip(&points)
            .map(|(sample, p)| {
                let value = closed.eval(p).map_err(|e| Error::eval_at(e, &vars, p))?;
                Ok([sample.xi - value])
            })
            .collect::<Result<Vec<_>>>()?;
        self.residual_report = Some(
            ResidualReport::from_samples(
                &vars,
                &["d_xi"],
                points.iter().map(|p| p.as_slice()).zip(diffs.iter().map(|d| d.as_slice())),
            )
            .with_tolerance(tol),
        );
        self.xi_closed = Some(xi_closed);
        Ok(self)
    }
}

/// Integrates `(u, v, xi)` jointly with RK4. The state components use the
/// same stepping as [`crate::flow::integrate_system`], so they match it
/// bit for bit.
pub fn lift_characteristic(
    s: &System2D,
    spec: &LiftSpec,
    initial: (f64, f64),
    xi0: f64,
    t_span: (f64, f64),
    h: f64,
) -> Result<LiftResult> {
    let vars = s.chart().state_vars();
    let field = crate::flow::CompiledSystem::new(s)?;
    let g = Compiled::new(&lift_rhs(s, &spec.y, LiftForm::U)?, &vars)?;
    let guards = spec
        .guards
        .iter()
        .map(|e| Ok((e, Compiled::new(e, &vars)?)))
        .collect::<Result<Vec<_>>>()?;
    let start = [initial.0, initial.1];
    let xi_start = xi0 + spec.free_term(start)?;

    let rhs = |_t: f64, y: &[f64; 3]| {
        let [a, b] = field.eval(y[0], y[1])?;
        let p = [y[0], y[1]];
        let rate = g.eval(&p).map_err(|e| Error::eval_at(e, &vars, &p))?;
        Ok([a, b, rate])
    };
    let check = |t: f64, y: &[f64; 3]| {
        for (expr, c) in &guards {
            let value = c.eval(&[y[0], y[1]]).map(f64::abs).unwrap_or(0.0);
            if value < GUARD_THRESHOLD {
                return Err(Error::IntegrationStopped {
                    t,
                    reason: format!("|{expr}| = {value:e} below {GUARD_THRESHOLD:e}"),
                });
            }
        }
        Ok(())
    };
    let grid = step_grid(t_span.0, t_span.1, h)?;
    let states = march(&rhs, [start[0], start[1], xi_start], &grid, check)?;
    Ok(LiftResult {
        samples: grid
            .iter()
            .zip(states)
            .map(|(&t, y)| LiftSample { t, u: y[0], v: y[1], xi: y[2] })
            .collect(),
        xi_closed: None,
        residual_report: None,
    })
}

/// Several characteristics, integrated in parallel; results keep the order
/// of `starts`, each given as `(initial, xi0)`.
pub fn lift_characteristics(
    s: &System2D,
    spec: &LiftSpec,
    starts: &[((f64, f64), f64)],
    t_span: (f64, f64),
    h: f64,
) -> Result<Vec<LiftResult>> {
    starts
        .par_iter()
        .map(|&(initial, xi0)| lift_characteristic(s, spec, initial, xi0, t_span, h))
        .collect()
}

/// Largest `|(D_t xi)|_Δ - G|` over the region. Points with small `|ω_u|`
/// are skipped; `t` is sampled when `xi` depends on it.
pub fn verify_lift(
    s: &System2D,
    y: &PhaseGenerator,
    xi: &Expr,
    region: &SampleRegion,
    tol: f64,
) -> Result<ResidualReport> {
    let x = assemble_lift(y, xi)?;
    let vars = s.chart().time_vars();
    let lhs = Compiled::new(&total_derivative_time(x.xi(), s, true)?, &vars)?;
    let g = Compiled::new(&lift_rhs(s, y, LiftForm::U)?, &vars)?;
    let region = region
        .clone()
        .exclude(Exclusion::near(s.omega_u().clone(), DEFAULT_OMEGA_THRESHOLD));
    let points = time_grid(s.chart(), &region, x.xi().depends_on(crate::jets::TIME))?;
    Ok(grid_report(&vars, &["residual"], &points, |p| {
        let wrap = |e| Error::eval_at(e, &vars, p);
        Ok(vec![lhs.eval(p).map_err(wrap)? - g.eval(p).map_err(wrap)?])
    })?
    .with_tolerance(tol))
}

/// Largest `|(D_t c)|_Δ|` over the region.
pub fn check_constant_of_motion(
    s: &System2D,
    c_expr: &Expr,
    region: &SampleRegion,
    tol: f64,
) -> Result<ResidualReport> {
    let vars = s.chart().state_vars();
    let rate = Compiled::new(&total_derivative_time(c_expr, s, true)?, &vars)?;
    let points: Vec<Vec<f64>> = region.points(s.chart())?.into_iter().map(|p| p.to_vec()).collect();
    Ok(grid_report(&vars, &["rate"], &points, |p| {
        Ok(vec![rate.eval(p).map_err(|e| Error::eval_at(e, &vars, p))?])
    })?
    .with_tolerance(tol))
}

/// `xi d_t + y`.
pub fn assemble_lift(y: &PhaseGenerator, xi: &Expr) -> Result<TimeGenerator> {
    TimeGenerator::new(y.chart().clone(), xi.clone(), y.zeta_u().clone(), y.zeta_v().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate_system;
    use crate::jets::Chart;
    use crate::models::{linear_model, nonlinear_model, nonlinear_model_polar};
    use crate::parse;
    use crate::reduction::pushforward;
    use crate::verify::is_symmetry_time;
    use std::f64::consts::LN_2;

    fn cart() -> Chart {
        Chart::cartesian()
    }

    fn time_expr(text: &str) -> Expr {
        parse(text, &["t", "u", "v"]).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let m = linear_model();
        let g = lift_rhs(&m.system, m.generator("Y_S").unwrap(), LiftForm::U).unwrap();
        assert!(g.is_zero(), "{g}");
        let g = lift_rhs(&m.system, m.generator("Y_G").unwrap(), LiftForm::U).unwrap();
        assert!((g.eval(&[("u", 2.0), ("v", 1.0)]).unwrap() + 18.0).abs() < 1e-12);

        let p = nonlinear_model_polar();
        let g = lift_rhs(&p.system, p.generator("Y_R").unwrap(), LiftForm::U).unwrap();
        assert!(g.is_zero(), "{g}");

        let s = System2D::parse(cart(), "0", "u").unwrap();
        let y = PhaseGenerator::parse(cart(), "u", "v").unwrap();
        assert!(matches!(lift_rhs(&s, &y, LiftForm::U), Err(Error::ZeroDenominator(_))));
        assert!(lift_rhs(&s, &y, LiftForm::V).is_ok());
    }

    #[test]
    fn consistency_examples() {
        let m = linear_model();
        let region = &m.regions[0];
        let (ok, report) = check_lift_consistency(&m.system, m.generator("Y_G").unwrap(), region, 1e-9).unwrap();
        assert!(ok, "{report:?}");
        let (ok, report) = check_lift_consistency(&m.system, m.generator("Y_S").unwrap(), region, 1e-9).unwrap();
        assert!(ok);
        assert_eq!(report.gap.max_abs_residual, 0.0);

        let y = PhaseGenerator::parse(cart(), "u", "0").unwrap();
        let (ok, report) = check_lift_consistency(&m.system, &y, region, 1e-9).unwrap();
        assert!(!ok);
        assert!(report.gap.max_abs_residual > 0.5);
        assert!(report.phase_residual.max_abs_residual > 0.5);
    }

    #[test]
    fn scaling_characteristic_is_zero() {
        let m = linear_model();
        let spec = LiftSpec::new(m.generator("Y_S").unwrap().clone());
        let out = lift_characteristic(&m.system, &spec, (2.0, 1.0), 0.0, (0.0, 2.0), 1e-3).unwrap();
        assert_eq!(out.samples.len(), 2001);
        assert!(out.samples.iter().all(|p| p.xi == 0.0));
    }

    #[test]
    fn rotation_characteristic_matches_closed_form() {
        let m = linear_model();
        let lift = m.lift("Y_G").unwrap();
        let spec = LiftSpec::from_named(&m, lift, None).unwrap();
        let span = (0.0, LN_2 / 4.0);
        let out = lift_characteristic(&m.system, &spec, (2.0, 1.0), -4.5, span, 1e-4).unwrap();
        let end = out.samples.last().unwrap();
        assert_eq!(end.t, span.1);
        assert!((end.xi + 9.0).abs() < 1e-6, "{}", end.xi);

        let out = out.compare_closed(&m.system, lift.xi_particular.clone(), 1e-6).unwrap();
        assert!(out.residual_report.unwrap().passed());
    }

    #[test]
    fn characteristics_are_trajectories() {
        let m = linear_model();
        let spec = LiftSpec::from_named(&m, m.lift("Y_G").unwrap(), None).unwrap();
        let lifted = lift_characteristic(&m.system, &spec, (2.0, 1.0), -4.5, (0.0, 0.3), 1e-3).unwrap();
        let traj = integrate_system(&m.system, (2.0, 1.0), (0.0, 0.3), 1e-3).unwrap();
        assert_eq!(lifted.samples.len(), traj.samples.len());
        for (a, b) in lifted.samples.iter().zip(&traj.samples) {
            assert_eq!((a.t.to_bits(), a.u.to_bits(), a.v.to_bits()), (b.t.to_bits(), b.u.to_bits(), b.v.to_bits()));
        }
    }

    #[test]
    fn polar_free_function_is_constant() {
        let p = nonlinear_model_polar();
        let lift = p.lift("Y_R").unwrap();
        let spec = LiftSpec::from_named(&p, lift, Some(Expr::var("c"))).unwrap();
        let out = lift_characteristic(&p.system, &spec, (0.0, 2.0), 0.0, (0.0, 1.0), 1e-3).unwrap();
        let expected = (2.0 / 3f64.sqrt()).ln();
        assert!((expected - 0.14384).abs() < 1e-5);
        for s in &out.samples {
            assert!((s.xi - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn guard_stops_near_singular_set() {
        let m = linear_model();
        let spec = LiftSpec::from_named(&m, m.lift("Y_G").unwrap(), None).unwrap();
        // u - v = 0.01 e^{-2t} reaches 1e-3 at t = ln(10)/2
        let err = lift_characteristic(&m.system, &spec, (1.005, 0.995), 0.0, (0.0, 2.0), 1e-3).unwrap_err();
        match err {
            Error::IntegrationStopped { t, .. } => assert!((t - 10f64.ln() / 2.0).abs() < 2e-3, "{t}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_function_requires_constant() {
        let m = linear_model();
        let mut spec = LiftSpec::new(m.generator("Y_S").unwrap().clone());
        spec.f = Some(Expr::var("c"));
        assert!(lift_characteristic(&m.system, &spec, (2.0, 1.0), 0.0, (0.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn verify_lift_examples() {
        let m = linear_model();
        let region = &m.regions[0];
        let y_g = m.generator("Y_G").unwrap();
        let y_s = m.generator("Y_S").unwrap();
        let report = verify_lift(&m.system, y_g, &time_expr("-1/2*((u+v)/(u-v))^2"), region, 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
        let report = verify_lift(&m.system, y_s, &time_expr("u+v"), region, 0.0).unwrap();
        assert_eq!(report.max_abs_residual, 0.0);

        let small = SampleRegion::new((2.0, 2.0), (1.0, 1.0)).with_grid(1, 1);
        let report = verify_lift(&m.system, y_s, &time_expr("u"), &small, 1e-9).unwrap();
        assert!((report.max_abs_residual - 1.0).abs() < 1e-15);
        assert!(!report.passed());
    }

    #[test]
    fn free_function_leaves_residual_unchanged() {
        let m = nonlinear_model();
        let lift = m.lift("Y_R").unwrap();
        let y = m.generator("Y_R").unwrap();
        for region in &m.regions {
            let base = verify_lift(&m.system, y, &lift.xi_particular, region, 1e-9).unwrap();
            for f in ["c", "sin(c)", "c^2 - c/10"] {
                let xi = lift.xi_with(&parse(f, &["c"]).unwrap()).unwrap();
                let with_f = verify_lift(&m.system, y, &xi, region, 1e-9).unwrap();
                assert!((with_f.max_abs_residual - base.max_abs_residual).abs() <= 1e-9, "{f}");
            }
        }
    }

    #[test]
    fn assembly_round_trip() {
        let m = linear_model();
        let y = m.generator("Y_G").unwrap();
        let xi = m.lift("Y_G").unwrap().xi_particular.clone();
        let x = assemble_lift(y, &xi).unwrap();
        assert_eq!(&pushforward(&x), y);
        assert_eq!(x.xi(), &xi);
        let (ok, _) = is_symmetry_time(&m.system, &x, &m.regions[0], 1e-8).unwrap();
        assert!(ok);

        let xs = assemble_lift(m.generator("Y_S").unwrap(), &Expr::zero()).unwrap();
        assert!(xs.xi().is_zero());
        assert!(is_symmetry_time(&m.system, &xs, &m.regions[0], 1e-8).unwrap().0);
    }

    #[test]
    fn pushforward_of_symmetry_lifts_back() {
        let m = linear_model();
        let x = TimeGenerator::parse(cart(), "1 + u + v", "u", "v").unwrap();
        let report = verify_lift(&m.system, &pushforward(&x), x.xi(), &m.regions[0], 1e-9).unwrap();
        assert!(report.passed(), "{report:?}");
    }
}
