//! Infinitesimal symmetry-condition residuals in the time domain and in the
//! phase plane, and grid certification built on them.
//!
//! For a time-domain generator `X = xi d_t + eta_u d_u + eta_v d_v` the two
//! components of the prolonged condition restricted to solutions are
//!
//! ```text
//! res_u = (omega . d) eta_u - (eta . d) omega_u - omega_u (D_t xi)|sol
//! res_v = (omega . d) eta_v - (eta . d) omega_v - omega_v (D_t xi)|sol
//! ```
//!
//! The phase-plane residual is kept in normalized form
//! `zeta_v^(1)|_{v'=Omega} - Y(Omega)`, so multiplying it by `omega_u^2`
//! gives `omega_u res_v - omega_v res_u` for the pushed-forward generator.

use rayon::prelude::*;

use crate::error::{describe_point, Error, Result};
use crate::expr::{Compiled, Expr};
use crate::jets::{
    phase_rhs, phase_rhs_swapped, prolong_phase, prolong_phase_swapped, total_derivative_time,
    Chart, PhaseGenerator, System2D, TimeGenerator, TIME,
};
use crate::region::{Exclusion, ResidualReport, SampleRegion};

/// Points with `|omega_u|` (or `|omega_v|` in the swapped form) below this
/// are treated as singular for the phase-plane equation.
pub const DEFAULT_OMEGA_THRESHOLD: f64 = 0.05;

/// Default certification tolerance for symbolically exact generators.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Time samples used when `xi` depends explicitly on time.
pub const TIME_SAMPLES: [f64; 3] = [-1.0, 0.0, 1.0];

/// Symbolic residual pair of the time-domain condition, compiled over `(t, u, v)`.
#[derive(Debug, Clone)]
pub struct TimeResidual {
    chart: Chart,
    res_u: Compiled,
    res_v: Compiled,
    time_dependent: bool,
}

impl TimeResidual {
    pub fn new(s: &System2D, x: &TimeGenerator) -> Result<TimeResidual> {
        s.chart().ensure_same(x.chart())?;
        let chart = s.chart().clone();
        let [u, v] = chart.state_vars();
        let eta_apply = |phi: &Expr| x.eta_u().clone() * phi.diff(u) + x.eta_v().clone() * phi.diff(v);
        let d_xi = total_derivative_time(x.xi(), s, true)?;
        let res_u = s.apply_field(x.eta_u()) - eta_apply(s.omega_u()) - s.omega_u().clone() * d_xi.clone();
        let res_v = s.apply_field(x.eta_v()) - eta_apply(s.omega_v()) - s.omega_v().clone() * d_xi;
        let vars = chart.time_vars();
        Ok(TimeResidual {
            res_u: Compiled::new(&res_u, &vars)?,
            res_v: Compiled::new(&res_v, &vars)?,
            time_dependent: res_u.depends_on(TIME) || res_v.depends_on(TIME) || x.xi().depends_on(TIME),
            chart,
        })
    }

    pub fn expressions(&self) -> (&Expr, &Expr) {
        (self.res_u.expr(), self.res_v.expr())
    }

    pub fn eval(&self, t: f64, p: (f64, f64)) -> Result<(f64, f64)> {
        let values = [t, p.0, p.1];
        let wrap = |e| Error::eval_at(e, &self.chart.time_vars(), &values);
        Ok((
            self.res_u.eval(&values).map_err(wrap)?,
            self.res_v.eval(&values).map_err(wrap)?,
        ))
    }
}

/// Components `(res_u, res_v)` of the time-domain symmetry condition at `(t, p)`.
pub fn residual_time(s: &System2D, x: &TimeGenerator, p: (f64, f64), t: f64) -> Result<(f64, f64)> {
    TimeResidual::new(s, x)?.eval(t, p)
}

/// Normalized phase-plane residual, compiled over `(u, v)`.
#[derive(Debug, Clone)]
pub struct PhaseResidual {
    chart: Chart,
    denominator: Compiled,
    denominator_name: &'static str,
    residual: Compiled,
    threshold: f64,
}

impl PhaseResidual {
    /// Residual of `dv/du = omega_v / omega_u`.
    pub fn new(s: &System2D, y: &PhaseGenerator) -> Result<PhaseResidual> {
        s.chart().ensure_same(y.chart())?;
        let chart = s.chart();
        let omega = phase_rhs(s);
        let prolonged = prolong_phase(y).substitute(&[(chart.second_prime(), &omega)]);
        let residual = prolonged - y.apply(&omega);
        PhaseResidual::build(chart, s.omega_u(), "omega_u", &residual)
    }

    /// Residual of the swapped equation `du/dv = omega_u / omega_v`.
    pub fn swapped(s: &System2D, y: &PhaseGenerator) -> Result<PhaseResidual> {
        s.chart().ensure_same(y.chart())?;
        let chart = s.chart();
        let omega = phase_rhs_swapped(s);
        let prolonged = prolong_phase_swapped(y).substitute(&[(chart.first_prime(), &omega)]);
        let residual = prolonged - y.apply(&omega);
        PhaseResidual::build(chart, s.omega_v(), "omega_v", &residual)
    }

    fn build(chart: &Chart, denominator: &Expr, name: &'static str, residual: &Expr) -> Result<PhaseResidual> {
        let vars = chart.state_vars();
        Ok(PhaseResidual {
            chart: chart.clone(),
            denominator: Compiled::new(denominator, &vars)?,
            denominator_name: name,
            residual: Compiled::new(residual, &vars)?,
            threshold: DEFAULT_OMEGA_THRESHOLD,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> PhaseResidual {
        self.threshold = threshold;
        self
    }

    pub fn expression(&self) -> &Expr {
        self.residual.expr()
    }

    /// Whether `p` is far enough from the singular set of the equation.
    pub fn admissible(&self, p: (f64, f64)) -> bool {
        self.denominator
            .eval(&[p.0, p.1])
            .is_ok_and(|d| d.abs() >= self.threshold)
    }

    pub fn eval(&self, p: (f64, f64)) -> Result<f64> {
        let values = [p.0, p.1];
        let names = self.chart.state_vars();
        let wrap = |e| Error::eval_at(e, &names, &values);
        let d = self.denominator.eval(&values).map_err(wrap)?;
        if d.abs() < self.threshold {
            return Err(Error::SingularPoint {
                what: self.denominator_name.into(),
                value: d.abs(),
                threshold: self.threshold,
                point: describe_point(&names, &values),
            });
        }
        self.residual.eval(&values).map_err(wrap)
    }
}

/// Phase-plane symmetry residual at `p`; zero exactly when `y` satisfies
/// the infinitesimal condition there.
pub fn residual_phase(s: &System2D, y: &PhaseGenerator, p: (f64, f64)) -> Result<f64> {
    PhaseResidual::new(s, y)?.eval(p)
}

/// Residual of the formulation with the second coordinate independent.
pub fn residual_phase_swapped(s: &System2D, y: &PhaseGenerator, p: (f64, f64)) -> Result<f64> {
    PhaseResidual::swapped(s, y)?.eval(p)
}

/// True iff neither state tangent depends on time.
pub fn check_autonomy(x: &TimeGenerator) -> bool {
    x.eta_u().diff(TIME).simplify().is_zero() && x.eta_v().diff(TIME).simplify().is_zero()
}

/// Evaluates `f` at every point in parallel and reduces in point order.
pub(crate) fn grid_report<F>(
    coords: &[&str],
    components: &[&str],
    points: &[Vec<f64>],
    f: F,
) -> Result<ResidualReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let values: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| f(p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples(
        coords,
        components,
        points.iter().map(Vec::as_slice).zip(values.iter().map(Vec::as_slice)),
    ))
}

/// Grid points `(t, u, v)`; explicit time dependence adds the `t` samples.
pub(crate) fn time_grid(chart: &Chart, region: &SampleRegion, time_dependent: bool) -> Result<Vec<Vec<f64>>> {
    let plane = region.points(chart)?;
    let times: &[f64] = if time_dependent { &TIME_SAMPLES } else { &[0.0] };
    Ok(times
        .iter()
        .flat_map(|&t| plane.iter().map(move |p| vec![t, p[0], p[1]]))
        .collect())
}

/// Certifies `x` as a symmetry of `s` when the largest residual component
/// over the grid is at most `tol`.
pub fn is_symmetry_time(
    s: &System2D,
    x: &TimeGenerator,
    region: &SampleRegion,
    tol: f64,
) -> Result<(bool, ResidualReport)> {
    let residual = TimeResidual::new(s, x)?;
    let points = time_grid(s.chart(), region, residual.time_dependent)?;
    let report = grid_report(&s.chart().time_vars(), &["res_u", "res_v"], &points, |p| {
        let (a, b) = residual.eval(p[0], (p[1], p[2]))?;
        Ok(vec![a, b])
    })?
    .with_tolerance(tol);
    Ok((report.passed(), report))
}

/// Phase-plane analogue of [`is_symmetry_time`]. Points where
/// `|omega_u| < DEFAULT_OMEGA_THRESHOLD` are excluded on top of the region's
/// own exclusions.
pub fn is_symmetry_phase(
    s: &System2D,
    y: &PhaseGenerator,
    region: &SampleRegion,
    tol: f64,
) -> Result<(bool, ResidualReport)> {
    let residual = PhaseResidual::new(s, y)?;
    let region = region
        .clone()
        .exclude(Exclusion::near(s.omega_u().clone(), DEFAULT_OMEGA_THRESHOLD));
    let points: Vec<Vec<f64>> = region
        .points(s.chart())?
        .into_iter()
        .map(|p| p.to_vec())
        .collect();
    let report = grid_report(&s.chart().state_vars(), &["residual"], &points, |p| {
        Ok(vec![residual.eval((p[0], p[1]))?])
    })?
    .with_tolerance(tol);
    Ok((report.passed(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{linear_model, nonlinear_model, nonlinear_model_polar};

    fn cart() -> Chart {
        Chart::cartesian()
    }

    fn scaling_lift(f: &str) -> TimeGenerator {
        let xi = f.replace('x', "(u+v)");
        TimeGenerator::parse(cart(), &xi, "u", "v").unwrap()
    }

    #[test]
    fn time_translation_is_symmetry() {
        let s = linear_model().system;
        let x = TimeGenerator::time_translation(cart());
        for &(t, u, v) in &[(0.0, 2.0, 1.0), (3.0, -1.0, 0.4)] {
            assert_eq!(residual_time(&s, &x, (u, v), t).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn scaling_lift_with_identity_f() {
        let s = linear_model().system;
        let (a, b) = residual_time(&s, &scaling_lift("x"), (2.0, 1.0), 0.0).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
    }

    #[test]
    fn horizontal_scaling_is_not_symmetry() {
        let s = linear_model().system;
        let x = TimeGenerator::parse(cart(), "0", "u", "0").unwrap();
        assert_eq!(residual_time(&s, &x, (2.0, 1.0), 0.0).unwrap(), (1.0, -2.0));
    }

    #[test]
    fn phase_residual_examples() {
        let linear = linear_model();
        let ys = linear.generator("Y_S").unwrap();
        let yu = PhaseGenerator::parse(cart(), "u", "0").unwrap();
        for &(u, v) in &[(2.0, 1.0), (-1.5, 0.3), (0.2, 2.9)] {
            assert_eq!(residual_phase(&linear.system, ys, (u, v)).unwrap(), 0.0);
            assert_eq!(residual_phase(&linear.system, &yu, (u, v)).unwrap(), 1.0);
        }
        let nl = nonlinear_model();
        let yr = nl.generator("Y_R").unwrap();
        assert!(residual_phase(&nl.system, yr, (2.0, 0.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn phase_residual_singular_point() {
        let linear = linear_model();
        let ys = linear.generator("Y_S").unwrap();
        let err = residual_phase(&linear.system, ys, (1.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::SingularPoint { .. }));
    }

    #[test]
    fn swapped_residual_examples() {
        let linear = linear_model();
        let ys = linear.generator("Y_S").unwrap();
        assert_eq!(residual_phase_swapped(&linear.system, ys, (2.0, 1.0)).unwrap(), 0.0);
        // u d_u: the swapped residual is -(omega_u/omega_v)^2 times the direct one
        let yu = PhaseGenerator::parse(cart(), "u", "0").unwrap();
        assert_eq!(residual_phase_swapped(&linear.system, &yu, (2.0, 1.0)).unwrap(), -1.0);
        let nl = nonlinear_model();
        let yr = nl.generator("Y_R").unwrap();
        assert!(residual_phase_swapped(&nl.system, yr, (0.0, 2.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn autonomy_check() {
        let ys = scaling_lift("x");
        assert!(check_autonomy(&ys));
        assert!(check_autonomy(&TimeGenerator::time_translation(cart())));
        let t = Expr::var("t");
        let u = Expr::var("u");
        let bad = TimeGenerator::from_raw_parts(cart(), Expr::zero(), t * u, Expr::zero());
        assert!(!check_autonomy(&bad));
    }

    fn linear_region() -> SampleRegion {
        let diag = crate::parse("u - v", &["u", "v"]).unwrap();
        let omega_u = linear_model().system.omega_u().clone();
        SampleRegion::new((-3.0, 3.0), (-3.0, 3.0))
            .exclude_near(diag, 0.1)
            .exclude_near(omega_u, 0.05)
    }

    #[test]
    fn grid_certification() {
        let model = linear_model();
        let lift = model.lift("Y_G").unwrap();
        let xg = lift.generator(&model, &Expr::zero()).unwrap();
        let (ok, report) = is_symmetry_time(&model.system, &xg, &linear_region(), 1e-8).unwrap();
        assert!(ok, "{report:?}");

        let xu = TimeGenerator::parse(cart(), "0", "u", "0").unwrap();
        let (ok, report) = is_symmetry_time(&model.system, &xu, &linear_region(), 1e-8).unwrap();
        assert!(!ok);
        assert!(report.max_abs_residual >= 1.0);

        let zero = TimeGenerator::zero(cart());
        let (ok, report) = is_symmetry_time(&model.system, &zero, &linear_region(), 0.0).unwrap();
        assert!(ok);
        assert_eq!(report.max_abs_residual, 0.0);
    }

    #[test]
    fn time_dependent_xi_adds_time_samples() {
        let model = linear_model();
        let x = TimeGenerator::parse(cart(), "t", "0", "0").unwrap();
        let region = SampleRegion::new((0.5, 1.0), (-1.0, -0.5)).with_grid(3, 3);
        let (ok, report) = is_symmetry_time(&model.system, &x, &region, 1e-8).unwrap();
        assert_eq!(report.n_evaluated, 27);
        assert!(!ok);
    }

    #[test]
    fn polar_rotation_is_phase_symmetry() {
        let model = nonlinear_model_polar();
        let y = model.generator("Y_R").unwrap();
        for region in &model.regions {
            let (ok, report) = is_symmetry_phase(&model.system, y, region, 1e-8).unwrap();
            assert!(ok, "{report:?}");
        }
    }

    #[test]
    fn parallel_and_serial_reduction_agree() {
        let model = nonlinear_model();
        let y = model.generator("Y_R").unwrap();
        let residual = PhaseResidual::new(&model.system, y).unwrap();
        let region = &model.regions[0];
        let (_, report) = is_symmetry_phase(&model.system, y, region, 1e-8).unwrap();
        let mut best = (0.0f64, None);
        for p in region.points(model.system.chart()).unwrap() {
            if !residual.admissible((p[0], p[1])) {
                continue;
            }
            let r = residual.eval((p[0], p[1])).unwrap().abs();
            if best.1.is_none() || r > best.0 {
                best = (r, Some(p));
            }
        }
        assert_eq!(best.0.to_bits(), report.max_abs_residual.to_bits());
        assert_eq!(best.1.unwrap()[0], report.argmax["u"]);
    }
}
