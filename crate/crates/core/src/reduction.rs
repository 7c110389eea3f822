//! Push-forward of time-domain generators along the reduction map
//! `(t, u, v, udot, vdot) -> (u, v, vdot / udot)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Compiled;
use crate::jets::{prolong_phase, prolong_time, JetPointTime, PhaseGenerator, System2D, TimeGenerator};
use crate::region::ResidualReport;
use crate::verify::check_autonomy;

/// Default lower bound on `|udot|` for sampled jets.
pub const MIN_UDOT: f64 = 0.1;

/// Drops the time tangent: `f_* X = eta_u d_u + eta_v d_v`.
pub fn pushforward(x: &TimeGenerator) -> PhaseGenerator {
    PhaseGenerator::new(x.chart().clone(), x.eta_u().clone(), x.eta_v().clone())
        .expect("state tangents of a time generator are time independent")
}

/// Components of `f_*(X^(1))` at `f(j)`, computed through the Jacobian of
/// the reduction map from the prolonged tangents at `j`.
pub fn pushforward_prolonged_numeric(
    x: &TimeGenerator,
    s: &System2D,
    j: &JetPointTime,
) -> Result<[f64; 3]> {
    PushforwardJacobian::new(x, s)?.eval(j)
}

struct PushforwardJacobian {
    eta_u: Compiled,
    eta_v: Compiled,
    eta_u1: Compiled,
    eta_v1: Compiled,
    names: [String; 5],
}

impl PushforwardJacobian {
    fn new(x: &TimeGenerator, s: &System2D) -> Result<PushforwardJacobian> {
        if !check_autonomy(x) {
            return Err(Error::InvalidGenerator("state tangents depend on time".into()));
        }
        let prolonged = prolong_time(x, s)?;
        let vars = s.chart().jet_time_vars();
        Ok(PushforwardJacobian {
            eta_u: Compiled::new(x.eta_u(), &vars)?,
            eta_v: Compiled::new(x.eta_v(), &vars)?,
            eta_u1: Compiled::new(&prolonged.eta_u1, &vars)?,
            eta_v1: Compiled::new(&prolonged.eta_v1, &vars)?,
            names: vars.map(String::from),
        })
    }

    fn eval(&self, j: &JetPointTime) -> Result<[f64; 3]> {
        if j.udot == 0.0 {
            return Err(Error::ZeroVelocity(self.names[3].clone()));
        }
        let values = j.values();
        let names: Vec<&str> = self.names.iter().map(String::as_str).collect();
        let wrap = |e| Error::eval_at(e, &names, &values);
        let slope = j.vdot / j.udot;
        let eta_u1 = self.eta_u1.eval(&values).map_err(wrap)?;
        let eta_v1 = self.eta_v1.eval(&values).map_err(wrap)?;
        Ok([
            self.eta_u.eval(&values).map_err(wrap)?,
            self.eta_v.eval(&values).map_err(wrap)?,
            (-slope * eta_u1 + eta_v1) / j.udot,
        ])
    }
}

/// Compares `f_*(X^(1))` with `(f_* X)^(1)` at each jet. Differences are
/// scaled by `1 + |reference|` per component.
pub fn verify_commutation(
    x: &TimeGenerator,
    s: &System2D,
    jets: &[JetPointTime],
    tol: f64,
) -> Result<ResidualReport> {
    if jets.is_empty() {
        return Err(Error::InvalidArgument("no jets to sample".into()));
    }
    if let Some(bad) = jets.iter().find(|j| j.udot.abs() < MIN_UDOT) {
        return Err(Error::SingularPoint {
            what: s.chart().first_dot().into(),
            value: bad.udot.abs(),
            threshold: MIN_UDOT,
            point: format!("{bad:?}"),
        });
    }
    let jacobian = PushforwardJacobian::new(x, s)?;
    let y = pushforward(x);
    let phase_vars = s.chart().jet_phase_vars();
    let zeta_u = Compiled::new(y.zeta_u(), &phase_vars)?;
    let zeta_v = Compiled::new(y.zeta_v(), &phase_vars)?;
    let zeta_v1 = Compiled::new(&prolong_phase(&y), &phase_vars)?;

    let diffs: Vec<[f64; 3]> = jets
        .par_iter()
        .map(|j| {
            let pushed = jacobian.eval(j)?;
            let p = j.reduce()?.values();
            let wrap = |e| Error::eval_at(e, &phase_vars, &p);
            let reference = [
                zeta_u.eval(&p).map_err(wrap)?,
                zeta_v.eval(&p).map_err(wrap)?,
                zeta_v1.eval(&p).map_err(wrap)?,
            ];
            let mut out = [0.0; 3];
            for k in 0..3 {
                out[k] = (pushed[k] - reference[k]) / (1.0 + reference[k].abs());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let points: Vec<[f64; 5]> = jets.iter().map(JetPointTime::values).collect();
    let coords = s.chart().jet_time_vars();
    let components = ["d_u", "d_v", "d_vprime"];
    Ok(ResidualReport::from_samples(
        &coords,
        &components,
        points.iter().map(|p| p.as_slice()).zip(diffs.iter().map(|d| d.as_slice())),
    )
    .with_tolerance(tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Chart;
    use crate::models::linear_model;
    use crate::random::{random_jets, random_time_generator, rng};

    fn cart() -> Chart {
        Chart::cartesian()
    }

    #[test]
    fn pushforward_discards_time_tangent() {
        let xs = TimeGenerator::parse(cart(), "sin(u+v)", "u", "v").unwrap();
        let y = pushforward(&xs);
        assert_eq!(y, PhaseGenerator::parse(cart(), "u", "v").unwrap());
        let y = pushforward(&TimeGenerator::time_translation(cart()));
        assert!(y.zeta_u().is_zero() && y.zeta_v().is_zero());
        let x = TimeGenerator::parse(cart(), "sin(u)", "u", "0").unwrap();
        assert_eq!(pushforward(&x), PhaseGenerator::parse(cart(), "u", "0").unwrap());
    }

    #[test]
    fn jacobian_examples() {
        let s = linear_model().system;
        let xs = TimeGenerator::parse(cart(), "0", "u", "v").unwrap();
        let j = JetPointTime { t: 0.0, u: 2.0, v: 1.0, udot: -1.0, vdot: 1.0 };
        assert_eq!(pushforward_prolonged_numeric(&xs, &s, &j).unwrap(), [2.0, 1.0, 0.0]);

        let xt = TimeGenerator::time_translation(cart());
        assert_eq!(pushforward_prolonged_numeric(&xt, &s, &j).unwrap(), [0.0, 0.0, 0.0]);

        let x = TimeGenerator::parse(cart(), "t", "0", "0").unwrap();
        let j = JetPointTime { t: 0.0, u: 1.0, v: 1.0, udot: 2.0, vdot: 3.0 };
        assert_eq!(pushforward_prolonged_numeric(&x, &s, &j).unwrap(), [0.0, 0.0, 0.0]);

        let j0 = JetPointTime { udot: 0.0, ..j };
        assert!(matches!(
            pushforward_prolonged_numeric(&x, &s, &j0),
            Err(Error::ZeroVelocity(_))
        ));
    }

    #[test]
    fn commutation_for_scaling_lift() {
        let s = linear_model().system;
        let xs = TimeGenerator::parse(cart(), "u+v", "u", "v").unwrap();
        let jets = random_jets(&mut rng(7), 100, MIN_UDOT);
        let report = verify_commutation(&xs, &s, &jets, 1e-12).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn commutation_for_random_polynomial_generator() {
        let s = linear_model().system;
        let mut r = rng(11);
        let mut x = random_time_generator(&mut r, &cart());
        x = x.with_xi(crate::parse("u*v*t", &["t", "u", "v"]).unwrap()).unwrap();
        let jets = random_jets(&mut r, 100, MIN_UDOT);
        let report = verify_commutation(&x, &s, &jets, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn commutation_for_zero_generator() {
        let s = linear_model().system;
        let jets = random_jets(&mut rng(3), 20, MIN_UDOT);
        let report = verify_commutation(&TimeGenerator::zero(cart()), &s, &jets, 0.0).unwrap();
        assert_eq!(report.max_abs_residual, 0.0);
    }

    #[test]
    fn commutation_rejects_slow_jets() {
        let s = linear_model().system;
        let j = JetPointTime { t: 0.0, u: 1.0, v: 0.0, udot: 0.01, vdot: 1.0 };
        let x = TimeGenerator::time_translation(cart());
        assert!(matches!(
            verify_commutation(&x, &s, &[j], 1e-10),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn xi_does_not_reach_the_phase_plane() {
        let s = linear_model().system;
        let base = TimeGenerator::parse(cart(), "0", "u^2 - v", "u*v").unwrap();
        let other = base.with_xi(crate::parse("t^2*sin(u) + v", &["t", "u", "v"]).unwrap()).unwrap();
        for j in random_jets(&mut rng(5), 50, MIN_UDOT) {
            let a = pushforward_prolonged_numeric(&base, &s, &j).unwrap();
            let b = pushforward_prolonged_numeric(&other, &s, &j).unwrap();
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-10 * (1.0 + a[k].abs()));
            }
        }
    }
}
