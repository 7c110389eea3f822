//! Seeded random generators and jets for property runs.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::jets::{Chart, JetPointTime, PhaseGenerator, TimeGenerator};

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Polynomial of total degree at most `degree` in `vars`, with coefficients
/// uniform in [-1, 1]. Roughly half of the monomials are dropped.
pub fn random_polynomial(rng: &mut SampleRng, vars: &[&str], degree: u32) -> Expr {
    let mut exponents: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in vars {
        exponents = exponents
            .into_iter()
            .flat_map(|prefix| {
                let used: u32 = prefix.iter().sum();
                (0..=degree - used).map(move |k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect();
    }
    let mut poly = Expr::zero();
    for monomial in exponents {
        if rng.random_bool(0.5) {
            continue;
        }
        let coefficient: f64 = rng.random_range(-1.0..1.0);
        let mut term = Expr::Const(coefficient);
        for (name, &power) in vars.iter().zip(&monomial) {
            term = term * Expr::var(name).powi(power as i32);
        }
        poly = poly + term;
    }
    poly
}

/// Generator with cubic state tangents and a quadratic time tangent that may
/// depend on `t`.
pub fn random_time_generator(rng: &mut SampleRng, chart: &Chart) -> TimeGenerator {
    let state = chart.state_vars();
    let xi = random_polynomial(rng, &chart.time_vars(), 2);
    let eta_u = random_polynomial(rng, &state, 3);
    let eta_v = random_polynomial(rng, &state, 3);
    TimeGenerator::new(chart.clone(), xi, eta_u, eta_v).expect("polynomials over chart variables")
}

pub fn random_phase_generator(rng: &mut SampleRng, chart: &Chart) -> PhaseGenerator {
    let state = chart.state_vars();
    let zeta_u = random_polynomial(rng, &state, 3);
    let zeta_v = random_polynomial(rng, &state, 3);
    PhaseGenerator::new(chart.clone(), zeta_u, zeta_v).expect("polynomials over chart variables")
}

/// Off-shell jets with `t, u, v` in [-2, 2], derivatives in [-3, 3] and
/// `|udot| >= min_udot`.
pub fn random_jets(rng: &mut SampleRng, n: usize, min_udot: f64) -> Vec<JetPointTime> {
    (0..n)
        .map(|_| {
            let magnitude: f64 = rng.random_range(min_udot..3.0);
            let udot = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            JetPointTime {
                t: rng.random_range(-2.0..2.0),
                u: rng.random_range(-2.0..2.0),
                v: rng.random_range(-2.0..2.0),
                udot,
                vdot: rng.random_range(-3.0..3.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_runs_repeat() {
        let chart = Chart::cartesian();
        let a = random_time_generator(&mut rng(1), &chart);
        let b = random_time_generator(&mut rng(1), &chart);
        assert_eq!(a, b);
        assert_eq!(random_jets(&mut rng(2), 5, 0.1), random_jets(&mut rng(2), 5, 0.1));
    }

    #[test]
    fn polynomial_degree_bound() {
        let mut r = rng(9);
        for _ in 0..20 {
            let p = random_polynomial(&mut r, &["u", "v"], 3);
            // a degree-3 polynomial has vanishing fourth derivatives
            let d4 = p.diff("u").diff("u").diff("v").diff("v");
            assert!(d4.is_zero(), "{p}");
        }
    }

    #[test]
    fn jets_respect_udot_bound() {
        for j in random_jets(&mut rng(4), 200, 0.1) {
            assert!(j.udot.abs() >= 0.1);
        }
    }
}
