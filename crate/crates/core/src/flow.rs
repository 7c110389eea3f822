//! Fixed-step RK4 integration of trajectories and of generator flows.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{describe_point, Error, Result};
use crate::expr::Compiled;
use crate::jets::{Chart, PhaseGenerator, System2D, TimeGenerator};
use crate::region::ResidualReport;

pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_H_EPS: f64 = 1e-3;

/// One classical RK4 step. Each component is updated with the same
/// arithmetic regardless of `N`, so the leading components of a larger
/// system integrate bit-identically to the smaller system they contain.
pub fn rk4_step<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let shift = |base: &[f64; N], k: &[f64; N], scale: f64| {
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = base[i] + scale * k[i];
        }
        out
    };
    let half = 0.5 * h;
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + half, &shift(y, &k1, half))?;
    let k3 = rhs(t + half, &shift(y, &k2, half))?;
    let k4 = rhs(t + h, &shift(y, &k3, h))?;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Grid `t0, t0 + h, ...` ending exactly at `t1`; the last step is
/// shortened when `h` does not divide the span.
pub fn time_grid(t0: f64, t1: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if !(t1 >= t0) {
        return Err(Error::InvalidArgument(format!("empty time span ({t0}, {t1})")));
    }
    let ratio = (t1 - t0) / h;
    let mut n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        n = ratio.ceil();
    }
    let n = n as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * h).collect();
    grid.push(t1);
    Ok(grid)
}

/// Integrates `rhs` over `grid`, calling `check` on every accepted state.
pub(crate) fn march<const N: usize, F, C>(
    rhs: &F,
    y0: [f64; N],
    grid: &[f64],
    check: C,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
    C: Fn(f64, &[f64; N]) -> Result<()>,
{
    check(grid[0], &y0)?;
    let mut states = Vec::with_capacity(grid.len());
    states.push(y0);
    let mut y = y0;
    for w in grid.windows(2) {
        let (t, t_next) = (w[0], w[1]);
        y = rk4_step(rhs, t, &y, t_next - t).map_err(|e| Error::IntegrationStopped {
            t,
            reason: e.to_string(),
        })?;
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationStopped {
                t: t_next,
                reason: "state is not finite".into(),
            });
        }
        check(t_next, &y)?;
        states.push(y);
    }
    Ok(states)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Uniformly time-sampled solution curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub chart: Chart,
    pub h: f64,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// Builds a trajectory from externally produced samples, checking the
    /// spacing invariant (all steps equal `h` except a shorter final one).
    pub fn from_samples(chart: Chart, samples: Vec<Sample>) -> Result<Trajectory> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no samples".into()));
        }
        if samples.iter().any(|s| !(s.t.is_finite() && s.u.is_finite() && s.v.is_finite())) {
            return Err(Error::InvalidArgument("trajectory contains non-finite values".into()));
        }
        let h = if samples.len() > 1 { samples[1].t - samples[0].t } else { 0.0 };
        for (i, w) in samples.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            let last = i + 2 == samples.len();
            let uniform = (step - h).abs() <= 1e-12 * (1.0 + w[1].t.abs());
            if !(step > 0.0) || !(uniform || (last && step < h)) {
                return Err(Error::InvalidArgument(format!(
                    "trajectory time is not uniformly increasing at sample {}",
                    i + 1
                )));
            }
        }
        Ok(Trajectory { chart, h, samples })
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are non-empty")
    }
}

pub(crate) struct CompiledSystem {
    omega_u: Compiled,
    omega_v: Compiled,
    chart: Chart,
}

impl CompiledSystem {
    pub(crate) fn new(s: &System2D) -> Result<CompiledSystem> {
        let vars = s.chart().state_vars();
        Ok(CompiledSystem {
            omega_u: Compiled::new(s.omega_u(), &vars)?,
            omega_v: Compiled::new(s.omega_v(), &vars)?,
            chart: s.chart().clone(),
        })
    }

    pub(crate) fn eval(&self, u: f64, v: f64) -> Result<[f64; 2]> {
        let p = [u, v];
        let wrap = |e| Error::eval_at(e, &self.chart.state_vars(), &p);
        Ok([
            self.omega_u.eval(&p).map_err(wrap)?,
            self.omega_v.eval(&p).map_err(wrap)?,
        ])
    }
}

/// Classical RK4 solution from `initial` over `t_span` with step `h`.
pub fn integrate_system(
    s: &System2D,
    initial: (f64, f64),
    t_span: (f64, f64),
    h: f64,
) -> Result<Trajectory> {
    let field = CompiledSystem::new(s)?;
    let grid = time_grid(t_span.0, t_span.1, h)?;
    let rhs = |_t: f64, y: &[f64; 2]| field.eval(y[0], y[1]);
    let states = march(&rhs, [initial.0, initial.1], &grid, |_, _| Ok(()))?;
    Ok(Trajectory {
        chart: s.chart().clone(),
        h,
        samples: grid
            .iter()
            .zip(states)
            .map(|(&t, y)| Sample { t, u: y[0], v: y[1] })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformedSample {
    pub t_hat: f64,
    pub u_hat: f64,
    pub v_hat: f64,
    /// Time of the originating trajectory sample.
    pub source_t: f64,
}

/// Image of a trajectory under a finite symmetry transformation. The
/// transformed times are kept as produced by the flow, not resampled.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCurve {
    pub chart: Chart,
    pub epsilon: f64,
    pub samples: Vec<TransformedSample>,
}

struct CompiledTimeGenerator {
    xi: Compiled,
    eta_u: Compiled,
    eta_v: Compiled,
    chart: Chart,
}

impl CompiledTimeGenerator {
    fn new(x: &TimeGenerator) -> Result<CompiledTimeGenerator> {
        let vars = x.chart().time_vars();
        Ok(CompiledTimeGenerator {
            xi: Compiled::new(x.xi(), &vars)?,
            eta_u: Compiled::new(x.eta_u(), &vars)?,
            eta_v: Compiled::new(x.eta_v(), &vars)?,
            chart: x.chart().clone(),
        })
    }

    fn eval(&self, y: &[f64; 3]) -> Result<[f64; 3]> {
        let wrap = |e| Error::eval_at(e, &self.chart.time_vars(), y);
        Ok([
            self.xi.eval(y).map_err(wrap)?,
            self.eta_u.eval(y).map_err(wrap)?,
            self.eta_v.eval(y).map_err(wrap)?,
        ])
    }
}

/// Integrates `dy/d eps = field(y)` from 0 to `epsilon` in equal steps no
/// longer than `h_eps`.
fn flow_to<const N: usize, F>(field: &F, y0: [f64; N], epsilon: f64, h_eps: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if !(h_eps > 0.0) {
        return Err(Error::InvalidArgument(format!("h_eps must be positive, got {h_eps}")));
    }
    if epsilon == 0.0 {
        return Ok(y0);
    }
    let n = (epsilon.abs() / h_eps).ceil().max(1.0) as usize;
    let step = epsilon / n as f64;
    let mut y = y0;
    for i in 0..n {
        y = rk4_step(field, i as f64 * step, &y, step).map_err(|e| Error::IntegrationStopped {
            t: i as f64 * step,
            reason: format!("flow parameter: {e}"),
        })?;
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationStopped {
                t: (i + 1) as f64 * step,
                reason: "flow parameter: state is not finite".into(),
            });
        }
    }
    Ok(y)
}

/// Flow of a time-domain generator applied to a single point `(t, u, v)`.
pub fn exp_map_point(x: &TimeGenerator, point: [f64; 3], epsilon: f64, h_eps: f64) -> Result<[f64; 3]> {
    let g = CompiledTimeGenerator::new(x)?;
    flow_to(&|_e: f64, y: &[f64; 3]| g.eval(y), point, epsilon, h_eps)
}

/// Transforms every sample of `curve` by `exp(epsilon X)`.
pub fn exp_map_time(
    x: &TimeGenerator,
    curve: &Trajectory,
    epsilon: f64,
    h_eps: f64,
) -> Result<TransformedCurve> {
    x.chart().ensure_same(&curve.chart)?;
    let g = CompiledTimeGenerator::new(x)?;
    let field = |_e: f64, y: &[f64; 3]| g.eval(y);
    let samples = curve
        .samples
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let y = flow_to(&field, [s.t, s.u, s.v], epsilon, h_eps).map_err(|e| match e {
                Error::IntegrationStopped { t, reason } => Error::IntegrationStopped {
                    t,
                    reason: format!("sample {index}: {reason}"),
                },
                other => other,
            })?;
            Ok(TransformedSample {
                t_hat: y[0],
                u_hat: y[1],
                v_hat: y[2],
                source_t: s.t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransformedCurve {
        chart: curve.chart.clone(),
        epsilon,
        samples,
    })
}

/// Flow of a phase-plane generator applied to a point.
pub fn exp_map_phase(y: &PhaseGenerator, point: (f64, f64), epsilon: f64, h_eps: f64) -> Result<(f64, f64)> {
    let vars = y.chart().state_vars();
    let zu = Compiled::new(y.zeta_u(), &vars)?;
    let zv = Compiled::new(y.zeta_v(), &vars)?;
    let field = |_e: f64, p: &[f64; 2]| {
        let wrap = |e| Error::eval_at(e, &vars, p);
        Ok([zu.eval(p).map_err(wrap)?, zv.eval(p).map_err(wrap)?])
    };
    let out = flow_to(&field, [point.0, point.1], epsilon, h_eps)?;
    Ok((out[0], out[1]))
}

/// Three-point derivative on a non-uniform grid, at the middle node.
pub fn nonuniform_derivative(x: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = x[1] - x[0];
    let h2 = x[2] - x[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// Compares finite-difference velocities of a transformed curve with the
/// system's right-hand side at interior samples.
pub fn solution_preservation_check(s: &System2D, tc: &TransformedCurve, tol: f64) -> Result<ResidualReport> {
    s.chart().ensure_same(&tc.chart)?;
    if tc.samples.len() < 3 {
        return Err(Error::InvalidArgument("need at least three samples".into()));
    }
    for (i, w) in tc.samples.windows(2).enumerate() {
        if !(w[1].t_hat > w[0].t_hat) {
            return Err(Error::NonMonotoneTime { index: i + 1 });
        }
    }
    let field = CompiledSystem::new(s)?;
    let mut points = Vec::with_capacity(tc.samples.len() - 2);
    let mut residuals = Vec::with_capacity(tc.samples.len() - 2);
    for w in tc.samples.windows(3) {
        let ts = [w[0].t_hat, w[1].t_hat, w[2].t_hat];
        let du = nonuniform_derivative(ts, [w[0].u_hat, w[1].u_hat, w[2].u_hat]);
        let dv = nonuniform_derivative(ts, [w[0].v_hat, w[1].v_hat, w[2].v_hat]);
        let omega = field.eval(w[1].u_hat, w[1].v_hat)?;
        points.push([w[1].t_hat, w[1].u_hat, w[1].v_hat]);
        residuals.push([du - omega[0], dv - omega[1]]);
    }
    let coords = ["t_hat", s.chart().first(), s.chart().second()];
    Ok(ResidualReport::from_samples(
        &coords,
        &["d_u", "d_v"],
        points.iter().map(|p| p.as_slice()).zip(residuals.iter().map(|r| r.as_slice())),
    )
    .with_tolerance(tol))
}

/// Monotone cubic (Fritsch-Carlson) resampling of a transformed curve onto
/// `n` uniformly spaced transformed times, for plotting.
pub fn resample_uniform(tc: &TransformedCurve, n: usize) -> Result<Vec<Sample>> {
    let m = tc.samples.len();
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    for (i, w) in tc.samples.windows(2).enumerate() {
        if !(w[1].t_hat > w[0].t_hat) {
            return Err(Error::NonMonotoneTime { index: i + 1 });
        }
    }
    let t: Vec<f64> = tc.samples.iter().map(|s| s.t_hat).collect();
    let us: Vec<f64> = tc.samples.iter().map(|s| s.u_hat).collect();
    let vs: Vec<f64> = tc.samples.iter().map(|s| s.v_hat).collect();
    let du = monotone_slopes(&t, &us);
    let dv = monotone_slopes(&t, &vs);
    let (t0, t1) = (t[0], t[m - 1]);
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let tq = if i + 1 == n { t1 } else { t0 + (t1 - t0) * i as f64 / (n - 1) as f64 };
        while k + 2 < m && t[k + 1] < tq {
            k += 1;
        }
        let h = t[k + 1] - t[k];
        let s = (tq - t[k]) / h;
        let hermite = |y: &[f64], d: &[f64]| {
            let s2 = s * s;
            let s3 = s2 * s;
            (2.0 * s3 - 3.0 * s2 + 1.0) * y[k]
                + (s3 - 2.0 * s2 + s) * h * d[k]
                + (-2.0 * s3 + 3.0 * s2) * y[k + 1]
                + (s3 - s2) * h * d[k + 1]
        };
        out.push(Sample {
            t: tq,
            u: hermite(&us, &du),
            v: hermite(&vs, &dv),
        });
    }
    Ok(out)
}

fn monotone_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let m = t.len();
    let secants: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / (t[i + 1] - t[i])).collect();
    let mut d = vec![0.0; m];
    d[0] = secants[0];
    d[m - 1] = secants[m - 2];
    for i in 1..m - 1 {
        d[i] = if secants[i - 1] * secants[i] <= 0.0 {
            0.0
        } else {
            0.5 * (secants[i - 1] + secants[i])
        };
    }
    for i in 0..m - 1 {
        if secants[i] == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / secants[i];
        let b = d[i + 1] / secants[i];
        let norm = a * a + b * b;
        if norm > 9.0 {
            let tau = 3.0 / norm.sqrt();
            d[i] = tau * a * secants[i];
            d[i + 1] = tau * b * secants[i];
        }
    }
    d
}

/// Describes a state for diagnostics.
pub fn describe_state(chart: &Chart, t: f64, u: f64, v: f64) -> String {
    describe_point(&chart.time_vars(), &[t, u, v])
}
