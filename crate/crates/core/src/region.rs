//! Sampling grids with exclusion predicates, and the residual report that
//! every certification routine produces.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::jets::Chart;

/// Default grid resolution per axis.
pub const DEFAULT_GRID: usize = 41;

/// A predicate removing sample points from a grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    /// Skip points where `|expr| < threshold`.
    Near { expr: Expr, threshold: f64 },
    /// Skip points where `expr < 0`.
    Negative { expr: Expr },
}

impl Exclusion {
    pub fn near(expr: Expr, threshold: f64) -> Exclusion {
        Exclusion::Near { expr, threshold }
    }

    pub fn negative(expr: Expr) -> Exclusion {
        Exclusion::Negative { expr }
    }

    pub fn expr(&self) -> &Expr {
        match self {
            Exclusion::Near { expr, .. } | Exclusion::Negative { expr } => expr,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Exclusion::Near { expr, threshold } => format!("|{expr}| < {threshold}"),
            Exclusion::Negative { expr } => format!("{expr} < 0"),
        }
    }
}

/// A rectangular grid over the two chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRegion {
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub n_first: usize,
    pub n_second: usize,
    pub exclusions: Vec<Exclusion>,
}

impl SampleRegion {
    pub fn new(first: (f64, f64), second: (f64, f64)) -> SampleRegion {
        SampleRegion {
            first,
            second,
            n_first: DEFAULT_GRID,
            n_second: DEFAULT_GRID,
            exclusions: Vec::new(),
        }
    }

    pub fn with_grid(mut self, n_first: usize, n_second: usize) -> SampleRegion {
        self.n_first = n_first;
        self.n_second = n_second;
        self
    }

    pub fn exclude(mut self, exclusion: Exclusion) -> SampleRegion {
        self.exclusions.push(exclusion);
        self
    }

    pub fn exclude_near(self, expr: Expr, threshold: f64) -> SampleRegion {
        self.exclude(Exclusion::near(expr, threshold))
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![0.5 * (range.0 + range.1)],
            _ => (0..n)
                .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    /// Grid points that survive every exclusion. Points where an exclusion
    /// expression cannot be evaluated lie on a singular set and are skipped.
    pub fn points(&self, chart: &Chart) -> Result<Vec<[f64; 2]>> {
        let vars = chart.state_vars();
        let compiled = self
            .exclusions
            .iter()
            .map(|e| {
                Compiled::new(e.expr(), &vars).map_err(|err| {
                    Error::InvalidArgument(format!(
                        "exclusion `{}` is not over the chart coordinates: {err}",
                        e.describe()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = Vec::new();
        for &a in &Self::axis(self.first, self.n_first) {
            'grid: for &b in &Self::axis(self.second, self.n_second) {
                for (exclusion, c) in self.exclusions.iter().zip(&compiled) {
                    let keep = match (exclusion, c.eval(&[a, b])) {
                        (_, Err(_)) => false,
                        (Exclusion::Near { threshold, .. }, Ok(x)) => x.abs() >= *threshold,
                        (Exclusion::Negative { .. }, Ok(x)) => x >= 0.0,
                    };
                    if !keep {
                        continue 'grid;
                    }
                }
                out.push([a, b]);
            }
        }
        if out.is_empty() {
            return Err(Error::RegionRejected);
        }
        Ok(out)
    }

    pub fn summary(&self, chart: &Chart) -> RegionSummary {
        RegionSummary {
            chart: chart.name().to_string(),
            first: (chart.first().to_string(), self.first.0, self.first.1, self.n_first),
            second: (chart.second().to_string(), self.second.0, self.second.1, self.n_second),
            exclusions: self.exclusions.iter().map(Exclusion::describe).collect(),
        }
    }
}

/// Serializable description of a region, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSummary {
    pub chart: String,
    /// `(coordinate, min, max, points)`
    pub first: (String, f64, f64, usize),
    pub second: (String, f64, f64, usize),
    pub exclusions: Vec<String>,
}

/// Maximum absolute residual over a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_abs_residual: f64,
    /// Coordinates of the first sample attaining the maximum.
    pub argmax: BTreeMap<String, f64>,
    pub n_evaluated: usize,
    /// Per-component maxima, keyed by component name.
    pub component_max: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ResidualReport {
    /// Reduces per-sample residual components in sample order; ties keep
    /// the earliest sample so the result does not depend on scheduling.
    pub fn from_samples<'a, I>(coords: &[&str], components: &[&str], samples: I) -> ResidualReport
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        let mut max = 0.0f64;
        let mut argmax: Option<Vec<f64>> = None;
        let mut per_component = vec![0.0f64; components.len()];
        let mut n = 0;
        for (point, residuals) in samples {
            n += 1;
            let mut local = 0.0f64;
            for (slot, r) in per_component.iter_mut().zip(residuals) {
                let a = r.abs();
                *slot = slot.max(a);
                local = local.max(a);
            }
            if argmax.is_none() || local > max {
                max = local;
                argmax = Some(point.to_vec());
            }
        }
        ResidualReport {
            max_abs_residual: max,
            argmax: coords
                .iter()
                .zip(argmax.unwrap_or_default())
                .map(|(c, v)| (c.to_string(), v))
                .collect(),
            n_evaluated: n,
            component_max: components
                .iter()
                .zip(per_component)
                .map(|(c, v)| (c.to_string(), v))
                .collect(),
            tolerance: None,
            seed: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> ResidualReport {
        self.tolerance = Some(tol);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> ResidualReport {
        self.seed = Some(seed);
        self
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_abs_residual <= tol
    }

    /// True when the maximum is within the recorded tolerance.
    pub fn passed(&self) -> bool {
        self.tolerance.is_some_and(|t| self.within(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse;

    #[test]
    fn exclusions_remove_points() {
        let chart = Chart::cartesian();
        let diag = parse("u - v", &["u", "v"]).unwrap();
        let all = SampleRegion::new((-1.0, 1.0), (-1.0, 1.0)).with_grid(5, 5);
        assert_eq!(all.points(&chart).unwrap().len(), 25);
        let off = all.clone().exclude_near(diag, 0.1);
        assert_eq!(off.points(&chart).unwrap().len(), 20);
    }

    #[test]
    fn annulus_via_negative_exclusion() {
        let chart = Chart::cartesian();
        let r2 = parse("u^2 + v^2", &["u", "v"]).unwrap();
        let region = SampleRegion::new((-2.0, 2.0), (-2.0, 2.0))
            .with_grid(9, 9)
            .exclude(Exclusion::negative(r2.clone() - Expr::Const(1.0)))
            .exclude(Exclusion::negative(Expr::Const(4.0) - r2));
        for [u, v] in region.points(&chart).unwrap() {
            let r = (u * u + v * v).sqrt();
            assert!((1.0..=2.0).contains(&r));
        }
    }

    #[test]
    fn empty_region_rejected() {
        let chart = Chart::cartesian();
        let region = SampleRegion::new((0.0, 0.0), (0.0, 0.0))
            .with_grid(1, 1)
            .exclude_near(Expr::var("u"), 1.0);
        assert_eq!(region.points(&chart).unwrap_err(), Error::RegionRejected);
    }

    #[test]
    fn singular_exclusion_skips_point() {
        let chart = Chart::cartesian();
        let e = parse("1/u", &["u", "v"]).unwrap();
        let region = SampleRegion::new((-1.0, 1.0), (0.0, 0.0))
            .with_grid(3, 1)
            .exclude_near(e, 0.0);
        assert_eq!(region.points(&chart).unwrap(), vec![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn foreign_variable_in_exclusion() {
        let region = SampleRegion::new((0.0, 1.0), (0.0, 1.0)).exclude_near(Expr::var("r"), 0.1);
        assert!(region.points(&Chart::cartesian()).is_err());
    }

    #[test]
    fn report_reduction_keeps_first_maximum() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        let res = [[0.5, -1.0], [1.0, 0.2], [0.0, 0.0]];
        let report = ResidualReport::from_samples(
            &["u", "v"],
            &["res_u", "res_v"],
            pts.iter().map(|p| p.as_slice()).zip(res.iter().map(|r| r.as_slice())),
        );
        assert_eq!(report.max_abs_residual, 1.0);
        assert_eq!(report.argmax["u"], 0.0);
        assert_eq!(report.component_max["res_u"], 1.0);
        assert_eq!(report.n_evaluated, 3);
        assert!(!report.passed());
        assert!(report.with_tolerance(1.0).passed());
    }
}
