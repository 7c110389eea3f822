//! Sectioned `key = value` model files.
//!
//! ```text
//! [model]
//! name = linear-mass-conserved
//! chart = cartesian            # or `polar`, or `NAME FIRST SECOND`
//! omega_u = -u + v
//! omega_v = u - v
//!
//! [phase-generator Y_S]
//! zeta_u = u
//! zeta_v = v
//!
//! [time-generator T]
//! xi = 1
//! eta_u = 0
//! eta_v = 0
//!
//! [lift Y_S]
//! xi = 0
//! c = u + v
//! F = c^2                      # optional, folded into xi as F(c)
//! guard = u - v                # optional, repeatable
//!
//! [region]                     # repeatable
//! first = -3, 3
//! second = -3, 3
//! grid = 41, 41
//! exclude_near = u - v, 0.1    # expression, threshold
//! exclude_negative = u^2 + v^2 - 0.04
//! ```

use std::fmt;
use std::path::Path;

use phaselift::expr::parse;
use phaselift::models::{NamedLift, NamedModel, LIFT_ARG};
use phaselift::{Chart, Exclusion, Expr, PhaseGenerator, SampleRegion, System2D, TimeGenerator};

#[derive(Debug, Clone, PartialEq)]
pub struct LoadError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, LoadError> {
    Err(LoadError {
        line,
        message: message.into(),
    })
}

/// A model plus any time-domain generators declared alongside it.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: NamedModel,
    pub time_generators: Vec<(String, TimeGenerator)>,
}

impl ModelFile {
    pub fn time_generator(&self, name: &str) -> Option<&TimeGenerator> {
        self.time_generators.iter().find(|(n, _)| n == name).map(|(_, x)| x)
    }
}

#[derive(Debug)]
struct Section {
    kind: String,
    name: Option<String>,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let index = self.entries.iter().position(|(_, k, _)| k == key)?;
        let (line, _, value) = self.entries.remove(index);
        Some((line, value))
    }

    fn require(&mut self, key: &str) -> Result<(usize, String), LoadError> {
        match self.take(key) {
            Some(found) => Ok(found),
            None => fail(self.line, format!("[{}] is missing `{key}`", self.kind)),
        }
    }

    fn finish(self) -> Result<(), LoadError> {
        match self.entries.first() {
            Some((line, key, _)) => fail(*line, format!("unknown key `{key}` in [{}]", self.kind)),
            None => Ok(()),
        }
    }

    fn named(&self) -> Result<String, LoadError> {
        match &self.name {
            Some(name) => Ok(name.clone()),
            None => fail(self.line, format!("[{}] needs a name", self.kind)),
        }
    }
}

fn sections(text: &str) -> Result<Vec<Section>, LoadError> {
    let mut out: Vec<Section> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let Some(header) = header.strip_suffix(']') else {
                return fail(line, "unterminated section header");
            };
            let mut words = header.split_whitespace();
            let kind = words.next().unwrap_or("").to_string();
            let name = words.next().map(String::from);
            if words.next().is_some() {
                return fail(line, "section header takes at most one name");
            }
            if !matches!(kind.as_str(), "model" | "phase-generator" | "time-generator" | "lift" | "region") {
                return fail(line, format!("unknown section [{kind}]"));
            }
            out.push(Section {
                kind,
                name,
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return fail(line, "expected `key = value`");
        };
        let Some(section) = out.last_mut() else {
            return fail(line, "entry before the first section");
        };
        let key = key.trim().to_string();
        let repeatable = matches!(key.as_str(), "guard" | "exclude_near" | "exclude_negative");
        if !repeatable && section.entries.iter().any(|(_, k, _)| *k == key) {
            return fail(line, format!("duplicate key `{key}`"));
        }
        section.entries.push((line, key, value.trim().to_string()));
    }
    Ok(out)
}

fn expr(line: usize, text: &str, vars: &[&str]) -> Result<Expr, LoadError> {
    parse(text, vars).or_else(|e| fail(line, format!("`{text}`: {e}")))
}

fn number(line: usize, text: &str) -> Result<f64, LoadError> {
    match text.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => fail(line, format!("`{}` is not a finite number", text.trim())),
    }
}

fn pair(line: usize, text: &str) -> Result<(f64, f64), LoadError> {
    match text.split_once(',') {
        Some((a, b)) => Ok((number(line, a)?, number(line, b)?)),
        None => fail(line, format!("expected `a, b`, found `{text}`")),
    }
}

fn chart(line: usize, text: &str) -> Result<Chart, LoadError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let found = match words.as_slice() {
        ["cartesian"] => Ok(Chart::cartesian()),
        ["polar"] => Ok(Chart::polar()),
        [name, first, second] => Chart::new(name, first, second),
        _ => return fail(line, format!("chart must be `cartesian`, `polar` or `NAME FIRST SECOND`, found `{text}`")),
    };
    found.or_else(|e| fail(line, e.to_string()))
}

fn region(mut section: Section, chart: &Chart) -> Result<SampleRegion, LoadError> {
    let vars = chart.state_vars();
    let (line, first) = section.require("first")?;
    let first = pair(line, &first)?;
    let (line, second) = section.require("second")?;
    let mut region = SampleRegion::new(first, pair(line, &second)?);
    if let Some((line, grid)) = section.take("grid") {
        let (a, b) = pair(line, &grid)?;
        if a < 1.0 || b < 1.0 || a.fract() != 0.0 || b.fract() != 0.0 {
            return fail(line, "grid sizes must be positive integers");
        }
        region = region.with_grid(a as usize, b as usize);
    }
    // file order is kept so that render and parse round-trip
    let (exclusions, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut section.entries)
        .into_iter()
        .partition(|(_, k, _)| k == "exclude_near" || k == "exclude_negative");
    section.entries = rest;
    for (line, key, text) in exclusions {
        let exclusion = if key == "exclude_near" {
            let Some((e, threshold)) = text.rsplit_once(',') else {
                return fail(line, "expected `expression, threshold`");
            };
            Exclusion::near(expr(line, e.trim(), &vars)?, number(line, threshold)?)
        } else {
            Exclusion::negative(expr(line, &text, &vars)?)
        };
        region = region.exclude(exclusion);
    }
    section.finish()?;
    Ok(region)
}

pub fn parse_model(text: &str) -> Result<ModelFile, LoadError> {
    let mut all = sections(text)?;
    let Some(index) = all.iter().position(|s| s.kind == "model") else {
        return fail(0, "no [model] section");
    };
    if all.iter().filter(|s| s.kind == "model").count() > 1 {
        let second = all.iter().filter(|s| s.kind == "model").nth(1).unwrap();
        return fail(second.line, "more than one [model] section");
    }
    let mut head = all.remove(index);
    let (_, name) = head.require("name")?;
    let (line, chart_text) = head.require("chart")?;
    let chart = chart(line, &chart_text)?;
    let vars = chart.state_vars();
    let (line_u, omega_u) = head.require("omega_u")?;
    let (line_v, omega_v) = head.require("omega_v")?;
    let system = System2D::new(
        chart.clone(),
        expr(line_u, &omega_u, &vars)?,
        expr(line_v, &omega_v, &vars)?,
    )
    .or_else(|e| fail(head.line, e.to_string()))?;
    head.finish()?;

    let mut generators: Vec<(String, PhaseGenerator)> = Vec::new();
    let mut time_generators = Vec::new();
    let mut lifts = Vec::new();
    let mut regions = Vec::new();
    let time_vars = chart.time_vars();
    for mut section in all {
        match section.kind.as_str() {
            "phase-generator" => {
                let name = section.named()?;
                if generators.iter().any(|(n, _)| *n == name) {
                    return fail(section.line, format!("duplicate phase generator `{name}`"));
                }
                let (lu, zu) = section.require("zeta_u")?;
                let (lv, zv) = section.require("zeta_v")?;
                let y = PhaseGenerator::new(chart.clone(), expr(lu, &zu, &vars)?, expr(lv, &zv, &vars)?)
                    .or_else(|e| fail(section.line, e.to_string()))?;
                generators.push((name, y));
                section.finish()?;
            }
            "time-generator" => {
                let name = section.named()?;
                if time_generators.iter().any(|(n, _): &(String, TimeGenerator)| *n == name) {
                    return fail(section.line, format!("duplicate time generator `{name}`"));
                }
                let (lx, xi) = section.require("xi")?;
                let (lu, eu) = section.require("eta_u")?;
                let (lv, ev) = section.require("eta_v")?;
                let x = TimeGenerator::new(
                    chart.clone(),
                    expr(lx, &xi, &time_vars)?,
                    expr(lu, &eu, &vars)?,
                    expr(lv, &ev, &vars)?,
                )
                .or_else(|e| fail(section.line, e.to_string()))?;
                time_generators.push((name, x));
                section.finish()?;
            }
            "lift" => {
                let generator = section.named()?;
                let (lx, xi) = section.require("xi")?;
                let (lc, c) = section.require("c")?;
                let free = section.take("F");
                let mut guards = Vec::new();
                while let Some((line, g)) = section.take("guard") {
                    guards.push(expr(line, &g, &vars)?);
                }
                let mut lift = NamedLift {
                    generator,
                    xi_particular: expr(lx, &xi, &time_vars)?,
                    c_expr: expr(lc, &c, &vars)?,
                    guards,
                };
                if let Some((line, f)) = free {
                    let f = expr(line, &f, &[LIFT_ARG])?;
                    lift.xi_particular = lift.xi_with(&f).or_else(|e| fail(line, e.to_string()))?;
                }
                lifts.push((section.line, lift));
                section.finish()?;
            }
            "region" => regions.push(region(section, &chart)?),
            _ => unreachable!("section kinds are checked while reading"),
        }
    }
    for (line, lift) in &lifts {
        if !generators.iter().any(|(n, _)| *n == lift.generator) {
            return fail(*line, format!("lift for unknown phase generator `{}`", lift.generator));
        }
    }
    Ok(ModelFile {
        model: NamedModel {
            name,
            system,
            generators,
            lifts: lifts.into_iter().map(|(_, l)| l).collect(),
            closed_solution: None,
            regions,
        },
        time_generators,
    })
}

pub fn load_model_file(path: &Path) -> Result<ModelFile, LoadError> {
    let text = std::fs::read_to_string(path).or_else(|e| fail(0, format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| LoadError {
        line: e.line,
        message: if e.line == 0 {
            format!("{}: {}", path.display(), e.message)
        } else {
            format!("{} ({})", e.message, path.display())
        },
    })
}

/// Renders a model in the file format; parsing the result gives back the
/// same system, generators and lifts.
pub fn render_model(model: &NamedModel) -> String {
    let chart = model.chart();
    let chart_text = if *chart == Chart::cartesian() {
        "cartesian".to_string()
    } else if *chart == Chart::polar() {
        "polar".to_string()
    } else {
        format!("{} {} {}", chart.name(), chart.first(), chart.second())
    };
    let mut out = format!(
        "[model]\nname = {}\nchart = {chart_text}\nomega_u = {}\nomega_v = {}\n",
        model.name,
        model.system.omega_u(),
        model.system.omega_v()
    );
    for (name, y) in &model.generators {
        out += &format!("\n[phase-generator {name}]\nzeta_u = {}\nzeta_v = {}\n", y.zeta_u(), y.zeta_v());
    }
    for lift in &model.lifts {
        out += &format!("\n[lift {}]\nxi = {}\nc = {}\n", lift.generator, lift.xi_particular, lift.c_expr);
        for g in &lift.guards {
            out += &format!("guard = {g}\n");
        }
    }
    for region in &model.regions {
        out += &format!(
            "\n[region]\nfirst = {:?}, {:?}\nsecond = {:?}, {:?}\ngrid = {}, {}\n",
            region.first.0, region.first.1, region.second.0, region.second.1, region.n_first, region.n_second
        );
        for e in &region.exclusions {
            match e {
                Exclusion::Near { expr, threshold } => out += &format!("exclude_near = {expr}, {threshold:?}\n"),
                Exclusion::Negative { expr } => out += &format!("exclude_negative = {expr}\n"),
            }
        }
    }
    out
}
