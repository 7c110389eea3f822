//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use phaselift::flow::{Sample, TransformedCurve};
use phaselift::lifting::LiftSample;
use serde::Serialize;

use crate::Failure;

pub const TRAJECTORY_HEADER: &str = "t,u,v";
pub const LIFT_HEADER: &str = "t,u,v,xi";
pub const TRANSFORMED_HEADER: &str = "t_hat,u_hat,v_hat,epsilon,source_t";

fn row(values: &[f64]) -> String {
    let mut line = String::new();
    for (i, x) in values.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{x:.16e}");
    }
    line.push('\n');
    line
}

pub fn trajectory_csv(samples: &[Sample]) -> String {
    let mut out = format!("{TRAJECTORY_HEADER}\n");
    for s in samples {
        out += &row(&[s.t, s.u, s.v]);
    }
    out
}

pub fn lift_csv(samples: &[LiftSample]) -> String {
    let mut out = format!("{LIFT_HEADER}\n");
    for s in samples {
        out += &row(&[s.t, s.u, s.v, s.xi]);
    }
    out
}

pub fn transformed_csv(curve: &TransformedCurve) -> String {
    let mut out = format!("{TRANSFORMED_HEADER}\n");
    for s in &curve.samples {
        out += &row(&[s.t_hat, s.u_hat, s.v_hat, curve.epsilon, s.source_t]);
    }
    out
}

/// Reads a `t,u,v` trajectory file.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Sample>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: String| Failure::Load(format!("{}: line {line}: {msg}", path.display()));
    match lines.next() {
        Some((_, header)) if header.trim().replace(' ', "") == TRAJECTORY_HEADER => {}
        Some((i, header)) => return Err(bad(i + 1, format!("expected header `{TRAJECTORY_HEADER}`, found `{header}`"))),
        None => return Err(bad(1, "empty file".into())),
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad(i + 1, format!("expected 3 fields, found {}", fields.len())));
        }
        let mut values = [0.0; 3];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| bad(i + 1, format!("`{field}` is not a number")))?;
        }
        samples.push(Sample {
            t: values[0],
            u: values[1],
            v: values[2],
        });
    }
    Ok(samples)
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

/// Writes a JSON document to `path`, or to stderr when no path is given.
pub fn emit_report<T: Serialize>(path: Option<&PathBuf>, report: &T) -> Result<(), Failure> {
    let text = json(report)?;
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
