use std::path::Path;

use phaselift::flow::{exp_map_time, integrate_system, solution_preservation_check, Trajectory};
use phaselift::lifting::{check_lift_consistency, lift_characteristic, LiftConsistency, LiftSpec};
use phaselift::models::{builtin_models, by_name, LIFT_ARG};
use phaselift::random::{random_jets, rng};
use phaselift::reduction::{pushforward, verify_commutation, MIN_UDOT};
use phaselift::region::{RegionSummary, DEFAULT_GRID};
use phaselift::verify::{is_symmetry_phase, is_symmetry_time};
use phaselift::{parse, Error, Expr, PhaseGenerator, ResidualReport, SampleRegion, TimeGenerator, VERSION};
use serde::Serialize;

use crate::modelfile::{load_model_file, render_model, ModelFile};
use crate::output::{emit, emit_report, json, lift_csv, read_trajectory_csv, trajectory_csv, transformed_csv};
use crate::{
    CheckArgs, Cli, Command, Domain, Failure, FlowArgs, GeneratorArgs, LiftArgs, ModelsArgs, ReduceArgs, TransformArgs,
};

const CHECK_TOL: f64 = phaselift::verify::DEFAULT_TOL;
const REDUCE_TOL: f64 = 1e-10;
const LIFT_TOL: f64 = 1e-9;
const CLOSED_FORM_TOL: f64 = 1e-6;
const PRESERVATION_TOL: f64 = 1e-4;

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Check(args) => check(cli, args),
        Command::Reduce(args) => reduce(cli, args),
        Command::Lift(args) => lift(cli, args),
        Command::Flow(args) => flow(cli, args),
        Command::Transform(args) => transform(cli, args),
        Command::Models(args) => models(cli, args),
    }
}

fn load(spec: &str) -> Result<ModelFile, Failure> {
    if let Some(model) = by_name(spec) {
        return Ok(ModelFile {
            model,
            time_generators: Vec::new(),
        });
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<String> = builtin_models().into_iter().map(|m| m.name).collect();
        return Err(Failure::Load(format!(
            "`{spec}` is neither a built-in model ({}) nor a readable file",
            names.join(", ")
        )));
    }
    load_model_file(path).map_err(|e| Failure::Load(e.to_string()))
}

fn numbers<const N: usize>(text: &str, what: &str) -> Result<[f64; N], Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("{what} must be {N} comma-separated numbers, found `{text}`"));
    if parts.len() != N {
        return Err(bad());
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

fn free_function(args: &GeneratorArgs) -> Result<Option<Expr>, Failure> {
    args.free
        .as_deref()
        .map(|text| parse(text, &[LIFT_ARG]).map_err(|e| Failure::Usage(format!("--F `{text}`: {e}"))))
        .transpose()
}

fn phase_generator<'a>(file: &'a ModelFile, name: &str) -> Result<&'a PhaseGenerator, Failure> {
    file.model.generator(name).ok_or_else(|| {
        let known: Vec<&str> = file.model.generators.iter().map(|(n, _)| n.as_str()).collect();
        Failure::Usage(format!(
            "model `{}` has no phase generator `{name}` (known: {})",
            file.model.name,
            known.join(", ")
        ))
    })
}

/// A declared time generator, or the packaged lift of a phase generator.
fn time_generator(file: &ModelFile, args: &GeneratorArgs) -> Result<TimeGenerator, Failure> {
    let f = free_function(args)?;
    if let Some(x) = file.time_generator(&args.generator) {
        if f.is_some() {
            return Err(Failure::Usage(format!("--F only applies to lifts; `{}` is a time generator", args.generator)));
        }
        return Ok(x.clone());
    }
    phase_generator(file, &args.generator)?;
    let lift = file.model.lift(&args.generator).ok_or_else(|| {
        Failure::Usage(format!("model `{}` has no lift for `{}`", file.model.name, args.generator))
    })?;
    Ok(lift.generator(&file.model, &f.unwrap_or_else(Expr::zero))?)
}

fn regions(file: &ModelFile, args: &CheckArgs) -> Result<Vec<SampleRegion>, Failure> {
    if let Some(text) = &args.region {
        let [a, b, c, d] = numbers::<4>(text, "--region")?;
        let mut region = SampleRegion::new((a, b), (c, d)).with_grid(args.grid, args.grid);
        let vars = file.model.chart().state_vars();
        for item in &args.exclude_near {
            let (e, threshold) = item
                .rsplit_once(',')
                .ok_or_else(|| Failure::Usage(format!("--exclude-near expects `expression,threshold`, found `{item}`")))?;
            let e = parse(e.trim(), &vars).map_err(|err| Failure::Usage(format!("--exclude-near `{e}`: {err}")))?;
            let threshold = threshold
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("bad threshold in `{item}`")))?;
            region = region.exclude_near(e, threshold);
        }
        return Ok(vec![region]);
    }
    if !args.exclude_near.is_empty() {
        return Err(Failure::Usage("--exclude-near needs --region".into()));
    }
    if file.model.regions.is_empty() {
        return Ok(vec![SampleRegion::new((-3.0, 3.0), (-3.0, 3.0)).with_grid(DEFAULT_GRID, DEFAULT_GRID)]);
    }
    Ok(file.model.regions.clone())
}

/// The report with the largest residual; the first one wins ties.
fn worst(reports: &[ResidualReport]) -> Option<&ResidualReport> {
    reports
        .iter()
        .fold(None, |best: Option<&ResidualReport>, r| match best {
            Some(b) if b.max_abs_residual >= r.max_abs_residual => Some(b),
            _ => Some(r),
        })
}

#[derive(Serialize)]
struct CheckReport<'a> {
    version: &'static str,
    command: &'static str,
    model: &'a str,
    generator: &'a str,
    domain: &'static str,
    free_function: Option<String>,
    seed: u64,
    tolerance: f64,
    certified: bool,
    max_abs_residual: f64,
    argmax: Option<&'a std::collections::BTreeMap<String, f64>>,
    regions: Vec<RegionSummary>,
    reports: &'a [ResidualReport],
}

fn check(cli: &Cli, args: &CheckArgs) -> Result<(), Failure> {
    let file = load(&args.model.model)?;
    let tol = cli.tol.unwrap_or(CHECK_TOL);
    let regions = regions(&file, args)?;
    let system = &file.model.system;
    let mut reports = Vec::new();
    let mut certified = true;
    match args.domain {
        Domain::Phase => {
            if args.generator.free.is_some() {
                return Err(Failure::Usage("--F only applies to --domain time".into()));
            }
            let y = phase_generator(&file, &args.generator.generator)?;
            for region in &regions {
                let (ok, report) = is_symmetry_phase(system, y, region, tol)?;
                certified &= ok;
                reports.push(report);
            }
        }
        Domain::Time => {
            let x = time_generator(&file, &args.generator)?;
            for region in &regions {
                let (ok, report) = is_symmetry_time(system, &x, region, tol)?;
                certified &= ok;
                reports.push(report);
            }
        }
    }
    let top = worst(&reports);
    let report = CheckReport {
        version: VERSION,
        command: "check",
        model: &file.model.name,
        generator: &args.generator.generator,
        domain: match args.domain {
            Domain::Time => "time",
            Domain::Phase => "phase",
        },
        free_function: args.generator.free.clone(),
        seed: cli.seed,
        tolerance: tol,
        certified,
        max_abs_residual: top.map_or(0.0, |r| r.max_abs_residual),
        argmax: top.map(|r| &r.argmax),
        regions: regions.iter().map(|r| r.summary(system.chart())).collect(),
        reports: &reports,
    };
    emit(cli.out.as_ref(), &json(&report)?)?;
    if certified {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

#[derive(Serialize)]
struct PhaseGeneratorJson {
    chart: String,
    zeta_u: String,
    zeta_v: String,
}

#[derive(Serialize)]
struct ReduceReport<'a> {
    version: &'static str,
    command: &'static str,
    model: &'a str,
    generator: &'a str,
    free_function: Option<String>,
    seed: u64,
    tolerance: f64,
    min_abs_udot: f64,
    phase_generator: PhaseGeneratorJson,
    commutes: bool,
    max_abs_residual: f64,
    argmax: &'a std::collections::BTreeMap<String, f64>,
    commutation: &'a ResidualReport,
}

fn reduce(cli: &Cli, args: &ReduceArgs) -> Result<(), Failure> {
    let file = load(&args.model.model)?;
    let tol = cli.tol.unwrap_or(REDUCE_TOL);
    if args.jets == 0 {
        return Err(Failure::Usage("--jets must be positive".into()));
    }
    let x = time_generator(&file, &args.generator)?;
    let y = pushforward(&x);
    let jets = random_jets(&mut rng(cli.seed), args.jets, MIN_UDOT);
    let report = verify_commutation(&x, &file.model.system, &jets, tol)?.with_seed(cli.seed);
    let passed = report.passed();
    let doc = ReduceReport {
        version: VERSION,
        command: "reduce",
        model: &file.model.name,
        generator: &args.generator.generator,
        free_function: args.generator.free.clone(),
        seed: cli.seed,
        tolerance: tol,
        min_abs_udot: MIN_UDOT,
        phase_generator: PhaseGeneratorJson {
            chart: y.chart().name().to_string(),
            zeta_u: y.zeta_u().to_string(),
            zeta_v: y.zeta_v().to_string(),
        },
        commutes: passed,
        max_abs_residual: report.max_abs_residual,
        argmax: &report.argmax,
        commutation: &report,
    };
    emit(cli.out.as_ref(), &json(&doc)?)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

#[derive(Serialize)]
struct LiftReport<'a> {
    version: &'static str,
    command: &'static str,
    model: &'a str,
    generator: &'a str,
    free_function: Option<String>,
    constant_of_motion: Option<String>,
    seed: u64,
    initial: [f64; 2],
    xi0: f64,
    t_span: [f64; 2],
    h: f64,
    tolerance: f64,
    consistent: bool,
    regions: Vec<RegionSummary>,
    consistency: Vec<LiftConsistency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi_closed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn lift(cli: &Cli, args: &LiftArgs) -> Result<(), Failure> {
    let file = load(&args.model.model)?;
    let tol = cli.tol.unwrap_or(LIFT_TOL);
    let model = &file.model;
    let system = &model.system;
    let y = phase_generator(&file, &args.generator.generator)?;
    let named = model.lift(&args.generator.generator);
    let f = free_function(&args.generator)?;
    let vars = model.chart().state_vars();
    let c_expr = match &args.c {
        Some(text) => Some(parse(text, &vars).map_err(|e| Failure::Usage(format!("--c `{text}`: {e}")))?),
        None => named.map(|l| l.c_expr.clone()),
    };
    let [u0, v0] = numbers::<2>(&args.initial, "--initial")?;
    let [t0, t1] = numbers::<2>(&args.t_span, "--t-span")?;

    let mut spec = LiftSpec::new(y.clone());
    if let Some(lift) = named {
        spec.guards = lift.guards.clone();
    }
    if let Some(f) = &f {
        let c = c_expr
            .clone()
            .ok_or_else(|| Failure::Usage("--F needs a constant of motion; pass --c".into()))?;
        spec = spec.with_free_function(f.clone(), c);
    }

    let region_list = if model.regions.is_empty() {
        vec![SampleRegion::new((-3.0, 3.0), (-3.0, 3.0))]
    } else {
        model.regions.clone()
    };
    let mut consistency = Vec::new();
    let mut consistent = true;
    for region in &region_list {
        let (ok, report) = check_lift_consistency(system, y, region, tol)?;
        consistent &= ok;
        consistency.push(report);
    }

    // closed form only when the packaged constant of motion is in use
    let closed = match (named, &args.c) {
        (Some(lift), None) => Some(lift.xi_with(f.as_ref().unwrap_or(&Expr::zero()))?),
        _ => None,
    };
    let xi0 = match (args.xi0, named) {
        (Some(xi0), _) => xi0,
        (None, Some(lift)) => lift
            .xi_particular
            .eval(&[("t", t0), (vars[0], u0), (vars[1], v0)])
            .map_err(|e| Failure::Core(Error::from(e)))?,
        (None, None) => 0.0,
    };
    let mut report = LiftReport {
        version: VERSION,
        command: "lift",
        model: &model.name,
        generator: &args.generator.generator,
        free_function: args.generator.free.clone(),
        constant_of_motion: c_expr.as_ref().map(Expr::to_string),
        seed: cli.seed,
        initial: [u0, v0],
        xi0,
        t_span: [t0, t1],
        h: cli.h,
        tolerance: tol,
        consistent,
        regions: region_list.iter().map(|r| r.summary(system.chart())).collect(),
        consistency,
        xi_closed: closed.as_ref().map(Expr::to_string),
        closed_form: None,
        error: None,
    };
    if !consistent {
        report.error = Some("the two forms of the lifting condition disagree: the generator is not a phase-plane symmetry".into());
        emit_report(args.report.as_ref(), &report)?;
        return Err(Failure::CheckFailed);
    }
    let mut result = lift_characteristic(system, &spec, (u0, v0), xi0, (t0, t1), cli.h)?;
    if let Some(closed) = closed {
        result = result.compare_closed(system, closed, CLOSED_FORM_TOL)?;
        report.closed_form = result.residual_report.clone();
    }
    emit(cli.out.as_ref(), &lift_csv(&result.samples))?;
    emit_report(args.report.as_ref(), &report)?;
    match &report.closed_form {
        Some(r) if !r.passed() => Err(Failure::CheckFailed),
        _ => Ok(()),
    }
}

fn flow(cli: &Cli, args: &FlowArgs) -> Result<(), Failure> {
    let file = load(&args.model.model)?;
    let [u0, v0] = numbers::<2>(&args.initial, "--initial")?;
    let [t0, t1] = numbers::<2>(&args.t_span, "--t-span")?;
    let traj = integrate_system(&file.model.system, (u0, v0), (t0, t1), cli.h)?;
    emit(cli.out.as_ref(), &trajectory_csv(&traj.samples))
}

#[derive(Serialize)]
struct TransformReport<'a> {
    version: &'static str,
    command: &'static str,
    model: &'a str,
    generator: &'a str,
    free_function: Option<String>,
    seed: u64,
    epsilon: f64,
    h_eps: f64,
    tolerance: f64,
    preserved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    preservation: Option<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn transform(cli: &Cli, args: &TransformArgs) -> Result<(), Failure> {
    let file = load(&args.model.model)?;
    let tol = cli.tol.unwrap_or(PRESERVATION_TOL);
    let x = time_generator(&file, &args.generator)?;
    let samples = read_trajectory_csv(&args.input)?;
    let chart = file.model.chart().clone();
    let traj = Trajectory::from_samples(chart, samples).map_err(|e| Failure::Load(format!("{}: {e}", args.input.display())))?;
    let curve = exp_map_time(&x, &traj, args.epsilon, args.h_eps)?;
    emit(cli.out.as_ref(), &transformed_csv(&curve))?;

    let mut report = TransformReport {
        version: VERSION,
        command: "transform",
        model: &file.model.name,
        generator: &args.generator.generator,
        free_function: args.generator.free.clone(),
        seed: cli.seed,
        epsilon: args.epsilon,
        h_eps: args.h_eps,
        tolerance: tol,
        preserved: false,
        max_abs_residual: None,
        preservation: None,
        error: None,
    };
    match solution_preservation_check(&file.model.system, &curve, tol) {
        Ok(r) => {
            report.preserved = r.passed();
            report.max_abs_residual = Some(r.max_abs_residual);
            report.preservation = Some(r);
        }
        Err(e @ (Error::NonMonotoneTime { .. } | Error::InvalidArgument(_))) => report.error = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    emit_report(args.report.as_ref(), &report)?;
    if report.preserved {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn models(cli: &Cli, args: &ModelsArgs) -> Result<(), Failure> {
    if let Some(name) = &args.show {
        let file = load(name)?;
        return emit(cli.out.as_ref(), &render_model(&file.model));
    }
    let mut text = String::new();
    for model in builtin_models() {
        let generators: Vec<&str> = model.generators.iter().map(|(n, _)| n.as_str()).collect();
        let lifts: Vec<&str> = model.lifts.iter().map(|l| l.generator.as_str()).collect();
        text += &format!(
            "{}\tchart={}\tgenerators={}\tlifts={}\n",
            model.name,
            model.chart().name(),
            generators.join(","),
            lifts.join(",")
        );
    }
    emit(cli.out.as_ref(), &text)
}
