use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pdtradeoff::bounds::{d_max, d_min};
use pdtradeoff::divergence::DivergenceKind;
use pdtradeoff::estimators::{
    map_estimator, mmse_estimator, posterior_sampling_estimator, random_draw_estimator,
    stability_probe,
};
use pdtradeoff::gaussian::GaussianSetting;
use pdtradeoff::model::{DegradationModel, DistortionMeasure, Estimator, ModelFile};
use pdtradeoff::plane::{admissible_set, emit_scatter, emit_table, ingest, pareto_front};
use pdtradeoff::tradeoff::{
    lagrangian_solve, perceptual_index, trace_curve, SolverOptions, TradeoffCurve,
};
use serde_json::{json, Map, Value};

use crate::config::{RunConfig, SolverConfig};
use crate::{
    BoundsArgs, CurveArgs, Distortion, EstimatorsArgs, GaussianArgs, PlaneArgs, ProbeArgs, Which,
};

pub const OK: u8 = 0;
pub const USAGE: u8 = 2;
pub const NUMERICAL: u8 = 3;
pub const IO: u8 = 4;

const DEFAULT_LAMBDAS: usize = 24;
const DEFAULT_D_LEVELS: usize = 200;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<pdtradeoff::Error> for Failure {
    fn from(e: pdtradeoff::Error) -> Self {
        let code = match e {
            pdtradeoff::Error::Io(_) => IO,
            _ => USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: IO,
        message: format!("{}: {e}", path.display()),
    }
}

/// Reads an input file, rejecting empty ones.
fn read_input(path: &Path) -> Result<String, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    if text.trim().is_empty() {
        return Err(Failure::usage(format!("{}: file is empty", path.display())));
    }
    Ok(text)
}

fn check_output(path: &Path) -> Result<(), Failure> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Failure {
            code: IO,
            message: format!(
                "{}: directory {} does not exist",
                path.display(),
                parent.display()
            ),
        });
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_failure(path, e))
}

fn finish(mut w: impl Write, path: &Path) -> Result<(), Failure> {
    w.flush().map_err(|e| io_failure(path, e))
}

fn load_model(path: &Path) -> Result<DegradationModel, Failure> {
    let text = read_input(path)?;
    let prefix = |e: pdtradeoff::Error| Failure {
        message: format!("{}: {e}", path.display()),
        ..Failure::from(e)
    };
    ModelFile::from_json(&text)
        .and_then(|f| f.build())
        .map_err(prefix)
}

fn distortion_name(d: Distortion) -> &'static str {
    match d {
        Distortion::Square => "square",
        Distortion::ZeroOne => "zero-one",
    }
}

fn measure(
    model: &DegradationModel,
    d: Distortion,
    est: Option<&Estimator>,
) -> Result<DistortionMeasure, Failure> {
    let x = model.x_alphabet_arc().clone();
    let target = est.map_or_else(|| x.clone(), |e| e.kernel().output_arc().clone());
    Ok(match d {
        Distortion::Square => DistortionMeasure::square_error(x, target)?,
        Distortion::ZeroOne => DistortionMeasure::zero_one(x, target),
    })
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let items: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Failure::usage(format!("empty {what} list")));
    }
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure::usage(format!("bad {what} {s:?}")))
        })
        .collect()
}

/// Log-spaced values from 10^lo to 10^hi.
fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

pub fn curve(a: &CurveArgs) -> Result<u8, Failure> {
    check_output(&a.out)?;
    let mut lambdas = match &a.lambdas {
        Some(raw) => parse_list(raw, "multiplier")?,
        None => log_spaced(-3.0, 3.0, DEFAULT_LAMBDAS),
    };
    if let Some(bad) = lambdas.iter().find(|&&l| l < 0.0) {
        return Err(Failure::usage(format!("multiplier {bad} is negative")));
    }
    if !(a.tol > 0.0) {
        return Err(Failure::usage(format!(
            "tolerance {} must be positive",
            a.tol
        )));
    }
    lambdas.sort_by(f64::total_cmp);
    let model = load_model(&a.model)?;
    let kind = DivergenceKind::from(a.divergence);
    let opts = SolverOptions {
        max_iters: a.max_iters,
        tol: a.tol,
        method: a.method.into(),
        ..SolverOptions::default()
    };
    RunConfig {
        inputs: vec![a.model.clone()],
        outputs: vec![a.out.clone()],
        divergence: Some(kind.to_string()),
        distortion: Some(distortion_name(a.distortion).into()),
        solver: Some(SolverConfig {
            method: format!("{:?}", a.method).to_lowercase(),
            max_iters: a.max_iters,
            tol: a.tol,
            lambdas: lambdas.clone(),
            warm_start: !a.no_warm_start,
        }),
        ..RunConfig::new("curve")
    }
    .log();

    let dist = measure(&model, a.distortion, None)?;
    let curve = if lambdas.len() == 1 {
        let pt = lagrangian_solve(&model, &dist, kind, lambdas[0], &opts)?;
        TradeoffCurve::new(kind, dist.name(), vec![pt])
    } else {
        trace_curve(&model, &dist, kind, &lambdas, &opts, !a.no_warm_start)?
    };
    let lo = d_min(&model, &dist)?.value;
    let hi = d_max(&model, &dist)?.value;
    let flagged = curve.flagged_count();
    let mut w = create(&a.out)?;
    curve.write_csv(&mut w, flagged > 0)?;
    finish(w, &a.out)?;
    println!(
        "D_min={lo} D_max={hi} points={} flagged={flagged}",
        curve.points().len()
    );
    Ok(if flagged > 0 { NUMERICAL } else { OK })
}

fn d_grid(raw: Option<&str>, g: &GaussianSetting) -> Result<Vec<f64>, Failure> {
    let Some(raw) = raw else {
        let (lo, hi) = (g.d_min(), g.d_min() + 2.0 * (g.d_zero() - g.d_min()));
        return Ok((0..DEFAULT_D_LEVELS)
            .map(|i| lo + (hi - lo) * i as f64 / (DEFAULT_D_LEVELS - 1) as f64)
            .collect());
    };
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 1 {
        return parse_list(raw, "distortion level");
    }
    let bad = || Failure::usage(format!("distortion grid {raw:?} is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n < 2 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

pub fn gaussian(a: &GaussianArgs) -> Result<u8, Failure> {
    if let Some(out) = &a.out {
        check_output(out)?;
    }
    let g = GaussianSetting::new(a.sigma)?;
    let grid = d_grid(a.d_grid.as_deref(), &g)?;
    let mut params = Map::new();
    params.insert("sigma".into(), json!(a.sigma));
    params.insert("d_grid".into(), json!(grid));
    RunConfig {
        outputs: a.out.iter().cloned().collect(),
        divergence: Some(DivergenceKind::KullbackLeibler.to_string()),
        distortion: Some("square".into()),
        params,
        ..RunConfig::new("gaussian")
    }
    .log();
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            g.write_curve_csv(&grid, &mut w)?;
            finish(w, path)?;
        }
        None => g.write_curve_csv(&grid, io::stdout().lock())?,
    }
    Ok(OK)
}

pub fn bounds(a: &BoundsArgs) -> Result<u8, Failure> {
    let model = load_model(&a.model)?;
    RunConfig {
        inputs: vec![a.model.clone()],
        distortion: Some(distortion_name(a.distortion).into()),
        ..RunConfig::new("bounds")
    }
    .log();
    let dist = measure(&model, a.distortion, None)?;
    println!("D_min = {}", d_min(&model, &dist)?.value);
    println!("D_max = {}", d_max(&model, &dist)?.value);
    Ok(OK)
}

fn which_name(w: Which) -> &'static str {
    match w {
        Which::Mmse => "mmse",
        Which::Map => "map",
        Which::Ps => "ps",
        Which::Rand => "rand",
    }
}

fn kernel_csv(est: &Estimator, out: impl Write) -> Result<(), Failure> {
    let k = est.kernel();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend(k.output().labels().iter().cloned());
    w.write_record(&header).map_err(pdtradeoff::Error::from)?;
    for (i, row) in k.rows().enumerate() {
        let mut rec = vec![k.input().label(i).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(pdtradeoff::Error::from)?;
    }
    w.flush().map_err(|e| Failure {
        code: IO,
        message: e.to_string(),
    })
}

pub fn estimators(a: &EstimatorsArgs) -> Result<u8, Failure> {
    if let Some(out) = &a.out {
        check_output(out)?;
    }
    let model = load_model(&a.model)?;
    let mut params = Map::new();
    params.insert("which".into(), json!(which_name(a.which)));
    params.insert("report".into(), json!(a.report));
    RunConfig {
        inputs: vec![a.model.clone()],
        outputs: a.out.iter().cloned().collect(),
        distortion: Some(distortion_name(a.distortion).into()),
        params,
        ..RunConfig::new("estimators")
    }
    .log();

    let mut ties = None;
    let est = match a.which {
        Which::Mmse => mmse_estimator(&model)?,
        Which::Map => {
            let m = map_estimator(&model)?;
            ties = Some(m.ties);
            m.estimator
        }
        Which::Ps => posterior_sampling_estimator(&model),
        Which::Rand => random_draw_estimator(&model),
    };
    let mut sink: Box<dyn Write> = match &a.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    if a.report {
        let dist = measure(&model, a.distortion, Some(&est))?;
        let out = model.output_distribution(&est)?;
        let mut perception = Map::new();
        for kind in DivergenceKind::ALL {
            let v = match perceptual_index(&model, kind, &est) {
                Ok(v) => number(v),
                Err(e) => json!(e.to_string()),
            };
            perception.insert(kind.to_string(), v);
        }
        let law: Vec<Value> = out
            .alphabet()
            .labels()
            .iter()
            .zip(out.weights())
            .map(|(l, &w)| json!({"label": l, "mass": w}))
            .collect();
        let mut report = json!({
            "estimator": which_name(a.which),
            "distortion": dist.name(),
            "mean_distortion": number(model.mean_distortion(&est, &dist)?),
            "deterministic": est.is_deterministic(),
            "output_distribution": law,
            "perception": perception,
        });
        if let Some(t) = ties {
            let labels: Vec<&str> = t.iter().map(|&y| model.y_alphabet().label(y)).collect();
            report["map_ties"] = json!(labels);
        }
        let text = serde_json::to_string_pretty(&report).expect("reports always serialize");
        writeln!(sink, "{text}").map_err(|e| Failure {
            code: IO,
            message: e.to_string(),
        })?;
    } else {
        kernel_csv(&est, &mut sink)?;
    }
    sink.flush().map_err(|e| Failure {
        code: IO,
        message: e.to_string(),
    })?;
    Ok(OK)
}

pub fn plane(a: &PlaneArgs) -> Result<u8, Failure> {
    let outputs: Vec<PathBuf> = a.out_svg.iter().chain(&a.out_csv).cloned().collect();
    for out in &outputs {
        check_output(out)?;
    }
    let text = read_input(&a.records)?;
    let records = ingest(text.as_bytes()).map_err(|e| Failure {
        message: format!("{}: {e}", a.records.display()),
        ..Failure::from(e)
    })?;
    RunConfig {
        inputs: vec![a.records.clone()],
        outputs,
        ..RunConfig::new("plane")
    }
    .log();
    let front = pareto_front(&records)?;
    if let Some(path) = &a.out_svg {
        let mut w = create(path)?;
        emit_scatter(&records, &front, &mut w)?;
        finish(w, path)?;
    }
    if let Some(path) = &a.out_csv {
        let mut w = create(path)?;
        emit_table(&records, &mut w)?;
        finish(w, path)?;
    }
    let admissible: Vec<String> = admissible_set(&records)?
        .into_iter()
        .map(|r| r.name)
        .collect();
    println!("admissible: {}", admissible.join(","));
    Ok(OK)
}

pub fn probe(a: &ProbeArgs) -> Result<u8, Failure> {
    let alphas = parse_list(&a.alphas, "mixing weight")?;
    let model = load_model(&a.model)?;
    let mut params = Map::new();
    params.insert("alphas".into(), json!(alphas));
    RunConfig {
        inputs: vec![a.model.clone()],
        distortion: Some(distortion_name(a.distortion).into()),
        params,
        ..RunConfig::new("probe")
    }
    .log();
    let dist = measure(&model, a.distortion, None)?;
    let report = stability_probe(&model, &dist, &alphas)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("reports always serialize")
    );
    Ok(OK)
}
