use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use grwlab_core::analysis::{self, CompletenessOptions, ModelVerdict};
use grwlab_core::discrete::{format_grid_file, parse_grid_file};
use grwlab_core::model::CATALOG;
use grwlab_core::solver::{self, SolverConfig};
use grwlab_core::verify::{self, GraphSource, IdentityId, IdentityReport};
use grwlab_core::{Error, Expr, Grid, GridFunction, Model};
use serde_json::{json, Value};

use crate::{CheckModelArgs, CliError, CompletenessArgs, ModelsArgs, ParseExprArgs, SolveArgs, VerifyArgs};

type Out = Result<String, CliError>;

const COORDS: [&str; 8] = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"];

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read `{path}`: {e}")))
}

fn load_model(spec: &str) -> Result<Model, CliError> {
    if let Some(m) = Model::builtin(spec) {
        return Ok(m);
    }
    if !Path::new(spec).is_file() {
        return Err(CliError::Io(format!("`{spec}` is neither a builtin model nor a model file")));
    }
    let name = Path::new(spec).file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    Ok(Model::parse_model_file(&read(spec)?, name)?)
}

fn floats(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--{key}: bad number `{p}`"))))
        .collect()
}

fn counts(key: &str, s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("--{key}: bad count `{p}`"))))
        .collect()
}

fn build_grid(bbox: Option<&str>, grid: Option<&str>, n: usize) -> Result<Grid<f64>, CliError> {
    let (Some(b), Some(g)) = (bbox, grid) else {
        return Err(CliError::Usage("--box and --grid are required here".into()));
    };
    let b = floats("box", b)?;
    let c = counts("grid", g)?;
    if c.len() != n || b.len() != 2 * n {
        return Err(CliError::Usage(format!(
            "the model has dimension {n}: --box needs {} values and --grid {n}",
            2 * n
        )));
    }
    let pairs: Vec<(f64, f64)> = b.chunks(2).map(|p| (p[0], p[1])).collect();
    Ok(Grid::new(&pairs, &c)?)
}

fn no_grid_flags(bbox: &Option<String>, grid: &Option<String>) -> Result<(), CliError> {
    if bbox.is_some() || grid.is_some() {
        return Err(CliError::Usage("--box/--grid cannot be combined with a grid file".into()));
    }
    Ok(())
}

fn fmt_end(x: f64) -> String {
    match x {
        f64::INFINITY => "inf".into(),
        f64::NEG_INFINITY => "-inf".into(),
        _ => format!("{x}"),
    }
}

pub fn parse_expr(a: ParseExprArgs) -> Out {
    let e = Expr::parse(&a.expr).map_err(Error::from)?;
    let vars = e.variables();
    let wrt = match (&a.wrt, a.diff) {
        (Some(v), _) => Some(v.clone()),
        (None, 0) => None,
        (None, _) if vars.len() <= 1 => Some(vars.iter().next().cloned().unwrap_or_else(|| "x".into())),
        (None, _) => return Err(CliError::Usage("several variables present; choose one with --wrt".into())),
    };
    let d = match &wrt {
        Some(v) => e.nth_derivative(v, a.diff),
        None => e.clone(),
    };
    let mut bindings = HashMap::new();
    for b in &a.at {
        let (k, v) = b.split_once('=').ok_or_else(|| CliError::Usage(format!("--at expects VAR=VALUE, got `{b}`")))?;
        let v = v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--at: bad number in `{b}`")))?;
        bindings.insert(k.trim().to_string(), v);
    }
    let val = if a.at.is_empty() { None } else { Some(d.eval::<f64>(&bindings).map_err(Error::from)?) };
    if a.json {
        return Ok(to_json(&json!({
            "input": a.expr,
            "diff": a.diff,
            "wrt": wrt,
            "variables": vars,
            "expression": d.to_string(),
            "at": bindings.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "value": val,
        })));
    }
    let mut s = format!("{d}\n");
    if let Some(v) = val {
        writeln!(s, "{v}").unwrap();
    }
    Ok(s)
}

pub fn models(a: ModelsArgs) -> Out {
    if let Some(name) = &a.show {
        let m = Model::builtin(name).ok_or_else(|| CliError::Usage(format!("unknown builtin `{name}`")))?;
        return Ok(m.to_model_file());
    }
    if a.json {
        let list: Vec<Value> = Model::catalog()
            .iter()
            .map(|m| {
                let iv = m.warping.interval();
                json!({
                    "name": m.name,
                    "dim": m.dim(),
                    "warping": m.warping.source(),
                    "interval": format!("{},{}", fmt_end(iv.lo), fmt_end(iv.hi)),
                    "fiber": m.fiber.kind().name(),
                })
            })
            .collect();
        return Ok(to_json(&Value::Array(list)));
    }
    Ok(CATALOG.iter().map(|n| format!("{n}\n")).collect())
}

fn verdict_text(v: &ModelVerdict) -> String {
    let mut s = String::new();
    let yes = |b: bool| if b { "applicable" } else { "not applicable" };
    writeln!(s, "model {} on window ({}, {}), {} samples", v.model, v.window.0, v.window.1, v.samples).unwrap();
    writeln!(
        s,
        "NCC: {} (min {:e} at t = {})",
        if v.ncc.holds_on_sample { "holds on sample" } else { "fails" },
        v.ncc.min_quantity,
        v.ncc.argmin_t
    )
    .unwrap();
    writeln!(s, "sup (log f)'' = {:e}", v.sup_log_f_second).unwrap();
    writeln!(s, "inf (f'/f)^2 = {:e}", v.inf_fp_over_f_squared).unwrap();
    writeln!(s, "slice rigidity: {} ({})", yes(v.thm_slice_rigidity.applicable), v.thm_slice_rigidity.reason).unwrap();
    writeln!(s, "nonexistence: {} ({})", yes(v.thm_nonexistence.applicable), v.thm_nonexistence.reason).unwrap();
    let beta = v.thm_product.beta.map(|b| format!(", beta = {b}")).unwrap_or_default();
    writeln!(s, "product: {}{beta} ({})", yes(v.thm_product.applicable), v.thm_product.reason).unwrap();
    let h = &v.cor_height_bounds;
    writeln!(s, "height bounds: future {} past {}", h.future_case, h.past_case).unwrap();
    if let Some(c) = &v.constant_curvature {
        writeln!(s, "constant curvature: cbar = {} ({})", c.cbar, c.totally_geodesic_prediction).unwrap();
    }
    if v.conflict {
        writeln!(s, "warning: rigidity and nonexistence hypotheses both hold on the sample").unwrap();
    }
    for c in &v.conclusions {
        writeln!(s, "=> {c}").unwrap();
    }
    s
}

pub fn check_model(a: CheckModelArgs) -> Out {
    let model = load_model(&a.model)?;
    let window = match &a.window {
        Some(w) => match floats("window", w)?.as_slice() {
            &[lo, hi] if lo < hi => Some((lo, hi)),
            _ => return Err(CliError::Usage("--window expects a,b with a < b".into())),
        },
        None => None,
    };
    let v = analysis::classify(&model, window, a.samples, a.seed)?;
    Ok(if a.json { to_json(&value(&v)) } else { verdict_text(&v) })
}

fn report_text(r: &IdentityReport) -> String {
    let mut s = String::new();
    let order = match (r.observed_order, r.exact) {
        (Some(p), _) => format!("order {p:.3}"),
        (None, true) => "exact".into(),
        (None, false) => "order n/a".into(),
    };
    writeln!(s, "{} {}: max residual {:.3e}, {order}", r.id, r.description, r.max_residual).unwrap();
    for l in &r.levels {
        let c: Vec<String> = l.counts.iter().map(|c| c.to_string()).collect();
        writeln!(s, "    {:>9}  h = {:.4e}  residual {:.3e}", c.join("x"), l.spacing[0], l.max_residual).unwrap();
    }
    s
}

pub fn verify(a: VerifyArgs) -> Out {
    let model = load_model(&a.model)?;
    let (source, grid) = match a.graph.strip_prefix("builtin:") {
        Some(spec) => {
            let g = build_grid(a.bbox.as_deref(), a.grid.as_deref(), model.dim())?;
            (GraphSource::parse_builtin(spec, model.dim())?, g)
        }
        None => {
            no_grid_flags(&a.bbox, &a.grid)?;
            let f = parse_grid_file(&read(&a.graph)?)?;
            let g = f.function.grid.clone();
            (GraphSource::Sampled(f.function), g)
        }
    };
    let ids = match &a.ids {
        Some(s) => verify::parse_ids(s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => IdentityId::ALL.to_vec(),
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for id in ids {
        match verify::run_identity(&model, &source, &grid, id, a.refine) {
            Ok(r) => reports.push(r),
            Err(e @ (Error::NotApplicable(_) | Error::NotMaximal { .. })) => skipped.push((id, e.to_string())),
            Err(e) => return Err(e.into()),
        }
    }
    if a.json {
        return Ok(to_json(&json!({
            "model": model.name,
            "graph": source.label(),
            "refine": a.refine,
            "reports": value(&reports),
            "skipped": skipped.iter().map(|(id, why)| json!({"id": id, "reason": why})).collect::<Vec<_>>(),
        })));
    }
    let mut s = format!("model {}, graph {}\n", model.name, source.label());
    for r in &reports {
        s.push_str(&report_text(r));
    }
    for (id, why) in &skipped {
        writeln!(s, "{id} skipped: {why}").unwrap();
    }
    Ok(s)
}

pub fn solve(a: SolveArgs) -> Out {
    let model = load_model(&a.model)?;
    let n = model.dim();
    let boundary = if Path::new(&a.bc).is_file() {
        no_grid_flags(&a.bbox, &a.grid)?;
        parse_grid_file(&read(&a.bc)?)?.function
    } else {
        let grid = build_grid(a.bbox.as_deref(), a.grid.as_deref(), n)?;
        let c = Expr::parse_in(&a.bc, &COORDS[..n]).map_err(Error::from)?.compile(&COORDS[..n]).map_err(Error::from)?;
        GridFunction::try_from_fn(grid, |x| c.eval(x))?
    };
    let cfg = SolverConfig { lambda_max: a.lambda_max, tol: a.tol, max_iter: a.max_iter, ..SolverConfig::default() };
    let (sol, rep) = solver::solve(&model, &boundary, &cfg, None)?;
    if let Some(path) = &a.out {
        let text = format_grid_file(&model.name, &sol)?;
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write `{path}`: {e}")))?;
    }
    if a.json {
        return Ok(to_json(&json!({
            "model": model.name,
            "counts": sol.grid.counts(),
            "bbox": sol.grid.bbox(),
            "config": value(&cfg),
            "report": value(&rep),
            "out": a.out,
        })));
    }
    let mut s = format!("converged in {} iterations\n", rep.iterations);
    writeln!(s, "residual {:.3e}, constraint margin {:.4}", rep.final_residual, rep.constraint_margin).unwrap();
    if let Some(p) = &a.out {
        writeln!(s, "wrote {p}").unwrap();
    }
    Ok(s)
}

pub fn completeness(a: CompletenessArgs) -> Out {
    let model = load_model(&a.model)?;
    let graph = parse_grid_file(&read(&a.graph)?)?.function;
    let idx = counts("origin", &a.origin)?;
    let grid = &graph.grid;
    if idx.len() != grid.dim() || idx.iter().zip(grid.counts()).any(|(&i, &c)| i >= c) {
        return Err(CliError::Usage(format!("--origin must be a node index inside {:?}", grid.counts())));
    }
    let origin = grid.index(&idx);
    let g = match &a.g {
        Some(src) => Some(Expr::parse_in(src, &["r"]).map_err(Error::from)?),
        None => None,
    };
    let opts = CompletenessOptions { directions: a.directions, seed: a.seed };
    let r = analysis::completeness_diagnostics(&model, &graph, origin, a.rmax, g.as_ref(), opts)?;
    if a.json {
        return Ok(to_json(&value(&r)));
    }
    let mut s = String::new();
    let rl = &r.ricci_lower;
    writeln!(
        s,
        "Ricci lower bound: sampled min {:.6}, inner min {:.6}, bounded {} ({:?})",
        rl.sampled_min, rl.inner_min, rl.bounded_flag, rl.verdict
    )
    .unwrap();
    let vg = &r.volume_growth;
    let p = vg.growth_exponent_fit.map_or("n/a".into(), |p| format!("{p:.4}"));
    writeln!(
        s,
        "volume growth: exponent {p}, class {:?}, usable radius {:.4} ({:?})",
        vg.growth_class, vg.usable_radius, vg.grigoryan_verdict
    )
    .unwrap();
    if let Some(rr) = &r.radial_ricci {
        writeln!(
            s,
            "radial Ricci with G = {}: pointwise {}, min margin {:.4e} ({:?})",
            rr.g_expr, rr.pointwise_ok, rr.min_margin, rr.verdict
        )
        .unwrap();
    }
    writeln!(s, "sup cosh(phi) = {:.6}, lambda = {:.6}", r.angle_sup, r.lambda).unwrap();
    writeln!(s, "length constant {:.6} (squared form {:.6})", r.length_distortion_constant, r.printed_length_constant)
        .unwrap();
    writeln!(s, "overall: {:?}", r.overall).unwrap();
    writeln!(s, "{}", r.note).unwrap();
    Ok(s)
}
