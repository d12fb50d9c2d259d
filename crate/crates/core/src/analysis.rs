//! Sampled hypothesis checks for models and stochastic-completeness
//! diagnostics for computed graphs. Everything here is advisory: scans and
//! samples over finite sets, with the sample sizes reported.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::discrete::{ball_volume, geodesic_distance, jet_at, GridFunction};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{geometry_at, graph_ricci_quadratic, ncc_quantity, GeometryAtPoint, Maximality};
use crate::linalg::Mat;
use crate::model::Model;
use crate::solver;
use crate::warping::Quantity;

/// Sampling tolerance of the theorem checks.
pub const CLASSIFY_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NccReport {
    pub holds_on_sample: bool,
    pub min_quantity: f64,
    pub argmin_t: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_v: Vec<f64>,
    pub samples: usize,
}

/// Minimum of the NCC quantity over `t_samples` crossed with the pairs
/// `(x_samples[i], v_samples[i])`.
pub fn check_ncc(
    model: &Model,
    t_samples: &[f64],
    x_samples: &[Vec<f64>],
    v_samples: &[Vec<f64>],
) -> Result<NccReport> {
    if x_samples.len() != v_samples.len() {
        return Err(Error::DimensionMismatch { expected: x_samples.len(), got: v_samples.len() });
    }
    let mut rep = NccReport {
        holds_on_sample: true,
        min_quantity: f64::INFINITY,
        argmin_t: f64::NAN,
        argmin_x: Vec::new(),
        argmin_v: Vec::new(),
        samples: 0,
    };
    for &t in t_samples {
        for (x, v) in x_samples.iter().zip(v_samples) {
            let q = ncc_quantity(&model.warping, &model.fiber, t, x, v)?;
            rep.samples += 1;
            if q < rep.min_quantity {
                rep.min_quantity = q;
                rep.argmin_t = t;
                rep.argmin_x = x.clone();
                rep.argmin_v = v.clone();
            }
        }
    }
    rep.holds_on_sample = rep.min_quantity >= -CLASSIFY_TOL;
    Ok(rep)
}

fn random_points(rng: &mut ChaCha8Rng, bbox: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| bbox.iter().map(|&(a, b)| rng.gen_range(a..b)).collect()).collect()
}

/// NCC on `samples` heights in `window` and `samples` random fiber pairs.
pub fn sample_ncc(model: &Model, window: Option<(f64, f64)>, samples: usize, seed: u64) -> Result<NccReport> {
    let ts = model.warping.interval().sample_points(window, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    let xs = random_points(&mut rng, &model.fiber.sample_box(), samples);
    let vs = random_points(&mut rng, &vec![(-1.0, 1.0); n], samples);
    check_ncc(model, &ts, &xs, &vs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applicability {
    pub applicable: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCheck {
    pub applicable: bool,
    pub beta: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightBounds {
    pub future_case: bool,
    pub past_case: bool,
    pub sup_fp_over_f: f64,
    pub inf_fp_over_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantCurvature {
    pub cbar: f64,
    pub totally_geodesic_prediction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelVerdict {
    pub model: String,
    pub window: (f64, f64),
    pub samples: usize,
    pub ncc: NccReport,
    pub sup_log_f_second: f64,
    pub inf_fp_over_f_squared: f64,
    pub thm_slice_rigidity: Applicability,
    pub thm_nonexistence: Applicability,
    pub thm_product: ProductCheck,
    pub cor_height_bounds: HeightBounds,
    pub constant_curvature: Option<ConstantCurvature>,
    /// Both the rigidity and the nonexistence hypotheses held on the sample.
    pub conflict: bool,
    pub conclusions: Vec<String>,
}

pub const LABEL_RIGIDITY: &str = "bounded-angle stochastically complete maximal => slice";
pub const LABEL_NONEXISTENCE: &str = "nonexistence";
pub const LABEL_PRODUCT: &str = "product => slice";
pub const LABEL_NONE: &str = "no conclusion";

/// Lower bound of `Ric_F / g_F`: exact for the builtin fibers, sampled otherwise.
fn fiber_ricci_lower(model: &Model, samples: usize, seed: u64) -> Result<f64> {
    let n = model.dim();
    if let Some(c) = model.fiber.curvature_constant() {
        return Ok(c * (n as f64 - 1.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1be);
    let mut lo = f64::INFINITY;
    for x in random_points(&mut rng, &model.fiber.sample_box(), samples) {
        for v in random_points(&mut rng, &vec![(-1.0, 1.0); n], 16) {
            let r = model.fiber.ricci_quadratic(&x, &v)?;
            let g = model.fiber.norm2(&x, &v)?;
            if g > 0.0 {
                lo = lo.min(r / g);
            }
        }
    }
    Ok(lo)
}

/// Evaluates the theorem hypotheses on sampled scans. Unbounded intervals
/// without a window are scanned on the default window.
pub fn classify(model: &Model, window: Option<(f64, f64)>, samples: usize, seed: u64) -> Result<ModelVerdict> {
    let w = &model.warping;
    let samples = samples.max(100);
    let ncc = sample_ncc(model, window, samples, seed)?;
    let scan = |q| w.scan_extrema(q, window, samples, true);
    let log2 = scan(Quantity::LogFSecond)?;
    let fpf = scan(Quantity::FPrimeOverF)?;
    let mut fpf2 = scan(Quantity::FPrimeOverFSquared)?;
    // f'/f is continuous: a sign change on the window forces a zero.
    if fpf.inf < 0.0 && fpf.sup > 0.0 {
        fpf2.inf = 0.0;
    }
    let tol = CLASSIFY_TOL;

    let rigid = ncc.holds_on_sample && log2.sup < -tol;
    let thm_slice_rigidity = Applicability {
        applicable: rigid,
        reason: if !ncc.holds_on_sample {
            format!("NCC fails on sample (min {:.3e})", ncc.min_quantity)
        } else if rigid {
            format!("NCC holds and sup (log f)'' = {:.6} < 0", log2.sup)
        } else {
            format!("sup (log f)'' = {:.6} is not negative", log2.sup)
        },
    };

    let nonex = ncc.holds_on_sample && log2.sup <= tol && fpf2.inf > tol;
    let thm_nonexistence = Applicability {
        applicable: nonex,
        reason: if !ncc.holds_on_sample {
            format!("NCC fails on sample (min {:.3e})", ncc.min_quantity)
        } else if log2.sup > tol {
            format!("sup (log f)'' = {:.6} > 0", log2.sup)
        } else if fpf2.inf <= tol {
            format!("inf (f'/f)^2 = {:.6} vanishes", fpf2.inf)
        } else {
            format!("NCC holds, (log f)'' <= 0 and inf (f'/f)^2 = {:.6} > 0", fpf2.inf)
        },
    };

    let static_warp = w.is_constant() || (fpf.sup.abs() <= tol && fpf.inf.abs() <= tol);
    let thm_product = if static_warp {
        let beta = fiber_ricci_lower(model, samples, seed)?;
        ProductCheck {
            applicable: beta > tol,
            beta: Some(beta),
            reason: if beta > tol {
                format!("product spacetime with Ric_F >= {beta:.6} g_F")
            } else {
                format!("product spacetime but Ric_F lower bound {beta:.6} is not positive")
            },
        }
    } else {
        ProductCheck { applicable: false, beta: None, reason: "warping function is not constant".into() }
    };

    let cor_height_bounds = HeightBounds {
        future_case: fpf.sup < -tol,
        past_case: fpf.inf > tol,
        sup_fp_over_f: fpf.sup,
        inf_fp_over_f: fpf.inf,
    };

    let mut conclusions = Vec::new();
    if rigid {
        conclusions.push(LABEL_RIGIDITY.to_string());
    }
    if nonex {
        conclusions.push(LABEL_NONEXISTENCE.to_string());
    }
    if thm_product.applicable {
        conclusions.push(LABEL_PRODUCT.to_string());
    }
    if conclusions.is_empty() {
        conclusions.push(LABEL_NONE.to_string());
    }
    if cor_height_bounds.future_case {
        conclusions.push("no stochastically complete maximal hypersurface bounded away from future infinity".into());
    }
    if cor_height_bounds.past_case {
        conclusions.push("no stochastically complete maximal hypersurface bounded away from past infinity".into());
    }
    let constant_curvature = constant_curvature_check(model);
    if let Some(cc) = &constant_curvature {
        conclusions.push(cc.totally_geodesic_prediction.clone());
    }

    Ok(ModelVerdict {
        model: model.name.clone(),
        window: log2.window,
        samples,
        ncc,
        sup_log_f_second: log2.sup,
        inf_fp_over_f_squared: fpf2.inf,
        thm_slice_rigidity,
        thm_nonexistence,
        thm_product,
        cor_height_bounds,
        constant_curvature,
        conflict: rigid && nonex,
        conclusions,
    })
}

/// Detects a spacetime of constant sectional curvature `cbar >= 0`: the fiber
/// must have constant curvature `k` and both `f''/f` and `(k + f'^2)/f^2` must
/// equal `cbar` along the default scan.
pub fn constant_curvature_check(model: &Model) -> Option<ConstantCurvature> {
    let k = model.fiber.curvature_constant()?;
    let w = &model.warping;
    let pts = w.interval().sample_points(None, 2001).ok()?;
    let mut vals = Vec::with_capacity(2 * pts.len());
    for t in pts {
        let v = w.values(t).ok()?;
        vals.push(v.f2 / v.f);
        if model.dim() >= 2 {
            vals.push((k + v.f1 * v.f1) / (v.f * v.f));
        }
    }
    let first = vals[0];
    let spread = vals.iter().fold(0.0f64, |m, v| m.max((v - first).abs()));
    if spread > 1e-9 * (1.0 + first.abs()) || first < -CLASSIFY_TOL {
        return None;
    }
    let cbar = if first.abs() <= CLASSIFY_TOL { 0.0 } else { first };
    Some(ConstantCurvature {
        cbar,
        totally_geodesic_prediction:
            "stochastically complete maximal hypersurface with bounded |A|^2 => totally geodesic".into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightSignCheck {
    pub sup_u: f64,
    pub inf_u: f64,
    pub sign_at_sup: f64,
    pub sign_at_inf: f64,
    pub consistent: bool,
    pub max_residual: f64,
    pub caveat: String,
}

pub const HEIGHT_MAXIMALITY_TOL: f64 = 1e-6;

/// Signs of `f'/f` at the extreme heights of a maximal grid graph.
pub fn height_sign_check(graph: &GridFunction<f64>, model: &Model) -> Result<HeightSignCheck> {
    let r = solver::residual(model, graph)?;
    let max_residual = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_residual > HEIGHT_MAXIMALITY_TOL {
        return Err(Error::NotMaximal { h: max_residual / model.dim() as f64 });
    }
    let sup_u = graph.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf_u = graph.values.iter().copied().fold(f64::INFINITY, f64::min);
    let sign_at_sup = model.warping.quantity(Quantity::FPrimeOverF, sup_u)?;
    let sign_at_inf = model.warping.quantity(Quantity::FPrimeOverF, inf_u)?;
    Ok(HeightSignCheck {
        sup_u,
        inf_u,
        sign_at_sup,
        sign_at_inf,
        consistent: sign_at_sup >= -CLASSIFY_TOL && sign_at_inf <= CLASSIFY_TOL,
        max_residual,
        caveat: "a grid graph is a compact patch, not a complete manifold; this is a consistency probe only".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CriterionSatisfied,
    CriterionNotSatisfiedOnSample,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    Polynomial,
    Exponential,
    ExponentialSquare,
    ExponentialCube,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciLower {
    pub sampled_min: f64,
    /// Minimum over nodes in the inner half of the patch.
    pub inner_min: f64,
    pub bounded_flag: bool,
    pub samples: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeGrowth {
    pub radii: Vec<f64>,
    pub volumes: Vec<f64>,
    /// Largest radius whose ball stays inside the patch.
    pub usable_radius: f64,
    /// Slope of `log vol` against `log r`.
    pub growth_exponent_fit: Option<f64>,
    /// Slope of `log vol` against `r`.
    pub exponential_rate_fit: Option<f64>,
    pub growth_class: Option<GrowthClass>,
    pub grigoryan_verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialRicci {
    #[serde(rename = "G_expr")]
    pub g_expr: String,
    pub pointwise_ok: bool,
    /// `min (Ric(grad r, grad r) + (n-1) G(r)^2)` on the sample.
    pub min_margin: f64,
    pub samples: usize,
    pub one_over_g_integral_divergent: Option<bool>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub ricci_lower: RicciLower,
    pub volume_growth: VolumeGrowth,
    pub radial_ricci: Option<RadialRicci>,
    pub angle_sup: f64,
    /// `max |Du| / f(u)`
    pub lambda: f64,
    /// `sqrt(1 - lambda^2) inf f(u)`
    pub length_distortion_constant: f64,
    /// `(1 - lambda^2) inf f(u)^2`, the squared-form constant, for comparison.
    pub printed_length_constant: f64,
    pub overall: Verdict,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletenessOptions {
    pub directions: usize,
    pub seed: u64,
}

impl Default for CompletenessOptions {
    fn default() -> Self {
        Self { directions: 8, seed: DEFAULT_SEED }
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, rss)
}

/// Divergence probe for `int_1^inf dr / G`: compares the increments over
/// successive decades; a non-summable tail keeps them from collapsing.
fn one_over_g_divergent(g: &crate::expr::Compiled) -> Option<bool> {
    let eval = |r: f64| -> Option<f64> {
        let v: f64 = g.eval(&[r]).ok()?;
        (v > 0.0 && v.is_finite()).then_some(1.0 / v)
    };
    let decade = |a: f64| -> Option<f64> {
        let m = 2000;
        let (la, lb) = (a.ln(), (10.0 * a).ln());
        let dl = (lb - la) / m as f64;
        let mut s = 0.0;
        for i in 0..=m {
            let r = (la + dl * i as f64).exp();
            let wgt = if i == 0 || i == m { 0.5 } else { 1.0 };
            s += wgt * eval(r)? * r;
        }
        Some(s * dl)
    };
    let incs: Vec<f64> = [1e2, 1e3, 1e4, 1e5].iter().map(|&a| decade(a)).collect::<Option<_>>()?;
    let last = incs[3];
    let prev = incs[2];
    Some(last > 0.0 && last >= 0.5 * prev)
}

/// Stochastic-completeness diagnostics of a grid graph around `origin`.
pub fn completeness_diagnostics(
    model: &Model,
    graph: &GridFunction<f64>,
    origin: usize,
    r_max: f64,
    g_expr: Option<&Expr>,
    opts: CompletenessOptions,
) -> Result<CompletenessReport> {
    let grid = &graph.grid;
    let n = grid.dim();
    if n != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: n });
    }
    if origin >= grid.len() || grid.margin(origin) < 1 {
        return Err(Error::BoundaryNode { node: origin });
    }
    let mut geo: Vec<Option<GeometryAtPoint<f64>>> = vec![None; grid.len()];
    for k in (0..grid.len()).filter(|&k| grid.margin(k) >= 1) {
        let j = jet_at(graph, k)?;
        geo[k] = Some(geometry_at(&model.warping, &model.fiber, &j).map_err(|e| match e {
            Error::NotSpacelike { du2, f2, .. } => Error::NotSpacelike { du2, f2, node: Some(k) },
            e => e,
        })?);
    }
    let metric: Vec<Option<Mat<f64>>> = geo.iter().map(|g| g.as_ref().map(|g| g.g_u.clone())).collect();
    let dist = geodesic_distance(grid, &metric, origin)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let counts = grid.counts().to_vec();
    let inner =
        |k: usize| -> bool { grid.multi(k).iter().zip(&counts).all(|(&i, &c)| 4 * i >= c - 1 && 4 * i <= 3 * (c - 1)) };
    let (mut rmin, mut rmin_inner, mut samples) = (f64::INFINITY, f64::INFINITY, 0);
    let (mut angle_sup, mut lambda, mut inf_f) = (0.0f64, 0.0f64, f64::INFINITY);
    for (k, g) in geo.iter().enumerate() {
        let Some(g) = g else { continue };
        angle_sup = angle_sup.max(g.cosh_phi);
        lambda = lambda.max(g.du_norm2.sqrt() / g.f);
        inf_f = inf_f.min(g.f);
        for _ in 0..opts.directions.max(1) {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = g.norm2(&v).sqrt();
            if !(len > 1e-12) {
                continue;
            }
            let v: Vec<f64> = v.iter().map(|c| c / len).collect();
            let ric = graph_ricci_quadratic(&model.fiber, g, &v, Maximality::Relaxed)?;
            samples += 1;
            rmin = rmin.min(ric);
            if inner(k) {
                rmin_inner = rmin_inner.min(ric);
            }
        }
    }
    let bounded_flag = rmin.is_finite() && rmin_inner.is_finite() && rmin_inner - rmin <= 1.0f64.max(rmin_inner.abs());
    let ricci_lower = RicciLower {
        sampled_min: rmin,
        inner_min: rmin_inner,
        bounded_flag,
        samples,
        verdict: if bounded_flag { Verdict::CriterionSatisfied } else { Verdict::Inconclusive },
    };

    let usable_radius =
        (0..grid.len()).filter(|&k| grid.margin(k) == 1).filter_map(|k| dist[k]).fold(f64::INFINITY, f64::min);
    let radii: Vec<f64> = (1..=10).map(|i| r_max * i as f64 / 10.0).collect();
    let volumes: Vec<f64> = radii.iter().map(|&r| ball_volume(grid, &metric, &dist, r)).collect();
    let fit: Vec<(f64, f64)> = radii
        .iter()
        .zip(&volumes)
        .filter(|(r, v)| **r < usable_radius && **v > 0.0)
        .map(|(r, v)| (*r, v.ln()))
        .collect();
    let volume_growth = if fit.len() >= 3 {
        let rs: Vec<f64> = fit.iter().map(|p| p.0).collect();
        let lv: Vec<f64> = fit.iter().map(|p| p.1).collect();
        let logr: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let classes = [
            (GrowthClass::Polynomial, least_squares_slope(&logr, &lv)),
            (GrowthClass::Exponential, least_squares_slope(&rs, &lv)),
            (GrowthClass::ExponentialSquare, least_squares_slope(&rs.iter().map(|r| r * r).collect::<Vec<_>>(), &lv)),
            (GrowthClass::ExponentialCube, least_squares_slope(&rs.iter().map(|r| r.powi(3)).collect::<Vec<_>>(), &lv)),
        ];
        let best_slow = classes[..3].iter().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap();
        let cube = &classes[3];
        let (class, verdict) = if cube.1 .0 > 0.0 && cube.1 .1 < 0.5 * best_slow.1 .1 {
            (cube.0, Verdict::CriterionNotSatisfiedOnSample)
        } else {
            (best_slow.0, Verdict::CriterionSatisfied)
        };
        VolumeGrowth {
            radii,
            volumes,
            usable_radius,
            growth_exponent_fit: Some(classes[0].1 .0),
            exponential_rate_fit: Some(classes[1].1 .0),
            growth_class: Some(class),
            grigoryan_verdict: verdict,
        }
    } else {
        VolumeGrowth {
            radii,
            volumes,
            usable_radius,
            growth_exponent_fit: None,
            exponential_rate_fit: None,
            growth_class: None,
            grigoryan_verdict: Verdict::Inconclusive,
        }
    };

    let radial_ricci = match g_expr {
        None => None,
        Some(ge) => Some(radial_check(model, graph, &geo, &dist, ge)?),
    };

    let lam = lambda.min(1.0);
    let mut overall = Verdict::Inconclusive;
    if ricci_lower.verdict == Verdict::CriterionSatisfied
        || volume_growth.grigoryan_verdict == Verdict::CriterionSatisfied
        || radial_ricci.as_ref().is_some_and(|r| r.verdict == Verdict::CriterionSatisfied)
    {
        overall = Verdict::CriterionSatisfied;
    }
    Ok(CompletenessReport {
        ricci_lower,
        volume_growth,
        radial_ricci,
        angle_sup,
        lambda,
        length_distortion_constant: (1.0 - lam * lam).sqrt() * inf_f,
        printed_length_constant: (1.0 - lam * lam) * inf_f * inf_f,
        overall,
        note: "finite-patch heuristics; sufficient criteria only, stochastic incompleteness is never asserted".into(),
    })
}

fn radial_check(
    model: &Model,
    graph: &GridFunction<f64>,
    geo: &[Option<GeometryAtPoint<f64>>],
    dist: &[Option<f64>],
    ge: &Expr,
) -> Result<RadialRicci> {
    let grid = &graph.grid;
    let n = grid.dim();
    let compiled = ge.compile(&["r"])?;
    let h = grid.spacing();
    let hmax = h.iter().copied().fold(0.0, f64::max);
    let (mut min_margin, mut samples) = (f64::INFINITY, 0);
    for (k, g) in geo.iter().enumerate() {
        let (Some(g), Some(r)) = (g, dist[k]) else { continue };
        if r < 2.0 * hmax {
            continue;
        }
        let mut dr = Vec::with_capacity(n);
        for a in 0..n {
            let (Some(p), Some(m)) = (grid.offset(k, a, 1), grid.offset(k, a, -1)) else { break };
            let (Some(dp), Some(dm)) = (dist[p], dist[m]) else { break };
            dr.push((dp - dm) / (2.0 * h[a]));
        }
        if dr.len() < n {
            continue;
        }
        let grad = g.g_u_inv.mul_vec(&dr);
        let len = g.norm2(&grad).sqrt();
        if !(len > 1e-12) {
            continue;
        }
        let nu: Vec<f64> = grad.iter().map(|c| c / len).collect();
        let ric = graph_ricci_quadratic(&model.fiber, g, &nu, Maximality::Relaxed)?;
        let gr: f64 = compiled.eval(&[r])?;
        min_margin = min_margin.min(ric + (n as f64 - 1.0) * gr * gr);
        samples += 1;
    }
    let pointwise_ok = samples > 0 && min_margin >= -CLASSIFY_TOL;
    let divergent = one_over_g_divergent(&compiled);
    let verdict = match (pointwise_ok, divergent) {
        (true, Some(true)) => Verdict::CriterionSatisfied,
        (false, _) if samples > 0 => Verdict::CriterionNotSatisfiedOnSample,
        _ => Verdict::Inconclusive,
    };
    Ok(RadialRicci {
        g_expr: ge.to_string(),
        pointwise_ok,
        min_margin,
        samples,
        one_over_g_integral_divergent: divergent,
        verdict,
    })
}
