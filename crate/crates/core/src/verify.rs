//! Identity harness: discrete left sides (Laplace-Beltrami, gradients,
//! covariant Hessians, curvature of the induced metric field) against the
//! closed-form right sides of [`crate::geometry`], with refinement orders.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::constant_curvature_check;
use crate::discrete::{
    covariant_hessian, gradient, jet_at, laplace_beltrami, metric_christoffel, mixed_tensor_gradient_norm2,
    ricci_field, Grid, GridFunction, NodeField,
};
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::fiber::coord_names;
use crate::geometry::{
    geometry_at, product_ricci_rhs, rhs_delta_sinh2, rhs_delta_tau, rhs_grad_cosh, rhs_hess_tau_norm2, simons_rhs,
    GeometryAtPoint, Maximality, PointJet,
};
use crate::linalg::Mat;
use crate::model::Model;
use crate::solver;

/// Graphs entering the curvature identities must be maximal to this tolerance.
pub const MAXIMALITY_GATE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum IdentityId {
    I1,
    I2,
    I3,
    I4,
    I5,
    I6,
    I7,
    I8,
    I9,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::I1,
        IdentityId::I2,
        IdentityId::I3,
        IdentityId::I4,
        IdentityId::I5,
        IdentityId::I6,
        IdentityId::I7,
        IdentityId::I8,
        IdentityId::I9,
    ];

    pub fn description(self) -> &'static str {
        match self {
            IdentityId::I1 => "Laplacian of the height function",
            IdentityId::I2 => "gradient of cosh(phi)",
            IdentityId::I3 => "squared norm of Hess(tau)",
            IdentityId::I4 => "Laplacian of sinh^2(phi)",
            IdentityId::I5 => "trace and divergence forms of H agree",
            IdentityId::I6 => "sinh^2(phi) = |grad tau|^2 = cosh^2(phi) - 1",
            IdentityId::I7 => "Simons-type formula",
            IdentityId::I8 => "Ricci curvature of a maximal surface in a product",
            IdentityId::I9 => "gradient of g(K, N) = -A K^T",
        }
    }

    fn needs_maximal(self) -> bool {
        matches!(self, IdentityId::I3 | IdentityId::I4 | IdentityId::I7 | IdentityId::I8)
    }

    /// Both sides are pointwise algebra on the jets.
    pub fn is_algebraic(self) -> bool {
        matches!(self, IdentityId::I5 | IdentityId::I6)
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for IdentityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        IdentityId::ALL
            .into_iter()
            .find(|id| id.to_string() == t)
            .ok_or_else(|| Error::Format(format!("unknown identity `{s}` (expected I1..I9)")))
    }
}

pub fn parse_ids(s: &str) -> Result<Vec<IdentityId>> {
    let mut ids: Vec<IdentityId> =
        s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    ids.sort();
    ids.dedup();
    Ok(ids)
}

/// A graph given either by a closed-form height function of `x1..xn`, whose
/// jets are differentiated symbolically, or by nodal samples.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Analytic { label: String, expr: Expr },
    Sampled(GridFunction<f64>),
}

impl GraphSource {
    pub fn analytic(label: &str, src: &str, n: usize) -> Result<Self> {
        let names = coord_names(n);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Ok(GraphSource::Analytic { label: label.into(), expr: Expr::parse_in(src, &refs)? })
    }

    /// `u = a . x + b`
    pub fn affine(a: &[f64], b: f64) -> Result<Self> {
        let mut terms: Vec<String> = a.iter().enumerate().map(|(i, c)| format!("({c:?})*x{}", i + 1)).collect();
        terms.push(format!("({b:?})"));
        Self::analytic(&format!("affine:{a:?},{b}"), &terms.join(" + "), a.len())
    }

    pub fn slice(t0: f64, n: usize) -> Result<Self> {
        Self::analytic(&format!("slice:{t0}"), &format!("({t0:?})"), n)
    }

    /// `u = (1/3) log(x1^2 + x2^2)` over the hyperbolic half-plane.
    pub fn h2log() -> Self {
        Self::analytic("h2log", "log(x1^2 + x2^2)/3", 2).expect("static source")
    }

    /// `u = arcsinh |x|`, the Lorentzian catenoid of Minkowski space.
    pub fn catenoid() -> Self {
        Self::analytic("catenoid", "log(sqrt(x1^2 + x2^2) + sqrt(x1^2 + x2^2 + 1))", 2).expect("static source")
    }

    /// `affine:a1,..,an,b`, `slice:t0`, `h2log` or `catenoid`.
    pub fn parse_builtin(spec: &str, n: usize) -> Result<Self> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad number `{p}` in `{spec}`"))))
                .collect()
        };
        match name {
            "affine" => {
                let v = nums()?;
                if v.len() != n + 1 {
                    return Err(Error::DimensionMismatch { expected: n + 1, got: v.len() });
                }
                Self::affine(&v[..n], v[n])
            }
            "slice" => {
                let v = nums()?;
                if v.len() != 1 {
                    return Err(Error::Format(format!("slice takes one height, got `{args}`")));
                }
                Self::slice(v[0], n)
            }
            "h2log" | "catenoid" if n != 2 => Err(Error::DimensionMismatch { expected: 2, got: n }),
            "h2log" => Ok(Self::h2log()),
            "catenoid" => Ok(Self::catenoid()),
            _ => Err(Error::Format(format!("unknown builtin graph `{spec}`"))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSource::Analytic { label, .. } => label.clone(),
            GraphSource::Sampled(_) => "sampled".into(),
        }
    }

    pub fn sample(&self, grid: &Grid<f64>) -> Result<GridFunction<f64>> {
        match self {
            GraphSource::Analytic { expr, .. } => {
                let c = expr.compile(&coord_refs(grid.dim()))?;
                GridFunction::try_from_fn(grid.clone(), |x| c.eval(x))
            }
            GraphSource::Sampled(gf) => Ok(gf.clone()),
        }
    }
}

fn coord_refs(n: usize) -> Vec<&'static str> {
    const NAMES: [&str; 8] = ["x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"];
    NAMES[..n].to_vec()
}

struct JetCompiler {
    u: Compiled,
    du: Vec<Compiled>,
    d2u: Vec<Vec<Compiled>>,
}

impl JetCompiler {
    fn new(expr: &Expr, n: usize) -> Result<Self> {
        let names = coord_refs(n);
        let du_e: Vec<Expr> = names.iter().map(|v| expr.derivative(v)).collect();
        let mut d2u = Vec::with_capacity(n);
        for (i, di) in du_e.iter().enumerate() {
            let mut row = Vec::with_capacity(i + 1);
            for v in &names[..=i] {
                row.push(di.derivative(v).compile(&names)?);
            }
            d2u.push(row);
        }
        Ok(Self {
            u: expr.compile(&names)?,
            du: du_e.iter().map(|e| e.compile(&names)).collect::<std::result::Result<_, _>>()?,
            d2u,
        })
    }

    fn jet(&self, x: &[f64]) -> Result<PointJet<f64>> {
        let n = x.len();
        let u = self.u.eval(x)?;
        let du = self.du.iter().map(|c| c.eval(x)).collect::<std::result::Result<Vec<f64>, _>>()?;
        let mut d2 = Mat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = self.d2u[i][j].eval(x)?;
                d2[(i, j)] = v;
                d2[(j, i)] = v;
            }
        }
        Ok(PointJet::new(x.to_vec(), u, du, d2))
    }
}

/// Graph samples and pointwise geometry on one grid.
struct Level {
    gf: GridFunction<f64>,
    geo: NodeField<GeometryAtPoint<f64>>,
    /// Nodes whose statistics count.
    stat: Vec<bool>,
    analytic: bool,
}

impl Level {
    fn build(model: &Model, source: &GraphSource, grid: &Grid<f64>) -> Result<Self> {
        let gf = source.sample(grid)?;
        let grid = &gf.grid;
        if grid.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: grid.dim() });
        }
        let mut geo = vec![None; grid.len()];
        let with_node = |e: Error, k: usize| match e {
            Error::NotSpacelike { du2, f2, .. } => Error::NotSpacelike { du2, f2, node: Some(k) },
            e => e,
        };
        let analytic = matches!(source, GraphSource::Analytic { .. });
        match source {
            GraphSource::Analytic { expr, .. } => {
                let jc = JetCompiler::new(expr, grid.dim())?;
                for (k, slot) in geo.iter_mut().enumerate() {
                    let j = jc.jet(&grid.coords(k))?;
                    *slot = Some(geometry_at(&model.warping, &model.fiber, &j).map_err(|e| with_node(e, k))?);
                }
            }
            GraphSource::Sampled(_) => {
                for (k, slot) in geo.iter_mut().enumerate() {
                    if grid.margin(k) >= 1 {
                        let j = jet_at(&gf, k)?;
                        *slot = Some(geometry_at(&model.warping, &model.fiber, &j).map_err(|e| with_node(e, k))?);
                    }
                }
            }
        }
        let band = if analytic { 2 } else { 3 };
        let stat = (0..grid.len()).map(|k| grid.margin(k) >= band).collect();
        Ok(Self { gf, geo, stat, analytic })
    }

    fn grid(&self) -> &Grid<f64> {
        &self.gf.grid
    }

    fn scalar(&self, f: impl Fn(&GeometryAtPoint<f64>) -> f64) -> NodeField<f64> {
        self.geo.iter().map(|g| g.as_ref().map(&f)).collect()
    }

    fn metric(&self) -> NodeField<Mat<f64>> {
        self.geo.iter().map(|g| g.as_ref().map(|g| g.g_u.clone())).collect()
    }

    fn metric_inv(&self) -> NodeField<Mat<f64>> {
        self.geo.iter().map(|g| g.as_ref().map(|g| g.g_u_inv.clone())).collect()
    }

    fn height(&self) -> NodeField<f64> {
        self.scalar(|g| g.u)
    }

    /// Largest `|H|` over counted nodes: from exact jets for closed-form graphs,
    /// from the discrete operator (residual / n) for sampled ones.
    fn max_mean_curvature(&self, model: &Model) -> Result<f64> {
        if self.analytic {
            Ok(self
                .geo
                .iter()
                .zip(&self.stat)
                .filter(|(_, &s)| s)
                .filter_map(|(g, _)| g.as_ref())
                .fold(0.0, |m, g| m.max(g.h.abs())))
        } else {
            let r = solver::residual(model, &self.gf)?;
            Ok(r.values.iter().fold(0.0f64, |m, v| m.max(v.abs())) / model.dim() as f64)
        }
    }
}

/// Residual statistics of one identity on one grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub max_residual: f64,
    /// `max(1, max |lhs|, max |rhs|)`
    pub scale: f64,
    pub nodes: usize,
}

impl LevelResult {
    /// Below roundoff of the field scale: the identity holds exactly here.
    pub fn is_exact(&self) -> bool {
        self.max_residual <= 1e2 * f64::EPSILON * self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub description: String,
    pub graph: String,
    pub counts: Vec<usize>,
    pub bbox: Vec<(f64, f64)>,
    pub max_residual: f64,
    pub residual_half: Option<f64>,
    /// `log2` of the last residual ratio; absent when either residual is at roundoff.
    pub observed_order: Option<f64>,
    pub exact: bool,
    pub levels: Vec<LevelResult>,
}

#[derive(Default)]
struct Acc {
    max_res: f64,
    max_lhs: f64,
    max_rhs: f64,
    nodes: usize,
}

impl Acc {
    fn push(&mut self, lhs: f64, rhs: f64, res: f64) {
        self.max_res = self.max_res.max(res);
        self.max_lhs = self.max_lhs.max(lhs.abs());
        self.max_rhs = self.max_rhs.max(rhs.abs());
        self.nodes += 1;
    }

    fn finish(self, grid: &Grid<f64>) -> Result<LevelResult> {
        if self.nodes == 0 {
            return Err(Error::InvalidGrid("grid too small: no interior nodes left after the boundary band".into()));
        }
        Ok(LevelResult {
            counts: grid.counts().to_vec(),
            spacing: grid.spacing().to_vec(),
            max_residual: self.max_res,
            scale: 1f64.max(self.max_lhs).max(self.max_rhs),
            nodes: self.nodes,
        })
    }
}

fn norm_g(g: &Mat<f64>, v: &[f64]) -> f64 {
    g.quad(v).max(0.0).sqrt()
}

fn evaluate(model: &Model, lv: &Level, id: IdentityId, cbar: Option<f64>) -> Result<LevelResult> {
    let grid = lv.grid();
    let mut acc = Acc::default();
    let nodes = |acc: &mut Acc, f: &mut dyn FnMut(usize, &GeometryAtPoint<f64>) -> Option<(f64, f64, f64)>| {
        for k in 0..grid.len() {
            if !lv.stat[k] {
                continue;
            }
            if let Some(g) = lv.geo[k].as_ref() {
                if let Some((l, r, res)) = f(k, g) {
                    acc.push(l, r, res);
                }
            }
        }
    };
    match id {
        IdentityId::I1 => {
            let lap = laplace_beltrami(grid, &lv.height(), &lv.metric())?;
            nodes(&mut acc, &mut |k, g| {
                let l = lap[k]?;
                let r = rhs_delta_tau(g);
                Some((l, r, (l - r).abs()))
            });
        }
        IdentityId::I2 => {
            let grad = gradient(grid, &lv.scalar(|g| g.cosh_phi), &lv.metric_inv());
            nodes(&mut acc, &mut |k, g| {
                let l = grad[k].as_ref()?;
                let r = rhs_grad_cosh(g);
                let d: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a - b).collect();
                Some((norm_g(&g.g_u, l), norm_g(&g.g_u, &r), norm_g(&g.g_u, &d)))
            });
        }
        IdentityId::I3 => {
            let chr = metric_christoffel(grid, &lv.metric())?;
            let hess = covariant_hessian(grid, &lv.height(), &chr);
            let mut err = None;
            nodes(&mut acc, &mut |k, g| {
                let h = hess[k].as_ref()?;
                let l = tensor_norm2(h, &g.g_u_inv);
                let r = match rhs_hess_tau_norm2(g, Maximality::Relaxed) {
                    Ok(r) => r,
                    Err(e) => {
                        err = Some(e);
                        return None;
                    }
                };
                Some((l, r, (l - r).abs()))
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        IdentityId::I4 => {
            let lap = laplace_beltrami(grid, &lv.scalar(|g| g.sinh2_phi), &lv.metric())?;
            let mut err = None;
            nodes(&mut acc, &mut |k, g| {
                let l = lap[k]?;
                let r = (|| -> Result<f64> {
                    let ric_nf = model.fiber.ricci_quadratic(&g.x, &g.n_fiber)?;
                    let hess2 = rhs_hess_tau_norm2(g, Maximality::Relaxed)?;
                    let gc = rhs_grad_cosh(g);
                    rhs_delta_sinh2(g, ric_nf, hess2, g.norm2(&gc), Maximality::Relaxed)
                })();
                match r {
                    Ok(r) => Some((l, r, (l - r).abs())),
                    Err(e) => {
                        err = Some(e);
                        None
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        IdentityId::I5 => nodes(&mut acc, &mut |_, g| Some((g.h, g.h_divergence, (g.h - g.h_divergence).abs()))),
        IdentityId::I6 => nodes(&mut acc, &mut |_, g| {
            let gt = g.norm2(&g.grad_tau);
            let c = g.cosh_phi * g.cosh_phi - 1.0;
            Some((g.sinh2_phi, gt, (g.sinh2_phi - gt).abs().max((g.sinh2_phi - c).abs())))
        }),
        IdentityId::I7 => {
            let cbar = cbar.ok_or_else(|| {
                Error::NotApplicable("I7 needs a spacetime of constant sectional curvature cbar >= 0".into())
            })?;
            let metric = lv.metric();
            let chr = metric_christoffel(grid, &metric)?;
            let a_field: NodeField<Mat<f64>> = lv.geo.iter().map(|g| g.as_ref().map(|g| g.a_matrix.clone())).collect();
            let nab = mixed_tensor_gradient_norm2(grid, &a_field, &metric, &chr)?;
            let lap = laplace_beltrami(grid, &lv.scalar(|g| g.a_norm2), &metric)?;
            let mut err = None;
            nodes(&mut acc, &mut |k, g| {
                let l = 0.5 * lap[k]?;
                match simons_rhs(g, cbar, nab[k]?, Maximality::Relaxed) {
                    Ok(r) => Some((l, r, (l - r).abs())),
                    Err(e) => {
                        err = Some(e);
                        None
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        IdentityId::I8 => {
            let k_fiber = product_fiber_curvature(model)?;
            let chr = metric_christoffel(grid, &lv.metric())?;
            let ric = ricci_field(grid, &chr);
            nodes(&mut acc, &mut |k, g| {
                let rk = ric[k].as_ref()?;
                let frame = g.orthonormal_frame();
                let diag: Vec<f64> =
                    frame[0].iter().zip(&frame[1]).map(|(a, b)| (a + b) / std::f64::consts::SQRT_2).collect();
                let (mut lmax, mut rmax, mut res) = (0.0f64, 0.0f64, 0.0f64);
                for v in [&frame[0], &frame[1], &diag] {
                    let l = rk.quad(v);
                    // The closed form is written for curvature -1; the fiber term is linear in it.
                    let r = product_ricci_rhs(g, v) + (1.0 + k_fiber) * g.cosh_phi * g.cosh_phi * g.norm2(v);
                    lmax = lmax.max(l.abs());
                    rmax = rmax.max(r.abs());
                    res = res.max((l - r).abs());
                }
                Some((lmax, rmax, res))
            });
        }
        IdentityId::I9 => {
            let field = lv.scalar(|g| -g.f * g.cosh_phi);
            let grad = gradient(grid, &field, &lv.metric_inv());
            nodes(&mut acc, &mut |k, g| {
                let l = grad[k].as_ref()?;
                let r: Vec<f64> = g.apply_a(&g.k_top).iter().map(|v| -v).collect();
                let d: Vec<f64> = l.iter().zip(&r).map(|(a, b)| a - b).collect();
                Some((norm_g(&g.g_u, l), norm_g(&g.g_u, &r), norm_g(&g.g_u, &d)))
            });
        }
    }
    acc.finish(grid)
}

/// `g^{ia} g^{jb} h_ij h_ab`
fn tensor_norm2(h: &Mat<f64>, ginv: &Mat<f64>) -> f64 {
    let m = ginv.mul(h);
    let mt = m.mul(ginv).mul(h);
    mt.trace()
}

fn product_fiber_curvature(model: &Model) -> Result<f64> {
    if !model.warping.is_constant() {
        return Err(Error::NotApplicable("I8 needs a product spacetime (constant warping function)".into()));
    }
    if model.dim() != 2 {
        return Err(Error::NotApplicable("I8 needs a 2-dimensional fiber".into()));
    }
    model
        .fiber
        .curvature_constant()
        .ok_or_else(|| Error::NotApplicable("I8 needs a fiber of constant curvature".into()))
}

fn preconditions(model: &Model, id: IdentityId, lv: &Level) -> Result<Option<f64>> {
    if id == IdentityId::I8 {
        product_fiber_curvature(model)?;
    }
    let cbar = if id == IdentityId::I7 {
        Some(
            constant_curvature_check(model)
                .ok_or_else(|| {
                    Error::NotApplicable("I7 needs a spacetime of constant sectional curvature cbar >= 0".into())
                })?
                .cbar,
        )
    } else {
        None
    };
    if id.needs_maximal() {
        let h = lv.max_mean_curvature(model)?;
        if h > MAXIMALITY_GATE {
            return Err(Error::NotApplicable(format!(
                "{id} holds on maximal graphs only; max |H| = {h:.3e} exceeds {MAXIMALITY_GATE:e}"
            )));
        }
    }
    Ok(cbar)
}

fn observed_order(coarse: &LevelResult, fine: &LevelResult) -> Option<f64> {
    if coarse.is_exact() || fine.is_exact() {
        return None;
    }
    let ratio = coarse.spacing[0] / fine.spacing[0];
    Some((coarse.max_residual / fine.max_residual).ln() / ratio.ln())
}

/// Runs one identity on `grid` and `refine` successive refinements
/// (`n -> 2n - 1` nodes per axis). Sampled graphs cannot be refined.
pub fn run_identity(
    model: &Model,
    source: &GraphSource,
    grid: &Grid<f64>,
    id: IdentityId,
    refine: usize,
) -> Result<IdentityReport> {
    if refine > 0 && matches!(source, GraphSource::Sampled(_)) {
        return Err(Error::NotApplicable("sampled graphs cannot be refined".into()));
    }
    let mut g = match source {
        GraphSource::Sampled(gf) => gf.grid.clone(),
        _ => grid.clone(),
    };
    let mut levels = Vec::with_capacity(refine + 1);
    let mut coarse_stat: Vec<bool> = Vec::new();
    let coarse = g.clone();
    for i in 0..=refine {
        let mut lv = Level::build(model, source, &g)?;
        if i == 0 {
            coarse_stat = lv.stat.clone();
        } else {
            // Compare on the nodes shared with the coarsest grid.
            let step = 1usize << i;
            lv.stat = (0..g.len())
                .map(|k| {
                    let m = g.multi(k);
                    m.iter().all(|&j| j % step == 0)
                        && coarse_stat[coarse.index(&m.iter().map(|&j| j / step).collect::<Vec<_>>())]
                })
                .collect();
        }
        let cbar = preconditions(model, id, &lv)?;
        levels.push(evaluate(model, &lv, id, cbar)?);
        if i < refine {
            g = g.refined();
        }
    }
    let first = &levels[0];
    let (residual_half, observed) = if levels.len() >= 2 {
        let k = levels.len();
        (Some(levels[1].max_residual), observed_order(&levels[k - 2], &levels[k - 1]))
    } else {
        (None, None)
    };
    let base = match source {
        GraphSource::Sampled(gf) => gf.grid.clone(),
        _ => grid.clone(),
    };
    Ok(IdentityReport {
        id,
        description: id.description().into(),
        graph: source.label(),
        counts: base.counts().to_vec(),
        bbox: base.bbox(),
        max_residual: first.max_residual,
        residual_half,
        observed_order: observed,
        exact: levels.iter().all(LevelResult::is_exact),
        levels,
    })
}

/// Runs `ids` in order, stopping at the first identity whose preconditions fail.
pub fn run_suite(
    model: &Model,
    source: &GraphSource,
    grid: &Grid<f64>,
    ids: &[IdentityId],
    refine: usize,
) -> Result<Vec<IdentityReport>> {
    let mut ids = ids.to_vec();
    ids.sort();
    ids.dedup();
    ids.into_iter().map(|id| run_identity(model, source, grid, id, refine)).collect()
}
