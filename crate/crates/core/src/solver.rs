//! Damped Newton solver for the maximal-graph equation with Dirichlet data
//! under the gradient constraint `|Du| <= lambda f(u)`.
//!
//! The operator is assembled in flux form: with `e` the conformal factor of
//! the fiber and `n` its dimension, the face flux along axis `a` is
//! `e^(n/2-1) d_a u / (f W)` and the divergence is scaled by `e^(-n/2)`.

use serde::Serialize;

use crate::discrete::{Grid, GridFunction};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::model::Model;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    pub lambda_max: T,
    pub tol: T,
    pub max_iter: usize,
    pub damping_min: T,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self { lambda_max: T::lit(0.9), tol: T::lit(1e-8), max_iter: 100, damping_min: T::lit(0.5f64.powi(20)) }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_max > T::zero() && self.lambda_max < T::one()) {
            return Err(Error::InvalidGrid(format!("lambda_max must lie in (0,1), got {}", self.lambda_max)));
        }
        if !(self.tol > T::zero()) || !(self.damping_min > T::zero()) {
            return Err(Error::InvalidGrid("tol and damping_min must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport<T> {
    pub iterations: usize,
    pub final_residual: T,
    pub constraint_margin: T,
    pub converged: bool,
    pub residual_history: Vec<T>,
}

struct Operator<'a, T> {
    model: &'a Model,
    grid: &'a Grid<T>,
    n: T,
    interior: Vec<usize>,
    node_e: Vec<T>,
    node_scale: Vec<T>,
    /// Per axis: lower nodes of the faces that touch an interior node.
    faces: Vec<Vec<usize>>,
    face_scale: Vec<Vec<T>>,
    face_e: Vec<Vec<T>>,
}

impl<'a, T: Scalar> Operator<'a, T> {
    fn new(model: &'a Model, grid: &'a Grid<T>) -> Result<Self> {
        let d = grid.dim();
        if d != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: d });
        }
        let n = T::from_usize_lossy(d);
        let half_n = n / T::lit(2.0);
        let fiber = &model.fiber;
        let interior: Vec<usize> = (0..grid.len()).filter(|&k| grid.margin(k) >= 1).collect();
        let mut node_e = vec![T::one(); grid.len()];
        let mut node_scale = vec![T::one(); grid.len()];
        for &k in &interior {
            let e = fiber.conformal_factor(&grid.coords(k))?;
            node_e[k] = e;
            node_scale[k] = e.powf(-half_n);
        }
        let mut faces = Vec::with_capacity(d);
        let mut face_scale = Vec::with_capacity(d);
        let mut face_e = Vec::with_capacity(d);
        for a in 0..d {
            let mut fa = Vec::new();
            let mut sa = vec![T::zero(); grid.len()];
            let mut ea = vec![T::one(); grid.len()];
            for k in 0..grid.len() {
                let m = grid.multi(k);
                let ok =
                    m[a] + 1 < grid.counts()[a] && (0..d).all(|b| b == a || (m[b] >= 1 && m[b] + 1 < grid.counts()[b]));
                if !ok {
                    continue;
                }
                let mut x = grid.coords(k);
                x[a] += grid.spacing()[a] / T::lit(2.0);
                let e = fiber.conformal_factor(&x)?;
                sa[k] = e.powf(half_n - T::one());
                ea[k] = e;
                fa.push(k);
            }
            faces.push(fa);
            face_scale.push(sa);
            face_e.push(ea);
        }
        Ok(Self { model, grid, n, interior, node_e, node_scale, faces, face_scale, face_e })
    }

    fn central(&self, u: &[T], k: usize, b: usize) -> T {
        let s = self.grid.strides()[b];
        (u[k + s] - u[k - s]) / (T::lit(2.0) * self.grid.spacing()[b])
    }

    fn not_spacelike(du2: T, f2: T, node: usize) -> Error {
        Error::NotSpacelike { du2: du2.as_f64(), f2: f2.as_f64(), node: Some(node) }
    }

    /// Residual at every interior node (zero elsewhere).
    fn residual(&self, u: &[T]) -> Result<Vec<T>> {
        let grid = self.grid;
        let d = grid.dim();
        let w = &self.model.warping;
        let h = grid.spacing();
        let strides = grid.strides();
        let half = T::lit(0.5);
        let mut out = vec![T::zero(); grid.len()];
        for a in 0..d {
            let sa = strides[a];
            let mut flux = vec![T::zero(); grid.len()];
            for &k in &self.faces[a] {
                let kp = k + sa;
                let mut s = T::zero();
                let da = (u[kp] - u[k]) / h[a];
                s += da * da;
                for b in 0..d {
                    if b != a {
                        let c = half * (self.central(u, k, b) + self.central(u, kp, b));
                        s += c * c;
                    }
                }
                let f = w.f(half * (u[k] + u[kp]))?;
                let e = self.face_e[a][k];
                let du2 = s / e;
                let w2 = f * f - du2;
                if !(w2 > T::zero()) {
                    return Err(Self::not_spacelike(du2, f * f, if grid.margin(k) >= 1 { k } else { kp }));
                }
                flux[k] = self.face_scale[a][k] * da / (f * w2.sqrt());
            }
            for &k in &self.interior {
                out[k] += self.node_scale[k] * (flux[k] - flux[k - sa]) / h[a];
            }
        }
        for &k in &self.interior {
            let s = (0..d).map(|b| self.central(u, k, b).powi(2)).sum::<T>();
            let v = w.values(u[k])?;
            let du2 = s / self.node_e[k];
            let w2 = v.f * v.f - du2;
            if !(w2 > T::zero()) {
                return Err(Self::not_spacelike(du2, v.f * v.f, k));
            }
            out[k] += v.f1 / w2.sqrt() * (self.n + du2 / (v.f * v.f));
        }
        Ok(out)
    }

    /// `min(lambda f(u) - |Du|)` over interior nodes; `None` if `u` leaves the interval.
    fn margin(&self, u: &[T], lambda: T) -> Option<T> {
        let d = self.grid.dim();
        let mut m = T::infinity();
        for &k in &self.interior {
            let f = self.model.warping.f(u[k]).ok()?;
            let s = (0..d).map(|b| self.central(u, k, b).powi(2)).sum::<T>();
            m = m.min(lambda * f - (s / self.node_e[k]).sqrt());
        }
        Some(m)
    }
}

fn sup_norm<T: Scalar>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn l2_norm<T: Scalar>(r: &[T]) -> T {
    r.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

/// Interior residual of the maximal-graph operator; boundary nodes hold zero.
pub fn residual<T: Scalar>(model: &Model, gf: &GridFunction<T>) -> Result<GridFunction<T>> {
    let op = Operator::new(model, &gf.grid)?;
    let r = op.residual(&gf.values)?;
    GridFunction::new(gf.grid.clone(), r)
}

/// `min(lambda f(u) - |Du|)` over interior nodes.
pub fn constraint_margin<T: Scalar>(model: &Model, gf: &GridFunction<T>, lambda: T) -> Result<T> {
    let op = Operator::new(model, &gf.grid)?;
    op.margin(&gf.values, lambda).ok_or_else(|| Error::NotApplicable("values leave the interval".into()))
}

/// Discrete harmonic extension of the boundary values (SOR).
fn harmonic_extension<T: Scalar>(boundary: &GridFunction<T>) -> Vec<T> {
    let grid = &boundary.grid;
    let d = grid.dim();
    let interior: Vec<usize> = (0..grid.len()).filter(|&k| grid.margin(k) >= 1).collect();
    let bnodes: Vec<usize> = (0..grid.len()).filter(|&k| grid.margin(k) == 0).collect();
    let mean = bnodes.iter().map(|&k| boundary.values[k]).sum::<T>() / T::from_usize_lossy(bnodes.len());
    let mut u = boundary.values.clone();
    for &k in &interior {
        u[k] = mean;
    }
    let wts: Vec<T> = grid.spacing().iter().map(|&h| T::one() / (h * h)).collect();
    let diag: T = wts.iter().copied().sum::<T>() * T::lit(2.0);
    let nmax = grid.counts().iter().copied().max().unwrap_or(5);
    let omega = T::lit(2.0 / (1.0 + (std::f64::consts::PI / (nmax - 1) as f64).sin()));
    let scale = T::one() + sup_norm(&boundary.values);
    let stop = scale * T::epsilon().sqrt() * T::epsilon().sqrt().sqrt();
    for _ in 0..50 * nmax * nmax {
        let mut change = T::zero();
        for &k in &interior {
            let mut s = T::zero();
            for a in 0..d {
                let st = grid.strides()[a];
                s += wts[a] * (u[k + st] + u[k - st]);
            }
            let du = omega * (s / diag - u[k]);
            u[k] += du;
            change = change.max(du.abs());
        }
        if change <= stop {
            break;
        }
    }
    u
}

fn clip_into_interval<T: Scalar>(model: &Model, grid: &Grid<T>, u: &mut [T]) {
    let iv = model.warping.interval();
    let inset = if iv.is_bounded() { 1e-6 * (iv.hi - iv.lo) } else { 1e-6 };
    for k in (0..grid.len()).filter(|&k| grid.margin(k) >= 1) {
        let v = u[k].as_f64();
        let c = v.clamp(iv.lo + inset, iv.hi - inset);
        if c != v {
            u[k] = T::lit(c);
        }
    }
}

/// Harmonic interpolation of the boundary values, clipped into the interval.
pub fn harmonic_guess<T: Scalar>(model: &Model, boundary: &GridFunction<T>) -> GridFunction<T> {
    let mut u = harmonic_extension(boundary);
    clip_into_interval(model, &boundary.grid, &mut u);
    GridFunction { grid: boundary.grid.clone(), values: u }
}

/// Damped Newton from `initial` (or the harmonic guess). Boundary values
/// are taken from `boundary`; its interior values are ignored.
pub fn solve<T: Scalar>(
    model: &Model,
    boundary: &GridFunction<T>,
    cfg: &SolverConfig<T>,
    initial: Option<&GridFunction<T>>,
) -> Result<(GridFunction<T>, SolveReport<T>)> {
    cfg.validate()?;
    let grid = &boundary.grid;
    let op = Operator::new(model, grid)?;
    let mut u = match initial {
        Some(g) => {
            if g.grid != *grid {
                return Err(Error::InvalidGrid("initial guess lives on a different grid".into()));
            }
            let mut v = g.values.clone();
            for k in (0..grid.len()).filter(|&k| grid.margin(k) == 0) {
                v[k] = boundary.values[k];
            }
            v
        }
        None => harmonic_guess(model, boundary).values,
    };
    let lambda = cfg.lambda_max;
    if !matches!(op.margin(&u, lambda), Some(m) if m > T::zero()) {
        return Err(Error::SpacelikeViolation { iterations: 0 });
    }
    let mut r = op.residual(&u).map_err(|_| Error::SpacelikeViolation { iterations: 0 })?;
    let mut history = vec![sup_norm(&r)];

    let index = unknown_index(grid, &op.interior);
    let inner_counts: Vec<usize> = grid.counts().iter().map(|c| c - 2).collect();
    let mut band = 0;
    let mut s = 1;
    for c in &inner_counts {
        band += s;
        s *= c;
    }
    let footprint = footprint(grid);
    let colors = 3usize.pow(grid.dim() as u32);
    let color_of = |k: usize| -> usize {
        let m = grid.multi(k);
        m.iter().rev().fold(0, |acc, &i| acc * 3 + i % 3)
    };
    let sqrt_eps = T::epsilon().sqrt();

    let mut iterations = 0;
    loop {
        let res = sup_norm(&r);
        if res <= cfg.tol {
            let margin = op.margin(&u, lambda).unwrap_or(T::neg_infinity());
            let report = SolveReport {
                iterations,
                final_residual: res,
                constraint_margin: margin,
                converged: margin > T::zero(),
                residual_history: history,
            };
            return Ok((GridFunction { grid: grid.clone(), values: u }, report));
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NoConvergence { iterations, residual: res.as_f64() });
        }
        iterations += 1;

        let mut jac = BandedMatrix::zeros(op.interior.len(), band, band);
        for c in 0..colors {
            let cols: Vec<usize> = op.interior.iter().copied().filter(|&k| color_of(k) == c).collect();
            if cols.is_empty() {
                continue;
            }
            let mut up = u.clone();
            let deltas: Vec<T> = cols.iter().map(|&k| sqrt_eps * T::one().max(u[k].abs())).collect();
            for (&k, &dk) in cols.iter().zip(&deltas) {
                up[k] += dk;
            }
            let rp = op.residual(&up).map_err(|_| Error::NoConvergence { iterations, residual: res.as_f64() })?;
            for (&k, &dk) in cols.iter().zip(&deltas) {
                let col = index[k];
                for &off in &footprint {
                    let q = (k as isize + off) as usize;
                    if let Some(row) = index.get(q).copied().filter(|&i| i != usize::MAX) {
                        if grid.margin(q) >= 1 && within_one(grid, k, q) {
                            jac.set(row, col, (rp[q] - r[q]) / dk);
                        }
                    }
                }
            }
        }
        let lu = jac.factorize().map_err(|_| Error::NoConvergence { iterations, residual: res.as_f64() })?;
        let rhs: Vec<T> = op.interior.iter().map(|&k| -r[k]).collect();
        let step = lu.solve(&rhs);

        let base = l2_norm(&r);
        let mut alpha = T::one();
        let mut saw_feasible = false;
        loop {
            let mut trial = u.clone();
            for (i, &k) in op.interior.iter().enumerate() {
                trial[k] += alpha * step[i];
            }
            let feasible = matches!(op.margin(&trial, lambda), Some(m) if m > T::zero());
            if feasible {
                saw_feasible = true;
                if let Ok(rt) = op.residual(&trial) {
                    if l2_norm(&rt) < base {
                        u = trial;
                        r = rt;
                        break;
                    }
                }
            }
            alpha = alpha / T::lit(2.0);
            if alpha < cfg.damping_min {
                return Err(if saw_feasible {
                    Error::NoConvergence { iterations, residual: res.as_f64() }
                } else {
                    Error::SpacelikeViolation { iterations }
                });
            }
        }
        history.push(sup_norm(&r));
    }
}

fn unknown_index<T: Scalar>(grid: &Grid<T>, interior: &[usize]) -> Vec<usize> {
    let mut idx = vec![usize::MAX; grid.len()];
    for (i, &k) in interior.iter().enumerate() {
        idx[k] = i;
    }
    idx
}

/// Linear offsets of the `{-1,0,1}^d` neighbourhood.
fn footprint<T: Scalar>(grid: &Grid<T>) -> Vec<isize> {
    let mut offs = vec![0isize];
    for &s in grid.strides() {
        offs = offs.iter().flat_map(|&o| [o - s as isize, o, o + s as isize]).collect();
    }
    offs
}

fn within_one<T: Scalar>(grid: &Grid<T>, a: usize, b: usize) -> bool {
    grid.multi(a).iter().zip(grid.multi(b)).all(|(&i, j)| i.abs_diff(j) <= 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepStep<T> {
    pub s: f64,
    pub solution: GridFunction<T>,
    pub report: SolveReport<T>,
}

#[derive(Debug)]
pub struct SweepFailure {
    pub s: f64,
    pub error: Error,
}

#[derive(Debug)]
pub struct SweepReport<T> {
    pub steps: Vec<SweepStep<T>>,
    pub failure: Option<SweepFailure>,
}

impl<T> SweepReport<T> {
    pub fn first_failing_s(&self) -> Option<f64> {
        self.failure.as_ref().map(|f| f.s)
    }
}

/// Previous solution plus the harmonic extension of the boundary increment.
fn warm_start<T: Scalar>(model: &Model, prev: &GridFunction<T>, bc: &GridFunction<T>) -> GridFunction<T> {
    let diff: Vec<T> = bc.values.iter().zip(&prev.values).map(|(a, b)| *a - *b).collect();
    let ext = harmonic_extension(&GridFunction { grid: bc.grid.clone(), values: diff });
    let mut u: Vec<T> = prev.values.iter().zip(&ext).map(|(a, b)| *a + *b).collect();
    clip_into_interval(model, &bc.grid, &mut u);
    GridFunction { grid: bc.grid.clone(), values: u }
}

/// Solves along `s = 0, 0.1, ..., 1`, warm-starting each step from the previous
/// solution, and stops at the first failure.
pub fn continuation_sweep<T: Scalar>(
    model: &Model,
    mut family: impl FnMut(f64) -> Result<GridFunction<T>>,
    cfg: &SolverConfig<T>,
) -> SweepReport<T> {
    let mut steps: Vec<SweepStep<T>> = Vec::new();
    for i in 0..=10 {
        let s = i as f64 / 10.0;
        let outcome = family(s).and_then(|bc| {
            let initial = steps.last().map(|prev| warm_start(model, &prev.solution, &bc));
            solve(model, &bc, cfg, initial.as_ref())
        });
        match outcome {
            Ok((solution, report)) => steps.push(SweepStep { s, solution, report }),
            Err(error) => return SweepReport { steps, failure: Some(SweepFailure { s, error }) },
        }
    }
    SweepReport { steps, failure: None }
}
