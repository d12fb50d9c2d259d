//! Pointwise geometry of a spacelike graph `t = u(x)` and the closed-form
//! right-hand sides of the curvature identities.
//!
//! Tangent vectors of the graph are written in chart components: the chart
//! vector `X` stands for the ambient vector `du(X) d_t + X`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::Fiber;
use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;
use crate::warping::{WarpValues, Warping};

/// Mean curvature threshold for formulas that assume a maximal graph.
pub const MAXIMALITY_TOL: f64 = 1e-8;

/// Whether a maximality-gated formula refuses non-maximal input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Maximality {
    Enforce,
    /// Skip the check, for discrete iterates whose pointwise `H` is only
    /// small up to truncation error.
    Relaxed,
}

/// Height, gradient and Hessian of `u` at one chart point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointJet<T> {
    pub x: Vec<T>,
    pub u: T,
    pub du: Vec<T>,
    pub d2u: Mat<T>,
}

impl<T: Scalar> PointJet<T> {
    pub fn new(x: Vec<T>, u: T, du: Vec<T>, d2u: Mat<T>) -> Self {
        Self { x, u, du, d2u }
    }

    /// Jet of the slice `u = t0`.
    pub fn slice(x: Vec<T>, t0: T) -> Self {
        let n = x.len();
        Self { x, u: t0, du: vec![T::zero(); n], d2u: Mat::zeros(n) }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.du.iter().all(|v| v.is_finite()) && self.d2u.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryAtPoint<T> {
    pub n: usize,
    pub x: Vec<T>,
    pub u: T,
    /// `f(u)`, `f'(u)`, `f''(u)`.
    pub f: T,
    pub f1: T,
    pub f2: T,
    pub g_f: Mat<T>,
    pub g_u: Mat<T>,
    pub g_u_inv: Mat<T>,
    pub du: Vec<T>,
    /// `Du^i = g_F^{ij} du_j`
    pub du_vec: Vec<T>,
    pub du_norm2: T,
    pub w: T,
    pub cosh_phi: T,
    pub sinh2_phi: T,
    pub n_fiber: Vec<T>,
    /// Covariant fiber Hessian of `u`.
    pub fiber_hessian: Mat<T>,
    /// Shape operator `A^k_i`.
    pub a_matrix: Mat<T>,
    /// `-(1/n) tr A`
    pub h: T,
    /// `H` recomputed from the divergence form of the mean curvature.
    pub h_divergence: T,
    pub a_norm2: T,
    pub grad_tau: Vec<T>,
    pub dt_top: Vec<T>,
    pub k_top: Vec<T>,
}

impl<T: Scalar> GeometryAtPoint<T> {
    pub fn warp(&self) -> WarpValues<T> {
        WarpValues { f: self.f, f1: self.f1, f2: self.f2 }
    }

    pub fn fp_over_f(&self) -> T {
        self.f1 / self.f
    }

    pub fn log_f_second(&self) -> T {
        self.warp().log_f_second()
    }

    /// Induced inner product of chart vectors.
    pub fn inner(&self, a: &[T], b: &[T]) -> T {
        self.g_u.bilinear(a, b)
    }

    pub fn norm2(&self, v: &[T]) -> T {
        self.g_u.quad(v)
    }

    pub fn apply_a(&self, v: &[T]) -> Vec<T> {
        self.a_matrix.mul_vec(v)
    }

    /// `g(N, N)` in the ambient metric, `-1` for a unit timelike normal.
    pub fn normal_norm2(&self) -> T {
        -self.cosh_phi * self.cosh_phi + self.f * self.f * self.g_f.quad(&self.n_fiber)
    }

    fn check_maximal(&self, m: Maximality) -> Result<()> {
        if m == Maximality::Enforce && self.h.abs().as_f64() > MAXIMALITY_TOL {
            return Err(Error::NotMaximal { h: self.h.as_f64() });
        }
        Ok(())
    }

    /// Orthonormal frame of the induced metric, as chart vectors.
    pub fn orthonormal_frame(&self) -> Vec<Vec<T>> {
        let l = self.g_u.cholesky().expect("spacelike metric");
        let linv = l.inverse().expect("triangular factor");
        (0..self.n).map(|i| (0..self.n).map(|k| linv[(i, k)]).collect()).collect()
    }
}

fn not_spacelike<T: Scalar>(du2: T, f: T) -> Error {
    Error::NotSpacelike { du2: du2.as_f64(), f2: (f * f).as_f64(), node: None }
}

/// `g_u = -du du + f(u)^2 g_F`
pub fn induced_metric<T: Scalar>(w: &Warping, fiber: &Fiber, j: &PointJet<T>) -> Result<Mat<T>> {
    let f = w.f(j.u)?;
    let gf = fiber.metric_at(&j.x)?;
    let (_, du2) = fiber.fiber_gradient(&j.x, &j.du)?;
    if !(du2 < f * f) {
        return Err(not_spacelike(du2, f));
    }
    Ok(Mat::from_fn(fiber.dim(), |a, b| -j.du[a] * j.du[b] + f * f * gf[(a, b)]))
}

pub fn geometry_at<T: Scalar>(w: &Warping, fiber: &Fiber, j: &PointJet<T>) -> Result<GeometryAtPoint<T>> {
    let n = fiber.dim();
    if j.x.len() != n || j.du.len() != n || j.d2u.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j.du.len() });
    }
    let WarpValues { f, f1, f2 } = w.values(j.u)?;
    let sigma = fiber.sigma_jet(&j.x)?;
    let gamma = crate::fiber::christoffel_from_sigma(&sigma);
    let e = sigma.e;
    let g_f = Mat::scaled_identity(n, e);
    let g_f_inv = Mat::scaled_identity(n, T::one() / e);
    let du_vec = g_f_inv.mul_vec(&j.du);
    let du2 = dot(&du_vec, &j.du);
    let w2 = f * f - du2;
    if !(w2 > T::zero()) {
        return Err(not_spacelike(du2, f));
    }
    let wv = w2.sqrt();
    let nn = T::from_usize_lossy(n);

    let g_u = Mat::from_fn(n, |a, b| -j.du[a] * j.du[b] + f * f * g_f[(a, b)]);
    let g_u_inv = Mat::from_fn(n, |a, b| g_f_inv[(a, b)] / (f * f) + du_vec[a] * du_vec[b] / (f * f * w2));

    let hess = gamma.covariant_hessian(&j.du, &j.d2u);
    let m = g_f_inv.mul(&hess);
    let du_m: Vec<T> = (0..n).map(|i| (0..n).map(|k| j.du[k] * m[(k, i)]).sum()).collect();
    let q = f1 / f;
    let a_matrix = Mat::from_fn(n, |k, i| {
        let id = if k == i { q } else { T::zero() };
        let bracket =
            id - f1 / (f * w2) * du_vec[k] * j.du[i] + du_vec[k] * du_m[i] / (f * f * w2) + m[(k, i)] / (f * f);
        -(f / wv) * bracket
    });
    let h = -a_matrix.trace() / nn;
    let a_norm2 = a_matrix.mul(&a_matrix).trace();

    // Divergence form, differentiated directly in conformal coordinates.
    let s_e = dot(&j.du, &j.du);
    let two = T::lit(2.0);
    let fw = f * wv;
    let mut div = T::zero();
    for i in 0..n {
        let uu: T = (0..n).map(|k| j.du[k] * j.d2u[(k, i)]).sum();
        let d_w2 = two * f * f1 * j.du[i] - (two * uu - two * sigma.ds[i] * s_e) / e;
        let d_fw = f1 * j.du[i] * wv + f * d_w2 / (two * wv);
        div += (nn - two) * sigma.ds[i] * j.du[i] / fw + j.d2u[(i, i)] / fw - j.du[i] * d_fw / (fw * fw);
    }
    div /= e;
    let h_divergence = (div + f1 / wv * (nn + du2 / (f * f))) / nn;

    let cosh_phi = f / wv;
    let sinh2_phi = du2 / w2;
    let grad_tau: Vec<T> = du_vec.iter().map(|&v| v / w2).collect();
    let dt_top: Vec<T> = grad_tau.iter().map(|&v| -v).collect();
    let k_top: Vec<T> = dt_top.iter().map(|&v| f * v).collect();
    let n_fiber: Vec<T> = du_vec.iter().map(|&v| v / fw).collect();

    Ok(GeometryAtPoint {
        n,
        x: j.x.clone(),
        u: j.u,
        f,
        f1,
        f2,
        g_f,
        g_u,
        g_u_inv,
        du: j.du.clone(),
        du_vec,
        du_norm2: du2,
        w: wv,
        cosh_phi,
        sinh2_phi,
        n_fiber,
        fiber_hessian: hess,
        a_matrix,
        h,
        h_divergence,
        a_norm2,
        grad_tau,
        dt_top,
        k_top,
    })
}

/// `Delta tau = -(f'/f)(n + sinh^2 phi) + n H cosh phi`. The last term vanishes
/// on maximal graphs; keeping it lets non-maximal slices be checked too.
pub fn rhs_delta_tau<T: Scalar>(g: &GeometryAtPoint<T>) -> T {
    let nn = T::from_usize_lossy(g.n);
    -g.fp_over_f() * (nn + g.sinh2_phi) + nn * g.h * g.cosh_phi
}

/// `grad cosh phi = A dt^T + (f'/f) cosh phi dt^T`
pub fn rhs_grad_cosh<T: Scalar>(g: &GeometryAtPoint<T>) -> Vec<T> {
    let a = g.apply_a(&g.dt_top);
    let c = g.fp_over_f() * g.cosh_phi;
    a.iter().zip(&g.dt_top).map(|(&ai, &ti)| ai + c * ti).collect()
}

/// `|Hess tau|^2` for a maximal graph.
pub fn rhs_hess_tau_norm2<T: Scalar>(g: &GeometryAtPoint<T>, m: Maximality) -> Result<T> {
    g.check_maximal(m)?;
    let q = g.fp_over_f();
    let s = g.sinh2_phi;
    let nn = T::from_usize_lossy(g.n);
    let two = T::lit(2.0);
    let adt = g.apply_a(&g.dt_top);
    Ok(two * q * g.cosh_phi * g.inner(&adt, &g.dt_top)
        + g.cosh_phi * g.cosh_phi * g.a_norm2
        + q * q * (nn + two * s + s * s))
}

/// `Delta sinh^2 phi` for a maximal graph, given `Ric^F(N^F, N^F)`,
/// `|Hess tau|^2` and `|grad cosh phi|^2`.
pub fn rhs_delta_sinh2<T: Scalar>(
    g: &GeometryAtPoint<T>,
    ric_nf: T,
    hess2: T,
    grad_cosh2: T,
    m: Maximality,
) -> Result<T> {
    g.check_maximal(m)?;
    let two = T::lit(2.0);
    let one = T::one();
    let nn = T::from_usize_lossy(g.n);
    let l2 = g.log_f_second();
    let q = g.fp_over_f();
    let s = g.sinh2_phi;
    let c2 = g.cosh_phi * g.cosh_phi;
    Ok(two * c2 * (ric_nf - (nn - one) * l2 * s) + two * hess2 - two * l2 * (one + s) * s
        + two * q * q * (nn + s) * s
        + two * grad_cosh2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmbientRicci<T> {
    pub ric_tt: T,
    pub ric_nfnf: T,
    pub ric_dttop_n: T,
}

pub fn ambient_ricci<T: Scalar>(fiber: &Fiber, g: &GeometryAtPoint<T>) -> Result<AmbientRicci<T>> {
    let nn = T::from_usize_lossy(g.n);
    let one = T::one();
    let ric_f = fiber.ricci_quadratic(&g.x, &g.n_fiber)?;
    let q = g.fp_over_f();
    let f2f = g.f2 / g.f;
    Ok(AmbientRicci {
        ric_tt: -nn * f2f,
        ric_nfnf: ric_f + g.sinh2_phi * (f2f + (nn - one) * q * q),
        ric_dttop_n: -g.cosh_phi * (ric_f - (nn - one) * g.log_f_second() * g.sinh2_phi),
    })
}

/// `Ric^F(v,v) - (n-1) f(t)^2 (log f)''(t) g_F(v,v)`
pub fn ncc_quantity<T: Scalar>(w: &Warping, fiber: &Fiber, t: T, x: &[T], v: &[T]) -> Result<T> {
    let wv = w.values(t)?;
    let n1 = T::from_usize_lossy(fiber.dim()) - T::one();
    let ric = fiber.ricci_quadratic(x, v)?;
    let gv = fiber.norm2(x, v)?;
    Ok(ric - n1 * wv.f * wv.f * wv.log_f_second() * gv)
}

/// Ambient vector `a d_t + v` at a fiber point.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientVector<T> {
    pub a: T,
    pub v: Vec<T>,
}

/// `g(R(X,Y)Y, X)` of the warped product at height `t` over the fiber point `x`;
/// equals `c (g(X,X) g(Y,Y) - g(X,Y)^2)` on spaces of constant curvature `c`.
pub fn ambient_curvature_quadratic<T: Scalar>(
    w: &Warping,
    fiber: &Fiber,
    t: T,
    x: &[T],
    xv: &AmbientVector<T>,
    yv: &AmbientVector<T>,
) -> Result<T> {
    let WarpValues { f, f1, f2 } = w.values(t)?;
    ambient_curvature_with(fiber, WarpValues { f, f1, f2 }, x, xv, yv)
}

fn ambient_curvature_with<T: Scalar>(
    fiber: &Fiber,
    wv: WarpValues<T>,
    x: &[T],
    xv: &AmbientVector<T>,
    yv: &AmbientVector<T>,
) -> Result<T> {
    let WarpValues { f, f1, f2 } = wv;
    let gf = fiber.metric_at(x)?;
    let f_sq = f * f;
    let pxx = f_sq * gf.quad(&xv.v);
    let pyy = f_sq * gf.quad(&yv.v);
    let pxy = f_sq * gf.bilinear(&xv.v, &yv.v);
    let z: Vec<T> = xv.v.iter().zip(&yv.v).map(|(&vi, &wi)| xv.a * wi - yv.a * vi).collect();
    let zz = f_sq * gf.quad(&z);
    let rf = fiber.curvature_quadratic(x, &xv.v, &yv.v)?;
    Ok(f_sq * rf + (f1 * f1 / f_sq) * (pxx * pyy - pxy * pxy) - (f2 / f) * zz)
}

/// `Ric(v,v)` of the graph by the Gauss equation:
/// `sum_i g(R(v,E_i)E_i, v) + |Av|^2 - tr(A) g(Av, v)`.
pub fn graph_ricci_quadratic<T: Scalar>(fiber: &Fiber, g: &GeometryAtPoint<T>, v: &[T], m: Maximality) -> Result<T> {
    g.check_maximal(m)?;
    let lift = |c: &[T]| AmbientVector { a: dot(&g.du, c), v: c.to_vec() };
    let xv = lift(v);
    let mut sum = T::zero();
    for e in g.orthonormal_frame() {
        sum += ambient_curvature_with(fiber, g.warp(), &g.x, &xv, &lift(&e))?;
    }
    let av = g.apply_a(v);
    Ok(sum + g.norm2(&av) - g.a_matrix.trace() * g.inner(&av, v))
}

/// `-cosh^2 phi |v|^2 + |Av|^2`, the product-case value of `Ric(v,v)` over a
/// hyperbolic surface.
pub fn product_ricci_rhs<T: Scalar>(g: &GeometryAtPoint<T>, v: &[T]) -> T {
    let av = g.apply_a(v);
    -g.cosh_phi * g.cosh_phi * g.norm2(v) + g.norm2(&av)
}

/// `|grad A|^2 + (n cbar + |A|^2) |A|^2`
pub fn simons_rhs<T: Scalar>(g: &GeometryAtPoint<T>, cbar: T, nabla_a2: T, m: Maximality) -> Result<T> {
    g.check_maximal(m)?;
    Ok(nabla_a2 + (T::from_usize_lossy(g.n) * cbar + g.a_norm2) * g.a_norm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warping::Interval;

    fn minkowski() -> (Warping, Fiber) {
        (Warping::new("1", Interval::real_line()).unwrap(), Fiber::euclidean(2))
    }

    fn desitter() -> (Warping, Fiber) {
        (Warping::new("cosh(t)", Interval::real_line()).unwrap(), Fiber::sphere(2))
    }

    fn h2log_jet(x: f64, y: f64) -> PointJet<f64> {
        let r2 = x * x + y * y;
        let p = [x, y];
        PointJet::new(
            p.to_vec(),
            r2.ln() / 3.0,
            p.iter().map(|c| 2.0 * c / (3.0 * r2)).collect(),
            Mat::from_fn(2, |i, j| {
                let d = if i == j { 1.0 / r2 } else { 0.0 };
                2.0 / 3.0 * (d - 2.0 * p[i] * p[j] / (r2 * r2))
            }),
        )
    }

    fn affine(du: [f64; 2]) -> PointJet<f64> {
        PointJet::new(vec![0.3, 0.1], 0.2, du.to_vec(), Mat::zeros(2))
    }

    #[test]
    fn induced_metric_examples() {
        let (w, f) = minkowski();
        let g = induced_metric(&w, &f, &affine([0.5, 0.0])).unwrap();
        assert_eq!(g.as_slice(), &[0.75, 0.0, 0.0, 1.0]);
        assert!(matches!(induced_metric(&w, &f, &affine([1.5, 0.0])), Err(Error::NotSpacelike { .. })));
        let (w, f) = desitter();
        let g = induced_metric(&w, &f, &PointJet::slice(vec![0.0, 0.0], 0.0)).unwrap();
        assert_eq!(g, Mat::scaled_identity(2, 4.0));
    }

    #[test]
    fn affine_minkowski_graph_is_totally_geodesic() {
        let (w, f) = minkowski();
        let g = geometry_at(&w, &f, &affine([0.5, 0.0])).unwrap();
        assert!((g.cosh_phi - 1.0 / 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.h, 0.0);
        assert_eq!(g.a_matrix.max_abs(), 0.0);
        assert_eq!(rhs_delta_tau(&g), 0.0);
        assert_eq!(rhs_grad_cosh(&g), vec![0.0, 0.0]);
        assert_eq!(rhs_hess_tau_norm2(&g, Maximality::Enforce).unwrap(), 0.0);
        let amb = ambient_ricci(&f, &g).unwrap();
        assert_eq!((amb.ric_tt, amb.ric_nfnf, amb.ric_dttop_n), (0.0, 0.0, 0.0));
        assert_eq!(rhs_delta_sinh2(&g, 0.0, 0.0, 0.0, Maximality::Enforce).unwrap(), 0.0);
        for v in [[1.0, 0.0], [0.3, -0.7]] {
            assert_eq!(graph_ricci_quadratic(&f, &g, &v, Maximality::Enforce).unwrap(), 0.0);
        }
        assert_eq!(simons_rhs(&g, 0.0, 0.0, Maximality::Enforce).unwrap(), 0.0);
    }

    #[test]
    fn desitter_slices() {
        let (w, f) = desitter();
        let g = geometry_at(&w, &f, &PointJet::slice(vec![0.0, 0.0], 0.0)).unwrap();
        assert_eq!((g.h, g.cosh_phi, g.a_matrix.max_abs()), (0.0, 1.0, 0.0));
        assert_eq!(rhs_hess_tau_norm2(&g, Maximality::Enforce).unwrap(), 0.0);
        assert_eq!(rhs_grad_cosh(&g), vec![0.0, 0.0]);
        assert_eq!(simons_rhs(&g, 1.0, 0.0, Maximality::Enforce).unwrap(), 0.0);
        assert_eq!(ambient_ricci(&f, &g).unwrap().ric_tt, -2.0);
        for e in g.orthonormal_frame() {
            let r: f64 = graph_ricci_quadratic(&f, &g, &e, Maximality::Enforce).unwrap();
            assert!((r - 1.0).abs() < 1e-14);
        }

        let g = geometry_at(&w, &f, &PointJet::slice(vec![0.4, -0.2], 1.0)).unwrap();
        let t1 = 1.0f64.tanh();
        assert!((g.h - t1).abs() < 1e-15);
        assert!(g.a_matrix.sub(&Mat::scaled_identity(2, -t1)).max_abs() < 1e-15);
        assert_eq!(rhs_delta_tau(&g), 0.0);
        assert!(matches!(rhs_hess_tau_norm2(&g, Maximality::Enforce), Err(Error::NotMaximal { .. })));
        assert!(rhs_hess_tau_norm2(&g, Maximality::Relaxed).is_ok());
    }

    #[test]
    fn h2_log_graph_at_unit_point() {
        let w = Warping::new("1", Interval::real_line()).unwrap();
        let f = Fiber::half_plane(2);
        let g = geometry_at(&w, &f, &h2log_jet(0.0, 1.0)).unwrap();
        assert!((g.du_norm2 - 4.0 / 9.0).abs() < 1e-15);
        assert!((g.cosh_phi - 3.0 / 5f64.sqrt()).abs() < 1e-14);
        assert!(g.h.abs() < 1e-15);
        assert!(g.h_divergence.abs() < 1e-15);
        assert_eq!(rhs_delta_tau(&g), 0.0);
        // |Du| peaks along x1 = 0, so the angle gradient vanishes there
        assert!(rhs_grad_cosh(&g).iter().all(|c| c.abs() < 1e-15));
        let off = geometry_at(&w, &f, &h2log_jet(0.5, 1.0)).unwrap();
        assert!(rhs_grad_cosh(&off).iter().any(|c| c.abs() > 1e-3));
        let hess2 = rhs_hess_tau_norm2(&g, Maximality::Enforce).unwrap();
        assert!((hess2 - 9.0 / 5.0 * g.a_norm2).abs() < 1e-14);
        for e in g.orthonormal_frame() {
            let r = graph_ricci_quadratic(&f, &g, &e, Maximality::Enforce).unwrap();
            assert!(r >= -9.0 / 5.0 - 1e-12);
            assert!((r - product_ricci_rhs(&g, &e)).abs() < 1e-12);
        }
    }

    #[test]
    fn h2_log_graph_is_maximal_everywhere() {
        let w = Warping::new("1", Interval::real_line()).unwrap();
        let f = Fiber::half_plane(2);
        for i in 0..40 {
            for k in 0..40 {
                let (x, y) = (-1.0 + 2.0 * i as f64 / 39.0, 0.5 + 2.0 * k as f64 / 39.0);
                let g = geometry_at(&w, &f, &h2log_jet(x, y)).unwrap();
                assert!(g.h.abs() < 1e-13 && g.h_divergence.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn ncc_cancellations() {
        let ads = Warping::new("cos(t)", Interval::new(-1.5707963, 1.5707963).unwrap()).unwrap();
        let q: f64 = ncc_quantity(&ads, &Fiber::half_plane(2), 0.7, &[0.1, 1.3], &[0.4, -1.0]).unwrap();
        assert!(q.abs() < 1e-12);
        let (w, f) = desitter();
        let q: f64 = ncc_quantity(&w, &f, -1.2, &[0.3, 0.3], &[1.0, 2.0]).unwrap();
        assert!(q.abs() < 1e-12);
        let ss = Warping::new("exp(t)", Interval::real_line()).unwrap();
        assert_eq!(ncc_quantity(&ss, &Fiber::euclidean(2), 2.0, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn ambient_ricci_examples() {
        let ss = Warping::new("exp(t)", Interval::real_line()).unwrap();
        let f = Fiber::euclidean(2);
        let g: GeometryAtPoint<f64> = geometry_at(&ss, &f, &PointJet::slice(vec![0.0, 0.0], 0.3)).unwrap();
        assert!((ambient_ricci(&f, &g).unwrap().ric_tt + 2.0).abs() < 1e-14);
    }

    /// Warped products of constant curvature `c`: de Sitter (1), anti-de Sitter
    /// (-1), Minkowski and the Milne wedge (0).
    #[test]
    fn ambient_curvature_on_space_forms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cases = [
            ("cosh(t)", Interval::real_line(), Fiber::sphere(3), 1.0),
            ("cos(t)", Interval::new(-1.5, 1.5).unwrap(), Fiber::half_plane(3), -1.0),
            ("cos(t)", Interval::new(-1.5, 1.5).unwrap(), Fiber::ball(2), -1.0),
            ("1", Interval::real_line(), Fiber::euclidean(3), 0.0),
            ("t", Interval::new(0.0, f64::INFINITY).unwrap(), Fiber::half_plane(2), 0.0),
        ];
        for (src, iv, fiber, c) in cases {
            let w = Warping::new(src, iv).unwrap();
            let n = fiber.dim();
            for _ in 0..200 {
                let t: f64 =
                    if iv.lo.is_finite() && iv.lo == 0.0 { rng.gen_range(0.2..3.0) } else { rng.gen_range(-1.4..1.4) };
                let x: Vec<f64> = fiber.sample_box().iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
                let mut vec = || AmbientVector {
                    a: rng.gen_range(-1.0..1.0),
                    v: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                };
                let (xv, yv) = (vec(), vec());
                let fv: f64 = w.f(t).unwrap();
                let gf = fiber.metric_at(&x).unwrap();
                let ip =
                    |p: &AmbientVector<f64>, q: &AmbientVector<f64>| -p.a * q.a + fv * fv * gf.bilinear(&p.v, &q.v);
                let expect = c * (ip(&xv, &xv) * ip(&yv, &yv) - ip(&xv, &yv).powi(2));
                let got = ambient_curvature_quadratic(&w, &fiber, t, &x, &xv, &yv).unwrap();
                let scale = ip(&xv, &xv).abs().max(1.0) * ip(&yv, &yv).abs().max(1.0);
                assert!((got - expect).abs() < 1e-10 * scale, "{src}: {got} vs {expect}");
            }
        }
    }
}
