//! Riemannian fibers given in a single conformally flat chart, `g_F = e(x) * I`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum FiberKind {
    Euclidean,
    /// Unit sphere in stereographic coordinates, `e = 4/(1+|x|^2)^2`.
    Sphere,
    /// Upper half-space `{x_n > 0}`, `e = 1/x_n^2`.
    HyperbolicHalfPlane,
    /// Poincare ball, `e = 4/(1-|x|^2)^2`.
    HyperbolicBall,
    /// User factor `e(x1, .., xn)`.
    Conformal(Expr),
}

impl FiberKind {
    pub fn name(&self) -> String {
        match self {
            FiberKind::Euclidean => "euclidean".into(),
            FiberKind::Sphere => "sphere".into(),
            FiberKind::HyperbolicHalfPlane => "hyperbolic-halfplane".into(),
            FiberKind::HyperbolicBall => "hyperbolic-ball".into(),
            FiberKind::Conformal(e) => format!("conformal:{e}"),
        }
    }

    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "euclidean" => FiberKind::Euclidean,
            "sphere" | "sphere-stereographic" => FiberKind::Sphere,
            "hyperbolic" | "hyperbolic-halfplane" => FiberKind::HyperbolicHalfPlane,
            "hyperbolic-ball" => FiberKind::HyperbolicBall,
            _ => match s.strip_prefix("conformal:") {
                Some(src) => {
                    let names = coord_names(n);
                    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                    FiberKind::Conformal(Expr::parse_in(src, &refs)?)
                }
                None => return Err(Error::Format(format!("unknown fiber kind `{s}`"))),
            },
        })
    }
}

pub fn coord_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// `sigma = log(e)/2` with its coordinate gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaJet<T> {
    pub e: T,
    pub ds: Vec<T>,
    pub d2s: Mat<T>,
}

/// Christoffel symbols `Gamma^k_{ij}`, stored `[k][i][j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Christoffel<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Christoffel<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n * n] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    /// Covariant Hessian `d2u_ij - Gamma^k_ij du_k`.
    pub fn covariant_hessian(&self, du: &[T], d2u: &Mat<T>) -> Mat<T> {
        Mat::from_fn(self.n, |i, j| {
            let mut s = d2u[(i, j)];
            for k in 0..self.n {
                s -= self.get(k, i, j) * du[k];
            }
            s
        })
    }
}

#[derive(Debug, Clone)]
pub struct Fiber {
    n: usize,
    kind: FiberKind,
    bbox: Option<Vec<(f64, f64)>>,
    fd_step: f64,
    factor: Option<Compiled>,
}

impl PartialEq for Fiber {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.kind == other.kind && self.bbox == other.bbox
    }
}

impl Fiber {
    pub fn new(n: usize, kind: FiberKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: n });
        }
        let factor = match &kind {
            FiberKind::Conformal(e) => {
                let names = coord_names(n);
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                Some(e.compile(&refs)?)
            }
            _ => None,
        };
        Ok(Self { n, kind, bbox: None, fd_step: 1e-4, factor })
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(n, FiberKind::Euclidean).expect("n >= 2")
    }

    pub fn sphere(n: usize) -> Self {
        Self::new(n, FiberKind::Sphere).expect("n >= 2")
    }

    pub fn half_plane(n: usize) -> Self {
        Self::new(n, FiberKind::HyperbolicHalfPlane).expect("n >= 2")
    }

    pub fn ball(n: usize) -> Self {
        Self::new(n, FiberKind::HyperbolicBall).expect("n >= 2")
    }

    /// Restricts the chart to a coordinate box; the finite-difference step of
    /// a conformal factor becomes `1e-4` times the largest box side.
    pub fn with_box(mut self, bbox: Vec<(f64, f64)>) -> Result<Self> {
        if bbox.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: bbox.len() });
        }
        let extent = bbox.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        if !(extent > 0.0) {
            return Err(Error::InvalidGrid("empty chart box".into()));
        }
        self.fd_step = 1e-4 * extent;
        self.bbox = Some(bbox);
        Ok(self)
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &FiberKind {
        &self.kind
    }

    pub fn bbox(&self) -> Option<&[(f64, f64)]> {
        self.bbox.as_deref()
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Sectional curvature of the builtin kinds.
    pub fn curvature_constant(&self) -> Option<f64> {
        match self.kind {
            FiberKind::Euclidean => Some(0.0),
            FiberKind::Sphere => Some(1.0),
            FiberKind::HyperbolicHalfPlane | FiberKind::HyperbolicBall => Some(-1.0),
            FiberKind::Conformal(_) => None,
        }
    }

    /// A box inside the chart domain used for random sampling.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        if let Some(b) = &self.bbox {
            return b.clone();
        }
        let mut b = vec![(-1.0, 1.0); self.n];
        match self.kind {
            FiberKind::HyperbolicHalfPlane => b[self.n - 1] = (0.5, 2.0),
            FiberKind::HyperbolicBall => b = vec![(-0.5, 0.5); self.n],
            _ => {}
        }
        b
    }

    pub fn check_point<T: Scalar>(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let out = || Error::OutOfChart { point: x.iter().map(|v| v.as_f64()).collect() };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(out());
        }
        if let Some(b) = &self.bbox {
            for (v, (lo, hi)) in x.iter().zip(b) {
                let tol = 1e-12 * (hi - lo);
                let v = v.as_f64();
                if v < lo - tol || v > hi + tol {
                    return Err(out());
                }
            }
        }
        match self.kind {
            FiberKind::HyperbolicHalfPlane if !(x[self.n - 1] > T::zero()) => Err(out()),
            FiberKind::HyperbolicBall if !(dot(x, x) < T::one()) => Err(out()),
            _ => Ok(()),
        }
    }

    fn factor_f64(&self, x: &[f64]) -> Result<f64> {
        let e = self.factor.as_ref().expect("conformal kind").eval(x)?;
        if e > 0.0 {
            Ok(e)
        } else {
            Err(Error::OutOfChart { point: x.to_vec() })
        }
    }

    pub fn conformal_factor<T: Scalar>(&self, x: &[T]) -> Result<T> {
        self.check_point(x)?;
        let r2 = dot(x, x);
        Ok(match self.kind {
            FiberKind::Euclidean => T::one(),
            FiberKind::Sphere => T::lit(4.0) / (T::one() + r2).powi(2),
            FiberKind::HyperbolicBall => T::lit(4.0) / (T::one() - r2).powi(2),
            FiberKind::HyperbolicHalfPlane => T::one() / x[self.n - 1].powi(2),
            FiberKind::Conformal(_) => {
                let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
                T::lit(self.factor_f64(&xf)?)
            }
        })
    }

    /// `sigma` derivatives: closed form for builtins, central differences of
    /// the factor otherwise.
    pub fn sigma_jet<T: Scalar>(&self, x: &[T]) -> Result<SigmaJet<T>> {
        self.check_point(x)?;
        let n = self.n;
        let one = T::one();
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let r2 = dot(x, x);
        let jet = match self.kind {
            FiberKind::Euclidean => SigmaJet { e: one, ds: vec![T::zero(); n], d2s: Mat::zeros(n) },
            FiberKind::Sphere => {
                let q = one + r2;
                SigmaJet {
                    e: four / (q * q),
                    ds: x.iter().map(|&xi| -two * xi / q).collect(),
                    d2s: Mat::from_fn(n, |i, j| {
                        let d = if i == j { -two / q } else { T::zero() };
                        d + four * x[i] * x[j] / (q * q)
                    }),
                }
            }
            FiberKind::HyperbolicBall => {
                let q = one - r2;
                SigmaJet {
                    e: four / (q * q),
                    ds: x.iter().map(|&xi| two * xi / q).collect(),
                    d2s: Mat::from_fn(n, |i, j| {
                        let d = if i == j { two / q } else { T::zero() };
                        d + four * x[i] * x[j] / (q * q)
                    }),
                }
            }
            FiberKind::HyperbolicHalfPlane => {
                let y = x[n - 1];
                let mut ds = vec![T::zero(); n];
                ds[n - 1] = -one / y;
                let mut d2s = Mat::zeros(n);
                d2s[(n - 1, n - 1)] = one / (y * y);
                SigmaJet { e: one / (y * y), ds, d2s }
            }
            FiberKind::Conformal(_) => {
                let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
                let h = self.fd_step;
                let at = |shift: &[(usize, f64)]| -> Result<f64> {
                    let mut p = xf.clone();
                    for &(i, s) in shift {
                        p[i] += s;
                    }
                    self.factor_f64(&p)
                };
                let e0 = at(&[])?;
                let mut g = vec![0.0; n];
                let mut hess = vec![vec![0.0; n]; n];
                for i in 0..n {
                    let ep = at(&[(i, h)])?;
                    let em = at(&[(i, -h)])?;
                    g[i] = (ep - em) / (2.0 * h);
                    hess[i][i] = (ep - 2.0 * e0 + em) / (h * h);
                    for j in 0..i {
                        let v = (at(&[(i, h), (j, h)])? - at(&[(i, h), (j, -h)])? - at(&[(i, -h), (j, h)])?
                            + at(&[(i, -h), (j, -h)])?)
                            / (4.0 * h * h);
                        hess[i][j] = v;
                        hess[j][i] = v;
                    }
                }
                SigmaJet {
                    e: T::lit(e0),
                    ds: g.iter().map(|gi| T::lit(gi / (2.0 * e0))).collect(),
                    d2s: Mat::from_fn(n, |i, j| T::lit(hess[i][j] / (2.0 * e0) - g[i] * g[j] / (2.0 * e0 * e0))),
                }
            }
        };
        Ok(jet)
    }

    pub fn metric_at<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        Ok(Mat::scaled_identity(self.n, self.conformal_factor(x)?))
    }

    pub fn inverse_metric_at<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        Ok(Mat::scaled_identity(self.n, T::one() / self.conformal_factor(x)?))
    }

    pub fn christoffel_at<T: Scalar>(&self, x: &[T]) -> Result<Christoffel<T>> {
        Ok(christoffel_from_sigma(&self.sigma_jet(x)?))
    }

    /// Covariant Ricci tensor.
    pub fn ricci_at<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        match self.curvature_constant() {
            Some(k) => {
                let c = T::lit(k * (self.n as f64 - 1.0));
                Ok(Mat::scaled_identity(self.n, c * self.conformal_factor(x)?))
            }
            None => Ok(ricci_from_sigma(&self.sigma_jet(x)?)),
        }
    }

    pub fn ricci_quadratic<T: Scalar>(&self, x: &[T], v: &[T]) -> Result<T> {
        Ok(self.ricci_at(x)?.quad(v))
    }

    /// `g_F(R(V,W)W, V)`, positive on round spheres.
    pub fn curvature_quadratic<T: Scalar>(&self, x: &[T], v: &[T], w: &[T]) -> Result<T> {
        match self.curvature_constant() {
            Some(k) => {
                let e = self.conformal_factor(x)?;
                let (vv, ww, vw) = (dot(v, v), dot(w, w), dot(v, w));
                Ok(T::lit(k) * e * e * (vv * ww - vw * vw))
            }
            None => Ok(curvature_from_sigma(&self.sigma_jet(x)?, v, w)),
        }
    }

    /// `Du^i = g^{ij} du_j` and `|Du|^2`.
    pub fn fiber_gradient<T: Scalar>(&self, x: &[T], du: &[T]) -> Result<(Vec<T>, T)> {
        let e = self.conformal_factor(x)?;
        let v: Vec<T> = du.iter().map(|&d| d / e).collect();
        let n2 = dot(&v, du);
        Ok((v, n2))
    }

    pub fn norm2<T: Scalar>(&self, x: &[T], v: &[T]) -> Result<T> {
        Ok(self.conformal_factor(x)? * dot(v, v))
    }
}

pub fn christoffel_from_sigma<T: Scalar>(s: &SigmaJet<T>) -> Christoffel<T> {
    let n = s.ds.len();
    let mut c = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = T::zero();
                if i == k {
                    v += s.ds[j];
                }
                if j == k {
                    v += s.ds[i];
                }
                if i == j {
                    v -= s.ds[k];
                }
                c.set(k, i, j, v);
            }
        }
    }
    c
}

/// `Ric = -(n-2)(D^2 s - ds ds) - (lap s + (n-2)|ds|^2) I` for `g = e^{2s} I`.
pub fn ricci_from_sigma<T: Scalar>(s: &SigmaJet<T>) -> Mat<T> {
    let n = s.ds.len();
    let m = T::lit(n as f64 - 2.0);
    let lap = s.d2s.trace();
    let g2 = dot(&s.ds, &s.ds);
    Mat::from_fn(n, |i, j| {
        let mut r = -m * (s.d2s[(i, j)] - s.ds[i] * s.ds[j]);
        if i == j {
            r -= lap + m * g2;
        }
        r
    })
}

fn curvature_from_sigma<T: Scalar>(s: &SigmaJet<T>, v: &[T], w: &[T]) -> T {
    let n = s.ds.len();
    let g2 = dot(&s.ds, &s.ds);
    let half = T::lit(0.5);
    let t = Mat::from_fn(n, |i, j| {
        let d = if i == j { half * g2 } else { T::zero() };
        s.d2s[(i, j)] - s.ds[i] * s.ds[j] + d
    });
    let (vv, ww, vw) = (dot(v, v), dot(w, w), dot(v, w));
    -s.e * (t.quad(v) * ww + t.quad(w) * vv - T::lit(2.0) * t.bilinear(v, w) * vw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball_factor() -> FiberKind {
        FiberKind::parse("conformal:4/(1-(x1^2+x2^2))^2", 2).unwrap()
    }

    #[test]
    fn metric_examples() {
        let m: Mat<f64> = Fiber::euclidean(2).metric_at(&[0.3, -2.0]).unwrap();
        assert_eq!(m, Mat::identity(2));
        let m: Mat<f64> = Fiber::half_plane(2).metric_at(&[0.0, 2.0]).unwrap();
        assert_eq!(m, Mat::scaled_identity(2, 0.25));
        let m: Mat<f64> = Fiber::sphere(2).metric_at(&[0.0, 0.0]).unwrap();
        assert_eq!(m, Mat::scaled_identity(2, 4.0));
        assert!(matches!(Fiber::half_plane(2).metric_at(&[0.0, -1.0]), Err(Error::OutOfChart { .. })));
        assert!(matches!(Fiber::ball(2).metric_at(&[0.8, 0.8]), Err(Error::OutOfChart { .. })));
    }

    #[test]
    fn christoffel_examples() {
        let c: Christoffel<f64> = Fiber::euclidean(3).christoffel_at(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.max_abs(), 0.0);
        let c: Christoffel<f64> = Fiber::half_plane(2).christoffel_at(&[0.0, 1.0]).unwrap();
        assert_eq!(c.get(1, 0, 0), 1.0);
        assert_eq!(c.get(0, 0, 1), -1.0);
        assert_eq!(c.get(0, 1, 0), -1.0);
        assert_eq!(c.get(1, 1, 1), -1.0);
        assert_eq!(c.get(0, 0, 0), 0.0);
        let c: Christoffel<f64> = Fiber::sphere(2).christoffel_at(&[0.0, 0.0]).unwrap();
        assert_eq!(c.max_abs(), 0.0);
    }

    /// Christoffels from the sigma jet against the textbook formula applied to
    /// finite differences of the metric.
    #[test]
    fn christoffel_matches_metric_derivatives() {
        let f = Fiber::sphere(3);
        let x = [0.3, -0.2, 0.5];
        let c: Christoffel<f64> = f.christoffel_at(&x).unwrap();
        let h = 1e-5;
        let dg = |l: usize| -> Mat<f64> {
            let mut p = x;
            let mut m = x;
            p[l] += h;
            m[l] -= h;
            f.metric_at(&p).unwrap().sub(&f.metric_at(&m).unwrap()).scale(1.0 / (2.0 * h))
        };
        let d: Vec<Mat<f64>> = (0..3).map(dg).collect();
        let ginv = f.inverse_metric_at(&x).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += 0.5 * ginv[(k, l)] * (d[i][(j, l)] + d[j][(i, l)] - d[l][(i, j)]);
                    }
                    assert!((s - c.get(k, i, j)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn ricci_examples() {
        assert_eq!(Fiber::euclidean(2).ricci_quadratic(&[0.1, 0.2], &[1.0, 3.0]).unwrap(), 0.0);
        let r: f64 = Fiber::half_plane(2).ricci_quadratic(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
        let r: f64 = Fiber::sphere(2).ricci_quadratic(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((r - 4.0).abs() < 1e-15);
    }

    /// The conformal-factor formula fed with each builtin's closed-form sigma jet
    /// must reproduce the builtin's constant curvature.
    #[test]
    fn builtin_sigma_jets_reproduce_constant_curvature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 4] {
            for fiber in [Fiber::euclidean(n), Fiber::sphere(n), Fiber::half_plane(n), Fiber::ball(n)] {
                let k = fiber.curvature_constant().unwrap();
                let bx = fiber.sample_box();
                for _ in 0..100 {
                    let x: Vec<f64> = bx.iter().map(|&(a, b)| rng.gen_range(a..b)).collect();
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let s = fiber.sigma_jet(&x).unwrap();
                    let g = fiber.metric_at(&x).unwrap();
                    let scale = g.quad(&v).max(1.0);
                    let ric = ricci_from_sigma(&s).quad(&v);
                    let expect = k * (n as f64 - 1.0) * g.quad(&v);
                    assert!((ric - expect).abs() <= 1e-8 * scale, "{:?} n={n}", fiber.kind());
                    assert!((fiber.ricci_quadratic(&x, &v).unwrap() - expect).abs() <= 1e-8 * scale);
                    let q = curvature_from_sigma(&s, &v, &w);
                    let (gv, gw, gvw) = (g.quad(&v), g.quad(&w), g.bilinear(&v, &w));
                    let expect = k * (gv * gw - gvw * gvw);
                    assert!((q - expect).abs() <= 1e-8 * (gv * gw).max(1.0));
                }
            }
        }
    }

    #[test]
    fn finite_difference_ricci_converges_at_second_order() {
        let x = [0.2, -0.3];
        let v = [1.0, 0.5];
        let exact: f64 = Fiber::ball(2).ricci_quadratic(&x, &v).unwrap();
        let err = |h: f64| {
            let f = Fiber::new(2, ball_factor()).unwrap().with_fd_step(h);
            let r: f64 = f.ricci_quadratic(&x, &v).unwrap();
            (r - exact).abs()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "order {order} ({e1:e}, {e2:e})");
        let f = Fiber::new(2, ball_factor()).unwrap().with_box(vec![(-0.5, 0.5), (-0.5, 0.5)]).unwrap();
        let r: f64 = f.ricci_quadratic(&x, &v).unwrap();
        assert!((r - exact).abs() < 1e-5);
    }

    #[test]
    fn gradient_examples() {
        let (d, n2) = Fiber::euclidean(2).fiber_gradient(&[0.0, 0.0], &[0.5, 0.0]).unwrap();
        assert_eq!((d, n2), (vec![0.5, 0.0], 0.25));
        let (d, n2): (Vec<f64>, f64) = Fiber::half_plane(2).fiber_gradient(&[0.0, 1.0], &[0.0, 2.0 / 3.0]).unwrap();
        assert_eq!(d, vec![0.0, 2.0 / 3.0]);
        assert!((n2 - 4.0 / 9.0).abs() < 1e-16);
        let (d, n2) = Fiber::half_plane(2).fiber_gradient(&[0.0, 2.0], &[1.0, 0.0]).unwrap();
        assert_eq!((d, n2), (vec![4.0, 0.0], 4.0));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            FiberKind::Euclidean,
            FiberKind::Sphere,
            FiberKind::HyperbolicHalfPlane,
            FiberKind::HyperbolicBall,
            ball_factor(),
        ] {
            assert_eq!(FiberKind::parse(&k.name(), 2).unwrap(), k);
        }
        assert!(FiberKind::parse("torus", 2).is_err());
        assert!(FiberKind::parse("conformal:1+x3", 2).is_err());
    }
}
