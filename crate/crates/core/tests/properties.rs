use grwlab_core::expr::Func;
use grwlab_core::geometry::geometry_at;
use grwlab_core::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![Just(Expr::var("x")), (-2.0f64..2.0).prop_map(|c| Expr::constant((c * 100.0).round() / 100.0)),]
}

fn one_plus_square(e: Expr) -> Expr {
    Expr::add(Expr::constant(1.0), Expr::pow(e, 2.0))
}

/// Smooth expressions in `x` that stay finite on `[-1, 1]`.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, one_plus_square(b))),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::func(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Tanh, a)),
            inner.clone().prop_map(|a| Expr::func(Func::Exp, Expr::func(Func::Sin, a))),
            inner.clone().prop_map(|a| Expr::func(Func::Log, one_plus_square(a))),
            inner.clone().prop_map(|a| Expr::func(Func::Sqrt, one_plus_square(a))),
            (inner.clone(), 2u8..4).prop_map(|(a, k)| Expr::pow(a, k as f64)),
            inner.prop_map(|a| Expr::pow(one_plus_square(a), -0.5)),
        ]
    })
}

fn eval_at(e: &Expr, x: f64) -> f64 {
    e.compile(&["x"]).unwrap().eval(&[x]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_matches_central_difference_at_second_order(e in smooth_expr(), x0 in -1.0f64..1.0) {
        let d = e.derivative("x");
        let exact = eval_at(&d, x0);
        let cd = |h: f64| (eval_at(&e, x0 + h) - eval_at(&e, x0 - h)) / (2.0 * h);
        let e1 = (exact - cd(1e-3)).abs();
        let e2 = (exact - cd(5e-4)).abs();
        let scale = 1f64.max(eval_at(&e, x0).abs()).max(exact.abs());
        // Below this the truncation error competes with roundoff.
        prop_assume!(e1 > 1e-9 * scale);
        let order = (e1 / e2).log2();
        prop_assert!(order >= 1.9, "{e}: errors {e1:e} {e2:e}");
    }

    #[test]
    fn printed_expressions_parse_back_identically(e in smooth_expr()) {
        let text = e.to_string();
        let back = Expr::parse_in(&text, &["x"]).unwrap();
        for i in 0..100 {
            let x = -1.0 + 2.0 * i as f64 / 99.0;
            let (a, b) = (eval_at(&e, x), eval_at(&back, x));
            prop_assert!(a == b || (a - b).abs() <= 1e-15 * a.abs(), "{text}: {a} vs {b}");
        }
    }
}

#[test]
fn catalog_warpings_differentiate_at_second_order() {
    for m in Model::catalog() {
        let f = m.warping.f_expr();
        for x0 in [-0.7, 0.1, 0.4] {
            let exact: f64 = m.warping.f1(x0).unwrap();
            let cd = |h: f64| (m.warping.f::<f64>(x0 + h).unwrap() - m.warping.f::<f64>(x0 - h).unwrap()) / (2.0 * h);
            let (e1, e2) = ((exact - cd(1e-3)).abs(), (exact - cd(5e-4)).abs());
            if e1 < 1e-9 {
                continue;
            }
            assert!((e1 / e2).log2() >= 1.9, "{f}");
        }
    }
}

#[test]
fn log_f_second_matches_difference_of_log_f() {
    for src in ["cosh(t)", "cos(t)", "exp(t)", "2 + sin(t)", "exp(t^2)", "1 + t^2"] {
        let w = Warping::new(src, Interval::new(-1.2, 1.2).unwrap()).unwrap();
        let lf = |t: f64| w.f::<f64>(t).unwrap().ln();
        for t in [-0.8, -0.1, 0.3, 0.9] {
            let exact: f64 = w.log_f_second(t).unwrap();
            let d2 = |h: f64| (lf(t + h) - 2.0 * lf(t) + lf(t - h)) / (h * h);
            let (e1, e2) = ((exact - d2(1e-2)).abs(), (exact - d2(5e-3)).abs());
            if e1 < 1e-8 {
                continue;
            }
            assert!((e1 / e2).log2() >= 1.9, "{src} at {t}: {e1:e} {e2:e}");
        }
    }
}

#[test]
fn slices_are_maximal_exactly_where_f_prime_vanishes() {
    let ds = Warping::new("cosh(t)", Interval::real_line()).unwrap();
    assert_eq!(ds.slice_mean_curvature(0.0f64).unwrap(), 0.0);
    let ads = Warping::new("cos(t)", Interval::new(-1.5, 1.5).unwrap()).unwrap();
    assert_eq!(ads.slice_mean_curvature(0.0f64).unwrap(), 0.0);
    for t in [-1.0f64, -0.3, 0.2, 0.9] {
        assert!(ds.slice_mean_curvature(t).unwrap().abs() > 1e-3);
        assert!(ads.slice_mean_curvature(t).unwrap().abs() > 1e-3);
    }
}

fn build_models() -> Vec<Model> {
    let mut v: Vec<Model> =
        ["minkowski", "desitter", "ads-region", "steady-state", "einstein-static", "product-hyperbolic"]
            .iter()
            .map(|n| Model::builtin(n).unwrap())
            .collect();
    v.push(Model::new(
        "ball",
        Warping::new("2 + sin(t)", Interval::real_line()).unwrap(),
        Fiber::new(2, FiberKind::HyperbolicBall).unwrap(),
    ));
    v.push(Model::new(
        "conformal",
        Warping::new("cosh(t)", Interval::real_line()).unwrap(),
        Fiber::new(2, FiberKind::parse("conformal:exp(x1/2 - x2^2/3)", 2).unwrap()).unwrap(),
    ));
    v.push(Model::new(
        "three",
        Warping::new("exp(t/2)", Interval::real_line()).unwrap(),
        Fiber::new(3, FiberKind::Sphere).unwrap(),
    ));
    v
}

fn models() -> &'static [Model] {
    static MODELS: OnceLock<Vec<Model>> = OnceLock::new();
    MODELS.get_or_init(build_models)
}

/// A jet over a sample point of `m` with `|Du| = lambda f(u)` in direction `dir`.
fn jet(m: &Model, unit: &[f64], u: f64, lambda: f64, dir: &[f64], d2: &[f64]) -> PointJet64 {
    let n = m.dim();
    let bbox = m.fiber.sample_box();
    let x: Vec<f64> = bbox.iter().zip(unit).map(|(&(a, b), s)| a + (b - a) * s).collect();
    let e = m.fiber.conformal_factor(&x).unwrap();
    let f = m.warping.f(u).unwrap();
    let norm = dir[..n].iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-3);
    let du: Vec<f64> = dir[..n].iter().map(|c| c / norm * lambda * f * e.sqrt()).collect();
    let mut h = Mat::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            h[(i, j)] = d2[k];
            h[(j, i)] = d2[k];
            k += 1;
        }
    }
    PointJet::new(x, u, du, h)
}

fn jet_inputs() -> impl Strategy<Value = (usize, Vec<f64>, f64, f64, Vec<f64>, Vec<f64>)> {
    (
        0usize..9,
        prop::collection::vec(0.0f64..1.0, 3),
        -1.2f64..1.2,
        0.0f64..0.95,
        prop::collection::vec(-1.0f64..1.0, 3),
        prop::collection::vec(-2.0f64..2.0, 6),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn pointwise_geometry_invariants((mi, unit, u, lambda, dir, d2) in jet_inputs()) {
        let ms = models();
        let m = &ms[mi];
        let j = jet(m, &unit, u, lambda, &dir, &d2);
        let g = geometry_at(&m.warping, &m.fiber, &j).unwrap();
        let c2 = g.cosh_phi * g.cosh_phi;
        prop_assert!((g.h - g.h_divergence).abs() <= 1e-9 * 1f64.max(g.a_norm2.sqrt()), "{} vs {}", g.h, g.h_divergence);
        prop_assert!((c2 - 1.0 - g.sinh2_phi).abs() <= 1e-10 * c2);
        prop_assert!((g.sinh2_phi - g.norm2(&g.grad_tau)).abs() <= 1e-10 * c2);
        prop_assert!((g.normal_norm2() + 1.0).abs() <= 1e-10 * c2);
        let bound = 1.0 / (1.0 - lambda * lambda).sqrt();
        prop_assert!((g.cosh_phi - bound).abs() <= 1e-10 * bound);
    }

    #[test]
    fn slices_are_umbilical((mi, unit, u, _l, _d, _h) in jet_inputs()) {
        let ms = models();
        let m = &ms[mi];
        let n = m.dim();
        let bbox = m.fiber.sample_box();
        let x: Vec<f64> = bbox.iter().zip(&unit).map(|(&(a, b), s)| a + (b - a) * s).collect();
        let g = geometry_at(&m.warping, &m.fiber, &PointJet::slice(x, u)).unwrap();
        let q = g.fp_over_f();
        for i in 0..n {
            for k in 0..n {
                let want = if i == k { -q } else { 0.0 };
                prop_assert_eq!(g.a_matrix[(i, k)], want);
            }
        }
        prop_assert!((g.h - q).abs() <= 1e-15 * 1f64.max(q.abs()));
    }

    #[test]
    fn builtin_fibers_have_constant_ricci(unit in prop::collection::vec(0.0f64..1.0, 3), v in prop::collection::vec(-1.0f64..1.0, 3)) {
        for kind in [FiberKind::Euclidean, FiberKind::Sphere, FiberKind::HyperbolicHalfPlane, FiberKind::HyperbolicBall] {
            for n in [2usize, 3] {
                let fb = Fiber::new(n, kind.clone()).unwrap();
                let x: Vec<f64> = fb.sample_box().iter().zip(&unit).map(|(&(a, b), s)| a + (b - a) * s).collect();
                let c = fb.curvature_constant().unwrap() * (n as f64 - 1.0);
                let r = fb.ricci_quadratic(&x, &v[..n]).unwrap();
                let gv = fb.norm2(&x, &v[..n]).unwrap();
                prop_assert!((r - c * gv).abs() <= 1e-8, "{kind:?} n={n}");
            }
        }
    }
}
