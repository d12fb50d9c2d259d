//! Warping functions `f > 0` on an open interval, with exact symbolic derivatives.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::scalar::Scalar;

/// Samples used for the positivity check at construction.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// Half-width of the scan window used when an interval end is infinite.
pub const DEFAULT_HALF_WINDOW: f64 = 5.0;

/// Open interval `(lo, hi)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Finite stand-in for the interval when nothing else is given.
    pub fn default_window(&self) -> (f64, f64) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + 2.0 * DEFAULT_HALF_WINDOW),
            (false, true) => (self.hi - 2.0 * DEFAULT_HALF_WINDOW, self.hi),
            (false, false) => (-DEFAULT_HALF_WINDOW, DEFAULT_HALF_WINDOW),
        }
    }

    /// Sample points: inclusive grid on an explicit window (which must lie
    /// strictly inside), cell midpoints on the default window otherwise.
    pub fn sample_points(&self, window: Option<(f64, f64)>, samples: usize) -> Result<Vec<f64>> {
        let samples = samples.max(2);
        match window {
            Some((a, b)) => {
                if !(a < b) {
                    return Err(Error::EmptyInterval { lo: a, hi: b });
                }
                for t in [a, b] {
                    if !self.contains(t) {
                        return Err(Error::OutOfInterval { t, lo: self.lo, hi: self.hi });
                    }
                }
                let step = (b - a) / (samples - 1) as f64;
                Ok((0..samples).map(|k| if k + 1 == samples { b } else { a + step * k as f64 }).collect())
            }
            None => {
                let (a, b) = self.default_window();
                let step = (b - a) / samples as f64;
                Ok((0..samples).map(|k| a + step * (k as f64 + 0.5)).collect())
            }
        }
    }
}

/// Quantities that theorem hypotheses scan over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "f'/f")]
    FPrimeOverF,
    #[serde(rename = "(f'/f)^2")]
    FPrimeOverFSquared,
    #[serde(rename = "(log f)''")]
    LogFSecond,
}

/// Extrema over a finite sample; sampled, not proven.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrema {
    pub sup: f64,
    pub inf: f64,
    pub arg_sup: f64,
    pub arg_inf: f64,
    pub samples: usize,
    pub window: (f64, f64),
}

/// `f`, `f'`, `f''` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpValues<T> {
    pub f: T,
    pub f1: T,
    pub f2: T,
}

impl<T: Scalar> WarpValues<T> {
    pub fn fp_over_f(&self) -> T {
        self.f1 / self.f
    }

    /// `f''/f - (f'/f)^2`
    pub fn log_f_second(&self) -> T {
        let q = self.f1 / self.f;
        self.f2 / self.f - q * q
    }
}

#[derive(Debug, Clone)]
pub struct Warping {
    source: String,
    interval: Interval,
    f: Expr,
    f1: Expr,
    f2: Expr,
    cf: Compiled,
    cf1: Compiled,
    cf2: Compiled,
}

impl PartialEq for Warping {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.interval == other.interval
    }
}

impl Warping {
    /// Parses `src` as an expression in `t` and checks positivity on a sample.
    pub fn new(src: &str, interval: Interval) -> Result<Self> {
        let f = Expr::parse_in(src, &["t"])?;
        let mut w = Self::from_expr(f, interval)?;
        w.source = src.trim().to_string();
        Ok(w)
    }

    pub fn from_expr(f: Expr, interval: Interval) -> Result<Self> {
        let f1 = f.derivative("t");
        let f2 = f1.derivative("t");
        let cf = f.compile(&["t"])?;
        let cf1 = f1.compile(&["t"])?;
        let cf2 = f2.compile(&["t"])?;
        let w = Self { source: f.to_string(), interval, f, f1, f2, cf, cf1, cf2 };
        for t in interval.sample_points(None, POSITIVITY_SAMPLES)? {
            let value: f64 = w.cf.eval(&[t])?;
            if !(value > 0.0) {
                return Err(Error::NotPositive { t, value });
            }
        }
        Ok(w)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn f_expr(&self) -> &Expr {
        &self.f
    }

    pub fn f1_expr(&self) -> &Expr {
        &self.f1
    }

    pub fn f2_expr(&self) -> &Expr {
        &self.f2
    }

    /// True when `f'` folds to the constant zero.
    pub fn is_constant(&self) -> bool {
        matches!(self.f1, Expr::Const(c) if c == 0.0)
    }

    fn check<T: Scalar>(&self, t: T) -> Result<()> {
        let tf = t.as_f64();
        if self.interval.contains(tf) {
            Ok(())
        } else {
            Err(Error::OutOfInterval { t: tf, lo: self.interval.lo, hi: self.interval.hi })
        }
    }

    pub fn values<T: Scalar>(&self, t: T) -> Result<WarpValues<T>> {
        self.check(t)?;
        let args = [t];
        Ok(WarpValues { f: self.cf.eval(&args)?, f1: self.cf1.eval(&args)?, f2: self.cf2.eval(&args)? })
    }

    pub fn f<T: Scalar>(&self, t: T) -> Result<T> {
        self.check(t)?;
        Ok(self.cf.eval(&[t])?)
    }

    pub fn f1<T: Scalar>(&self, t: T) -> Result<T> {
        self.check(t)?;
        Ok(self.cf1.eval(&[t])?)
    }

    pub fn f2<T: Scalar>(&self, t: T) -> Result<T> {
        self.check(t)?;
        Ok(self.cf2.eval(&[t])?)
    }

    pub fn log_f_second<T: Scalar>(&self, t: T) -> Result<T> {
        Ok(self.values(t)?.log_f_second())
    }

    /// Mean curvature `f'(t0)/f(t0)` of the slice `{t0} x F`.
    pub fn slice_mean_curvature<T: Scalar>(&self, t0: T) -> Result<T> {
        Ok(self.values(t0)?.fp_over_f())
    }

    pub fn quantity<T: Scalar>(&self, q: Quantity, t: T) -> Result<T> {
        let v = self.values(t)?;
        Ok(match q {
            Quantity::FPrimeOverF => v.fp_over_f(),
            Quantity::FPrimeOverFSquared => v.fp_over_f() * v.fp_over_f(),
            Quantity::LogFSecond => v.log_f_second(),
        })
    }

    /// Sampled extrema of `q`. Unbounded intervals need an explicit window
    /// unless `allow_default` is set, in which case the default window is used.
    pub fn scan_extrema(
        &self,
        q: Quantity,
        window: Option<(f64, f64)>,
        samples: usize,
        allow_default: bool,
    ) -> Result<Extrema> {
        if window.is_none() && !self.interval.is_bounded() && !allow_default {
            return Err(Error::ScanWindowRequired);
        }
        let pts = self.interval.sample_points(window, samples)?;
        let mut ex = Extrema {
            sup: f64::NEG_INFINITY,
            inf: f64::INFINITY,
            arg_sup: f64::NAN,
            arg_inf: f64::NAN,
            samples: pts.len(),
            window: window.unwrap_or_else(|| self.interval.default_window()),
        };
        for &t in &pts {
            let v: f64 = self.quantity(q, t)?;
            if v > ex.sup {
                ex.sup = v;
                ex.arg_sup = t;
            }
            if v < ex.inf {
                ex.inf = v;
                ex.arg_inf = t;
            }
        }
        Ok(ex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ads() -> Warping {
        Warping::new("cos(t)", Interval::new(-FRAC_PI_2, FRAC_PI_2).unwrap()).unwrap()
    }

    #[test]
    fn construction_and_positivity() {
        let w = ads();
        assert_eq!(w.f1(0.0).unwrap(), 0.0);
        let e = Warping::new("exp(t)", Interval::real_line()).unwrap();
        for t in [-3.0, 0.0, 2.5] {
            assert!((e.slice_mean_curvature(t).unwrap() - 1.0_f64).abs() < 1e-15);
        }
        let err = Warping::new("t", Interval::new(-1.0, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotPositive { .. }));
        assert!(matches!(Warping::new("cos(", Interval::real_line()), Err(Error::Syntax(_))));
        assert!(matches!(Warping::new("cos(s)", Interval::real_line()), Err(Error::Syntax(_))));
    }

    #[test]
    fn log_second_derivative() {
        let e = Warping::new("exp(t)", Interval::real_line()).unwrap();
        assert_eq!(e.log_f_second(1.3).unwrap(), 0.0);
        assert!((ads().log_f_second(0.0).unwrap() + 1.0_f64).abs() < 1e-15);
        let c = Warping::new("cosh(t)", Interval::real_line()).unwrap();
        assert!((c.log_f_second(0.0).unwrap() - 1.0_f64).abs() < 1e-15);
        assert!(matches!(ads().log_f_second(2.0), Err(Error::OutOfInterval { .. })));
    }

    #[test]
    fn slice_curvature() {
        let c = Warping::new("cosh(t)", Interval::real_line()).unwrap();
        assert_eq!(c.slice_mean_curvature(0.0).unwrap(), 0.0);
        assert!((c.slice_mean_curvature(1.0).unwrap() - 0.761594155955765_f64).abs() < 1e-12);
    }

    #[test]
    fn scans() {
        let e = Warping::new("exp(t)", Interval::real_line()).unwrap();
        assert!(matches!(
            e.scan_extrema(Quantity::FPrimeOverFSquared, None, 100, false),
            Err(Error::ScanWindowRequired)
        ));
        let ex = e.scan_extrema(Quantity::FPrimeOverFSquared, Some((-5.0, 5.0)), 101, false).unwrap();
        assert!((ex.sup - 1.0).abs() < 1e-15 && (ex.inf - 1.0).abs() < 1e-15);

        let w = ads();
        let ex =
            w.scan_extrema(Quantity::LogFSecond, Some((-FRAC_PI_2 + 0.01, FRAC_PI_2 - 0.01)), 1001, false).unwrap();
        assert!((ex.sup + 1.0).abs() < 1e-12);
        assert!(ex.arg_sup.abs() < 1e-12);
        assert!(matches!(
            w.scan_extrema(Quantity::LogFSecond, Some((-PI, 0.0)), 10, false),
            Err(Error::OutOfInterval { .. })
        ));

        let one = Warping::new("1", Interval::real_line()).unwrap();
        assert!(one.is_constant());
        let ex = one.scan_extrema(Quantity::FPrimeOverF, Some((-1.0, 1.0)), 10, false).unwrap();
        assert_eq!((ex.sup, ex.inf), (0.0, 0.0));
    }

    #[test]
    fn single_precision_values() {
        let v = ads().values(0.5f32).unwrap();
        assert!((v.f - 0.5f32.cos()).abs() < 1e-6);
        assert!((v.log_f_second() + 1.0 / (0.5f32.cos() * 0.5f32.cos())).abs() < 1e-5);
    }
}
