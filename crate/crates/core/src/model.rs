//! Spacetime models `I x_f F`: the builtin catalog and the `key=value` model file.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fiber::{Fiber, FiberKind};
use crate::warping::{Interval, Warping};

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub warping: Warping,
    pub fiber: Fiber,
}

pub const CATALOG: [&str; 6] =
    ["minkowski", "desitter", "ads-region", "steady-state", "einstein-static", "product-hyperbolic"];

impl Model {
    pub fn new(name: &str, warping: Warping, fiber: Fiber) -> Self {
        Self { name: name.to_string(), warping, fiber }
    }

    pub fn dim(&self) -> usize {
        self.fiber.dim()
    }

    /// Catalog entry with a fiber of dimension `n`.
    pub fn builtin_dim(name: &str, n: usize) -> Option<Self> {
        let real = Interval::real_line();
        let (src, iv, kind) = match name {
            "minkowski" => ("1", real, FiberKind::Euclidean),
            "desitter" => ("cosh(t)", real, FiberKind::Sphere),
            "ads-region" => ("cos(t)", Interval { lo: -FRAC_PI_2, hi: FRAC_PI_2 }, FiberKind::HyperbolicHalfPlane),
            "steady-state" => ("exp(t)", real, FiberKind::Euclidean),
            "einstein-static" => ("1", real, FiberKind::Sphere),
            "product-hyperbolic" => ("1", real, FiberKind::HyperbolicHalfPlane),
            _ => return None,
        };
        let w = Warping::new(src, iv).expect("catalog warping");
        Some(Self::new(name, w, Fiber::new(n, kind).ok()?))
    }

    pub fn builtin(name: &str) -> Option<Self> {
        Self::builtin_dim(name, 2)
    }

    pub fn catalog() -> Vec<Self> {
        CATALOG.iter().map(|n| Self::builtin(n).unwrap()).collect()
    }

    pub fn to_model_file(&self) -> String {
        let iv = self.warping.interval();
        let mut s = String::new();
        writeln!(s, "# {}", self.name).unwrap();
        writeln!(s, "dim={}", self.dim()).unwrap();
        writeln!(s, "warping={}", self.warping.source()).unwrap();
        writeln!(s, "interval={},{}", fmt_end(iv.lo), fmt_end(iv.hi)).unwrap();
        writeln!(s, "fiber={}", self.fiber.kind().name()).unwrap();
        s
    }

    pub fn parse_model_file(text: &str, name: &str) -> Result<Self> {
        let (mut dim, mut warping, mut interval, mut fiber) = (None, None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
            let value = value.trim();
            match key.trim() {
                "dim" => dim = Some(value.parse::<usize>().map_err(|_| Error::Format(format!("bad dim `{value}`")))?),
                "warping" => warping = Some(value.to_string()),
                "interval" => interval = Some(parse_interval(value)?),
                "fiber" => fiber = Some(value.to_string()),
                other => return Err(Error::Format(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let missing = |k: &str| Error::Format(format!("model file lacks `{k}=`"));
        let dim = dim.ok_or_else(|| missing("dim"))?;
        let warping = warping.ok_or_else(|| missing("warping"))?;
        let interval = interval.unwrap_or_else(Interval::real_line);
        let fiber = fiber.ok_or_else(|| missing("fiber"))?;
        let kind = FiberKind::parse(&fiber, dim)?;
        Ok(Self::new(name, Warping::new(&warping, interval)?, Fiber::new(dim, kind)?))
    }
}

fn fmt_end(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_interval(s: &str) -> Result<Interval> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(Error::Format(format!("interval needs two ends, got `{s}`")));
    }
    let end = |p: &str| -> Result<f64> {
        match p {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => p.parse::<f64>().map_err(|_| Error::Format(format!("bad interval end `{p}`"))),
        }
    };
    Interval::new(end(parts[0])?, end(parts[1])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trips_through_model_files() {
        for m in Model::catalog() {
            let text = m.to_model_file();
            let back = Model::parse_model_file(&text, &m.name).unwrap();
            assert_eq!(back, m, "{text}");
        }
    }

    #[test]
    fn model_file_errors() {
        assert!(Model::parse_model_file("dim=2\nwarping=1\n", "x").is_err());
        assert!(Model::parse_model_file("dim=2\nwarping=t\ninterval=-1,1\nfiber=euclidean", "x").is_err());
        assert!(Model::parse_model_file("dim=2\nwarping=1\nfiber=klein", "x").is_err());
        assert!(Model::parse_model_file("dim=2\ncolor=red", "x").is_err());
        let m = Model::parse_model_file(
            "# comment\ndim=3\nwarping=t^2 + 1\ninterval=-inf,inf\nfiber=conformal:1 + x3^2\n",
            "custom",
        )
        .unwrap();
        assert_eq!(m.dim(), 3);
        assert!(parse_interval("0,inf").unwrap().hi.is_infinite());
        assert!(parse_interval("1,0").is_err());
    }
}
