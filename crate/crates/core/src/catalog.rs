//! Named conductivities, boundary data and div-curl sources used by the
//! command line and the verification suites.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Vec3;

fn config_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Closed-form conductivity factors `f` (the conductivity is `f^2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConductivitySpec {
    /// `f = c`.
    Constant(f64),
    /// `f = 1 + |x|^2`.
    RadialQuadratic,
    /// `f = exp(a x3)`.
    ExpLinear(f64),
    /// `f = 1 + x3 / n`.
    Linear(f64),
}

impl ConductivitySpec {
    pub fn value(&self, x: &Vec3) -> f64 {
        match *self {
            ConductivitySpec::Constant(c) => c,
            ConductivitySpec::RadialQuadratic => 1.0 + x.norm_squared(),
            ConductivitySpec::ExpLinear(a) => (a * x.z).exp(),
            ConductivitySpec::Linear(n) => 1.0 + x.z / n,
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match *self {
            ConductivitySpec::Constant(_) => Vec3::zeros(),
            ConductivitySpec::RadialQuadratic => 2.0 * x,
            ConductivitySpec::ExpLinear(a) => Vec3::z() * (a * (a * x.z).exp()),
            ConductivitySpec::Linear(n) => Vec3::z() / n,
        }
    }

    /// `(f(r), f'(r))` when `f` depends on `|x|` only.
    pub fn radial(&self, r: f64) -> Option<(f64, f64)> {
        match *self {
            ConductivitySpec::Constant(c) => Some((c, 0.0)),
            ConductivitySpec::RadialQuadratic => Some((1.0 + r * r, 2.0 * r)),
            _ => None,
        }
    }

    pub fn is_radial(&self) -> bool {
        self.radial(0.5).is_some()
    }
}

impl fmt::Display for ConductivitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConductivitySpec::Constant(c) => write!(f, "constant:{c}"),
            ConductivitySpec::RadialQuadratic => write!(f, "radial-quadratic"),
            ConductivitySpec::ExpLinear(a) => write!(f, "exp-linear:{a}"),
            ConductivitySpec::Linear(n) => write!(f, "linear:{n}"),
        }
    }
}

fn parse_param(name: &str, param: Option<&str>, default: f64) -> Result<f64> {
    match param {
        None => Ok(default),
        Some(p) => p
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| config_err("f", format!("bad parameter `{p}` for `{name}`"))),
    }
}

impl FromStr for ConductivitySpec {
    type Err = Error;

    /// `constant[:c]`, `radial-quadratic`, `exp-linear[:a]`, `linear[:n]`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let spec = match name {
            "constant" => ConductivitySpec::Constant(parse_param(name, param, 1.0)?),
            "radial-quadratic" => ConductivitySpec::RadialQuadratic,
            "exp-linear" => ConductivitySpec::ExpLinear(parse_param(name, param, 0.5)?),
            "linear" => {
                let n = parse_param(name, param, 1.0)?;
                if n <= 0.0 {
                    return Err(config_err("f", "linear family needs n > 0"));
                }
                ConductivitySpec::Linear(n)
            }
            _ => return Err(config_err("f", format!("unknown conductivity `{s}`"))),
        };
        if matches!(name, "radial-quadratic") && param.is_some() {
            return Err(config_err("f", "radial-quadratic takes no parameter"));
        }
        Ok(spec)
    }
}

impl TryFrom<String> for ConductivitySpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConductivitySpec> for String {
    fn from(c: ConductivitySpec) -> String {
        c.to_string()
    }
}

/// Harmonic polynomials, used as boundary data and as their own harmonic
/// extensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Harmonic {
    #[serde(rename = "const")]
    Const,
    #[serde(rename = "x1")]
    X1,
    #[serde(rename = "x2")]
    X2,
    #[serde(rename = "x3")]
    X3,
    #[serde(rename = "x1x2")]
    X1X2,
    #[serde(rename = "x1x3")]
    X1X3,
    #[serde(rename = "x2x3")]
    X2X3,
    #[serde(rename = "x1^2-x2^2")]
    X1SqMinusX2Sq,
    /// `2 x3^2 - x1^2 - x2^2`, the zonal degree-2 harmonic.
    #[serde(rename = "Y2")]
    Zonal2,
}

const HARMONIC_NAMES: [(&str, Harmonic); 10] = [
    ("const", Harmonic::Const),
    ("x1", Harmonic::X1),
    ("x2", Harmonic::X2),
    ("x3", Harmonic::X3),
    ("Y1", Harmonic::X3),
    ("x1x2", Harmonic::X1X2),
    ("x1x3", Harmonic::X1X3),
    ("x2x3", Harmonic::X2X3),
    ("x1^2-x2^2", Harmonic::X1SqMinusX2Sq),
    ("Y2", Harmonic::Zonal2),
];

impl Harmonic {
    pub fn value(&self, x: &Vec3) -> f64 {
        match self {
            Harmonic::Const => 1.0,
            Harmonic::X1 => x.x,
            Harmonic::X2 => x.y,
            Harmonic::X3 => x.z,
            Harmonic::X1X2 => x.x * x.y,
            Harmonic::X1X3 => x.x * x.z,
            Harmonic::X2X3 => x.y * x.z,
            Harmonic::X1SqMinusX2Sq => x.x * x.x - x.y * x.y,
            Harmonic::Zonal2 => 2.0 * x.z * x.z - x.x * x.x - x.y * x.y,
        }
    }

    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        match self {
            Harmonic::Const => Vec3::zeros(),
            Harmonic::X1 => Vec3::x(),
            Harmonic::X2 => Vec3::y(),
            Harmonic::X3 => Vec3::z(),
            Harmonic::X1X2 => Vec3::new(x.y, x.x, 0.0),
            Harmonic::X1X3 => Vec3::new(x.z, 0.0, x.x),
            Harmonic::X2X3 => Vec3::new(0.0, x.z, x.y),
            Harmonic::X1SqMinusX2Sq => Vec3::new(2.0 * x.x, -2.0 * x.y, 0.0),
            Harmonic::Zonal2 => Vec3::new(-2.0 * x.x, -2.0 * x.y, 4.0 * x.z),
        }
    }

    /// Polynomial degree, which is also the spherical-harmonic degree.
    pub fn degree(&self) -> u32 {
        match self {
            Harmonic::Const => 0,
            Harmonic::X1 | Harmonic::X2 | Harmonic::X3 => 1,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        HARMONIC_NAMES.iter().find(|(_, h)| h == self).map(|(n, _)| *n).unwrap_or("?")
    }
}

impl FromStr for Harmonic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        HARMONIC_NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, h)| *h)
            .ok_or_else(|| config_err("phi", format!("unknown boundary data `{s}`")))
    }
}

/// Right-hand sides of `div w = g0, curl w = g` with a known particular
/// solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivCurlSource {
    /// `g0 = 3, g = 0`, solved by `x`.
    Div3,
    /// `g0 = 0, g = e3`, solved by `(-x2, 0, 0)`.
    CurlE3,
    /// `g0 = 0, g = (-x1, -x2, 2 x3)`, solved by `(-x2 x3, x1 x3, 0)`.
    CurlLinear,
    Zero,
}

impl DivCurlSource {
    pub fn g0(&self, _x: &Vec3) -> f64 {
        match self {
            DivCurlSource::Div3 => 3.0,
            _ => 0.0,
        }
    }

    pub fn g(&self, x: &Vec3) -> Vec3 {
        match self {
            DivCurlSource::CurlE3 => Vec3::z(),
            DivCurlSource::CurlLinear => Vec3::new(-x.x, -x.y, 2.0 * x.z),
            _ => Vec3::zeros(),
        }
    }

    /// A particular solution.
    pub fn solution(&self, x: &Vec3) -> Vec3 {
        match self {
            DivCurlSource::Div3 => *x,
            DivCurlSource::CurlE3 => Vec3::new(-x.y, 0.0, 0.0),
            DivCurlSource::CurlLinear => Vec3::new(-x.y * x.z, x.x * x.z, 0.0),
            DivCurlSource::Zero => Vec3::zeros(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DivCurlSource::Div3 => "div3",
            DivCurlSource::CurlE3 => "curl-e3",
            DivCurlSource::CurlLinear => "curl-linear",
            DivCurlSource::Zero => "zero",
        }
    }
}

impl FromStr for DivCurlSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            DivCurlSource::Div3,
            DivCurlSource::CurlE3,
            DivCurlSource::CurlLinear,
            DivCurlSource::Zero,
        ]
        .into_iter()
        .find(|d| d.name() == s)
        .ok_or_else(|| config_err("source", format!("unknown div-curl source `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian<F: Fn(&Vec3) -> f64>(f: F, x: &Vec3) -> f64 {
        let h = 1e-3;
        (0..3)
            .map(|i| {
                let e = Vec3::ith(i, h);
                (f(&(x + e)) - 2.0 * f(x) + f(&(x - e))) / (h * h)
            })
            .sum()
    }

    #[test]
    fn names_round_trip() {
        for s in ["constant:2", "radial-quadratic", "exp-linear:0.5", "linear:4"] {
            let c: ConductivitySpec = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("linear:0".parse::<ConductivitySpec>().is_err());
        assert!("bogus".parse::<ConductivitySpec>().is_err());
        assert_eq!("Y1".parse::<Harmonic>().unwrap(), Harmonic::X3);
        assert_eq!("curl-e3".parse::<DivCurlSource>().unwrap(), DivCurlSource::CurlE3);
    }

    #[test]
    fn div_curl_solutions_check_out() {
        let h = 1e-5;
        for src in [DivCurlSource::Div3, DivCurlSource::CurlE3, DivCurlSource::CurlLinear, DivCurlSource::Zero] {
            let x = Vec3::new(0.3, -0.2, 0.5);
            let d = |i: usize| {
                let e = Vec3::ith(i, h);
                (src.solution(&(x + e)) - src.solution(&(x - e))) / (2.0 * h)
            };
            let (dx, dy, dz) = (d(0), d(1), d(2));
            let div = dx.x + dy.y + dz.z;
            let curl = Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x);
            assert!((div - src.g0(&x)).abs() < 1e-8, "{src:?}");
            assert!((curl - src.g(&x)).norm() < 1e-8, "{src:?}");
        }
    }

    proptest! {
        #[test]
        fn catalog_polynomials_are_harmonic(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let p = Vec3::new(x, y, z);
            for (_, hm) in HARMONIC_NAMES {
                prop_assert!(laplacian(|q| hm.value(q), &p).abs() < 1e-6);
                let g = hm.gradient(&p);
                for i in 0..3 {
                    let e = Vec3::ith(i, 1e-6);
                    let fd = (hm.value(&(p + e)) - hm.value(&(p - e))) / 2e-6;
                    prop_assert!((fd - g[i]).abs() < 1e-8);
                }
            }
        }

        #[test]
        fn conductivity_gradients_match(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64) {
            let p = Vec3::new(x, y, z);
            for c in [ConductivitySpec::Constant(2.0), ConductivitySpec::RadialQuadratic, ConductivitySpec::ExpLinear(0.7), ConductivitySpec::Linear(2.0)] {
                let g = c.gradient(&p);
                for i in 0..3 {
                    let e = Vec3::ith(i, 1e-6);
                    let fd = (c.value(&(p + e)) - c.value(&(p - e))) / 2e-6;
                    prop_assert!((fd - g[i]).abs() < 1e-7);
                }
            }
        }
    }
}
