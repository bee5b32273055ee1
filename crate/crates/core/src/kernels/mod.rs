//! Homogeneous, rotation-invariant kernels and their product form.
//!
//! A factor kernel `K(x, y)` on `R^n` is stored through its radial-angular
//! profile `κ(s, r, c)` where `s = |x|`, `r = |y|` and `c` is the cosine of
//! the angle between `x` and `y`. Any kernel written this way is invariant
//! under simultaneous rotation of both arguments.

mod expr;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use expr::{parse_expr, Expr, ParseError};

/// Relative residual accepted by [`check_homogeneity`].
pub const HOMOGENEITY_TOL: f64 = 1e-10;

/// The radial-angular profile of a factor kernel.
#[derive(Clone)]
pub enum Profile {
    /// `1 / (s^n + r^n)`.
    Hilbert,
    /// `s^{-n} · 1{r ≤ s}`.
    Hardy,
    /// User expression in `s`, `r`, `c`.
    Custom(Arc<Expr>),
    /// `λ · κ`.
    Scaled(f64, Arc<Profile>),
}

impl Profile {
    pub fn eval(&self, n: usize, s: f64, r: f64, c: f64) -> f64 {
        match self {
            Profile::Hilbert => 1.0 / (pow_dim(s, n) + pow_dim(r, n)),
            Profile::Hardy => {
                if r <= s {
                    1.0 / pow_dim(s, n)
                } else {
                    0.0
                }
            }
            Profile::Custom(e) => e.eval(s, r, c),
            Profile::Scaled(lambda, inner) => lambda * inner.eval(n, s, r, c),
        }
    }

    /// False when the profile is known not to depend on `c`.
    pub fn uses_angle(&self) -> bool {
        match self {
            Profile::Hilbert | Profile::Hardy => false,
            Profile::Custom(e) => e.uses_angle(),
            Profile::Scaled(_, inner) => inner.uses_angle(),
        }
    }

    /// True when the profile is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Custom(e) => matches!(**e, Expr::Num(v) if v == 0.0),
            Profile::Scaled(lambda, inner) => *lambda == 0.0 || inner.is_zero(),
            _ => false,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Hilbert => f.write_str("Hilbert"),
            Profile::Hardy => f.write_str("Hardy"),
            Profile::Custom(e) => write!(f, "Custom({e})"),
            Profile::Scaled(l, inner) => write!(f, "Scaled({l}, {inner:?})"),
        }
    }
}

fn pow_dim(x: f64, n: usize) -> f64 {
    x.powi(n as i32)
}

/// One factor `K(x_i, y_i)` of a product kernel, acting on `R^n`.
#[derive(Debug, Clone)]
pub struct FactorKernel {
    pub n: usize,
    pub profile: Profile,
    pub name: String,
    /// Set when `κ(1, r, c)` blows up as `(r, c) → (1, 1)`.
    pub diagonal_singular: bool,
}

impl FactorKernel {
    pub fn new(n: usize, profile: Profile, name: impl Into<String>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Usage("factor dimension must be at least 1".into()));
        }
        Ok(Self {
            n,
            profile,
            name: name.into(),
            diagonal_singular: false,
        })
    }

    /// `K(x, y) = 1/(|x|^n + |y|^n)`.
    pub fn hilbert(n: usize) -> Result<Self> {
        Self::new(n, Profile::Hilbert, format!("hilbert{n}"))
    }

    /// `K(x, y) = |x|^{-n} 1{|y| ≤ |x|}`.
    pub fn hardy(n: usize) -> Result<Self> {
        Self::new(n, Profile::Hardy, format!("hardy{n}"))
    }

    pub fn custom(n: usize, text: &str) -> Result<Self> {
        let e = parse_expr(text)?;
        Self::new(n, Profile::Custom(Arc::new(e)), format!("custom{n}"))
    }

    pub fn with_diagonal_singular(mut self, flag: bool) -> Self {
        self.diagonal_singular = flag;
        self
    }

    /// Same kernel multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            n: self.n,
            profile: Profile::Scaled(lambda, Arc::new(self.profile.clone())),
            name: format!("{}*{lambda}", self.name),
            diagonal_singular: self.diagonal_singular,
        }
    }

    #[inline]
    pub fn profile_at(&self, s: f64, r: f64, c: f64) -> f64 {
        self.profile.eval(self.n, s, r, c)
    }
}

/// Evaluates `K(x, y)` at two points of `R^n`.
pub fn eval_factor(k: &FactorKernel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != k.n || y.len() != k.n {
        return Err(Error::Usage(format!(
            "kernel `{}` acts on R^{}, got points of dimension {} and {}",
            k.name,
            k.n,
            x.len(),
            y.len()
        )));
    }
    let s = norm(x);
    let r = norm(y);
    let c = if s == 0.0 || r == 0.0 {
        0.0
    } else {
        let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (dot / (s * r)).clamp(-1.0, 1.0)
    };
    let v = k.profile_at(s, r, c);
    if v.is_nan() {
        return Err(Error::Evaluation(format!(
            "kernel `{}` returned NaN at s={s}, r={r}, c={c}",
            k.name
        )));
    }
    Ok(v)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub samples: usize,
    pub max_residual: f64,
    /// Sample `(s, r, c, δ)` attaining the maximum residual.
    pub worst: [f64; 4],
    pub passed: bool,
}

/// Samples `κ(δs, δr, c)` against `δ^{-n} κ(s, r, c)` at seeded random points.
///
/// Radii and `δ` are drawn log-uniformly from `[e^-3, e^3]`, `c` uniformly
/// from `[-1, 1]`.
pub fn check_homogeneity(k: &FactorKernel, sample_count: usize, seed: u64) -> HomogeneityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = HomogeneityReport {
        samples: sample_count,
        max_residual: 0.0,
        worst: [0.0; 4],
        passed: true,
    };
    for _ in 0..sample_count {
        let s = rng.gen_range(-3.0f64..3.0).exp();
        let r = rng.gen_range(-3.0f64..3.0).exp();
        let c = rng.gen_range(-1.0f64..=1.0);
        let delta = rng.gen_range(-3.0f64..3.0).exp();
        let res = homogeneity_residual(k, s, r, c, delta);
        if !(res <= report.max_residual) {
            report.max_residual = res;
            report.worst = [s, r, c, delta];
        }
    }
    report.passed = report.max_residual <= HOMOGENEITY_TOL;
    report
}

/// Relative residual of the degree `-n` homogeneity relation at one sample.
pub fn homogeneity_residual(k: &FactorKernel, s: f64, r: f64, c: f64, delta: f64) -> f64 {
    let scaled = k.profile_at(delta * s, delta * r, c);
    let expected = delta.powi(-(k.n as i32)) * k.profile_at(s, r, c);
    if scaled.is_nan() || expected.is_nan() {
        return f64::INFINITY;
    }
    if scaled == expected {
        return 0.0;
    }
    if expected == 0.0 {
        return f64::INFINITY;
    }
    ((scaled - expected) / expected).abs()
}

/// Ordered product `K(x_1, y_1) ⋯ K(x_m, y_m)` with `m ≥ 1`.
#[derive(Debug, Clone)]
pub struct ProductKernel {
    factors: Vec<FactorKernel>,
}

impl ProductKernel {
    pub fn new(factors: Vec<FactorKernel>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Usage(
                "a product kernel needs at least one factor".into(),
            ));
        }
        Ok(Self { factors })
    }

    pub fn hilbert(dims: &[usize]) -> Result<Self> {
        Self::new(
            dims.iter()
                .map(|&n| FactorKernel::hilbert(n))
                .collect::<Result<_>>()?,
        )
    }

    pub fn hardy(dims: &[usize]) -> Result<Self> {
        Self::new(
            dims.iter()
                .map(|&n| FactorKernel::hardy(n))
                .collect::<Result<_>>()?,
        )
    }

    pub fn factors(&self) -> &[FactorKernel] {
        &self.factors
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.n).collect()
    }

    /// Evaluates the product kernel at block points `x = (x_1..x_m)`, `y = (y_1..y_m)`.
    pub fn eval(&self, x: &[&[f64]], y: &[&[f64]]) -> Result<f64> {
        if x.len() != self.m() || y.len() != self.m() {
            return Err(Error::Usage(format!(
                "product kernel has {} factors, got {} and {} blocks",
                self.m(),
                x.len(),
                y.len()
            )));
        }
        let mut acc = 1.0;
        for ((k, xi), yi) in self.factors.iter().zip(x).zip(y) {
            acc *= eval_factor(k, xi, yi)?;
        }
        Ok(acc)
    }

    /// Parses the kernel specification file format.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: KernelSpec = serde_json::from_str(text)
            .map_err(|e| Error::Usage(format!("invalid kernel specification: {e}")))?;
        spec.build()
    }
}

/// Kind of factor in a kernel specification file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorType {
    Hilbert,
    Hardy,
    Custom,
}

/// One entry of a kernel specification file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub n: usize,
    #[serde(rename = "type")]
    pub kind: FactorType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal_singular: Option<bool>,
}

/// `{ "factors": [ { "n": .., "type": .., "profile": .. } ] }`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub factors: Vec<FactorSpec>,
}

impl FactorSpec {
    pub fn build(&self) -> Result<FactorKernel> {
        let k = match (self.kind, &self.profile) {
            (FactorType::Custom, Some(p)) => FactorKernel::custom(self.n, p)?,
            (FactorType::Custom, None) => {
                return Err(Error::Usage("custom factor requires a \"profile\"".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Usage(
                    "\"profile\" is only allowed for custom factors".into(),
                ))
            }
            (FactorType::Hilbert, None) => FactorKernel::hilbert(self.n)?,
            (FactorType::Hardy, None) => FactorKernel::hardy(self.n)?,
        };
        Ok(k.with_diagonal_singular(self.diagonal_singular.unwrap_or(false)))
    }
}

impl KernelSpec {
    pub fn build(&self) -> Result<ProductKernel> {
        ProductKernel::new(
            self.factors
                .iter()
                .map(FactorSpec::build)
                .collect::<Result<_>>()?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_builtin_factors() {
        let h1 = FactorKernel::hilbert(1).unwrap();
        assert!((eval_factor(&h1, &[1.0], &[2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let h2 = FactorKernel::hilbert(2).unwrap();
        assert!((eval_factor(&h2, &[1.0, 0.0], &[0.0, 2.0]).unwrap() - 0.2).abs() < 1e-16);
        let hardy = FactorKernel::hardy(1).unwrap();
        assert_eq!(eval_factor(&hardy, &[2.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(eval_factor(&hardy, &[1.0], &[2.0]).unwrap(), 0.0);
        // negative coordinates only enter through |y|
        assert_eq!(eval_factor(&hardy, &[-2.0], &[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn eval_errors() {
        let h2 = FactorKernel::hilbert(2).unwrap();
        assert!(matches!(
            eval_factor(&h2, &[1.0], &[1.0, 0.0]),
            Err(Error::Usage(_))
        ));
        let bad = FactorKernel::custom(1, "log(c - 2)").unwrap();
        assert!(matches!(
            eval_factor(&bad, &[1.0], &[1.0]),
            Err(Error::Evaluation(_))
        ));
        assert!(FactorKernel::hilbert(0).is_err());
    }

    #[test]
    fn origin_uses_zero_cosine() {
        let k = FactorKernel::custom(2, "c + 1").unwrap();
        assert_eq!(eval_factor(&k, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn homogeneity_builtins_pass() {
        for n in 1..=4 {
            for k in [
                FactorKernel::hilbert(n).unwrap(),
                FactorKernel::hardy(n).unwrap(),
            ] {
                let rep = check_homogeneity(&k, 2000, 11);
                assert!(rep.max_residual <= 1e-14, "{} {:?}", k.name, rep);
                assert!(rep.passed);
            }
        }
    }

    #[test]
    fn homogeneity_detects_inhomogeneous_profile() {
        let k = FactorKernel::custom(1, "1/(s+r^2)").unwrap();
        // κ(4,4) = 1/20, δ^{-1}κ(2,2) = 1/12: residual 0.4
        let res = homogeneity_residual(&k, 2.0, 2.0, 0.0, 2.0);
        assert!((res - 0.4).abs() < 1e-14);
        let rep = check_homogeneity(&k, 100, 3);
        assert!(!rep.passed);
        assert!(rep.max_residual > 0.1);
    }

    #[test]
    fn product_kernel_eval() {
        let k = ProductKernel::hilbert(&[1, 2]).unwrap();
        let v = k
            .eval(&[&[1.0], &[1.0, 0.0]], &[&[2.0], &[0.0, 2.0]])
            .unwrap();
        assert!((v - 0.2 / 3.0).abs() < 1e-16);
        assert!(k.eval(&[&[1.0]], &[&[2.0]]).is_err());
        assert!(ProductKernel::new(vec![]).is_err());
    }

    #[test]
    fn kernel_file_parsing() {
        let k = ProductKernel::from_json(
            r#"{"factors":[{"n":1,"type":"hilbert"},{"n":2,"type":"custom","profile":"1/(s^2+r^2)"}]}"#,
        )
        .unwrap();
        assert_eq!(k.dims(), vec![1, 2]);
        assert!(ProductKernel::from_json(r#"{"factors":[{"n":1,"type":"custom"}]}"#).is_err());
        assert!(ProductKernel::from_json(
            r#"{"factors":[{"n":1,"type":"hardy","profile":"1/s"}]}"#
        )
        .is_err());
        assert!(ProductKernel::from_json(r#"{"factors":[]}"#).is_err());
        assert!(ProductKernel::from_json(r#"{"factors":[{"n":1,"type":"riesz"}]}"#).is_err());
        let err =
            ProductKernel::from_json(r#"{"factors":[{"n":1,"type":"custom","profile":"1/(s+"}]}"#)
                .unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
