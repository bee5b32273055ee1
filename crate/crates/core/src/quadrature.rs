//! One-dimensional integration over `(0, ∞)` and over spheres.
//!
//! Half-line integrals are taken in the logarithmic variable `r = e^t`, which
//! turns the power-law behaviour of homogeneous integrands at both ends into
//! exponential decay. The `t` line is split at `t = 0` (that is `r = 1`, the
//! diagonal when the first argument sits on the unit sphere) and each half
//! is handled separately, so jumps or singularities on the diagonal sit at
//! an endpoint.

use std::cell::RefCell;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::sphere_area;

/// Largest log-radius ever evaluated; keeps `e^t` finite.
const T_MAX: f64 = 700.0;
/// Lower end of the exp-sinh abscissa range (`t ≈ 1e-227`).
const X_LO: f64 = -6.5;
/// Terms below this fraction of the running total count as a decayed tail.
const TAIL_EPS: f64 = 1e-17;
const MIN_LEVEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DoubleExponential,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_level: usize,
    /// Partial sums beyond this magnitude are reported as divergent.
    pub divergence_bound: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            method: Method::DoubleExponential,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_level: 12,
            divergence_bound: 1e12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Usage(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_level < MIN_LEVEL {
            return Err(Error::Usage(format!(
                "max_level must be at least {MIN_LEVEL}, got {}",
                self.max_level
            )));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::Usage("divergence bound must be positive".into()));
        }
        Ok(())
    }

    fn accept(&self, delta: f64, value: f64) -> bool {
        delta <= (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad {
    pub value: f64,
    pub err_est: f64,
}

impl Quad {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            err_est: 0.0,
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `∫_0^∞ f(r) dr`.
pub fn integrate_halfline<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Quad> {
    spec.validate()?;
    // r ∈ (1, ∞) and r ∈ (0, 1) as functions of |t|
    let upper = |t: f64| {
        let r = t.exp();
        f(r) * r
    };
    let lower = |t: f64| {
        let r = (-t).exp();
        f(r) * r
    };
    let (a, b) = match spec.method {
        Method::DoubleExponential => (exp_sinh(&upper, spec)?, exp_sinh(&lower, spec)?),
        Method::GaussLegendre => (gl_halfline(&upper, spec)?, gl_halfline(&lower, spec)?),
    };
    Ok(Quad {
        value: a.value + b.value,
        err_est: a.err_est + b.err_est,
    })
}

/// `∫_{S^{n-1}} g(⟨e_1, σ⟩) dσ`.
///
/// For `n = 1` the sphere is `{±1}` and the result is `g(1) + g(-1)`. For
/// `n ≥ 2` the integral reduces to `ω_{n-2} ∫_{-1}^{1} g(c)(1-c²)^{(n-3)/2} dc`;
/// each half of `[-1, 1]` is mapped onto `(0, ∞)` by `c = r/(1+r)`, which
/// moves the weight singularity at `c = ±1` to a power-law tail.
pub fn integrate_angular<G: Fn(f64) -> f64>(g: G, n: usize, spec: &QuadratureSpec) -> Result<Quad> {
    if n == 0 {
        return Err(Error::Domain("sphere dimension must be at least 1".into()));
    }
    if n == 1 {
        let v = g(1.0) + g(-1.0);
        if v.is_nan() {
            return Err(Error::Evaluation("angular integrand returned NaN".into()));
        }
        return Ok(Quad::exact(v));
    }
    let scale = sphere_area(n - 1)?;
    let alpha = (n as f64 - 3.0) / 2.0;
    let q = integrate_halfline(
        |r| {
            let d = 1.0 + r;
            let c = r / d;
            let one_minus_c = 1.0 / d;
            let one_plus_c = (1.0 + 2.0 * r) / d;
            let w = if alpha == 0.0 {
                1.0
            } else {
                (one_minus_c * one_plus_c).powf(alpha)
            };
            (g(c) + g(-c)) * w * one_minus_c * one_minus_c
        },
        spec,
    )?;
    Ok(Quad {
        value: scale * q.value,
        err_est: scale * q.err_est,
    })
}

/// Runs `body` with a slot for the first error raised inside an integrand.
///
/// Integrands return plain `f64`; nested computations that can fail record
/// their error here and return NaN, and the stored error takes precedence
/// over whatever the outer integrator reports.
pub fn with_error_slot<T>(body: impl FnOnce(&dyn Fn(Error) -> f64) -> Result<T>) -> Result<T> {
    let slot: RefCell<Option<Error>> = RefCell::new(None);
    let record = |e: Error| {
        let mut s = slot.borrow_mut();
        if s.is_none() {
            *s = Some(e);
        }
        f64::NAN
    };
    let out = body(&record);
    if let Some(e) = slot.into_inner() {
        return Err(e);
    }
    out
}

// ---------------------------------------------------------------------------
// double exponential (exp-sinh) on (0, ∞)

#[derive(Debug, Clone, Copy)]
struct Node {
    t: f64,
    dt: f64,
}

fn exp_sinh_node(x: f64) -> Node {
    let u = FRAC_PI_2 * x.sinh();
    let t = u.exp();
    Node {
        t,
        dt: t * FRAC_PI_2 * x.cosh(),
    }
}

fn x_hi() -> f64 {
    (T_MAX.ln() / FRAC_PI_2).asinh()
}

/// State of one outward sweep (positive or negative abscissae).
struct Sweep {
    /// Abscissa beyond which nodes are no longer evaluated.
    cut: f64,
    /// Magnitude of the outermost term evaluated at the latest level.
    edge_term: f64,
}

fn exp_sinh<G: Fn(f64) -> f64>(g: &G, spec: &QuadratureSpec) -> Result<Quad> {
    let hi = x_hi();
    let mut sweeps = [
        Sweep {
            cut: hi,
            edge_term: 0.0,
        },
        Sweep {
            cut: -X_LO,
            edge_term: 0.0,
        },
    ];
    let mut prev: Option<f64> = None;
    let mut total = CompensatedSum::default();
    let mut last_delta = f64::INFINITY;

    for level in 0..=spec.max_level {
        let h = 0.5f64.powi(level as i32);
        let mut fresh = CompensatedSum::default();
        let reference = prev.map_or(0.0, f64::abs);

        if level == 0 {
            let v = g(exp_sinh_node(0.0).t) * exp_sinh_node(0.0).dt;
            if !v.is_finite() {
                return Err(Error::DivergenceSuspected(
                    "integrand not finite at the centre node".into(),
                ));
            }
            fresh.add(v);
        }
        for (dir, sweep) in sweeps.iter_mut().enumerate() {
            let sign = if dir == 0 { 1.0 } else { -1.0 };
            let (start, stride) = if level == 0 { (1usize, 1usize) } else { (1, 2) };
            let mut j = start;
            let mut last_finite = 0.0f64;
            loop {
                let x = sign * j as f64 * h;
                if x.abs() > sweep.cut {
                    break;
                }
                let node = exp_sinh_node(x);
                let v = g(node.t);
                let term = v * node.dt;
                if !term.is_finite() {
                    let scale = reference.max(fresh.value().abs());
                    if scale > 0.0 && last_finite.abs() <= TAIL_EPS * scale {
                        // decayed tail running into overflow; truncate here
                        sweep.cut = x.abs() - h * 0.5;
                        break;
                    }
                    return Err(Error::DivergenceSuspected(format!(
                        "integrand not finite at t = {:e} before its tail decayed",
                        node.t
                    )));
                }
                fresh.add(term);
                last_finite = term;
                if fresh.value().abs() * h > spec.divergence_bound {
                    return Err(Error::DivergenceSuspected(format!(
                        "partial sum exceeded {:e}",
                        spec.divergence_bound
                    )));
                }
                j += stride;
            }
            sweep.edge_term = last_finite.abs();
        }

        let value = match prev {
            None => {
                total = fresh;
                total.value() * h
            }
            Some(_) => {
                total.add(fresh.value());
                total.value() * h
            }
        };
        if !value.is_finite() || value.abs() > spec.divergence_bound {
            return Err(Error::DivergenceSuspected(format!(
                "integral estimate {value:e} exceeds bound"
            )));
        }
        if let Some(p) = prev {
            last_delta = (value - p).abs();
            if level >= MIN_LEVEL && spec.accept(last_delta, value) {
                check_tails(&sweeps, value, h, spec)?;
                return Ok(Quad {
                    value,
                    err_est: last_delta,
                });
            }
        }
        prev = Some(value);
    }
    Err(Error::DivergenceSuspected(format!(
        "refinement did not contract to tolerance after {} levels (last change {last_delta:e})",
        spec.max_level
    )))
}

fn check_tails(sweeps: &[Sweep; 2], value: f64, h: f64, spec: &QuadratureSpec) -> Result<()> {
    for s in sweeps {
        let contribution = s.edge_term * h;
        if !spec.accept(contribution, value) {
            return Err(Error::DivergenceSuspected(format!(
                "integrand still contributes {contribution:e} at the truncation boundary"
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// adaptive-panel Gauss–Legendre on (0, ∞)

const GL_ORDER: usize = 10;

fn gauss_legendre_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut xs = [0.0; GL_ORDER];
        let mut ws = [0.0; GL_ORDER];
        for i in 0..n {
            // Newton iteration from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            xs[i] = x;
            ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

fn gl_panel<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    let (xs, ws) = gauss_legendre_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let acc: CompensatedSum = xs
        .iter()
        .zip(ws)
        .map(|(x, w)| w * g(mid + half * x))
        .collect();
    half * acc.value()
}

fn gl_halfline<G: Fn(f64) -> f64>(g: &G, spec: &QuadratureSpec) -> Result<Quad> {
    // effective upper end: last doubling point before the integrand overflows
    let mut t_end = 1.0;
    loop {
        let next = (t_end * 2.0f64).min(T_MAX);
        if !g(next).is_finite() || next == t_end {
            break;
        }
        t_end = next;
    }
    // t = u / (1 - u) on u ∈ (0, u_end)
    let u_end = t_end / (1.0 + t_end);
    let mapped = |u: f64| {
        let d = 1.0 - u;
        g(u / d) / (d * d)
    };
    let panels = 16usize;
    let width = u_end / panels as f64;
    let coarse: Vec<(f64, f64, f64)> = (0..panels)
        .map(|i| {
            let a = i as f64 * width;
            let b = a + width;
            (a, b, gl_panel(&mapped, a, b))
        })
        .collect();
    let rough: f64 = coarse.iter().map(|p| p.2).sum();
    if !rough.is_finite() {
        return Err(Error::DivergenceSuspected(
            "integrand not finite inside the integration range".into(),
        ));
    }
    let max_depth = 4 * spec.max_level;
    let mut stack: Vec<(f64, f64, f64, usize)> = coarse
        .into_iter()
        .rev()
        .map(|(a, b, q)| (a, b, q, 0))
        .collect();
    let mut total = CompensatedSum::default();
    let mut err = 0.0;
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = gl_panel(&mapped, a, m);
        let right = gl_panel(&mapped, m, b);
        let refined = left + right;
        if !refined.is_finite() {
            return Err(Error::DivergenceSuspected(
                "integrand not finite inside the integration range".into(),
            ));
        }
        let delta = (refined - whole).abs();
        let share = (b - a) / u_end;
        let budget = (spec.rel_tol * rough.abs()).max(spec.abs_tol) * share;
        if delta <= budget {
            total.add(refined);
            err += delta;
        } else if depth >= max_depth {
            return Err(Error::DivergenceSuspected(format!(
                "panel refinement did not contract near t = {:e}",
                m / (1.0 - m)
            )));
        } else {
            stack.push((m, b, right, depth + 1));
            stack.push((a, m, left, depth + 1));
        }
        if total.value().abs() > spec.divergence_bound {
            return Err(Error::DivergenceSuspected(format!(
                "partial sum exceeded {:e}",
                spec.divergence_bound
            )));
        }
    }
    let value = total.value();
    let tail = g(t_end).abs() * t_end;
    if !spec.accept(tail, value) {
        return Err(Error::DivergenceSuspected(format!(
            "integrand still contributes {tail:e} at the truncation boundary"
        )));
    }
    Ok(Quad {
        value,
        err_est: err,
    })
}
