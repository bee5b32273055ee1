//! The multiplicative group `G = (0, ∞)^m` with Haar measure `dx / (x_1 ⋯ x_m)`,
//! and the per-factor kernel `H_i` whose `L^1(G)` norm is the sharp constant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{FactorKernel, ProductKernel};
use crate::quadrature::{integrate_halfline, with_error_slot, Quad, QuadratureSpec};
use crate::sharp_constant::{
    propagate_product_error, sphere_average, Convention, LebesgueExponent,
};

/// Product of open intervals `(c_i, d_i)` with `0 ≤ c_i < d_i ≤ ∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarBox {
    intervals: Vec<(f64, f64)>,
}

impl HaarBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Usage("a box needs at least one interval".into()));
        }
        for &(c, d) in &intervals {
            if !(c >= 0.0 && c < d) || d.is_nan() {
                return Err(Error::Usage(format!(
                    "invalid interval ({c}, {d}); need 0 <= c < d <= inf"
                )));
            }
        }
        Ok(Self { intervals })
    }

    /// The exhausting box `(1/k, k)^m`.
    pub fn symmetric(k: f64, m: usize) -> Result<Self> {
        Self::new(vec![(1.0 / k, k); m])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_finite(&self) -> bool {
        self.intervals
            .iter()
            .all(|&(c, d)| c > 0.0 && d.is_finite())
    }
}

/// `μ(A) = ∏ ln(d_i / c_i)`, infinite when an interval touches `0` or `∞`.
pub fn haar_measure(b: &HaarBox) -> f64 {
    if !b.is_finite() {
        return f64::INFINITY;
    }
    b.intervals.iter().map(|&(c, d)| (d / c).ln()).product()
}

/// Left translate `cA`.
pub fn scale_box(b: &HaarBox, c: &[f64]) -> Result<HaarBox> {
    if c.len() != b.intervals.len() {
        return Err(Error::Usage(format!(
            "scaling point has {} coordinates, box has {}",
            c.len(),
            b.intervals.len()
        )));
    }
    if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Usage("scaling point must lie in (0, ∞)^m".into()));
    }
    HaarBox::new(
        b.intervals
            .iter()
            .zip(c)
            .map(|(&(lo, hi), &s)| (s * lo, s * hi))
            .collect(),
    )
}

/// `A^{-1} = { x^{-1} : x ∈ A }`, using `1/0 = ∞` and `1/∞ = 0`.
pub fn invert_box(b: &HaarBox) -> HaarBox {
    let inv = |v: f64| {
        if v == 0.0 {
            f64::INFINITY
        } else {
            1.0 / v
        }
    };
    HaarBox {
        intervals: b
            .intervals
            .iter()
            .map(|&(lo, hi)| (inv(hi), inv(lo)))
            .collect(),
    }
}

/// One factor `H_i(t) = t^{n_i/p'} ∫_{S^{n_i-1}} κ_i(1, t, c) dσ`.
#[derive(Debug, Clone)]
pub struct HFactor {
    pub kernel: FactorKernel,
    /// Power of `t` in front of the sphere average.
    pub power: f64,
}

/// `H(t_1, …, t_m) = ∏ H_i(t_i)`, stored factor by factor.
#[derive(Debug, Clone)]
pub struct HKernel {
    pub p: LebesgueExponent,
    pub convention: Convention,
    pub spec: QuadratureSpec,
    factors: Vec<HFactor>,
}

/// Log-radius beyond which `H_i(e^τ)` is taken as zero; `e^τ` overflows soon after.
const LOG_CUTOFF: f64 = 600.0;

impl HKernel {
    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[HFactor] {
        &self.factors
    }

    /// `H_i(t)` for `t > 0`.
    pub fn eval_factor(&self, i: usize, t: f64) -> Result<f64> {
        let f = &self.factors[i];
        if t == 0.0 {
            return Ok(0.0);
        }
        let a = sphere_average(&f.kernel, t, &self.spec)?;
        if a == 0.0 {
            // also covers t^power overflowing in the decayed tail
            return Ok(0.0);
        }
        let v = t.powf(f.power) * a;
        if v.is_nan() {
            return Err(Error::Evaluation(format!(
                "H kernel of `{}` is NaN at t = {t}",
                f.kernel.name
            )));
        }
        Ok(v)
    }

    /// `H̃_i(τ) = H_i(e^τ)`, the kernel in additive log coordinates.
    pub fn eval_log(&self, i: usize, tau: f64) -> Result<f64> {
        if tau.abs() > LOG_CUTOFF {
            return Ok(0.0);
        }
        self.eval_factor(i, tau.exp())
    }

    /// `H(t_1, …, t_m)`.
    pub fn eval(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.m() {
            return Err(Error::Usage(format!(
                "H takes {} arguments, got {}",
                self.m(),
                t.len()
            )));
        }
        let mut acc = 1.0;
        for (i, &ti) in t.iter().enumerate() {
            acc *= self.eval_factor(i, ti)?;
        }
        Ok(acc)
    }
}

pub fn build_h(kernel: &ProductKernel, p: LebesgueExponent) -> Result<HKernel> {
    build_h_with(kernel, p, Convention::Operator, QuadratureSpec::default())
}

pub fn build_h_with(
    kernel: &ProductKernel,
    p: LebesgueExponent,
    convention: Convention,
    spec: QuadratureSpec,
) -> Result<HKernel> {
    spec.validate()?;
    let factors = kernel
        .factors()
        .iter()
        .map(|k| HFactor {
            kernel: k.clone(),
            power: k.n as f64 * (1.0 - convention.weight(p)),
        })
        .collect();
    Ok(HKernel {
        p,
        convention,
        spec,
        factors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarNorm {
    pub per_factor: Vec<Quad>,
    pub value: f64,
    pub err_est: f64,
}

/// `‖H‖_{L^1(G)} = ∏_i ∫_0^∞ H_i(t) dt/t`.
pub fn h_l1_norm(h: &HKernel, spec: &QuadratureSpec) -> Result<HaarNorm> {
    let mut per_factor = Vec::with_capacity(h.m());
    for i in 0..h.m() {
        let q = with_error_slot(|fail| {
            integrate_halfline(
                |t| match h.eval_factor(i, t) {
                    Ok(v) => v / t,
                    Err(e) => fail(e),
                },
                spec,
            )
        })?;
        per_factor.push(q);
    }
    let value: f64 = per_factor.iter().map(|q| q.value).product();
    let err_est = propagate_product_error(&per_factor, value);
    Ok(HaarNorm {
        per_factor,
        value,
        err_est,
    })
}

/// Relative slack allowed for boxes whose endpoint ratios are not exactly representable.
pub const INVARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub seed: u64,
    pub count: usize,
    /// Dyadic boxes and scalings: ratios are exact, so equality must be bitwise.
    pub dyadic_failures: usize,
    /// Generic real boxes, compared up to [`INVARIANCE_TOL`].
    pub generic_failures: usize,
    pub max_scaling_deviation: f64,
    pub max_inversion_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn rel_dev(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Scaling and inversion invariance of [`haar_measure`] on `count` seeded
/// random boxes of each kind, in dimensions 1 to 3.
pub fn invariance_suite(seed: u64, count: usize) -> Result<InvarianceReport> {
    if count == 0 {
        return Err(Error::Usage("count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dyadic_failures = 0;
    let mut generic_failures = 0;
    let mut max_scaling: f64 = 0.0;
    let mut max_inversion: f64 = 0.0;
    let dyadic = |rng: &mut ChaCha8Rng| 2f64.powi(rng.gen_range(-20..20));
    for _ in 0..count {
        let m = rng.gen_range(1..=3);
        let b = HaarBox::new(
            (0..m)
                .map(|_| {
                    let c = dyadic(&mut rng) * rng.gen_range(1..8) as f64;
                    (c, c * 2f64.powi(rng.gen_range(1..30)))
                })
                .collect(),
        )?;
        let s: Vec<f64> = (0..m).map(|_| dyadic(&mut rng)).collect();
        let mu = haar_measure(&b);
        let scaled = haar_measure(&scale_box(&b, &s)?);
        // 1/c is exact only for powers of two, so inversion is held to the tolerance
        let inverted = haar_measure(&invert_box(&b));
        if scaled != mu || rel_dev(inverted, mu) > INVARIANCE_TOL {
            dyadic_failures += 1;
        }
        max_scaling = max_scaling.max(rel_dev(scaled, mu));
        max_inversion = max_inversion.max(rel_dev(inverted, mu));

        let g = HaarBox::new(
            (0..m)
                .map(|_| {
                    let c = rng.gen_range(1e-3..10.0);
                    (c, c + rng.gen_range(1e-2..100.0))
                })
                .collect(),
        )?;
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(1e-3..1e3)).collect();
        let mu = haar_measure(&g);
        let ds = rel_dev(haar_measure(&scale_box(&g, &s)?), mu);
        let di = rel_dev(haar_measure(&invert_box(&g)), mu);
        if ds > INVARIANCE_TOL || di > INVARIANCE_TOL {
            generic_failures += 1;
        }
        max_scaling = max_scaling.max(ds);
        max_inversion = max_inversion.max(di);
    }
    Ok(InvarianceReport {
        seed,
        count,
        dyadic_failures,
        generic_failures,
        max_scaling_deviation: max_scaling,
        max_inversion_deviation: max_inversion,
        tolerance: INVARIANCE_TOL,
        pass: dyadic_failures == 0 && generic_failures == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn p2() -> LebesgueExponent {
        LebesgueExponent::new(2.0).unwrap()
    }

    #[test]
    fn measure_examples() {
        let b = HaarBox::new(vec![(1.0, 2.0), (1.0, 2.0)]).unwrap();
        assert!((haar_measure(&b) - LN_2 * LN_2).abs() < 1e-16);
        let b = HaarBox::new(vec![(1.0, std::f64::consts::E)]).unwrap();
        assert!((haar_measure(&b) - 1.0).abs() < 1e-16);
        let b = HaarBox::new(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(haar_measure(&b), f64::INFINITY);
        let b = HaarBox::new(vec![(1.0, f64::INFINITY)]).unwrap();
        assert_eq!(haar_measure(&b), f64::INFINITY);
    }

    #[test]
    fn box_validation() {
        assert!(HaarBox::new(vec![]).is_err());
        assert!(HaarBox::new(vec![(2.0, 1.0)]).is_err());
        assert!(HaarBox::new(vec![(-1.0, 1.0)]).is_err());
        assert!(HaarBox::new(vec![(1.0, f64::NAN)]).is_err());
        let b = HaarBox::new(vec![(1.0, 2.0)]).unwrap();
        assert!(scale_box(&b, &[0.0]).is_err());
        assert!(scale_box(&b, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn scale_and_invert_examples() {
        let b = HaarBox::new(vec![(1.0, 2.0)]).unwrap();
        let s = scale_box(&b, &[3.0]).unwrap();
        assert_eq!(s.intervals(), &[(3.0, 6.0)]);
        assert_eq!(haar_measure(&s), LN_2);
        let inv = invert_box(&b);
        assert_eq!(inv.intervals(), &[(0.5, 1.0)]);
        assert_eq!(haar_measure(&inv), LN_2);
        let b = HaarBox::new(vec![(1.0, 2.0), (2.0, 8.0)]).unwrap();
        let inv = invert_box(&b);
        assert_eq!(inv.intervals(), &[(0.5, 1.0), (0.125, 0.5)]);
        assert_eq!(haar_measure(&inv), LN_2 * (4.0f64).ln());
        // 1/0 = ∞ and 1/∞ = 0
        let b = HaarBox::new(vec![(0.0, f64::INFINITY)]).unwrap();
        assert_eq!(invert_box(&b).intervals(), &[(0.0, f64::INFINITY)]);
    }

    #[test]
    fn exhausting_boxes() {
        let mut last = 0.0;
        for k in 2..40 {
            let mu = haar_measure(&HaarBox::symmetric(k as f64, 2).unwrap());
            assert!(mu.is_finite() && mu > last);
            last = mu;
        }
        assert!(last > 50.0);
    }

    #[test]
    fn h_kernel_examples() {
        let h = build_h(&ProductKernel::hilbert(&[1]).unwrap(), p2()).unwrap();
        assert!((h.eval(&[1.0]).unwrap() - 1.0).abs() < 1e-15);
        let t: f64 = 3.0;
        assert!((h.eval_factor(0, t).unwrap() - 2.0 * t.sqrt() / (1.0 + t)).abs() < 1e-15);
        assert!(h.eval_factor(0, 1e-12).unwrap() < 1e-5);
        assert!(h.eval(&[1.0, 2.0]).is_err());

        let h = build_h(&ProductKernel::hardy(&[1]).unwrap(), p2()).unwrap();
        assert_eq!(h.eval(&[4.0]).unwrap(), 0.0);
        assert!((h.eval(&[0.25]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn l1_norm_examples() {
        let spec = QuadratureSpec::default();
        let h = build_h(&ProductKernel::hilbert(&[1]).unwrap(), p2()).unwrap();
        let v = h_l1_norm(&h, &spec).unwrap().value;
        assert!(((v - 2.0 * PI) / (2.0 * PI)).abs() < 1e-10);
        let h = build_h(&ProductKernel::hilbert(&[1, 1]).unwrap(), p2()).unwrap();
        let v = h_l1_norm(&h, &spec).unwrap().value;
        assert!(((v - 4.0 * PI * PI) / (4.0 * PI * PI)).abs() < 1e-10);
        let h = build_h(&ProductKernel::hardy(&[1]).unwrap(), p2()).unwrap();
        let v = h_l1_norm(&h, &spec).unwrap().value;
        assert!((v - 4.0).abs() < 1e-10);
    }

    #[test]
    fn invariance_suite_passes_and_is_seeded() {
        let a = invariance_suite(3, 100).unwrap();
        assert!(a.pass, "{a:?}");
        assert_eq!(a, invariance_suite(3, 100).unwrap());
        assert!(invariance_suite(3, 0).is_err());
    }
}
