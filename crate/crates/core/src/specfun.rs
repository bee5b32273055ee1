//! Gamma, Beta and the surface measure of the unit sphere.
//!
//! Gamma uses the Lanczos approximation with `g = 7` and nine coefficients,
//! evaluated with a split power so the result stays finite up to the
//! overflow threshold. Relative accuracy is around 1e-15 on `[1e-3, 170]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument for which `Γ(x)` is representable as an `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_sum(x: f64) -> f64 {
    // argument is already shifted by one
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "{name} requires a positive argument, got {x}"
        )));
    }
    Ok(())
}

/// `Γ(x)` for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    check_positive("gamma", x)?;
    if x >= GAMMA_MAX_ARG {
        return Err(Error::Range(format!("gamma({x}) overflows f64")));
    }
    if x.fract() == 0.0 && x <= 30.0 {
        // exact factorials while every partial product is representable
        return Ok((2..x as u64).map(|k| k as f64).product());
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps us on the accurate side of the approximation
        return Ok(gamma_unchecked(x + 1.0) / x);
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let half_pow = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half_pow * (half_pow * (-t).exp()) * lanczos_sum(z)
}

/// `ln Γ(x)` for `x > 0`; finite well beyond the range of [`gamma`].
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("ln_gamma", x)?;
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if x < 0.5 {
        return Ok(ln_gamma_unchecked(x + 1.0) - x.ln());
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
///
/// The arguments are ordered before evaluation so `beta(a, b)` and
/// `beta(b, a)` are bitwise identical. When `a + b` is small enough the
/// Gamma values are multiplied directly; otherwise the log-Gamma route is
/// used so large arguments do not overflow.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    check_positive("beta", a)?;
    check_positive("beta", b)?;
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let sum = lo + hi;
    if sum < 100.0 {
        return Ok(gamma(lo)? * (gamma(hi)? / gamma(sum)?));
    }
    Ok((ln_gamma(lo)? + ln_gamma(hi)? - ln_gamma(sum)?).exp())
}

/// Surface measure `ω_{n-1} = 2π^{n/2}/Γ(n/2)` of the unit sphere in `R^n`.
///
/// For `n = 1` the "sphere" is `{-1, +1}` with counting measure, total 2.
pub fn sphere_area(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("sphere_area requires n >= 1".into()));
    }
    if n == 1 {
        return Ok(2.0);
    }
    let half = n as f64 / 2.0;
    Ok(2.0 * PI.powf(half) / gamma(half)?)
}
