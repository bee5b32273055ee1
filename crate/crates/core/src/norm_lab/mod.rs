//! Empirical certification that the constant is sharp.
//!
//! Everything here works in logarithmic coordinates. A radial function
//! `f(y) = |y|^{-n/p} h(ln|y|)` is mapped by the kernel operator to
//! `|x|^{-n/p} (H̃ ⋆ h)(ln|x|)` with `(H̃ ⋆ h)(σ) = ∫ H̃(τ) h(σ + τ) dτ`, and
//! the `L^p` norms of `f` and `h` agree up to the same sphere factor. So the
//! spatial Rayleigh quotient equals a one-dimensional convolution quotient
//! per factor, which is what the routines below discretise.

pub mod conv;
pub mod power;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{build_h, HKernel};
use crate::kernels::ProductKernel;
use crate::quadrature::{CompensatedSum, QuadratureSpec};
use crate::sharp_constant::{product_constant, LebesgueExponent};

use conv::{apply_tensor, LogConvolution, PositiveOperator};
pub use power::BoydRun;

/// Slack for discretisation when comparing discrete quotients against `C`.
pub const TOL_DISC: f64 = 1e-3;
/// Largest allowed `e^{-εL}` for the extremal family on a grid of half-width `L`.
pub const EXTREMAL_TAIL: f64 = 1e-8;
/// Boundary share of `‖g‖_p^p` above which a truncation warning is issued.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;
/// Required fraction of `C` reached by the smallest ε of a ladder.
pub const LADDER_FRACTION: f64 = 0.95;
/// Slack for "nondecreasing" along an ε ladder.
pub const LADDER_MONOTONE_TOL: f64 = 1e-9;
/// Cap on tensor-grid size for multi-factor checks.
pub const MAX_TENSOR_POINTS: usize = 1 << 22;

/// Uniform grid on `[-L, L]` in log-radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogGrid {
    half_width: f64,
    points: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            half_width: 30.0,
            points: 4001,
        }
    }
}

impl LogGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Usage(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::Usage(format!(
                "grid point count must be odd and at least 3, got {points}"
            )));
        }
        Ok(Self { half_width, points })
    }

    /// Smallest grid with the given spacing on which `e^{-εL} ≤ 1e-8`, and
    /// never narrower than the default half-width so the image of `h_ε`
    /// (spread by the kernel) also fits.
    pub fn covering(eps: f64, spacing: f64) -> Result<Self> {
        if !(eps > 0.0) || !(spacing > 0.0) {
            return Err(Error::Usage("ε and spacing must be positive".into()));
        }
        let needed = (-EXTREMAL_TAIL.ln() / eps).max(Self::default().half_width);
        let half_cells = (needed / spacing).ceil() as usize;
        Self::new(half_cells as f64 * spacing, 2 * half_cells + 1)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let mid = (self.points - 1) / 2;
        (i as f64 - mid as f64) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.points];
        w[0] = 0.5 * h;
        w[self.points - 1] = 0.5 * h;
        w
    }
}

/// `(Σ w_i |v_i|^p)^{1/p}`.
pub fn weighted_norm(v: &[f64], w: &[f64], p: f64) -> f64 {
    let acc: CompensatedSum = v
        .iter()
        .zip(w)
        .map(|(x, wi)| wi * x.abs().powf(p))
        .collect();
    acc.value().powf(1.0 / p)
}

fn tensor_weights(grid: &LogGrid, m: usize) -> Vec<f64> {
    let w1 = grid.trapezoid_weights();
    let mut w = vec![1.0];
    for _ in 0..m {
        w = w
            .iter()
            .flat_map(|a| w1.iter().map(move |b| a * b))
            .collect();
    }
    w
}

/// `h_ε(t) = e^{-ε|t|}` on each log-radius axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalFamily {
    pub eps: f64,
}

impl ExtremalFamily {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("ε must be positive, got {eps}")));
        }
        Ok(Self { eps })
    }

    pub fn profile(&self, t: f64) -> f64 {
        (-self.eps * t.abs()).exp()
    }

    /// `‖h_ε‖_p^p = 2/(pε)` on one axis.
    pub fn norm_p_pow(&self, p: f64) -> f64 {
        2.0 / (p * self.eps)
    }

    /// The spatial function `∏ |y_i|^{-n_i/p} h_ε(ln|y_i|)` at radii `|y_i|`.
    pub fn spatial(&self, dims: &[usize], p: f64, radii: &[f64]) -> f64 {
        dims.iter()
            .zip(radii)
            .map(|(&n, &r)| r.powf(-(n as f64) / p) * self.profile(r.ln()))
            .product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub eps: f64,
    pub p: f64,
    pub ratio: f64,
    pub per_factor: Vec<f64>,
    /// Discrete `‖h_ε‖_p^p` on one axis, next to its closed form.
    pub h_norm_p_pow: f64,
    pub h_norm_p_pow_analytic: f64,
    pub boundary_fraction: f64,
    pub warning: Option<String>,
    pub half_width: f64,
    pub points: usize,
}

fn log_convolutions(h: &HKernel, grid: &LogGrid) -> Result<Vec<LogConvolution>> {
    (0..h.m())
        .map(|i| LogConvolution::new(h, i, grid))
        .collect()
}

fn extremal_on(
    convs: &[LogConvolution],
    family: ExtremalFamily,
    p: f64,
    grid: &LogGrid,
) -> ExtremalReport {
    let nodes = grid.nodes();
    let w = grid.trapezoid_weights();
    let h: Vec<f64> = nodes.iter().map(|&t| family.profile(t)).collect();
    let h_norm = weighted_norm(&h, &w, p);
    let edge = 0.9 * grid.half_width();
    let mut per_factor = Vec::with_capacity(convs.len());
    let mut boundary_fraction: f64 = 0.0;
    for conv in convs {
        let g = conv.apply(&h);
        per_factor.push(weighted_norm(&g, &w, p) / h_norm);
        let (mut outer, mut total) = (0.0, 0.0);
        for ((t, gi), wi) in nodes.iter().zip(&g).zip(&w) {
            let mass = wi * gi.abs().powf(p);
            total += mass;
            if t.abs() > edge {
                outer += mass;
            }
        }
        if total > 0.0 {
            boundary_fraction = boundary_fraction.max(outer / total);
        }
    }
    let warning = (boundary_fraction > BOUNDARY_MASS_TOL).then(|| {
        format!("truncation insufficient: {boundary_fraction:.3e} of the output mass lies near the grid boundary")
    });
    ExtremalReport {
        eps: family.eps,
        p,
        ratio: per_factor.iter().product(),
        per_factor,
        h_norm_p_pow: h_norm.powf(p),
        h_norm_p_pow_analytic: family.norm_p_pow(p),
        boundary_fraction,
        warning,
        half_width: grid.half_width(),
        points: grid.points(),
    }
}

fn check_extremal_grid(family: ExtremalFamily, grid: &LogGrid) -> Result<()> {
    let tail = (-family.eps * grid.half_width()).exp();
    if tail > EXTREMAL_TAIL {
        return Err(Error::Usage(format!(
            "grid half-width {} too small for ε = {}: e^(-εL) = {tail:.3e} exceeds {EXTREMAL_TAIL:e}",
            grid.half_width(),
            family.eps
        )));
    }
    Ok(())
}

/// `R(ε) = ‖H̃ ⋆ h_ε‖_p / ‖h_ε‖_p`, multiplied over the factors.
pub fn extremal_ratio(
    kernel: &ProductKernel,
    p: LebesgueExponent,
    eps: f64,
    grid: &LogGrid,
) -> Result<ExtremalReport> {
    let family = ExtremalFamily::new(eps)?;
    check_extremal_grid(family, grid)?;
    let h = build_h(kernel, p)?;
    let convs = log_convolutions(&h, grid)?;
    Ok(extremal_on(&convs, family, p.p(), grid))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderEntry {
    pub eps: f64,
    pub ratio: f64,
    pub fraction_of_constant: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub p: f64,
    pub dims: Vec<usize>,
    pub constant: f64,
    pub constant_err_est: f64,
    pub entries: Vec<LadderEntry>,
    pub monotone: bool,
    pub final_fraction: f64,
    pub required_fraction: f64,
    pub bounded_by_constant: bool,
    pub pass: bool,
    pub half_width: f64,
    pub points: usize,
}

/// `R(ε)` along a list of ε values on one shared grid wide enough for the smallest.
///
/// Passes when the ratios are nondecreasing as ε decreases, stay below
/// `C (1 + TOL_DISC)`, and the smallest ε reaches `LADDER_FRACTION · C`.
pub fn extremal_ladder(
    kernel: &ProductKernel,
    p: LebesgueExponent,
    eps_list: &[f64],
    spacing: f64,
    spec: &QuadratureSpec,
) -> Result<LadderReport> {
    if eps_list.is_empty() {
        return Err(Error::Usage("the ε ladder is empty".into()));
    }
    let mut ladder: Vec<f64> = eps_list.to_vec();
    for &e in &ladder {
        ExtremalFamily::new(e)?;
    }
    ladder.sort_by(|a, b| b.total_cmp(a));
    let grid = LogGrid::covering(*ladder.last().unwrap(), spacing)?;
    let constant = product_constant(kernel, p, spec)?;
    let c = constant.product_constant;
    let h = build_h(kernel, p)?;
    let convs = log_convolutions(&h, &grid)?;
    let entries: Vec<LadderEntry> = ladder
        .par_iter()
        .map(|&eps| {
            let rep = extremal_on(&convs, ExtremalFamily { eps }, p.p(), &grid);
            LadderEntry {
                eps,
                ratio: rep.ratio,
                fraction_of_constant: rep.ratio / c,
                warning: rep.warning,
            }
        })
        .collect();
    let monotone = entries
        .windows(2)
        .all(|w| w[1].ratio >= w[0].ratio - LADDER_MONOTONE_TOL);
    let bounded = entries.iter().all(|e| e.ratio <= c * (1.0 + TOL_DISC));
    let final_fraction = entries.last().unwrap().fraction_of_constant;
    Ok(LadderReport {
        p: p.p(),
        dims: kernel.dims(),
        constant: c,
        constant_err_est: constant.product_err_est,
        pass: monotone && bounded && final_fraction >= LADDER_FRACTION,
        entries,
        monotone,
        final_fraction,
        required_fraction: LADDER_FRACTION,
        bounded_by_constant: bounded,
        half_width: grid.half_width(),
        points: grid.points(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub p: f64,
    /// Product of the per-factor quotients.
    pub lower_bound: f64,
    pub per_factor: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: bool,
    pub warning: Option<String>,
    #[serde(skip)]
    pub runs: Vec<BoydRun>,
}

/// Lower bound for `C` from the power method on each factor's discretised
/// log convolution.
pub fn power_method_lower_bound(
    kernel: &ProductKernel,
    p: LebesgueExponent,
    grid: &LogGrid,
    iters: usize,
    seed: u64,
) -> Result<PowerReport> {
    if iters == 0 {
        return Err(Error::Usage(
            "at least one power iteration is required".into(),
        ));
    }
    let h = build_h(kernel, p)?;
    let convs = log_convolutions(&h, grid)?;
    let runs: Vec<BoydRun> = convs
        .par_iter()
        .enumerate()
        .map(|(i, c)| power::boyd(c, p.p(), iters, seed.wrapping_add(i as u64)))
        .collect();
    let per_factor: Vec<f64> = runs.iter().map(|r| r.quotient).collect();
    let converged = runs.iter().all(|r| r.converged);
    Ok(PowerReport {
        p: p.p(),
        lower_bound: per_factor.iter().product(),
        iterations: runs.iter().map(|r| r.iterations).collect(),
        per_factor,
        converged,
        warning: (!converged).then(|| {
            format!(
                "successive quotients still differ by more than {:e} after {iters} iterations",
                power::CONVERGENCE_TOL
            )
        }),
        runs,
    })
}

/// A nonnegative function on the tensor grid `grid^m`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub m: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &LogGrid, m: usize) -> Self {
        Self {
            m,
            values: vec![0.0; grid.points().pow(m as u32)],
        }
    }

    /// Adds `level` on the box `∏ [lo_a, hi_a]` (inclusive, in log-radius).
    pub fn add_box(&mut self, grid: &LogGrid, bounds: &[(f64, f64)], level: f64) {
        let n = grid.points();
        let ranges: Vec<(usize, usize)> = bounds
            .iter()
            .map(|&(lo, hi)| {
                let first = (0..n).find(|&i| grid.node(i) >= lo).unwrap_or(n);
                let last = (0..n)
                    .rev()
                    .find(|&i| grid.node(i) <= hi)
                    .map_or(0, |i| i + 1);
                (first, last.max(first))
            })
            .collect();
        let mut idx = vec![0usize; self.m];
        add_box_rec(&mut self.values, n, &ranges, 0, 0, &mut idx, level);
    }

    pub fn indicator(grid: &LogGrid, m: usize, lo: f64, hi: f64) -> Self {
        let mut f = Self::zeros(grid, m);
        f.add_box(grid, &vec![(lo, hi); m], 1.0);
        f
    }

    /// Sum of up to six boxes with random positions, widths and levels.
    pub fn random(grid: &LogGrid, m: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut f = Self::zeros(grid, m);
        let l = grid.half_width();
        let (lo_w, hi_w) = (grid.spacing().ln(), (0.5 * l).ln());
        let pieces = rng.gen_range(1..=6);
        for _ in 0..pieces {
            let bounds: Vec<(f64, f64)> = (0..m)
                .map(|_| {
                    let centre = rng.gen_range(-0.8 * l..0.8 * l);
                    let half = rng.gen_range(lo_w..hi_w).exp();
                    (centre - half, centre + half)
                })
                .collect();
            let level = rng.gen_range(0.1..1.0);
            f.add_box(grid, &bounds, level);
        }
        f
    }
}

fn add_box_rec(
    values: &mut [f64],
    n: usize,
    ranges: &[(usize, usize)],
    axis: usize,
    offset: usize,
    idx: &mut [usize],
    level: f64,
) {
    if axis == ranges.len() {
        values[offset] += level;
        return;
    }
    let (a, b) = ranges[axis];
    for i in a..b {
        idx[axis] = i;
        add_box_rec(values, n, ranges, axis + 1, offset * n + i, idx, level);
    }
}

/// Discrete Rayleigh quotient `‖M f‖_p / ‖f‖_p`; `None` for the zero function.
pub fn rayleigh_quotient(
    convs: &[&LogConvolution],
    grid: &LogGrid,
    p: f64,
    f: &GridFunction,
) -> Option<f64> {
    let w = tensor_weights(grid, f.m);
    let denom = weighted_norm(&f.values, &w, p);
    if denom == 0.0 {
        return None;
    }
    let image = apply_tensor(convs, grid.points(), &f.values);
    Some(weighted_norm(&image, &w, p) / denom)
}

/// Operators for [`rayleigh_quotient`] built from a product kernel.
pub struct KernelOperators {
    convs: Vec<LogConvolution>,
    pub grid: LogGrid,
}

impl KernelOperators {
    pub fn new(kernel: &ProductKernel, p: LebesgueExponent, grid: &LogGrid) -> Result<Self> {
        let h = build_h(kernel, p)?;
        Ok(Self {
            convs: log_convolutions(&h, grid)?,
            grid: *grid,
        })
    }

    pub fn quotient(&self, p: f64, f: &GridFunction) -> Option<f64> {
        let ops: Vec<&LogConvolution> = self.convs.iter().collect();
        rayleigh_quotient(&ops, &self.grid, p, f)
    }

    /// `h Σ k_d` per factor: the discrete analogue of `‖H_i‖_{L^1(G)}`.
    pub fn kernel_masses(&self) -> Vec<f64> {
        self.convs.iter().map(|c| c.mass).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpperBoundReport {
    pub p: f64,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub count: usize,
    pub constant: f64,
    pub constant_err_est: f64,
    pub tol_disc: f64,
    pub max_quotient: f64,
    pub max_fraction_of_constant: f64,
    pub exceedances: usize,
    pub zero_functions: usize,
    pub quotients: Vec<f64>,
    pub pass: bool,
    pub half_width: f64,
    pub points: usize,
}

/// Rayleigh quotients of `count` seeded random nonnegative grid functions.
///
/// Function `i` is drawn from its own ChaCha stream, so the results do not
/// depend on how the work is scheduled.
pub fn random_upper_bound_check(
    kernel: &ProductKernel,
    p: LebesgueExponent,
    grid: &LogGrid,
    seed: u64,
    count: usize,
) -> Result<UpperBoundReport> {
    if count == 0 {
        return Err(Error::Usage("count must be at least 1".into()));
    }
    let m = kernel.m();
    let total = (grid.points() as f64).powi(m as i32);
    if total > MAX_TENSOR_POINTS as f64 {
        return Err(Error::Usage(format!(
            "tensor grid of {} points per axis over {m} factors is too large; use fewer points",
            grid.points()
        )));
    }
    let constant = product_constant(kernel, p, &QuadratureSpec::default())?;
    let c = constant.product_constant;
    let ops = KernelOperators::new(kernel, p, grid)?;
    let results: Vec<Option<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let f = GridFunction::random(grid, m, &mut rng);
            ops.quotient(p.p(), &f)
        })
        .collect();
    let quotients: Vec<f64> = results.iter().flatten().copied().collect();
    let zero_functions = results.len() - quotients.len();
    let max_quotient = quotients.iter().copied().fold(0.0, f64::max);
    let bound = c * (1.0 + TOL_DISC);
    let exceedances = quotients.iter().filter(|&&q| q > bound).count();
    Ok(UpperBoundReport {
        p: p.p(),
        dims: kernel.dims(),
        seed,
        count,
        constant: c,
        constant_err_est: constant.product_err_est,
        tol_disc: TOL_DISC,
        max_quotient,
        max_fraction_of_constant: if c > 0.0 { max_quotient / c } else { 0.0 },
        exceedances,
        zero_functions,
        quotients,
        pass: exceedances == 0,
        half_width: grid.half_width(),
        points: grid.points(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(v: f64) -> LebesgueExponent {
        LebesgueExponent::new(v).unwrap()
    }

    #[test]
    fn grid_validation_and_geometry() {
        assert!(LogGrid::new(1.0, 4).is_err());
        assert!(LogGrid::new(1.0, 1).is_err());
        assert!(LogGrid::new(0.0, 5).is_err());
        let g = LogGrid::default();
        assert_eq!(g.points(), 4001);
        assert!((g.spacing() - 0.015).abs() < 1e-15);
        assert_eq!(g.node(2000), 0.0);
        assert!((g.node(0) + 30.0).abs() < 1e-12);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 60.0).abs() < 1e-10);
        let c = LogGrid::covering(0.05, 0.015).unwrap();
        assert!((-0.05 * c.half_width()).exp() <= EXTREMAL_TAIL);
        assert!((c.spacing() - 0.015).abs() < 1e-12);
    }

    #[test]
    fn extremal_profile_norm() {
        let fam = ExtremalFamily::new(0.1).unwrap();
        assert!((fam.norm_p_pow(2.0) - 10.0).abs() < 1e-15);
        let grid = LogGrid::covering(0.1, 0.01).unwrap();
        let h: Vec<f64> = grid.nodes().iter().map(|&t| fam.profile(t)).collect();
        let disc = weighted_norm(&h, &grid.trapezoid_weights(), 2.0).powi(2);
        assert!((disc - 10.0).abs() < 1e-4, "{disc}");
        assert!(ExtremalFamily::new(0.0).is_err());
    }

    #[test]
    fn spatial_function_matches_radial_form() {
        let fam = ExtremalFamily::new(0.3).unwrap();
        let v = fam.spatial(&[1, 2], 2.0, &[2.0, 0.5]);
        let want = 2f64.powf(-0.5)
            * (-0.3 * 2f64.ln()).exp()
            * 0.5f64.powf(-1.0)
            * (-0.3 * 2f64.ln()).exp();
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn extremal_rejects_narrow_grid() {
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let e = extremal_ratio(&k, p(2.0), 0.05, &LogGrid::default()).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }

    #[test]
    fn extremal_hilbert_bracket() {
        // Fourier oracle at p = 2: R(0.1)/2π = 0.968885603365...
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let grid = LogGrid::covering(0.1, 0.015).unwrap();
        let rep = extremal_ratio(&k, p(2.0), 0.1, &grid).unwrap();
        let c = 2.0 * PI;
        assert!(rep.ratio > 0.9 * c && rep.ratio < c, "{rep:?}");
        assert!(
            (rep.ratio / c - 0.968_885_603_365_847_4).abs() < 1e-5,
            "{rep:?}"
        );
        assert!(rep.warning.is_none());
        assert!((rep.h_norm_p_pow - 10.0).abs() < 1e-3);
    }

    #[test]
    fn extremal_large_eps_collapses() {
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let grid = LogGrid::covering(50.0, 0.001).unwrap();
        let rep = extremal_ratio(&k, p(2.0), 50.0, &grid).unwrap();
        assert!(rep.ratio <= 0.5 * 2.0 * PI, "{rep:?}");
        // Fourier oracle value 0.5656665724...
        assert!(
            (rep.ratio - 0.565_666_572_412_387_2).abs() < 1e-2,
            "{rep:?}"
        );
    }

    #[test]
    fn indicator_quotient_below_constant() {
        // Fourier oracle for the indicator of [-1, 1]: 2.7906266822550755
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let ops = KernelOperators::new(&k, p(2.0), &LogGrid::default()).unwrap();
        let f = GridFunction::indicator(&ops.grid, 1, -1.0, 1.0);
        let q = ops.quotient(2.0, &f).unwrap();
        assert!(q < 2.0 * PI);
        assert!((q - 2.790_626_682_255_075_5).abs() < 2e-2, "{q}");
        assert_eq!(ops.quotient(2.0, &GridFunction::zeros(&ops.grid, 1)), None);
    }

    #[test]
    fn kernel_mass_matches_constant() {
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let ops = KernelOperators::new(&k, p(2.0), &LogGrid::default()).unwrap();
        let mass = ops.kernel_masses()[0];
        assert!(mass <= 2.0 * PI * (1.0 + 1e-12));
        assert!(mass > 2.0 * PI * (1.0 - 1e-6), "{mass}");
    }

    #[test]
    fn random_functions_are_reproducible() {
        let grid = LogGrid::new(10.0, 101).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let fa = GridFunction::random(&grid, 2, &mut a);
        let fb = GridFunction::random(&grid, 2, &mut b);
        assert_eq!(fa, fb);
        assert!(fa.values.iter().all(|&v| v >= 0.0));
        assert!(fa.values.iter().any(|&v| v > 0.0));
    }

    #[test]
    fn upper_bound_small_grid() {
        let k = ProductKernel::hilbert(&[1]).unwrap();
        let grid = LogGrid::new(20.0, 801).unwrap();
        let rep = random_upper_bound_check(&k, p(2.0), &grid, 1, 20).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_quotient > 0.0);
        let again = random_upper_bound_check(&k, p(2.0), &grid, 1, 20).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn tensor_grid_cap() {
        let k = ProductKernel::hilbert(&[1, 1, 1]).unwrap();
        let e = random_upper_bound_check(&k, p(2.0), &LogGrid::default(), 1, 1).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }
}
