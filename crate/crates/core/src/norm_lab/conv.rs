//! Discretised log-coordinate convolution `(M v)(σ) = ∫ H̃(τ - σ) v(τ) dτ`.
//!
//! The kernel is sampled by cell averages, `k_d = h^{-1} ∫ H̃` over
//! `[(d - ½)h, (d + ½)h]`, so `h Σ_d k_d` equals `∫ H̃` up to truncation and
//! the discrete operator never exceeds the continuous norm.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::haar::HKernel;
use crate::quadrature::CompensatedSum;

use super::LogGrid;

/// A nonnegative operator on a weighted `ℓ^p` space.
pub trait PositiveOperator {
    fn dim(&self) -> usize;
    fn weights(&self) -> &[f64];
    fn apply(&self, v: &[f64]) -> Vec<f64>;
    /// Adjoint with respect to the weighted pairing `Σ w_i x_i y_i`.
    fn apply_adjoint(&self, v: &[f64]) -> Vec<f64>;
}

const CELL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const CELL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gauss10<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in CELL_NODES.iter().zip(CELL_WEIGHTS) {
        acc += w * (f(mid - half * x)? + f(mid + half * x)?);
    }
    Ok(half * acc)
}

/// Cell averages `k_d` of `H̃_i` for `d = -(N-1) ..= N-1`.
pub fn sample_log_kernel(h: &HKernel, factor: usize, grid: &LogGrid) -> Result<Vec<f64>> {
    let n = grid.points();
    let step = grid.spacing();
    let f = |tau: f64| h.eval_log(factor, tau);
    (0..2 * n - 1)
        .into_par_iter()
        .map(|idx| {
            let d = idx as f64 - (n - 1) as f64;
            let (a, b) = ((d - 0.5) * step, (d + 0.5) * step);
            let integral = if idx == n - 1 {
                // jumps of H̃ sit at τ = 0
                gauss10(&f, a, 0.0)? + gauss10(&f, 0.0, b)?
            } else {
                gauss10(&f, a, b)?
            };
            let v = integral / step;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Evaluation(format!(
                    "log kernel sample {v} at τ = {} is not a finite nonnegative number",
                    d * step
                )));
            }
            Ok(v)
        })
        .collect()
}

/// FFT-backed Toeplitz operator with trapezoidal weights.
pub struct LogConvolution {
    n: usize,
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    size: usize,
    forward: Vec<Complex<f64>>,
    adjoint: Vec<Complex<f64>>,
    /// `h Σ_d k_d`, the discrete kernel mass.
    pub mass: f64,
}

impl LogConvolution {
    pub fn new(h: &HKernel, factor: usize, grid: &LogGrid) -> Result<Self> {
        let samples = sample_log_kernel(h, factor, grid)?;
        Ok(Self::from_samples(&samples, grid))
    }

    /// `samples[d + N - 1] = k_d`.
    pub fn from_samples(samples: &[f64], grid: &LogGrid) -> Self {
        let n = grid.points();
        assert_eq!(samples.len(), 2 * n - 1, "kernel sample length");
        let size = (3 * n - 2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let ifft = planner.plan_fft_inverse(size);
        let spectrum = |vals: &mut dyn Iterator<Item = f64>| {
            let mut buf = vec![Complex::new(0.0, 0.0); size];
            for (slot, v) in buf.iter_mut().zip(vals) {
                slot.re = v;
            }
            fft.process(&mut buf);
            buf
        };
        let forward = spectrum(&mut samples.iter().rev().copied());
        let adjoint = spectrum(&mut samples.iter().copied());
        let mass = grid.spacing() * samples.iter().copied().collect::<CompensatedSum>().value();
        Self {
            n,
            weights: grid.trapezoid_weights(),
            fft,
            ifft,
            size,
            forward,
            adjoint,
            mass,
        }
    }

    fn convolve(&self, spectrum: &[Complex<f64>], v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length");
        let mut buf = vec![Complex::new(0.0, 0.0); self.size];
        for ((slot, x), w) in buf.iter_mut().zip(v).zip(&self.weights) {
            slot.re = x * w;
        }
        self.fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(spectrum) {
            *b *= k;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf[self.n - 1..2 * self.n - 1]
            .iter()
            .map(|c| c.re * scale)
            .collect()
    }
}

impl PositiveOperator for LogConvolution {
    fn dim(&self) -> usize {
        self.n
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.convolve(&self.forward, v)
    }

    fn apply_adjoint(&self, v: &[f64]) -> Vec<f64> {
        self.convolve(&self.adjoint, v)
    }
}

/// Plain nonnegative matrix acting on unweighted `ℓ^p`.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    rows: Vec<Vec<f64>>,
    ones: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Usage("matrix must be square and nonempty".into()));
        }
        if rows
            .iter()
            .flatten()
            .any(|&v| !(v >= 0.0) || !v.is_finite())
        {
            return Err(Error::Usage(
                "matrix entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            rows,
            ones: vec![1.0; n],
        })
    }
}

impl PositiveOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn weights(&self) -> &[f64] {
        &self.ones
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn apply_adjoint(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.rows[i][j] * v[i]).sum())
            .collect()
    }
}

/// Applies a one-dimensional operator along each axis of a tensor-grid function.
pub fn apply_tensor(ops: &[&LogConvolution], n: usize, data: &[f64]) -> Vec<f64> {
    let m = ops.len();
    debug_assert_eq!(data.len(), n.pow(m as u32));
    let mut cur = data.to_vec();
    for (axis, op) in ops.iter().enumerate() {
        let stride = n.pow((m - 1 - axis) as u32);
        let outer = n.pow(axis as u32);
        let lines: Vec<(usize, Vec<f64>)> = (0..outer * stride)
            .into_par_iter()
            .map(|line| {
                let (o, i) = (line / stride, line % stride);
                let base = o * n * stride + i;
                let v: Vec<f64> = (0..n).map(|k| cur[base + k * stride]).collect();
                (base, op.apply(&v))
            })
            .collect();
        for (base, out) in lines {
            for (k, v) in out.into_iter().enumerate() {
                cur[base + k * stride] = v;
            }
        }
    }
    cur
}
