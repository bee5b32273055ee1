//! Nonlinear (Boyd) power method for the `ℓ^p → ℓ^p` norm of a nonnegative
//! operator: `x ← Φ_{p'}(M* Φ_p(M x))`, renormalised each step, with
//! `Φ_q(v) = |v|^{q-1} sign(v)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::conv::PositiveOperator;
use super::weighted_norm;

/// Successive quotients closer than this (relative) count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Early exit once the quotient has stalled to this level.
const STALL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoydRun {
    pub quotient: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Rayleigh quotient after each iteration.
    pub history: Vec<f64>,
}

fn duality_map(v: &mut [f64], q: f64) {
    for x in v.iter_mut() {
        *x = x.abs().powf(q - 1.0).copysign(*x);
    }
}

fn normalise(v: &mut [f64], w: &[f64], p: f64) -> f64 {
    let nrm = weighted_norm(v, w, p);
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    nrm
}

pub fn boyd<O: PositiveOperator + ?Sized>(op: &O, p: f64, iters: usize, seed: u64) -> BoydRun {
    let p_conj = p / (p - 1.0);
    let w = op.weights();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(0.5..1.5)).collect();
    normalise(&mut x, w, p);
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut y = op.apply(&x);
        let q = weighted_norm(&y, w, p);
        history.push(q);
        if q == 0.0 {
            break;
        }
        let stalled = history.len() >= 2 && {
            let prev = history[history.len() - 2];
            (q - prev).abs() <= STALL_TOL * q
        };
        if stalled {
            break;
        }
        duality_map(&mut y, p);
        let mut z = op.apply_adjoint(&y);
        duality_map(&mut z, p_conj);
        if normalise(&mut z, w, p) == 0.0 {
            break;
        }
        x = z;
    }
    let quotient = history.last().copied().unwrap_or(0.0);
    let converged = match history.len() {
        0 => false,
        1 => quotient == 0.0,
        k => (history[k - 1] - history[k - 2]).abs() <= CONVERGENCE_TOL * quotient,
    };
    BoydRun {
        quotient,
        iterations: history.len(),
        converged,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::super::conv::DenseMatrix;
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let m = DenseMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let run = boyd(&m, 2.0, 200, 1);
        assert!((run.quotient - 2.0).abs() < 1e-10, "{run:?}");
        assert!(run.converged);
    }

    #[test]
    fn all_ones_matrix() {
        let m = DenseMatrix::new(vec![vec![1.0; 2]; 2]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            // rank one: ‖1 1ᵀ‖_{p→p} = 2^{1/p} 2^{1/p'} = 2
            let run = boyd(&m, p, 100, 5);
            assert!((run.quotient - 2.0).abs() < 1e-12, "p={p} {run:?}");
        }
    }

    #[test]
    fn quotients_are_monotone() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| 1.0 / (1.0 + (i as f64 - 0.7 * j as f64).abs()))
                    .collect()
            })
            .collect();
        let m = DenseMatrix::new(rows).unwrap();
        for p in [1.25, 2.0, 4.0] {
            let run = boyd(&m, p, 500, 3);
            for pair in run.history.windows(2) {
                assert!(pair[1] >= pair[0] * (1.0 - 1e-12), "p={p}: {pair:?}");
            }
            assert!(run.converged);
        }
    }

    #[test]
    fn zero_matrix() {
        let m = DenseMatrix::new(vec![vec![0.0; 3]; 3]).unwrap();
        let run = boyd(&m, 2.0, 10, 0);
        assert_eq!(run.quotient, 0.0);
    }
}
