//! Weighted resolvent norms `||W_l (op - z)^{-1} W_r||`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::band::{norm2, BandLu};
use super::DiscreteOperator;
use crate::error::{numerical, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            rel_tol: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub norm: f64,
    pub iterations: usize,
    /// `||G x - theta x|| / theta` for the Gram map `G` at the final iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Deterministic start vector with no special structure.
pub(crate) fn start_vector(n: usize) -> Vec<C64> {
    (0..n)
        .map(|i| C64::new(1.0 + 0.3 * ((i as f64) * 0.7).sin(), 0.2 * ((i as f64) * 1.3).cos()))
        .collect()
}

/// Power iteration for the largest eigenvalue of a positive semidefinite
/// map, returned as `sqrt(theta)`.
pub(crate) fn power_sqrt(
    n: usize,
    opts: PowerOptions,
    mut gram: impl FnMut(&[C64]) -> Result<Vec<C64>>,
) -> Result<NormEstimate> {
    let mut x = start_vector(n);
    let s = norm2(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut history: Vec<f64> = Vec::new();
    let mut theta_prev = f64::NAN;
    for it in 1..=opts.max_iter {
        let y = gram(&x)?;
        let theta: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(NormEstimate {
                norm: 0.0,
                iterations: it,
                residual: 0.0,
                converged: true,
            });
        }
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - a * theta).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / theta.abs();
        history.push(theta);
        // Rayleigh quotients increase monotonically for PSD maps; stop once
        // the increments are far below the requested accuracy.
        if (theta - theta_prev).abs() <= 0.2 * opts.rel_tol * theta && residual < 1e-2 {
            return Ok(NormEstimate {
                norm: theta.sqrt(),
                iterations: it,
                residual,
                converged: true,
            });
        }
        theta_prev = theta;
        x = y.into_iter().map(|v| v / ny).collect();
    }
    let tail: Vec<String> = history
        .iter()
        .rev()
        .take(5)
        .map(|t| format!("{:.9e}", t.sqrt()))
        .collect();
    numerical(format!(
        "power iteration did not converge in {} iterations; last estimates {}",
        opts.max_iter,
        tail.join(", ")
    ))
}

/// Largest singular value of `W_l (op - z)^{-1} W_r` by power iteration on the
/// Gram map `x -> W_r (op - z)^{-*} W_l^2 (op - z)^{-1} W_r x`.
pub fn weighted_operator_norm(
    op: &DiscreteOperator,
    z: C64,
    w_left: &[f64],
    w_right: &[f64],
    opts: PowerOptions,
) -> Result<NormEstimate> {
    let n = op.dim();
    if w_left.iter().all(|&w| w == 0.0) || w_right.iter().all(|&w| w == 0.0) {
        return Ok(NormEstimate {
            norm: 0.0,
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let band = op.shifted_band(z);
    let lu = BandLu::factor(&band)?;
    let lu_adj = BandLu::factor(&band.adjoint())?;
    power_sqrt(n, opts, |x| {
        let u: Vec<C64> = x.iter().zip(w_right).map(|(v, w)| v * *w).collect();
        let v = lu.solve(&u)?;
        let v: Vec<C64> = v.iter().zip(w_left).map(|(a, w)| a * (*w * *w)).collect();
        let y = lu_adj.solve(&v)?;
        Ok(y.iter().zip(w_right).map(|(a, w)| a * *w).collect())
    })
}

/// Largest singular value of `M (op - z)^{-1}` for a real symmetric band `M`.
pub fn product_resolvent_norm(
    m: &super::SymBand,
    op: &DiscreteOperator,
    z: C64,
    opts: PowerOptions,
) -> Result<NormEstimate> {
    let band = op.shifted_band(z);
    let lu = BandLu::factor(&band)?;
    let lu_adj = BandLu::factor(&band.adjoint())?;
    power_sqrt(op.dim(), opts, |x| {
        let v = lu.solve(x)?;
        let v = m.matvec_c(&m.matvec_c(&v));
        lu_adj.solve(&v)
    })
}

/// Dense reference: SVD of the explicitly formed `W_l (op - z)^{-1} W_r`.
pub fn weighted_operator_norm_dense(
    op: &DiscreteOperator,
    z: C64,
    w_left: &[f64],
    w_right: &[f64],
) -> Result<f64> {
    let n = op.dim();
    let a = op.to_dense() - DMatrix::from_diagonal_element(n, n, z);
    let Some(inv) = a.try_inverse() else {
        return numerical("dense inverse failed");
    };
    let wl = DMatrix::from_diagonal(&DVector::from_iterator(n, w_left.iter().map(|&w| C64::new(w, 0.0))));
    let wr = DMatrix::from_diagonal(&DVector::from_iterator(n, w_right.iter().map(|&w| C64::new(w, 0.0))));
    let m = wl * inv * wr;
    Ok(m.singular_values().max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{RadialGrid, SymBand};

    #[test]
    fn diagonal_nearest_eigenvalue() {
        let grid = RadialGrid::new(0.0, 1.0, 8, 2).unwrap();
        let mut h = SymBand::zeros(8, 1);
        for i in 0..8 {
            h.upper[0][i] = [1.0, 2.0, 3.0, 5.0, 6.0, 7.0, 8.0, 9.0][i];
        }
        let op = DiscreteOperator::from_parts(grid, h);
        let ones = vec![1.0; 8];
        let eps = 1e-3;
        let est = weighted_operator_norm(&op, C64::new(2.0, eps), &ones, &ones, PowerOptions::default()).unwrap();
        assert!((est.norm - 1.0 / eps).abs() < 1e-6 / eps);
        let zeros = vec![0.0; 8];
        let est0 = weighted_operator_norm(&op, C64::new(2.0, eps), &zeros, &ones, PowerOptions::default()).unwrap();
        assert_eq!(est0.norm, 0.0);
    }
}
