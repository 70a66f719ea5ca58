//! Support-size bound `||f(L) K|| <= pi^{-1/2} |J|^{1/2} ||f||_inf sup ||K (L - lambda -+ i eps)^{-1} K||^{1/2}`
//! on a discretized Dirichlet Laplacian, with the supremum taken over
//! `lambda in J` and `eps in [eps_min, 1]`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::window;
use crate::quad::composite;
use crate::weights::linear_fit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EasytrickConfig {
    /// Interior grid points of `-d^2/dx^2` on `[0, length]`.
    pub n: usize,
    pub length: f64,
    pub interval: [f64; 2],
    /// Number of consecutive grid sites carrying the weight `K`.
    pub support: usize,
    pub eps_min: f64,
    pub lambda_samples: usize,
    pub eps_samples: usize,
    /// Values of `eps` for the convergence of the spectral identity.
    pub identity_eps: Vec<f64>,
    pub seed: u64,
}

impl Default for EasytrickConfig {
    fn default() -> Self {
        Self {
            n: 400,
            length: 100.0,
            interval: [1.0, 2.0],
            support: 20,
            eps_min: 0.02,
            lambda_samples: 200,
            eps_samples: 12,
            identity_eps: vec![0.004, 0.002, 0.001, 0.0005, 0.00025],
            seed: 0,
        }
    }
}

impl EasytrickConfig {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.interval;
        if self.n < 3 || !(self.length > 0.0) || !(a < b) {
            return invalid("easytrick needs n >= 3, positive length and a nonempty interval");
        }
        if self.support == 0 || self.support > self.n {
            return invalid("weight support must fit in the grid");
        }
        if !(self.eps_min > 0.0 && self.eps_min < 1.0) || self.lambda_samples < 2 || self.eps_samples < 2 {
            return invalid("eps_min must lie in (0, 1) with at least two samples per axis");
        }
        if self.identity_eps.len() < 2 || self.identity_eps.iter().any(|&e| !(e > 0.0)) {
            return invalid("identity_eps needs at least two positive values");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EasytrickReport {
    pub lhs: f64,
    pub rhs: f64,
    pub resolvent_sup: f64,
    pub holds: bool,
    /// `(eps, |smoothed identity - ||f(L) K phi||^2|)`.
    pub identity_errors: Vec<(f64, f64)>,
    /// Fitted exponent of the identity error in `eps`.
    pub identity_rate: f64,
    pub eigenvalues_in_interval: usize,
}

/// `f` on `J = [a, b]`: the unit window rescaled so that its support is the
/// middle three quarters of `J`.
pub fn interval_window(interval: [f64; 2], e: f64) -> f64 {
    let [a, b] = interval;
    let c = 0.5 * (a + b);
    let s = (b - a) / 8.0;
    window((e - c) / s)
}

fn dirichlet_laplacian(n: usize, length: f64) -> (Vec<f64>, DMatrix<f64>) {
    let h = length / (n + 1) as f64;
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 / (h * h)
        } else if i.abs_diff(j) == 1 {
            -1.0 / (h * h)
        } else {
            0.0
        }
    });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `int |f(E)|^2 P_eps(E - e0) dE` with the Poisson kernel `P_eps(x) = eps / (pi (x^2 + eps^2))`.
fn smoothed_square(interval: [f64; 2], e0: f64, eps: f64) -> f64 {
    let [a, b] = interval;
    let c = 0.5 * (a + b);
    let half = 3.0 * (b - a) / 8.0;
    let panels = ((2.0 * half) / (0.25 * eps)).ceil().max(16.0) as usize;
    composite(c - half, c + half, panels, 6)
        .into_iter()
        .map(|(e, w)| {
            let f = interval_window(interval, e);
            w * f * f * eps / (PI * ((e - e0).powi(2) + eps * eps))
        })
        .sum()
}

pub fn easytrick_check(config: &EasytrickConfig) -> Result<EasytrickReport> {
    config.validate()?;
    let n = config.n;
    let (values, vectors) = dirichlet_laplacian(n, config.length);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = rng.gen_range(0..=n - config.support);
    let weights: Vec<f64> = (0..config.support).map(|_| rng.gen_range(0.2..1.0)).collect();
    let interval = config.interval;

    // Rows of the eigenvector matrix restricted to the support, scaled by K.
    let vk = DMatrix::from_fn(config.support, n, |i, j| weights[i] * vectors[(start + i, j)]);
    let fvals: Vec<f64> = values.iter().map(|&e| interval_window(interval, e)).collect();
    let f_sup = fvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // ||f(L) K|| = ||diag(f) V^T K||.
    let fk = DMatrix::from_fn(n, config.support, |j, i| fvals[j] * vk[(i, j)]);
    let lhs = fk.singular_values().max();

    let [a, b] = interval;
    let mut lambdas: Vec<f64> =
        (0..config.lambda_samples).map(|i| a + (b - a) * i as f64 / (config.lambda_samples - 1) as f64).collect();
    lambdas.extend(values.iter().copied().filter(|e| (a..=b).contains(e)));
    let eigenvalues_in_interval = lambdas.len() - config.lambda_samples;
    let log_min = config.eps_min.ln();
    let epss: Vec<f64> = (0..config.eps_samples)
        .map(|i| (log_min * (1.0 - i as f64 / (config.eps_samples - 1) as f64)).exp())
        .collect();
    let vk_c = vk.map(|v| C64::new(v, 0.0));
    let mut resolvent_sup: f64 = 0.0;
    for &lam in &lambdas {
        for &eps in &epss {
            let mut scaled = vk_c.clone();
            for (j, &e) in values.iter().enumerate() {
                let g = C64::new(1.0, 0.0) / C64::new(e - lam, -eps);
                for v in scaled.column_mut(j).iter_mut() {
                    *v *= g;
                }
            }
            let kgk = scaled * vk_c.transpose();
            resolvent_sup = resolvent_sup.max(kgk.singular_values().max());
        }
    }
    let rhs = (b - a).sqrt() / PI.sqrt() * f_sup * resolvent_sup.sqrt();
    let holds = lhs <= rhs * (1.0 + 1e-12);

    let phi: DVector<f64> = DVector::from_fn(config.support, |_, _| rng.gen_range(-1.0..1.0));
    let phi = &phi / phi.norm();
    let coeffs: DVector<f64> = vk.transpose() * &phi;
    let exact: f64 = coeffs.iter().zip(&fvals).map(|(c, f)| c * c * f * f).sum();
    let mut identity_errors = Vec::with_capacity(config.identity_eps.len());
    for &eps in &config.identity_eps {
        let smoothed: f64 = coeffs
            .iter()
            .zip(&values)
            .filter(|(c, _)| c.abs() > 0.0)
            .map(|(c, &e)| c * c * smoothed_square(interval, e, eps))
            .sum();
        identity_errors.push((eps, (smoothed - exact).abs()));
    }
    let xs: Vec<f64> = identity_errors.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = identity_errors.iter().map(|p| p.1.max(1e-300).ln()).collect();
    let (identity_rate, _) = linear_fit(&xs, &ys);
    Ok(EasytrickReport { lhs, rhs, resolvent_sup, holds, identity_errors, identity_rate, eigenvalues_in_interval })
}
