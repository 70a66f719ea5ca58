//! Conjugate operator: the radial fields `a_k`, their flow and unitary group,
//! the discrete generator `A_k`, and the functions `g_{R,S}`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numerical, Result};
use crate::jet::Jet;
use crate::linops::RadialGrid;
use crate::profiles::{chi_jet, window, window_jet, xi_jet};

pub const MAX_A_DERIVATIVE: usize = 4;

/// Cutoff scales `R > S > r0 + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugateParams {
    pub r_big: f64,
    pub s_big: f64,
    pub lambda: Option<f64>,
}

impl ConjugateParams {
    pub fn new(r_big: f64, s_big: f64, r0: f64) -> Result<Self> {
        if !(r_big > s_big && s_big > r0 + 1.0) {
            return invalid(format!(
                "conjugate scales need R > S > r0 + 1 (R = {r_big}, S = {s_big}, r0 = {r0})"
            ));
        }
        Ok(ConjugateParams {
            r_big,
            s_big,
            lambda: None,
        })
    }

    /// `R = log 5 lambda`, `S = log 4 lambda`.
    pub fn from_lambda(lambda: f64, r0: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return invalid("lambda must be positive");
        }
        let mut p = Self::new((5.0 * lambda).ln(), (4.0 * lambda).ln(), r0)?;
        p.lambda = Some(lambda);
        Ok(p)
    }
}

/// Jet of `a_k(r) = (r + 2S - log nu) chi(r / R) xi((r - log nu) / S)`.
pub fn a_k_jet(params: &ConjugateParams, nu: f64, r: f64) -> Jet {
    let l = nu.ln();
    let x = Jet::variable(r);
    let lin = x.offset(2.0 * params.s_big - l);
    let chi_r = chi_jet(x.scale(1.0 / params.r_big));
    let xi_s = xi_jet(x.offset(-l).scale(1.0 / params.s_big));
    lin * chi_r * xi_s
}

/// `j`-th derivative of `a_k` at `r`, `j <= 4`.
pub fn a_k_eval(params: &ConjugateParams, nu: f64, r: f64, j: usize) -> Result<f64> {
    if j > MAX_A_DERIVATIVE {
        return invalid(format!("a_k derivative order {j} exceeds {MAX_A_DERIVATIVE}"));
    }
    Ok(a_k_jet(params, nu, r).derivative(j))
}

/// A smooth radial field with bounded derivative, returned as `(a, a')`.
pub trait RadialField: Sync {
    fn eval(&self, r: f64) -> (f64, f64);
}

impl<F: Fn(f64) -> (f64, f64) + Sync> RadialField for F {
    fn eval(&self, r: f64) -> (f64, f64) {
        self(r)
    }
}

/// The field `a_k` for one mode.
#[derive(Clone, Copy, Debug)]
pub struct AkField {
    pub params: ConjugateParams,
    pub nu: f64,
}

impl RadialField for AkField {
    fn eval(&self, r: f64) -> (f64, f64) {
        let j = a_k_jet(&self.params, self.nu, r);
        (j.value(), j.derivative(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub t: f64,
    pub r: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `d_r gamma_t`.
    pub dgamma: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted local error estimate.
    pub max_error: f64,
}

pub const FLOW_TOL: f64 = 1e-10;

fn rhs(a: &impl RadialField, y: &[f64], out: &mut [f64]) {
    let n = y.len() / 2;
    for i in 0..n {
        let (v, d) = a.eval(y[i]);
        out[i] = v;
        out[n + i] = d * y[n + i];
    }
}

fn rk4_step(a: &impl RadialField, y: &[f64], dt: f64) -> Vec<f64> {
    let m = y.len();
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    rhs(a, y, &mut k1);
    tmp.iter_mut().zip(y).zip(&k1).for_each(|((t, y), k)| *t = y + 0.5 * dt * k);
    rhs(a, &tmp, &mut k2);
    tmp.iter_mut().zip(y).zip(&k2).for_each(|((t, y), k)| *t = y + 0.5 * dt * k);
    rhs(a, &tmp, &mut k3);
    tmp.iter_mut().zip(y).zip(&k3).for_each(|((t, y), k)| *t = y + dt * k);
    rhs(a, &tmp, &mut k4);
    (0..m)
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `gamma' = a(gamma)` jointly with `(d_r gamma)' = a'(gamma) d_r gamma`
/// from `gamma_0(r) = r` to time `t` at every point, using RK4 with
/// step-doubling error control.
pub fn flow_integrate(a: &impl RadialField, t: f64, points: &[f64]) -> Result<FlowResult> {
    let n = points.len();
    let mut y: Vec<f64> = points.iter().copied().chain(std::iter::repeat(1.0).take(n)).collect();
    let mut result = FlowResult {
        t,
        r: points.to_vec(),
        gamma: Vec::new(),
        dgamma: Vec::new(),
        steps: 0,
        rejected: 0,
        max_error: 0.0,
    };
    if t != 0.0 {
        let total = t.abs();
        let sign = t.signum();
        let mut done = 0.0;
        let mut dt = total / 8.0;
        while done < total {
            let step = dt.min(total - done);
            if step < 1e-14 * total.max(1.0) {
                return numerical(format!("flow step underflow at t = {}", sign * done));
            }
            let big = rk4_step(a, &y, sign * step);
            let half = rk4_step(a, &y, 0.5 * sign * step);
            let small = rk4_step(a, &half, 0.5 * sign * step);
            let err = big
                .iter()
                .zip(&small)
                .map(|(b, s)| (b - s).abs() / 15.0 / s.abs().max(1.0))
                .fold(0.0, f64::max);
            if !err.is_finite() {
                return numerical("flow produced non-finite values");
            }
            if err <= FLOW_TOL {
                y = small
                    .iter()
                    .zip(&big)
                    .map(|(s, b)| s + (s - b) / 15.0)
                    .collect();
                done += step;
                result.steps += 1;
                result.max_error = result.max_error.max(err);
            } else {
                result.rejected += 1;
            }
            let factor = if err == 0.0 { 2.0 } else { 0.9 * (FLOW_TOL / err).powf(0.2) };
            dt = step * factor.clamp(0.2, 2.0);
        }
    }
    result.gamma = y[..n].to_vec();
    result.dgamma = y[n..].to_vec();
    Ok(result)
}

/// `||d_r gamma_t||_inf - e^{||a'||_inf |t|}`; positive means a violation.
pub fn gronwall_margin(flow: &FlowResult, a_prime_sup: f64) -> f64 {
    let bound = (a_prime_sup * flow.t.abs()).exp();
    flow.dgamma.iter().map(|d| d.abs() - bound).fold(f64::NEG_INFINITY, f64::max)
}

/// Extended grid values `u_{-1} = u_n = 0` (the Dirichlet nodes) around `phi`.
fn value_at(grid: &RadialGrid, phi: &[C64], x: f64) -> Result<C64> {
    let n = phi.len() as i64;
    let s = (x - grid.r0) / grid.h - 1.0;
    let at = |i: i64| -> C64 {
        if i < 0 || i >= n {
            C64::new(0.0, 0.0)
        } else {
            phi[i as usize]
        }
    };
    if s < -1.0 || s > n as f64 {
        let edge = if s < 0.0 { &phi[..2] } else { &phi[phi.len() - 2..] };
        let scale = phi.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if edge.iter().any(|v| v.norm() > 1e-15 * scale) {
            return numerical(format!("flow exits grid at r = {x}"));
        }
        return Ok(C64::new(0.0, 0.0));
    }
    let j = s.floor() as i64;
    let u = s - j as f64;
    // Four-point cubic Lagrange interpolation on nodes j-1..j+2.
    let (p0, p1, p2, p3) = (at(j - 1), at(j), at(j + 1), at(j + 2));
    let l0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
    let l1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    let l2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    let l3 = (u + 1.0) * u * (u - 1.0) / 6.0;
    Ok(p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3)
}

/// `U_t phi = (d_r gamma_t)^{1/2} phi o gamma_t` with cubic interpolation of
/// `phi` at `gamma_t(r_i)`. The flow must be computed at the grid points.
pub fn unitary_apply(flow: &FlowResult, grid: &RadialGrid, phi: &[C64]) -> Result<Vec<C64>> {
    if flow.r.len() != grid.n || phi.len() != grid.n {
        return invalid("flow, grid and vector sizes differ");
    }
    if flow.t == 0.0 {
        return Ok(phi.to_vec());
    }
    flow.gamma
        .iter()
        .zip(&flow.dgamma)
        .map(|(&g, &d)| Ok(value_at(grid, phi, g)? * d.sqrt()))
        .collect()
}

/// `(h sum |v_i|^2)^{1/2}`.
pub fn grid_norm(grid: &RadialGrid, v: &[C64]) -> f64 {
    (grid.h * v.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt()
}

/// Discrete `A = (a D + D a)/2` with `D = -i` times the centered difference.
///
/// Stored through the real couplings `c_i = (a_i + a_{i+1}) / 4h`, so
/// `(A x)_i = -i (c_i x_{i+1} - c_{i-1} x_{i-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub grid: RadialGrid,
    pub a: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl Generator {
    pub fn from_field(field: &impl RadialField, grid: &RadialGrid) -> Self {
        let a: Vec<f64> = grid.points().iter().map(|&r| field.eval(r).0).collect();
        Self::from_values(grid, a)
    }

    pub fn from_values(grid: &RadialGrid, a: Vec<f64>) -> Self {
        let coupling = a.windows(2).map(|p| (p[0] + p[1]) / (4.0 * grid.h)).collect();
        Generator {
            grid: *grid,
            a,
            coupling,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mi = C64::new(0.0, -1.0);
        (0..n)
            .map(|i| {
                let mut acc = C64::new(0.0, 0.0);
                if i + 1 < n {
                    acc += x[i + 1] * self.coupling[i];
                }
                if i > 0 {
                    acc -= x[i - 1] * self.coupling[i - 1];
                }
                acc * mi
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, &c) in self.coupling.iter().enumerate() {
            m[(i, i + 1)] = C64::new(0.0, -c);
            m[(i + 1, i)] = C64::new(0.0, c);
        }
        m
    }
}

pub fn generator_matrix(params: &ConjugateParams, nu: f64, grid: &RadialGrid) -> Generator {
    Generator::from_field(&AkField { params: *params, nu }, grid)
}

/// `(g, g~)` with `g = a_k / r` in closed form and `g~ = g + r d_r g = a_k'`.
pub fn g_rs_eval(params: &ConjugateParams, r: f64, mu: f64) -> Result<(f64, f64)> {
    if !(mu >= 0.0) {
        return invalid("g_{R,S} needs mu >= 0");
    }
    let half_log = 0.5 * (1.0 + mu).ln();
    let x = Jet::variable(r);
    let chi_r = chi_jet(x.scale(1.0 / params.r_big));
    let xi_s = xi_jet(x.offset(-half_log).scale(1.0 / params.s_big));
    let inner = Jet::constant(1.0) + Jet::constant(2.0 * params.s_big - half_log).div(x);
    let g = chi_r * inner * xi_s;
    Ok((g.value(), g.value() + r * g.derivative(1)))
}

/// Grid sups used for the derivative bounds at one `(R, S)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBoundRow {
    pub lambda: f64,
    pub j: usize,
    /// `sup |a^(j)| S^{j-1}` over the sampled modes and radii.
    pub c_j: f64,
    /// `sup |a a^(j+1)| S^{j-1}`.
    pub c_aa: f64,
}

/// Fitted constants `sup_{k, r} |a_k^(j)| S^{j-1}` for `j = 1..=4` at each
/// `lambda`. Radii run over `[R, r_top]` with `r_top` past both plateaus.
pub fn derivative_bound_table(lambdas: &[f64], nus: &[f64], r0: f64, samples: usize) -> Result<Vec<DerivativeBoundRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let p = ConjugateParams::from_lambda(lambda, r0)?;
        let lmax = nus.iter().map(|n| n.ln()).fold(0.0, f64::max);
        let (lo, hi) = (p.r_big, 2.0 * p.r_big + lmax + 1.0);
        let mut c = [0.0f64; MAX_A_DERIVATIVE + 1];
        let mut caa = [0.0f64; MAX_A_DERIVATIVE + 1];
        for &nu in nus {
            for i in 0..=samples {
                let r = lo + (hi - lo) * i as f64 / samples as f64;
                let jet = a_k_jet(&p, nu, r);
                for j in 1..=MAX_A_DERIVATIVE {
                    c[j] = c[j].max(jet.derivative(j).abs());
                    if j < MAX_A_DERIVATIVE {
                        caa[j] = caa[j].max((jet.value() * jet.derivative(j + 1)).abs());
                    }
                }
            }
        }
        for j in 1..=MAX_A_DERIVATIVE {
            let scale = p.s_big.powi(j as i32 - 1);
            rows.push(DerivativeBoundRow {
                lambda,
                j,
                c_j: c[j] * scale,
                c_aa: caa[j] * scale,
            });
        }
    }
    Ok(rows)
}

/// `sup_r |r d_r g_{R,S}(r, mu)|` over `[R, r_top]` and the given `mu`.
pub fn g_tilde_sup(params: &ConjugateParams, mus: &[f64], r_top: f64, samples: usize) -> Result<f64> {
    let mut sup = 0.0f64;
    for &mu in mus {
        for i in 0..=samples {
            let r = params.r_big + (r_top - params.r_big) * i as f64 / samples as f64;
            let (g, gt) = g_rs_eval(params, r, mu)?;
            sup = sup.max((gt - g).abs());
        }
    }
    Ok(sup)
}

/// Mollifier `theta` in `C_0^inf(-1, 1)` with unit integral.
pub fn theta(r: f64) -> f64 {
    window(3.0 * r) / THETA_MASS
}

pub fn theta_prime(r: f64) -> f64 {
    window_jet(Jet::variable(3.0 * r)).derivative(1) * 3.0 / THETA_MASS
}

/// `int window(3r) dr` over `(-1, 1)`.
const THETA_MASS: f64 = 5.0 / 3.0;

/// `t0`: the largest `t` (to 1e-3 relative) with `||d_r gamma_t - 1||_inf <= 1/2`.
pub fn t0_rule(a: &impl RadialField, points: &[f64], t_max: f64) -> Result<f64> {
    let defect = |t: f64| -> Result<f64> {
        let f = flow_integrate(a, t, points)?;
        Ok(f.dgamma.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max))
    };
    if defect(t_max)? <= 0.5 {
        return Ok(t_max);
    }
    let (mut lo, mut hi) = (0.0, t_max);
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if defect(mid)? <= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierRow {
    pub t: f64,
    pub defect: f64,
    pub defect_over_t2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierReport {
    pub eps: f64,
    pub t0: f64,
    pub rows: Vec<MollifierRow>,
    /// `max defect / t^2`.
    pub c_eps: f64,
    pub j_norm: f64,
    /// `||a'||_inf int (|r theta'(r)| + |theta(r)|) dr`.
    pub j_bound: f64,
}

fn kernel_matrix(points: &[f64], gamma: &[f64], dgamma: &[f64], eps: f64, h: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        (dgamma[i] * dgamma[j]).sqrt() * theta((gamma[i] - gamma[j]) / eps) / eps * h
    })
}

/// Matrix-level check of `||K_t - K_0 - t J_eps|| <= C_eps t^2` for
/// `t = t0, t0/2, ...` (`count` values) and of the bound on `||J_eps||`.
pub fn mollifier_check(a: &impl RadialField, grid: &RadialGrid, eps: f64, count: usize) -> Result<MollifierReport> {
    let pts = grid.points();
    let h = grid.h;
    let (av, ap): (Vec<f64>, Vec<f64>) = pts.iter().map(|&r| a.eval(r)).unzip();
    let a_prime_sup = ap.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let t0 = t0_rule(a, &pts, 1.0)?;
    let ones = vec![1.0; pts.len()];
    let k0 = kernel_matrix(&pts, &pts, &ones, eps, h);
    let n = pts.len();
    let j = DMatrix::from_fn(n, n, |i, k| {
        let d = (pts[i] - pts[k]) / eps;
        (0.5 * (ap[i] + ap[k]) * theta(d) / eps + (av[i] - av[k]) * theta_prime(d) / (eps * eps)) * h
    });
    let j_norm = j.singular_values().max();
    // int |r theta'(r)| + |theta(r)| dr by the midpoint rule on (-1, 1).
    let m = 20_000;
    let integral: f64 = (0..m)
        .map(|i| {
            let r = -1.0 + (i as f64 + 0.5) * 2.0 / m as f64;
            ((r * theta_prime(r)).abs() + theta(r).abs()) * 2.0 / m as f64
        })
        .sum();
    let mut rows = Vec::with_capacity(count);
    let mut t = t0;
    for _ in 0..count {
        let f = flow_integrate(a, t, &pts)?;
        let kt = kernel_matrix(&pts, &f.gamma, &f.dgamma, eps, h);
        let defect = (&kt - &k0 - &j * t).singular_values().max();
        rows.push(MollifierRow {
            t,
            defect,
            defect_over_t2: defect / (t * t),
        });
        t *= 0.5;
    }
    let c_eps = rows.iter().map(|r| r.defect_over_t2).fold(0.0, f64::max);
    Ok(MollifierReport {
        eps,
        t0,
        rows,
        c_eps,
        j_norm,
        j_bound: a_prime_sup * integral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_k_examples() {
        let p = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
        assert_eq!(a_k_eval(&p, 1.0, 5.0, 0).unwrap(), 0.0);
        let v = a_k_eval(&p, 1.0, 15.0, 0).unwrap();
        assert!((v - (15.0 + 2.0 * 400f64.ln())).abs() < 1e-12);
        assert!((v - 26.983).abs() < 1e-3);
        assert!((a_k_eval(&p, 1.0, 15.0, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(a_k_eval(&p, 1.0, 15.0, 5).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(ConjugateParams::new(3.0, 4.0, 1.0).is_err());
        assert!(ConjugateParams::new(4.0, 1.5, 1.0).is_err());
        assert!(ConjugateParams::from_lambda(100.0, 1.0).is_ok());
    }

    #[test]
    fn zero_field_flow() {
        let pts = [1.0, 2.0, 3.0];
        let f = flow_integrate(&|_r: f64| (0.0, 0.0), 0.7, &pts).unwrap();
        assert_eq!(f.gamma, pts.to_vec());
        assert!(f.dgamma.iter().all(|&d| d == 1.0));
    }

    #[test]
    fn g_rs_examples() {
        let p = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
        assert_eq!(g_rs_eval(&p, 5.0, 3.0).unwrap(), (0.0, 0.0));
        let (g, _) = g_rs_eval(&p, 20.0, 3.0).unwrap();
        let expect = 1.0 + (2.0 * p.s_big - 0.5 * 4f64.ln()) / 20.0;
        assert!((g - expect).abs() < 1e-12);
        assert!(g_rs_eval(&p, 20.0, -1.0).is_err());
    }

    #[test]
    fn theta_has_unit_mass() {
        let m = 20_000;
        let s: f64 = (0..m).map(|i| theta(-1.0 + (i as f64 + 0.5) * 2.0 / m as f64) * 2.0 / m as f64).sum();
        assert!((s - 1.0).abs() < 1e-9, "{s}");
    }
}
