//! Weight scale `W_{-s}`, polynomial weights, symbol weights and the
//! numerical checks attached to them.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linops::RadialGrid;
use crate::profiles::{japanese, q, w, window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `w^{-s}(r - log nu_k)`
    ModeShifted,
    /// `<r>^{-s}`
    Polynomial,
}

/// Weight `W_{-s}` (for `s >= 0` a bounded multiplier).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub s: f64,
}

impl WeightSpec {
    pub fn vector(&self, grid: &RadialGrid, nu: f64) -> Vec<f64> {
        match self.kind {
            WeightKind::ModeShifted => mode_weight_vector(grid, nu, self.s),
            WeightKind::Polynomial => polynomial_weight_vector(grid, self.s),
        }
    }
}

/// Entries `w^{-s}(r_i - log nu)`.
pub fn mode_weight_vector(grid: &RadialGrid, nu: f64, s: f64) -> Vec<f64> {
    let shift = nu.ln();
    grid.points().iter().map(|&r| w(r - shift).powf(-s)).collect()
}

/// Entries `<r_i>^{-s}`.
pub fn polynomial_weight_vector(grid: &RadialGrid, s: f64) -> Vec<f64> {
    grid.points().iter().map(|&r| japanese(r).powf(-s)).collect()
}

/// Symbol weight `w_s(r, eta) = w^s(r - log <eta>)` for `eta` in `R^{n-1}`.
pub fn symbol_weight(s: f64, r: f64, eta: &[f64]) -> f64 {
    let eta2: f64 = eta.iter().map(|v| v * v).sum();
    w(r - 0.5 * (1.0 + eta2).ln()).powf(s)
}

/// `1 + sup w' / inf w`, the constant in `w(x) <= C w(x1)(1 + |x - x1|)`.
pub fn temperate_constant() -> f64 {
    let n = 20_000;
    let (mut sup_d, mut inf_w) = (0.0f64, f64::INFINITY);
    for i in 0..=n {
        let x = -0.5 + 2.0 * i as f64 / n as f64;
        let d = crate::profiles::profile_eval(crate::profiles::Profile::W, x, 1).unwrap();
        sup_d = sup_d.max(d.abs());
        inf_w = inf_w.min(w(x));
    }
    1.0 + sup_d / inf_w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperateViolation {
    pub r: f64,
    pub r1: f64,
    pub eta: Vec<f64>,
    pub eta1: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Samples `(r, r1, eta, eta1)` from `[-50, 50]^{2n}` and lists every
/// violation of `w(r - log<eta>) <= C w(r1 - log<eta1>)(1 + |r - r1| + |eta - eta1|)^M`.
pub fn temperate_check(
    sample_count: usize,
    c: f64,
    m: f64,
    eta_dim: usize,
    seed: u64,
) -> Result<Vec<TemperateViolation>> {
    if !(c > 0.0) || !(m >= 0.0) {
        return invalid("temperate check needs C > 0 and M >= 0");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..sample_count {
        let r: f64 = rng.gen_range(-50.0..50.0);
        let r1: f64 = rng.gen_range(-50.0..50.0);
        let eta: Vec<f64> = (0..eta_dim).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let eta1: Vec<f64> = (0..eta_dim).map(|_| rng.gen_range(-50.0..50.0)).collect();
        if let Some(v) = temperate_point(c, m, r, r1, &eta, &eta1) {
            out.push(v);
        }
    }
    Ok(out)
}

/// Single-point version of [`temperate_check`].
pub fn temperate_point(
    c: f64,
    m: f64,
    r: f64,
    r1: f64,
    eta: &[f64],
    eta1: &[f64],
) -> Option<TemperateViolation> {
    let lhs = symbol_weight(1.0, r, eta);
    let deta: f64 = eta.iter().zip(eta1).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let rhs = c * symbol_weight(1.0, r1, eta1) * (1.0 + (r - r1).abs() + deta).powf(m);
    (lhs > rhs).then(|| TemperateViolation {
        r,
        r1,
        eta: eta.to_vec(),
        eta1: eta1.to_vec(),
        lhs,
        rhs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnboundednessReport {
    pub log_nu: Vec<f64>,
    pub ratios: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_c: f64,
    pub strictly_increasing: bool,
    pub pass: bool,
}

/// Unit-norm bump supported in `[c - 1, c + 1]`.
fn bump(r: f64, c: f64) -> f64 {
    window(3.0 * (r - c))
}

/// `||W_{-s} <r>^s phi_j||` for unit bumps centered at `log nu_j + offset`.
pub fn unboundedness_demo(
    grid: &RadialGrid,
    s: f64,
    nus: &[f64],
    offset: f64,
) -> Result<UnboundednessReport> {
    if !(s >= 0.0) {
        return invalid("unboundedness demo needs s >= 0");
    }
    let pts = grid.points();
    let mut ratios = Vec::with_capacity(nus.len());
    let mut log_nu = Vec::with_capacity(nus.len());
    for &nu in nus {
        let l = nu.ln();
        let c = l + offset;
        if c - 1.0 < grid.r0 || c + 1.0 > grid.r_max {
            return invalid(format!("bump around r = {c} leaves the grid"));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &r in &pts {
            let b = bump(r, c);
            if b == 0.0 {
                continue;
            }
            den += b * b;
            num += b * b * (w(r - l).powf(-2.0 * s) * japanese(r).powf(2.0 * s));
        }
        ratios.push((num / den).sqrt());
        log_nu.push(l);
    }
    let strictly_increasing = ratios.windows(2).all(|p| p[1] > p[0]);
    let (fitted_exponent, fitted_c) = if ratios.len() >= 2 {
        let xs: Vec<f64> = log_nu.iter().map(|l| japanese(l + offset).ln()).collect();
        let ys: Vec<f64> = ratios.iter().map(|v| v.ln()).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        (slope, intercept.exp())
    } else {
        (f64::NAN, f64::NAN)
    };
    let dominates = log_nu
        .iter()
        .zip(&ratios)
        .all(|(l, r)| *r >= 0.5 * fitted_c * japanese(*l).powf(s));
    Ok(UnboundednessReport {
        log_nu,
        ratios,
        fitted_exponent,
        fitted_c,
        strictly_increasing,
        pass: (s == 0.0 || strictly_increasing) && fitted_c > 0.0 && dominates,
    })
}

/// Least squares `y = a x + b`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Bounded angular symbol used in the factorization check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngularSymbol {
    One,
    /// `1 + beta cos(theta)`
    Cosine { beta: f64 },
}

impl AngularSymbol {
    fn eval(&self, theta: f64) -> f64 {
        match self {
            AngularSymbol::One => 1.0,
            AngularSymbol::Cosine { beta } => 1.0 + beta * theta.cos(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub s: f64,
    pub sigma: f64,
    pub levels: Vec<LadderLevel>,
    pub max_over_min: f64,
    pub bounded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorLadder {
    pub n_r0: usize,
    pub n_theta0: usize,
    pub r_min: f64,
    /// Radial padding above `log(n_theta / 2)`.
    pub r_pad: f64,
    pub levels: usize,
}

impl Default for FactorLadder {
    fn default() -> Self {
        FactorLadder {
            n_r0: 24,
            n_theta0: 32,
            r_min: 0.5,
            r_pad: 0.0,
            levels: 3,
        }
    }
}

/// Norm of `W_{|s|} kappa Op(a) kappa~` with `a = w_{-s+i sigma}(r, eta) b(theta)`
/// on the circle, along a ladder of radial and angular resolutions. A negative
/// `s` flips only the symbol, giving the unbounded `W_1 Op(w_1)` control.
///
/// Level `l` doubles both resolutions and sets `r_max = r_pad + log(n_theta / 2)`,
/// so the largest resolved frequency sits at the top of the radial range.
/// The operator has no radial derivatives, so it is block diagonal in `r`;
/// each block is applied with FFTs in `theta` and its norm is found by power
/// iteration.
pub fn quantize_and_factor_check(
    s: f64,
    sigma: f64,
    ladder: FactorLadder,
    b: AngularSymbol,
) -> Result<FactorReport> {
    if ladder.levels < 3 {
        return invalid("resolution ladder needs at least 3 levels");
    }
    let mut levels = Vec::with_capacity(ladder.levels);
    let mut planner = FftPlanner::<f64>::new();
    for l in 0..ladder.levels {
        let n_r = ladder.n_r0 << l;
        let n_theta = ladder.n_theta0 << l;
        let r_max = ladder.r_pad + (n_theta as f64 / 2.0).ln();
        let fwd = planner.plan_fft_forward(n_theta);
        let inv = planner.plan_fft_inverse(n_theta);
        let thetas: Vec<f64> = (0..n_theta)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_theta as f64)
            .collect();
        let etas: Vec<f64> = (0..n_theta)
            .map(|j| if j <= n_theta / 2 { j as f64 } else { j as f64 - n_theta as f64 })
            .collect();
        // Angular plateaus: kappa inside kappa~ = 1.
        let pi = std::f64::consts::PI;
        let kappa_t: Vec<f64> = thetas.iter().map(|t| window(6.0 * (t - pi) / pi)).collect();
        let kappa_tt: Vec<f64> = thetas.iter().map(|t| window(3.0 * (t - pi) / pi)).collect();
        let bvals: Vec<f64> = thetas.iter().map(|&t| b.eval(t)).collect();
        let mut norm = 0.0f64;
        for i in 0..n_r {
            let r = ladder.r_min + (r_max - ladder.r_min) * (i as f64 + 0.5) / n_r as f64;
            // Radial plateaus: kappa~ = 1 where kappa is nonzero.
            let kr = q((r - ladder.r_min) / 0.5) * q((r_max - r) / 0.5);
            let krr = 1.0;
            if kr == 0.0 {
                continue;
            }
            let symbol: Vec<C64> = etas
                .iter()
                .map(|&e| {
                    let x = w(r - japanese(e).ln());
                    C64::from_polar(x.powf(-s), sigma * x.ln())
                })
                .collect();
            let outer: Vec<f64> = etas.iter().map(|&e| w(r - japanese(e).ln()).powf(s.abs())).collect();
            let scale = 1.0 / n_theta as f64;
            let apply = |v: &[C64], adjoint: bool| -> Vec<C64> {
                let mut u = v.to_vec();
                let mult_theta = |u: &mut Vec<C64>, m: &dyn Fn(usize) -> f64| {
                    u.iter_mut().enumerate().for_each(|(j, x)| *x *= m(j));
                };
                if !adjoint {
                    mult_theta(&mut u, &|j| kappa_tt[j] * krr);
                    fwd.process(&mut u);
                    u.iter_mut().zip(&symbol).for_each(|(x, a)| *x *= a * scale);
                    inv.process(&mut u);
                    mult_theta(&mut u, &|j| kappa_t[j] * kr * bvals[j]);
                    fwd.process(&mut u);
                    u.iter_mut().zip(&outer).for_each(|(x, a)| *x *= a * scale);
                    inv.process(&mut u);
                } else {
                    fwd.process(&mut u);
                    u.iter_mut().zip(&outer).for_each(|(x, a)| *x *= a * scale);
                    inv.process(&mut u);
                    mult_theta(&mut u, &|j| kappa_t[j] * kr * bvals[j]);
                    fwd.process(&mut u);
                    u.iter_mut().zip(&symbol).for_each(|(x, a)| *x *= a.conj() * scale);
                    inv.process(&mut u);
                    mult_theta(&mut u, &|j| kappa_tt[j] * krr);
                }
                u
            };
            let est = crate::linops::norm::power_sqrt(
                n_theta,
                crate::linops::PowerOptions::default(),
                |x| Ok(apply(&apply(x, false), true)),
            )?;
            norm = norm.max(est.norm);
        }
        levels.push(LadderLevel {
            n_r,
            n_theta,
            r_max,
            norm,
        });
    }
    let max = levels.iter().map(|l| l.norm).fold(0.0, f64::max);
    let min = levels.iter().map(|l| l.norm).fold(f64::INFINITY, f64::min);
    let max_over_min = max / min;
    Ok(FactorReport {
        s,
        sigma,
        levels,
        max_over_min,
        bounded: max_over_min <= 2.0,
    })
}

/// Fits `N` in `norm <= C (1 + |sigma|)^N` from the top ladder level of each report.
pub fn fit_sigma_growth(reports: &[FactorReport]) -> f64 {
    let xs: Vec<f64> = reports.iter().map(|r| (1.0 + r.sigma.abs()).ln()).collect();
    let ys: Vec<f64> = reports
        .iter()
        .map(|r| r.levels.last().map_or(f64::NAN, |l| l.norm).ln())
        .collect();
    linear_fit(&xs, &ys).0.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolDecayReport {
    pub s: f64,
    pub samples: usize,
    /// Fitted constant for the derivative bounds.
    pub c_derivatives: f64,
    /// Fitted constant for `e^{-2r} eta^2 / (rho^2 + e^{-2r} eta^2 + 1) <= C w_{-s}`.
    pub c_potential: f64,
    pub finite: bool,
}

/// Sample point `(r, rho, eta)` for the hyperbolic symbol checks.
fn symbol_sample(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let r = rng.gen_range(0.0..30.0);
    let rho = rng.gen_range(-100.0..100.0);
    let mag: f64 = rng.gen_range(0.0..30.0);
    let eta = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * mag.exp_m1();
    (r, rho, eta)
}

/// `|d^k_r d^g_eta p| / (p w_{-s})` maximized over `k + g in {1, 2}` with
/// `p = (rho^2 + e^{-2r} eta^2 + 1)^{-1}`.
pub fn symbol_derivative_ratio(s: f64, r: f64, rho: f64, eta: f64) -> f64 {
    let p = |r: f64, eta: f64| 1.0 / (rho * rho + (-2.0 * r).exp() * eta * eta + 1.0);
    let hr = 1e-4;
    let he = 1e-4 * eta.abs().max(1.0);
    let p0 = p(r, eta);
    let dr = (p(r + hr, eta) - p(r - hr, eta)) / (2.0 * hr);
    let de = (p(r, eta + he) - p(r, eta - he)) / (2.0 * he);
    let drr = (p(r + hr, eta) - 2.0 * p0 + p(r - hr, eta)) / (hr * hr);
    let dee = (p(r, eta + he) - 2.0 * p0 + p(r, eta - he)) / (he * he);
    let dre = (p(r + hr, eta + he) - p(r + hr, eta - he) - p(r - hr, eta + he)
        + p(r - hr, eta - he))
        / (4.0 * hr * he);
    let weight = p0 * symbol_weight(-s, r, &[eta]);
    [dr, de, drr, dee, dre]
        .iter()
        .map(|d| d.abs() / weight)
        .fold(0.0, f64::max)
}

pub fn symbol_potential_ratio(s: f64, r: f64, rho: f64, eta: f64) -> f64 {
    let v = (-2.0 * r).exp() * eta * eta;
    v / (rho * rho + v + 1.0) / symbol_weight(-s, r, &[eta])
}

pub fn symbol_decay_check(s: f64, samples: usize, seed: u64) -> SymbolDecayReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut cd, mut cp) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (r, rho, eta) = symbol_sample(&mut rng);
        cd = cd.max(symbol_derivative_ratio(s, r, rho, eta));
        cp = cp.max(symbol_potential_ratio(s, r, rho, eta));
    }
    SymbolDecayReport {
        s,
        samples,
        c_derivatives: cd,
        c_potential: cp,
        finite: cd.is_finite() && cp.is_finite(),
    }
}

/// Counts points of a fresh sample exceeding the fitted constants.
pub fn symbol_decay_violations(report: &SymbolDecayReport, slack: f64, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..report.samples)
        .filter(|_| {
            let (r, rho, eta) = symbol_sample(&mut rng);
            symbol_derivative_ratio(report.s, r, rho, eta) > slack * report.c_derivatives
                || symbol_potential_ratio(report.s, r, rho, eta) > slack * report.c_potential
        })
        .count()
}
