//! Limiting absorption along a decreasing `eps` schedule and the
//! `lambda`-scaling study of `sup_k ||W_{-s}(H - lambda - i0)^{-1} W_{-s}||`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conjugate::{a_k_jet, ConjugateParams};
use crate::error::{invalid, Result};
use crate::linops::{
    discretize, local_level_spacing, shifted_solve, weighted_operator_norm, CapProfile, DiscreteOperator,
    PowerOptions, RadialGrid,
};
use crate::model::{build_spectrum, mode_operator_spec, nu_of, ModelConfig};
use crate::profiles::w;
use crate::weights::{WeightKind, WeightSpec};

/// Geometric schedule `floor / ratio^steps, ..., floor / ratio, floor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSchedule {
    pub ratio: f64,
    pub steps: usize,
    /// Absolute floor.
    #[serde(default)]
    pub floor: f64,
    /// Raise the floor to three times the local level spacing.
    #[serde(default = "yes")]
    pub level_spacing_floor: bool,
}

fn yes() -> bool {
    true
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule {
            ratio: 0.5,
            steps: 5,
            floor: 0.0,
            level_spacing_floor: true,
        }
    }
}

impl EpsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return invalid("eps ratio must lie in (0, 1)");
        }
        if self.steps == 0 {
            return invalid("eps schedule needs at least one step");
        }
        if !(self.floor >= 0.0) || !self.floor.is_finite() {
            return invalid("eps floor must be finite and nonnegative");
        }
        Ok(())
    }

    /// Decreasing values ending at `floor`.
    pub fn values(&self, floor: f64) -> Vec<f64> {
        (0..=self.steps)
            .rev()
            .map(|j| floor / self.ratio.powi(j as i32))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitingAbsorption {
    /// Value at the last schedule point.
    pub norm: f64,
    /// `(eps, norm)` along the schedule.
    pub values: Vec<(f64, f64)>,
    pub eps_floor: f64,
    pub converged: bool,
    /// The schedule hit the floor without meeting the 1% Cauchy test.
    pub truncation_limited: bool,
    /// Relative difference of the last two values.
    pub cauchy_tail: f64,
    /// Relative change of the final value when the absorbing layer is doubled.
    pub cap_delta: f64,
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Copy of `op` with the absorbing layer scaled by `factor`.
pub fn with_cap_scaled(op: &DiscreteOperator, factor: f64) -> DiscreteOperator {
    DiscreteOperator {
        cap: op.cap.map(|c| c.scaled(factor)),
        absorb: op.absorb.iter().map(|v| v * factor).collect(),
        ..op.clone()
    }
}

/// Weighted norms `||W_l (op - lambda - i eps)^{-1} W_r||` down the schedule.
///
/// Stops at the first pair of successive values within 1%; the reported
/// norm is the last computed value.
pub fn limiting_absorption(
    op: &DiscreteOperator,
    lambda: f64,
    w_left: &[f64],
    w_right: &[f64],
    schedule: &EpsSchedule,
) -> Result<LimitingAbsorption> {
    if op.cap.is_none() {
        return invalid("limiting absorption needs an absorbing layer");
    }
    schedule.validate()?;
    if w_left.len() != op.dim() || w_right.len() != op.dim() {
        return invalid("weight length does not match the operator");
    }
    let eps_min = if schedule.level_spacing_floor {
        3.0 * local_level_spacing(&op.hermitian_part(), lambda)
    } else {
        0.0
    };
    let eps_floor = schedule.floor.max(eps_min);
    if !(eps_floor > 0.0) {
        return invalid("eps floor must be positive");
    }
    let opts = PowerOptions::default();
    let mut values: Vec<(f64, f64)> = Vec::new();
    let mut converged = false;
    for eps in schedule.values(eps_floor) {
        let est = weighted_operator_norm(op, C64::new(lambda, eps), w_left, w_right, opts)?;
        if let Some(&(_, prev)) = values.last() {
            values.push((eps, est.norm));
            if rel_diff(prev, est.norm) < 0.01 {
                converged = true;
                break;
            }
        } else {
            values.push((eps, est.norm));
        }
    }
    let n = values.len();
    let (eps_last, norm) = values[n - 1];
    let cauchy_tail = if n > 1 { rel_diff(values[n - 2].1, norm) } else { 0.0 };
    let doubled = with_cap_scaled(op, 2.0);
    let norm2 = weighted_operator_norm(&doubled, C64::new(lambda, eps_last), w_left, w_right, opts)?.norm;
    Ok(LimitingAbsorption {
        norm,
        values,
        eps_floor,
        converged,
        truncation_limited: !converged,
        cauchy_tail,
        cap_delta: rel_diff(norm, norm2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoModel {
    /// `rho(lambda) = lambda^{-1/2}`.
    NonTrapping,
    /// `rho(lambda) = lambda^exponent`.
    Custom { exponent: f64 },
}

impl RhoModel {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            RhoModel::NonTrapping => lambda.powf(-0.5),
            RhoModel::Custom { exponent } => lambda.powf(*exponent),
        }
    }
}

/// Grid per `lambda`: spacing `min(max_spacing, 2 pi / (ppw sqrt(lambda)))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub r_max: f64,
    pub points_per_wavelength: f64,
    pub max_spacing: f64,
    pub stencil_order: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            r_max: 21.0,
            points_per_wavelength: 12.0,
            max_spacing: 0.05,
            stencil_order: 2,
        }
    }
}

impl SweepGrid {
    pub fn build(&self, r0: f64, lambda: f64) -> Result<RadialGrid> {
        if !(self.points_per_wavelength > 0.0 && self.max_spacing > 0.0) {
            return invalid("grid resolution parameters must be positive");
        }
        let h = self.max_spacing.min(2.0 * std::f64::consts::PI / (self.points_per_wavelength * lambda.sqrt()));
        let n = ((self.r_max - r0) / h).ceil() as usize;
        RadialGrid::new(r0, self.r_max, n.saturating_sub(1), self.stencil_order)
    }
}

/// Absorbing layer over the last `fraction` of the grid with strength
/// `strength * sqrt(lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCap {
    pub fraction: f64,
    pub strength: f64,
    pub exponent: u32,
}

impl Default for SweepCap {
    fn default() -> Self {
        SweepCap {
            fraction: 0.25,
            strength: 4.0,
            exponent: 2,
        }
    }
}

impl SweepCap {
    pub fn profile(&self, grid: &RadialGrid, lambda: f64) -> Result<CapProfile> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return invalid("absorbing fraction must lie in (0, 1)");
        }
        let cap = CapProfile {
            r_abs: grid.r_max - self.fraction * (grid.r_max - grid.r0),
            strength: self.strength * lambda.sqrt(),
            exponent: self.exponent,
        };
        cap.validate(grid)?;
        Ok(cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub lambdas: Vec<f64>,
    pub s: f64,
    pub s0: f64,
    pub rho: RhoModel,
    pub k_max: usize,
    #[serde(default)]
    pub grid: SweepGrid,
    #[serde(default)]
    pub eps: EpsSchedule,
    #[serde(default)]
    pub cap: SweepCap,
    pub weight: WeightKind,
}

impl SweepConfig {
    /// Circle cross section, `n = 2`, `r0 = 1`, `s = s0 = 1`, non-trapping `rho`.
    pub fn new(lambdas: Vec<f64>, k_max: usize) -> Self {
        SweepConfig {
            model: ModelConfig::new(2, 1.0, crate::model::CrossSection::Circle { radius: 1.0 }),
            lambdas,
            s: 1.0,
            s0: 1.0,
            rho: RhoModel::NonTrapping,
            k_max,
            grid: SweepGrid::default(),
            eps: EpsSchedule::default(),
            cap: SweepCap::default(),
            weight: WeightKind::ModeShifted,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.5) {
            return invalid("weight exponent s must exceed 1/2");
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        self.model.validate()?;
        self.eps.validate()?;
        if !self.eps.level_spacing_floor {
            return invalid("sweep eps floor must respect the level-spacing rule");
        }
        if self.lambdas.is_empty() {
            return invalid("sweep needs at least one lambda");
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return invalid("lambda values must be positive");
        }
        if !(self.s >= 0.0) || !(self.s0 >= 0.0) {
            return invalid("exponents must be nonnegative");
        }
        Ok(())
    }
}

/// One schedule point of one `(lambda, k)` task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub k: usize,
    pub mu: f64,
    pub eps: f64,
    pub norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeNorm {
    pub lambda: f64,
    pub k: usize,
    pub mu: f64,
    pub multiplicity: usize,
    pub result: Option<LimitingAbsorption>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub grid_points: usize,
    /// `sup_k` of the per-mode norms; `None` when a task failed.
    pub n: Option<f64>,
    pub argmax_k: Option<usize>,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub s: f64,
    pub s0: f64,
    pub rho: RhoModel,
    pub rows: Vec<SweepRow>,
    pub modes: Vec<ModeNorm>,
    pub lambdas: Vec<LambdaRow>,
    /// Largest relative change under a doubled absorbing layer.
    pub cap_sensitivity: f64,
    /// Largest final Cauchy difference over all tasks.
    pub max_cauchy_tail: f64,
}

fn mode_task(config: &SweepConfig, grid: &RadialGrid, lambda: f64, k: usize, mu: f64) -> Result<LimitingAbsorption> {
    let spectrum = build_spectrum(&config.model.cross_section, config.k_max)?;
    let spec = mode_operator_spec(&config.model, &spectrum, k)?;
    debug_assert_eq!(spec.mu, mu);
    let cap = config.cap.profile(grid, lambda)?;
    let op = discretize(&spec, grid, Some(cap))?;
    let weights = WeightSpec {
        kind: config.weight,
        s: config.s,
    }
    .vector(grid, nu_of(mu));
    limiting_absorption(&op, lambda, &weights, &weights, &config.eps)
}

fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let spectrum = build_spectrum(&config.model.cross_section, config.k_max)?;
    let mut grids = Vec::with_capacity(config.lambdas.len());
    for &l in &config.lambdas {
        grids.push(config.grid.build(config.model.r0, l)?);
    }
    let tasks: Vec<(usize, usize)> = (0..config.lambdas.len())
        .flat_map(|i| (0..spectrum.len()).map(move |k| (i, k)))
        .collect();
    let outcomes: Vec<Result<LimitingAbsorption>> = tasks
        .par_iter()
        .map(|&(i, k)| mode_task(config, &grids[i], config.lambdas[i], k, spectrum.entries[k].mu))
        .collect();

    let mut rows = Vec::new();
    let mut modes = Vec::with_capacity(tasks.len());
    for (&(i, k), out) in tasks.iter().zip(outcomes) {
        let entry = &spectrum.entries[k];
        let lambda = config.lambdas[i];
        let (result, error) = match out {
            Ok(la) => {
                for &(eps, norm) in &la.values {
                    rows.push(SweepRow {
                        lambda,
                        k,
                        mu: entry.mu,
                        eps,
                        norm,
                        converged: la.converged,
                    });
                }
                (Some(la), None)
            }
            Err(e) => (None, Some(e.to_string())),
        };
        modes.push(ModeNorm {
            lambda,
            k,
            mu: entry.mu,
            multiplicity: entry.multiplicity,
            result,
            error,
        });
    }

    let lambdas = config
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let block = &modes[i * spectrum.len()..(i + 1) * spectrum.len()];
            let failed: Vec<String> = block
                .iter()
                .filter_map(|m| m.error.as_ref().map(|e| format!("k = {}: {e}", m.k)))
                .collect();
            let (n, argmax_k) = if failed.is_empty() {
                let best = block
                    .iter()
                    .map(|m| (m.result.as_ref().map_or(0.0, |r| r.norm), m.k))
                    .fold((f64::NEG_INFINITY, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
                (Some(best.0), Some(best.1))
            } else {
                (None, None)
            };
            LambdaRow {
                lambda,
                grid_points: grids[i].n,
                n,
                argmax_k,
                diagnostic: (!failed.is_empty()).then(|| failed.join("; ")),
            }
        })
        .collect();

    let finished = modes.iter().filter_map(|m| m.result.as_ref());
    let cap_sensitivity = finished.clone().map(|r| r.cap_delta).fold(0.0, f64::max);
    let max_cauchy_tail = finished.map(|r| r.cauchy_tail).fold(0.0, f64::max);
    Ok(SweepResult {
        s: config.s,
        s0: config.s0,
        rho: config.rho,
        rows,
        modes,
        lambdas,
        cap_sensitivity,
        max_cauchy_tail,
    })
}

/// Runs every `(lambda, k)` task in parallel and reduces to `N(lambda)`.
///
/// The output is independent of the number of worker threads.
pub fn lambda_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    run_sweep(config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fit `log N = p log lambda + q log log lambda + log C`.
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Root-mean-square residual of the log fit.
    pub residual: f64,
    /// Exponent `2 s0 + 2 s` of the log factor in the bound.
    pub bound_exponent: f64,
    /// Smallest `C'` with `N <= C' (log lambda)^{2 s0 + 2 s} rho(lambda)`.
    #[serde(rename = "Cprime")]
    pub c_prime: f64,
    pub pass: bool,
}

/// Least-squares fit over `(lambda, N)` pairs plus the bound constant.
pub fn fit_scaling_points(points: &[(f64, f64)], bound_exponent: f64, rho: RhoModel) -> Result<ScalingFit> {
    if points.len() < 4 {
        return invalid("scaling fit needs at least four lambda points");
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(l, _)| (lo.min(l), hi.max(l)));
    if (hi / lo).log10() < 2.0 - 1e-9 {
        return invalid("lambda points must span at least two decades");
    }
    if points.iter().any(|&(l, n)| !(l > 1.0) || !(n > 0.0)) {
        return invalid("scaling fit needs lambda > 1 and positive norms");
    }
    let m = points.len();
    let a = DMatrix::from_fn(m, 3, |i, j| {
        let l = points[i].0.ln();
        [l, l.ln(), 1.0][j]
    });
    let b = DVector::from_iterator(m, points.iter().map(|&(_, n)| n.ln()));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| crate::error::LabError::Numerical(e.to_string()))?;
    let res = &a * &coef - &b;
    let residual = (res.norm_squared() / m as f64).sqrt();
    let c_prime = points
        .iter()
        .map(|&(l, n)| n / (l.ln().powf(bound_exponent) * rho.eval(l)))
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        p: coef[0],
        q: coef[1],
        c: coef[2].exp(),
        residual,
        bound_exponent,
        c_prime,
        pass: c_prime.is_finite(),
    })
}

/// Fit over the completed rows of a sweep.
pub fn fit_scaling(result: &SweepResult) -> Result<ScalingFit> {
    let points: Vec<(f64, f64)> = result.lambdas.iter().filter_map(|r| r.n.map(|n| (r.lambda, n))).collect();
    fit_scaling_points(&points, 2.0 * result.s0 + 2.0 * result.s, result.rho)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRatioRow {
    pub lambda: f64,
    pub mode_shifted: Option<f64>,
    pub polynomial: Option<f64>,
    pub ratio: Option<f64>,
}

/// `N_modeshifted(lambda) / N_polynomial(lambda)` for each configured `lambda`.
pub fn weight_comparison(lambdas: &[f64], s: f64, config: &SweepConfig) -> Result<Vec<WeightRatioRow>> {
    let run = |kind| {
        let cfg = SweepConfig {
            lambdas: lambdas.to_vec(),
            s,
            weight: kind,
            ..config.clone()
        };
        cfg.validate_common()?;
        run_sweep(&cfg)
    };
    let shifted = run(WeightKind::ModeShifted)?;
    let poly = run(WeightKind::Polynomial)?;
    Ok(shifted
        .lambdas
        .iter()
        .zip(&poly.lambdas)
        .map(|(a, b)| WeightRatioRow {
            lambda: a.lambda,
            mode_shifted: a.n,
            polynomial: b.n,
            ratio: match (a.n, b.n) {
                (Some(x), Some(y)) if y > 0.0 => Some(x / y),
                _ => None,
            },
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub lambda: f64,
    /// `sup_{k, r >= R} 1 + a_k(r) / w(r - log nu_k)`.
    pub sup: f64,
    /// `sup / log lambda`.
    pub c: f64,
}

/// Grid supremum of `1 + a_k(r) / w(r - log nu_k)` over `k <= K_max` and
/// `R <= r <= r_max`.
pub fn sup_estimate(lambda: f64, model: &ModelConfig, k_max: usize, r_max: f64, h: f64) -> Result<SupEstimate> {
    let params = ConjugateParams::from_lambda(lambda, model.r0)?;
    if !(r_max > params.r_big) || !(h > 0.0) {
        return invalid("sup estimate needs r_max > R and h > 0");
    }
    let spectrum = build_spectrum(&model.cross_section, k_max)?;
    let steps = ((r_max - params.r_big) / h).ceil() as usize;
    let mut sup = f64::NEG_INFINITY;
    for e in &spectrum.entries {
        let log_nu = e.log_nu();
        for i in 0..=steps {
            let r = params.r_big + (i as f64 * h).min(r_max - params.r_big);
            let a = a_k_jet(&params, e.nu, r).value();
            sup = sup.max(1.0 + a / w(r - log_nu));
        }
    }
    Ok(SupEstimate {
        lambda,
        sup,
        c: sup / lambda.ln(),
    })
}

/// Relative residual of
/// `(H - z)^{-1} x = (H - Z)^{-1} x + (z - Z)(H - Z)^{-2} x + (z - Z)^2 (H - Z)^{-1}(H - z)^{-1}(H - Z)^{-1} x`.
pub fn second_resolvent_residual(op: &DiscreteOperator, z: C64, big_z: C64, x: &[C64]) -> Result<f64> {
    let lhs = shifted_solve(op, z, x)?;
    let y1 = shifted_solve(op, big_z, x)?;
    let y2 = shifted_solve(op, big_z, &y1)?;
    let y3 = shifted_solve(op, big_z, &shifted_solve(op, z, &y1)?)?;
    let d = z - big_z;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..x.len() {
        let rhs = y1[i] + d * y2[i] + d * d * y3[i];
        num += (lhs[i] - rhs).norm_sqr();
        den += lhs[i].norm_sqr();
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}
