//! The differential inequality for `F_z(eps) = <A>_eps^{-s} G_z(eps) <A>_eps^{-s}`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{constants_eval, regularized_weight, window_moment, Constants, ConstantsInput};
use super::{accepted_instances, check_regime, op_norm, s_factor, SuiteReport, TestbedConfig, TestbedInstance, I};
use crate::error::{invalid, Result};

/// Largest ratio between consecutive schedule points.
pub const MAX_STEP_RATIO: f64 = 1.2;
/// Multiplicative slack on the right-hand side.
pub const DIFF_SLACK: f64 = 1.2;

/// Measured constants of an instance for a given positive commutator constant.
pub fn instance_constants(inst: &TestbedInstance, alpha: f64) -> Result<ConstantsInput> {
    let n = inst.n;
    let id = DMatrix::<C64>::identity(n, n);
    let h_plus = (&inst.h + &id * I).try_inverse();
    let h_minus = (&inst.h - &id * I).try_inverse();
    let (Some(h_plus), Some(h_minus)) = (h_plus, h_minus) else {
        return invalid("H +- i is not invertible");
    };
    let n_comm = op_norm(&(&inst.comm * h_plus));
    let i_comm = &inst.comm * I;
    let double = &inst.a * &i_comm - &i_comm * &inst.a;
    let c_ha = op_norm(&(h_minus * double));
    let input = ConstantsInput {
        lambda: inst.lambda,
        delta: inst.delta,
        alpha,
        n_comm: n_comm.max(f64::MIN_POSITIVE),
        s_factor: s_factor(inst, alpha),
        delta_f: window_moment() / inst.delta,
        c_ha: c_ha.max(f64::MIN_POSITIVE),
    };
    input.validate()?;
    Ok(input)
}

/// `<A>_eps^{-s} G_z(eps) <A>_eps^{-s}`.
pub fn weighted_resolvent(inst: &TestbedInstance, s: f64, z: C64, eps: f64) -> Result<DMatrix<C64>> {
    let w = inst.function_of_a(|a| regularized_weight(s, eps, a));
    Ok(&w * inst.resolvent_g(z, eps)? * &w)
}

/// Geometric schedule `start, start/ratio, ...` with `count` points.
pub fn geometric_schedule(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| start / ratio.powi(j as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffPoint {
    pub eps: f64,
    pub norm_f: f64,
    /// `||dF/d eps||` from the three-point formula on the schedule.
    pub derivative_norm: f64,
    /// `|d ||F|| / d eps|`, bounded by `derivative_norm` up to discretization.
    pub norm_derivative: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffineqReport {
    pub alpha: f64,
    pub input: ConstantsInput,
    pub constants: Constants,
    pub points: Vec<DiffPoint>,
    pub violations: usize,
    pub endpoint_norm: f64,
    pub endpoint_bound: f64,
    pub endpoint_ok: bool,
}

/// Right-hand side of the final differential inequality at `eps`.
pub fn diffineq_rhs(input: &ConstantsInput, c: &Constants, s: f64, eps: f64, norm_f: f64) -> f64 {
    let e = eps.abs();
    let root = norm_f.sqrt();
    c.c1 * norm_f
        + c.c_half * e.powf(-0.5) * root
        + c.c0
        + 2.0 * (2.0 - s) * e.powf(s - 1.0) * (2.0 * input.alpha.powf(-0.5) * e.powf(-0.5) * root
            + (1.0 + input.s_factor) / input.delta)
}

/// Differentiates `F_z(eps)` along `schedule` and compares with the
/// inequality at every interior point, plus the bound on `||F_z(eps_nu)||`
/// at the largest schedule point.
pub fn diffineq_check(inst: &TestbedInstance, s: f64, z: C64, schedule: &[f64]) -> Result<DiffineqReport> {
    if !(s > 0.5 && s <= 1.0) {
        return invalid("weight exponent must lie in (1/2, 1]");
    }
    let Some(alpha) = inst.mourre_alpha() else {
        return invalid("instance does not satisfy the positive commutator estimate");
    };
    if schedule.len() < 3 {
        return invalid("schedule needs at least three points");
    }
    let mut eps: Vec<f64> = schedule.to_vec();
    eps.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    for pair in eps.windows(2) {
        if pair[0] * pair[1] <= 0.0 || pair[0] == pair[1] {
            return invalid("schedule points must be distinct and of one sign");
        }
        if pair[1] / pair[0] > MAX_STEP_RATIO {
            return invalid(format!("schedule too coarse: step ratio {} exceeds {MAX_STEP_RATIO}", pair[1] / pair[0]));
        }
    }
    for &e in &eps {
        check_regime(inst, alpha, z, e)?;
        if e.abs() > 1.0 {
            return invalid("the inequality needs |eps| <= 1");
        }
    }
    let input = instance_constants(inst, alpha)?;
    let constants = constants_eval(&input)?;
    let fs: Vec<DMatrix<C64>> = eps.iter().map(|&e| weighted_resolvent(inst, s, z, e)).collect::<Result<_>>()?;
    let norms: Vec<f64> = fs.iter().map(op_norm).collect();
    let mut points = Vec::with_capacity(eps.len() - 2);
    let mut violations = 0;
    for i in 1..eps.len() - 1 {
        let h1 = eps[i] - eps[i - 1];
        let h2 = eps[i + 1] - eps[i];
        let (c_m, c_0, c_p) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        let deriv = &fs[i - 1] * C64::new(c_m, 0.0) + &fs[i] * C64::new(c_0, 0.0) + &fs[i + 1] * C64::new(c_p, 0.0);
        let derivative_norm = op_norm(&deriv);
        let norm_derivative = (c_m * norms[i - 1] + c_0 * norms[i] + c_p * norms[i + 1]).abs();
        let rhs = diffineq_rhs(&input, &constants, s, eps[i], norms[i]);
        if derivative_norm > DIFF_SLACK * rhs {
            violations += 1;
        }
        points.push(DiffPoint {
            eps: eps[i],
            norm_f: norms[i],
            derivative_norm,
            norm_derivative,
            rhs,
            ratio: derivative_norm / rhs,
        });
    }
    let top = eps.len() - 1;
    let endpoint_norm = norms[top];
    let endpoint_bound = (2.0 + input.s_factor) / (alpha * eps[top].abs());
    let endpoint_ok = endpoint_norm <= endpoint_bound * (1.0 + 1e-10);
    Ok(DiffineqReport { alpha, input, constants, points, violations, endpoint_norm, endpoint_bound, endpoint_ok })
}

/// Schedule ratio and length used by [`diffineq_suite`].
pub const SUITE_RATIO: f64 = 1.15;
pub const SUITE_POINTS: usize = 50;

/// The spectral point used for an instance in the suites.
pub fn suite_point(inst: &TestbedInstance) -> C64 {
    C64::new(inst.lambda + 0.3 * inst.delta, 0.5 * inst.delta)
}

/// Differential inequality on `count` instances satisfying the positive
/// commutator estimate, found by rejection sampling from `first_seed`.
pub fn diffineq_suite(config: &TestbedConfig, first_seed: u64, count: usize, s: f64) -> Result<SuiteReport> {
    let (insts, rejects) = accepted_instances(config, first_seed, count, 100 * count.max(1))?;
    let reports: Vec<DiffineqReport> = insts
        .par_iter()
        .map(|inst| {
            let alpha = inst.mourre_alpha().unwrap_or(inst.delta);
            let start = (inst.delta / alpha).min(1.0);
            diffineq_check(inst, s, suite_point(inst), &geometric_schedule(start, SUITE_RATIO, SUITE_POINTS))
        })
        .collect::<Result<_>>()?;
    let mut out = SuiteReport { seeds: insts.iter().map(|i| i.seed).collect(), rejects, ..Default::default() };
    out.violation("diffineq", 0);
    out.violation("endpoint", 0);
    for rep in &reports {
        out.violation("diffineq", rep.violations);
        out.violation("endpoint", usize::from(!rep.endpoint_ok));
        let worst = rep.points.iter().map(|p| p.ratio).fold(0.0, f64::max);
        out.residual("diffineq_ratio", worst);
        out.residual("endpoint_ratio", rep.endpoint_norm / rep.endpoint_bound);
    }
    let nonempty = insts.iter().filter(|i| i.window_rank > 0).count();
    out.max_residuals.insert("nonempty_windows".into(), nonempty as f64);
    Ok(out)
}
