//! Explicit constants of the differential inequality, their scaling along a
//! parameter family, the scalar weight inequality and the iteration that
//! improves an `eps^{-sigma}` bound.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::profiles::{profile_eval, Profile};
use crate::quad::composite;

/// `(2 pi)^{-1} int |t g^(t)| dt` from the derivative `g'` supported in `[lo, hi]`,
/// using `|t g^(t)| = |(g')^(t)|` and truncating at `|t| <= t_max`.
pub fn fourier_moment(dg: impl Fn(f64) -> f64, lo: f64, hi: f64, t_max: f64) -> f64 {
    let nodes = composite(lo, hi, 256, 8);
    let vals: Vec<(f64, f64)> = nodes.iter().map(|&(x, w)| (x, w * dg(x))).collect();
    let t_nodes = composite(0.0, t_max, (8.0 * t_max).ceil() as usize, 4);
    let mut total = 0.0;
    for (t, wt) in t_nodes {
        let (mut re, mut im) = (0.0, 0.0);
        for &(x, v) in &vals {
            let (s, c) = (t * x).sin_cos();
            re += v * c;
            im -= v * s;
        }
        total += wt * re.hypot(im);
    }
    // The integrand is even in t.
    total / PI
}

/// `Delta_f` for the unit window `f` (1 on `[-2, 2]`, supported in `[-3, 3]`).
///
/// For `f((E - lambda)/delta)` the value scales as `window_moment() / delta`.
pub fn window_moment() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let dg = |x: f64| profile_eval(Profile::Window, x, 1).unwrap_or(0.0);
        fourier_moment(dg, -3.0, 3.0, 400.0)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsInput {
    pub lambda: f64,
    pub delta: f64,
    pub alpha: f64,
    /// `||[H,A]^0 (H+i)^{-1}||`.
    pub n_comm: f64,
    /// `(1 + alpha^{-1} ||[H,A]^0 f(H)||)^2`.
    pub s_factor: f64,
    /// `(2 pi)^{-1} int |t f^(t)| dt`.
    pub delta_f: f64,
    /// Double-commutator bound `C_{H,A}`.
    pub c_ha: f64,
}

impl ConstantsInput {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.delta, self.alpha, self.n_comm, self.s_factor, self.delta_f, self.c_ha];
        if !self.lambda.is_finite() || positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return invalid("constants need finite lambda and positive delta, alpha, N, S, Delta_f, C_HA");
        }
        Ok(())
    }

    /// `||[H,A]^0 f(H)||`, recovered from `S`.
    pub fn comm_cutoff_norm(&self) -> f64 {
        self.alpha * (self.s_factor.sqrt() - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c0: f64,
    pub c_half: f64,
    pub c1: f64,
}

pub fn constants_eval(input: &ConstantsInput) -> Result<Constants> {
    input.validate()?;
    let ConstantsInput { lambda, delta: d, alpha: a, n_comm: n, s_factor: s, delta_f, c_ha } = *input;
    let l2 = 1.0 + lambda.abs() + 2.0 * d;
    let l3 = 1.0 + lambda.abs() + 3.0 * d;
    let c0 = l2 * (1.0 + s).powi(2) * n / (d * d);
    let c_half = 2.0 * a.powf(-0.5) / d * l3 * s * n * (1.0 + d / a * delta_f * n * l3);
    let c1 = l3 / a * (c_ha + 2.0 * delta_f * n * n * l3);
    Ok(Constants { c0, c_half, c1 })
}

/// Parameter laws of the model family: `alpha = lambda^{1/2}`,
/// `delta = lambda^{1/2} (log lambda)^{-2 s0} / c_delta`, `N = n0 lambda^{-1/2}`,
/// `C_{H,A} = c_ha0 / lambda` (conjugate operator scaled by `lambda^{-1/2}`),
/// `S` fixed and `Delta_f = Delta_1 / delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaledFamily {
    pub s0: f64,
    pub c_delta: f64,
    pub n0: f64,
    pub s_factor: f64,
    pub c_ha0: f64,
    pub unit_moment: f64,
}

impl Default for ScaledFamily {
    fn default() -> Self {
        Self { s0: 1.0, c_delta: 1.0, n0: 1.0, s_factor: 4.0, c_ha0: 1.0, unit_moment: window_moment() }
    }
}

impl ScaledFamily {
    pub fn input(&self, lambda: f64) -> Result<ConstantsInput> {
        if !(lambda > 1.0) {
            return invalid("scaled family needs lambda > 1");
        }
        let alpha = lambda.sqrt();
        let delta = lambda.sqrt() * lambda.ln().powf(-2.0 * self.s0) / self.c_delta;
        Ok(ConstantsInput {
            lambda,
            delta,
            alpha,
            n_comm: self.n0 / lambda.sqrt(),
            s_factor: self.s_factor,
            delta_f: self.unit_moment / delta,
            c_ha: self.c_ha0 / lambda,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub lambda: f64,
    pub eps_nu: f64,
    pub constants: Constants,
    /// `C0 / (alpha delta^{-2})`.
    pub c0_ratio: f64,
    /// `C_{1/2} / (alpha^{1/2} delta^{-1})`.
    pub c_half_ratio: f64,
    /// `C1 / (alpha delta^{-1})`.
    pub c1_ratio: f64,
    /// `||[H,A]^0 f(H)|| / alpha`.
    pub comm_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyVerdict {
    pub rows: Vec<FamilyRow>,
    /// Smallest constant serving every condition on the whole family.
    pub c: f64,
    /// Largest ratio of a condition at the last parameter to its value at the first.
    pub growth: f64,
    pub pass: bool,
}

/// Maximal tolerated growth of a normalized constant across the family.
pub const FAMILY_GROWTH_TOL: f64 = 1.1;

/// Evaluates the uniformity conditions along a family ordered by parameter:
/// `eps_nu = delta/alpha <= 1`, `C0 <= C alpha delta^{-2}`,
/// `C_{1/2} <= C alpha^{1/2} delta^{-1}`, `C1 <= C alpha delta^{-1}` and
/// `||[H,A]^0 f|| <= C alpha`. A finite family always admits some `C`, so the
/// verdict also requires that no normalized constant grows along the family.
pub fn family_conditions(inputs: &[ConstantsInput]) -> Result<FamilyVerdict> {
    if inputs.is_empty() {
        return invalid("family is empty");
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for input in inputs {
        let c = constants_eval(input)?;
        let (a, d) = (input.alpha, input.delta);
        rows.push(FamilyRow {
            lambda: input.lambda,
            eps_nu: d / a,
            constants: c,
            c0_ratio: c.c0 * d * d / a,
            c_half_ratio: c.c_half * d / a.sqrt(),
            c1_ratio: c.c1 * d / a,
            comm_ratio: input.comm_cutoff_norm() / a,
        });
    }
    let pick: [fn(&FamilyRow) -> f64; 4] = [|r| r.c0_ratio, |r| r.c_half_ratio, |r| r.c1_ratio, |r| r.comm_ratio];
    let c = rows.iter().flat_map(|r| pick.iter().map(move |p| p(r))).fold(0.0, f64::max);
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let growth = pick
        .iter()
        .map(|p| if p(first) > 0.0 { p(last) / p(first) } else { 1.0 })
        .fold(0.0, f64::max);
    let pass = rows.iter().all(|r| r.eps_nu <= 1.0) && c.is_finite() && growth <= FAMILY_GROWTH_TOL;
    Ok(FamilyVerdict { rows, c, growth, pass })
}

/// `<E>_eps^{-s} = <E>^{-s} <eps E>^{s-1}`.
pub fn regularized_weight(s: f64, eps: f64, e: f64) -> f64 {
    (1.0 + e * e).powf(-0.5 * s) * (1.0 + eps * eps * e * e).powf(0.5 * (s - 1.0))
}

/// `|d/d eps <E>_eps^{-s}| = (1-s) <E>_eps^{-s} |eps| E^2 / (1 + eps^2 E^2)`.
pub fn regularized_weight_derivative(s: f64, eps: f64, e: f64) -> f64 {
    (1.0 - s) * regularized_weight(s, eps, e) * eps.abs() * e * e / (1.0 + eps * eps * e * e)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarWeightReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs / ((1-s)|eps|^{s-1})`; 0 when `s = 1`.
    pub max_ratio: f64,
}

/// `count x count` log-spaced samples `eps in [1e-6, 1]`, `|E| in [1e-6, 1e6]`,
/// alternating signs of `E`.
pub fn weight_samples(count: usize) -> Vec<(f64, f64)> {
    let span = |lo: f64, hi: f64, i: usize| {
        let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
    };
    let mut out = Vec::with_capacity(count * count);
    for i in 0..count {
        for j in 0..count {
            let e = span(1e-6, 1e6, j) * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            out.push((span(1e-6, 1.0, i), e));
        }
    }
    out
}

pub fn scalar_weight_check(s: f64, samples: &[(f64, f64)]) -> Result<ScalarWeightReport> {
    if !(s > 0.5 && s <= 1.0) {
        return invalid("weight exponent must lie in (1/2, 1]");
    }
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &(eps, e) in samples {
        if eps == 0.0 {
            return invalid("eps must be nonzero");
        }
        let lhs = regularized_weight_derivative(s, eps, e);
        let rhs = (1.0 - s) * eps.abs().powf(s - 1.0);
        if lhs > rhs * (1.0 + 1e-12) {
            violations += 1;
        }
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
    }
    Ok(ScalarWeightReport { samples: samples.len(), violations, max_ratio })
}

/// `c_flat delta^{-1} + c_log delta^{-1} log(eps_nu/eps) + c_pow alpha^{-1} eps^{-sigma}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundProfile {
    pub c_flat: f64,
    pub c_log: f64,
    pub c_pow: f64,
    pub sigma: f64,
}

impl BoundProfile {
    pub fn power(sigma: f64) -> Self {
        Self { c_flat: 1.0, c_log: 1.0, c_pow: 1.0, sigma }
    }

    pub fn validate(&self) -> Result<()> {
        if [self.c_flat, self.c_log, self.c_pow].iter().any(|c| !(*c >= 0.0)) {
            return invalid("profile coefficients must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return invalid("sigma must lie in [0, 1]");
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        self.c_flat.max(self.c_log).max(self.c_pow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceCase {
    Power,
    Log,
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceStep {
    pub sigma: f64,
    pub case: RecurrenceCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTrace {
    pub steps: Vec<RecurrenceStep>,
    pub final_profile: BoundProfile,
    pub step_count: usize,
    /// `ceil(log2(1/(2s-1))) + 1`.
    pub step_bound: usize,
}

pub fn recurrence_step_bound(s: f64) -> usize {
    (1.0 / (2.0 * s - 1.0)).log2().ceil().max(0.0) as usize + 1
}

/// Applies the improvement lemma until the bound leaves the power case.
///
/// Each step classifies the current exponent: `s - 1/2 < sigma/2` gives
/// `sigma -> sigma/2 + 1/2 - s`; equality ends with a logarithmic profile;
/// otherwise the bound is flat. Coefficients keep the largest input constant,
/// the lemma only asserts existence of the new one.
pub fn recurrence_iterate(s: f64, initial: BoundProfile) -> Result<RecurrenceTrace> {
    if !(s > 0.5 && s <= 1.0) {
        return invalid("weight exponent must lie in (1/2, 1]");
    }
    initial.validate()?;
    let c = initial.scale();
    let gap = s - 0.5;
    let mut sigma = initial.sigma;
    let mut steps = Vec::new();
    loop {
        let half = 0.5 * sigma;
        let case = if (gap - half).abs() <= 1e-12 {
            RecurrenceCase::Log
        } else if gap < half {
            RecurrenceCase::Power
        } else {
            RecurrenceCase::Flat
        };
        steps.push(RecurrenceStep { sigma, case });
        match case {
            RecurrenceCase::Power => sigma = half + 0.5 - s,
            RecurrenceCase::Log => {
                let final_profile = BoundProfile { c_flat: c, c_log: c, c_pow: 0.0, sigma: 0.0 };
                return Ok(finish(steps, final_profile, s));
            }
            RecurrenceCase::Flat => {
                let final_profile = BoundProfile { c_flat: c, c_log: 0.0, c_pow: 0.0, sigma: 0.0 };
                return Ok(finish(steps, final_profile, s));
            }
        }
        if steps.len() > 200 {
            return invalid("recurrence did not terminate");
        }
    }
}

fn finish(steps: Vec<RecurrenceStep>, final_profile: BoundProfile, s: f64) -> RecurrenceTrace {
    RecurrenceTrace { step_count: steps.len(), steps, final_profile, step_bound: recurrence_step_bound(s) }
}
