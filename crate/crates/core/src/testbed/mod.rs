//! Finite-dimensional matrix testbed for the abstract differential-inequality
//! method: regularized resolvents `G_z(eps) = (H - z - i eps B*B)^{-1}`, their
//! algebraic identities, the a-priori bounds, the explicit constants and the
//! differential inequality for weighted resolvents.
//!
//! For Hermitian matrices `tr(f(H) i[H,A] f(H)) = i tr(A (f(H)^2 H - H f(H)^2)) = 0`,
//! so a positive commutator estimate with `alpha > 0` can only hold when the
//! spectral window is empty. Instances therefore come in two flavours: exact
//! ones, where `[H,A]^0` is the matrix commutator, and surrogates where it is
//! shifted by `-i kappa` so that the localized commutator is positive. The
//! a-priori bounds only use `B*B = f(H) i[H,A]^0 f(H) >= alpha f(H)^2`, so they
//! apply to surrogates as well.

mod constants;
mod diffineq;
mod easytrick;

pub use constants::*;
pub use diffineq::*;
pub use easytrick::*;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, numerical, Result};
use crate::linops::eig::{hermitian_eig_dense, Eigen};
use crate::profiles::{japanese, window};

/// Tolerance, relative to `||i[H,A]^0||`, below which a localized commutator
/// does not count as positive.
pub const MOURRE_TOL: f64 = 1e-8;

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn op_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// `g(M)` for a Hermitian matrix given its eigendecomposition.
pub fn hermitian_function(eig: &Eigen<C64>, g: impl Fn(f64) -> C64) -> DMatrix<C64> {
    let mut scaled = eig.vectors.clone();
    for (j, &e) in eig.values.iter().enumerate() {
        let gj = g(e);
        for v in scaled.column_mut(j).iter_mut() {
            *v *= gj;
        }
    }
    scaled * eig.vectors.adjoint()
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

fn identity(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

fn hermitize(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian matrix with uniform complex entries rescaled to spectral radius `radius`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let h = hermitize(&g);
    let scale = h.clone().symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    h.scale(radius / scale.max(1e-300))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestbedConfig {
    pub n: usize,
    pub h_radius: f64,
    pub a_radius: f64,
    pub lambda_range: [f64; 2],
    pub delta: f64,
    /// When set, `i[H,A]^0` is shifted by a constant so that its compression
    /// to the window has smallest eigenvalue exactly this value.
    pub surrogate_alpha: Option<f64>,
}

impl Default for TestbedConfig {
    fn default() -> Self {
        Self { n: 20, h_radius: 2.0, a_radius: 1.0, lambda_range: [-1.0, 1.0], delta: 0.02, surrogate_alpha: None }
    }
}

impl TestbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("testbed dimension must be positive");
        }
        if !(self.h_radius > 0.0 && self.a_radius > 0.0) {
            return invalid("spectral radii must be positive");
        }
        let [lo, hi] = self.lambda_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return invalid("lambda_range must be a finite ordered pair");
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid("delta must be positive");
        }
        if let Some(a) = self.surrogate_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return invalid("surrogate_alpha must be positive");
            }
        }
        Ok(())
    }
}

/// One seeded matrix pair `(H, A)` with its spectral window `f((E - lambda)/delta)`.
#[derive(Clone, Debug)]
pub struct TestbedInstance {
    pub seed: u64,
    pub n: usize,
    pub h: DMatrix<C64>,
    pub a: DMatrix<C64>,
    pub lambda: f64,
    pub delta: f64,
    pub h_eig: Eigen<C64>,
    pub a_eig: Eigen<C64>,
    /// `f(H)`.
    pub cutoff: DMatrix<C64>,
    /// `[H,A]^0`; equals `HA - AH - i shift`.
    pub comm: DMatrix<C64>,
    pub shift: f64,
    /// `M = f(H) i[H,A]^0 f(H)`.
    pub m: DMatrix<C64>,
    pub b: DMatrix<C64>,
    /// `B*B`, the positive part of `M`.
    pub bstar_b: DMatrix<C64>,
    /// Norm of the discarded negative part of `M`.
    pub negative_part: f64,
    /// Number of eigenvalues of `H` where `f` is nonzero.
    pub window_rank: usize,
    /// Best constant in `f(H) i[H,A]^0 f(H) >= alpha f(H)^2`; `None` for an empty window.
    pub alpha: Option<f64>,
}

impl TestbedInstance {
    pub fn generate(seed: u64, config: &TestbedConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(&mut rng, config.n, config.h_radius);
        let a = random_hermitian(&mut rng, config.n, config.a_radius);
        let [lo, hi] = config.lambda_range;
        let lambda = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        Self::from_parts(seed, h, a, lambda, config.delta, config.surrogate_alpha)
    }

    pub fn from_parts(
        seed: u64,
        h: DMatrix<C64>,
        a: DMatrix<C64>,
        lambda: f64,
        delta: f64,
        surrogate_alpha: Option<f64>,
    ) -> Result<Self> {
        let n = h.nrows();
        if a.nrows() != n || a.ncols() != n {
            return invalid("H and A must have the same square shape");
        }
        if !(delta > 0.0) {
            return invalid("delta must be positive");
        }
        let h_eig = hermitian_eig_dense(&h)?;
        let a_eig = hermitian_eig_dense(&a)?;
        let fvals: Vec<f64> = h_eig.values.iter().map(|&e| window((e - lambda) / delta)).collect();
        let cutoff = hermitian_function(&h_eig, |e| real(window((e - lambda) / delta)));
        let exact = &h * &a - &a * &h;
        let active: Vec<usize> = (0..n).filter(|&j| fvals[j] > 0.0).collect();
        let window_rank = active.len();
        let mut alpha = None;
        let mut shift = 0.0;
        if window_rank > 0 {
            let vp = DMatrix::from_fn(n, window_rank, |r, c| h_eig.vectors[(r, active[c])]);
            let compressed = hermitize(&(vp.adjoint() * (&exact * I) * &vp));
            let lowest = compressed.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            if let Some(target) = surrogate_alpha {
                shift = target - lowest;
            }
            alpha = Some(lowest + shift);
        }
        let comm = &exact - identity(n) * (I * shift);
        let m = hermitize(&(&cutoff * (&comm * I) * &cutoff));
        let m_eig = hermitian_eig_dense(&m)?;
        let b = hermitian_function(&m_eig, |mu| real(mu.max(0.0).sqrt()));
        let bstar_b = hermitian_function(&m_eig, |mu| real(mu.max(0.0)));
        let negative_part = m_eig.values.iter().fold(0.0f64, |acc, &mu| acc.max(-mu));
        Ok(Self {
            seed,
            n,
            h,
            a,
            lambda,
            delta,
            h_eig,
            a_eig,
            cutoff,
            comm,
            shift,
            m,
            b,
            bstar_b,
            negative_part,
            window_rank,
            alpha,
        })
    }

    /// Matrix commutator `HA - AH`, without any surrogate shift.
    pub fn commutator_exact(&self) -> DMatrix<C64> {
        &self.h * &self.a - &self.a * &self.h
    }

    pub fn is_surrogate(&self) -> bool {
        self.shift != 0.0
    }

    /// A constant for which the positive commutator estimate holds, if any.
    ///
    /// With an empty window `f(H) = 0` and every `alpha > 0` works; `delta` is
    /// returned, which makes the admissible range `|eps| <= delta/alpha` equal
    /// to `(0, 1]`.
    pub fn mourre_alpha(&self) -> Option<f64> {
        if self.window_rank == 0 {
            return Some(self.delta);
        }
        let scale = op_norm(&self.comm).max(1.0);
        let clean = self.negative_part <= 1e-12 * scale;
        self.alpha.filter(|&a| a > MOURRE_TOL * scale && clean)
    }

    pub fn is_accepted(&self) -> bool {
        self.mourre_alpha().is_some()
    }

    /// `w(A)` for a scalar function `w`.
    pub fn function_of_a(&self, w: impl Fn(f64) -> f64) -> DMatrix<C64> {
        hermitian_function(&self.a_eig, |e| real(w(e)))
    }

    pub fn resolvent_g(&self, z: C64, eps: f64) -> Result<DMatrix<C64>> {
        regularized_resolvent(&self.h, &self.bstar_b, z, eps)
    }
}

/// `(H - z - i eps B*B)^{-1}`; requires `Im z * eps >= 0` and not both zero.
pub fn regularized_resolvent(h: &DMatrix<C64>, bstar_b: &DMatrix<C64>, z: C64, eps: f64) -> Result<DMatrix<C64>> {
    if z.im * eps < 0.0 {
        return invalid(format!("Im z = {} and eps = {eps} have opposite signs", z.im));
    }
    if z.im == 0.0 && eps == 0.0 {
        return invalid("regularized resolvent needs Im z != 0 or eps != 0");
    }
    let n = h.nrows();
    let op = h - identity(n) * z - bstar_b * (I * eps);
    match op.try_inverse() {
        Some(g) => Ok(g),
        None => numerical(format!("H - z - i eps B*B is singular at z = {z}, eps = {eps}")),
    }
}

/// Rejection sampling over consecutive seeds until `count` instances satisfy
/// the positive commutator estimate or `max_attempts` seeds were tried.
pub fn accepted_instances(
    config: &TestbedConfig,
    first_seed: u64,
    count: usize,
    max_attempts: usize,
) -> Result<(Vec<TestbedInstance>, usize)> {
    config.validate()?;
    let mut accepted = Vec::with_capacity(count);
    let mut rejects = 0;
    let mut seed = first_seed;
    let batch = count.max(8);
    while accepted.len() < count && accepted.len() + rejects < max_attempts {
        let hi = (seed + batch as u64).min(first_seed + max_attempts as u64);
        let round: Vec<TestbedInstance> = (seed..hi)
            .into_par_iter()
            .map(|s| TestbedInstance::generate(s, config))
            .collect::<Result<_>>()?;
        for inst in round {
            if accepted.len() == count {
                break;
            }
            if inst.is_accepted() {
                accepted.push(inst);
            } else {
                rejects += 1;
            }
        }
        seed = hi;
    }
    Ok((accepted, rejects))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebreReport {
    /// `||G(eps) - G(eps0) - G(eps) i(eps - eps0) B*B G(eps0)|| / max ||G||`.
    pub difference_residual: f64,
    /// `||G_z(eps)* - G_{conj z}(-eps)|| / ||G_z(eps)||`.
    pub adjoint_residual: f64,
    /// `||G_z(eps)|| |Im z|`, at most 1.
    pub norm_ratio: f64,
    pub norm_violations: usize,
    pub quadratic_checks: usize,
    pub quadratic_violations: usize,
    /// Largest `||B' G C|| / (|eps|^{-1/2} ||C G C||^{1/2})`.
    pub quadratic_max_ratio: f64,
}

const QUADRATIC_SAMPLES: usize = 10;

/// Residuals of the regularized-resolvent identities at `(z, eps)` and `(z, eps0)`.
///
/// The quadratic estimate is sampled with `B' = K B`, `||K|| <= 1`, so that
/// `B'*B' <= B*B`, and random Hermitian `C`; it needs `Im z * eps > 0`.
pub fn algebre_identity_check(inst: &TestbedInstance, z: C64, eps: f64, eps0: f64) -> Result<AlgebreReport> {
    let g = inst.resolvent_g(z, eps)?;
    let g0 = inst.resolvent_g(z, eps0)?;
    let bb = &inst.bstar_b;
    let diff = &g - &g0 - &g * bb * &g0 * (I * (eps - eps0));
    let scale = op_norm(&g).max(op_norm(&g0)).max(1e-300);
    let difference_residual = op_norm(&diff) / scale;
    let g_adj = inst.resolvent_g(z.conj(), -eps)?;
    let adjoint_residual = op_norm(&(g.adjoint() - &g_adj)) / op_norm(&g).max(1e-300);
    let norm_ratio = op_norm(&g) * z.im.abs();
    let norm_violations = usize::from(z.im != 0.0 && norm_ratio > 1.0 + 1e-12);

    let mut quadratic_checks = 0;
    let mut quadratic_violations = 0;
    let mut quadratic_max_ratio: f64 = 0.0;
    if z.im * eps > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(inst.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1));
        let n = inst.n;
        for _ in 0..QUADRATIC_SAMPLES {
            let k = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let contraction = k.scale(rng.gen_range(0.1..1.0) / op_norm(&k));
            let b_prime = contraction * &inst.b;
            let radius = rng.gen_range(0.5..2.0);
            let c = random_hermitian(&mut rng, n, radius);
            let lhs = op_norm(&(&b_prime * &g * &c));
            let rhs = eps.abs().powf(-0.5) * op_norm(&(&c * &g * &c)).sqrt();
            quadratic_checks += 1;
            if lhs > rhs * (1.0 + 1e-10) + 1e-14 {
                quadratic_violations += 1;
            }
            if rhs > 0.0 {
                quadratic_max_ratio = quadratic_max_ratio.max(lhs / rhs);
            }
        }
    }
    Ok(AlgebreReport {
        difference_residual,
        adjoint_residual,
        norm_ratio,
        norm_violations,
        quadratic_checks,
        quadratic_violations,
        quadratic_max_ratio,
    })
}

/// Relative residual of `[(H-z)^{-1}, A] = -(H-z)^{-1}[H,A](H-z)^{-1}`.
pub fn commutator_resolvent_residual(inst: &TestbedInstance, z: C64) -> Result<f64> {
    let r = regularized_resolvent(&inst.h, &DMatrix::zeros(inst.n, inst.n), z, 0.0)?;
    let comm = inst.commutator_exact();
    let lhs = &r * &inst.a - &inst.a * &r;
    let rhs = -(&r * &comm * &r);
    let scale = op_norm(&r).powi(2) * op_norm(&comm).max(1e-300);
    Ok(op_norm(&(lhs - rhs)) / scale)
}

/// Relative residual of
/// `[(H-z)^{-1}, (A-Z)^{-1}] = (A-Z)^{-1}(H-z)^{-1}[H,A](H-z)^{-1}(A-Z)^{-1}`.
pub fn double_resolvent_residual(inst: &TestbedInstance, z: C64, big_z: C64) -> Result<f64> {
    let zero = DMatrix::zeros(inst.n, inst.n);
    let r = regularized_resolvent(&inst.h, &zero, z, 0.0)?;
    let s = regularized_resolvent(&inst.a, &zero, big_z, 0.0)?;
    let comm = inst.commutator_exact();
    let lhs = &r * &s - &s * &r;
    let rhs = &s * &r * &comm * &r * &s;
    let scale = (op_norm(&r) * op_norm(&s)).powi(2) * op_norm(&comm).max(1e-300);
    Ok(op_norm(&(lhs - rhs)) / scale)
}

/// `||[H, A(Lambda)] - [H,A]||` with `A(Lambda) = i Lambda A (A + i Lambda)^{-1}`.
pub fn virial_defect(inst: &TestbedInstance, big_lambda: f64) -> f64 {
    let a_l = hermitian_function(&inst.a_eig, |a| I * big_lambda * a / (a + I * big_lambda));
    let c_l = &inst.h * &a_l - &a_l * &inst.h;
    op_norm(&(c_l - inst.commutator_exact()))
}

/// `<A>^{-1}`, the weight used for the a-priori checks.
pub fn inverse_japanese(a: f64) -> f64 {
    1.0 / japanese(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriRow {
    pub k: u32,
    pub lhs_outside: f64,
    pub rhs_outside: f64,
    pub lhs_window: f64,
    pub rhs_window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub alpha: f64,
    pub s_factor: f64,
    pub rows: Vec<AprioriRow>,
    pub lhs_weighted: f64,
    pub rhs_weighted: f64,
    pub violations: usize,
}

/// Checks that `(z, eps)` lies in the regime `eps Im z > 0`, `|Re z - lambda| <= delta`,
/// `delta <= alpha`, `|eps| <= delta/alpha`.
pub fn check_regime(inst: &TestbedInstance, alpha: f64, z: C64, eps: f64) -> Result<()> {
    if !(eps * z.im > 0.0) {
        return invalid("regime needs eps Im z > 0");
    }
    if (z.re - inst.lambda).abs() > inst.delta * (1.0 + 1e-12) {
        return invalid("regime needs |Re z - lambda| <= delta");
    }
    if inst.delta > alpha * (1.0 + 1e-12) {
        return invalid(format!("regime needs delta <= alpha (delta {}, alpha {alpha})", inst.delta));
    }
    if eps.abs() > inst.delta / alpha * (1.0 + 1e-12) {
        return invalid("regime needs |eps| <= delta/alpha");
    }
    Ok(())
}

/// `S = (1 + alpha^{-1} ||[H,A]^0 f(H)||)^2`.
pub fn s_factor(inst: &TestbedInstance, alpha: f64) -> f64 {
    (1.0 + op_norm(&(&inst.comm * &inst.cutoff)) / alpha).powi(2)
}

/// The three a-priori bounds for `k = 0, 1` with the instance's own constants.
pub fn apriori_bounds_check(inst: &TestbedInstance, z: C64, eps: f64, w: impl Fn(f64) -> f64) -> Result<AprioriReport> {
    let Some(alpha) = inst.mourre_alpha() else {
        return invalid("instance does not satisfy the positive commutator estimate");
    };
    check_regime(inst, alpha, z, eps)?;
    if inst.a_eig.values.iter().any(|&e| w(e).abs() > 1.0 + 1e-12) {
        return invalid("weight must satisfy ||w||_inf <= 1");
    }
    let n = inst.n;
    let g = inst.resolvent_g(z, eps)?;
    let wa = inst.function_of_a(&w);
    let s = s_factor(inst, alpha);
    let lam = inst.lambda.abs();
    let d = inst.delta;
    let outside = identity(n) - &inst.cutoff;
    let weighted = &wa * &g * &wa;
    let lhs_weighted = op_norm(&weighted);
    let rhs_weighted = (2.0 + s) / (alpha * eps.abs());
    let h_plus_i = &inst.h + identity(n) * I;
    let mut rows = Vec::new();
    let mut violations = usize::from(lhs_weighted > rhs_weighted * (1.0 + 1e-10));
    let mut power = identity(n);
    for k in 0..=1u32 {
        let lhs_outside = op_norm(&(&power * &outside * &g));
        let rhs_outside = (1.0 + lam + 2.0 * d).powi(k as i32) * (1.0 + s) / d;
        let lhs_window = op_norm(&(&power * &inst.cutoff * &g * &wa));
        let rhs_window = (1.0 + lam + 3.0 * d).powi(k as i32) * (alpha * eps.abs()).powf(-0.5) * lhs_weighted.sqrt();
        violations += usize::from(lhs_outside > rhs_outside * (1.0 + 1e-10));
        violations += usize::from(lhs_window > rhs_window * (1.0 + 1e-10) + 1e-14);
        rows.push(AprioriRow { k, lhs_outside, rhs_outside, lhs_window, rhs_window });
        power = &power * &h_plus_i;
    }
    Ok(AprioriReport { alpha, s_factor: s, rows, lhs_weighted, rhs_weighted, violations })
}

/// Aggregate over a seeded suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seeds: Vec<u64>,
    pub rejects: usize,
    pub max_residuals: BTreeMap<String, f64>,
    pub violations: BTreeMap<String, usize>,
}

impl SuiteReport {
    fn residual(&mut self, key: &str, v: f64) {
        let e = self.max_residuals.entry(key.to_string()).or_insert(0.0);
        *e = e.max(v);
    }

    fn violation(&mut self, key: &str, v: usize) {
        *self.violations.entry(key.to_string()).or_insert(0) += v;
    }

    pub fn total_violations(&self) -> usize {
        self.violations.values().sum()
    }
}

/// Identity suite on `count` consecutive seeds, without rejection: the
/// regularized-resolvent identities hold for any bounded `B`.
pub fn identity_suite(config: &TestbedConfig, first_seed: u64, count: usize) -> Result<SuiteReport> {
    config.validate()?;
    let seeds: Vec<u64> = (first_seed..first_seed + count as u64).collect();
    let rows: Vec<(AlgebreReport, f64, f64, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let inst = TestbedInstance::generate(seed, config)?;
            let z = C64::new(inst.lambda, 0.3 * config.delta.max(0.1));
            let rep = algebre_identity_check(&inst, z, 0.7, 0.2)?;
            let c9 = commutator_resolvent_residual(&inst, z)?;
            let c10 = double_resolvent_residual(&inst, z, C64::new(0.1, 0.5))?;
            let same = algebre_identity_check(&inst, z, 0.4, 0.4)?.difference_residual;
            Ok((rep, c9, c10, same))
        })
        .collect::<Result<_>>()?;
    let mut out = SuiteReport { seeds, ..Default::default() };
    for (rep, c9, c10, same) in rows {
        out.residual("difference_identity", rep.difference_residual.max(same));
        out.residual("adjoint_identity", rep.adjoint_residual);
        out.residual("norm_ratio", rep.norm_ratio);
        out.residual("quadratic_ratio", rep.quadratic_max_ratio);
        out.residual("commutator_resolvent", c9);
        out.residual("double_resolvent", c10);
        out.violation("resolvent_norm", rep.norm_violations);
        out.violation("quadratic_estimate", rep.quadratic_violations);
        out.violation("identity_tolerance", usize::from(rep.difference_residual > 1e-10 || rep.adjoint_residual > 1e-10));
    }
    Ok(out)
}

/// A-priori bound suite with `w = <A>^{-1}` over instances that satisfy the
/// positive commutator estimate.
pub fn apriori_suite(config: &TestbedConfig, first_seed: u64, count: usize) -> Result<SuiteReport> {
    let (insts, rejects) = accepted_instances(config, first_seed, count, 100 * count.max(1))?;
    let reports: Vec<AprioriReport> = insts
        .par_iter()
        .map(|inst| {
            let alpha = inst.mourre_alpha().unwrap_or(inst.delta);
            let z = C64::new(inst.lambda + 0.5 * inst.delta, 0.5 * inst.delta);
            apriori_bounds_check(inst, z, 0.5 * inst.delta / alpha, inverse_japanese)
        })
        .collect::<Result<_>>()?;
    let mut out = SuiteReport { seeds: insts.iter().map(|i| i.seed).collect(), rejects, ..Default::default() };
    for rep in reports {
        out.residual("weighted_ratio", rep.lhs_weighted / rep.rhs_weighted);
        for row in &rep.rows {
            out.residual("outside_ratio", row.lhs_outside / row.rhs_outside);
            if row.rhs_window > 0.0 {
                out.residual("window_ratio", row.lhs_window / row.rhs_window);
            }
        }
        out.violation("apriori", rep.violations);
    }
    out.violation("apriori", 0);
    Ok(out)
}
