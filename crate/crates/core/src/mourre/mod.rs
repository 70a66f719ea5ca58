//! Explicit commutators of the radial operators with the conjugate operator,
//! the localizations `Xi_{R,S}`, the semiclassical resolvent bound, and the
//! high-energy positive-commutator check.

pub mod hs;
pub mod positivity;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::conjugate::{a_k_jet, ConjugateParams};
use crate::error::{invalid, Result};
use crate::jet::Jet;
use crate::linops::norm::power_sqrt;
use crate::linops::{discretize, weighted_operator_norm, BandLu, PowerOptions, RadialGrid, SymBand};
use crate::model::RadialOperatorSpec;
use crate::profiles::{chi_sqrt_jet, window_jet, xi_sqrt_jet};

pub use hs::{
    hs_calculus, hs_calculus_band, hs_calculus_dense, spectral_calculus_dense, tridiagonalize,
    HsOptions, HsResult, SmoothProfile,
};
pub use positivity::{
    mourre_auto_calibrate, mourre_positivity_check, Deficits, ModeWindow, PositivityConfig,
    PositivityReport,
};

/// `f_lambda(E) = f((E - lambda) / delta)` with the window profile `f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCutoff {
    pub lambda: f64,
    pub delta: f64,
}

impl SpectralCutoff {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !lambda.is_finite() {
            return invalid("spectral cutoff needs finite lambda and positive delta");
        }
        Ok(SpectralCutoff { lambda, delta })
    }

    pub fn eval(&self, e: f64) -> f64 {
        crate::profiles::window((e - self.lambda) / self.delta)
    }

    pub fn jet(x: Jet) -> Jet {
        window_jet(x)
    }
}

/// Data of the semiclassical bound for `Xi (tau (H - lambda) - z)^{-1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiParams {
    pub conj: ConjugateParams,
    pub tau: f64,
    pub z: C64,
    pub c_chi_xi: f64,
}

impl XiParams {
    pub fn new(conj: ConjugateParams, tau: f64, z: C64) -> Result<Self> {
        if !(tau > 0.0) {
            return invalid("tau must be positive");
        }
        if z.im == 0.0 {
            return invalid("z must have nonzero imaginary part");
        }
        Ok(XiParams {
            conj,
            tau,
            z,
            c_chi_xi: c_chi_xi(),
        })
    }

    /// `e^S - e^{-2R} - lambda - Re z / tau`.
    pub fn gap(&self, lambda: f64) -> f64 {
        self.conj.s_big.exp() - (-2.0 * self.conj.r_big).exp() - lambda - self.z.re / self.tau
    }

    pub fn rhs(&self, lambda: f64) -> Result<f64> {
        let gap = self.gap(lambda);
        if !(gap > 0.0) {
            return invalid(format!("semiclassical bound needs a positive gap, got {gap}"));
        }
        let im = self.z.im.abs();
        Ok(gap.powf(-0.5) / im * (self.c_chi_xi / self.conj.s_big + (im / self.tau).sqrt()))
    }
}

/// `sup |(chi^{1/2})'| + sup |(xi^{1/2})'|` sampled on the transition intervals.
pub fn c_chi_xi() -> f64 {
    let sup = |f: fn(Jet) -> Jet, lo: f64, hi: f64| {
        (0..=20_000)
            .map(|i| f(Jet::variable(lo + (hi - lo) * i as f64 / 20_000.0)).derivative(1).abs())
            .fold(0.0, f64::max)
    };
    sup(chi_sqrt_jet, 1.0, 2.0) + sup(xi_sqrt_jet, -1.0, -0.5)
}

/// Coefficients on the grid: `b` at cell midpoints, `c` (imaginary part) and
/// `d` at nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorCoefficients {
    pub b_mid: Vec<f64>,
    pub b: Vec<f64>,
    pub c_imag: Vec<f64>,
    pub d: Vec<f64>,
}

/// `i[H0, A_k]` and `[[H0, A_k], A_k]` for one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorMatrices {
    pub k: usize,
    pub first: SymBand,
    pub second: SymBand,
    pub coefficients: CommutatorCoefficients,
}

fn check_resolution(params: &ConjugateParams, grid: &RadialGrid) -> Result<()> {
    if grid.h > params.s_big / 50.0 {
        return invalid(format!(
            "grid too coarse for a_k: h = {} > S/50 = {}",
            grid.h,
            params.s_big / 50.0
        ));
    }
    Ok(())
}

fn midpoints(grid: &RadialGrid) -> Vec<f64> {
    (0..=grid.n).map(|j| grid.r0 + (j as f64 + 0.5) * grid.h).collect()
}

/// `-d/dr (m d/dr)` with `m` at the `n + 1` cell midpoints, plus `diag`.
fn divergence_band(grid: &RadialGrid, m: &[f64], diag: &[f64]) -> SymBand {
    let h2 = grid.h * grid.h;
    let mut band = SymBand::zeros(grid.n, 1);
    for i in 0..grid.n {
        band.upper[0][i] = (m[i] + m[i + 1]) / h2 + diag[i];
        if i + 1 < grid.n {
            band.upper[1][i] = -m[i + 1] / h2;
        }
    }
    band
}

/// Divergence form `2 D a' D + 2 a mu e^{-2r} - a'''/2` of `i[H0, A_k]`.
pub fn commutator_matrix(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<SymBand> {
    check_resolution(params, grid)?;
    let nu = spec.nu();
    let m: Vec<f64> = midpoints(grid).iter().map(|&r| 2.0 * a_k_jet(params, nu, r).derivative(1)).collect();
    let diag: Vec<f64> = grid
        .points()
        .iter()
        .map(|&r| {
            let a = a_k_jet(params, nu, r);
            2.0 * a.value() * spec.mu * (-2.0 * r).exp() - a.derivative(3) / 2.0
        })
        .collect();
    Ok(divergence_band(grid, &m, &diag))
}

/// `b = 2(a a'' - 2a'^2)`, `c = i(6 a' a'' - 2 a a''')`,
/// `d = 2 a mu e^{-2r}(a' - 2a) + a' a''' - a a''''/2 + a''^2`, so that
/// `[[H0, A], A] = b D^2 + c D + d = D b D + d`.
pub fn commutator_coefficients(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> CommutatorCoefficients {
    let nu = spec.nu();
    let b_of = |a: &Jet| {
        let (a0, a1, a2) = (a.value(), a.derivative(1), a.derivative(2));
        2.0 * (a0 * a2 - 2.0 * a1 * a1)
    };
    let b_mid = midpoints(grid).iter().map(|&r| b_of(&a_k_jet(params, nu, r))).collect();
    let mut b = Vec::with_capacity(grid.n);
    let mut c_imag = Vec::with_capacity(grid.n);
    let mut d = Vec::with_capacity(grid.n);
    for r in grid.points() {
        let a = a_k_jet(params, nu, r);
        let (a0, a1, a2, a3, a4) = (
            a.value(),
            a.derivative(1),
            a.derivative(2),
            a.derivative(3),
            a.derivative(4),
        );
        b.push(b_of(&a));
        c_imag.push(6.0 * a1 * a2 - 2.0 * a0 * a3);
        let e = spec.mu * (-2.0 * r).exp();
        d.push(2.0 * a0 * e * (a1 - 2.0 * a0) + a1 * a3 - a0 * a4 / 2.0 + a2 * a2);
    }
    CommutatorCoefficients { b_mid, b, c_imag, d }
}

/// `[[H0, A_k], A_k]` assembled as `D b D + d`.
pub fn double_commutator_matrix(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<SymBand> {
    check_resolution(params, grid)?;
    let co = commutator_coefficients(params, spec, grid);
    Ok(divergence_band(grid, &co.b_mid, &co.d))
}

pub fn commutator_matrices(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<CommutatorMatrices> {
    Ok(CommutatorMatrices {
        k: spec.k,
        first: commutator_matrix(params, spec, grid)?,
        second: double_commutator_matrix(params, spec, grid)?,
        coefficients: commutator_coefficients(params, spec, grid),
    })
}

/// Tridiagonal matrix stored by diagonals.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = x[i] * self.diag[i];
                if i > 0 {
                    s += x[i - 1] * self.lower[i - 1];
                }
                if i + 1 < n {
                    s += x[i + 1] * self.upper[i];
                }
                s
            })
            .collect()
    }

    pub fn apply_transpose(&self, x: &[C64]) -> Vec<C64> {
        Tridiagonal {
            lower: self.upper.clone(),
            diag: self.diag.clone(),
            upper: self.lower.clone(),
        }
        .apply(x)
    }

    pub fn sub_sym(&self, s: &SymBand) -> Tridiagonal {
        let n = self.diag.len();
        Tridiagonal {
            lower: (0..n - 1).map(|i| self.lower[i] - s.get(i + 1, i)).collect(),
            diag: (0..n).map(|i| self.diag[i] - s.get(i, i)).collect(),
            upper: (0..n - 1).map(|i| self.upper[i] - s.get(i, i + 1)).collect(),
        }
    }
}

/// Expanded form `2 a' D^2 - 2 a'' d/dr + 2 a mu e^{-2r} - a'''/2` with
/// centered differences. Not symmetric on the grid.
pub fn commutator_matrix_expanded(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<Tridiagonal> {
    check_resolution(params, grid)?;
    let nu = spec.nu();
    let (h, n) = (grid.h, grid.n);
    let mut t = Tridiagonal {
        lower: vec![0.0; n - 1],
        diag: vec![0.0; n],
        upper: vec![0.0; n - 1],
    };
    for (i, r) in grid.points().into_iter().enumerate() {
        let a = a_k_jet(params, nu, r);
        let (a1, a2) = (a.derivative(1), a.derivative(2));
        t.diag[i] = 4.0 * a1 / (h * h) + 2.0 * a.value() * spec.mu * (-2.0 * r).exp() - a.derivative(3) / 2.0;
        if i + 1 < n {
            t.upper[i] = -2.0 * a1 / (h * h) - a2 / h;
        }
        if i > 0 {
            t.lower[i - 1] = -2.0 * a1 / (h * h) + a2 / h;
        }
    }
    Ok(t)
}

/// `||(C_div - C_exp)(H0 + i)^{-1}||`, which is `O(h^2)`.
pub fn expanded_form_deviation(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<f64> {
    let diff = commutator_matrix_expanded(params, spec, grid)?.sub_sym(&commutator_matrix(params, spec, grid)?);
    let op = discretize(&RadialOperatorSpec { potential: None, ..spec.clone() }, grid, None)?;
    let band = op.shifted_band(C64::new(0.0, -1.0));
    let lu = BandLu::factor(&band)?;
    let lu_adj = BandLu::factor(&band.adjoint())?;
    let est = power_sqrt(grid.n, PowerOptions::default(), |x| {
        let y = diff.apply(&lu.solve(x)?);
        lu_adj.solve(&diff.apply_transpose(&y))
    })?;
    Ok(est.norm)
}

/// Diagonal `i[V_k, A_k] = -a_k V_k'` (zero without potential).
pub fn potential_commutator(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Vec<f64> {
    let nu = spec.nu();
    grid.points()
        .iter()
        .map(|&r| match &spec.potential {
            Some(p) => -a_k_jet(params, nu, r).value() * p.jet(spec.mu, r).derivative(1),
            None => 0.0,
        })
        .collect()
}

/// Localizations of one mode on the grid with analytic derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct XiOperators {
    pub chi_sqrt: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_tilde: Vec<f64>,
    pub xi_d1: Vec<f64>,
    pub xi_d2: Vec<f64>,
}

/// `Xi = chi_R^{1/2}(r) (1 - xi_S^{1/2})(r - log nu)` and
/// `Xi~ = chi_R^{1/2} - Xi`.
pub fn xi_build(params: &ConjugateParams, nu: f64, grid: &RadialGrid) -> XiOperators {
    let l = nu.ln();
    let mut out = XiOperators {
        chi_sqrt: Vec::with_capacity(grid.n),
        xi: Vec::with_capacity(grid.n),
        xi_tilde: Vec::with_capacity(grid.n),
        xi_d1: Vec::with_capacity(grid.n),
        xi_d2: Vec::with_capacity(grid.n),
    };
    for r in grid.points() {
        let x = Jet::variable(r);
        let c = chi_sqrt_jet(x.scale(1.0 / params.r_big));
        let s = xi_sqrt_jet(x.offset(-l).scale(1.0 / params.s_big));
        let xi = c * (Jet::constant(1.0) - s);
        out.chi_sqrt.push(c.value());
        out.xi.push(xi.value());
        out.xi_tilde.push(c.value() - xi.value());
        out.xi_d1.push(xi.derivative(1));
        out.xi_d2.push(xi.derivative(2));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalReport {
    pub lambda: f64,
    pub tau: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub gap: f64,
    pub per_mode: Vec<(usize, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `sup_k ||Xi_k (tau (H0_k - lambda) - z)^{-1}||` against the closed-form bound.
pub fn semiclassical_bound_check(
    xp: &XiParams,
    lambda: f64,
    specs: &[RadialOperatorSpec],
    grid: &RadialGrid,
) -> Result<SemiclassicalReport> {
    let rhs = xp.rhs(lambda)?;
    let e = C64::new(lambda, 0.0) + xp.z / xp.tau;
    let ones = vec![1.0; grid.n];
    let mut per_mode = Vec::with_capacity(specs.len());
    for spec in specs {
        let op = discretize(&RadialOperatorSpec { potential: None, ..spec.clone() }, grid, None)?;
        let xi = xi_build(&xp.conj, spec.nu(), grid).xi;
        let est = weighted_operator_norm(&op, e, &xi, &ones, PowerOptions::default())?;
        per_mode.push((spec.k, est.norm / xp.tau));
    }
    let lhs = per_mode.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(SemiclassicalReport {
        lambda,
        tau: xp.tau,
        z_re: xp.z.re,
        z_im: xp.z.im,
        gap: xp.gap(lambda),
        per_mode,
        lhs,
        rhs,
        pass: lhs <= rhs,
    })
}

/// Norms of `<r>^j [A_k, V_k] (H_k + i)^{-1}` for `j = 0, 1` and of
/// `[A_k, [A_k, V_k]] (H_k + i)^{-1}` at one `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub lambda: f64,
    pub r_big: f64,
    pub first: [f64; 2],
    pub second: f64,
}

pub fn perturbation_norms(params: &ConjugateParams, spec: &RadialOperatorSpec, grid: &RadialGrid) -> Result<PerturbationRow> {
    let Some(v) = &spec.potential else {
        return invalid("perturbation bounds need a potential");
    };
    let op = discretize(spec, grid, None)?;
    let nu = spec.nu();
    let z = C64::new(0.0, -1.0);
    let ones = vec![1.0; grid.n];
    let pts = grid.points();
    let mut first = [0.0; 2];
    for (j, slot) in first.iter_mut().enumerate() {
        // [A, V] = -i a V'.
        let wl: Vec<f64> = pts
            .iter()
            .map(|&r| {
                let jr = (1.0 + r * r).sqrt().powi(j as i32);
                jr * (a_k_jet(params, nu, r).value() * v.jet(spec.mu, r).derivative(1)).abs()
            })
            .collect();
        *slot = weighted_operator_norm(&op, z, &wl, &ones, PowerOptions::default())?.norm;
    }
    // [A, [A, V]] = -a (a V')'.
    let wl: Vec<f64> = pts
        .iter()
        .map(|&r| {
            let a = a_k_jet(params, nu, r);
            let vj = v.jet(spec.mu, r);
            (a.value() * (a.derivative(1) * vj.derivative(1) + a.value() * vj.derivative(2))).abs()
        })
        .collect();
    let second = weighted_operator_norm(&op, z, &wl, &ones, PowerOptions::default())?.norm;
    Ok(PerturbationRow {
        lambda: params.lambda.unwrap_or(f64::NAN),
        r_big: params.r_big,
        first,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_spectrum, mode_operator_spec, CrossSection, ModelConfig};

    fn spec(k: usize) -> RadialOperatorSpec {
        let cfg = ModelConfig::new(2, 1.0, CrossSection::Circle { radius: 1.0 });
        let s = build_spectrum(&cfg.cross_section, k.max(1)).unwrap();
        mode_operator_spec(&cfg, &s, k).unwrap()
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
        let grid = RadialGrid::new(1.0, 30.0, 100, 2).unwrap();
        assert!(commutator_matrix(&p, &spec(0), &grid).is_err());
    }

    #[test]
    fn zero_field_rows_vanish() {
        let p = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
        let grid = RadialGrid::new(1.0, 30.0, 2000, 2).unwrap();
        let c = commutator_matrix(&p, &spec(1), &grid).unwrap();
        let d = double_commutator_matrix(&p, &spec(1), &grid).unwrap();
        let i = grid.nearest(4.0);
        assert_eq!((c.get(i, i), c.get(i, i + 1)), (0.0, 0.0));
        assert_eq!((d.get(i, i), d.get(i, i + 1)), (0.0, 0.0));
    }

    #[test]
    fn semiclassical_example_gap() {
        let p = ConjugateParams::from_lambda(100.0, 1.0).unwrap();
        let xp = XiParams::new(p, 0.01, C64::new(0.0, 1.0)).unwrap();
        // e^S = 4 lambda and e^{-2R} = (5 lambda)^{-2}.
        let gap = 300.0 - 1.0 / 250_000.0;
        assert!((xp.gap(100.0) - gap).abs() < 1e-10);
        let expect = gap.powf(-0.5) * (xp.c_chi_xi / p.s_big + 10.0);
        assert!((xp.rhs(100.0).unwrap() - expect).abs() < 1e-12);
        let xp2 = XiParams::new(p, 0.01, C64::new(2.0, 1.0)).unwrap();
        assert!((xp2.gap(100.0) - 100.0).abs() < 1e-4);
        let xp3 = XiParams::new(p, 0.01, C64::new(4.0, 1.0)).unwrap();
        assert!(xp3.rhs(100.0).is_err());
        assert!(XiParams::new(p, 0.01, C64::new(1.0, 0.0)).is_err());
    }
}
