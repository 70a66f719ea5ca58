//! High-energy positive-commutator check on the spectral window of `lambda`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{commutator_matrix, potential_commutator, xi_build, SpectralCutoff};
use crate::conjugate::ConjugateParams;
use crate::error::{invalid, Result};
use crate::linops::norm::power_sqrt;
use crate::linops::{discretize, hermitian_eig_window, BandLu, CapProfile, PowerOptions, RadialGrid};
use crate::model::{build_spectrum, mode_operator_spec, ModelConfig, RadialOperatorSpec};
use crate::profiles::chi;
use crate::quad::composite;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivityConfig {
    pub lambda: f64,
    pub s0: f64,
    /// `rho(lambda) = lambda^rho_exponent`.
    pub rho_exponent: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    pub k_max: usize,
    pub points: usize,
    pub cap_length: f64,
    /// Eigenvectors with `f_lambda(E)` below this are outside the window.
    pub f_floor: f64,
    /// Excess CAP-region mass, over the uniform share, that marks a boundary state.
    pub exclusion_margin: f64,
    pub density_panels: usize,
}

impl PositivityConfig {
    pub fn new(lambda: f64) -> Self {
        PositivityConfig {
            lambda,
            s0: 1.0,
            rho_exponent: -0.5,
            c_const: 10.0,
            k_max: 200,
            points: 1200,
            cap_length: 8.0,
            f_floor: 1e-3,
            exclusion_margin: 0.2,
            density_panels: 2,
        }
    }

    /// `delta = (log lambda)^{-2 s0} rho(lambda)^{-1} / C`.
    pub fn delta(&self) -> f64 {
        self.lambda.ln().powf(-2.0 * self.s0) * self.lambda.powf(-self.rho_exponent) / self.c_const
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0) {
            return invalid("lambda must exceed 1");
        }
        if !(self.c_const > 0.0 && self.s0 >= 0.0 && self.cap_length > 0.0) {
            return invalid("C, s0 and cap length must be positive");
        }
        if self.points < 10 || self.density_panels == 0 {
            return invalid("grid and density quadrature too small");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeWindow {
    pub k: usize,
    pub mu: f64,
    pub window_size: usize,
    pub excluded: usize,
    /// Smallest eigenvalue of the compressed form; `None` for empty windows.
    pub min_eig: Option<f64>,
    pub deficits: [f64; 3],
}

/// Right-hand terms of the localized estimate. The first three are maxima
/// over modes of `||f_lambda(H) X||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deficits {
    pub r_inverse: f64,
    pub chi_r_minus_one: f64,
    pub one_minus_xi_tilde_sq: f64,
    pub s_inverse: f64,
    pub lambda_inverse: f64,
    /// The model has no compact part, so its contribution is absent.
    pub compact_part_included: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub lambda: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    pub delta_lambda: f64,
    pub r_big: f64,
    pub s_big: f64,
    pub r_abs: f64,
    pub r_max: f64,
    pub grid_points: usize,
    pub min_eig_ratio: f64,
    pub nonempty_modes: usize,
    pub excluded_total: usize,
    pub per_mode: Vec<ModeWindow>,
    pub deficits: Deficits,
}

struct Setup {
    params: ConjugateParams,
    grid: RadialGrid,
    cap: CapProfile,
    cutoff: SpectralCutoff,
}

fn setup(model: &ModelConfig, cfg: &PositivityConfig, max_log_nu: f64) -> Result<Setup> {
    let params = ConjugateParams::from_lambda(cfg.lambda, model.r0)?;
    let r_abs = (2.0 * params.r_big + 5.0).max(max_log_nu + 2.0);
    let grid = RadialGrid::new(model.r0, r_abs + cfg.cap_length, cfg.points, 2)?;
    let cap = CapProfile {
        r_abs,
        strength: 4.0 * cfg.lambda.sqrt(),
        exponent: 2,
    };
    cap.validate(&grid)?;
    Ok(Setup {
        params,
        grid,
        cap,
        cutoff: SpectralCutoff::new(cfg.lambda, cfg.delta())?,
    })
}

fn mode_window(cfg: &PositivityConfig, st: &Setup, spec: &RadialOperatorSpec) -> Result<ModeWindow> {
    let grid = &st.grid;
    let (lambda, delta) = (cfg.lambda, st.cutoff.delta);
    let op = discretize(spec, grid, None)?;
    let eig = hermitian_eig_window(&op, lambda - 3.0 * delta, lambda + 3.0 * delta)?;
    let pts = grid.points();
    let in_cap: Vec<bool> = pts.iter().map(|&r| r > st.cap.r_abs).collect();
    let mut kept = Vec::new();
    let mut excluded = 0;
    for (j, &e) in eig.values.iter().enumerate() {
        let f = st.cutoff.eval(e);
        if f < cfg.f_floor {
            continue;
        }
        let v = eig.vectors.column(j);
        let allowed: Vec<usize> = (0..grid.n).filter(|&i| spec.potential_value(pts[i]) < e).collect();
        let share = allowed.iter().filter(|&&i| in_cap[i]).count() as f64 / allowed.len().max(1) as f64;
        let mass: f64 = (0..grid.n).filter(|&i| in_cap[i]).map(|i| v[i] * v[i]).sum();
        if mass > share + cfg.exclusion_margin {
            excluded += 1;
            continue;
        }
        kept.push((j, f));
    }
    let min_eig = if kept.is_empty() {
        None
    } else {
        let mut c = commutator_matrix(&st.params, spec, grid)?;
        for (d, p) in c.upper[0].iter_mut().zip(potential_commutator(&st.params, spec, grid)) {
            *d += p;
        }
        let m = kept.len();
        let cv: Vec<Vec<f64>> = kept
            .iter()
            .map(|&(j, _)| c.matvec(eig.vectors.column(j).as_slice()))
            .collect();
        let form = DMatrix::<f64>::from_fn(m, m, |a, b| {
            let (ja, fa) = kept[a];
            let (_, fb) = kept[b];
            let va = eig.vectors.column(ja);
            let dot: f64 = va.iter().zip(&cv[b]).map(|(x, y)| x * y).sum();
            let diag = if a == b { lambda * fa * fa } else { 0.0 };
            fa * fb * dot - diag
        });
        let sym = (&form + form.transpose()) * 0.5;
        Some(sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min))
    };
    Ok(ModeWindow {
        k: spec.k,
        mu: spec.mu,
        window_size: eig.values.len(),
        excluded,
        min_eig,
        deficits: mode_deficits(cfg, st, spec)?,
    })
}

/// `||f_lambda(H) X||` for the three localizations, with `f_lambda(H)^2`
/// realized as `int f_lambda(E)^2 (1/pi) R_E W R_E^* dE`,
/// `R_E = (H - iW - E)^{-1}`.
fn mode_deficits(cfg: &PositivityConfig, st: &Setup, spec: &RadialOperatorSpec) -> Result<[f64; 3]> {
    let grid = &st.grid;
    let op = discretize(spec, grid, Some(st.cap))?;
    let (lambda, delta) = (cfg.lambda, st.cutoff.delta);
    let nodes = composite(lambda - 3.0 * delta, lambda + 3.0 * delta, cfg.density_panels, 8);
    let mut factors = Vec::with_capacity(nodes.len());
    for &(e, w) in &nodes {
        let f = st.cutoff.eval(e);
        if f == 0.0 {
            continue;
        }
        let band = op.shifted_band(C64::new(e, 0.0));
        factors.push((BandLu::factor(&band)?, BandLu::factor(&band.adjoint())?, w * f * f / std::f64::consts::PI));
    }
    let pts = grid.points();
    let xi_t = xi_build(&st.params, spec.nu(), grid).xi_tilde;
    let weights: [Vec<f64>; 3] = [
        pts.iter().map(|&r| 1.0 / (1.0 + r * r).sqrt()).collect(),
        pts.iter().map(|&r| chi(r / st.params.r_big) - 1.0).collect(),
        xi_t.iter().map(|x| 1.0 - x * x).collect(),
    ];
    let mut out = [0.0; 3];
    for (slot, x) in out.iter_mut().zip(&weights) {
        if x.iter().all(|&v| v == 0.0) {
            continue;
        }
        let est = power_sqrt(grid.n, PowerOptions::default(), |v| {
            let u: Vec<C64> = v.iter().zip(x).map(|(a, b)| a * *b).collect();
            let mut acc = vec![C64::new(0.0, 0.0); grid.n];
            for (lu, lu_adj, w) in &factors {
                let s = lu_adj.solve(&u)?;
                let s: Vec<C64> = s.iter().zip(&op.absorb).map(|(a, b)| a * *b).collect();
                let y = lu.solve(&s)?;
                acc.iter_mut().zip(&y).for_each(|(a, b)| *a += b * *w);
            }
            Ok(acc.iter().zip(x).map(|(a, b)| a * *b).collect())
        })?;
        *slot = est.norm;
    }
    Ok(out)
}

/// Smallest eigenvalue of `P (f i[H, A] f - lambda f^2) P` over modes,
/// relative to `lambda`, and the deficit terms.
pub fn mourre_positivity_check(model: &ModelConfig, cfg: &PositivityConfig) -> Result<PositivityReport> {
    cfg.validate()?;
    model.validate()?;
    let spectrum = build_spectrum(&model.cross_section, cfg.k_max)?;
    let max_log_nu = spectrum.entries.iter().map(|e| e.log_nu()).fold(0.0, f64::max);
    let st = setup(model, cfg, max_log_nu)?;
    let specs = (0..spectrum.len())
        .map(|k| mode_operator_spec(model, &spectrum, k))
        .collect::<Result<Vec<_>>>()?;
    let per_mode = specs
        .par_iter()
        .map(|spec| mode_window(cfg, &st, spec))
        .collect::<Result<Vec<_>>>()?;
    let nonempty: Vec<f64> = per_mode.iter().filter_map(|m| m.min_eig).collect();
    if nonempty.is_empty() {
        return invalid(format!(
            "empty spectral window: no eigenvalue within 3 delta = {:.4e} of lambda = {} in any mode",
            3.0 * st.cutoff.delta,
            cfg.lambda
        ));
    }
    let min_eig = nonempty.iter().cloned().fold(f64::INFINITY, f64::min);
    let dmax = |i: usize| per_mode.iter().map(|m| m.deficits[i]).fold(0.0, f64::max);
    Ok(PositivityReport {
        lambda: cfg.lambda,
        c_const: cfg.c_const,
        delta_lambda: st.cutoff.delta,
        r_big: st.params.r_big,
        s_big: st.params.s_big,
        r_abs: st.cap.r_abs,
        r_max: st.grid.r_max,
        grid_points: st.grid.n,
        min_eig_ratio: min_eig / cfg.lambda,
        nonempty_modes: nonempty.len(),
        excluded_total: per_mode.iter().map(|m| m.excluded).sum(),
        deficits: Deficits {
            r_inverse: dmax(0),
            chi_r_minus_one: dmax(1),
            one_minus_xi_tilde_sq: dmax(2),
            s_inverse: 1.0 / st.params.s_big,
            lambda_inverse: 1.0 / cfg.lambda,
            compact_part_included: false,
        },
        per_mode,
    })
}

/// Doubles `C` until `min_eig_ratio >= -tol`.
pub fn mourre_auto_calibrate(model: &ModelConfig, cfg: &PositivityConfig, tol: f64, max_doublings: usize) -> Result<PositivityReport> {
    let mut cfg = cfg.clone();
    let mut report = mourre_positivity_check(model, &cfg)?;
    for _ in 0..max_doublings {
        if report.min_eig_ratio >= -tol {
            break;
        }
        cfg.c_const *= 2.0;
        report = mourre_positivity_check(model, &cfg)?;
    }
    Ok(report)
}
