//! Model manifold `[r0, inf) x Y`: cross-section spectra and per-mode radial
//! operator data.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::jet::Jet;

/// Cross-sections with exactly known Laplace spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossSection {
    Circle { radius: f64 },
    Torus { radii: Vec<f64> },
    Custom { mu: Vec<f64> },
}

impl CrossSection {
    pub fn tag(&self) -> String {
        match self {
            CrossSection::Circle { radius } => format!("circle(radius={radius})"),
            CrossSection::Torus { radii } => format!("torus(radii={radii:?})"),
            CrossSection::Custom { mu } => format!("custom({} values)", mu.len()),
        }
    }

    /// Dimension of the cross-section, when determined by the family.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            CrossSection::Circle { .. } => Some(1),
            CrossSection::Torus { radii } => Some(radii.len()),
            CrossSection::Custom { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub mu: f64,
    pub multiplicity: usize,
    pub nu: f64,
}

impl ModeEntry {
    pub fn new(mu: f64, multiplicity: usize) -> Self {
        ModeEntry {
            mu,
            multiplicity,
            nu: nu_of(mu),
        }
    }

    pub fn log_nu(&self) -> f64 {
        self.nu.ln()
    }
}

/// `nu = (1 + mu)^{1/2}`.
pub fn nu_of(mu: f64) -> f64 {
    (1.0 + mu).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub entries: Vec<ModeEntry>,
    pub cross_section_tag: String,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.mu).collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.multiplicity).collect()
    }
}

/// All distinct eigenvalues up to and including the `k_max`-th (0-based),
/// with multiplicities, sorted ascending.
pub fn build_spectrum(cross_section: &CrossSection, k_max: usize) -> Result<ModeSpectrum> {
    let count = k_max + 1;
    let entries = match cross_section {
        CrossSection::Circle { radius } => {
            if !(*radius > 0.0) {
                return invalid("circle radius must be positive");
            }
            (0..count)
                .map(|m| {
                    let mu = (m as f64 / radius).powi(2);
                    ModeEntry::new(mu, if m == 0 { 1 } else { 2 })
                })
                .collect()
        }
        CrossSection::Torus { radii } => {
            if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
                return invalid("torus radii must be a non-empty list of positive values");
            }
            torus_spectrum(radii, count)
        }
        CrossSection::Custom { mu } => {
            if mu.is_empty() {
                return invalid("custom spectrum is empty");
            }
            if let Some(bad) = mu.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
                return invalid(format!("custom spectrum has a negative or non-finite value {bad}"));
            }
            let mut sorted = mu.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            group_sorted(&sorted).into_iter().take(count).collect()
        }
    };
    Ok(ModeSpectrum {
        entries,
        cross_section_tag: cross_section.tag(),
    })
}

fn group_sorted(values: &[f64]) -> Vec<ModeEntry> {
    let mut out: Vec<ModeEntry> = Vec::new();
    for &v in values {
        match out.last_mut() {
            Some(last) if (last.mu - v).abs() <= 1e-12 * v.abs().max(1.0) => last.multiplicity += 1,
            _ => out.push(ModeEntry::new(v, 1)),
        }
    }
    out
}

fn torus_spectrum(radii: &[f64], count: usize) -> Vec<ModeEntry> {
    let mut bound = 1.0f64;
    loop {
        let mut values = Vec::new();
        lattice_values(radii, bound, 0.0, &mut values);
        values.sort_by(|a, b| a.total_cmp(b));
        let grouped = group_sorted(&values);
        if grouped.len() >= count {
            return grouped.into_iter().take(count).collect();
        }
        bound *= 2.0;
    }
}

/// Pushes every `sum_i (j_i / radius_i)^2 <= bound` over integer vectors `j`.
fn lattice_values(radii: &[f64], bound: f64, partial: f64, out: &mut Vec<f64>) {
    let Some((&radius, rest)) = radii.split_first() else {
        out.push(partial);
        return;
    };
    let jmax = (radius * (bound - partial).max(0.0).sqrt()).floor() as i64;
    for j in -jmax..=jmax {
        let v = partial + (j as f64 / radius).powi(2);
        if v <= bound {
            lattice_values(rest, bound, v, out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialProfile {
    /// `a0 exp(-((r - center)/width)^2)`
    Gaussian { a0: f64, center: f64, width: f64 },
    /// `a0 / (1 + ((r - center)/width)^2)`
    Lorentzian { a0: f64, center: f64, width: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    #[default]
    Scalar,
    /// Multiplies the profile by `1 + mu_k e^{-2r}`.
    ModeScaled,
}

/// Mode-diagonal real potential `V_k(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalPotential {
    pub profile: PotentialProfile,
    #[serde(default)]
    pub coupling: Coupling,
}

impl DiagonalPotential {
    pub fn eval(&self, mu: f64, r: f64) -> f64 {
        let base = match self.profile {
            PotentialProfile::Gaussian { a0, center, width } => {
                a0 * (-((r - center) / width).powi(2)).exp()
            }
            PotentialProfile::Lorentzian { a0, center, width } => {
                a0 / (1.0 + ((r - center) / width).powi(2))
            }
        };
        match self.coupling {
            Coupling::Scalar => base,
            Coupling::ModeScaled => base * (1.0 + mu * (-2.0 * r).exp()),
        }
    }

    /// Taylor jet of `V_k` at `r`.
    pub fn jet(&self, mu: f64, r: f64) -> Jet {
        let x = Jet::variable(r);
        let base = match self.profile {
            PotentialProfile::Gaussian { a0, center, width } => {
                x.offset(-center).scale(1.0 / width).square().scale(-1.0).exp().scale(a0)
            }
            PotentialProfile::Lorentzian { a0, center, width } => {
                x.offset(-center).scale(1.0 / width).square().offset(1.0).recip().scale(a0)
            }
        };
        match self.coupling {
            Coupling::Scalar => base,
            Coupling::ModeScaled => base * x.scale(-2.0).exp().scale(mu).offset(1.0),
        }
    }

    /// `max_i <r_i>^2 |V_k(r_i)|` over the given points.
    pub fn decay_constant(&self, mu: f64, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&r| (1.0 + r * r) * self.eval(mu, r).abs())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<()> {
        let (a0, width) = match self.profile {
            PotentialProfile::Gaussian { a0, width, .. } => (a0, width),
            PotentialProfile::Lorentzian { a0, width, .. } => (a0, width),
        };
        if !a0.is_finite() || !(width > 0.0) {
            return invalid("potential amplitude must be finite and width positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub r0: f64,
    pub cross_section: CrossSection,
    #[serde(default)]
    pub potential: Option<DiagonalPotential>,
    #[serde(default)]
    pub boundary: BoundaryCondition,
}

impl ModelConfig {
    pub fn new(n: usize, r0: f64, cross_section: CrossSection) -> Self {
        ModelConfig {
            n,
            r0,
            cross_section,
            potential: None,
            boundary: BoundaryCondition::Dirichlet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid("dimension n must be at least 2");
        }
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return invalid("r0 must be positive");
        }
        if let Some(d) = self.cross_section.dimension() {
            if d != self.n - 1 {
                return invalid(format!(
                    "cross-section dimension {d} does not match n - 1 = {}",
                    self.n - 1
                ));
            }
        }
        if let Some(p) = &self.potential {
            p.validate()?;
        }
        Ok(())
    }

    /// `(n-1)^2 / 4`.
    pub fn spectral_shift(&self) -> f64 {
        let m = (self.n - 1) as f64;
        m * m / 4.0
    }
}

/// Data describing one radial operator `D_r^2 + mu_k e^{-2r} + (n-1)^2/4 + V_k(r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialOperatorSpec {
    pub k: usize,
    pub mu: f64,
    pub shift: f64,
    pub potential: Option<DiagonalPotential>,
    pub r0: f64,
    pub bc: BoundaryCondition,
}

impl RadialOperatorSpec {
    pub fn nu(&self) -> f64 {
        nu_of(self.mu)
    }

    pub fn perturbation(&self, r: f64) -> f64 {
        self.potential.map_or(0.0, |p| p.eval(self.mu, r))
    }

    /// Full multiplicative part `mu e^{-2r} + shift + V_k(r)`.
    pub fn potential_value(&self, r: f64) -> f64 {
        self.mu * (-2.0 * r).exp() + self.shift + self.perturbation(r)
    }
}

pub fn mode_operator_spec(
    config: &ModelConfig,
    spectrum: &ModeSpectrum,
    k: usize,
) -> Result<RadialOperatorSpec> {
    config.validate()?;
    let Some(entry) = spectrum.entries.get(k) else {
        return invalid(format!(
            "mode index {k} outside spectrum of {} entries",
            spectrum.len()
        ));
    };
    Ok(RadialOperatorSpec {
        k,
        mu: entry.mu,
        shift: config.spectral_shift(),
        potential: config.potential,
        r0: config.r0,
        bc: config.boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> CrossSection {
        CrossSection::Circle { radius: 1.0 }
    }

    #[test]
    fn circle_spectrum() {
        let s = build_spectrum(&circle(), 3).unwrap();
        assert_eq!(s.mus(), vec![0.0, 1.0, 4.0, 9.0]);
        assert_eq!(s.multiplicities(), vec![1, 2, 2, 2]);
    }

    #[test]
    fn custom_passthrough_and_errors() {
        let s = build_spectrum(&CrossSection::Custom { mu: vec![0.0, 2.5, 7.0] }, 10).unwrap();
        assert_eq!(s.mus(), vec![0.0, 2.5, 7.0]);
        assert_eq!(s.multiplicities(), vec![1, 1, 1]);
        assert!(build_spectrum(&CrossSection::Custom { mu: vec![] }, 3).is_err());
        assert!(build_spectrum(&CrossSection::Custom { mu: vec![1.0, -0.5] }, 3).is_err());
    }

    #[test]
    fn torus_spectrum_against_enumeration() {
        // Independent count of j^2 + m^2 over a generous box.
        let mut counts = std::collections::BTreeMap::new();
        for j in -10i64..=10 {
            for m in -10i64..=10 {
                let v = j * j + m * m;
                if v <= 5 {
                    *counts.entry(v).or_insert(0usize) += 1;
                }
            }
        }
        let oracle_mu: Vec<f64> = counts.keys().map(|&v| v as f64).collect();
        let oracle_mult: Vec<usize> = counts.values().copied().collect();
        assert_eq!(oracle_mu, vec![0.0, 1.0, 2.0, 4.0, 5.0]);
        assert_eq!(oracle_mult, vec![1, 4, 4, 4, 8]);

        let s = build_spectrum(&CrossSection::Torus { radii: vec![1.0, 1.0] }, 4).unwrap();
        assert_eq!(s.mus(), oracle_mu);
        assert_eq!(s.multiplicities(), oracle_mult);
    }

    #[test]
    fn potential_values() {
        let cfg = ModelConfig::new(2, 0.5, circle());
        let spec = build_spectrum(&circle(), 3).unwrap();
        let zero = mode_operator_spec(&cfg, &spec, 0).unwrap();
        for r in [0.5, 1.0, 7.0] {
            assert_eq!(zero.potential_value(r), 0.25);
        }
        let one = mode_operator_spec(&cfg, &spec, 1).unwrap();
        assert!((one.potential_value(0.0) - 1.25).abs() < 1e-15);

        let cfg3 = ModelConfig::new(3, 0.5, CrossSection::Custom { mu: vec![0.0, 4.0] });
        let spec3 = build_spectrum(&cfg3.cross_section, 1).unwrap();
        let m = mode_operator_spec(&cfg3, &spec3, 1).unwrap();
        assert!((m.potential_value(1.0) - (4.0 * (-2.0f64).exp() + 1.0)).abs() < 1e-14);
        assert!((m.potential_value(1.0) - 1.5413).abs() < 1e-4);

        assert!(mode_operator_spec(&cfg, &spec, 4).is_err());
    }

    #[test]
    fn nu_identity() {
        let s = build_spectrum(&circle(), 6).unwrap();
        for e in &s.entries {
            assert_eq!(e.nu, (1.0 + e.mu).sqrt());
        }
    }
}
