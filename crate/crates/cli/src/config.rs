//! Experiment configuration: defaults, file merge, `--set` overrides and validation.

use std::path::{Path, PathBuf};

use hyperlab::laplab::{EpsSchedule, RhoModel, SweepCap, SweepConfig, SweepGrid};
use hyperlab::model::{CrossSection, ModelConfig};
use hyperlab::testbed::{EasytrickConfig, TestbedConfig};
use hyperlab::weights::{AngularSymbol, FactorLadder, WeightKind};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Spectrum,
    Flow,
    Mourre,
    Sweep,
    Testbed,
    Weights,
    Report,
}

impl Kind {
    pub const EXPERIMENTS: [Kind; 6] = [Kind::Spectrum, Kind::Flow, Kind::Mourre, Kind::Sweep, Kind::Testbed, Kind::Weights];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Flow => "flow",
            Kind::Mourre => "mourre",
            Kind::Sweep => "sweep",
            Kind::Testbed => "testbed",
            Kind::Weights => "weights",
            Kind::Report => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub k_max: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { k_max: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub lambda: f64,
    pub nu: f64,
    /// Times of the recorded trajectories.
    pub times: Vec<f64>,
    /// Start points `r` of the recorded trajectories: `[first, last]`, `count` points.
    pub r_range: [f64; 2],
    pub r_count: usize,
    /// Grid spacings of the unitarity refinement ladder.
    pub spacings: Vec<f64>,
    pub group_spacing: f64,
    /// Center and width of the Gaussian test packet.
    pub packet: [f64; 2],
    pub grid_range: [f64; 2],
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            lambda: 100.0,
            nu: 1.0,
            times: vec![-0.3, -0.05, 0.02, 0.1, 0.5],
            r_range: [1.0, 40.0],
            r_count: 391,
            spacings: vec![0.2, 0.1, 0.05, 0.025],
            group_spacing: 1e-3,
            packet: [11.0, 1.0],
            grid_range: [1.0, 30.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MourreSection {
    pub lambdas: Vec<f64>,
    pub s0: f64,
    pub rho_exponent: f64,
    pub k_max: usize,
    pub points: usize,
    pub cap_length: f64,
    pub f_floor: f64,
    pub exclusion_margin: f64,
    pub density_panels: usize,
    /// Double `C` until `min_eig_ratio >= -tolerance`.
    pub auto_calibrate: bool,
    pub tolerance: f64,
    pub max_doublings: usize,
}

impl Default for MourreSection {
    fn default() -> Self {
        Self {
            lambdas: vec![100.0],
            s0: 1.0,
            rho_exponent: -0.5,
            k_max: 200,
            points: 1200,
            cap_length: 8.0,
            f_floor: 1e-3,
            exclusion_margin: 0.2,
            density_panels: 2,
            auto_calibrate: true,
            tolerance: 0.1,
            max_doublings: 4,
        }
    }
}

/// The half-decade ladder `10^2 ... 10^4`.
pub fn default_ladder() -> Vec<f64> {
    (0..5).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub s: f64,
    pub s0: f64,
    pub rho: RhoModel,
    pub k_max: usize,
    pub grid: SweepGrid,
    pub eps: EpsSchedule,
    pub cap: SweepCap,
    pub weight: WeightKind,
    /// Rerun with a 2x refined grid and a 2x absorbing strength and compare `C'`.
    pub stability: bool,
    pub p_range: [f64; 2],
    pub stability_tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas: default_ladder(),
            s: 1.0,
            s0: 1.0,
            rho: RhoModel::NonTrapping,
            k_max: 400,
            grid: SweepGrid::default(),
            eps: EpsSchedule::default(),
            cap: SweepCap::default(),
            weight: WeightKind::ModeShifted,
            stability: false,
            p_range: [-0.6, -0.4],
            stability_tol: 0.5,
        }
    }
}

impl SweepSection {
    pub fn sweep_config(&self, model: &ModelConfig) -> SweepConfig {
        SweepConfig {
            model: model.clone(),
            lambdas: self.lambdas.clone(),
            s: self.s,
            s0: self.s0,
            rho: self.rho,
            k_max: self.k_max,
            grid: self.grid,
            eps: self.eps,
            cap: self.cap,
            weight: self.weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestbedSection {
    /// Instances for the regime suites (a-priori bounds, differential inequality).
    pub instance: TestbedConfig,
    pub count: usize,
    /// Window width of the identity suite; wide enough that `B != 0`.
    pub identity_delta: f64,
    pub s: f64,
    /// Per-axis count of the scalar weight samples.
    pub weight_samples: usize,
    pub recurrence_s: Vec<f64>,
    /// Diagnostic suites on shifted-commutator instances.
    pub surrogate: Option<TestbedConfig>,
    pub easytrick: Option<EasytrickConfig>,
}

impl Default for TestbedSection {
    fn default() -> Self {
        Self {
            instance: TestbedConfig::default(),
            count: 100,
            identity_delta: 0.3,
            s: 0.75,
            weight_samples: 100,
            recurrence_s: vec![0.55, 0.6, 0.75, 1.0],
            surrogate: Some(TestbedConfig { surrogate_alpha: Some(0.5), delta: 0.1, ..Default::default() }),
            easytrick: Some(EasytrickConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub temperate_samples: usize,
    #[serde(rename = "temperate_C")]
    pub temperate_c: f64,
    #[serde(rename = "temperate_M")]
    pub temperate_m: f64,
    pub temperate_dim: usize,
    pub s: f64,
    pub log_nus: Vec<f64>,
    pub grid_range: [f64; 2],
    pub grid_points: usize,
    pub exponent_tol: f64,
    pub factor_sigmas: Vec<f64>,
    pub ladder: FactorLadder,
    pub symbol: AngularSymbol,
    pub bounded_ratio: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            temperate_samples: 100_000,
            temperate_c: 4.0,
            temperate_m: 1.0,
            temperate_dim: 1,
            s: 1.0,
            log_nus: vec![2.0, 4.0, 8.0],
            grid_range: [0.5, 12.0],
            grid_points: 4000,
            exponent_tol: 0.15,
            factor_sigmas: vec![0.0, 2.0],
            ladder: FactorLadder::default(),
            symbol: AngularSymbol::One,
            bounded_ratio: 2.0,
        }
    }
}

fn default_model() -> ModelConfig {
    ModelConfig::new(2, 1.0, CrossSection::Circle { radius: 1.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelConfig,
    /// Conjugate-operator constant: initial `C` in `delta = (log lambda)^{-2 s0} rho^{-1} / C`.
    #[serde(rename = "C")]
    pub c_const: f64,
    /// First seed of every seeded suite.
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub spectrum: SpectrumSection,
    pub flow: FlowSection,
    pub mourre: MourreSection,
    pub sweep: SweepSection,
    pub testbed: TestbedSection,
    pub weights: WeightsSection,
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        Self {
            kind,
            model: default_model(),
            c_const: 10.0,
            seed: 0,
            workers: 1,
            out: PathBuf::from("runs"),
            spectrum: SpectrumSection::default(),
            flow: FlowSection::default(),
            mourre: MourreSection::default(),
            sweep: SweepSection::default(),
            testbed: TestbedSection::default(),
            weights: WeightsSection::default(),
        }
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(self.kind.name())
    }

    /// Checks everything the selected experiment reads.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        if !positive(self.c_const) {
            return Err("C must be positive".into());
        }
        let lab = |r: hyperlab::Result<()>| r.map_err(|e| e.to_string());
        match self.kind {
            Kind::Spectrum => lab(self.model.validate()),
            Kind::Flow => {
                let f = &self.flow;
                lab(self.model.validate())?;
                if !positive(f.lambda) || !positive(f.nu) || f.nu < 1.0 {
                    return Err("flow needs lambda > 0 and nu >= 1".into());
                }
                if f.times.is_empty() || f.r_count < 2 || !(f.r_range[0] < f.r_range[1]) {
                    return Err("flow needs times and an ordered r_range with r_count >= 2".into());
                }
                if f.spacings.len() < 2 || f.spacings.iter().any(|&h| !positive(h)) || !positive(f.group_spacing) {
                    return Err("flow needs at least two positive spacings and a positive group_spacing".into());
                }
                if !positive(f.packet[1]) || !(f.grid_range[0] < f.grid_range[1]) {
                    return Err("flow packet width and grid range are invalid".into());
                }
                Ok(())
            }
            Kind::Mourre => {
                let m = &self.mourre;
                lab(self.model.validate())?;
                if m.lambdas.is_empty() || m.lambdas.iter().any(|&l| !(l > 1.0 && l.is_finite())) {
                    return Err("mourre needs at least one lambda > 1".into());
                }
                if m.points < 10 || m.density_panels == 0 || !positive(m.cap_length) || !(m.tolerance >= 0.0) {
                    return Err("mourre grid, density quadrature or tolerance invalid".into());
                }
                Ok(())
            }
            Kind::Sweep => {
                let s = &self.sweep;
                lab(s.sweep_config(&self.model).validate())?;
                if !(s.p_range[0] <= s.p_range[1]) || !positive(s.stability_tol) {
                    return Err("sweep p_range must be ordered and stability_tol positive".into());
                }
                Ok(())
            }
            Kind::Testbed => {
                let t = &self.testbed;
                lab(t.instance.validate())?;
                lab(TestbedConfig { delta: t.identity_delta, ..t.instance.clone() }.validate())?;
                if let Some(s) = &t.surrogate {
                    lab(s.validate())?;
                    if s.surrogate_alpha.is_none() {
                        return Err("testbed.surrogate needs surrogate_alpha".into());
                    }
                }
                if let Some(e) = &t.easytrick {
                    lab(e.validate())?;
                }
                if t.count == 0 || t.weight_samples == 0 {
                    return Err("testbed counts must be positive".into());
                }
                if !(t.s > 0.5 && t.s <= 1.0) || t.recurrence_s.iter().any(|&s| !(s > 0.5 && s <= 1.0)) {
                    return Err("testbed weight exponents must lie in (1/2, 1]".into());
                }
                Ok(())
            }
            Kind::Weights => {
                let w = &self.weights;
                if w.temperate_samples == 0 || w.temperate_dim == 0 || w.log_nus.is_empty() {
                    return Err("weights needs samples, a dimension and a nu ladder".into());
                }
                if !(w.grid_range[0] < w.grid_range[1]) || w.grid_points < 2 || !(w.s >= 0.0) {
                    return Err("weights grid or exponent invalid".into());
                }
                Ok(())
            }
            Kind::Report => Ok(()),
        }
    }
}

/// Command-line inputs that shape the resolved configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reads a config file. A run manifest is accepted too; its embedded config is used.
pub fn read_config_file(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    match value {
        Value::Object(mut map) if map.contains_key("config_hash") && map.contains_key("config") => {
            Ok(map.remove("config").unwrap_or(Value::Null))
        }
        v @ Value::Object(_) => Ok(v),
        _ => Err(format!("{}: config must be a JSON object", path.display())),
    }
}

/// Recursive merge. Objects carrying different `kind` tags are replaced wholesale.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            let retag = matches!((b.get("kind"), p.get("kind")), (Some(x), Some(y)) if x != y);
            if retag {
                *b = p;
                return;
            }
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Applies `key.path=value`; `value` is JSON when it parses, a string otherwise.
pub fn apply_set(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("--set expects key=value, got {assignment:?}"))?;
    if path.is_empty() {
        return Err("--set key is empty".into());
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    let mut slot = root;
    for key in &keys[..keys.len() - 1] {
        slot = match slot {
            Value::Object(map) => map.entry(key.to_string()).or_insert_with(|| Value::Object(Map::new())),
            Value::Array(items) => {
                let i: usize = key.parse().map_err(|_| format!("--set {path}: {key} is not an index"))?;
                let len = items.len();
                items.get_mut(i).ok_or_else(|| format!("--set {path}: index {i} out of range ({len})"))?
            }
            _ => return Err(format!("--set {path}: {key} is not inside an object")),
        };
    }
    let last = keys[keys.len() - 1];
    match slot {
        Value::Object(map) => {
            let mut current = map.remove(last).unwrap_or(Value::Null);
            if current.is_object() && value.is_object() {
                merge(&mut current, value);
            } else {
                current = value;
            }
            map.insert(last.to_string(), current);
        }
        Value::Array(items) => {
            let i: usize = last.parse().map_err(|_| format!("--set {path}: {last} is not an index"))?;
            let len = items.len();
            *items.get_mut(i).ok_or_else(|| format!("--set {path}: index {i} out of range ({len})"))? = value;
        }
        _ => return Err(format!("--set {path}: parent is not an object")),
    }
    Ok(())
}

/// Defaults, then the config file, then `--set`, then the dedicated flags.
pub fn resolve(kind: Kind, ov: &Overrides) -> Result<ExperimentConfig, String> {
    let mut value = serde_json::to_value(ExperimentConfig::defaults(kind)).map_err(|e| e.to_string())?;
    if let Some(path) = &ov.config {
        let file = read_config_file(path)?;
        if let Some(k) = file.get("kind") {
            if k != &Value::String(kind.name().into()) {
                return Err(format!("config kind {k} does not match subcommand {}", kind.name()));
            }
        }
        merge(&mut value, file);
    }
    for s in &ov.set {
        apply_set(&mut value, s)?;
    }
    if value.get("kind") != Some(&Value::String(kind.name().into())) {
        return Err(format!("kind cannot be overridden away from {}", kind.name()));
    }
    let map = value.as_object_mut().expect("config root is an object");
    if let Some(w) = ov.workers {
        map.insert("workers".into(), w.into());
    }
    if let Some(s) = ov.seed {
        map.insert("seed".into(), s.into());
    }
    if let Some(o) = &ov.out {
        map.insert("out".into(), Value::String(o.display().to_string()));
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))?;
    cfg.validate()?;
    Ok(cfg)
}
