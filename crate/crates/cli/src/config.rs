//! Run configuration: a TOML file with a `[model]` table and exactly one
//! experiment table. Missing keys take the defaults below.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spin_triangle::{Execution, ModelParameters};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectrum,
    Magnetization,
    Negativity,
    Dynamics,
    Sensing,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Magnetization => "magnetization",
            Experiment::Negativity => "negativity",
            Experiment::Dynamics => "dynamics",
            Experiment::Sensing => "sensing",
        };
        f.write_str(name)
    }
}

/// Either explicit values or `points` uniform samples on `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn range(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { start, stop, points } => spin_triangle::dicke::linspace(start, stop, points),
        }
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        let v = self.values();
        if v.is_empty() {
            return Err(CliError::Config(format!("{name} is empty")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{name} has non-finite values")));
        }
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(format!("{name} must be strictly increasing")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub b_z: f64,
    pub sector_tol: f64,
    /// Also write the Hamiltonian's nonzero entries.
    pub dump_matrix: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { b_z: 0.0, sector_tol: spin_triangle::sectors::DEFAULT_SECTOR_TOL, dump_matrix: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MagnetizationConfig {
    pub temperatures: Vec<f64>,
    pub b_grid: Grid,
    /// Add the closed-form ground-state staircase as a `T = 0` curve.
    pub zero_temperature: bool,
    pub plateau_slope: f64,
    pub plateau_min_width: f64,
}

impl Default for MagnetizationConfig {
    fn default() -> Self {
        Self {
            temperatures: vec![0.02, 1.8, 50.0],
            b_grid: Grid::range(0.0, 110.0, 600),
            zero_temperature: true,
            plateau_slope: 5e-3,
            plateau_min_width: spin_triangle::thermo::DEFAULT_PLATEAU_MIN_WIDTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NegativityConfig {
    pub b_grid: Grid,
    pub t_grid: Grid,
    /// Fields at which both threshold temperatures are bisected.
    pub threshold_fields: Vec<f64>,
    pub threshold_bracket: [f64; 2],
}

impl Default for NegativityConfig {
    fn default() -> Self {
        Self {
            b_grid: Grid::Values(vec![0.0, 10.0, 30.0]),
            t_grid: Grid::range(0.5, 80.0, 160),
            threshold_fields: vec![0.0, 10.0, 30.0],
            threshold_bracket: [1.0, 300.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub dicke_k: Vec<u32>,
    pub b_x: Vec<f64>,
    /// Dimensionless time grid; defaults to ten precession periods at 1 T.
    pub theta_grid: Option<Grid>,
    pub include_sz2: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self { dicke_k: vec![0, 1, 2, 3], b_x: vec![1.0, 5.0], theta_grid: None, include_sz2: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub dicke_k: Vec<u32>,
    pub b_x: Vec<f64>,
    pub n_seq: usize,
    /// Common step length; chosen automatically when absent.
    pub tau: Option<f64>,
    /// Per-step lengths; overrides `tau`.
    pub tau_list: Option<Vec<f64>>,
    pub prune_threshold: f64,
    pub leaf_budget: u64,
    pub delta_b: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            dicke_k: vec![0, 1, 2, 3],
            b_x: vec![1.0, 5.0],
            n_seq: 6,
            tau: None,
            tau_list: None,
            prune_threshold: 0.0,
            leaf_budget: spin_triangle::sensing::DEFAULT_LEAF_BUDGET,
            delta_b: spin_triangle::sensing::DEFAULT_DELTA_B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelParameters,
    #[serde(default)]
    pub execution: Execution,
    pub output_dir: Option<PathBuf>,
    pub spectrum: Option<SpectrumConfig>,
    pub magnetization: Option<MagnetizationConfig>,
    pub negativity: Option<NegativityConfig>,
    pub dynamics: Option<DynamicsConfig>,
    pub sensing: Option<SensingConfig>,
}

impl RunConfig {
    /// Defaults for one experiment.
    pub fn default_for(experiment: Experiment) -> Self {
        let mut c = RunConfig {
            model: ModelParameters::fe3(),
            execution: Execution::default(),
            output_dir: None,
            spectrum: None,
            magnetization: None,
            negativity: None,
            dynamics: None,
            sensing: None,
        };
        match experiment {
            Experiment::Spectrum => c.spectrum = Some(SpectrumConfig::default()),
            Experiment::Magnetization => c.magnetization = Some(MagnetizationConfig::default()),
            Experiment::Negativity => c.negativity = Some(NegativityConfig::default()),
            Experiment::Dynamics => c.dynamics = Some(DynamicsConfig::default()),
            Experiment::Sensing => c.sensing = Some(SensingConfig::default()),
        }
        c
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Experiment tables present in the file.
    pub fn experiments(&self) -> Vec<Experiment> {
        let mut out = Vec::new();
        if self.spectrum.is_some() {
            out.push(Experiment::Spectrum);
        }
        if self.magnetization.is_some() {
            out.push(Experiment::Magnetization);
        }
        if self.negativity.is_some() {
            out.push(Experiment::Negativity);
        }
        if self.dynamics.is_some() {
            out.push(Experiment::Dynamics);
        }
        if self.sensing.is_some() {
            out.push(Experiment::Sensing);
        }
        out
    }

    /// Checks the single experiment table matches `expected` and its values are usable.
    pub fn validate(&self, expected: Experiment) -> Result<(), CliError> {
        match self.experiments().as_slice() {
            [only] if *only == expected => {}
            [only] => {
                return Err(CliError::Config(format!("config describes a {only} run, not {expected}")));
            }
            [] => return Err(CliError::Config(format!("config has no [{expected}] table"))),
            many => {
                let names: Vec<String> = many.iter().map(|e| e.to_string()).collect();
                return Err(CliError::Config(format!("config has several experiment tables: {}", names.join(", "))));
            }
        }
        self.model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.model.j_coupling > 0.0) {
            return Err(CliError::Config("model.j_coupling must be positive".into()));
        }
        let positive = |name: &str, v: &[f64]| -> Result<(), CliError> {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(CliError::Config(format!("{name} must be a nonempty list of positive values")));
            }
            Ok(())
        };
        if let Some(s) = &self.spectrum {
            if !(s.sector_tol > 0.0) {
                return Err(CliError::Config("spectrum.sector_tol must be positive".into()));
            }
        }
        if let Some(m) = &self.magnetization {
            positive("magnetization.temperatures", &m.temperatures)?;
            m.b_grid.validate("magnetization.b_grid")?;
        }
        if let Some(n) = &self.negativity {
            n.b_grid.validate("negativity.b_grid")?;
            n.t_grid.validate("negativity.t_grid")?;
            positive("negativity.t_grid", &n.t_grid.values())?;
            let [lo, hi] = n.threshold_bracket;
            if !(lo > 0.0 && hi > lo) {
                return Err(CliError::Config("negativity.threshold_bracket must satisfy 0 < lo < hi".into()));
            }
        }
        if let Some(d) = &self.dynamics {
            check_dicke(&d.dicke_k)?;
            if d.b_x.is_empty() {
                return Err(CliError::Config("dynamics.b_x is empty".into()));
            }
            if let Some(g) = &d.theta_grid {
                g.validate("dynamics.theta_grid")?;
            }
        }
        if let Some(s) = &self.sensing {
            check_dicke(&s.dicke_k)?;
            if s.b_x.is_empty() {
                return Err(CliError::Config("sensing.b_x is empty".into()));
            }
            if s.n_seq < 3 {
                return Err(CliError::Config("sensing.n_seq must be at least 3 for the power-law fit".into()));
            }
            if let Some(list) = &s.tau_list {
                if list.len() != s.n_seq {
                    return Err(CliError::Config(format!(
                        "sensing.tau_list has {} entries for n_seq = {}",
                        list.len(),
                        s.n_seq
                    )));
                }
            }
            if !(s.delta_b > 0.0) {
                return Err(CliError::Config("sensing.delta_b must be positive".into()));
            }
        }
        Ok(())
    }
}

fn check_dicke(ks: &[u32]) -> Result<(), CliError> {
    if ks.is_empty() {
        return Err(CliError::Config("dicke_k is empty".into()));
    }
    if let Some(k) = ks.iter().find(|&&k| k > spin_triangle::dicke::DickeIndex::MAX) {
        return Err(CliError::Config(format!("dicke_k = {k} is out of range 0..=15")));
    }
    Ok(())
}
