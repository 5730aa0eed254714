use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::Population;
use crate::tariff::CostModel;

/// Name accepted in place of a path for the scenario shipped with the crate.
pub const BUNDLED_NAME: &str = "paper_defaults";
const BUNDLED_JSON: &str = include_str!("../../scenarios/paper_defaults.json");

fn default_lambda() -> f64 {
    1.5
}
fn default_alpha() -> f64 {
    0.8
}
fn default_seed() -> u64 {
    7
}
fn default_min_need_fraction() -> f64 {
    0.5
}

/// Quadratic provider cost `aχ² + bχ + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(default = "CostConfig::default_a")]
    pub a: f64,
    #[serde(default = "CostConfig::default_b")]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
}

impl CostConfig {
    fn default_a() -> f64 {
        0.05
    }
    fn default_b() -> f64 {
        0.5
    }

    pub fn model(&self) -> CostModel {
        CostModel::quadratic(self.a, self.b, self.c)
    }
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            a: 0.05,
            b: 0.5,
            c: 0.0,
        }
    }
}

/// Budget sweep for the allocation study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSweep {
    pub chi_min: f64,
    pub chi_max: f64,
    pub chi_step: f64,
}

impl Default for AllocationSweep {
    fn default() -> Self {
        Self {
            chi_min: 0.01,
            chi_max: 15.0,
            chi_step: 0.01,
        }
    }
}

/// Where the 24-slot reference table comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlotSource {
    /// The table shipped with the crate.
    #[default]
    Bundled,
    Synthetic {
        consumers: usize,
        peak_hour: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// CSV file; relative paths are resolved against the scenario file.
    Csv { path: PathBuf },
}

/// Random-demand sweep: `consumers` reference points drawn uniformly from
/// `[level − spread, level + spread]` for each demand level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSweep {
    pub level_min: f64,
    pub level_max: f64,
    pub level_step: f64,
    pub spread: f64,
    pub consumers: usize,
    pub trials: usize,
}

impl Default for DemandSweep {
    fn default() -> Self {
        Self {
            level_min: 1.0,
            level_max: 2.5,
            level_step: 0.25,
            spread: 0.5,
            consumers: 5,
            trials: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    #[serde(default)]
    pub slots: SlotSource,
    #[serde(default)]
    pub sweep: DemandSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EeConfig {
    /// Multipliers applied to every reference point.
    pub scales: Vec<f64>,
}

impl Default for EeConfig {
    fn default() -> Self {
        Self {
            scales: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
        }
    }
}

/// A fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub reference_points: Vec<f64>,
    /// Minimum need of each consumer as a fraction of its reference point
    /// (energy-efficiency study only).
    #[serde(default = "default_min_need_fraction")]
    pub min_need_fraction: f64,
    #[serde(default)]
    pub cost: CostConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub allocation: AllocationSweep,
    #[serde(default)]
    pub pricing: PricingConfig,
    #[serde(default)]
    pub ee: EeConfig,
    /// Directory relative paths are resolved against; not part of the file.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    pub fn paper_defaults() -> Self {
        Self::from_json_str(BUNDLED_JSON, BUNDLED_NAME).expect("bundled scenario is valid")
    }

    /// Parses and validates a scenario; `origin` names the source in errors.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        scenario.validate().map_err(|e| Error::Scenario {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(scenario)
    }

    pub fn population(&self) -> Result<Population> {
        Population::new(&self.reference_points, self.lambda, self.alpha)
    }

    /// Population with minimum needs `min_need_fraction · r_i`.
    pub fn population_with_needs(&self, scale: f64) -> Result<Population> {
        let r: Vec<f64> = self.reference_points.iter().map(|v| v * scale).collect();
        let m: Vec<f64> = r.iter().map(|v| v * self.min_need_fraction).collect();
        Population::with_min_needs(&r, &m, self.lambda, self.alpha)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.population()?;
        if !(0.0..1.0).contains(&self.min_need_fraction) {
            return Err(Error::Config(format!(
                "min_need_fraction must lie in [0, 1), got {}",
                self.min_need_fraction
            )));
        }
        let c = &self.cost;
        if !(c.a >= 0.0 && c.b >= 0.0) || !(c.a > 0.0 || c.b > 0.0) {
            return Err(Error::Config(format!(
                "cost must be increasing: need a ≥ 0, b ≥ 0, not both zero (a = {}, b = {})",
                c.a, c.b
            )));
        }
        let s = &self.allocation;
        if !(s.chi_step > 0.0 && s.chi_min >= 0.0 && s.chi_max >= s.chi_min) {
            return Err(Error::Config(format!(
                "allocation sweep needs 0 ≤ chi_min ≤ chi_max and chi_step > 0, got {s:?}"
            )));
        }
        let d = &self.pricing.sweep;
        if !(d.level_step > 0.0 && d.level_max >= d.level_min && d.spread >= 0.0)
            || d.level_min - d.spread <= 0.0
            || d.consumers == 0
            || d.trials == 0
        {
            return Err(Error::Config(format!(
                "demand sweep needs level_min − spread > 0, a positive step, consumers ≥ 1 and trials ≥ 1, got {d:?}"
            )));
        }
        if let SlotSource::Synthetic {
            consumers,
            peak_hour,
            ..
        } = self.pricing.slots
        {
            if consumers == 0 || peak_hour > 23 {
                return Err(Error::Config(format!(
                    "synthetic slots need consumers ≥ 1 and peak_hour in 0..=23, got {consumers} and {peak_hour}"
                )));
            }
        }
        if let SlotSource::Csv { path } = &self.pricing.slots {
            let full = self.resolve(path);
            if !full.is_file() {
                return Err(Error::Config(format!(
                    "slot table {} does not exist",
                    full.display()
                )));
            }
        }
        if self.ee.scales.is_empty() || self.ee.scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config(
                "ee.scales must be a non-empty list of positive numbers".into(),
            ));
        }
        Ok(())
    }
}

/// Loads a scenario file, or the bundled one when `path` is `paper_defaults`.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    if path.as_os_str() == BUNDLED_NAME {
        return Ok(Scenario::paper_defaults());
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let mut scenario: Scenario = serde_json::from_str(&text).map_err(|e| Error::Scenario {
        path: origin.clone(),
        message: e.to_string(),
    })?;
    scenario.base_dir = path.parent().map(Path::to_path_buf);
    scenario.validate().map_err(|e| Error::Scenario {
        path: origin,
        message: e.to_string(),
    })?;
    Ok(scenario)
}
