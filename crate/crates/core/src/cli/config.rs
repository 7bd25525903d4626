//! Run configuration: `key = value` lines with one `[section]` per command.
//!
//! The file is parsed as TOML. Unknown keys and sections are rejected.
//! Command-line flags override file values, which override the defaults.
//!
//! ```toml
//! seed = 7
//! dimension_cap = 20000
//!
//! [ga]
//! population = 64
//!
//! [chsh]
//! postselect = false
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bell::PhaseMode;
use crate::error::{Error, Result};
use crate::fock::DEFAULT_DIMENSION_CAP;
use crate::optimize::GaConfig;
use crate::protocol::PostSelection;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dimension_cap: usize,
    pub output_path: PathBuf,
    pub strict: bool,
    pub ga: GaConfig,
    pub tolerances: Tolerances,
    pub chsh: ChshConfig,
    pub scaling: ScalingConfig,
    pub map: MapConfig,
    pub interaction: InteractionConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            output_path: PathBuf::from("."),
            strict: false,
            ga: GaConfig::default(),
            tolerances: Tolerances::default(),
            chsh: ChshConfig::default(),
            scaling: ScalingConfig::default(),
            map: MapConfig::default(),
            interaction: InteractionConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// GA settings with the run seed applied.
    pub fn seeded_ga(&self) -> GaConfig {
        GaConfig {
            seed: self.seed,
            ..self.ga.clone()
        }
    }
}

/// Limits used by `--strict`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub chsh_value: f64,
    pub chsh_omega: f64,
    pub chsh_unselected_target: f64,
    pub chsh_unselected: f64,
    pub scaling_p_min: f64,
    pub scaling_p_max: f64,
    pub scaling_c_min: f64,
    pub scaling_c_max: f64,
    pub scaling_xi2: f64,
    pub interaction_abs_error: f64,
    pub interaction_slope: f64,
    pub simulate_norm: f64,
    pub simulate_postselect_probability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chsh_value: 1e-6,
            chsh_omega: 1e-4,
            chsh_unselected_target: 2.41,
            chsh_unselected: 0.01,
            scaling_p_min: 0.8,
            scaling_p_max: 1.2,
            scaling_c_min: 1.2,
            scaling_c_max: 1.8,
            scaling_xi2: 1e-4,
            interaction_abs_error: 1e-6,
            interaction_slope: 1e-5,
            simulate_norm: 1e-12,
            simulate_postselect_probability: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshConfig {
    pub postselect: bool,
    pub omega_steps: usize,
}

impl Default for ChshConfig {
    fn default() -> Self {
        Self {
            postselect: true,
            omega_steps: 181,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScalingEvaluator {
    ClosedForm,
    FullSimulation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub mode: PhaseMode,
    pub evaluator: ScalingEvaluator,
    /// Smallest `N` included in the power-law fit.
    pub fit_from: usize,
    pub global_grid_steps: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 30,
            mode: PhaseMode::FreePhases,
            evaluator: ScalingEvaluator::ClosedForm,
            fit_from: 4,
            global_grid_steps: 257,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub n: usize,
    pub grid_steps: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self { n: 2, grid_steps: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteractionConfig {
    pub n: usize,
    pub chi_max: f64,
    pub steps: usize,
    pub optimize: bool,
    pub normalization: PostSelection,
    pub fd_step: f64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            n: 2,
            chi_max: 0.2,
            steps: 21,
            optimize: false,
            normalization: PostSelection::Nominal,
            fd_step: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub chi: f64,
    pub postselect: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            n: 2,
            theta: Vec::new(),
            phi: Vec::new(),
            chi: 0.0,
            postselect: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::parse(
            "seed = 9\n[ga]\npopulation = 16\n[scaling]\nmode = \"global_phases\"\n[interaction]\nnormalization = \"conditional\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ga.population, 16);
        assert_eq!(cfg.ga.generations, 200);
        assert_eq!(cfg.scaling.mode, PhaseMode::GlobalPhases);
        assert_eq!(cfg.interaction.normalization, PostSelection::Conditional);
        assert_eq!(cfg.seeded_ga().seed, 9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("bogus = 1\n").is_err());
        assert!(RunConfig::parse("[ga]\npopulaton = 3\n").is_err());
        assert!(RunConfig::parse("[tolerances]\nmystery = 0.1\n").is_err());
        assert!(RunConfig::parse("[nonsense]\n").is_err());
    }
}
