//! Pipeline parameters, presets, and layered overrides.
//!
//! Resolution order: preset defaults, then the config file, then flags.
//!
//! | key                  | synthetic | scanned | meaning |
//! |----------------------|-----------|---------|---------|
//! | k                    | 15        | 15      | neighbours averaged for ε |
//! | epsilon_scale        | 2.0       | 2.0     | graph radius as a multiple of ε |
//! | tau                  | 0.98      | 0.95    | points with corner penalty below this are curve candidates |
//! | min_component        | 10        | 20      | smaller curve components are dropped |
//! | prune_depth          | 3         | 3       | leaf-pruning passes |
//! | dilate_steps         | 1         | 1       | dilation passes after pruning |
//! | k_vote               | 5         | 5       | voters per curve point |
//! | min_region_fraction  | 0.05      | 0.02    | regions smaller than this share of the fragment are ignored |
//! | max_iterations       | 100       | 100     | ICP iteration cap |
//! | convergence_eps      | 1e-7      | 1e-7    | ICP stops when RMS changes less than this |
//! | cutoff_scale         | 5.0       | 5.0     | ICP correspondence cutoff as a multiple of ε |
//! | icp_points           | 1500      | 1500    | ICP source points per region (0 = all) |
//! | refine_pairs         | 3         | 3       | best pairs re-registered with every point when ICP was thinned |
//! | require_facing       | true      | true    | prefer alignments whose fragments lie on opposite sides of the contact |
//! | penalty_neighborhood | graph     | graph   | `graph` or `{ knn = N }` |
//! | voxel_size           | none      | none    | voxel downsampling edge length |
//! | seed                 | 0         | 0       | recorded in reports |
//!
//! A crease of dihedral angle 150° only lowers the penalty to about 0.98 at
//! its centre, so `tau` sits close to 1. The `scanned` values are estimates
//! for denser, noisier real scans, where flat areas score lower.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curves::{PenaltyNeighborhood, RefineParams};
use crate::error::{Error, Result};
use crate::registration::IcpParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Synthetic,
    Scanned,
    /// Synthetic defaults, marked as hand-tuned.
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "synthetic" => Ok(Preset::Synthetic),
            "scanned" => Ok(Preset::Scanned),
            "custom" => Ok(Preset::Custom),
            other => Err(format!("unknown preset `{other}` (expected synthetic, scanned or custom)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub k: usize,
    pub epsilon_scale: f64,
    pub tau: f64,
    pub min_component: usize,
    pub prune_depth: usize,
    pub dilate_steps: usize,
    pub k_vote: usize,
    pub min_region_fraction: f64,
    pub max_iterations: usize,
    pub convergence_eps: f64,
    pub cutoff_scale: f64,
    pub icp_points: usize,
    pub refine_pairs: usize,
    pub require_facing: bool,
    pub penalty_neighborhood: PenaltyNeighborhood,
    pub voxel_size: Option<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::preset(Preset::Synthetic)
    }
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut c = PipelineConfig {
            preset,
            k: 15,
            epsilon_scale: 2.0,
            tau: 0.98,
            min_component: 10,
            prune_depth: 3,
            dilate_steps: 1,
            k_vote: 5,
            min_region_fraction: 0.05,
            max_iterations: 100,
            convergence_eps: 1e-7,
            cutoff_scale: 5.0,
            icp_points: 1500,
            refine_pairs: 3,
            require_facing: true,
            penalty_neighborhood: PenaltyNeighborhood::Graph,
            voxel_size: None,
            seed: 0,
        };
        if preset == Preset::Scanned {
            c.tau = 0.95;
            c.min_component = 20;
            c.min_region_fraction = 0.02;
        }
        c
    }

    /// Preset (from flags, else file, else synthetic), then file values, then flags.
    pub fn resolve(file: Option<&ConfigOverrides>, flags: &ConfigOverrides) -> Result<Self> {
        let preset = flags
            .preset
            .or(file.and_then(|f| f.preset))
            .unwrap_or_default();
        let mut c = Self::preset(preset);
        if let Some(f) = file {
            f.apply(&mut c);
        }
        flags.apply(&mut c);
        c.validate()?;
        Ok(c)
    }

    pub fn refine_params(&self) -> RefineParams {
        RefineParams {
            min_component: self.min_component,
            prune_depth: self.prune_depth,
            dilate_steps: self.dilate_steps,
        }
    }

    /// ICP parameters for a target cloud with neighbourhood scale `epsilon`.
    pub fn icp_params(&self, epsilon: f64) -> IcpParams {
        IcpParams {
            max_iterations: self.max_iterations,
            correspondence_cutoff: self.cutoff_scale * epsilon,
            convergence_eps: self.convergence_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k", "must be positive"));
        }
        if !(self.epsilon_scale > 0.0 && self.epsilon_scale.is_finite()) {
            return Err(Error::invalid("epsilon_scale", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::invalid("tau", "must lie in [0, 1]"));
        }
        if self.k_vote == 0 {
            return Err(Error::invalid("k_vote", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_region_fraction) {
            return Err(Error::invalid("min_region_fraction", "must lie in [0, 1)"));
        }
        if !(self.cutoff_scale > 0.0) {
            return Err(Error::invalid("cutoff_scale", "must be positive"));
        }
        if let PenaltyNeighborhood::Knn(n) = self.penalty_neighborhood {
            if n < crate::curves::MIN_NEIGHBORS {
                return Err(Error::invalid("penalty_neighborhood", "knn needs at least 3 neighbours"));
            }
        }
        if let Some(v) = self.voxel_size {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("voxel_size", "must be positive"));
            }
        }
        self.icp_params(1.0).validate()
    }
}

/// Partial configuration: the contents of a config file or of CLI flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub preset: Option<Preset>,
    pub k: Option<usize>,
    pub epsilon_scale: Option<f64>,
    pub tau: Option<f64>,
    pub min_component: Option<usize>,
    pub prune_depth: Option<usize>,
    pub dilate_steps: Option<usize>,
    pub k_vote: Option<usize>,
    pub min_region_fraction: Option<f64>,
    pub max_iterations: Option<usize>,
    pub convergence_eps: Option<f64>,
    pub cutoff_scale: Option<f64>,
    pub icp_points: Option<usize>,
    pub refine_pairs: Option<usize>,
    pub require_facing: Option<bool>,
    pub penalty_neighborhood: Option<PenaltyNeighborhood>,
    pub voxel_size: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn apply(&self, c: &mut PipelineConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field {
                    c.$field = v;
                })*
            };
        }
        take!(
            k,
            epsilon_scale,
            tau,
            min_component,
            prune_depth,
            dilate_steps,
            k_vote,
            min_region_fraction,
            max_iterations,
            convergence_eps,
            cutoff_scale,
            icp_points,
            refine_pairs,
            require_facing,
            penalty_neighborhood,
            seed
        );
        if self.voxel_size.is_some() {
            c.voxel_size = self.voxel_size;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigOverrides> {
        ConfigOverrides::from_toml(text, Path::new("cfg.toml"))
    }

    #[test]
    fn presets_differ_only_where_documented() {
        let s = PipelineConfig::preset(Preset::Synthetic);
        let mut r = PipelineConfig::preset(Preset::Scanned);
        assert_eq!(r.min_region_fraction, 0.02);
        assert_eq!(s.min_region_fraction, 0.05);
        r.preset = Preset::Synthetic;
        r.min_region_fraction = s.min_region_fraction;
        r.min_component = s.min_component;
        r.tau = s.tau;
        assert_eq!(r, s);
        s.validate().unwrap();
    }

    #[test]
    fn flags_beat_file_beat_preset() {
        let file = parse("preset = \"scanned\"\ntau = 0.5\nk = 9\n").unwrap();
        let flags = ConfigOverrides {
            tau: Some(0.7),
            ..Default::default()
        };
        let c = PipelineConfig::resolve(Some(&file), &flags).unwrap();
        assert_eq!(c.preset, Preset::Scanned);
        assert_eq!(c.tau, 0.7);
        assert_eq!(c.k, 9);
        assert_eq!(c.min_region_fraction, 0.02);
    }

    #[test]
    fn flag_preset_overrides_file_preset() {
        let file = parse("preset = \"scanned\"").unwrap();
        let flags = ConfigOverrides {
            preset: Some(Preset::Synthetic),
            ..Default::default()
        };
        let c = PipelineConfig::resolve(Some(&file), &flags).unwrap();
        assert_eq!(c, PipelineConfig::default());
    }

    #[test]
    fn file_accepts_every_key() {
        let text = "preset = \"custom\"\nk = 8\nepsilon_scale = 1.5\ntau = 0.8\nmin_component = 4\nprune_depth = 1\n\
                    dilate_steps = 0\nk_vote = 3\nmin_region_fraction = 0.1\nmax_iterations = 20\nconvergence_eps = 1e-6\n\
                    cutoff_scale = 3.0\nicp_points = 0\nrefine_pairs = 1\nrequire_facing = false\npenalty_neighborhood = { knn = 12 }\nvoxel_size = 0.01\nseed = 4\n";
        let c = PipelineConfig::resolve(Some(&parse(text).unwrap()), &ConfigOverrides::default()).unwrap();
        assert_eq!(c.penalty_neighborhood, PenaltyNeighborhood::Knn(12));
        assert_eq!(c.voxel_size, Some(0.01));
        assert_eq!(c.seed, 4);
        assert_eq!(c.icp_params(2.0).correspondence_cutoff, 6.0);
    }

    #[test]
    fn bad_files_and_values_are_rejected() {
        assert!(matches!(parse("taux = 1.0"), Err(Error::Config { .. })));
        assert!(matches!(parse("k = \"many\""), Err(Error::Config { .. })));
        let flags = ConfigOverrides {
            tau: Some(1.5),
            ..Default::default()
        };
        assert!(PipelineConfig::resolve(None, &flags).is_err());
        let flags = ConfigOverrides {
            voxel_size: Some(0.0),
            ..Default::default()
        };
        assert!(PipelineConfig::resolve(None, &flags).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = PipelineConfig::preset(Preset::Scanned);
        let text = toml::to_string(&c).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
