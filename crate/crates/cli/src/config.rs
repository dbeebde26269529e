//! Experiment configuration.
//!
//! Configs are flat `key = value` files (a TOML subset). Every key is
//! optional; omitted keys take the defaults of [`ExperimentConfig::default`].
//!
//! ```text
//! name = "table1_tg"
//! mesh = "icosahedron"          # octahedron | icosahedron | file
//! mesh_file = "coarse.off"      # only with mesh = "file"
//! coarse_refinements = 2        # refinements applied before level 0
//! levels = 5
//! pipeline = "cascade_tg"       # direct | tg | cascade_tg | bmg | bfmg
//! smoother = "kaczmarz"         # direct | gauss_seidel | kaczmarz
//! sweeps = 5                    # default 5 for kaczmarz, 1 for gauss_seidel
//! count = 16
//! shift = 0.0
//! shift_policy = "fixed"        # fixed | averaged
//! enrichment = "window"         # window | largest | near_shift
//! enrichment_preset = "window20"  # window20 | largest17 | largest15 | window6
//! enrichment_dim = 16
//! target_index = 16             # 1-based, last index of a window
//! near_shift_tol = 4.0          # default: derived from the coarse clusters
//! coarse_block = "galerkin"     # galerkin | assembled
//! targets = [2.0, 6.0, 12.0]
//! rel_tol = 0.15
//! exclude_coarsest = true
//! estimator = true
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use surfeig::eigensolver::{CoarseBlock, EnrichmentPolicy, ShiftPolicy, SourceSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFamily {
    Octahedron,
    Icosahedron,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Direct,
    Tg,
    CascadeTg,
    Bmg,
    Bfmg,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Direct => "direct",
            Pipeline::Tg => "tg",
            Pipeline::CascadeTg => "cascade_tg",
            Pipeline::Bmg => "bmg",
            Pipeline::Bfmg => "bfmg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoother {
    Direct,
    GaussSeidel,
    Kaczmarz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftPolicyName {
    Fixed,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichmentKind {
    Window,
    Largest,
    NearShift,
}

/// Enrichment settings used in the reference experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichmentPreset {
    /// Fixed window of 20 indices ending at the target.
    Window20,
    /// The 17 largest coarse pairs, reselected after each cycle.
    Largest17,
    /// The 15 largest coarse pairs, reselected after each cycle.
    Largest15,
    /// Fixed window of 6 indices ending at the target.
    Window6,
}

impl EnrichmentPreset {
    pub fn kind_and_dim(self) -> (EnrichmentKind, usize) {
        match self {
            EnrichmentPreset::Window20 => (EnrichmentKind::Window, 20),
            EnrichmentPreset::Largest17 => (EnrichmentKind::Largest, 17),
            EnrichmentPreset::Largest15 => (EnrichmentKind::Largest, 15),
            EnrichmentPreset::Window6 => (EnrichmentKind::Window, 6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseBlockName {
    Galerkin,
    Assembled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mesh: MeshFamily,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
    pub coarse_refinements: usize,
    pub levels: usize,
    pub pipeline: Pipeline,
    pub smoother: Smoother,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    pub count: usize,
    pub shift: f64,
    pub shift_policy: ShiftPolicyName,
    pub enrichment: EnrichmentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enrichment_preset: Option<EnrichmentPreset>,
    pub enrichment_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_shift_tol: Option<f64>,
    pub coarse_block: CoarseBlockName,
    pub targets: Vec<f64>,
    pub rel_tol: f64,
    pub exclude_coarsest: bool,
    pub estimator: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            mesh: MeshFamily::Octahedron,
            mesh_file: None,
            coarse_refinements: 2,
            levels: 4,
            pipeline: Pipeline::Bfmg,
            smoother: Smoother::Direct,
            sweeps: None,
            count: 16,
            shift: 0.0,
            shift_policy: ShiftPolicyName::Fixed,
            enrichment: EnrichmentKind::Window,
            enrichment_preset: None,
            enrichment_dim: 16,
            target_index: None,
            near_shift_tol: None,
            coarse_block: CoarseBlockName::Galerkin,
            targets: vec![2.0, 6.0, 12.0],
            rel_tol: surfeig::validation::DEFAULT_REL_TOL,
            exclude_coarsest: true,
            estimator: true,
            seed: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a flat-key config, or the `config` echo of a JSON report.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |msg: String| ConfigError::Parse { path: path.to_path_buf(), msg };
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
            let c = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(c).map_err(|e| parse_err(e.to_string()))?
        } else {
            Self::parse(&text).map_err(parse_err)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.levels == 0 {
            return bad("levels must be at least 1");
        }
        if self.count == 0 {
            return bad("count must be positive");
        }
        if self.mesh == MeshFamily::File && self.mesh_file.is_none() {
            return bad("mesh = \"file\" requires mesh_file");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 0.5) {
            return bad("rel_tol must lie in (0, 0.5)");
        }
        if !self.shift.is_finite() {
            return bad("shift must be finite");
        }
        if let Some(t) = self.target_index {
            if t == 0 || t > self.count {
                return bad("target_index must lie in 1..=count");
            }
        }
        if let Some(tol) = self.near_shift_tol {
            if !(tol > 0.0) {
                return bad("near_shift_tol must be positive");
            }
        }
        if self.enrichment_dim() == 0 && matches!(self.pipeline, Pipeline::Bmg | Pipeline::Bfmg) {
            return bad("enrichment_dim must be positive");
        }
        if self.targets.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return bad("targets must be non-negative");
        }
        Ok(())
    }

    pub fn source_solver(&self) -> SourceSolver {
        match self.smoother {
            Smoother::Direct => SourceSolver::Direct,
            Smoother::GaussSeidel => SourceSolver::GaussSeidel { sweeps: self.sweeps.unwrap_or(1) },
            Smoother::Kaczmarz => SourceSolver::Kaczmarz { sweeps: self.sweeps.unwrap_or(5) },
        }
    }

    pub fn shift_policy(&self) -> ShiftPolicy {
        match self.shift_policy {
            ShiftPolicyName::Fixed => ShiftPolicy::Fixed,
            ShiftPolicyName::Averaged => ShiftPolicy::Averaged,
        }
    }

    pub fn coarse_block(&self) -> CoarseBlock {
        match self.coarse_block {
            CoarseBlockName::Galerkin => CoarseBlock::Galerkin,
            CoarseBlockName::Assembled => CoarseBlock::Assembled,
        }
    }

    fn enrichment_kind(&self) -> EnrichmentKind {
        self.enrichment_preset.map_or(self.enrichment, |p| p.kind_and_dim().0)
    }

    pub fn enrichment_dim(&self) -> usize {
        self.enrichment_preset.map_or(self.enrichment_dim, |p| p.kind_and_dim().1)
    }

    pub fn enrichment_policy(&self) -> EnrichmentPolicy {
        let dim = self.enrichment_dim();
        match self.enrichment_kind() {
            EnrichmentKind::Window => EnrichmentPolicy::Window {
                target: self.target_index.unwrap_or(self.count) - 1,
                size: dim,
            },
            EnrichmentKind::Largest => EnrichmentPolicy::Largest { k: dim },
            EnrichmentKind::NearShift => EnrichmentPolicy::NearShift { tol: self.near_shift_tol, cap: dim },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(ExperimentConfig::parse("levelz = 3").is_err());
    }

    #[test]
    fn presets_override_kind() {
        let c = ExperimentConfig::parse("enrichment_preset = \"largest17\"\ncount = 49").unwrap();
        assert_eq!(c.enrichment_policy(), EnrichmentPolicy::Largest { k: 17 });
        let c = ExperimentConfig::parse("enrichment_preset = \"window20\"\ncount = 36").unwrap();
        assert_eq!(c.enrichment_policy(), EnrichmentPolicy::Window { target: 35, size: 20 });
    }

    #[test]
    fn smoother_defaults() {
        let c = ExperimentConfig::parse("smoother = \"kaczmarz\"").unwrap();
        assert_eq!(c.source_solver(), SourceSolver::Kaczmarz { sweeps: 5 });
        let c = ExperimentConfig::parse("smoother = \"gauss_seidel\"").unwrap();
        assert_eq!(c.source_solver(), SourceSolver::GaussSeidel { sweeps: 1 });
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig {
            target_index: Some(12),
            near_shift_tol: Some(3.5),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn validation() {
        for bad in ["levels = 0", "count = 0", "mesh = \"file\"", "rel_tol = 0.7", "target_index = 40"] {
            let c = ExperimentConfig::parse(bad).unwrap();
            assert!(c.validate().is_err(), "{bad}");
        }
    }
}
