//! Experiment configuration (TOML).
//!
//! ```toml
//! version = 1
//! preset = "bolza"
//! l_max = 6.0
//! mesh_level = 4
//! eigen_count = 255
//! residual_threshold = 0.05
//!
//! [representation]
//! character = [[1.3498588075760032, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]
//!
//! [[test_functions]]
//! family = "mollifier"
//! T = 4.0
//! k = 3
//! ```
//!
//! The representation is either inline (same shape as the JSON
//! representation files) or `{ file = "rep.json" }`, resolved relative to
//! the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::TestFunctionSpec;
use crate::error::{Error, Result};
use crate::fuchsian::enumerate::{DEFAULT_ELEMENT_BUDGET, MAX_CUTOFF};
use crate::reps::{Representation, RepresentationSpec};
use crate::spectral::eigen::DEFAULT_DENSE_LIMIT;
use crate::spectral::mesh::MAX_LEVEL;

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RepresentationSource {
    File { file: PathBuf },
    Inline(RepresentationSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default = "default_preset")]
    pub preset: String,
    pub representation: RepresentationSource,
    pub test_functions: Vec<TestFunctionSpec>,
    pub l_max: f64,
    pub mesh_level: u32,
    pub eigen_count: usize,
    #[serde(default)]
    pub shift: [f64; 2],
    #[serde(default = "default_threshold")]
    pub residual_threshold: f64,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    #[serde(default = "default_budget")]
    pub element_budget: usize,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Fail instead of warn when the spectral sum is visibly truncated.
    #[serde(default)]
    pub strict_truncation: bool,
    #[serde(default = "default_weyl_points")]
    pub weyl_points: usize,
    /// Directory the config was read from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_preset() -> String {
    "bolza".to_string()
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_budget() -> usize {
    DEFAULT_ELEMENT_BUDGET
}
fn default_dense_limit() -> usize {
    DEFAULT_DENSE_LIMIT
}
fn default_weyl_points() -> usize {
    12
}

impl ExperimentConfig {
    /// Trivial rank-one twist with the three standard test functions.
    pub fn example() -> ExperimentConfig {
        ExperimentConfig {
            version: CONFIG_VERSION,
            preset: default_preset(),
            representation: RepresentationSource::Inline(RepresentationSpec::Character {
                character: vec![[1.0, 0.0]; 4],
            }),
            test_functions: vec![
                TestFunctionSpec::mollifier(2.0, 8),
                TestFunctionSpec::mollifier(4.0, 3),
                TestFunctionSpec::mollifier(5.5, 2),
            ],
            l_max: 6.0,
            mesh_level: 4,
            eigen_count: 255,
            shift: [0.0, 0.0],
            residual_threshold: DEFAULT_THRESHOLD,
            output_dir: default_out(),
            element_budget: DEFAULT_ELEMENT_BUDGET,
            dense_limit: DEFAULT_DENSE_LIMIT,
            strict_truncation: false,
            weyl_points: 12,
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} unsupported (expected {CONFIG_VERSION})", self.version));
        }
        if !(self.l_max > 0.0 && self.l_max <= MAX_CUTOFF) {
            return Err(Error::CutoffOutOfRange { l_max: self.l_max, max: MAX_CUTOFF });
        }
        if self.mesh_level > MAX_LEVEL {
            return bad(format!("mesh_level {} above {MAX_LEVEL}", self.mesh_level));
        }
        if self.eigen_count == 0 {
            return bad("eigen_count must be positive".to_string());
        }
        if !(self.residual_threshold > 0.0 && self.residual_threshold <= 1.0) {
            return bad(format!("residual_threshold {} outside (0, 1]", self.residual_threshold));
        }
        if self.test_functions.is_empty() {
            return bad("at least one test function is required".to_string());
        }
        if self.element_budget == 0 || self.weyl_points < 2 {
            return bad("element_budget must be positive and weyl_points at least 2".to_string());
        }
        if !(self.shift[0].is_finite() && self.shift[1].is_finite()) {
            return bad("shift must be finite".to_string());
        }
        for f in &self.test_functions {
            f.validate()?;
        }
        Ok(())
    }

    pub fn max_support(&self) -> f64 {
        self.test_functions.iter().map(|f| f.t).fold(0.0, f64::max)
    }

    /// Notes that do not stop a run but qualify its result.
    pub fn advisories(&self) -> Vec<String> {
        let mut out = Vec::new();
        let t = self.max_support();
        if self.l_max < t {
            out.push(format!("l_max = {} below largest support T = {t}: geometric side incomplete", self.l_max));
        }
        out
    }

    pub fn representation_spec(&self) -> Result<RepresentationSpec> {
        match &self.representation {
            RepresentationSource::Inline(s) => Ok(s.clone()),
            RepresentationSource::File { file } => RepresentationSpec::from_json_file(&self.base_dir.join(file)),
        }
    }

    pub fn build_representation(&self) -> Result<Representation> {
        self.representation_spec()?.build()
    }
}
