//! Pipeline configuration file.
//!
//! TOML with one table per module; every key is optional and falls back to
//! the published defaults:
//!
//! ```toml
//! num_rings = 64
//! rng_seed = 0
//!
//! [ground]
//! n_seg = 3
//! th_dist = 0.3
//!
//! [refine.size_priors.car]
//! min = { x = 1.5, y = 0.0, z = 1.0 }
//! max = { x = 6.0, y = 2.5, z = 2.5 }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterParams;
use crate::error::{Error, Result};
use crate::ground::GroundParams;
use crate::pipeline::{Stage1Params, DEFAULT_NUM_RINGS};
use crate::prep::SamplePrepParams;
use crate::refine::RefineParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub num_rings: usize,
    pub rng_seed: u64,
    /// Worker pool width; 0 means one per core.
    pub jobs: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub ground: GroundParams,
    pub cluster: ClusterParams,
    pub refine: RefineParams,
    pub prep: SamplePrepParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            num_rings: DEFAULT_NUM_RINGS,
            rng_seed: 0,
            jobs: 1,
            input: None,
            output: None,
            ground: GroundParams::default(),
            cluster: ClusterParams::default(),
            refine: RefineParams::default(),
            prep: SamplePrepParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<syntax>", e.message()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(&key, e.into_inner().message())
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn stage1(&self) -> Stage1Params {
        Stage1Params {
            num_rings: self.num_rings,
            ground: self.ground,
            cluster: self.cluster,
            refine: self.refine,
        }
    }

    pub fn prep_params(&self) -> SamplePrepParams {
        SamplePrepParams {
            rng_seed: self.rng_seed,
            ..self.prep
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stage1().validate()?;
        self.prep.validate()
    }
}
