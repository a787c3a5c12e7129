//! On-disk run configuration.
//!
//! ```toml
//! [model]
//! spatial_dims = 2
//! num_classes = 2
//! epochs = 30
//! # ...
//!
//! [data]
//! dataset = "toy-data"        # PCLD directory written by gen-toy
//! # modelnet10 = "ModelNet10" # or a raw OFF tree
//! # points = 1000
//!
//! [output]
//! dir = "runs/toy"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use genconv::train::ModelConfig;
use genconv::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modelnet10: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn toy() -> Self {
        RunConfig { model: ModelConfig::toy(), data: DataSection::default(), output: OutputSection::default() }
    }

    pub fn modelnet10() -> Self {
        RunConfig {
            model: ModelConfig::modelnet_reference(),
            data: DataSection { dataset: None, modelnet10: Some("ModelNet10".into()), points: None },
            output: OutputSection { dir: Some("runs/modelnet10".into()) },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config { layer: None, message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        rebase(&mut cfg.data.dataset);
        rebase(&mut cfg.data.modelnet10);
        rebase(&mut cfg.output.dir);
        Ok(cfg)
    }
}
