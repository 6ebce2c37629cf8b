//! Layered run settings: defaults, then manifest `config`, then a TOML
//! config file, then command-line flags.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abutment::Adjacency;
use crate::error::{Error, Result};
use crate::metrics::{EvalConfig, LesionParent};
use crate::ranking::RankMode;
use crate::volume::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// Every key is optional; unset keys leave the lower layer untouched.
///
/// ```toml
/// label_map = "3,1,2"
/// min_lesion_voxels = 50
/// hd_penalty = 374.0
/// hd_percentile = 0.95
/// lesion_parent = "region"
/// rank_mode = "aggregate"
/// adjacency = "6"
/// jobs = 4
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub label_map: Option<String>,
    pub min_lesion_voxels: Option<usize>,
    pub hd_penalty: Option<f64>,
    pub dice_penalty: Option<f64>,
    pub hd_percentile: Option<f64>,
    pub lesion_parent: Option<LesionParent>,
    pub roi_restricted: Option<bool>,
    pub exclude_filtered_from_global: Option<bool>,
    pub rank_mode: Option<RankMode>,
    pub adjacency: Option<Adjacency>,
    pub jobs: Option<usize>,
    pub format: Option<OutputFormat>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Ok(toml::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub label_map: LabelMap,
    pub eval: EvalConfig,
    pub rank_mode: RankMode,
    pub adjacency: Adjacency,
    pub jobs: usize,
    pub format: OutputFormat,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            label_map: LabelMap::default(),
            eval: EvalConfig::default(),
            rank_mode: RankMode::default(),
            adjacency: Adjacency::default(),
            jobs: 1,
            format: OutputFormat::default(),
        }
    }
}

impl Settings {
    pub fn apply(&mut self, layer: &ConfigFile) -> Result<()> {
        if let Some(m) = &layer.label_map {
            self.label_map = LabelMap::from_str(m)?;
        }
        if let Some(v) = layer.min_lesion_voxels {
            self.eval.min_lesion_voxels = v;
        }
        if let Some(v) = layer.hd_penalty {
            self.eval.fp_fn_hd_penalty = v;
        }
        if let Some(v) = layer.dice_penalty {
            self.eval.fp_fn_dice_penalty = v;
        }
        if let Some(v) = layer.hd_percentile {
            self.eval.hd_percentile = v;
        }
        if let Some(v) = layer.lesion_parent {
            self.eval.lesion_parent = v;
        }
        if let Some(v) = layer.roi_restricted {
            self.eval.roi_restricted = v;
        }
        if let Some(v) = layer.exclude_filtered_from_global {
            self.eval.exclude_filtered_from_global = v;
        }
        if let Some(v) = layer.rank_mode {
            self.rank_mode = v;
        }
        if let Some(v) = layer.adjacency {
            self.adjacency = v;
        }
        if let Some(v) = layer.jobs {
            self.jobs = v.max(1);
        }
        if let Some(v) = layer.format {
            self.format = v;
        }
        self.eval.validate()
    }
}
