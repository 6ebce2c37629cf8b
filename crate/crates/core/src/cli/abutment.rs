use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Settings;
use super::evaluate::thread_pool;
use super::manifest::{CohortManifest, ManifestCase};
use super::report::write_json;
use super::Status;
use crate::abutment::{
    cohort_abutment_summary, correlate_abutment_volume, count_abutting, AbutmentCorrelation, AbutmentReport,
    AbutmentSummary, Adjacency,
};
use crate::error::{Error, Result};
use crate::volume::{derive_brain_mask_union, load_intensity, load_labels, BinaryMask, LabelMap};

/// Which intensity channel defines the brain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelChoice {
    Named(String),
    Union,
    /// The case's only channel.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbutmentOutcome {
    Report(AbutmentReport),
    Error { case: String, error: String },
    Skipped { case: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbutmentMetadata {
    pub adjacency: Adjacency,
    pub channel: ChannelChoice,
    pub label_map: LabelMap,
    pub brain_mask: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbutmentRun {
    pub metadata: AbutmentMetadata,
    pub cases: Vec<AbutmentOutcome>,
    pub summary: Option<AbutmentSummary>,
    pub correlation: Option<AbutmentCorrelation>,
}

impl AbutmentRun {
    pub fn reports(&self) -> impl Iterator<Item = &AbutmentReport> {
        self.cases.iter().filter_map(|c| match c {
            AbutmentOutcome::Report(r) => Some(r),
            _ => None,
        })
    }

    pub fn status(&self, skip_missing: bool) -> Status {
        let errors = self.cases.iter().any(|c| matches!(c, AbutmentOutcome::Error { .. }));
        let skipped = self.cases.iter().any(|c| matches!(c, AbutmentOutcome::Skipped { .. }));
        if errors {
            Status::InputErrors
        } else if skip_missing && skipped {
            Status::Partial
        } else {
            Status::Success
        }
    }

    pub fn save(&self, dir: &Path, csv: bool, json: bool) -> Result<()> {
        if csv {
            let path = dir.join("abutment.csv");
            let file = File::create(&path).map_err(|e| Error::file(&path, e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record([
                "case",
                "abutting_voxels",
                "wt_voxels",
                "wt_volume_mm3",
                "abutting_enhancing",
                "abutting_nonenhancing",
                "abutting_snfh",
                "error",
            ])?;
            for c in &self.cases {
                match c {
                    AbutmentOutcome::Report(r) => {
                        let b = r.abutting_by_compartment;
                        w.write_record([
                            r.case.clone(),
                            r.abutting_voxels.to_string(),
                            r.wt_voxels.to_string(),
                            r.wt_volume_mm3.to_string(),
                            b.enhancing.to_string(),
                            b.nonenhancing.to_string(),
                            b.snfh.to_string(),
                            String::new(),
                        ])?;
                    }
                    AbutmentOutcome::Error { case, error: msg } | AbutmentOutcome::Skipped { case, reason: msg } => {
                        w.write_record([case.as_str(), "", "", "", "", "", "", msg.as_str()])?;
                    }
                }
            }
            w.flush().map_err(|e| Error::file(&path, e))?;
        }
        if json {
            write_json(&dir.join("abutment.json"), self)?;
        }
        Ok(())
    }
}

enum ChannelError {
    Missing(String),
    Failed(Error),
}

fn brain_mask(case: &ManifestCase, choice: &ChannelChoice) -> std::result::Result<BinaryMask, ChannelError> {
    let paths: Vec<&Path> = match choice {
        ChannelChoice::Named(name) => match case.intensity.get(name) {
            Some(p) => vec![p.as_path()],
            None => return Err(ChannelError::Missing(format!("no `{name}` channel listed"))),
        },
        ChannelChoice::Union => case.intensity.values().map(|p| p.as_path()).collect(),
        ChannelChoice::Single => match case.intensity.len() {
            1 => case.intensity.values().map(|p| p.as_path()).collect(),
            0 => vec![],
            n => {
                return Err(ChannelError::Failed(Error::Manifest(format!(
                    "{n} channels listed; choose one with --channel or use --channel-union"
                ))))
            }
        },
    };
    if paths.is_empty() {
        return Err(ChannelError::Missing("no intensity channel listed".into()));
    }
    if let Some(p) = paths.iter().find(|p| !p.exists()) {
        return Err(ChannelError::Missing(format!("{} does not exist", p.display())));
    }
    let volumes = paths
        .iter()
        .map(load_intensity)
        .collect::<Result<Vec<_>>>()
        .map_err(ChannelError::Failed)?;
    derive_brain_mask_union(&volumes).map_err(ChannelError::Failed)
}

fn abutment_one(case: &ManifestCase, settings: &Settings, choice: &ChannelChoice, skip_missing: bool) -> AbutmentOutcome {
    let error = |e: String| {
        log::error!("case {}: {e}", case.id);
        AbutmentOutcome::Error {
            case: case.id.clone(),
            error: e,
        }
    };
    let brain = match brain_mask(case, choice) {
        Ok(b) => b,
        Err(ChannelError::Missing(reason)) if skip_missing => {
            log::warn!("case {}: skipped, {reason}", case.id);
            return AbutmentOutcome::Skipped {
                case: case.id.clone(),
                reason,
            };
        }
        Err(ChannelError::Missing(reason)) => return error(reason),
        Err(ChannelError::Failed(e)) => return error(e.to_string()),
    };
    let result = load_labels(&case.gt)
        .and_then(|gt| count_abutting(&case.id, &gt, &brain, &settings.label_map, settings.adjacency));
    match result {
        Ok(r) => AbutmentOutcome::Report(r),
        Err(e) => error(e.to_string()),
    }
}

/// Counts abutting voxels of every case's ground truth, then summarizes and
/// correlates against whole-tumor size over the cases that succeeded.
pub fn abutment_cohort(
    manifest: &CohortManifest,
    settings: &Settings,
    choice: &ChannelChoice,
    skip_missing: bool,
) -> Result<AbutmentRun> {
    manifest.validate()?;
    let pool = thread_pool(settings.jobs)?;
    let cases: Vec<AbutmentOutcome> = pool.install(|| {
        manifest
            .cases
            .par_iter()
            .map(|c| abutment_one(c, settings, choice, skip_missing))
            .collect()
    });
    let reports: Vec<AbutmentReport> = cases
        .iter()
        .filter_map(|c| match c {
            AbutmentOutcome::Report(r) => Some(r.clone()),
            _ => None,
        })
        .collect();
    let summary = cohort_abutment_summary(&reports).ok();
    let correlation = match correlate_abutment_volume(&reports) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("no abutment/volume correlation: {e}");
            None
        }
    };
    Ok(AbutmentRun {
        metadata: AbutmentMetadata {
            adjacency: settings.adjacency,
            channel: choice.clone(),
            label_map: settings.label_map,
            brain_mask: "nonzero voxels of the chosen skull-stripped channel(s); voxels outside the grid count as outside"
                .into(),
        },
        cases,
        summary,
        correlation,
    })
}
