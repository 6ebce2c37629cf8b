//! Tumor voxels touching the edge of the skull-stripped brain.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{log_pearson, pearson, Correlation};
use crate::volume::{BinaryMask, LabelMap, LabelVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Adjacency {
    /// Face neighbors only.
    #[default]
    #[serde(rename = "6")]
    Face6,
    /// Face, edge and corner neighbors.
    #[serde(rename = "26")]
    Full26,
}

impl Adjacency {
    fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Adjacency::Face6 => manhattan == 1,
                        Adjacency::Full26 => manhattan > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

impl FromStr for Adjacency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "6" => Ok(Adjacency::Face6),
            "26" => Ok(Adjacency::Full26),
            _ => Err(Error::InvalidConfig(format!("adjacency must be 6 or 26, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CompartmentCounts {
    pub enhancing: usize,
    pub nonenhancing: usize,
    pub snfh: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbutmentReport {
    pub case: String,
    pub abutting_voxels: usize,
    pub wt_voxels: usize,
    pub wt_volume_mm3: f64,
    pub abutting_by_compartment: CompartmentCounts,
}

/// Counts tumor voxels with a neighbor outside the brain mask or the grid.
pub fn count_abutting(
    case: &str,
    tumor: &LabelVolume,
    brain: &BinaryMask,
    map: &LabelMap,
    adjacency: Adjacency,
) -> Result<AbutmentReport> {
    let g = tumor.geometry();
    g.ensure_aligned(brain.geometry())?;
    let offsets = adjacency.offsets();
    let inside = brain.bits();
    let mut by = CompartmentCounts::default();
    let mut wt_voxels = 0;
    for (i, &code) in tumor.labels().iter().enumerate() {
        let slot = if code == 0 {
            continue;
        } else if code == map.enhancing {
            &mut by.enhancing
        } else if code == map.nonenhancing {
            &mut by.nonenhancing
        } else if code == map.snfh {
            &mut by.snfh
        } else {
            continue;
        };
        wt_voxels += 1;
        let c = g.coords(i);
        if offsets.iter().any(|&off| g.offset(c, off).map_or(true, |j| !inside[j])) {
            *slot += 1;
        }
    }
    Ok(AbutmentReport {
        case: case.to_string(),
        abutting_voxels: by.enhancing + by.nonenhancing + by.snfh,
        wt_voxels,
        wt_volume_mm3: wt_voxels as f64 * g.voxel_volume_mm3(),
        abutting_by_compartment: by,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbutmentSummary {
    pub total_cases: usize,
    pub cases_with_abutment: usize,
    pub fraction: f64,
    /// Over abutting cases only.
    pub mean_abutting: Option<f64>,
    pub median_abutting: Option<f64>,
}

pub fn cohort_abutment_summary(reports: &[AbutmentReport]) -> Result<AbutmentSummary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no abutment reports"));
    }
    let mut counts: Vec<f64> = reports
        .iter()
        .filter(|r| r.abutting_voxels > 0)
        .map(|r| r.abutting_voxels as f64)
        .collect();
    let k = counts.len();
    let (mean, median) = if k == 0 {
        (None, None)
    } else {
        let mean = counts.iter().sum::<f64>() / k as f64;
        (Some(mean), Some(crate::metrics::percentile(&mut counts, 0.5)))
    };
    Ok(AbutmentSummary {
        total_cases: reports.len(),
        cases_with_abutment: k,
        fraction: k as f64 / reports.len() as f64,
        mean_abutting: mean,
        median_abutting: median,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbutmentCorrelation {
    /// Abutting voxels vs. WT voxels.
    pub linear: Correlation,
    /// Abutting voxels vs. log10(WT voxels); absent when it cannot be formed.
    pub log_volume: Option<Correlation>,
}

pub fn correlate_abutment_volume(reports: &[AbutmentReport]) -> Result<AbutmentCorrelation> {
    let abut: Vec<f64> = reports.iter().map(|r| r.abutting_voxels as f64).collect();
    let wt: Vec<f64> = reports.iter().map(|r| r.wt_voxels as f64).collect();
    let linear = pearson(&abut, &wt)?;
    let log_volume = log_pearson(&wt, &abut).ok();
    Ok(AbutmentCorrelation { linear, log_volume })
}
