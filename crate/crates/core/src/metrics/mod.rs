//! Overlap and surface-distance scoring.
//!
//! Lesion-wise scores average per-lesion values over `TP + FN + FP`, with
//! missed ground-truth lesions and spurious predicted lesions contributing a
//! fixed penalty each.

mod distance;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lesion::{filter_small_lesions, identify_gt_lesions, lesions_within, LesionField};
use crate::volume::{compose_region, BinaryMask, Geometry, LabelMap, LabelVolume, Region};

pub use distance::{
    directed_surface_distances, hausdorff, hd95, hd_percentile, hd_percentile_sets, percentile,
    surface_voxels,
};

/// How ET/TC lesions are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LesionParent {
    /// Dilate-and-label each region's own mask.
    #[default]
    Region,
    /// Group region voxels by the whole-tumor lesions they fall in.
    Wt,
}

impl std::str::FromStr for LesionParent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "region" => Ok(LesionParent::Region),
            "wt" => Ok(LesionParent::Wt),
            _ => Err(Error::InvalidConfig(format!("lesion parent must be region or wt, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub fp_fn_dice_penalty: f64,
    /// mm
    pub fp_fn_hd_penalty: f64,
    pub min_lesion_voxels: usize,
    pub hd_percentile: f64,
    pub exclude_filtered_from_global: bool,
    pub lesion_parent: LesionParent,
    /// Score each lesion inside the radius-1 dilation of its ground truth only.
    pub roi_restricted: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            fp_fn_dice_penalty: 0.0,
            fp_fn_hd_penalty: 374.0,
            min_lesion_voxels: 50,
            hd_percentile: 0.95,
            exclude_filtered_from_global: true,
            lesion_parent: LesionParent::Region,
            roi_restricted: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fp_fn_dice_penalty) {
            return Err(Error::InvalidConfig(format!(
                "fp_fn_dice_penalty {} outside [0, 1]",
                self.fp_fn_dice_penalty
            )));
        }
        if !(self.fp_fn_hd_penalty >= 0.0) || !self.fp_fn_hd_penalty.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "fp_fn_hd_penalty {} must be >= 0",
                self.fp_fn_hd_penalty
            )));
        }
        if !(self.hd_percentile > 0.0 && self.hd_percentile <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "hd_percentile {} outside (0, 1]",
                self.hd_percentile
            )));
        }
        if self.min_lesion_voxels == 0 {
            return Err(Error::InvalidConfig("min_lesion_voxels must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
}

impl MatchCounts {
    pub fn denominator(&self) -> usize {
        self.tp + self.fn_ + self.fp
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruePositive {
    pub gt_id: u32,
    /// Predicted components overlapping this lesion, ascending.
    pub pred_ids: Vec<u32>,
}

/// Lesion-level matching of one region.
#[derive(Debug, Clone)]
pub struct LesionMatchTable {
    pub tp: Vec<TruePositive>,
    pub fn_ids: Vec<u32>,
    pub fp_ids: Vec<u32>,
    /// Predicted lesions, grouped the same way as the ground truth.
    pub predicted: LesionField,
}

impl LesionMatchTable {
    pub fn counts(&self) -> MatchCounts {
        MatchCounts {
            tp: self.tp.len(),
            fn_: self.fn_ids.len(),
            fp: self.fp_ids.len(),
        }
    }
}

/// `2|A∩B| / (|A|+|B|)`; two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.intersection_count(b)?;
    Ok(dice_from_counts(inter, a.voxel_count(), b.voxel_count()))
}

fn dice_from_counts(inter: usize, a: usize, b: usize) -> f64 {
    if a + b == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (a + b) as f64
    }
}

/// Matches ground-truth lesions against predicted components derived from
/// `pred_mask` by the same dilate-and-label procedure.
pub fn match_lesions(gt: &LesionField, pred_mask: &BinaryMask) -> Result<LesionMatchTable> {
    gt.geometry().ensure_aligned(pred_mask.geometry())?;
    Ok(match_fields(gt, identify_gt_lesions(pred_mask)))
}

/// Matching given already-grouped predicted lesions.
///
/// A ground-truth lesion is a TP when any predicted voxel lies inside it. A
/// predicted component is an FP when it touches no ground-truth voxel of the
/// region, counting lesions removed by the size filter as ground truth.
pub fn match_fields(gt: &LesionField, predicted: LesionField) -> LesionMatchTable {
    assert_eq!(gt.geometry(), predicted.geometry(), "misaligned lesion fields");
    let pred_ids = predicted.ids();
    let mut touched = vec![false; predicted.len() + 1];
    let mut tp = Vec::new();
    let mut fn_ids = Vec::new();
    for (k, voxels) in gt.voxel_lists().into_iter().enumerate() {
        let mut hits: Vec<u32> = voxels
            .iter()
            .map(|&v| pred_ids[v])
            .filter(|&p| p != 0)
            .collect();
        hits.sort_unstable();
        hits.dedup();
        for &p in &hits {
            touched[p as usize] = true;
        }
        let gt_id = k as u32 + 1;
        if hits.is_empty() {
            fn_ids.push(gt_id);
        } else {
            tp.push(TruePositive {
                gt_id,
                pred_ids: hits,
            });
        }
    }
    for removed in gt.removed() {
        for &v in &removed.voxels {
            touched[pred_ids[v] as usize] = true;
        }
    }
    let fp_ids = (1..=predicted.len() as u32)
        .filter(|&p| !touched[p as usize])
        .collect();
    LesionMatchTable {
        tp,
        fn_ids,
        fp_ids,
        predicted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionScore {
    pub gt_lesion_id: u32,
    pub dice: f64,
    pub hd95: f64,
    pub gt_voxels: usize,
    pub pred_voxels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionwiseScores {
    pub dice: f64,
    pub hd95: f64,
    pub per_lesion: Vec<LesionScore>,
    pub counts: MatchCounts,
}

/// Voxels within Chebyshev distance 1 of `voxels`, sorted.
fn dilated_indices(geometry: &Geometry, voxels: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(voxels.len() * 4);
    for &v in voxels {
        let c = geometry.coords(v);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(j) = geometry.offset(c, [dx, dy, dz]) {
                        out.push(j);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Scores a match table: per-lesion Dice and HD for every TP, penalties for
/// every FN and FP, averaged over `TP + FN + FP`.
pub fn score_matches(gt: &LesionField, table: &LesionMatchTable, cfg: &EvalConfig) -> Result<LesionwiseScores> {
    let geometry = gt.geometry();
    let gt_lists = gt.voxel_lists();
    let pred_lists = table.predicted.voxel_lists();
    let pred_ids = table.predicted.ids();

    let mut per_lesion = Vec::with_capacity(gt.len());
    for m in &table.tp {
        let gt_voxels = &gt_lists[m.gt_id as usize - 1];
        let mut pred_voxels: Vec<usize> = m
            .pred_ids
            .iter()
            .flat_map(|&p| pred_lists[p as usize - 1].iter().copied())
            .collect();
        if cfg.roi_restricted {
            let roi = dilated_indices(geometry, gt_voxels);
            pred_voxels.retain(|v| roi.binary_search(v).is_ok());
        }
        let inter = gt_voxels.iter().filter(|&&v| pred_ids[v] != 0).count();
        let dice = dice_from_counts(inter, gt_voxels.len(), pred_voxels.len());
        let hd95 = hd_percentile_sets(geometry, gt_voxels, &pred_voxels, cfg.hd_percentile)?;
        per_lesion.push(LesionScore {
            gt_lesion_id: m.gt_id,
            dice,
            hd95,
            gt_voxels: gt_voxels.len(),
            pred_voxels: pred_voxels.len(),
        });
    }
    for &id in &table.fn_ids {
        per_lesion.push(LesionScore {
            gt_lesion_id: id,
            dice: cfg.fp_fn_dice_penalty,
            hd95: cfg.fp_fn_hd_penalty,
            gt_voxels: gt_lists[id as usize - 1].len(),
            pred_voxels: 0,
        });
    }
    per_lesion.sort_by_key(|s| s.gt_lesion_id);

    let counts = table.counts();
    let (dice, hd95) = if counts.denominator() == 0 {
        (1.0, 0.0)
    } else {
        let denom = counts.denominator() as f64;
        let fp = counts.fp as f64;
        let dice_sum: f64 = per_lesion.iter().map(|s| s.dice).sum::<f64>() + fp * cfg.fp_fn_dice_penalty;
        let hd_sum: f64 = per_lesion.iter().map(|s| s.hd95).sum::<f64>() + fp * cfg.fp_fn_hd_penalty;
        (dice_sum / denom, hd_sum / denom)
    };
    Ok(LesionwiseScores {
        dice,
        hd95,
        per_lesion,
        counts,
    })
}

/// Lesion-wise scores of `pred_mask` against an (already size-filtered)
/// ground-truth lesion field.
pub fn lesionwise_scores(gt: &LesionField, pred_mask: &BinaryMask, cfg: &EvalConfig) -> Result<LesionwiseScores> {
    let table = match_lesions(gt, pred_mask)?;
    score_matches(gt, &table, cfg)
}

pub fn lesionwise_dice(gt: &LesionField, pred_mask: &BinaryMask, cfg: &EvalConfig) -> Result<(f64, Vec<LesionScore>)> {
    let s = lesionwise_scores(gt, pred_mask, cfg)?;
    Ok((s.dice, s.per_lesion))
}

pub fn lesionwise_hd95(gt: &LesionField, pred_mask: &BinaryMask, cfg: &EvalConfig) -> Result<(f64, Vec<LesionScore>)> {
    let s = lesionwise_scores(gt, pred_mask, cfg)?;
    Ok((s.hd95, s.per_lesion))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMetrics {
    pub dice: f64,
    pub hd95: f64,
    /// Undefined (None) when the ground truth is empty but the prediction is not.
    pub sensitivity: Option<f64>,
}

/// Whole-mask Dice, HD and sensitivity.
pub fn global_metrics(gt: &BinaryMask, pred: &BinaryMask, cfg: &EvalConfig) -> Result<GlobalMetrics> {
    let inter = gt.intersection_count(pred)?;
    let gt_n = gt.voxel_count();
    let pred_n = pred.voxel_count();
    let dice = dice_from_counts(inter, gt_n, pred_n);
    let sensitivity = match (gt_n, pred_n) {
        (0, 0) => Some(1.0),
        (0, _) => None,
        _ => Some(inter as f64 / gt_n as f64),
    };
    let hd95 = match (gt_n, pred_n) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => cfg.fp_fn_hd_penalty,
        _ => hd_percentile(gt, pred, cfg.hd_percentile)?,
    };
    Ok(GlobalMetrics {
        dice,
        hd95,
        sensitivity,
    })
}

/// All metrics of one region of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRegionMetrics {
    pub region: Region,
    pub lesionwise_dice: f64,
    pub lesionwise_hd95: f64,
    pub per_lesion: Vec<LesionScore>,
    pub global_dice: f64,
    pub global_hd95: f64,
    pub sensitivity: Option<f64>,
    pub counts: MatchCounts,
    /// Ground-truth lesions retained after the size filter.
    pub gt_lesions: usize,
    pub excluded_lesions: usize,
    /// Ground-truth voxels entering the global metrics.
    pub gt_voxels: usize,
    pub pred_voxels: usize,
    pub gt_volume_mm3: f64,
}

fn region_fields(
    gt_masks: &[BinaryMask; 3],
    pred_masks: &[BinaryMask; 3],
    cfg: &EvalConfig,
) -> Vec<(LesionField, LesionField)> {
    match cfg.lesion_parent {
        LesionParent::Region => gt_masks
            .iter()
            .zip(pred_masks)
            .map(|(g, p)| (identify_gt_lesions(g), identify_gt_lesions(p)))
            .collect(),
        LesionParent::Wt => {
            let gt_wt = identify_gt_lesions(&gt_masks[2]);
            let pred_wt = identify_gt_lesions(&pred_masks[2]);
            gt_masks
                .iter()
                .zip(pred_masks)
                .map(|(g, p)| (lesions_within(&gt_wt, g), lesions_within(&pred_wt, p)))
                .collect()
        }
    }
}

/// Evaluates one prediction against its ground truth for ET, TC and WT.
pub fn evaluate_case(
    gt: &LabelVolume,
    pred: &LabelVolume,
    map: &LabelMap,
    cfg: &EvalConfig,
) -> Result<Vec<CaseRegionMetrics>> {
    cfg.validate()?;
    map.validate()?;
    gt.geometry().ensure_aligned(pred.geometry())?;
    let gt_masks = Region::ALL.map(|r| compose_region(gt, map, r));
    let pred_masks = Region::ALL.map(|r| compose_region(pred, map, r));
    let fields = region_fields(&gt_masks, &pred_masks, cfg);

    let voxel_mm3 = gt.geometry().voxel_volume_mm3();
    let mut out = Vec::with_capacity(3);
    for (k, (gt_field, pred_field)) in fields.into_iter().enumerate() {
        let region = Region::ALL[k];
        let filtered = filter_small_lesions(&gt_field, cfg.min_lesion_voxels);
        let table = match_fields(&filtered, pred_field);
        let scores = score_matches(&filtered, &table, cfg)?;

        let global_gt = if cfg.exclude_filtered_from_global && !filtered.removed().is_empty() {
            gt_masks[k].difference(&filtered.removed_mask())?
        } else {
            gt_masks[k].clone()
        };
        let global = global_metrics(&global_gt, &pred_masks[k], cfg)?;
        let gt_voxels = global_gt.voxel_count();
        out.push(CaseRegionMetrics {
            region,
            lesionwise_dice: scores.dice,
            lesionwise_hd95: scores.hd95,
            per_lesion: scores.per_lesion,
            global_dice: global.dice,
            global_hd95: global.hd95,
            sensitivity: global.sensitivity,
            counts: scores.counts,
            gt_lesions: filtered.len(),
            excluded_lesions: filtered.removed().len(),
            gt_voxels,
            pred_voxels: pred_masks[k].voxel_count(),
            gt_volume_mm3: gt_voxels as f64 * voxel_mm3,
        });
    }
    Ok(out)
}
