use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{write_json, MetricsRecord};
use crate::error::{Error, Result};
use crate::metrics::CaseRegionMetrics;
use crate::stats::{
    default_window, distribution_export, log_pearson, pearson, sliding_window_curve, summarize, Correlation,
    DistributionGroup, SummaryStats, QUARTILE_METHOD,
};
use crate::volume::Region;

/// Metrics summarized per (team, region).
const SUMMARY_METRICS: [&str; 5] = ["lesionwise_dice", "lesionwise_hd95", "global_dice", "global_hd95", "sensitivity"];
/// Metrics plotted against tumor volume.
const CURVE_METRICS: [&str; 3] = ["global_dice", "global_hd95", "sensitivity"];

fn pick(m: &CaseRegionMetrics, name: &str) -> Option<f64> {
    match name {
        "lesionwise_dice" => Some(m.lesionwise_dice),
        "lesionwise_hd95" => Some(m.lesionwise_hd95),
        "global_dice" => Some(m.global_dice),
        "global_hd95" => Some(m.global_hd95),
        "sensitivity" => m.sensitivity,
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsOptions {
    pub window: Option<usize>,
    pub single_lesion_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub team: String,
    pub region: Region,
    pub metric: String,
    #[serde(flatten)]
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGroup {
    pub team: String,
    pub region: Region,
    pub metric: String,
    pub window: usize,
    /// (mean whole-tumor volume mm³, mean metric)
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeCorrelation {
    pub team: String,
    pub region: Region,
    /// Lesion-wise Dice vs. whole-tumor volume.
    pub linear: Option<Correlation>,
    /// Lesion-wise Dice vs. log10 whole-tumor volume.
    pub logarithmic: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsMetadata {
    pub quartile_method: String,
    pub std: String,
    pub volume: String,
    pub correlation_subset: String,
    pub curve_subset: String,
    pub error_records_ignored: usize,
    pub skipped_curves: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub metadata: StatsMetadata,
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<CurveGroup>,
    pub correlations: Vec<VolumeCorrelation>,
    pub distributions: Vec<DistributionGroup>,
}

/// Summaries, violin-plot data, volume curves and volume correlations of
/// scored records; error records are counted and left out.
pub fn cohort_stats(records: &[MetricsRecord], opts: &StatsOptions) -> Result<CohortStats> {
    let scored: Vec<(&MetricsRecord, &CaseRegionMetrics)> =
        records.iter().filter_map(|r| r.metrics.as_ref().map(|m| (r, m))).collect();
    if scored.is_empty() {
        return Err(Error::EmptyInput("no scored records"));
    }
    let errors = records.len() - scored.len();

    let wt_volume: BTreeMap<(&str, &str), f64> = scored
        .iter()
        .filter(|(r, _)| r.region == Region::Wt)
        .map(|(r, m)| ((r.team.as_str(), r.case.as_str()), m.gt_volume_mm3))
        .collect();

    // (team, region) -> cases sorted by id
    let mut groups: BTreeMap<(&str, Region), Vec<(&str, &CaseRegionMetrics)>> = BTreeMap::new();
    for (r, m) in &scored {
        groups.entry((r.team.as_str(), r.region)).or_default().push((r.case.as_str(), m));
    }
    for rows in groups.values_mut() {
        rows.sort_by(|a, b| a.0.cmp(b.0));
    }

    let mut summary = Vec::new();
    let mut curves = Vec::new();
    let mut correlations = Vec::new();
    let mut skipped = Vec::new();
    for (&(team, region), rows) in &groups {
        for metric in SUMMARY_METRICS {
            let values: Vec<f64> = rows.iter().filter_map(|(_, m)| pick(m, metric)).collect();
            if let Ok(stats) = summarize(&values) {
                summary.push(SummaryRow {
                    team: team.to_string(),
                    region,
                    metric: metric.to_string(),
                    stats,
                });
            }
        }

        let with_volume: Vec<(f64, &CaseRegionMetrics)> = rows
            .iter()
            .filter_map(|(case, m)| wt_volume.get(&(team, *case)).map(|&v| (v, *m)))
            .collect();
        for metric in CURVE_METRICS {
            let pairs: Vec<(f64, f64)> = with_volume
                .iter()
                .filter(|(_, m)| !opts.single_lesion_only || m.gt_lesions == 1)
                .filter_map(|(v, m)| pick(m, metric).map(|x| (*v, x)))
                .collect();
            let window = opts.window.unwrap_or_else(|| default_window(pairs.len()));
            match sliding_window_curve(&pairs, window) {
                Ok(points) => curves.push(CurveGroup {
                    team: team.to_string(),
                    region,
                    metric: metric.to_string(),
                    window,
                    points,
                }),
                Err(e) => skipped.push(format!("{team}/{region}/{metric}: {e}")),
            }
        }

        let (vols, dice): (Vec<f64>, Vec<f64>) = with_volume.iter().map(|(v, m)| (*v, m.lesionwise_dice)).unzip();
        correlations.push(VolumeCorrelation {
            team: team.to_string(),
            region,
            linear: pearson(&vols, &dice).ok(),
            logarithmic: log_pearson(&vols, &dice).ok(),
        });
    }

    let team_records: Vec<_> = records.iter().filter_map(MetricsRecord::team_case_record).collect();
    Ok(CohortStats {
        metadata: StatsMetadata {
            quartile_method: QUARTILE_METHOD.to_string(),
            std: "sample (n-1); absent for a single value".into(),
            volume: "ground-truth whole-tumor volume of the case, mm3".into(),
            correlation_subset: "all scored cases of the team".into(),
            curve_subset: if opts.single_lesion_only {
                "cases with exactly one ground-truth lesion in the region".into()
            } else {
                "all scored cases".into()
            },
            error_records_ignored: errors,
            skipped_curves: skipped,
        },
        summary,
        curves,
        correlations,
        distributions: distribution_export(&team_records),
    })
}

impl CohortStats {
    pub fn save(&self, dir: &Path, csv: bool, json: bool) -> Result<()> {
        if csv {
            let path = dir.join("summary.csv");
            let file = File::create(&path).map_err(|e| Error::file(&path, e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(["team", "region", "metric", "n", "mean", "std", "median", "q1", "q3", "min", "max"])?;
            for row in &self.summary {
                let s = row.stats;
                w.write_record([
                    row.team.clone(),
                    row.region.to_string(),
                    row.metric.clone(),
                    s.n.to_string(),
                    s.mean.to_string(),
                    s.std.map(|v| v.to_string()).unwrap_or_default(),
                    s.median.to_string(),
                    s.q1.to_string(),
                    s.q3.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::file(&path, e))?;
        }
        if json {
            write_json(&dir.join("stats.json"), self)?;
        }
        write_json(&dir.join("distributions.json"), &self.distributions)
    }
}
