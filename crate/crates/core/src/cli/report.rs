//! Report files.
//!
//! Metrics CSV is long-format, one row per (team, case, region, metric):
//!
//! ```text
//! team,case,region,metric,value,tp,fn,fp
//! ```
//!
//! The JSON mirror holds one object per (team, case, region) with the
//! per-lesion detail. Both carry full precision; leaderboards are rounded to
//! four decimals.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CaseRegionMetrics, MatchCounts};
use crate::ranking::{RankMode, RankingTable, TeamCaseRecord, COLUMNS};
use crate::volume::Region;

pub const METRICS_HEADER: [&str; 8] = ["team", "case", "region", "metric", "value", "tp", "fn", "fp"];

/// Scalar metric names in CSV row order.
pub const METRIC_NAMES: [&str; 10] = [
    "lesionwise_dice",
    "lesionwise_hd95",
    "global_dice",
    "global_hd95",
    "sensitivity",
    "gt_lesions",
    "excluded_lesions",
    "gt_voxels",
    "pred_voxels",
    "gt_volume_mm3",
];

/// Outcome of one (team, case, region).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub team: String,
    pub case: String,
    pub region: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<CaseRegionMetrics>,
}

impl MetricsRecord {
    pub fn scored(team: &str, case: &str, metrics: CaseRegionMetrics) -> Self {
        Self {
            team: team.to_string(),
            case: case.to_string(),
            region: metrics.region,
            error: None,
            metrics: Some(metrics),
        }
    }

    pub fn failed(team: &str, case: &str, region: Region, error: impl Into<String>) -> Self {
        Self {
            team: team.to_string(),
            case: case.to_string(),
            region,
            error: Some(error.into()),
            metrics: None,
        }
    }

    pub fn team_case_record(&self) -> Option<TeamCaseRecord> {
        self.metrics.as_ref().map(|m| TeamCaseRecord {
            team: self.team.clone(),
            case: self.case.clone(),
            region: self.region,
            lesionwise_dice: m.lesionwise_dice,
            lesionwise_hd95: m.lesionwise_hd95,
        })
    }
}

fn metric_value(m: &CaseRegionMetrics, name: &str) -> Option<f64> {
    Some(match name {
        "lesionwise_dice" => m.lesionwise_dice,
        "lesionwise_hd95" => m.lesionwise_hd95,
        "global_dice" => m.global_dice,
        "global_hd95" => m.global_hd95,
        "sensitivity" => return m.sensitivity,
        "gt_lesions" => m.gt_lesions as f64,
        "excluded_lesions" => m.excluded_lesions as f64,
        "gt_voxels" => m.gt_voxels as f64,
        "pred_voxels" => m.pred_voxels as f64,
        "gt_volume_mm3" => m.gt_volume_mm3,
        _ => unreachable!("unknown metric {name}"),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::file(path, e))?))
}

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        let head = [r.team.as_str(), r.case.as_str(), r.region.as_str()];
        match &r.metrics {
            None => {
                w.write_record(head.iter().copied().chain(["error", "", "", "", ""]))?;
            }
            Some(m) => {
                let c = m.counts;
                let counts = [c.tp.to_string(), c.fn_.to_string(), c.fp.to_string()];
                for name in METRIC_NAMES {
                    let value = metric_value(m, name).map(|v| v.to_string()).unwrap_or_default();
                    w.write_record(
                        head.iter()
                            .copied()
                            .chain([name, value.as_str()])
                            .chain(counts.iter().map(String::as_str)),
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics_json<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, records)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn save_metrics(records: &[MetricsRecord], dir: &Path, csv: bool, json: bool) -> Result<()> {
    if csv {
        let path = dir.join("metrics.csv");
        write_metrics_csv(records, create(&path)?).map_err(|e| relabel(e, &path))?;
    }
    if json {
        let path = dir.join("metrics.json");
        write_metrics_json(records, create(&path)?).map_err(|e| relabel(e, &path))?;
    }
    Ok(())
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io(source) => Error::file(path, source),
        other => other,
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    team: String,
    case: String,
    region: String,
    metric: String,
    value: String,
    tp: String,
    #[serde(rename = "fn")]
    fn_: String,
    fp: String,
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad {what} value `{s}` in metrics CSV")))
}

/// Rebuilds records from the long CSV. Per-lesion detail is not part of the
/// CSV and comes back empty.
pub fn read_metrics_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(METRICS_HEADER) {
        return Err(Error::Format(format!("unexpected metrics CSV header: {headers:?}")));
    }
    let mut out: Vec<MetricsRecord> = Vec::new();
    let mut pending: Option<(MetricsRecord, CaseRegionMetrics, usize)> = None;
    for row in reader.deserialize() {
        let row: CsvRow = row?;
        let region = Region::from_str(&row.region)?;
        if row.metric == "error" {
            if pending.is_some() {
                return Err(Error::Format("error row inside a metric block".into()));
            }
            out.push(MetricsRecord::failed(&row.team, &row.case, region, "error"));
            continue;
        }
        let slot = METRIC_NAMES
            .iter()
            .position(|&n| n == row.metric)
            .ok_or_else(|| Error::Format(format!("unknown metric `{}`", row.metric)))?;
        if slot == 0 {
            if pending.is_some() {
                return Err(Error::Format("incomplete metric block".into()));
            }
            let blank = CaseRegionMetrics {
                region,
                lesionwise_dice: 0.0,
                lesionwise_hd95: 0.0,
                per_lesion: Vec::new(),
                global_dice: 0.0,
                global_hd95: 0.0,
                sensitivity: None,
                counts: MatchCounts {
                    tp: parse_num(&row.tp, "tp")?,
                    fn_: parse_num(&row.fn_, "fn")?,
                    fp: parse_num(&row.fp, "fp")?,
                },
                gt_lesions: 0,
                excluded_lesions: 0,
                gt_voxels: 0,
                pred_voxels: 0,
                gt_volume_mm3: 0.0,
            };
            let rec = MetricsRecord::failed(&row.team, &row.case, region, "");
            pending = Some((rec, blank, 0));
        }
        let Some((rec, m, expected)) = pending.as_mut() else {
            return Err(Error::Format(format!("metric block must start with {}", METRIC_NAMES[0])));
        };
        if slot != *expected || rec.team != row.team || rec.case != row.case || rec.region != region {
            return Err(Error::Format(format!(
                "metric rows out of order at {}/{}/{}",
                row.team, row.case, row.region
            )));
        }
        let v = row.value.as_str();
        match METRIC_NAMES[slot] {
            "lesionwise_dice" => m.lesionwise_dice = parse_num(v, "lesionwise_dice")?,
            "lesionwise_hd95" => m.lesionwise_hd95 = parse_num(v, "lesionwise_hd95")?,
            "global_dice" => m.global_dice = parse_num(v, "global_dice")?,
            "global_hd95" => m.global_hd95 = parse_num(v, "global_hd95")?,
            "sensitivity" => m.sensitivity = if v.is_empty() { None } else { Some(parse_num(v, "sensitivity")?) },
            "gt_lesions" => m.gt_lesions = parse_num::<f64>(v, "gt_lesions")? as usize,
            "excluded_lesions" => m.excluded_lesions = parse_num::<f64>(v, "excluded_lesions")? as usize,
            "gt_voxels" => m.gt_voxels = parse_num::<f64>(v, "gt_voxels")? as usize,
            "pred_voxels" => m.pred_voxels = parse_num::<f64>(v, "pred_voxels")? as usize,
            "gt_volume_mm3" => m.gt_volume_mm3 = parse_num(v, "gt_volume_mm3")?,
            _ => unreachable!(),
        }
        *expected += 1;
        if *expected == METRIC_NAMES.len() {
            let (mut rec, m, _) = pending.take().expect("block in progress");
            rec.error = None;
            rec.metrics = Some(m);
            out.push(rec);
        }
    }
    if pending.is_some() {
        return Err(Error::Format("truncated metric block at end of CSV".into()));
    }
    Ok(out)
}

/// Reads a metrics file written by `evaluate`, CSV or JSON by extension.
pub fn load_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let reader = std::io::BufReader::new(file);
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(serde_json::from_reader(reader)?),
        Some("csv") => read_metrics_csv(reader),
        _ => Err(Error::Format(format!("{}: expected a .csv or .json metrics file", path.display()))),
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// One leaderboard line, rounded for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub position: usize,
    pub team: String,
    pub tied: bool,
    /// Per-team means, in column order.
    pub aggregates: [f64; 6],
    pub ranks: [f64; 6],
    pub segmentation_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub mode: RankMode,
    pub columns: Vec<String>,
    pub rows: Vec<LeaderboardRow>,
}

impl Leaderboard {
    pub fn from_table(table: &RankingTable) -> Self {
        let rows = table
            .final_order
            .iter()
            .map(|entry| {
                let row = table.row(&entry.team).expect("ranked team has a row");
                LeaderboardRow {
                    position: entry.position,
                    team: entry.team.clone(),
                    tied: entry.tied,
                    aggregates: row.aggregates.map(round4),
                    ranks: row.ranks.map(round4),
                    segmentation_score: round4(row.segmentation_score),
                }
            })
            .collect();
        Self {
            mode: table.mode,
            columns: column_names(),
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["position".to_string(), "team".to_string()];
        header.extend(self.columns.iter().cloned());
        header.extend(self.columns.iter().map(|c| format!("rank_{c}")));
        header.extend(["segmentation_score".to_string(), "tied".to_string()]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.position.to_string(), r.team.clone()];
            rec.extend(r.aggregates.iter().chain(&r.ranks).map(|v| format!("{v:.4}")));
            rec.push(format!("{:.4}", r.segmentation_score));
            rec.push(r.tied.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: &Path, csv: bool, json: bool) -> Result<()> {
        if csv {
            let path = dir.join("leaderboard.csv");
            self.write_csv(create(&path)?).map_err(|e| relabel(e, &path))?;
        }
        if json {
            write_json(&dir.join("leaderboard.json"), self)?;
        }
        Ok(())
    }
}

/// `dsc_et`, ..., `hd95_wt`.
pub fn column_names() -> Vec<String> {
    COLUMNS
        .iter()
        .map(|(m, r)| format!("{}_{}", m.as_str(), r.as_str()).to_lowercase())
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::file(path, e))
}
