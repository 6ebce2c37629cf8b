//! Cohort summaries, plot-ready exports and correlation tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::metrics::percentile;
use crate::ranking::{Metric, TeamCaseRecord};
use crate::volume::Region;

/// Quartile method recorded in report metadata.
pub const QUARTILE_METHOD: &str = "linear interpolation between closest ranks (inclusive)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single value.
    pub std: Option<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no values to summarize"));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = (n >= 2).then(|| {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(SummaryStats {
        n,
        mean,
        std,
        median: percentile(&mut sorted, 0.5),
        q1: percentile(&mut sorted, 0.25),
        q3: percentile(&mut sorted, 0.75),
        min: sorted[0],
        max: sorted[n - 1],
    })
}

/// Raw per-case values of one (team, region, metric) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionGroup {
    pub team: String,
    pub region: Region,
    pub metric: Metric,
    pub cases: Vec<String>,
    pub values: Vec<f64>,
}

/// Groups lesion-wise scores by (team, region, metric), values ordered by case id.
pub fn distribution_export(records: &[TeamCaseRecord]) -> Vec<DistributionGroup> {
    let mut groups: BTreeMap<(&str, Region, Metric), Vec<(&str, f64)>> = BTreeMap::new();
    for r in records {
        for metric in Metric::ALL {
            groups
                .entry((r.team.as_str(), r.region, metric))
                .or_default()
                .push((r.case.as_str(), r.value(metric)));
        }
    }
    groups
        .into_iter()
        .map(|((team, region, metric), mut rows)| {
            rows.sort_by(|a, b| a.0.cmp(b.0));
            DistributionGroup {
                team: team.to_string(),
                region,
                metric,
                cases: rows.iter().map(|(c, _)| c.to_string()).collect(),
                values: rows.iter().map(|(_, v)| *v).collect(),
            }
        })
        .collect()
}

/// Default window for [`sliding_window_curve`]: a tenth of the sample, rounded up.
pub fn default_window(n: usize) -> usize {
    n.div_ceil(10).max(1)
}

/// Sorts `(volume, metric)` pairs by volume and averages each run of
/// `window` consecutive pairs, giving `n - window + 1` points.
pub fn sliding_window_curve(pairs: &[(f64, f64)], window: usize) -> Result<Vec<(f64, f64)>> {
    let n = pairs.len();
    if window == 0 || window > n {
        return Err(Error::Window { window, n });
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(sorted
        .windows(window)
        .map(|w| {
            let k = window as f64;
            let vol = w.iter().map(|p| p.0).sum::<f64>() / k;
            let met = w.iter().map(|p| p.1).sum::<f64>() / k;
            (vol, met)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub r_squared: f64,
    /// Two-tailed, Student t with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation with a two-tailed t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Degenerate(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Degenerate(format!("need at least 3 pairs, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(Correlation {
        r,
        r_squared: r * r,
        p_value: pearson_p_value(r, n),
        n,
    })
}

/// Two-tailed p for `t = r√(n−2)/√(1−r²)`, i.e. `I_{1−r²}((n−2)/2, 1/2)`.
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    assert!(n >= 3, "p-value needs n >= 3");
    let df = (n - 2) as f64;
    let x = 1.0 - r * r;
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Pearson on `(log10(volume), metric)`; non-positive volumes are skipped.
pub fn log_pearson(volumes: &[f64], metric: &[f64]) -> Result<Correlation> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    let mut skipped = 0;
    for (&v, &m) in volumes.iter().zip(metric) {
        if v > 0.0 {
            lx.push(v.log10());
            ly.push(m);
        } else {
            skipped += 1;
        }
    }
    if skipped > 0 {
        log::warn!("log correlation skipped {skipped} zero-volume cases");
    }
    pearson(&lx, &ly)
}
