//! Team ranking.
//!
//! Each team gets one rank per (metric, region) pair, six in total; the
//! segmentation score is the mean of those ranks and orders the leaderboard
//! (lower is better).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "DSC")]
    Dsc,
    #[serde(rename = "HD95")]
    Hd95,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Dsc, Metric::Hd95];

    pub fn higher_is_better(self) -> bool {
        matches!(self, Metric::Dsc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Dsc => "DSC",
            Metric::Hd95 => "HD95",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The six ranking columns, in leaderboard order.
pub const COLUMNS: [(Metric, Region); 6] = [
    (Metric::Dsc, Region::Et),
    (Metric::Dsc, Region::Tc),
    (Metric::Dsc, Region::Wt),
    (Metric::Hd95, Region::Et),
    (Metric::Hd95, Region::Tc),
    (Metric::Hd95, Region::Wt),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMode {
    /// Rank the per-team mean of each metric.
    #[default]
    Aggregate,
    /// Rank teams on every case, then average the ranks.
    PerCase,
}

impl FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aggregate" => Ok(RankMode::Aggregate),
            "per-case" => Ok(RankMode::PerCase),
            _ => Err(Error::InvalidConfig(format!("unknown rank mode `{s}`"))),
        }
    }
}

/// Lesion-wise scores of one team on one case and region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamCaseRecord {
    pub team: String,
    pub case: String,
    pub region: Region,
    pub lesionwise_dice: f64,
    pub lesionwise_hd95: f64,
}

impl TeamCaseRecord {
    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Dsc => self.lesionwise_dice,
            Metric::Hd95 => self.lesionwise_hd95,
        }
    }
}

fn teams_of(records: &[TeamCaseRecord]) -> BTreeSet<&str> {
    records.iter().map(|r| r.team.as_str()).collect()
}

/// Mean of `metric` over each team's cases in `region`.
pub fn aggregate_team_metric(
    records: &[TeamCaseRecord],
    region: Region,
    metric: Metric,
) -> Result<BTreeMap<String, f64>> {
    let mut sums: BTreeMap<&str, (f64, usize)> = teams_of(records).into_iter().map(|t| (t, (0.0, 0))).collect();
    for r in records.iter().filter(|r| r.region == region) {
        let slot = sums.get_mut(r.team.as_str()).expect("team collected above");
        slot.0 += r.value(metric);
        slot.1 += 1;
    }
    sums.into_iter()
        .map(|(team, (sum, n))| {
            if n == 0 {
                Err(Error::MissingTeam(team.to_string()))
            } else {
                Ok((team.to_string(), sum / n as f64))
            }
        })
        .collect()
}

/// Rank 1 is best; tied values share the mean of the ranks they span.
pub fn rank_metric(values: &BTreeMap<String, f64>, higher_is_better: bool) -> BTreeMap<String, f64> {
    let mut order: Vec<(&String, f64)> = values.iter().map(|(t, &v)| (t, v)).collect();
    // NaN sorts last regardless of direction.
    order.sort_by(|a, b| match (a.1.is_nan(), b.1.is_nan()) {
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Greater,
        (false, true) => std::cmp::Ordering::Less,
        _ if higher_is_better => b.1.total_cmp(&a.1),
        _ => a.1.total_cmp(&b.1),
    });
    let mut ranks = BTreeMap::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && same_value(order[end].1, order[start].1) {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let shared = (start + 1 + end) as f64 / 2.0;
        for (team, _) in &order[start..end] {
            ranks.insert((*team).clone(), shared);
        }
        start = end;
    }
    ranks
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

/// Mean of the six per-column ranks.
pub fn segmentation_score(ranks: &[f64]) -> Result<f64> {
    if ranks.len() != COLUMNS.len() {
        return Err(Error::Arity {
            expected: COLUMNS.len(),
            got: ranks.len(),
        });
    }
    Ok(ranks.iter().sum::<f64>() / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub position: usize,
    pub team: String,
    pub score: f64,
    pub tied: bool,
}

/// Ascending by score; equal scores are ordered by team name and flagged.
pub fn final_ranking(scores: &BTreeMap<String, f64>) -> Vec<LeaderboardEntry> {
    let mut order: Vec<(&String, f64)> = scores.iter().map(|(t, &s)| (t, s)).collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    order
        .iter()
        .enumerate()
        .map(|(k, (team, score))| {
            let tied = order.iter().filter(|(_, s)| s == score).count() > 1;
            LeaderboardEntry {
                position: k + 1,
                team: (*team).clone(),
                score: *score,
                tied,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamRow {
    pub team: String,
    /// Mean value per column of [`COLUMNS`].
    pub aggregates: [f64; 6],
    pub ranks: [f64; 6],
    pub segmentation_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub mode: RankMode,
    pub rows: Vec<TeamRow>,
    pub final_order: Vec<LeaderboardEntry>,
}

impl RankingTable {
    /// Ranks precomputed per-team aggregates (one value per column).
    pub fn from_aggregates(aggregates: &BTreeMap<String, [f64; 6]>) -> Result<Self> {
        if aggregates.is_empty() {
            return Err(Error::EmptyInput("no teams to rank"));
        }
        let mut ranks: BTreeMap<&String, [f64; 6]> = aggregates.keys().map(|t| (t, [0.0; 6])).collect();
        for (col, (metric, _)) in COLUMNS.iter().enumerate() {
            let column: BTreeMap<String, f64> = aggregates.iter().map(|(t, a)| (t.clone(), a[col])).collect();
            for (team, rank) in rank_metric(&column, metric.higher_is_better()) {
                ranks.get_mut(&team).expect("same teams")[col] = rank;
            }
        }
        let rows: Vec<TeamRow> = aggregates
            .iter()
            .map(|(team, agg)| {
                let r = ranks[team];
                Ok(TeamRow {
                    team: team.clone(),
                    aggregates: *agg,
                    ranks: r,
                    segmentation_score: segmentation_score(&r)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self::with_rows(RankMode::Aggregate, rows))
    }

    fn with_rows(mode: RankMode, rows: Vec<TeamRow>) -> Self {
        let scores = rows.iter().map(|r| (r.team.clone(), r.segmentation_score)).collect();
        Self {
            mode,
            final_order: final_ranking(&scores),
            rows,
        }
    }

    pub fn row(&self, team: &str) -> Option<&TeamRow> {
        self.rows.iter().find(|r| r.team == team)
    }
}

/// Every team must have exactly one record per (case, region) seen anywhere
/// in the cohort.
pub fn check_coverage(records: &[TeamCaseRecord]) -> Result<()> {
    let teams = teams_of(records);
    let cells: BTreeSet<(&str, Region)> = records.iter().map(|r| (r.case.as_str(), r.region)).collect();
    let mut seen: BTreeMap<(&str, &str, Region), usize> = BTreeMap::new();
    for r in records {
        *seen.entry((r.team.as_str(), r.case.as_str(), r.region)).or_default() += 1;
    }
    let mut gaps = Vec::new();
    for team in &teams {
        for &(case, region) in &cells {
            match seen.get(&(*team, case, region)).copied().unwrap_or(0) {
                0 => gaps.push(format!("{team}/{case}/{region} missing")),
                1 => {}
                n => gaps.push(format!("{team}/{case}/{region} duplicated {n}x")),
            }
        }
    }
    if gaps.is_empty() {
        Ok(())
    } else {
        Err(Error::Coverage(gaps))
    }
}

/// Builds the full leaderboard from per-case records.
pub fn rank_teams(records: &[TeamCaseRecord], mode: RankMode) -> Result<RankingTable> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to rank"));
    }
    check_coverage(records)?;
    let mut aggregates: BTreeMap<String, [f64; 6]> = BTreeMap::new();
    for (col, &(metric, region)) in COLUMNS.iter().enumerate() {
        for (team, mean) in aggregate_team_metric(records, region, metric)? {
            aggregates.entry(team).or_insert([0.0; 6])[col] = mean;
        }
    }
    match mode {
        RankMode::Aggregate => RankingTable::from_aggregates(&aggregates),
        RankMode::PerCase => {
            let mut rank_sums: BTreeMap<String, [f64; 6]> = aggregates.keys().map(|t| (t.clone(), [0.0; 6])).collect();
            let cases: BTreeSet<&str> = records.iter().map(|r| r.case.as_str()).collect();
            for (col, &(metric, region)) in COLUMNS.iter().enumerate() {
                for case in &cases {
                    let values: BTreeMap<String, f64> = records
                        .iter()
                        .filter(|r| r.region == region && r.case == *case)
                        .map(|r| (r.team.clone(), r.value(metric)))
                        .collect();
                    for (team, rank) in rank_metric(&values, metric.higher_is_better()) {
                        rank_sums.get_mut(&team).expect("known team")[col] += rank;
                    }
                }
            }
            let n_cases = cases.len() as f64;
            let rows = aggregates
                .iter()
                .map(|(team, agg)| {
                    let ranks = rank_sums[team].map(|s| s / n_cases);
                    Ok(TeamRow {
                        team: team.clone(),
                        aggregates: *agg,
                        ranks,
                        segmentation_score: segmentation_score(&ranks)?,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(RankingTable::with_rows(RankMode::PerCase, rows))
        }
    }
}
