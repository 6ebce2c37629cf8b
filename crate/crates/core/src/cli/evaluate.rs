use std::collections::BTreeSet;

use rayon::prelude::*;

use super::config::Settings;
use super::manifest::{CohortManifest, ManifestCase};
use super::report::MetricsRecord;
use super::Status;
use crate::error::{Error, Result};
use crate::metrics::evaluate_case;
use crate::volume::{load_labels, LabelVolume, Region};

/// Records of a cohort evaluation, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    pub records: Vec<MetricsRecord>,
    /// (team, case) pairs reported as error rows.
    pub failed: usize,
    /// (team, case) pairs scored as empty predictions.
    pub substituted: usize,
}

impl EvaluationRun {
    pub fn status(&self, skip_missing: bool) -> Status {
        if self.failed > 0 {
            Status::InputErrors
        } else if skip_missing && self.substituted > 0 {
            Status::Partial
        } else {
            Status::Success
        }
    }
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn failed_rows(team: &str, case: &str, message: &str) -> Vec<MetricsRecord> {
    Region::ALL
        .iter()
        .map(|&r| MetricsRecord::failed(team, case, r, message))
        .collect()
}

struct CaseResult {
    records: Vec<MetricsRecord>,
    failed: usize,
    substituted: usize,
}

fn evaluate_one(case: &ManifestCase, teams: &BTreeSet<String>, settings: &Settings, skip_missing: bool) -> CaseResult {
    let mut out = CaseResult {
        records: Vec::with_capacity(teams.len() * 3),
        failed: 0,
        substituted: 0,
    };
    let gt = match load_labels(&case.gt) {
        Ok(v) => v,
        Err(e) => {
            log::error!("case {}: ground truth: {e}", case.id);
            for team in teams {
                out.records.extend(failed_rows(team, &case.id, &format!("ground truth: {e}")));
                out.failed += 1;
            }
            return out;
        }
    };
    for team in teams {
        let path = case.predictions.get(team);
        let missing = path.is_none_or(|p| !p.exists());
        let pred = if missing && skip_missing {
            log::warn!("case {}: no prediction from {team}; scoring as empty", case.id);
            out.substituted += 1;
            Ok(LabelVolume::zeros(*gt.geometry()))
        } else {
            match path {
                Some(p) => load_labels(p),
                None => Err(Error::Manifest(format!("no prediction listed for team {team}"))),
            }
        };
        match pred.and_then(|p| evaluate_case(&gt, &p, &settings.label_map, &settings.eval)) {
            Ok(metrics) => out
                .records
                .extend(metrics.into_iter().map(|m| MetricsRecord::scored(team, &case.id, m))),
            Err(e) => {
                log::error!("case {} team {team}: {e}", case.id);
                out.records.extend(failed_rows(team, &case.id, &e.to_string()));
                out.failed += 1;
            }
        }
    }
    out
}

/// Scores every (case, team) pair. Cases run in parallel on `settings.jobs`
/// workers; output order is manifest case order, then team name, then
/// region, whatever the worker count.
pub fn evaluate_cohort(manifest: &CohortManifest, settings: &Settings, skip_missing: bool) -> Result<EvaluationRun> {
    manifest.validate()?;
    settings.eval.validate()?;
    let teams = manifest.teams();
    if teams.is_empty() {
        return Err(Error::Manifest("no predictions listed".into()));
    }
    let pool = thread_pool(settings.jobs)?;
    let results: Vec<CaseResult> = pool.install(|| {
        manifest
            .cases
            .par_iter()
            .map(|case| evaluate_one(case, &teams, settings, skip_missing))
            .collect()
    });
    let mut run = EvaluationRun {
        records: Vec::new(),
        failed: 0,
        substituted: 0,
    };
    for r in results {
        run.records.extend(r.records);
        run.failed += r.failed;
        run.substituted += r.substituted;
    }
    log::info!(
        "evaluated {} cases x {} teams ({} failed, {} empty substitutes)",
        manifest.cases.len(),
        teams.len(),
        run.failed,
        run.substituted
    );
    Ok(run)
}
