//! Command-line front end.
//!
//! Subcommands: `evaluate`, `rank`, `abutment`, `stats`, `synth`. Exit codes
//! are 0 on success, 2 on input errors and 3 when `--skip-missing` had to
//! stand in for missing inputs.

mod abutment;
mod config;
mod evaluate;
mod manifest;
mod report;
mod stats;
mod synth;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::abutment::Adjacency;
use crate::error::{Error, Result};
use crate::metrics::LesionParent;
use crate::ranking::{rank_teams, RankMode};

pub use abutment::{abutment_cohort, AbutmentOutcome, AbutmentRun, ChannelChoice};
pub use config::{ConfigFile, OutputFormat, Settings};
pub use evaluate::{evaluate_cohort, EvaluationRun};
pub use manifest::{CohortManifest, ManifestCase};
pub use report::{
    column_names, load_metrics, read_metrics_csv, save_metrics, write_json, write_metrics_csv, write_metrics_json,
    Leaderboard, LeaderboardRow, MetricsRecord, METRICS_HEADER, METRIC_NAMES,
};
pub use stats::{cohort_stats, CohortStats, CurveGroup, StatsOptions, SummaryRow, VolumeCorrelation};
pub use synth::{parse_perturbation, synthesize_cohort, SynthOptions};

#[derive(Debug, Parser)]
#[command(name = "lesionwise", version, about = "Lesion-wise tumor segmentation evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every team's predictions in a manifest.
    Evaluate(EvaluateArgs),
    /// Build a leaderboard from metrics files.
    Rank(RankArgs),
    /// Count tumor voxels touching the brain-mask boundary.
    Abutment(AbutmentArgs),
    /// Cohort summaries, distributions and volume curves from metrics files.
    Stats(StatsArgs),
    /// Write a seeded synthetic cohort with a manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Default)]
pub struct OutputArgs {
    /// Output directory (created if needed).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Report formats to write [default: both].
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// TOML file with defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ScoringArgs {
    /// Label codes as E,N,S (enhancing, non-enhancing, SNFH).
    #[arg(long)]
    pub label_map: Option<String>,
    /// Ground-truth lesions smaller than this are not scored [default: 50].
    #[arg(long)]
    pub min_lesion_voxels: Option<usize>,
    /// HD penalty for each FN or FP lesion, mm.
    #[arg(long)]
    pub hd_penalty: Option<f64>,
    /// Dice penalty for each FN or FP lesion.
    #[arg(long)]
    pub dice_penalty: Option<f64>,
    /// Surface-distance percentile as a fraction [default: 0.95].
    #[arg(long)]
    pub hd_percentile: Option<f64>,
    /// Identify ET/TC lesions on their own (region) or inside WT lesions (wt).
    #[arg(long)]
    pub lesion_parent: Option<LesionParent>,
    /// Only score prediction voxels near each ground-truth lesion.
    #[arg(long)]
    pub roi_restricted: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Cohort manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Score missing predictions as empty instead of failing the case.
    #[arg(long)]
    pub skip_missing: bool,
    /// Worker threads [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Metrics files from `evaluate` (.csv or .json).
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    /// Rank team means (aggregate) or average per-case ranks (per-case).
    #[arg(long)]
    pub rank_mode: Option<RankMode>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AbutmentArgs {
    /// Cohort manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Intensity channel whose nonzero voxels define the brain.
    #[arg(long, conflicts_with = "channel_union")]
    pub channel: Option<String>,
    /// Use the union of all listed channels as the brain.
    #[arg(long)]
    pub channel_union: bool,
    /// Neighborhood used to test the boundary: 6 or 26 [default: 6].
    #[arg(long)]
    pub adjacency: Option<Adjacency>,
    /// Label codes as E,N,S.
    #[arg(long)]
    pub label_map: Option<String>,
    /// Leave out cases with a missing channel instead of failing them.
    #[arg(long)]
    pub skip_missing: bool,
    /// Worker threads [default: 1].
    #[arg(long)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Metrics files from `evaluate` (.csv or .json).
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    /// Sliding-window width; defaults to a tenth of each group, rounded up.
    #[arg(long)]
    pub window: Option<usize>,
    /// Restrict volume curves to cases with exactly one ground-truth lesion.
    #[arg(long)]
    pub single_lesion_only: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Base seed; case k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub cases: usize,
    /// TOML phantom spec; flags below override it.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Grid size as X,Y,Z.
    #[arg(long, value_parser = parse_triple::<usize>)]
    pub dims: Option<[usize; 3]>,
    /// Lesion count range as MIN,MAX.
    #[arg(long, value_parser = parse_range::<usize>)]
    pub lesions: Option<(usize, usize)>,
    /// Lesion radius range in voxels as MIN,MAX.
    #[arg(long, value_parser = parse_range::<f64>)]
    pub radius: Option<(f64, f64)>,
    /// Probability that a lesion has no enhancing voxels.
    #[arg(long)]
    pub calcified_prob: Option<f64>,
    /// Label codes as E,N,S.
    #[arg(long)]
    pub label_map: Option<String>,
    /// Prediction to derive from each phantom, repeatable: identity,
    /// dilate:R, erode:R, translate:X,Y,Z, drop:K, fpblob:R.
    #[arg(long = "perturb", value_parser = parse_perturbation)]
    pub perturb: Vec<crate::phantom::Perturbation>,
}

fn parse_list<T: std::str::FromStr>(s: &str, n: usize) -> std::result::Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| format!("bad number `{p}`")))
        .collect()
}

fn parse_triple<T: std::str::FromStr + Copy>(s: &str) -> std::result::Result<[T; 3], String> {
    let v = parse_list(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_range<T: std::str::FromStr + Copy>(s: &str) -> std::result::Result<(T, T), String> {
    if !s.contains(',') {
        let v: T = s.parse().map_err(|_| format!("bad number `{s}`"))?;
        return Ok((v, v));
    }
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

/// Process outcome of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some cases failed and were reported as error rows.
    InputErrors,
    /// `--skip-missing` replaced missing inputs.
    Partial,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::InputErrors => 2,
            Status::Partial => 3,
        }
    }
}

/// Parses arguments, runs and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn settings_from(manifest: Option<&CohortManifest>, output: &OutputArgs, flags: ConfigFile) -> Result<Settings> {
    let mut settings = Settings::default();
    if let Some(m) = manifest {
        if let Some(cfg) = &m.config {
            settings.apply(cfg)?;
        }
        if let Some(map) = &m.label_map {
            settings.apply(&ConfigFile {
                label_map: Some(map.clone()),
                ..ConfigFile::default()
            })?;
        }
    }
    if let Some(path) = &output.config {
        settings.apply(&ConfigFile::load(path)?)?;
    }
    settings.apply(&ConfigFile {
        format: output.format,
        ..flags
    })?;
    Ok(settings)
}

fn scoring_layer(s: &ScoringArgs) -> ConfigFile {
    ConfigFile {
        label_map: s.label_map.clone(),
        min_lesion_voxels: s.min_lesion_voxels,
        hd_penalty: s.hd_penalty,
        dice_penalty: s.dice_penalty,
        hd_percentile: s.hd_percentile,
        lesion_parent: s.lesion_parent,
        roi_restricted: s.roi_restricted.then_some(true),
        ..ConfigFile::default()
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

fn load_all_metrics(paths: &[PathBuf]) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(load_metrics(p)?);
    }
    Ok(out)
}

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Evaluate(args) => {
            let manifest = CohortManifest::load(&args.manifest)?;
            let mut flags = scoring_layer(&args.scoring);
            flags.jobs = args.jobs;
            let settings = settings_from(Some(&manifest), &args.output, flags)?;
            let run = evaluate_cohort(&manifest, &settings, args.skip_missing)?;
            ensure_dir(&args.output.out)?;
            save_metrics(&run.records, &args.output.out, settings.format.csv(), settings.format.json())?;
            Ok(run.status(args.skip_missing))
        }
        Command::Rank(args) => {
            let flags = ConfigFile {
                rank_mode: args.rank_mode,
                ..ConfigFile::default()
            };
            let settings = settings_from(None, &args.output, flags)?;
            let records = load_all_metrics(&args.metrics)?;
            let failed: Vec<String> = records
                .iter()
                .filter(|r| r.metrics.is_none())
                .map(|r| format!("{}/{}/{} has an error row", r.team, r.case, r.region))
                .collect();
            if !failed.is_empty() {
                return Err(Error::Coverage(failed));
            }
            let rows: Vec<_> = records.iter().filter_map(MetricsRecord::team_case_record).collect();
            let table = rank_teams(&rows, settings.rank_mode)?;
            ensure_dir(&args.output.out)?;
            Leaderboard::from_table(&table).save(&args.output.out, settings.format.csv(), settings.format.json())?;
            Ok(Status::Success)
        }
        Command::Abutment(args) => {
            let manifest = CohortManifest::load(&args.manifest)?;
            let flags = ConfigFile {
                label_map: args.label_map.clone(),
                adjacency: args.adjacency,
                jobs: args.jobs,
                ..ConfigFile::default()
            };
            let settings = settings_from(Some(&manifest), &args.output, flags)?;
            let choice = match (&args.channel, args.channel_union) {
                (Some(name), _) => ChannelChoice::Named(name.clone()),
                (None, true) => ChannelChoice::Union,
                (None, false) => ChannelChoice::Single,
            };
            let run = abutment_cohort(&manifest, &settings, &choice, args.skip_missing)?;
            ensure_dir(&args.output.out)?;
            run.save(&args.output.out, settings.format.csv(), settings.format.json())?;
            Ok(run.status(args.skip_missing))
        }
        Command::Stats(args) => {
            let settings = settings_from(None, &args.output, ConfigFile::default())?;
            let records = load_all_metrics(&args.metrics)?;
            let opts = StatsOptions {
                window: args.window,
                single_lesion_only: args.single_lesion_only,
            };
            let stats = cohort_stats(&records, &opts)?;
            ensure_dir(&args.output.out)?;
            stats.save(&args.output.out, settings.format.csv(), settings.format.json())?;
            Ok(Status::Success)
        }
        Command::Synth(args) => {
            let mut spec = match &args.spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
                    toml::from_str(&text)?
                }
                None => crate::phantom::PhantomSpec::default(),
            };
            if let Some(d) = args.dims {
                spec.dims = d;
            }
            if let Some(r) = args.lesions {
                spec.lesion_count = r;
            }
            if let Some(r) = args.radius {
                spec.lesion_radius = r;
            }
            if let Some(p) = args.calcified_prob {
                spec.calcified_probability = p;
            }
            if let Some(m) = &args.label_map {
                spec.label_map = m.parse()?;
            }
            let opts = SynthOptions {
                cases: args.cases,
                seed: args.seed,
                perturbations: args.perturb,
            };
            synthesize_cohort(&args.out, &spec, &opts)?;
            Ok(Status::Success)
        }
    }
}
