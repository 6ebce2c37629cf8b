//! Generates a synthetic cohort on disk, evaluates it and ranks the
//! synthetic teams, the same pipeline the command-line tool runs.
//!
//! cargo run --example synth_cohort -- [OUT_DIR]

use std::path::PathBuf;

use lesionwise::cli::{evaluate_cohort, synthesize_cohort, Settings, SynthOptions};
use lesionwise::phantom::{Perturbation, PhantomSpec};
use lesionwise::ranking::{rank_teams, RankMode};

fn main() -> lesionwise::Result<()> {
    let out = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lesionwise-synth"));
    let opts = SynthOptions {
        cases: 8,
        seed: 42,
        perturbations: vec![
            Perturbation::Identity,
            Perturbation::Dilate { radius: 1 },
            Perturbation::Erode { radius: 1 },
            Perturbation::DropLesion { lesion: 0 },
        ],
    };
    let manifest = synthesize_cohort(&out, &PhantomSpec::default(), &opts)?;
    println!("wrote {} cases to {}", manifest.cases.len(), out.display());

    // Reload so relative paths resolve against the output directory.
    let manifest = lesionwise::cli::CohortManifest::load(&out.join("manifest.json"))?;
    let run = evaluate_cohort(&manifest, &Settings::default(), false)?;
    let rows: Vec<_> = run.records.iter().filter_map(|r| r.team_case_record()).collect();
    let table = rank_teams(&rows, RankMode::Aggregate)?;
    for e in &table.final_order {
        println!("{:>2}. {:<8} {:.3}", e.position, e.team, e.score);
    }
    Ok(())
}
