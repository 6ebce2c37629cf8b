//! Counts tumor voxels touching the brain-mask boundary across a small
//! synthetic cohort and correlates the count with tumor volume.
//!
//! cargo run --example abutment_analysis

use lesionwise::abutment::{cohort_abutment_summary, correlate_abutment_volume, count_abutting, Adjacency};
use lesionwise::phantom::{generate, PhantomSpec};
use lesionwise::volume::derive_brain_mask;

fn main() -> lesionwise::Result<()> {
    let mut reports = Vec::new();
    for seed in 0..12 {
        let spec = PhantomSpec {
            dims: [48, 48, 40],
            lesion_count: (1, 3),
            lesion_radius: (3.0, 8.0),
            // A tight brain ellipsoid so some lesions reach its edge.
            brain_axes: [0.7, 0.7, 0.7],
            seed,
            ..PhantomSpec::default()
        };
        let phantom = generate(&spec)?;
        let brain = derive_brain_mask(&phantom.brain);
        let r = count_abutting(&format!("case-{seed:02}"), &phantom.gt, &brain, &spec.label_map, Adjacency::Face6)?;
        println!("{}  wt {:>6} voxels  abutting {:>5}", r.case, r.wt_voxels, r.abutting_voxels);
        reports.push(r);
    }
    let summary = cohort_abutment_summary(&reports)?;
    println!(
        "{} of {} cases abut the boundary ({:.0}%)",
        summary.cases_with_abutment,
        summary.total_cases,
        100.0 * summary.fraction
    );
    match correlate_abutment_volume(&reports) {
        Ok(c) => println!("abutting vs volume: r = {:.3}, p = {:.3e}", c.linear.r, c.linear.p_value),
        Err(e) => println!("no correlation: {e}"),
    }
    Ok(())
}
