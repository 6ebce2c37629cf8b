//! Summary statistics, a volume-binned performance curve and a correlation
//! for a synthetic cohort scored against a dilated prediction.
//!
//! cargo run --example cohort_statistics

use lesionwise::metrics::{evaluate_case, EvalConfig};
use lesionwise::phantom::{generate, perturb, Perturbation, PhantomSpec};
use lesionwise::stats::{default_window, log_pearson, sliding_window_curve, summarize};
use lesionwise::volume::Region;

fn main() -> lesionwise::Result<()> {
    let cfg = EvalConfig::default();
    let mut dice = Vec::new();
    let mut pairs = Vec::new();
    for seed in 0..20 {
        let spec = PhantomSpec {
            lesion_count: (1, 2),
            lesion_radius: (2.5, 9.0),
            seed,
            ..PhantomSpec::default()
        };
        let phantom = generate(&spec)?;
        let pred = perturb(&phantom, &Perturbation::Erode { radius: 1 }, &spec)?;
        let wt = evaluate_case(&phantom.gt, &pred, &spec.label_map, &cfg)?
            .into_iter()
            .find(|m| m.region == Region::Wt)
            .expect("WT is always scored");
        dice.push(wt.lesionwise_dice);
        pairs.push((wt.gt_volume_mm3, wt.lesionwise_dice));
    }

    let s = summarize(&dice)?;
    println!(
        "WT lesion-wise dice: mean {:.3} std {:.3} median {:.3} IQR [{:.3}, {:.3}]",
        s.mean,
        s.std.unwrap_or(0.0),
        s.median,
        s.q1,
        s.q3
    );

    let window = default_window(pairs.len());
    println!("sliding window of {window} cases:");
    for (vol, d) in sliding_window_curve(&pairs, window)? {
        println!("  {vol:>9.1} mm3  dice {d:.3}");
    }

    let (vols, ds): (Vec<f64>, Vec<f64>) = pairs.iter().copied().filter(|p| p.0 > 0.0).unzip();
    let c = log_pearson(&vols, &ds)?;
    println!("dice vs log volume: r = {:.3}, p = {:.3e}, n = {}", c.r, c.p_value, c.n);
    Ok(())
}
