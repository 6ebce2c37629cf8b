//! Scores a few perturbed predictions of one synthetic case.
//!
//! cargo run --example evaluate_phantom

use lesionwise::metrics::{evaluate_case, EvalConfig};
use lesionwise::phantom::{generate, perturb, Perturbation, PhantomSpec};

fn main() -> lesionwise::Result<()> {
    let spec = PhantomSpec {
        dims: [64, 64, 48],
        lesion_count: (3, 3),
        lesion_radius: (4.0, 7.0),
        calcified_probability: 0.0,
        seed: 3,
        ..PhantomSpec::default()
    };
    let phantom = generate(&spec)?;
    let cfg = EvalConfig::default();

    let predictions = [
        Perturbation::Identity,
        Perturbation::Dilate { radius: 1 },
        Perturbation::Translate { offset: [2, 0, 0] },
        Perturbation::DropLesion { lesion: 0 },
        Perturbation::AddFpBlob { radius: 4.0, seed: 1 },
    ];
    println!("{:<10} {:>3} {:>8} {:>9} {:>9} {:>3} {:>3} {:>3}", "pred", "reg", "lw_dice", "lw_hd95", "glob_dice", "tp", "fn", "fp");
    for p in &predictions {
        let pred = perturb(&phantom, p, &spec)?;
        for m in evaluate_case(&phantom.gt, &pred, &spec.label_map, &cfg)? {
            println!(
                "{:<10} {:>3} {:>8.4} {:>9.3} {:>9.4} {:>3} {:>3} {:>3}",
                p.label(),
                m.region.as_str(),
                m.lesionwise_dice,
                m.lesionwise_hd95,
                m.global_dice,
                m.counts.tp,
                m.counts.fn_,
                m.counts.fp
            );
        }
    }
    Ok(())
}
