//! Acceptance suite. Runs every criterion in sequence (timings are not
//! disturbed by other tests) and prints one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use common::{Grid, OracleConfig};
use lesionwise::cli::{main_with_args, CohortManifest, ManifestCase};
use lesionwise::lesion::{filter_small_lesions, identify_gt_lesions};
use lesionwise::metrics::{dice, evaluate_case, hd95, lesionwise_scores, EvalConfig};
use lesionwise::phantom::{generate, perturb, Perturbation, PhantomSpec};
use lesionwise::ranking::segmentation_score;
use lesionwise::stats::{pearson_p_value, summarize};
use lesionwise::volume::{BinaryMask, Geometry, LabelMap, LabelVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const REGION_CODES: [&[u16]; 3] = [&[3], &[3, 1], &[3, 1, 2]];

fn mask(grid: &Grid, bits: Vec<bool>) -> BinaryMask {
    BinaryMask::new(Geometry::new(grid.dims, grid.spacing).unwrap(), bits).unwrap()
}

fn sprinkle(rng: &mut ChaCha8Rng, volume: &mut LabelVolume, n: usize) {
    let len = volume.labels().len();
    for _ in 0..n {
        let i = rng.random_range(0..len);
        volume.labels_mut()[i] = [1, 2, 3][rng.random_range(0..3)];
    }
}

fn random_perturbation(rng: &mut ChaCha8Rng) -> Perturbation {
    match rng.random_range(0..6) {
        0 => Perturbation::Identity,
        1 => Perturbation::Dilate { radius: 1 },
        2 => Perturbation::Erode { radius: 1 },
        3 => Perturbation::Translate {
            offset: [0, 1, 2].map(|_| rng.random_range(-2..=2)),
        },
        4 => Perturbation::DropLesion {
            lesion: rng.random_range(0..3),
        },
        _ => Perturbation::AddFpBlob {
            radius: 2.0,
            seed: rng.random(),
        },
    }
}

fn criterion_1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let grid = Grid::cube(32);
    let map = LabelMap::default();
    let cfg = EvalConfig::default();
    let (mut cases, mut seed, mut worst, mut lesions) = (0, 0u64, 0.0f64, 0usize);
    while cases < 200 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = PhantomSpec {
            dims: grid.dims,
            lesion_count: (1, 4),
            lesion_radius: (2.0, 6.0),
            min_gap: rng.random_range(1..=4),
            calcified_probability: 0.2,
            seed,
            ..PhantomSpec::default()
        };
        let Ok(phantom) = generate(&spec) else { continue };
        let p = random_perturbation(&mut rng);
        let Ok(mut pred) = perturb(&phantom, &p, &spec) else { continue };
        let mut gt = phantom.gt.clone();
        sprinkle(&mut rng, &mut gt, 4);
        sprinkle(&mut rng, &mut pred, 10);
        let got = evaluate_case(&gt, &pred, &map, &cfg).map_err(|e| e.to_string())?;
        for (m, codes) in got.iter().zip(REGION_CODES) {
            let g = common::region_bits(gt.labels(), codes);
            let q = common::region_bits(pred.labels(), codes);
            let o = common::lesionwise(&grid, &g, &q, &OracleConfig::default());
            let c = m.counts;
            ensure!(
                (c.tp, c.fn_, c.fp) == (o.tp, o.fn_, o.fp),
                "seed {seed} {}: counts {:?} vs oracle {:?}",
                m.region,
                (c.tp, c.fn_, c.fp),
                (o.tp, o.fn_, o.fp)
            );
            let err = (m.lesionwise_dice - o.dice).abs().max((m.lesionwise_hd95 - o.hd).abs());
            ensure!(err <= 1e-9, "seed {seed} {}: off by {err:e}", m.region);
            worst = worst.max(err);
            lesions += o.tp + o.fn_ + o.fp;
        }
        cases += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("200 cases, {lesions} scored lesions, max |diff| {worst:.1e}, {secs:.1} s"))
}

/// A ball of `radius` voxels around `center`.
fn ball(grid: &Grid, bits: &mut [bool], center: [usize; 3], radius: f64) {
    for (i, b) in bits.iter_mut().enumerate() {
        let p = grid.xyz(i);
        let d: f64 = (0..3).map(|k| (p[k] as f64 - center[k] as f64).powi(2)).sum();
        if d <= radius * radius {
            *b = true;
        }
    }
}

fn criterion_2_penalties() -> Outcome {
    let grid = Grid::cube(30);
    let cfg = EvalConfig::default();
    let mut gt = vec![false; grid.len()];
    ball(&grid, &mut gt, [8, 8, 8], 4.0);
    let gt_field = filter_small_lesions(&identify_gt_lesions(&mask(&grid, gt.clone())), 50);
    ensure!(gt_field.len() == 1, "expected one ground-truth lesion");

    let all_fn = lesionwise_scores(&gt_field, &mask(&grid, vec![false; grid.len()]), &cfg).map_err(|e| e.to_string())?;
    ensure!(all_fn.hd95 == 374.0, "all-FN hd95 {} != 374.0", all_fn.hd95);
    ensure!(all_fn.dice == 0.0, "all-FN dice {}", all_fn.dice);

    // One perfect TP, one FN, one FP: sums are 1 + 0 + 0 and 0 + 374 + 374.
    let mut gt2 = gt.clone();
    ball(&grid, &mut gt2, [21, 21, 21], 4.0);
    let field2 = filter_small_lesions(&identify_gt_lesions(&mask(&grid, gt2)), 50);
    let mut pred = gt.clone();
    ball(&grid, &mut pred, [8, 22, 22], 2.0);
    let s = lesionwise_scores(&field2, &mask(&grid, pred), &cfg).map_err(|e| e.to_string())?;
    ensure!(
        (s.counts.tp, s.counts.fn_, s.counts.fp) == (1, 1, 1),
        "counts {:?}",
        s.counts
    );
    ensure!(s.dice == 1.0 / 3.0, "dice {} != 1/3", s.dice);
    ensure!(s.hd95 == 748.0 / 3.0, "hd95 {} != 748/3", s.hd95);
    Ok(format!("all-FN hd95 = {:.1}; TP+FN+FP = 3 gives dice {:.6}, hd95 {:.4}", all_fn.hd95, s.dice, s.hd95))
}

fn criterion_3_worked_ranking() -> Outcome {
    let score = segmentation_score(&[3.0, 2.0, 3.0, 3.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    ensure!((score - 2.8333).abs() <= 0.0005, "score {score}");
    let shown = format!("{score:.2}");
    ensure!(shown == "2.83", "displayed {shown}");
    Ok(format!("score {score:.4}, displayed {shown}"))
}

fn lesion_count(grid: &Grid, voxels: &[[usize; 3]], min: usize) -> usize {
    let bits = mask(grid, {
        let mut b = vec![false; grid.len()];
        for v in voxels {
            b[grid.idx(v[0], v[1], v[2])] = true;
        }
        b
    });
    filter_small_lesions(&identify_gt_lesions(&bits), min).len()
}

fn criterion_4_lesion_rules() -> Outcome {
    let grid = Grid::cube(12);
    let line = |n: usize| -> Vec<[usize; 3]> { (0..n).map(|k| [k % 10 + 1, k / 10 + 1, 5]).collect() };
    ensure!(lesion_count(&grid, &line(49), 50) == 0, "49-voxel lesion kept");
    ensure!(lesion_count(&grid, &line(50), 50) == 1, "50-voxel lesion dropped");
    ensure!(lesion_count(&grid, &[[3, 5, 5], [5, 5, 5]], 1) == 1, "one-voxel gap did not merge");
    ensure!(lesion_count(&grid, &[[3, 5, 5], [7, 5, 5]], 1) == 2, "three-voxel gap merged");
    ensure!(lesion_count(&grid, &[[4, 4, 4], [5, 5, 5]], 1) == 1, "corner neighbors split");
    Ok("49 excluded, 50 kept, 1-voxel gap merges, corner contact joins".into())
}

fn criterion_5_hd_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut pairs, mut worst, mut max_surface) = (0, 0.0f64, 0);
    while pairs < 500 {
        let grid = Grid {
            dims: [0, 1, 2].map(|_| rng.random_range(6..=22)),
            spacing: [0, 1, 2].map(|_| rng.random_range(0.5..=2.5)),
        };
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(1..=3);
            let mut b = common::random_blobs(rng, &grid, n, (0.8, 4.0), 0);
            let salt = rng.random_range(0..4);
            common::salt(rng, &mut b, salt);
            b
        };
        let (a, b) = (draw(&mut rng), draw(&mut rng));
        let sa: BTreeSet<usize> = (0..a.len()).filter(|&i| a[i]).collect();
        let sb: BTreeSet<usize> = (0..b.len()).filter(|&i| b[i]).collect();
        if sa.is_empty() || sb.is_empty() {
            continue;
        }
        let surf = common::surface(&grid, &sa).len().max(common::surface(&grid, &sb).len());
        if surf > 500 {
            continue;
        }
        max_surface = max_surface.max(surf);
        let (ma, mb) = (mask(&grid, a), mask(&grid, b));
        let got = hd95(&ma, &mb).map_err(|e| e.to_string())?;
        let want = common::brute_hd(&grid, &sa, &sb, 0.95);
        let err = (got - want).abs();
        ensure!(err <= 1e-9, "pair {pairs}: {got} vs brute {want}");
        worst = worst.max(err);
        let back = hd95(&mb, &ma).map_err(|e| e.to_string())?;
        ensure!(back == got, "asymmetric: {got} vs {back}");
        ensure!(hd95(&ma, &ma).map_err(|e| e.to_string())? == 0.0, "hd95(a, a) != 0");
        pairs += 1;
    }
    Ok(format!("500 pairs (up to {max_surface} surface voxels), max |diff| {worst:.1e}"))
}

fn shifted(grid: &Grid, bits: &[bool], off: [i64; 3]) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    for i in (0..bits.len()).filter(|&i| bits[i]) {
        let p = grid.xyz(i);
        let q = [0, 1, 2].map(|k| (p[k] as i64 + off[k]) as usize);
        out[grid.idx(q[0], q[1], q[2])] = true;
    }
    out
}

fn criterion_6_invariants() -> Outcome {
    // Content stays within [6, 17] (+-2 after a shift); the FP cube sits at
    // [21, 22], four voxels clear, so it never merges with anything.
    let grid = Grid::cube(24);
    let cfg = EvalConfig {
        min_lesion_voxels: 4,
        ..EvalConfig::default()
    };
    let oracle_cfg = OracleConfig {
        min_voxels: 4,
        ..OracleConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let score = |g: &[bool], p: &[bool]| {
        let field = filter_small_lesions(&identify_gt_lesions(&mask(&grid, g.to_vec())), cfg.min_lesion_voxels);
        let s = lesionwise_scores(&field, &mask(&grid, p.to_vec()), &cfg).expect("aligned");
        (field.len(), s)
    };
    for trial in 0..10_000 {
        let ng = rng.random_range(0..=3);
        let np = rng.random_range(0..=3);
        let g = common::random_blobs(&mut rng, &grid, ng, (0.6, 2.0), 8);
        let p = common::random_blobs(&mut rng, &grid, np, (0.6, 2.0), 8);
        let (mg, mp) = (mask(&grid, g.clone()), mask(&grid, p.clone()));
        let d = dice(&mg, &mp).map_err(|e| e.to_string())?;
        ensure!((0.0..=1.0).contains(&d), "trial {trial}: dice {d}");
        ensure!(d == dice(&mp, &mg).unwrap(), "trial {trial}: dice asymmetric");

        let (l, s) = score(&g, &p);
        ensure!((0.0..=1.0).contains(&s.dice), "trial {trial}: lesion-wise dice {}", s.dice);
        ensure!(s.counts.tp + s.counts.fn_ == l, "trial {trial}: TP+FN != L");
        if trial % 5 == 0 {
            let o = common::lesionwise(&grid, &g, &p, &oracle_cfg);
            ensure!(o.tp + o.fn_ == l, "trial {trial}: L = {l}, oracle {}", o.tp + o.fn_);
        }

        let off = [0, 1, 2].map(|_| rng.random_range(-2..=2));
        let (_, t) = score(&shifted(&grid, &g, off), &shifted(&grid, &p, off));
        ensure!(
            t.counts == s.counts && (t.dice - s.dice).abs() <= 1e-12 && (t.hd95 - s.hd95).abs() <= 1e-9,
            "trial {trial}: translation by {off:?} changed scores"
        );

        let mut with_fp = p.clone();
        for x in 21..23 {
            for y in 21..23 {
                for z in 21..23 {
                    with_fp[grid.idx(x, y, z)] = true;
                }
            }
        }
        let (_, f) = score(&g, &with_fp);
        ensure!(f.counts.fp == s.counts.fp + 1, "trial {trial}: FP blob not counted");
        ensure!(f.dice <= s.dice, "trial {trial}: FP raised dice {} -> {}", s.dice, f.dice);
    }
    Ok("10000 trials: dice bounds and symmetry, TP+FN=L, translation invariance, FP monotonicity".into())
}

fn criterion_7_half_cluster() -> Outcome {
    let spec = PhantomSpec {
        lesion_count: (2, 2),
        lesion_radius: (7.0, 8.0),
        calcified_probability: 0.0,
        seed: 3,
        ..PhantomSpec::default()
    };
    let phantom = generate(&spec).map_err(|e| e.to_string())?;
    let pred = perturb(&phantom, &Perturbation::DropLesion { lesion: 1 }, &spec).map_err(|e| e.to_string())?;
    let got = evaluate_case(&phantom.gt, &pred, &spec.label_map, &EvalConfig::default()).map_err(|e| e.to_string())?;
    for m in &got {
        ensure!(m.gt_lesions == 2, "{}: {} lesions", m.region, m.gt_lesions);
        ensure!(m.lesionwise_dice == 0.5, "{}: dice {}", m.region, m.lesionwise_dice);
    }
    Ok("ET, TC, WT lesion-wise dice = 0.5 exactly".into())
}

fn criterion_8_statistics() -> Outcome {
    let mut worst_p = 0.0f64;
    for n in [5usize, 20, 100] {
        for k in -9..=9 {
            let r = k as f64 / 10.0;
            let got = pearson_p_value(r, n);
            let want = common::pearson_p_quadrature(r, n);
            ensure!((got - want).abs() <= 1e-6, "r={r}, n={n}: {got} vs {want}");
            worst_p = worst_p.max((got - want).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_s = 0.0f64;
    for _ in 0..500 {
        let n = rng.random_range(2..80);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let s = summarize(&v).map_err(|e| e.to_string())?;
        let o = common::sort_summary(&v);
        let got = [s.mean, s.std.unwrap_or(f64::NAN), s.median, s.q1, s.q3, s.min, s.max];
        for (a, b) in got.iter().zip(o) {
            ensure!((a - b).abs() <= 1e-12, "summary {got:?} vs oracle {o:?}");
            worst_s = worst_s.max((a - b).abs());
        }
    }
    Ok(format!("p-value max |diff| {worst_p:.1e} (57 points); summary max |diff| {worst_s:.1e} (500 samples)"))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let code = main_with_args(std::iter::once("lesionwise").chain(args.iter().copied()));
    if code == 0 {
        Ok(())
    } else {
        Err(format!("`{}` exited with {code}", args.join(" ")))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, String> {
    std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn criterion_9_determinism_and_speed() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let cohort = root.join("cohort");
    let c = cohort.to_str().unwrap();
    run_cli(&[
        "synth", "--out", c, "--cases", "20", "--seed", "9", "--perturb", "identity", "--perturb", "dilate:1",
        "--perturb", "erode:1", "--perturb", "drop:0", "--perturb", "translate:1,0,-1",
    ])?;
    let manifest = cohort.join("manifest.json");
    let m = manifest.to_str().unwrap();
    let (one, eight) = (root.join("j1"), root.join("j8"));
    run_cli(&["evaluate", "--manifest", m, "--jobs", "1", "--out", one.to_str().unwrap()])?;
    run_cli(&["evaluate", "--manifest", m, "--jobs", "8", "--out", eight.to_str().unwrap()])?;
    for file in ["metrics.csv", "metrics.json"] {
        ensure!(read(&one.join(file))? == read(&eight.join(file))?, "{file} differs between 1 and 8 jobs");
    }
    let loaded = CohortManifest::load(&manifest).map_err(|e| e.to_string())?;
    let n_cases = loaded.cases.iter().filter(|c: &&ManifestCase| !c.predictions.is_empty()).count();

    let spec = PhantomSpec {
        dims: [240, 240, 155],
        lesion_count: (3, 3),
        lesion_radius: (12.0, 24.0),
        seed: 21,
        ..PhantomSpec::default()
    };
    let phantom = generate(&spec).map_err(|e| e.to_string())?;
    let pred = perturb(&phantom, &Perturbation::Translate { offset: [2, -1, 1] }, &spec).map_err(|e| e.to_string())?;
    let start = Instant::now();
    evaluate_case(&phantom.gt, &pred, &spec.label_map, &EvalConfig::default()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "240x240x155 case took {secs:.2} s");
    Ok(format!("{n_cases}-case cohort byte-identical at 1 and 8 jobs; 240x240x155 case in {secs:.2} s"))
}

/// Not gated: runs only when a manifest of real cases is supplied.
fn criterion_10_external_abutment() -> Outcome {
    let Ok(path) = std::env::var("LESIONWISE_ABUTMENT_MANIFEST") else {
        return Ok("SKIPPED (set LESIONWISE_ABUTMENT_MANIFEST to a cohort manifest to run); reference: 90.3% of cases abut, mean 628.7, median 394 voxels, R^2 0.190, p 0.002".into());
    };
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let code = main_with_args(["lesionwise", "abutment", "--manifest", &path, "--skip-missing", "--out", out.path().to_str().unwrap()]);
    let text = std::fs::read_to_string(out.path().join("abutment.json")).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(format!(
        "exit {code}; summary {}; correlation r^2 {} (reference: 90.3%, 628.7, 394, R^2 0.190)",
        v["summary"], v["correlation"]["linear"]["r_squared"]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 lesion-wise oracle equivalence", criterion_1_oracle_equivalence),
        ("2 FP/FN penalty semantics", criterion_2_penalties),
        ("3 worked ranking example", criterion_3_worked_ranking),
        ("4 lesion identification rules", criterion_4_lesion_rules),
        ("5 HD95 exactness", criterion_5_hd_exactness),
        ("6 metric invariants", criterion_6_invariants),
        ("7 constructed 0.5 cluster", criterion_7_half_cluster),
        ("8 statistics", criterion_8_statistics),
        ("9 determinism and throughput", criterion_9_determinism_and_speed),
        ("10 external abutment check (not gated)", criterion_10_external_abutment),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  criterion {name} [{secs:.2} s]: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name} [{secs:.2} s]: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
