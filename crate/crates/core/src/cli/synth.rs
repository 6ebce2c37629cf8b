use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::manifest::{CohortManifest, ManifestCase};
use crate::error::{Error, Result};
use crate::phantom::{generate, perturb, Perturbation, PhantomSpec};
use crate::volume::{write_intensity, write_labels};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub cases: usize,
    /// Case `k` uses seed `seed + k`.
    pub seed: u64,
    /// One synthetic team per perturbation.
    pub perturbations: Vec<Perturbation>,
}

/// Parses `identity`, `dilate:R`, `erode:R`, `translate:X,Y,Z`, `drop:K` or
/// `fpblob:R`. An `fpblob` takes its placement seed from the case.
pub fn parse_perturbation(s: &str) -> std::result::Result<Perturbation, String> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = |what: &str| -> std::result::Result<usize, String> {
        arg.trim().parse().map_err(|_| format!("{kind} needs {what}, got `{arg}`"))
    };
    Ok(match kind.trim() {
        "identity" => Perturbation::Identity,
        "dilate" => Perturbation::Dilate { radius: num("a radius")? },
        "erode" => Perturbation::Erode { radius: num("a radius")? },
        "drop" => Perturbation::DropLesion { lesion: num("a lesion index")? },
        "translate" => {
            let v: Vec<i64> = arg
                .split(',')
                .map(|p| p.trim().parse().map_err(|_| format!("bad offset `{arg}`")))
                .collect::<std::result::Result<_, _>>()?;
            let offset: [i64; 3] = v.try_into().map_err(|_| format!("translate needs X,Y,Z, got `{arg}`"))?;
            Perturbation::Translate { offset }
        }
        "fpblob" => Perturbation::AddFpBlob {
            radius: arg.trim().parse().map_err(|_| format!("fpblob needs a radius, got `{arg}`"))?,
            seed: 0,
        },
        other => return Err(format!("unknown perturbation `{other}`")),
    })
}

fn with_case_seed(p: &Perturbation, seed: u64) -> Perturbation {
    match p {
        Perturbation::AddFpBlob { radius, .. } => Perturbation::AddFpBlob { radius: *radius, seed },
        other => other.clone(),
    }
}

fn relative(base: &Path, path: &Path) -> PathBuf {
    path.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf())
}

/// Writes `case-NNN/seg.nii.gz`, `case-NNN/t1c.nii.gz`, one
/// `<team>/case-NNN.nii.gz` per perturbation and `manifest.json` under `out`.
pub fn synthesize_cohort(out: &Path, spec: &PhantomSpec, opts: &SynthOptions) -> Result<CohortManifest> {
    spec.validate()?;
    let mut teams: BTreeMap<String, &Perturbation> = BTreeMap::new();
    for p in &opts.perturbations {
        if teams.insert(p.label(), p).is_some() {
            return Err(Error::InvalidConfig(format!("perturbation `{}` listed twice", p.label())));
        }
    }
    std::fs::create_dir_all(out).map_err(|e| Error::file(out, e))?;
    let width = opts.cases.saturating_sub(1).to_string().len().max(3);
    let mut cases = Vec::with_capacity(opts.cases);
    for k in 0..opts.cases {
        let id = format!("case-{k:0width$}");
        let seed = opts.seed.wrapping_add(k as u64);
        let case_spec = PhantomSpec { seed, ..spec.clone() };
        let phantom = generate(&case_spec)?;
        let case_dir = out.join(&id);
        std::fs::create_dir_all(&case_dir).map_err(|e| Error::file(&case_dir, e))?;
        let gt_path = case_dir.join("seg.nii.gz");
        write_labels(&gt_path, &phantom.gt)?;
        let t1c_path = case_dir.join("t1c.nii.gz");
        write_intensity(&t1c_path, &phantom.brain)?;

        let mut predictions = BTreeMap::new();
        let mut applied = BTreeMap::new();
        for (team, p) in &teams {
            let p = with_case_seed(p, seed);
            let pred = perturb(&phantom, &p, &case_spec)?;
            let dir = out.join(team);
            std::fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
            let path = dir.join(format!("{id}.nii.gz"));
            write_labels(&path, &pred)?;
            predictions.insert(team.clone(), relative(out, &path));
            applied.insert(team.clone(), p);
        }
        cases.push(ManifestCase {
            id,
            gt: relative(out, &gt_path),
            predictions,
            intensity: BTreeMap::from([("t1c".to_string(), relative(out, &t1c_path))]),
            provenance: Some(json!({
                "seed": seed,
                "lesions": phantom.lesions,
                "perturbations": applied,
            })),
        });
    }
    let manifest = CohortManifest {
        label_map: Some(format!(
            "{},{},{}",
            spec.label_map.enhancing, spec.label_map.nonenhancing, spec.label_map.snfh
        )),
        config: None,
        cases,
    };
    manifest.write(&out.join("manifest.json"))?;
    log::info!("wrote {} phantom cases to {}", opts.cases, out.display());
    Ok(manifest)
}
