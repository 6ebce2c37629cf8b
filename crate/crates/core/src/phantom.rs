//! Seeded synthetic tumor phantoms.
//!
//! A phantom is an ellipsoidal brain with layered lesions: an enhancing core,
//! a non-enhancing shell and an SNFH halo. A calcified lesion has no
//! enhancing core. Lesions are kept far enough apart that their radius-1
//! dilations never touch, so each stays a distinct lesion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lesion::dilate;
use crate::volume::{BinaryMask, Geometry, IntensityVolume, LabelMap, LabelVolume};

const PLACEMENT_ATTEMPTS: usize = 200;

/// Relative layer thickness, core outwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositionWeights {
    pub enhancing: f64,
    pub nonenhancing: f64,
    pub snfh: f64,
}

impl Default for CompositionWeights {
    fn default() -> Self {
        Self {
            enhancing: 0.45,
            nonenhancing: 0.25,
            snfh: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Inclusive range of lesion counts.
    pub lesion_count: (usize, usize),
    /// Inclusive range of outer lesion radii, voxels.
    pub lesion_radius: (f64, f64),
    pub composition: CompositionWeights,
    pub calcified_probability: f64,
    /// Brain ellipsoid semi-axes as fractions of the half-dims.
    pub brain_axes: [f64; 3],
    /// Minimum empty Chebyshev gap between lesions.
    pub min_gap: usize,
    pub label_map: LabelMap,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [48, 48, 40],
            spacing: [1.0; 3],
            lesion_count: (1, 3),
            lesion_radius: (3.0, 6.0),
            composition: CompositionWeights::default(),
            calcified_probability: 0.1,
            brain_axes: [0.85, 0.85, 0.85],
            min_gap: 4,
            label_map: LabelMap::default(),
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        Geometry::new(self.dims, self.spacing)?;
        self.label_map.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.lesion_count.0 > self.lesion_count.1 {
            return bad("lesion_count range is empty");
        }
        if !(self.lesion_radius.0 > 0.0 && self.lesion_radius.0 <= self.lesion_radius.1) {
            return bad("lesion_radius range must be positive and nonempty");
        }
        if !(0.0..=1.0).contains(&self.calcified_probability) {
            return bad("calcified_probability outside [0, 1]");
        }
        let w = self.composition;
        if [w.enhancing, w.nonenhancing, w.snfh].iter().any(|&v| v < 0.0) || w.enhancing + w.nonenhancing + w.snfh <= 0.0 {
            return bad("composition weights must be non-negative with a positive sum");
        }
        if self.brain_axes.iter().any(|&a| !(a > 0.0)) {
            return bad("brain_axes must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedLesion {
    pub center: [usize; 3],
    pub radii: [f64; 3],
    pub calcified: bool,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub gt: LabelVolume,
    pub brain: IntensityVolume,
    pub lesions: Vec<PlacedLesion>,
    /// Lesion index + 1 per voxel, 0 for background.
    pub lesion_index: Vec<u32>,
    pub label_map: LabelMap,
}

/// Chebyshev half-extent of an ellipsoid on the grid.
fn extent(radii: [f64; 3]) -> [usize; 3] {
    radii.map(|r| r.floor() as usize)
}

fn boxes_clear(a_center: [usize; 3], a_ext: [usize; 3], b_center: [usize; 3], b_ext: [usize; 3], gap: usize) -> bool {
    (0..3).any(|k| {
        let d = a_center[k].abs_diff(b_center[k]);
        d > a_ext[k] + b_ext[k] + gap
    })
}

fn paint_lesion(
    volume: &mut LabelVolume,
    index: Option<(&mut [u32], u32)>,
    lesion: &PlacedLesion,
    weights: CompositionWeights,
    map: &LabelMap,
) {
    let g = *volume.geometry();
    let total = weights.enhancing + weights.nonenhancing + weights.snfh;
    let core = weights.enhancing / total;
    let shell = (weights.enhancing + weights.nonenhancing) / total;
    let ext = extent(lesion.radii);
    let mut index = index;
    for z in lesion.center[2] - ext[2]..=lesion.center[2] + ext[2] {
        for y in lesion.center[1] - ext[1]..=lesion.center[1] + ext[1] {
            for x in lesion.center[0] - ext[0]..=lesion.center[0] + ext[0] {
                let p = [x, y, z];
                let rho = (0..3)
                    .map(|k| {
                        let d = (p[k] as f64 - lesion.center[k] as f64) / lesion.radii[k];
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt();
                if rho > 1.0 {
                    continue;
                }
                let code = if rho <= core {
                    if lesion.calcified {
                        map.nonenhancing
                    } else {
                        map.enhancing
                    }
                } else if rho <= shell {
                    map.nonenhancing
                } else {
                    map.snfh
                };
                let i = g.index(x, y, z);
                volume.labels_mut()[i] = code;
                if let Some((ids, id)) = index.as_mut() {
                    ids[i] = *id;
                }
            }
        }
    }
}

/// Picks a lesion placement clear of `existing`; the center lies inside the
/// brain ellipsoid and the whole lesion inside the grid.
fn place(
    rng: &mut ChaCha8Rng,
    spec: &PhantomSpec,
    existing: &[([usize; 3], [usize; 3])],
    radius: (f64, f64),
    lesion: usize,
) -> Result<([usize; 3], [f64; 3])> {
    let dims = spec.dims;
    for _ in 0..PLACEMENT_ATTEMPTS {
        let r = if radius.0 == radius.1 { radius.0 } else { rng.random_range(radius.0..=radius.1) };
        let radii = [0, 1, 2].map(|_| (r * rng.random_range(0.8..=1.2)).max(1.0));
        let ext = extent(radii);
        if (0..3).any(|k| 2 * ext[k] + 1 > dims[k]) {
            continue;
        }
        let center = [0, 1, 2].map(|k| rng.random_range(ext[k]..dims[k] - ext[k]));
        let in_brain = (0..3)
            .map(|k| {
                let half = dims[k] as f64 / 2.0;
                let d = (center[k] as f64 + 0.5 - half) / (half * spec.brain_axes[k]);
                d * d
            })
            .sum::<f64>()
            <= 1.0;
        if !in_brain {
            continue;
        }
        if existing.iter().all(|&(c, e)| boxes_clear(center, ext, c, e, spec.min_gap)) {
            return Ok((center, radii));
        }
    }
    Err(Error::Placement {
        lesion,
        attempts: PLACEMENT_ATTEMPTS,
    })
}

fn brain_volume(rng: &mut ChaCha8Rng, spec: &PhantomSpec, geometry: Geometry) -> IntensityVolume {
    let [nx, ny, nz] = spec.dims;
    let mut values = vec![0.0; geometry.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = [x, y, z];
                let inside = (0..3)
                    .map(|k| {
                        let half = spec.dims[k] as f64 / 2.0;
                        let d = (p[k] as f64 + 0.5 - half) / (half * spec.brain_axes[k]);
                        d * d
                    })
                    .sum::<f64>()
                    <= 1.0;
                if inside {
                    values[geometry.index(x, y, z)] = 100.0 + rng.random_range(0.0..50.0f64).floor();
                }
            }
        }
    }
    IntensityVolume::new(geometry, values).expect("geometry matches")
}

pub fn generate(spec: &PhantomSpec) -> Result<Phantom> {
    spec.validate()?;
    let geometry = Geometry::new(spec.dims, spec.spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = rng.random_range(spec.lesion_count.0..=spec.lesion_count.1);
    let mut gt = LabelVolume::zeros(geometry);
    let mut lesion_index = vec![0u32; geometry.len()];
    let mut lesions = Vec::with_capacity(n);
    let mut boxes = Vec::with_capacity(n);
    for k in 0..n {
        let (center, radii) = place(&mut rng, spec, &boxes, spec.lesion_radius, k)?;
        let calcified = rng.random_bool(spec.calcified_probability);
        let lesion = PlacedLesion {
            center,
            radii,
            calcified,
        };
        paint_lesion(
            &mut gt,
            Some((&mut lesion_index, k as u32 + 1)),
            &lesion,
            spec.composition,
            &spec.label_map,
        );
        boxes.push((center, extent(radii)));
        lesions.push(lesion);
    }
    let brain = brain_volume(&mut rng, spec, geometry);
    Ok(Phantom {
        gt,
        brain,
        lesions,
        lesion_index,
        label_map: spec.label_map,
    })
}

/// Deterministic edits of a phantom's ground truth into a mock prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Perturbation {
    Identity,
    /// Grow the tumor outward by `radius` voxels as SNFH.
    Dilate { radius: usize },
    /// Peel `radius` voxels off the tumor surface.
    Erode { radius: usize },
    Translate { offset: [i64; 3] },
    /// Remove lesion `lesion` (0-based placement order).
    DropLesion { lesion: usize },
    /// Add a layered lesion of the given radius away from every real lesion.
    AddFpBlob { radius: f64, seed: u64 },
}

impl Perturbation {
    /// Short name used for synthetic team ids.
    pub fn label(&self) -> String {
        match self {
            Perturbation::Identity => "identity".into(),
            Perturbation::Dilate { radius } => format!("dilate{radius}"),
            Perturbation::Erode { radius } => format!("erode{radius}"),
            Perturbation::Translate { offset } => format!("shift{}_{}_{}", offset[0], offset[1], offset[2]),
            Perturbation::DropLesion { lesion } => format!("drop{lesion}"),
            Perturbation::AddFpBlob { .. } => "fpblob".into(),
        }
    }
}

fn wt_mask(volume: &LabelVolume) -> BinaryMask {
    let bits = volume.labels().iter().map(|&c| c != 0).collect();
    BinaryMask::new(*volume.geometry(), bits).expect("geometry matches")
}

pub fn perturb(phantom: &Phantom, perturbation: &Perturbation, spec: &PhantomSpec) -> Result<LabelVolume> {
    let gt = &phantom.gt;
    let g = *gt.geometry();
    let map = phantom.label_map;
    Ok(match perturbation {
        Perturbation::Identity => gt.clone(),
        Perturbation::Dilate { radius } => {
            let grown = dilate(&wt_mask(gt), (*radius).max(1));
            let mut out = gt.clone();
            for (code, &set) in out.labels_mut().iter_mut().zip(grown.bits()) {
                if set && *code == 0 {
                    *code = map.snfh;
                }
            }
            out
        }
        Perturbation::Erode { radius } => {
            let wt = wt_mask(gt);
            let background = BinaryMask::new(g, wt.bits().iter().map(|&b| !b).collect())?;
            let near_background = dilate(&background, (*radius).max(1));
            let mut out = gt.clone();
            for (code, &near) in out.labels_mut().iter_mut().zip(near_background.bits()) {
                if near {
                    *code = 0;
                }
            }
            out
        }
        Perturbation::Translate { offset } => {
            let mut out = LabelVolume::zeros(g);
            for (i, &code) in gt.labels().iter().enumerate() {
                if code != 0 {
                    if let Some(j) = g.offset(g.coords(i), *offset) {
                        out.labels_mut()[j] = code;
                    }
                }
            }
            out
        }
        Perturbation::DropLesion { lesion } => {
            let target = *lesion as u32 + 1;
            let mut out = gt.clone();
            for (code, &id) in out.labels_mut().iter_mut().zip(&phantom.lesion_index) {
                if id == target {
                    *code = 0;
                }
            }
            out
        }
        Perturbation::AddFpBlob { radius, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let boxes: Vec<_> = phantom.lesions.iter().map(|l| (l.center, extent(l.radii))).collect();
            let (center, radii) = place(&mut rng, spec, &boxes, (*radius, *radius), phantom.lesions.len())?;
            let blob = PlacedLesion {
                center,
                radii,
                calcified: false,
            };
            let mut out = gt.clone();
            paint_lesion(&mut out, None, &blob, spec.composition, &map);
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{compose_region, Region};

    #[test]
    fn same_seed_same_phantom() {
        let spec = PhantomSpec {
            seed: 11,
            ..PhantomSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.gt, b.gt);
        assert_eq!(a.brain, b.brain);
        let c = generate(&PhantomSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.gt, c.gt);
    }

    #[test]
    fn zero_lesions_is_background() {
        let spec = PhantomSpec {
            lesion_count: (0, 0),
            ..PhantomSpec::default()
        };
        let p = generate(&spec).unwrap();
        assert!(p.gt.labels().iter().all(|&c| c == 0));
        assert!(p.brain.values().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn calcified_lesions_have_no_enhancing_voxels() {
        let spec = PhantomSpec {
            calcified_probability: 1.0,
            ..PhantomSpec::default()
        };
        let p = generate(&spec).unwrap();
        assert!(!p.lesions.is_empty());
        assert!(compose_region(&p.gt, &p.label_map, Region::Et).is_empty());
        assert!(!compose_region(&p.gt, &p.label_map, Region::Tc).is_empty());
    }

    #[test]
    fn impossible_placement_errors() {
        let spec = PhantomSpec {
            dims: [12, 12, 12],
            lesion_count: (6, 6),
            lesion_radius: (4.0, 4.0),
            ..PhantomSpec::default()
        };
        assert!(matches!(generate(&spec), Err(Error::Placement { .. })));
    }

    #[test]
    fn perturbations_change_what_they_should() {
        let spec = PhantomSpec {
            lesion_count: (2, 2),
            calcified_probability: 0.0,
            seed: 3,
            ..PhantomSpec::default()
        };
        let p = generate(&spec).unwrap();
        let wt = |v: &LabelVolume| v.labels().iter().filter(|&&c| c != 0).count();
        let base = wt(&p.gt);
        assert_eq!(perturb(&p, &Perturbation::Identity, &spec).unwrap(), p.gt);
        assert!(wt(&perturb(&p, &Perturbation::Dilate { radius: 1 }, &spec).unwrap()) > base);
        assert!(wt(&perturb(&p, &Perturbation::Erode { radius: 1 }, &spec).unwrap()) < base);
        let dropped = perturb(&p, &Perturbation::DropLesion { lesion: 0 }, &spec).unwrap();
        assert_eq!(wt(&dropped), base - p.lesion_index.iter().filter(|&&i| i == 1).count());
        let fp = perturb(&p, &Perturbation::AddFpBlob { radius: 3.0, seed: 9 }, &spec).unwrap();
        assert!(wt(&fp) > base);
    }
}
