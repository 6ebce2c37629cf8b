//! Lesion identification: cube dilation, 26-connected labeling and the
//! small-lesion filter.

use serde::{Deserialize, Serialize};

use crate::volume::{bounding_box, BinaryMask, Geometry};

/// Inclusive voxel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lesion {
    pub id: u32,
    pub voxel_count: usize,
    pub bbox: BoundingBox,
}

/// A lesion removed by [`filter_small_lesions`]; keeps its voxels so callers
/// can exclude them elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedLesion {
    pub voxel_count: usize,
    pub bbox: BoundingBox,
    pub voxels: Vec<usize>,
}

/// Per-voxel lesion ids (0 = none), numbered `1..=L` by first voxel in scan
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct LesionField {
    geometry: Geometry,
    ids: Vec<u32>,
    lesions: Vec<Lesion>,
    removed: Vec<RemovedLesion>,
}

impl LesionField {
    /// Builds a field from raw ids, renumbering them `1..=L` in order of
    /// first appearance. Ids that never appear are dropped.
    pub fn from_raw_ids(geometry: Geometry, raw: &[u32]) -> Self {
        assert_eq!(raw.len(), geometry.len(), "id grid does not match geometry");
        let max_raw = raw.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![0u32; max_raw + 1];
        let mut next = 0u32;
        let mut ids = vec![0u32; raw.len()];
        let mut lesions: Vec<Lesion> = Vec::new();
        for (i, &r) in raw.iter().enumerate() {
            if r == 0 {
                continue;
            }
            let slot = &mut remap[r as usize];
            if *slot == 0 {
                next += 1;
                *slot = next;
                let c = geometry.coords(i);
                lesions.push(Lesion {
                    id: next,
                    voxel_count: 0,
                    bbox: BoundingBox { min: c, max: c },
                });
            }
            let id = *slot;
            ids[i] = id;
            let lesion = &mut lesions[id as usize - 1];
            lesion.voxel_count += 1;
            let c = geometry.coords(i);
            for axis in 0..3 {
                lesion.bbox.min[axis] = lesion.bbox.min[axis].min(c[axis]);
                lesion.bbox.max[axis] = lesion.bbox.max[axis].max(c[axis]);
            }
        }
        Self {
            geometry,
            ids,
            lesions,
            removed: Vec::new(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn lesions(&self) -> &[Lesion] {
        &self.lesions
    }

    /// Number of lesions `L`.
    pub fn len(&self) -> usize {
        self.lesions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lesions.is_empty()
    }

    pub fn removed(&self) -> &[RemovedLesion] {
        &self.removed
    }

    /// Voxel indices of every lesion; entry `k` belongs to id `k + 1`.
    pub fn voxel_lists(&self) -> Vec<Vec<usize>> {
        let mut lists: Vec<Vec<usize>> = self
            .lesions
            .iter()
            .map(|l| Vec::with_capacity(l.voxel_count))
            .collect();
        for (i, &id) in self.ids.iter().enumerate() {
            if id != 0 {
                lists[id as usize - 1].push(i);
            }
        }
        lists
    }

    pub fn lesion_mask(&self, id: u32) -> BinaryMask {
        let bits = self.ids.iter().map(|&v| v == id && id != 0).collect();
        BinaryMask::new(self.geometry, bits).expect("geometry matches")
    }

    /// Voxels belonging to any retained lesion.
    pub fn foreground(&self) -> BinaryMask {
        let bits = self.ids.iter().map(|&v| v != 0).collect();
        BinaryMask::new(self.geometry, bits).expect("geometry matches")
    }

    /// Voxels of lesions dropped by the small-lesion filter.
    pub fn removed_mask(&self) -> BinaryMask {
        BinaryMask::from_indices(
            self.geometry,
            self.removed.iter().flat_map(|r| r.voxels.iter().copied()),
        )
    }
}

/// Sets every voxel within Chebyshev distance `radius` of a set voxel
/// (the 3x3x3 cube applied `radius` times). Out-of-bounds counts as unset.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    assert!(radius >= 1, "dilation radius must be >= 1");
    let geometry = *mask.geometry();
    let [nx, ny, nz] = geometry.dims();
    let mut cur: Vec<bool> = mask.bits().to_vec();
    let mut next = vec![false; cur.len()];
    // The cube is separable into three 1D windows of width 2r+1.
    for (stride, len, lines) in [
        (1, nx, lines_along(&geometry, 0)),
        (nx, ny, lines_along(&geometry, 1)),
        (nx * ny, nz, lines_along(&geometry, 2)),
    ] {
        if len == 1 {
            continue;
        }
        for start in lines {
            dilate_line(&cur, &mut next, start, stride, len, radius);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    BinaryMask::new(geometry, cur).expect("geometry matches")
}

/// Start indices of every 1D line along `axis`.
fn lines_along(geometry: &Geometry, axis: usize) -> Vec<usize> {
    let [nx, ny, nz] = geometry.dims();
    let mut out = Vec::new();
    match axis {
        0 => {
            for z in 0..nz {
                for y in 0..ny {
                    out.push(geometry.index(0, y, z));
                }
            }
        }
        1 => {
            for z in 0..nz {
                for x in 0..nx {
                    out.push(geometry.index(x, 0, z));
                }
            }
        }
        _ => {
            for y in 0..ny {
                for x in 0..nx {
                    out.push(geometry.index(x, y, 0));
                }
            }
        }
    }
    out
}

fn dilate_line(src: &[bool], dst: &mut [bool], start: usize, stride: usize, len: usize, radius: usize) {
    // Distance (in steps) since the last set voxel seen, forward then backward.
    let mut since = usize::MAX;
    for k in 0..len {
        let i = start + k * stride;
        since = if src[i] { 0 } else { since.saturating_add(1) };
        dst[i] = since <= radius;
    }
    since = usize::MAX;
    for k in (0..len).rev() {
        let i = start + k * stride;
        since = if src[i] { 0 } else { since.saturating_add(1) };
        dst[i] |= since <= radius;
    }
}

/// Previously scanned 26-neighbors of a voxel in x-fastest order.
const BACKWARD_26: [[i64; 3]; 13] = [
    [-1, -1, -1],
    [0, -1, -1],
    [1, -1, -1],
    [-1, 0, -1],
    [0, 0, -1],
    [1, 0, -1],
    [-1, 1, -1],
    [0, 1, -1],
    [1, 1, -1],
    [-1, -1, 0],
    [0, -1, 0],
    [1, -1, 0],
    [-1, 0, 0],
];

fn find(parent: &mut [u32], mut a: u32) -> u32 {
    while parent[a as usize] != a {
        let up = parent[parent[a as usize] as usize];
        parent[a as usize] = up;
        a = up;
    }
    a
}

/// Raw component ids (not yet in first-voxel order) via two-pass union-find.
fn label_components_raw(mask: &BinaryMask) -> Vec<u32> {
    let geometry = mask.geometry();
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut parent: Vec<u32> = vec![0];
    for i in 0..bits.len() {
        if !bits[i] {
            continue;
        }
        let c = geometry.coords(i);
        let mut current = 0u32;
        for off in BACKWARD_26 {
            let Some(j) = geometry.offset(c, off) else { continue };
            let l = labels[j];
            if l == 0 {
                continue;
            }
            let root = find(&mut parent, l);
            if current == 0 {
                current = root;
            } else if root != current {
                let (lo, hi) = if root < current { (root, current) } else { (current, root) };
                parent[hi as usize] = lo;
                current = lo;
            }
        }
        if current == 0 {
            current = parent.len() as u32;
            parent.push(current);
        }
        labels[i] = current;
    }
    for l in labels.iter_mut() {
        if *l != 0 {
            *l = find(&mut parent, *l);
        }
    }
    labels
}

/// 26-connected components, numbered by first voxel in lexicographic
/// `(z, y, x)` order.
pub fn connected_components_26(mask: &BinaryMask) -> LesionField {
    let raw = label_components_raw(mask);
    LesionField::from_raw_ids(*mask.geometry(), &raw)
}

/// Distinct lesions of a ground-truth mask: components of the radius-1
/// dilation, restricted back to the original voxels.
pub fn identify_gt_lesions(mask: &BinaryMask) -> LesionField {
    let dilated = dilate(mask, 1);
    let mut raw = label_components_raw(&dilated);
    for (id, &set) in raw.iter_mut().zip(mask.bits()) {
        if !set {
            *id = 0;
        }
    }
    LesionField::from_raw_ids(*mask.geometry(), &raw)
}

/// Lesions of `mask` grouped by the lesions of an enclosing `parent` field
/// (e.g. ET voxels grouped by WT lesion). Voxels outside the parent get no id.
pub fn lesions_within(parent: &LesionField, mask: &BinaryMask) -> LesionField {
    assert_eq!(parent.geometry(), mask.geometry(), "misaligned parent field");
    let raw: Vec<u32> = parent
        .ids()
        .iter()
        .zip(mask.bits())
        .map(|(&id, &set)| if set { id } else { 0 })
        .collect();
    if raw.iter().zip(mask.bits()).any(|(&id, &set)| set && id == 0) {
        log::warn!("region voxels outside every parent lesion are left unassigned");
    }
    LesionField::from_raw_ids(*mask.geometry(), &raw)
}

/// Drops lesions with fewer than `min_voxels` voxels and renumbers the rest.
/// Dropped lesions are appended to [`LesionField::removed`].
pub fn filter_small_lesions(field: &LesionField, min_voxels: usize) -> LesionField {
    let min_voxels = min_voxels.max(1);
    if field.lesions.iter().all(|l| l.voxel_count >= min_voxels) {
        return field.clone();
    }
    let lists = field.voxel_lists();
    let mut removed = field.removed.clone();
    let mut raw = field.ids.clone();
    for (lesion, voxels) in field.lesions.iter().zip(lists) {
        if lesion.voxel_count < min_voxels {
            for &v in &voxels {
                raw[v] = 0;
            }
            removed.push(RemovedLesion {
                voxel_count: lesion.voxel_count,
                bbox: lesion.bbox,
                voxels,
            });
        }
    }
    let mut out = LesionField::from_raw_ids(field.geometry, &raw);
    out.removed = removed;
    out
}

/// Bounding box of a set of voxel indices.
pub fn bbox_of(geometry: &Geometry, voxels: &[usize]) -> Option<BoundingBox> {
    bounding_box(geometry, voxels.iter().copied()).map(|(min, max)| BoundingBox { min, max })
}
