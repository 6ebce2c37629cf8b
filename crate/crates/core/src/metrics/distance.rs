//! Surface extraction and percentile Hausdorff distances.
//!
//! Directed surface distances are read off an exact Euclidean distance
//! transform (lower envelope of parabolas, one pass per axis) computed on the
//! bounding box of both surfaces. Distances are between voxel centers scaled
//! by the voxel spacing.

use crate::error::{Error, Result};
use crate::volume::{BinaryMask, Geometry};

const FACE_OFFSETS: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Set voxels with at least one face neighbor unset or outside the grid.
pub fn surface_voxels(mask: &BinaryMask) -> BinaryMask {
    let g = *mask.geometry();
    let bits = mask.bits();
    let out = (0..bits.len())
        .map(|i| {
            bits[i] && {
                let c = g.coords(i);
                FACE_OFFSETS
                    .iter()
                    .any(|&off| g.offset(c, off).map_or(true, |j| !bits[j]))
            }
        })
        .collect();
    BinaryMask::new(g, out).expect("geometry matches")
}

/// Axis-aligned sub-grid of a geometry.
struct Crop {
    origin: [usize; 3],
    dims: [usize; 3],
}

impl Crop {
    fn covering(geometry: &Geometry, sets: &[&[usize]]) -> Option<Self> {
        let (min, max) =
            crate::volume::bounding_box(geometry, sets.iter().flat_map(|s| s.iter().copied()))?;
        Some(Self {
            origin: min,
            dims: [max[0] - min[0] + 1, max[1] - min[1] + 1, max[2] - min[2] + 1],
        })
    }

    fn len(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    fn local(&self, geometry: &Geometry, index: usize) -> usize {
        let c = geometry.coords(index);
        (c[0] - self.origin[0])
            + self.dims[0] * ((c[1] - self.origin[1]) + self.dims[1] * (c[2] - self.origin[2]))
    }

    fn bitmap(&self, geometry: &Geometry, set: &[usize]) -> Vec<bool> {
        let mut bits = vec![false; self.len()];
        for &i in set {
            bits[self.local(geometry, i)] = true;
        }
        bits
    }

    /// Local indices of surface voxels. Neighbors outside the crop are unset:
    /// the crop covers the whole set, so they are unset or off-grid anyway.
    fn surface(&self, bits: &[bool]) -> Vec<usize> {
        let [nx, ny, nz] = self.dims;
        let mut out = Vec::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let i = x + nx * (y + ny * z);
                    if !bits[i] {
                        continue;
                    }
                    let boundary = x == 0
                        || x + 1 == nx
                        || y == 0
                        || y + 1 == ny
                        || z == 0
                        || z + 1 == nz
                        || !bits[i - 1]
                        || !bits[i + 1]
                        || !bits[i - nx]
                        || !bits[i + nx]
                        || !bits[i - nx * ny]
                        || !bits[i + nx * ny];
                    if boundary {
                        out.push(i);
                    }
                }
            }
        }
        out
    }
}

/// Exact squared Euclidean distance transform to the `targets` of a grid.
fn squared_edt(dims: [usize; 3], spacing: [f64; 3], targets: &[usize]) -> Vec<f64> {
    let n: usize = dims.iter().product();
    let mut f = vec![f64::INFINITY; n];
    for &t in targets {
        f[t] = 0.0;
    }
    let [nx, ny, nz] = dims;
    let longest = nx.max(ny).max(nz);
    let mut line = vec![0f64; longest];
    let mut out = vec![0f64; longest];
    let mut sites = vec![0usize; longest];
    let mut bounds = vec![0f64; longest + 1];

    for axis in 0..3 {
        let (len, stride) = match axis {
            0 => (nx, 1),
            1 => (ny, nx),
            _ => (nz, nx * ny),
        };
        if len == 0 {
            continue;
        }
        let w = spacing[axis];
        for start in 0..n {
            // `start` must be the first voxel of a line along `axis`.
            let coord = (start / stride) % len;
            if coord != 0 {
                continue;
            }
            for k in 0..len {
                line[k] = f[start + k * stride];
            }
            envelope_1d(&line[..len], &mut out[..len], &mut sites, &mut bounds, w);
            for k in 0..len {
                f[start + k * stride] = out[k];
            }
        }
    }
    f
}

/// 1D squared distance transform of sampled function `f` on positions `k * w`.
fn envelope_1d(f: &[f64], d: &mut [f64], sites: &mut [usize], bounds: &mut [f64], w: f64) {
    let len = f.len();
    let mut k: isize = -1;
    for q in 0..len {
        if !f[q].is_finite() {
            continue;
        }
        let xq = q as f64 * w;
        loop {
            if k < 0 {
                k = 0;
                sites[0] = q;
                bounds[0] = f64::NEG_INFINITY;
                bounds[1] = f64::INFINITY;
                break;
            }
            let v = sites[k as usize];
            let xv = v as f64 * w;
            let s = ((f[q] + xq * xq) - (f[v] + xv * xv)) / (2.0 * (xq - xv));
            if s <= bounds[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            sites[k as usize] = q;
            bounds[k as usize] = s;
            bounds[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        d.fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for (q, slot) in d.iter_mut().enumerate() {
        let xq = q as f64 * w;
        while bounds[j + 1] < xq {
            j += 1;
        }
        let v = sites[j];
        let dx = xq - v as f64 * w;
        *slot = dx * dx + f[v];
    }
}

/// Linear interpolation between closest ranks; `q` in `[0, 1]`.
pub fn percentile(values: &mut [f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty sample");
    values.sort_unstable_by(f64::total_cmp);
    let rank = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    values[lo] + (values[hi] - values[lo]) * (rank - lo as f64)
}

/// Distances from every surface voxel of `a` to the surface of `b` and vice
/// versa, for two non-empty voxel index sets of one grid.
pub fn directed_surface_distances(
    geometry: &Geometry,
    a: &[usize],
    b: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.is_empty() {
        return Err(Error::EmptyMask("a"));
    }
    if b.is_empty() {
        return Err(Error::EmptyMask("b"));
    }
    let crop = Crop::covering(geometry, &[a, b]).expect("non-empty sets");
    let surface_a = crop.surface(&crop.bitmap(geometry, a));
    let surface_b = crop.surface(&crop.bitmap(geometry, b));
    let spacing = geometry.spacing();
    let to_b = squared_edt(crop.dims, spacing, &surface_b);
    let to_a = squared_edt(crop.dims, spacing, &surface_a);
    let ab = surface_a.iter().map(|&i| to_b[i].sqrt()).collect();
    let ba = surface_b.iter().map(|&i| to_a[i].sqrt()).collect();
    Ok((ab, ba))
}

/// Symmetric percentile Hausdorff distance between two voxel index sets:
/// the larger of the two directed `q`-percentiles.
pub fn hd_percentile_sets(geometry: &Geometry, a: &[usize], b: &[usize], q: f64) -> Result<f64> {
    let (mut ab, mut ba) = directed_surface_distances(geometry, a, b)?;
    Ok(percentile(&mut ab, q).max(percentile(&mut ba, q)))
}

/// Symmetric percentile Hausdorff distance between two aligned masks.
pub fn hd_percentile(a: &BinaryMask, b: &BinaryMask, q: f64) -> Result<f64> {
    a.geometry().ensure_aligned(b.geometry())?;
    let ai: Vec<usize> = a.indices().collect();
    let bi: Vec<usize> = b.indices().collect();
    hd_percentile_sets(a.geometry(), &ai, &bi, q)
}

/// 95th-percentile Hausdorff distance in mm.
pub fn hd95(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    hd_percentile(a, b, 0.95)
}

/// Classic (100th percentile) Hausdorff distance between surfaces.
pub fn hausdorff(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    hd_percentile(a, b, 1.0)
}
