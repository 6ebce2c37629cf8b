//! Geometry-aware label, intensity and binary volumes.
//!
//! All grids are stored x-fastest (`index = x + nx * (y + ny * z)`), the same
//! order NIfTI uses on disk, so a linear scan visits voxels in lexicographic
//! `(z, y, x)` order.

mod nifti;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use nifti::{load_intensity, load_labels, load_nifti, write_intensity, write_labels, NiftiVolume};

/// Grid dimensions and voxel spacing (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    dims: [usize; 3],
    spacing: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGeometry(format!("dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "spacing must be finite and > 0, got {spacing:?}"
            )));
        }
        Ok(Self { dims, spacing })
    }

    /// 1 mm isotropic grid.
    pub fn isotropic(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, [1.0; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing.iter().product()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Index of `(x, y, z) + offset`, or `None` when the result leaves the grid.
    #[inline]
    pub fn offset(&self, coords: [usize; 3], offset: [i64; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for axis in 0..3 {
            let c = coords[axis] as i64 + offset[axis];
            if c < 0 || c >= self.dims[axis] as i64 {
                return None;
            }
            out[axis] = c as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    pub fn is_aligned(&self, other: &Geometry) -> bool {
        self == other
    }

    pub fn ensure_aligned(&self, other: &Geometry) -> Result<()> {
        if self.is_aligned(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.dims;
        let [sx, sy, sz] = self.spacing;
        write!(f, "{x}x{y}x{z} @ {sx}x{sy}x{sz} mm")
    }
}

/// Compartment codes of a tumor label volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    pub enhancing: u16,
    pub nonenhancing: u16,
    pub snfh: u16,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            enhancing: 3,
            nonenhancing: 1,
            snfh: 2,
        }
    }
}

impl LabelMap {
    pub fn new(enhancing: u16, nonenhancing: u16, snfh: u16) -> Result<Self> {
        let map = Self {
            enhancing,
            nonenhancing,
            snfh,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let codes = self.codes();
        if codes.contains(&0) {
            return Err(Error::InvalidLabelMap(format!("codes must be nonzero: {codes:?}")));
        }
        if codes[0] == codes[1] || codes[0] == codes[2] || codes[1] == codes[2] {
            return Err(Error::InvalidLabelMap(format!("codes must be distinct: {codes:?}")));
        }
        Ok(())
    }

    /// `[enhancing, nonenhancing, snfh]`
    pub fn codes(&self) -> [u16; 3] {
        [self.enhancing, self.nonenhancing, self.snfh]
    }

    pub fn region_contains(&self, region: Region, code: u16) -> bool {
        match region {
            Region::Et => code == self.enhancing,
            Region::Tc => code == self.enhancing || code == self.nonenhancing,
            Region::Wt => code == self.enhancing || code == self.nonenhancing || code == self.snfh,
        }
    }
}

impl FromStr for LabelMap {
    type Err = Error;

    /// Parses `E,N,S` (enhancing, nonenhancing, snfh).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidLabelMap(format!("expected E,N,S, got `{s}`")));
        }
        let mut codes = [0u16; 3];
        for (slot, part) in codes.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::InvalidLabelMap(format!("bad code `{part}`")))?;
        }
        Self::new(codes[0], codes[1], codes[2])
    }
}

/// Evaluated region of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "ET")]
    Et,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "WT")]
    Wt,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Et, Region::Tc, Region::Wt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Et => "ET",
            Region::Tc => "TC",
            Region::Wt => "WT",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ET" => Ok(Region::Et),
            "TC" => Ok(Region::Tc),
            "WT" => Ok(Region::Wt),
            _ => Err(Error::InvalidConfig(format!("unknown region `{s}`"))),
        }
    }
}

/// Dense grid of compartment codes, 0 = background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    geometry: Geometry,
    labels: Vec<u16>,
}

impl LabelVolume {
    pub fn new(geometry: Geometry, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} labels for a {geometry} grid",
                labels.len()
            )));
        }
        Ok(Self { geometry, labels })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Self {
            labels: vec![0; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.labels[self.geometry.index(x, y, z)]
    }

    pub fn set(&mut self, x: usize, y: usize, z: usize, code: u16) {
        let i = self.geometry.index(x, y, z);
        self.labels[i] = code;
    }

    /// Nonzero codes that the label map does not know about.
    pub fn unknown_codes(&self, map: &LabelMap) -> BTreeSet<u16> {
        let known = map.codes();
        let mut seen = [false; 1 << 16];
        let mut out = BTreeSet::new();
        for &code in &self.labels {
            if code != 0 && !seen[code as usize] {
                seen[code as usize] = true;
                if !known.contains(&code) {
                    out.insert(code);
                }
            }
        }
        out
    }

    pub fn count(&self, code: u16) -> usize {
        self.labels.iter().filter(|&&c| c == code).count()
    }
}

/// Dense grid of real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVolume {
    geometry: Geometry,
    values: Vec<f64>,
}

impl IntensityVolume {
    pub fn new(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} intensities for a {geometry} grid",
                values.len()
            )));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Dense boolean grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geometry: Geometry,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geometry: Geometry, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} bits for a {geometry} grid",
                bits.len()
            )));
        }
        Ok(Self { geometry, bits })
    }

    pub fn empty(geometry: Geometry) -> Self {
        Self {
            bits: vec![false; geometry.len()],
            geometry,
        }
    }

    pub fn from_indices(geometry: Geometry, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(geometry);
        for i in indices {
            mask.bits[i] = true;
        }
        mask
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.bits[self.geometry.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: bool) {
        let i = self.geometry.index(x, y, z);
        self.bits[i] = value;
    }

    pub fn voxel_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        self.geometry.ensure_aligned(&other.geometry)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    /// `self \ other`
    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geometry.ensure_aligned(&other.geometry)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && !b).collect();
        Ok(BinaryMask {
            geometry: self.geometry,
            bits,
        })
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geometry.ensure_aligned(&other.geometry)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Ok(BinaryMask {
            geometry: self.geometry,
            bits,
        })
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.geometry == other.geometry && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Inclusive bounding box `(min, max)` of the set voxels.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        bounding_box(&self.geometry, self.indices())
    }
}

pub(crate) fn bounding_box(
    geometry: &Geometry,
    indices: impl IntoIterator<Item = usize>,
) -> Option<([usize; 3], [usize; 3])> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for i in indices {
        any = true;
        let c = geometry.coords(i);
        for axis in 0..3 {
            lo[axis] = lo[axis].min(c[axis]);
            hi[axis] = hi[axis].max(c[axis]);
        }
    }
    any.then_some((lo, hi))
}

/// Binary mask of one region. Codes outside the map count as background and
/// are logged once per call.
pub fn compose_region(volume: &LabelVolume, map: &LabelMap, region: Region) -> BinaryMask {
    let mut lut = [false; 1 << 16];
    for code in map.codes() {
        lut[code as usize] = map.region_contains(region, code);
    }
    let unknown = volume.unknown_codes(map);
    if !unknown.is_empty() {
        log::warn!("label codes {unknown:?} are not in the label map; treated as background");
    }
    BinaryMask {
        geometry: volume.geometry,
        bits: volume.labels.iter().map(|&c| lut[c as usize]).collect(),
    }
}

/// Brain extent of a skull-stripped channel: every voxel with nonzero intensity.
pub fn derive_brain_mask(volume: &IntensityVolume) -> BinaryMask {
    BinaryMask {
        geometry: volume.geometry,
        bits: volume.values.iter().map(|v| v.abs() > 0.0).collect(),
    }
}

/// Union of the brain masks of several aligned channels.
pub fn derive_brain_mask_union(volumes: &[IntensityVolume]) -> Result<BinaryMask> {
    let (first, rest) = volumes
        .split_first()
        .ok_or(Error::EmptyInput("no intensity channels"))?;
    let mut mask = derive_brain_mask(first);
    for v in rest {
        mask = mask.union(&derive_brain_mask(v))?;
    }
    Ok(mask)
}
