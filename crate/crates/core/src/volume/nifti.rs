//! Minimal NIfTI-1 reader and writer.
//!
//! Reads single-frame 3D volumes of type uint8, int16, int32, float32 or
//! float64, optionally gzip-compressed, in either byte order. Both the
//! single-file (`n+1`) and the header/image pair (`ni1`) layouts are handled.
//! Orientation fields are not interpreted; volumes are returned in stored order.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Geometry, IntensityVolume, LabelVolume};
use crate::error::{Error, Result};

const HEADER_SIZE: usize = 348;
const SINGLE_FILE_OFFSET: usize = 352;
const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";
const LABEL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl DataType {
    fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            other => return Err(Error::Format(format!("unsupported datatype code {other}"))),
        })
    }

    fn code(self) -> i16 {
        match self {
            DataType::U8 => 2,
            DataType::I16 => 4,
            DataType::I32 => 8,
            DataType::F32 => 16,
            DataType::F64 => 64,
        }
    }

    fn size(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }
}

/// A loaded volume, either as labels or as intensities.
#[derive(Debug, Clone, PartialEq)]
pub enum NiftiVolume {
    Labels(LabelVolume),
    Intensity(IntensityVolume),
}

#[derive(Debug)]
struct Header {
    big_endian: bool,
    geometry: Geometry,
    datatype: DataType,
    vox_offset: usize,
    slope: f64,
    inter: f64,
    pair: bool,
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::file(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::Format(format!("{}: gzip: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::Format(format!("file is {} bytes, shorter than a header", bytes.len())));
    }
    let big_endian = if LittleEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        false
    } else if BigEndian::read_i32(&bytes[0..4]) == HEADER_SIZE as i32 {
        true
    } else {
        return Err(Error::Format("sizeof_hdr is not 348".into()));
    };
    let magic = &bytes[344..348];
    let pair = if magic == MAGIC_SINGLE {
        false
    } else if magic == MAGIC_PAIR {
        true
    } else {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    };

    let i16_at = |off: usize| {
        if big_endian {
            BigEndian::read_i16(&bytes[off..off + 2])
        } else {
            LittleEndian::read_i16(&bytes[off..off + 2])
        }
    };
    let f32_at = |off: usize| {
        if big_endian {
            BigEndian::read_f32(&bytes[off..off + 4])
        } else {
            LittleEndian::read_f32(&bytes[off..off + 4])
        }
    };

    let dim: Vec<i16> = (0..8).map(|k| i16_at(40 + 2 * k)).collect();
    let rank = dim[0];
    if !(1..=7).contains(&rank) {
        return Err(Error::Format(format!("dim[0] = {rank} out of range")));
    }
    if rank < 3 {
        return Err(Error::UnsupportedShape(format!("{rank}D volume")));
    }
    if (4..=rank as usize).any(|k| dim[k] > 1) {
        return Err(Error::UnsupportedShape(format!(
            "{rank}D volume with extra dims {:?}",
            &dim[4..=rank as usize]
        )));
    }
    let mut dims = [0usize; 3];
    for axis in 0..3 {
        let d = dim[axis + 1];
        if d < 1 {
            return Err(Error::Format(format!("dim[{}] = {d}", axis + 1)));
        }
        dims[axis] = d as usize;
    }
    let mut spacing = [0f64; 3];
    for axis in 0..3 {
        let p = f32_at(76 + 4 * (axis + 1)).abs() as f64;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Format(format!("pixdim[{}] = {p}", axis + 1)));
        }
        spacing[axis] = p;
    }
    let geometry = Geometry::new(dims, spacing)?;
    let datatype = DataType::from_code(i16_at(70))?;

    let vox_offset = f32_at(108);
    if !(vox_offset >= 0.0) || !vox_offset.is_finite() {
        return Err(Error::Format(format!("vox_offset = {vox_offset}")));
    }
    let vox_offset = if pair {
        vox_offset as usize
    } else {
        (vox_offset as usize).max(HEADER_SIZE)
    };

    let slope = f32_at(112) as f64;
    let inter = f32_at(116) as f64;
    let (slope, inter) = if slope == 0.0 || !slope.is_finite() {
        (1.0, 0.0)
    } else {
        (slope, if inter.is_finite() { inter } else { 0.0 })
    };

    Ok(Header {
        big_endian,
        geometry,
        datatype,
        vox_offset,
        slope,
        inter,
        pair,
    })
}

fn image_path_for(header_path: &Path) -> PathBuf {
    let name = header_path.to_string_lossy();
    if let Some(stem) = name.strip_suffix(".hdr.gz") {
        PathBuf::from(format!("{stem}.img.gz"))
    } else if let Some(stem) = name.strip_suffix(".hdr") {
        PathBuf::from(format!("{stem}.img"))
    } else {
        header_path.with_extension("img")
    }
}

fn decode_values(header: &Header, data: &[u8]) -> Result<Vec<f64>> {
    let n = header.geometry.len();
    let size = header.datatype.size();
    let end = header.vox_offset + n * size;
    if data.len() < end {
        return Err(Error::Format(format!(
            "data truncated: need {end} bytes, have {}",
            data.len()
        )));
    }
    let raw = &data[header.vox_offset..end];
    let mut out = Vec::with_capacity(n);
    macro_rules! decode {
        ($read:ident) => {
            if header.big_endian {
                out.extend(raw.chunks_exact(size).map(|c| BigEndian::$read(c) as f64));
            } else {
                out.extend(raw.chunks_exact(size).map(|c| LittleEndian::$read(c) as f64));
            }
        };
    }
    match header.datatype {
        DataType::U8 => out.extend(raw.iter().map(|&b| b as f64)),
        DataType::I16 => decode!(read_i16),
        DataType::I32 => decode!(read_i32),
        DataType::F32 => decode!(read_f32),
        DataType::F64 => decode!(read_f64),
    }
    if header.slope != 1.0 || header.inter != 0.0 {
        for v in &mut out {
            *v = *v * header.slope + header.inter;
        }
    }
    Ok(out)
}

fn read_values(path: &Path) -> Result<(Geometry, Vec<f64>)> {
    let bytes = read_all(path)?;
    let header = parse_header(&bytes)?;
    let values = if header.pair {
        let image = read_all(&image_path_for(path))?;
        decode_values(&header, &image)?
    } else {
        decode_values(&header, &bytes)?
    };
    Ok((header.geometry, values))
}

fn to_labels(geometry: Geometry, values: Vec<f64>) -> Result<LabelVolume> {
    let mut labels = Vec::with_capacity(values.len());
    for (index, v) in values.into_iter().enumerate() {
        let r = v.round();
        if !((v - r).abs() <= LABEL_TOLERANCE) || r < 0.0 || r > u16::MAX as f64 {
            return Err(Error::LabelDomain { index, value: v });
        }
        labels.push(r as u16);
    }
    LabelVolume::new(geometry, labels)
}

/// Loads a segmentation. Values must be non-negative integers within 1e-6.
pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVolume> {
    let (geometry, values) = read_values(path.as_ref())?;
    to_labels(geometry, values)
}

/// Loads an MRI channel with `scl_slope` / `scl_inter` applied.
pub fn load_intensity(path: impl AsRef<Path>) -> Result<IntensityVolume> {
    let (geometry, values) = read_values(path.as_ref())?;
    IntensityVolume::new(geometry, values)
}

/// Loads either flavor; `as_labels` selects the label-domain check.
pub fn load_nifti(path: impl AsRef<Path>, as_labels: bool) -> Result<NiftiVolume> {
    if as_labels {
        load_labels(path).map(NiftiVolume::Labels)
    } else {
        load_intensity(path).map(NiftiVolume::Intensity)
    }
}

fn encode_header(geometry: &Geometry, datatype: DataType) -> Vec<u8> {
    let mut h = vec![0u8; SINGLE_FILE_OFFSET];
    LittleEndian::write_i32(&mut h[0..4], HEADER_SIZE as i32);
    h[38] = b'r';
    let dims = geometry.dims();
    let spacing = geometry.spacing();
    LittleEndian::write_i16(&mut h[40..42], 3);
    for axis in 0..3 {
        let off = 42 + 2 * axis;
        LittleEndian::write_i16(&mut h[off..off + 2], dims[axis] as i16);
    }
    for k in 4..8 {
        LittleEndian::write_i16(&mut h[40 + 2 * k..42 + 2 * k], 1);
    }
    LittleEndian::write_i16(&mut h[70..72], datatype.code());
    LittleEndian::write_i16(&mut h[72..74], (datatype.size() * 8) as i16);
    LittleEndian::write_f32(&mut h[76..80], 1.0);
    for axis in 0..3 {
        let off = 80 + 4 * axis;
        LittleEndian::write_f32(&mut h[off..off + 4], spacing[axis] as f32);
    }
    LittleEndian::write_f32(&mut h[108..112], SINGLE_FILE_OFFSET as f32);
    LittleEndian::write_f32(&mut h[112..116], 1.0);
    // xyzt_units: mm
    h[123] = 2;
    // sform_code = scanner, diagonal affine
    LittleEndian::write_i16(&mut h[254..256], 1);
    for axis in 0..3 {
        let off = 280 + 16 * axis + 4 * axis;
        LittleEndian::write_f32(&mut h[off..off + 4], spacing[axis] as f32);
    }
    h[344..348].copy_from_slice(MAGIC_SINGLE);
    h
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path.to_string_lossy().ends_with(".gz");
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let io = |e| Error::file(path, e);
    if gz {
        let mut enc = GzEncoder::new(file, Compression::fast());
        enc.write_all(bytes).map_err(io)?;
        enc.finish().map_err(io)?;
    } else {
        let mut file = file;
        file.write_all(bytes).map_err(io)?;
    }
    Ok(())
}

/// Writes a label volume as uint8 when every code fits, int32 otherwise.
/// A `.gz` suffix selects gzip compression.
pub fn write_labels(path: impl AsRef<Path>, volume: &LabelVolume) -> Result<()> {
    let max = volume.labels().iter().copied().max().unwrap_or(0);
    let datatype = if max <= u8::MAX as u16 { DataType::U8 } else { DataType::I32 };
    let mut bytes = encode_header(volume.geometry(), datatype);
    bytes.reserve(volume.labels().len() * datatype.size());
    match datatype {
        DataType::U8 => bytes.extend(volume.labels().iter().map(|&c| c as u8)),
        _ => {
            for &c in volume.labels() {
                bytes.write_i32::<LittleEndian>(c as i32)?;
            }
        }
    }
    write_file(path.as_ref(), &bytes)
}

/// Writes an intensity volume as float64.
pub fn write_intensity(path: impl AsRef<Path>, volume: &IntensityVolume) -> Result<()> {
    let mut bytes = encode_header(volume.geometry(), DataType::F64);
    bytes.reserve(volume.values().len() * 8);
    for &v in volume.values() {
        bytes.write_f64::<LittleEndian>(v)?;
    }
    write_file(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header_bytes(dims: &[i16], datatype: i16) -> Vec<u8> {
        let g = Geometry::isotropic([1, 1, 1]).unwrap();
        let mut h = encode_header(&g, DataType::U8);
        LittleEndian::write_i16(&mut h[40..42], dims.len() as i16);
        for (k, &d) in dims.iter().enumerate() {
            LittleEndian::write_i16(&mut h[42 + 2 * k..44 + 2 * k], d);
        }
        LittleEndian::write_i16(&mut h[70..72], datatype);
        h
    }

    #[test]
    fn zero_volume_loads_as_background() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeros.nii");
        let mut bytes = header_bytes(&[4, 4, 4], 2);
        bytes.extend(std::iter::repeat(0u8).take(64));
        std::fs::write(&path, &bytes).unwrap();
        let v = load_labels(&path).unwrap();
        assert_eq!(v.geometry().dims(), [4, 4, 4]);
        assert_eq!(v.count(0), 64);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.nii");
        let mut bytes = header_bytes(&[2, 2, 2], 2);
        bytes[344..348].copy_from_slice(b"abcd");
        bytes.extend([0u8; 8]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_labels(&path), Err(Error::Format(_))));
    }

    #[test]
    fn four_d_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("4d.nii");
        let mut bytes = header_bytes(&[2, 2, 2, 3], 2);
        bytes.extend([0u8; 24]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_labels(&path), Err(Error::UnsupportedShape(_))));

        // A single trailing frame is still 3D.
        let path = dir.path().join("4d1.nii");
        let mut bytes = header_bytes(&[2, 2, 2, 1], 2);
        bytes.extend([0u8; 8]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_labels(&path).is_ok());
    }

    #[test]
    fn fractional_labels_rejected_but_intensities_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frac.nii");
        let mut bytes = header_bytes(&[2, 1, 1], 16);
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(1.5f32.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_labels(&path),
            Err(Error::LabelDomain { index: 1, .. })
        ));
        let v = load_intensity(&path).unwrap();
        assert_eq!(v.values(), &[1.0, 1.5]);
    }

    #[test]
    fn scaling_and_big_endian() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("be.nii");
        let mut h = vec![0u8; SINGLE_FILE_OFFSET];
        BigEndian::write_i32(&mut h[0..4], 348);
        for (k, d) in [3i16, 2, 1, 1].iter().enumerate() {
            BigEndian::write_i16(&mut h[40 + 2 * k..42 + 2 * k], *d);
        }
        BigEndian::write_i16(&mut h[70..72], 4);
        for k in 1..4 {
            BigEndian::write_f32(&mut h[76 + 4 * k..80 + 4 * k], 2.0);
        }
        BigEndian::write_f32(&mut h[108..112], 352.0);
        BigEndian::write_f32(&mut h[112..116], 0.5);
        BigEndian::write_f32(&mut h[116..120], 1.0);
        h[344..348].copy_from_slice(MAGIC_SINGLE);
        h.extend(4i16.to_be_bytes());
        h.extend(6i16.to_be_bytes());
        std::fs::write(&path, &h).unwrap();
        let v = load_labels(&path).unwrap();
        assert_eq!(v.labels(), &[3, 4]);
        assert_eq!(v.geometry().spacing(), [2.0; 3]);
    }

    #[test]
    fn gzip_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.nii.gz");
        let g = Geometry::new([3, 2, 2], [0.9, 1.0, 1.2]).unwrap();
        let v = LabelVolume::new(g, (0..12).map(|i| (i % 4) as u16).collect()).unwrap();
        write_labels(&path, &v).unwrap();
        let back = load_labels(&path).unwrap();
        assert_eq!(back.labels(), v.labels());
        assert_eq!(back.geometry().dims(), [3, 2, 2]);
        for (a, b) in back.geometry().spacing().iter().zip(g.spacing()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn header_image_pair() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("pair.hdr");
        let mut h = header_bytes(&[2, 2, 1], 2);
        h.truncate(HEADER_SIZE);
        LittleEndian::write_f32(&mut h[108..112], 0.0);
        h[344..348].copy_from_slice(MAGIC_PAIR);
        std::fs::write(&hdr, &h).unwrap();
        std::fs::write(dir.path().join("pair.img"), [0u8, 1, 2, 3]).unwrap();
        let v = load_labels(&hdr).unwrap();
        assert_eq!(v.labels(), &[0, 1, 2, 3]);
    }
}
