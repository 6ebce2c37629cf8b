//! Reference implementations used as test oracles.
//!
//! Everything here is deliberately naive: plain index arithmetic over flat
//! arrays, brute-force neighborhoods, breadth-first labeling, set counting
//! and all-pairs distances. None of it calls into the library's algorithms.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

impl Grid {
    pub fn cube(n: usize) -> Self {
        Self {
            dims: [n, n, n],
            spacing: [1.0; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn idx(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    pub fn xyz(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// In-grid 26-neighbors of `i`, or only the six face neighbors.
    pub fn neighbors(&self, i: usize, face_only: bool) -> Vec<usize> {
        let c = self.xyz(i);
        let mut out = Vec::new();
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let l1 = dx.abs() + dy.abs() + dz.abs();
                    if l1 == 0 || (face_only && l1 != 1) {
                        continue;
                    }
                    let p = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if (0..3).all(|a| p[a] >= 0 && (p[a] as usize) < self.dims[a]) {
                        out.push(self.idx(p[0] as usize, p[1] as usize, p[2] as usize));
                    }
                }
            }
        }
        out
    }

    /// Face neighbors that fall off the grid.
    pub fn missing_face_neighbors(&self, i: usize) -> usize {
        6 - self.neighbors(i, true).len()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.xyz(a), self.xyz(b));
        (0..3)
            .map(|k| {
                let d = (ca[k] as f64 - cb[k] as f64) * self.spacing[k];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub fn region_bits(labels: &[u16], codes: &[u16]) -> Vec<bool> {
    labels.iter().map(|c| *c != 0 && codes.contains(c)).collect()
}

/// 3x3x3 cube dilation by checking every neighbor of every voxel.
pub fn brute_dilate(grid: &Grid, bits: &[bool]) -> Vec<bool> {
    (0..bits.len())
        .map(|i| bits[i] || grid.neighbors(i, false).into_iter().any(|j| bits[j]))
        .collect()
}

/// 26-connected components by breadth-first search, numbered 1.. in the scan
/// order of their first voxel.
pub fn bfs_components(grid: &Grid, bits: &[bool]) -> (Vec<u32>, u32) {
    let mut labels = vec![0u32; bits.len()];
    let mut next = 0;
    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in grid.neighbors(v, false) {
                if bits[w] && labels[w] == 0 {
                    labels[w] = next;
                    queue.push_back(w);
                }
            }
        }
    }
    (labels, next)
}

/// Lesions of a mask: components of its dilation, restricted to the mask's
/// own voxels, ordered by their first voxel. Each lesion is a sorted list.
pub fn identify(grid: &Grid, bits: &[bool]) -> Vec<Vec<usize>> {
    let grown = brute_dilate(grid, bits);
    let (labels, n) = bfs_components(grid, &grown);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n as usize];
    for i in 0..bits.len() {
        if bits[i] {
            groups[labels[i] as usize - 1].push(i);
        }
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_by_key(|g| g[0]);
    groups
}

/// Set voxels with a face neighbor that is unset or off the grid.
pub fn surface(grid: &Grid, set: &BTreeSet<usize>) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&i| grid.missing_face_neighbors(i) > 0 || grid.neighbors(i, true).iter().any(|j| !set.contains(j)))
        .collect()
}

/// Sorted-sample percentile with linear interpolation between ranks.
pub fn sorted_percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < v.len() {
        v[lo] * (1.0 - frac) + v[lo + 1] * frac
    } else {
        v[lo]
    }
}

/// Percentile Hausdorff distance from all pairwise surface distances.
pub fn brute_hd(grid: &Grid, a: &BTreeSet<usize>, b: &BTreeSet<usize>, q: f64) -> f64 {
    let (sa, sb) = (surface(grid, a), surface(grid, b));
    let directed = |from: &[usize], to: &[usize]| -> Vec<f64> {
        from.iter()
            .map(|&i| to.iter().map(|&j| grid.distance(i, j)).fold(f64::INFINITY, f64::min))
            .collect()
    };
    let ab = sorted_percentile(&directed(&sa, &sb), q);
    let ba = sorted_percentile(&directed(&sb, &sa), q);
    ab.max(ba)
}

pub fn set_dice(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * a.intersection(b).count() as f64 / (a.len() + b.len()) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleScores {
    pub dice: f64,
    pub hd: f64,
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub min_voxels: usize,
    pub q: f64,
    pub dice_penalty: f64,
    pub hd_penalty: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            min_voxels: 50,
            q: 0.95,
            dice_penalty: 0.0,
            hd_penalty: 374.0,
        }
    }
}

/// Lesion-wise Dice and HD of one region mask pair.
///
/// Ground-truth lesions under `min_voxels` are discarded but still count as
/// ground truth when deciding whether a predicted lesion is a false positive.
pub fn lesionwise(grid: &Grid, gt: &[bool], pred: &[bool], cfg: &OracleConfig) -> OracleScores {
    let all_gt = identify(grid, gt);
    let pred_lesions: Vec<BTreeSet<usize>> = identify(grid, pred).into_iter().map(|l| l.into_iter().collect()).collect();
    let gt_voxels: BTreeSet<usize> = (0..gt.len()).filter(|&i| gt[i]).collect();
    let kept: Vec<BTreeSet<usize>> = all_gt
        .into_iter()
        .filter(|l| l.len() >= cfg.min_voxels)
        .map(|l| l.into_iter().collect())
        .collect();

    let (mut dice_sum, mut hd_sum) = (0.0, 0.0);
    let (mut tp, mut fn_) = (0, 0);
    for lesion in &kept {
        let hit: BTreeSet<usize> = pred_lesions
            .iter()
            .filter(|p| !p.is_disjoint(lesion))
            .flat_map(|p| p.iter().copied())
            .collect();
        if hit.is_empty() {
            fn_ += 1;
            dice_sum += cfg.dice_penalty;
            hd_sum += cfg.hd_penalty;
        } else {
            tp += 1;
            dice_sum += set_dice(lesion, &hit);
            hd_sum += brute_hd(grid, lesion, &hit, cfg.q);
        }
    }
    let fp = pred_lesions.iter().filter(|p| p.is_disjoint(&gt_voxels)).count();
    dice_sum += fp as f64 * cfg.dice_penalty;
    hd_sum += fp as f64 * cfg.hd_penalty;
    let denom = tp + fn_ + fp;
    if denom == 0 {
        return OracleScores {
            dice: 1.0,
            hd: 0.0,
            tp,
            fn_,
            fp,
        };
    }
    OracleScores {
        dice: dice_sum / denom as f64,
        hd: hd_sum / denom as f64,
        tp,
        fn_,
        fp,
    }
}

/// Two-tailed p-value of a Pearson r with n samples by numerically
/// integrating the Student t density (composite Simpson on [0, |t|]).
pub fn pearson_p_quadrature(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let t = r.abs() * (df / (1.0 - r * r)).sqrt();
    let norm = gamma_half_int(df + 1.0) / ((df * std::f64::consts::PI).sqrt() * gamma_half_int(df));
    let density = |x: f64| norm * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let steps = 200_000;
    let h = t / steps as f64;
    let mut s = density(0.0) + density(t);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * density(k as f64 * h);
    }
    let central = s * h / 3.0;
    (1.0 - 2.0 * central).clamp(0.0, 1.0)
}

/// Γ(m/2) for a positive integer m, from Γ(1)=1 and Γ(1/2)=√π.
fn gamma_half_int(m: f64) -> f64 {
    let m = m.round() as u64;
    let mut x = m as f64 / 2.0;
    let mut acc = 1.0;
    while x > 1.0 {
        x -= 1.0;
        acc *= x;
    }
    if (x - 0.5).abs() < 1e-12 {
        acc * std::f64::consts::PI.sqrt()
    } else {
        acc
    }
}

/// Mean, sample std, quartiles, min and max by sorting.
pub fn sort_summary(values: &[f64]) -> [f64; 7] {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    [
        mean,
        var.sqrt(),
        sorted_percentile(&v, 0.5),
        sorted_percentile(&v, 0.25),
        sorted_percentile(&v, 0.75),
        v[0],
        v[v.len() - 1],
    ]
}

/// Union of `count` random axis-aligned ellipsoids whose centers keep
/// `margin` voxels from every face.
pub fn random_blobs<R: rand::Rng>(rng: &mut R, grid: &Grid, count: usize, radius: (f64, f64), margin: usize) -> Vec<bool> {
    let mut bits = vec![false; grid.len()];
    for _ in 0..count {
        let c: Vec<f64> = (0..3)
            .map(|k| rng.random_range(margin..grid.dims[k] - margin) as f64)
            .collect();
        let r: Vec<f64> = (0..3).map(|_| rng.random_range(radius.0..=radius.1)).collect();
        for (i, b) in bits.iter_mut().enumerate() {
            let p = grid.xyz(i);
            let d: f64 = (0..3).map(|k| ((p[k] as f64 - c[k]) / r[k]).powi(2)).sum();
            if d <= 1.0 {
                *b = true;
            }
        }
    }
    bits
}

/// Sets `n` random voxels.
pub fn salt<R: rand::Rng>(rng: &mut R, bits: &mut [bool], n: usize) {
    for _ in 0..n {
        let i = rng.random_range(0..bits.len());
        bits[i] = true;
    }
}
