//! Surface-distance percentiles between two spheres on an anisotropic grid.
//!
//! cargo run --example hd95_distance

use lesionwise::metrics::{dice, hausdorff, hd95, hd_percentile, surface_voxels};
use lesionwise::volume::{BinaryMask, Geometry};

fn sphere(g: Geometry, center: [f64; 3], radius_mm: f64) -> BinaryMask {
    let s = g.spacing();
    let ids = (0..g.len()).filter(|&i| {
        let c = g.coords(i);
        let d2: f64 = (0..3).map(|k| ((c[k] as f64 - center[k]) * s[k]).powi(2)).sum();
        d2 <= radius_mm * radius_mm
    });
    BinaryMask::from_indices(g, ids)
}

fn main() -> lesionwise::Result<()> {
    let g = Geometry::new([48, 48, 24], [1.0, 1.0, 2.0])?;
    let a = sphere(g, [24.0, 24.0, 12.0], 10.0);
    let b = sphere(g, [27.0, 24.0, 12.0], 12.0);

    println!("voxels: a {} b {}", a.voxel_count(), b.voxel_count());
    println!("surface voxels: a {} b {}", surface_voxels(&a).voxel_count(), surface_voxels(&b).voxel_count());
    println!("dice      {:.4}", dice(&a, &b)?);
    for q in [0.5, 0.75, 0.9] {
        println!("hd{:<7} {:.3} mm", (q * 100.0) as u32, hd_percentile(&a, &b, q)?);
    }
    println!("hd95      {:.3} mm", hd95(&a, &b)?);
    println!("hausdorff {:.3} mm", hausdorff(&a, &b)?);
    Ok(())
}
