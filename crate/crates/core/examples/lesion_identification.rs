//! Shows how nearby voxels merge into one lesion and how the size filter
//! drops small ones.
//!
//! cargo run --example lesion_identification

use lesionwise::lesion::{connected_components_26, filter_small_lesions, identify_gt_lesions};
use lesionwise::volume::{BinaryMask, Geometry};

fn main() -> lesionwise::Result<()> {
    let g = Geometry::isotropic([30, 20, 20])?;
    let mut mask = BinaryMask::empty(g);
    // A 4x4x4 cube and a second one three voxels away: one lesion after dilation.
    for (x0, y0) in [(2, 2), (9, 2)] {
        for x in x0..x0 + 4 {
            for y in y0..y0 + 4 {
                for z in 2..6 {
                    mask.set(x, y, z, true);
                }
            }
        }
    }
    // A lone 2x2x2 speck far away.
    for x in 24..26 {
        for y in 14..16 {
            for z in 14..16 {
                mask.set(x, y, z, true);
            }
        }
    }

    let plain = connected_components_26(&mask);
    let lesions = identify_gt_lesions(&mask);
    println!("26-connected components: {}", plain.len());
    println!("lesions after 1-voxel dilation: {}", lesions.len());
    for l in lesions.voxel_lists() {
        println!("  lesion of {} voxels", l.len());
    }

    let kept = filter_small_lesions(&lesions, 50);
    println!("kept with min 50 voxels: {}", kept.len());
    println!("removed voxels remembered: {}", kept.removed_mask().voxel_count());
    Ok(())
}
