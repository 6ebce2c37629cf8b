//! Writes a phantom to NIfTI-1 and reads it back.
//!
//! cargo run --example nifti_roundtrip -- [OUT_DIR]

use std::path::PathBuf;

use lesionwise::phantom::{generate, PhantomSpec};
use lesionwise::volume::{load_intensity, load_labels, write_intensity, write_labels};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir)?;
    let spec = PhantomSpec {
        spacing: [0.9, 0.9, 1.2],
        seed: 5,
        ..PhantomSpec::default()
    };
    let phantom = generate(&spec)?;

    let seg = dir.join("phantom-seg.nii.gz");
    let t1c = dir.join("phantom-t1c.nii");
    write_labels(&seg, &phantom.gt)?;
    write_intensity(&t1c, &phantom.brain)?;

    let labels = load_labels(&seg)?;
    let image = load_intensity(&t1c)?;
    println!("{}: dims {:?} spacing {:?}", seg.display(), labels.geometry().dims(), labels.geometry().spacing());
    for code in spec.label_map.codes() {
        println!("  label {code}: {} voxels", labels.count(code));
    }
    // Spacing is stored as float32, so compare voxels rather than geometry.
    println!("labels identical: {}", labels.labels() == phantom.gt.labels());
    println!("{}: intensities identical: {}", t1c.display(), image.values() == phantom.brain.values());
    Ok(())
}
