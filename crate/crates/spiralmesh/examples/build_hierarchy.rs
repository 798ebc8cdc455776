//! Mesh hierarchy: decimate an icosphere through three 4x steps, then show
//! that downsampling keeps exact vertex subsets and that constant fields
//! survive a full down/up round-trip.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --example build_hierarchy
//! ```

use spiralmesh::error::Result;
use spiralmesh::hierarchy::MeshHierarchy;
use spiralmesh::shapes::icosphere;

fn main() -> Result<()> {
    let template = icosphere(3, 100.0);
    let hierarchy = MeshHierarchy::build(&template, &[4, 4, 4])?;

    let sizes: Vec<usize> = (0..hierarchy.level_count())
        .map(|i| hierarchy.level_mesh(i).vertex_count())
        .collect();
    println!("level vertex counts: {sizes:?}");

    // Constant per-vertex fields are fixed points of both directions.
    let step = hierarchy.step(0);
    let field = vec![[1.5, -2.0, 0.25]; step.parent_count()]
        .into_iter()
        .flatten()
        .collect::<Vec<f64>>();
    let down = step.downsample_features(&field, 3)?;
    let up = step.upsample_features(&down, 3)?;
    assert!(down.chunks(3).all(|c| c == [1.5, -2.0, 0.25]));
    assert!(up.chunks(3).all(|c| c == [1.5, -2.0, 0.25]));
    println!("constant field round-trips exactly through step 0");

    // Kept vertices carry their features through unchanged.
    let parent_positions = hierarchy.level_mesh(0).positions_flat();
    let down = step.downsample_features(&parent_positions, 3)?;
    for (child, &parent) in step.kept_vertices.iter().enumerate() {
        let c = &down[child * 3..child * 3 + 3];
        let p = &parent_positions[parent as usize * 3..parent as usize * 3 + 3];
        assert_eq!(c, p);
    }
    println!(
        "all {} kept vertices preserve their coordinates",
        step.kept_vertices.len()
    );

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("hierarchy.bin");
    hierarchy.save(&path)?;
    let loaded = MeshHierarchy::load(&path, &template)?;
    assert_eq!(loaded.level_count(), hierarchy.level_count());
    println!("hierarchy cache round-trips from {}", path.display());
    Ok(())
}
