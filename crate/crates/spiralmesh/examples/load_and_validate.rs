//! Mesh round-trip and validation: build an icosphere, save it as OBJ and
//! binary PLY, reload both, and confirm the topology hash survives.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --example load_and_validate
//! ```

use spiralmesh::error::Result;
use spiralmesh::mesh::{Mesh, PlyEncoding};
use spiralmesh::shapes::icosphere;
use spiralmesh::topology::Topology;

fn main() -> Result<()> {
    let sphere = icosphere(3, 100.0);
    println!(
        "icosphere: {} vertices, {} faces",
        sphere.vertex_count(),
        sphere.face_count()
    );

    let topo = Topology::build(&sphere)?;
    let boundary = (0..sphere.vertex_count() as u32)
        .filter(|&v| topo.is_boundary(v))
        .count();
    println!("manifold check passed; {boundary} boundary vertices (closed surface)");

    let dir = tempfile::tempdir().expect("tempdir");
    let obj = dir.path().join("sphere.obj");
    let ply = dir.path().join("sphere.ply");
    sphere.save_obj(&obj)?;
    sphere.save_ply(&ply, PlyEncoding::BinaryLittleEndian, None)?;

    let from_obj = Mesh::load(&obj)?;
    let from_ply = Mesh::load(&ply)?;
    assert_eq!(from_obj.topology_hash(), sphere.topology_hash());
    assert_eq!(from_ply.topology_hash(), sphere.topology_hash());
    println!(
        "OBJ and PLY round-trips preserve topology hash {:016x}",
        sphere.topology_hash()
    );
    Ok(())
}
