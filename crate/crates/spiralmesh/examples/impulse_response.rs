//! Impulse responses: poke one vertex and see which outputs move. Spiral
//! kernels respond on the gather footprint (here the closed 1-ring) with
//! distinct per-neighbor weights; a parameter-matched Chebyshev kernel of
//! degree K-1 spreads isotropically over the (K-1)-hop ball.
//!
//! Run with:
//! ```not_rust
//! cargo run -q --example impulse_response
//! ```

use spiralmesh::error::Result;
use spiralmesh::harness::config::RunConfig;
use spiralmesh::harness::evaluate::heatmap_colors;
use spiralmesh::harness::impulse::{impulse_response, support};
use spiralmesh::harness::preprocess::ensure_caches;
use spiralmesh::mesh::PlyEncoding;
use spiralmesh::shapes::icosphere;
use spiralmesh::topology::Topology;

fn main() -> Result<()> {
    let template = icosphere(2, 1.0);
    let topo = Topology::build(&template)?;
    let vertex = 17u32;
    let ring = topo.neighbors(vertex).len();
    let dir = tempfile::tempdir().expect("tempdir");

    for operator in ["spiral", "cheb"] {
        let mut cfg = RunConfig::default();
        cfg.set("dataset", "in-memory")?;
        cfg.set("output", "in-memory")?;
        cfg.set("operator", operator)?;
        cfg.set("encoder_widths", "8,8")?;
        cfg.set("pooling", "4,4")?;
        cfg.set("latent", "4")?;
        cfg.finalize()?;

        let bundle = ensure_caches(&template, &dir.path().join(operator), &cfg)?;
        let mut model = bundle.build_model(&cfg)?;
        model.init_params(11);

        let response = impulse_response(&model, 0, vertex)?;
        let active = support(&response, 1e-12);
        println!(
            "{operator:>6}: impulse at vertex {vertex} (ring size {ring}) activates {} vertices",
            active.len()
        );

        let path = dir.path().join(format!("impulse_{operator}.ply"));
        let colors = heatmap_colors(&response);
        template.save_ply(&path, PlyEncoding::BinaryLittleEndian, Some(&colors))?;
        println!("        heatmap written to {}", path.display());
    }

    println!("spiral support = 1 + ring; chebyshev support = the multi-hop ball");
    Ok(())
}
