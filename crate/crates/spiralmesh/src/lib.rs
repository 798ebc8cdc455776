//! Spiral convolutional autoencoders for fixed-topology triangle meshes.
//!
//! The crate covers the full pipeline: mesh I/O and topology queries, spiral
//! patch orderings, quadric-error mesh hierarchies, a small reverse-mode
//! autodiff engine with spiral/spectral convolution layers, hierarchical
//! autoencoders, PCA and Chebyshev baselines, a synthetic bump-sphere
//! dataset, and the training/evaluation harness behind the `spiralmesh`
//! binary. Everything is deterministic: fixed seeds give bit-identical
//! tables, datasets, and training runs.

pub mod error;
pub mod geom;
pub mod dataset;
pub mod harness;
pub mod mesh;
pub mod models;
pub mod nn;
pub mod shapes;
pub mod hierarchy;
pub mod spiral;
pub mod topology;

pub use error::{Error, Result};
pub use mesh::{Mesh, PlyEncoding};
pub use spiral::{SpiralConfig, SpiralTable, PAD};
pub use topology::Topology;
