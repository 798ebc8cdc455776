//! Shape models: the hierarchical autoencoder, the PCA baseline, feature
//! normalization, and checkpoint serialization.

pub mod autoencoder;
pub mod checkpoint;
pub mod normalize;
pub mod pca;

pub use autoencoder::{stack_gather_plans, Model, ModelSpec, Operator, Param};
pub use checkpoint::Checkpoint;
pub use normalize::NormStats;
pub use pca::PcaModel;
