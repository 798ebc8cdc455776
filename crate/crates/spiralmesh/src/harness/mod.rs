//! End-to-end run orchestration: configuration, cache preprocessing,
//! training, evaluation, latent-space tools, impulse probes, ablation grids.

pub mod ablate;
pub mod config;
pub mod evaluate;
pub mod impulse;
pub mod latent;
pub mod preprocess;
pub mod train;

pub use ablate::{run_ablation, AblationAxis, AblationReport};
pub use config::RunConfig;
pub use evaluate::{evaluate, Evaluation};
pub use impulse::impulse_response;
pub use preprocess::{ensure_caches, CacheBundle};
pub use train::{train, train_with, TrainOutcome};
