//! Experiment configuration, result persistence, and the end-to-end
//! pipeline behind the `mofla` command line.

pub mod config;
pub mod fmt;
pub mod pipeline;
pub mod store;

pub use config::ExperimentConfig;
pub use pipeline::Pipeline;
pub use store::ResultStore;
