//! Surrogate-assisted bi-objective optimisation with temporal fitness
//! landscape analysis.
//!
//! The crate bundles the full experimental machine:
//!
//! * [`problems`] — bi-objective benchmark problems built from pairwise
//!   combinations of shifted base functions, Latin hypercube sampling, and
//!   ideal/Nadir estimation;
//! * [`surrogates`] — five quick-to-evaluate fitness models over an archive
//!   of truly evaluated solutions;
//! * [`moea`] — reference-vector guided selection and variation operators;
//! * [`saea`] — the surrogate-assisted optimisation loop and the temporal
//!   vicinity sampling at checkpoints;
//! * [`features`] — 28 multi-objective landscape features over a sample;
//! * [`metrics`] — objective normalization and bi-objective hypervolume;
//! * [`stats`] — nonparametric tests, rank correlation, and corrections;
//! * [`perfmodel`] — random-forest regression, recursive feature
//!   elimination, and bootstrapped model evaluation;
//! * [`experiment`] — configuration, orchestration, and CSV persistence
//!   behind the `mofla` command-line tool.

pub mod error;
pub mod experiment;
pub mod features;
pub mod metrics;
pub mod moea;
pub mod perfmodel;
pub mod problems;
pub mod saea;
pub mod seeding;
pub mod stats;
pub mod surrogates;

pub use error::{Error, Result};
