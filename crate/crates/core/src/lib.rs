//! Streaming importance sampling with a bounded-memory posterior.
//!
//! Particles drawn from a proposal are weighted by `q̃(x) / π(x)` and folded
//! into a kernel mean embedding. After every particle the embedding is pruned
//! by a destructive orthogonal matching pursuit that removes atoms while the
//! maximum mean discrepancy to the unpruned embedding stays within a budget.
//! The surviving atoms, with least-squares refit weights, form the particle
//! measure used for self-normalized estimates.
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`kernel`] | Gaussian RBF kernel, Gram matrices, jittered Cholesky solves |
//! | [`embedding`] | Kernel mean embeddings, RKHS inner products, MMD |
//! | [`compression`] | Weight refit, MMD-OMP pruning, subspace distance |
//! | [`sampling`] | Streaming uncompressed / compressed estimators |
//! | [`models`] | The three reference problems and density building blocks |
//!
//! ```
//! use ckis_core::models::direct_is_spec;
//! use ckis_core::sampling::{BudgetSchedule, EstimatorState};
//! use ckis_core::Kernel;
//!
//! let spec = direct_is_spec();
//! let kernel = Kernel::new(0.01, 1).unwrap();
//! let mut state = EstimatorState::compressed(kernel, BudgetSchedule::constant(3.0).unwrap(), 1);
//! for _ in 0..200 {
//!     state.step(&spec).unwrap();
//! }
//! assert!(state.model_order() <= 200);
//! let estimate = state.estimate(|x| spec.test_fn(x)).unwrap();
//! assert!(estimate.is_finite());
//! ```

// `!(x >= 0.0)` style checks are there so NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compression;
pub mod embedding;
mod error;
pub mod exec;
pub mod kernel;
pub mod models;
pub mod sampling;

pub use compression::{mmd_omp, refit, subspace_distance, CompressionReport, OmpOptions};
pub use embedding::Embedding;
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{GramMatrix, Kernel};
pub use sampling::{BudgetSchedule, EstimatorState, ParticleMeasure, ProblemSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A point in the particle space.
pub type Point = Vec<f64>;
