//! Continual learning with masked softmax.
//!
//! `maskcl` is a small, dependency-light training engine for class-incremental
//! continual learning on fully-connected networks. Its core idea is that a
//! softmax restricted to the classes of the current task leaves every other
//! classifier untouched: their probabilities are exactly zero, so are their
//! logit gradients, so plain SGD never moves their weights.
//!
//! On top of that objective the crate builds
//!
//! - masked experience replay (`ER_MR`) and masked dark experience replay
//!   (`DERPP_MR`), where the current-task loss is masked and the replay loss
//!   is not;
//! - a zero-memory method (`CFSGMF`) that synthesizes pseudo-samples of
//!   earlier classes with a class-wise fast gradient step on current inputs;
//! - a Split-MNIST benchmark harness with class-IL and task-IL evaluation,
//!   average accuracy and average forgetting.
//!
//! # Layout
//!
//! | module | contents |
//! |---|---|
//! | [`numerics`] | [`Matrix`], seeded [`Rng`] |
//! | [`model`] | MLP, analytic backprop, SGD |
//! | [`objective`] | softmax, masked softmax, cross-entropy, MSE |
//! | [`perturb`] | FGSM and class-wise fast gradient (CFGM) |
//! | [`memory`] | reservoir replay buffer |
//! | [`continual`] | task streams, methods, training loop, metrics |
//! | [`data`] | MNIST IDX reader/writer, Gaussian blobs |
//! | [`cli`] | experiment runner and result files |
//!
//! A guided tour with runnable snippets lives in the `book/` directory of the
//! repository.
//!
//! # Quick start
//!
//! ```
//! use maskcl::continual::{run_stream, Method, MethodConfig, TaskStream};
//! use maskcl::data::{gen_blobs, BlobSpec};
//!
//! let spec = BlobSpec::separated(4, 8, 0.05, 200, 1);
//! let (train, test) = gen_blobs(&spec).unwrap();
//! let stream = TaskStream::natural(&train, &test, 2).unwrap();
//!
//! let mut cfg = MethodConfig::defaults(Method::SgdMr, 0);
//! cfg.hidden = vec![16];
//! let out = run_stream(&stream, &cfg, 7).unwrap();
//! assert!(out.task_il.metrics().avg_accuracy > 0.95);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continual;
pub mod data;
mod error;
pub mod memory;
pub mod model;
pub mod numerics;
pub mod objective;
pub mod perturb;

#[cfg(doctest)]
mod book;

pub use error::{Error, Result};
pub use numerics::{Matrix, Rng};
