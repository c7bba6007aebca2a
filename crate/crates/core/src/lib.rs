//! Deterministic feed-forward networks and the logical-cell analysis pipeline.
//!
//! The crate has three layers:
//!
//! - task generators ([`motor`], [`bars`]) that produce labelled datasets with
//!   exact label oracles,
//! - a from-scratch trainable network ([`mlp`]) with manual backpropagation
//!   and Adam,
//! - analysis passes ([`logic`], [`weights`]) that record conditioned
//!   receptive fields, detect quantized cells, deduce class labels from group
//!   activity by propositional exclusion, and compare the deductions against
//!   the trained output weights.
//!
//! [`exp`] ties everything together behind flat key-value experiment configs
//! and writes all artifacts (CSV, JSON, SVG) deterministically.

pub mod bars;
pub mod error;
pub mod exp;
pub mod logic;
pub mod mlp;
pub mod motor;
pub mod viz;
pub mod weights;

pub use error::{Error, Result};
pub use mlp::{FinalLayerMode, LossKind, Network, NetworkConfig, TrainConfig};
