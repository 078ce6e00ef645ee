//! Graph learning toolkit built around two-hop neighborhood enlargement.
//!
//! The crate provides undirected graph containers and loaders ([`graph`]),
//! adjacency transforms that widen each node's receptive field to its
//! exact-distance-2 neighbors ([`transforms`]), a small reverse-mode
//! autodiff engine ([`tensor`]), GCN/GIN/autoencoder models ([`nn`]),
//! cross-validated training and evaluation ([`harness`]), mutual
//! information probes ([`mi`]), and seeded synthetic datasets ([`synth`]).

pub mod error;
pub mod graph;
pub mod harness;
pub mod mi;
pub mod nn;
pub mod synth;
pub mod tensor;
pub mod transforms;

pub use error::{Error, Result};
