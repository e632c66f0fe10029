//! Reduced-order Markov modeling of time series through symbolic dynamics.
//!
//! The pipeline runs in order: [`ingest`] normalizes and downsamples a raw
//! series, [`symbolize`] maps it onto a finite alphabet, [`depth`] picks the
//! word length, [`dmarkov`] estimates the full-order machine, [`reduce`]
//! aggregates its states, [`select`] scores every cut of the dendrogram,
//! [`distort`] bounds the cost of a reduction and [`metrics`] turns models into
//! anomaly features.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depth;
pub mod distort;
pub mod dmarkov;
pub mod error;
pub mod ingest;
pub mod json;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod reduce;
pub mod select;
pub mod symbolize;

pub use error::{Error, Result};
pub use matrix::{Matrix, SparseStochastic};
pub use par::Exec;
