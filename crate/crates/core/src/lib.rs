//! Mental-task EEG classification toolkit.
//!
//! The crate is organised as the stages of a batch experiment:
//!
//! * [`signal`] - trials, segmentation, dataset IO and a synthetic EEG-like generator
//! * [`spectral`] - Welch, Burg and MUSIC/Pisarenko PSD estimators and feature assembly
//! * [`select`] - univariate and multivariate filter criteria plus greedy forward selection
//! * [`classify`] - LDA, QDA and linear SVM with repeated stratified cross-validation
//! * [`stats`] - percentage gain, rank aggregation, Friedman test and post-hoc adjustment
//! * [`pipeline`] - configuration-driven runner that ties the stages together

pub mod classify;
pub mod error;
mod linalg;
pub mod pipeline;
pub mod select;
pub mod signal;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
