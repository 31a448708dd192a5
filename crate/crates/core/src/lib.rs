//! Heart-rate estimation from speech.
//!
//! An utterance is reduced to a feature distance (Euclidean distance of its
//! mean MFCC vector from the speaker's neutral enrollment), a simultaneous
//! ECG to a heart rate, and a per-speaker, per-emotion linear model maps one
//! to the other. Emotion classifiers select which model applies.
//!
//! Modules, bottom up:
//! - [`signal_io`]: WAV, ECG CSV and manifest loading.
//! - [`ecg_hr`]: R-peak detection and the small-square heart-rate rule.
//! - [`features`]: MFCC front end and feature distance.
//! - [`stats`]: least squares, summary statistics, relative error.
//! - [`classify`]: classification via regression trees, Gaussian naive
//!   Bayes, nearest neighbour and the stratified split.
//! - [`pipeline`]: synthetic corpus, extraction, experiments and reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod ecg_hr;
pub mod features;
pub mod pipeline;
pub mod signal_io;
pub mod stats;
