//! Corpus-to-coordinates pipeline for locating natural-resource candidates
//! from geological text.
//!
//! The crate turns a corpus of geological documents into ranked city
//! predictions in five stages:
//!
//! 1. [`corpus`] — tokenize, drop stop words, Porter-stem each document.
//! 2. [`glove`] — count distance-weighted co-occurrences and train GloVe
//!    embeddings with AdaGrad.
//! 3. [`gazetteer`] — load city and mine tables, keep only vocabulary words
//!    that are English words or recognized city names.
//! 4. [`reducers`] — project embeddings to a low-dimensional space with one
//!    of five interchangeable techniques (`none`, `pca`, `ae`, `vae`,
//!    `vae-lstm`), built on the [`nnkit`] autodiff kernel.
//! 5. [`ranking`] + [`benchmark`] — rank cities by cosine similarity to a
//!    keyword and score the top-k against known mine sites via
//!    haversine-distance RMSE.
//!
//! The [`pipeline`] module wires the stages together behind a config file;
//! the `geoglove` binary exposes them as `train`, `reduce`, `rank`,
//! `benchmark` and `all` subcommands. Each capability also has a runnable
//! example under `examples/`.

pub mod benchmark;
pub mod corpus;
pub mod error;
pub mod fixtures;
pub mod gazetteer;
pub mod glove;
pub mod nnkit;
pub mod pipeline;
pub mod ranking;
pub mod reducers;

mod ioutil;
mod rng;

pub use error::{Error, Result};
