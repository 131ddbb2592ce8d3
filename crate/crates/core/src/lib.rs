//! Extractive summarization of crawled project websites.
//!
//! The pipeline cleans crawled pages into sentence lists, weakly labels
//! sentences against existing project descriptions, trains linear SVM and
//! GRU sentence scorers, combines them into summaries and evaluates the
//! results with ROUGE, topic similarity and classification metrics.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evalmetrics;
pub mod hashing;
pub mod pipeline;
pub mod rnn;
pub mod summary;
pub mod svm;
pub mod synth;
pub mod textproc;
pub mod weaklabel;
pub mod wordlists;

pub use error::{Error, Result};
