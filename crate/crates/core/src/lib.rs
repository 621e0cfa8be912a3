//! Minimal sets of lateral contacts that turn a dated character phylogeny
//! into a perfect temporal network.
//!
//! The pipeline: [`model`] validates input, [`network`] builds the network
//! for a summary of contacts and searches for a perfect labeling,
//! [`temporal`] decides whether contact times exist, and [`solver`]
//! enumerates summaries by cardinality. [`io`] and [`cli`] handle the text
//! format, reports and the command-line tool.

pub mod cli;
mod graph;
pub mod io;
pub mod model;
pub mod network;
pub mod oracle;
pub mod solver;
pub mod temporal;
