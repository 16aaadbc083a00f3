//! File formats, regression systems, randomized property suites and the
//! command-line front end built on [`polyflow_core`].

pub mod cli;
pub mod config;
pub mod formats;
pub mod oracles;
pub mod regression;
pub mod suites;
