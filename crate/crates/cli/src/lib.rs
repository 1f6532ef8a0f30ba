//! Command-line front end: scenario files, trace export and the grid sweep.

pub mod experiment;
pub mod export;
pub mod scenario;
