//! Model files, generators and result reports.

pub mod generators;
pub mod model;
pub mod report;
