//! Library behind the `dl-lab` binary: verification suites, JSON reports and CSV dumps.

pub mod dump;
pub mod report;
pub mod suites;
