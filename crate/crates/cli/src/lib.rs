//! Library side of the `solve` binary: file parsing and report emission.

pub mod io;
pub mod report;
