//! Instance files, generators, verification suites and benchmarks around
//! `trp-core`, plus the `trp` command line.

pub mod bench;
pub mod cli;
pub mod gen;
pub mod io;
pub mod verify;
