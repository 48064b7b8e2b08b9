//! File formats, generators and command implementations behind the
//! `maxplus` binary.

pub mod commands;
pub mod format;
pub mod gen;
