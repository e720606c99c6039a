//! Library half of the `homsim` binary: the setup-description parser, the
//! number grammar, file formats, and the command implementations.

pub mod commands;
pub mod num;
pub mod output;
pub mod setup;
