//! Command line and HTTP front ends for the dependency-model debugger.

pub mod cli;
pub mod http;
pub mod load;
pub mod service;
pub mod snapshot;
pub mod wire;
