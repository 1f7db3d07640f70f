//! File formats, remote clients, HTTP API and CLI for the entity linker
//! in `dblplink-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod io;
pub mod remote;
pub mod server;
pub mod stub;
pub mod wire;
