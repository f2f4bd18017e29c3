//! IO, HTTP backends, file formats, and batch commands around
//! `longtail-core`. The `longtail` binary is a thin clap front-end over
//! this crate.

pub mod backends;
pub mod commands;
pub mod config;
pub mod io;
