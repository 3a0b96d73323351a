//! Command-line tools and HTTP service around [`cec_core`].

pub mod commands;
pub mod config;
pub mod service;
pub mod wire;
