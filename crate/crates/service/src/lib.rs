//! Command-line tools and the HTTP/stream API around `truckmotion-core`.

pub mod analysis;
pub mod api;
pub mod cli;
pub mod config;
pub mod session;
