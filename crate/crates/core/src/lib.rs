//! Motion analysis for industrial trucks from indoor-positioning data.
//!
//! The pipeline runs from raw position logs ([`ingest`]) through low-pass
//! filtering and differentiation ([`filters`], [`kinematics`]) to typed
//! motion events ([`events`]), transport KPIs ([`kpi`]) and per-sector
//! heatmaps ([`area`]). [`synthlab`] generates static and scripted movement
//! recordings with ground truth for benchmarking.

pub mod area;
pub mod error;
pub mod events;
pub mod filters;
pub mod ingest;
pub mod kinematics;
pub mod kpi;
pub mod synthlab;
mod window;

pub use error::{Error, Result};
pub use window::Window;
