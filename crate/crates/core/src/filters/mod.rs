//! Low-pass filter families used by the kinematics chain.
//!
//! Three designs are available: a Butterworth IIR (bilinear transform with
//! pre-warping, cascaded sections above order one), a Hamming-windowed sinc
//! FIR and a Savitzky-Golay least-squares smoother. Each can be run causally
//! for real-time use or forward-backward for post-processing.

mod apply;
mod design;
mod diff;

pub use apply::{apply_causal, apply_zero_phase, CausalFilter};
pub use design::{design, window_taps, FilterCoefficients, Section};
pub use diff::differentiate;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Butterworth,
    Fir,
    Savgol,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Butterworth => "butterworth",
            Self::Fir => "fir",
            Self::Savgol => "savgol",
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    Causal,
    ZeroPhase,
}

/// Parameters for one filter stage. Fields that do not apply to `kind` are
/// ignored (e.g. `order` for the FIR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub kind: FilterKind,
    pub cutoff_hz: f64,
    pub order: usize,
    pub window_seconds: f64,
    pub poly_degree: usize,
    pub mode: FilterMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::butterworth()
    }
}

impl FilterConfig {
    /// 1 Hz, first order, zero-phase.
    pub fn butterworth() -> Self {
        Self {
            kind: FilterKind::Butterworth,
            cutoff_hz: 1.0,
            order: 1,
            window_seconds: 0.5,
            poly_degree: 2,
            mode: FilterMode::ZeroPhase,
        }
    }

    /// 1 Hz cutoff over a 0.5 s window, zero-phase.
    pub fn fir() -> Self {
        Self {
            kind: FilterKind::Fir,
            ..Self::butterworth()
        }
    }

    /// Quadratic fit over a 0.5 s window, zero-phase.
    pub fn savgol() -> Self {
        Self {
            kind: FilterKind::Savgol,
            ..Self::butterworth()
        }
    }

    pub fn with_mode(mut self, mode: FilterMode) -> Self {
        self.mode = mode;
        self
    }
}
