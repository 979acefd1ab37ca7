//! Synthetic benchmarks: a static-signal manipulation sweep and scripted
//! movement scenarios with ground truth, plus a detection evaluator.

mod evaluate;
mod movement;
mod static_bench;

pub use evaluate::{evaluate_detection, median, DetectionQuality, TypeQuality, DEFAULT_MATCH_OVERLAP};
pub use movement::{gen_movement, ForkStroke, Layout, MovementOutput, MovementScript, Phase};
pub use static_bench::{
    gen_static, manipulate, run_static_sweep, sweep_csv, ChainRate, ManipulationSpec, ScatterModel, SweepRow,
    SweepSpec, STATIC_ANCHOR,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-mean Gaussian sampler; a zero std yields exact zeros.
pub(crate) struct Noise(Option<Normal<f64>>);

impl Noise {
    pub(crate) fn new(std: f64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::Config(format!("noise std must be >= 0, got {std}")));
        }
        if std == 0.0 {
            return Ok(Self(None));
        }
        Normal::new(0.0, std)
            .map(|n| Self(Some(n)))
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.0.as_ref().map_or(0.0, |n| n.sample(rng))
    }
}
