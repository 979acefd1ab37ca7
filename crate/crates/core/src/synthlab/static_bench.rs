use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rng, Noise};
use crate::error::{Error, Result};
use crate::filters::{FilterConfig, FilterKind};
use crate::ingest::PositionSample;
use crate::kinematics::{process_chain, ChainConfig};

/// Where the static tag sits, mm.
pub const STATIC_ANCHOR: [f64; 3] = [5000.0, 5000.0, 1500.0];

const STATIC_SOURCE: &str = "static";

/// Fixed point plus Gaussian noise on each axis.
pub fn gen_static(duration: f64, rate: f64, noise_std: f64, seed: u64) -> Result<Vec<PositionSample>> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Config(format!("duration must be positive, got {duration}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidRate(rate));
    }
    let noise = Noise::new(noise_std)?;
    let mut rng = rng(seed);
    let n = (duration * rate).round() as usize;
    Ok((0..n)
        .map(|k| {
            let [x, y, z] = STATIC_ANCHOR.map(|v| v + noise.draw(&mut rng));
            let mut s = PositionSample::new(k as f64 / rate, x, y, z);
            s.source_id = STATIC_SOURCE.into();
            s
        })
        .collect())
}

/// How `scatter_std` maps onto the axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatterModel {
    /// `scatter_std` is the RMS planar displacement; each axis gets
    /// `scatter_std / sqrt(2)`.
    #[default]
    Planar,
    /// Each axis gets `scatter_std`.
    PerAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationSpec {
    pub target_rate: f64,
    pub scatter_std: f64,
    pub seed: u64,
    #[serde(default)]
    pub scatter_model: ScatterModel,
}

impl ManipulationSpec {
    pub fn new(target_rate: f64, scatter_std: f64, seed: u64) -> Self {
        Self {
            target_rate,
            scatter_std,
            seed,
            scatter_model: ScatterModel::default(),
        }
    }

    pub fn axis_std(&self) -> f64 {
        match self.scatter_model {
            ScatterModel::Planar => self.scatter_std / std::f64::consts::SQRT_2,
            ScatterModel::PerAxis => self.scatter_std,
        }
    }
}

fn source_rate(samples: &[PositionSample]) -> Result<f64> {
    match samples {
        [] => Err(Error::EmptyInput),
        [_] => Err(Error::TooFewSamples { needed: 2, got: 1 }),
        [first, .., last] => {
            let span = last.t - first.t;
            if span > 0.0 {
                Ok((samples.len() - 1) as f64 / span)
            } else {
                Err(Error::ZeroDuration)
            }
        }
    }
}

/// Keeps every k-th sample, `k = round(source / target)`, then adds noise.
pub fn manipulate(samples: &[PositionSample], spec: &ManipulationSpec) -> Result<Vec<PositionSample>> {
    let source = source_rate(samples)?;
    if !(spec.target_rate > 0.0 && spec.target_rate <= source * (1.0 + 1e-9)) {
        return Err(Error::Config(format!(
            "target rate {} outside (0, {source}]",
            spec.target_rate
        )));
    }
    let noise = Noise::new(spec.axis_std())?;
    let k = ((source / spec.target_rate).round() as usize).max(1);
    let mut rng = rng(spec.seed);
    Ok(samples
        .iter()
        .step_by(k)
        .map(|s| {
            let mut out = s.clone();
            out.x += noise.draw(&mut rng);
            out.y += noise.draw(&mut rng);
            out.z += noise.draw(&mut rng);
            out
        })
        .collect())
}

/// Rate the kinematics chain runs at inside the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainRate {
    /// The update rate after manipulation.
    #[default]
    Native,
    /// Resample every cell to this rate first.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub rates_hz: Vec<f64>,
    pub scatters_mm: Vec<f64>,
    pub filters: Vec<FilterConfig>,
    pub seed: u64,
    pub duration_s: f64,
    pub source_rate_hz: f64,
    pub rig_noise_mm: f64,
    pub chain_rate: ChainRate,
    pub scatter_model: ScatterModel,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            rates_hz: vec![5.0, 10.0, 25.0, 50.0, 100.0],
            scatters_mm: (0..=10).map(|i| i as f64 * 20.0).collect(),
            filters: vec![FilterConfig::butterworth(), FilterConfig::fir(), FilterConfig::savgol()],
            seed: 7,
            duration_s: 60.0,
            source_rate_hz: 100.0,
            rig_noise_mm: 2.0,
            chain_rate: ChainRate::Native,
            scatter_model: ScatterModel::Planar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate_hz: f64,
    pub scatter_mm: f64,
    pub filter: FilterKind,
    pub mean_speed_mm_s: f64,
}

// distinct, reproducible stream per update rate; scatter levels share it
fn rate_seed(seed: u64, rate_index: usize) -> u64 {
    seed ^ (rate_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl SweepSpec {
    pub fn run(&self) -> Result<Vec<SweepRow>> {
        if self.rates_hz.is_empty() || self.scatters_mm.is_empty() || self.filters.is_empty() {
            return Err(Error::Config("sweep axes must be nonempty".into()));
        }
        let base = gen_static(self.duration_s, self.source_rate_hz, self.rig_noise_mm, self.seed)?;
        let cells: Vec<(usize, f64, f64)> = self
            .rates_hz
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| self.scatters_mm.iter().map(move |&s| (i, r, s)))
            .collect();
        let rows = cells
            .par_iter()
            .map(|&(ri, rate, scatter)| {
                let spec = ManipulationSpec {
                    target_rate: rate,
                    scatter_std: scatter,
                    seed: rate_seed(self.seed, ri),
                    scatter_model: self.scatter_model,
                };
                let samples = manipulate(&base, &spec)?;
                let chain_rate = match self.chain_rate {
                    ChainRate::Native => source_rate(&samples)?,
                    ChainRate::Fixed(r) => r,
                };
                self.filters
                    .iter()
                    .map(|f| {
                        let frames = process_chain(&samples, &ChainConfig::uniform(f.clone()).with_rate(chain_rate))?;
                        let mean = frames.iter().map(|fr| fr.speed).sum::<f64>() / frames.len() as f64;
                        Ok(SweepRow {
                            rate_hz: rate,
                            scatter_mm: scatter,
                            filter: f.kind,
                            mean_speed_mm_s: mean,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(rows.into_iter().flatten().collect())
    }
}

/// Sweep with the default 60 s, 100 Hz, 2 mm rig recording.
pub fn run_static_sweep(
    rates_hz: &[f64],
    scatters_mm: &[f64],
    filters: &[FilterConfig],
    seed: u64,
) -> Result<Vec<SweepRow>> {
    SweepSpec {
        rates_hz: rates_hz.to_vec(),
        scatters_mm: scatters_mm.to_vec(),
        filters: filters.to_vec(),
        seed,
        ..SweepSpec::default()
    }
    .run()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rate_hz", "scatter_mm", "filter", "mean_speed_mm_s"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.rate_hz.to_string(),
            r.scatter_mm.to_string(),
            r.filter.name().to_string(),
            format!("{:.3}", r.mean_speed_mm_s),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("ascii csv")
}
