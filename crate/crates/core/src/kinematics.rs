//! Position samples to synchronized kinematic frames.
//!
//! The chain is fixed: resample, filter positions, differentiate, filter
//! velocities, planar speed, differentiate speed, filter acceleration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    apply_causal, apply_zero_phase, design, differentiate, CausalFilter, FilterCoefficients,
    FilterConfig, FilterMode,
};
use crate::ingest::{resample, PositionSample, DEFAULT_MAX_GAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicFrame {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    /// Planar speed, mm/s.
    pub speed: f64,
    /// Time derivative of `speed`, mm/s^2. Negative while slowing down.
    pub accel: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fork_v: Option<f64>,
    #[serde(default)]
    pub in_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub resample_rate: f64,
    pub filter_pos: FilterConfig,
    pub filter_vel: FilterConfig,
    pub filter_acc: FilterConfig,
    pub max_gap: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        chain_defaults()
    }
}

/// 100 Hz resampling and a 1 Hz first-order zero-phase Butterworth at every
/// filter stage.
pub fn chain_defaults() -> ChainConfig {
    ChainConfig {
        resample_rate: 100.0,
        filter_pos: FilterConfig::butterworth(),
        filter_vel: FilterConfig::butterworth(),
        filter_acc: FilterConfig::butterworth(),
        max_gap: DEFAULT_MAX_GAP,
    }
}

impl ChainConfig {
    /// Same filter at all three stages.
    pub fn uniform(filter: FilterConfig) -> Self {
        Self {
            filter_pos: filter.clone(),
            filter_vel: filter.clone(),
            filter_acc: filter,
            ..chain_defaults()
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.resample_rate = rate;
        self
    }

    pub fn with_mode(mut self, mode: FilterMode) -> Self {
        self.filter_pos.mode = mode;
        self.filter_vel.mode = mode;
        self.filter_acc.mode = mode;
        self
    }

    /// Designs all three stages, surfacing the first invalid one.
    pub fn validate(&self) -> Result<()> {
        self.stages().map(|_| ())
    }

    fn stages(&self) -> Result<[Stage; 3]> {
        let rate = self.resample_rate;
        Ok([
            Stage::new(&self.filter_pos, rate)?,
            Stage::new(&self.filter_vel, rate)?,
            Stage::new(&self.filter_acc, rate)?,
        ])
    }
}

struct Stage {
    coeffs: FilterCoefficients,
    mode: FilterMode,
}

impl Stage {
    fn new(config: &FilterConfig, rate: f64) -> Result<Self> {
        Ok(Self {
            coeffs: design(config, rate)?,
            mode: config.mode,
        })
    }

    fn run(&self, series: &[f64]) -> Result<Vec<f64>> {
        match self.mode {
            FilterMode::Causal => Ok(apply_causal(&self.coeffs, series)),
            FilterMode::ZeroPhase => apply_zero_phase(&self.coeffs, series),
        }
    }
}

/// Runs the full chain over one source's samples.
pub fn process_chain(samples: &[PositionSample], config: &ChainConfig) -> Result<Vec<KinematicFrame>> {
    if let Some(first) = samples.first() {
        if let Some(other) = samples.iter().find(|s| s.source_id != first.source_id) {
            return Err(Error::Mismatch(format!(
                "samples from several sources ({} and {})",
                first.source_id, other.source_id
            )));
        }
    }
    let [pos, vel, acc] = config.stages()?;
    let rate = config.resample_rate;

    // 1
    let series = resample(samples, rate, config.max_gap)?;
    let channel = |name: &str| series.channel(name).expect("resample emits x, y, z");
    // 2
    let x = pos.run(channel("x"))?;
    let y = pos.run(channel("y"))?;
    let z = pos.run(channel("z"))?;
    let fork = series.channel("fork_z").map(|f| pos.run(f)).transpose()?;
    // 3, 4
    let vx = vel.run(&differentiate(&x, rate)?)?;
    let vy = vel.run(&differentiate(&y, rate)?)?;
    let fork_v = fork
        .map(|f| differentiate(&f, rate).and_then(|d| vel.run(&d)))
        .transpose()?;
    // 5
    let speed: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();
    // 6, 7
    let accel = acc.run(&differentiate(&speed, rate)?)?;

    Ok((0..series.len())
        .map(|k| KinematicFrame {
            t: series.time(k),
            x: x[k],
            y: y[k],
            z: z[k],
            vx: vx[k],
            vy: vy[k],
            speed: speed[k],
            accel: accel[k],
            fork_v: fork_v.as_ref().map(|f| f[k]),
            in_gap: series.in_gap(k),
        })
        .collect())
}

/// Delay between a sample arriving and the frames it completes, plus the DC
/// group delay each output accumulates through the causal filter stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainLatency {
    pub emit_delay_s: f64,
    pub position_delay_s: f64,
    pub speed_delay_s: f64,
    pub accel_delay_s: f64,
}

fn dc_group_delay(c: &FilterCoefficients) -> f64 {
    let moment = |p: &[f64]| {
        let sum: f64 = p.iter().sum();
        p.iter().enumerate().map(|(k, v)| k as f64 * v).sum::<f64>() / sum
    };
    moment(&c.numerator) - moment(&c.denominator)
}

/// Three-point differentiator fed one value at a time.
#[derive(Debug, Clone)]
struct StreamDiff {
    window: VecDeque<f64>,
    seen: usize,
    half_rate: f64,
}

impl StreamDiff {
    fn new(rate: f64) -> Self {
        Self {
            window: VecDeque::with_capacity(3),
            seen: 0,
            half_rate: 0.5 * rate,
        }
    }

    fn push(&mut self, v: f64, out: &mut Vec<f64>) {
        if self.window.len() == 3 {
            self.window.pop_front();
        }
        self.window.push_back(v);
        self.seen += 1;
        let w = &self.window;
        if self.seen == 3 {
            out.push((-3.0 * w[0] + 4.0 * w[1] - w[2]) * self.half_rate);
        }
        if self.seen >= 3 {
            out.push((w[2] - w[0]) * self.half_rate);
        }
    }

    fn finish(&self) -> Option<f64> {
        let w = &self.window;
        (self.seen >= 3).then(|| (3.0 * w[2] - 4.0 * w[1] + w[0]) * self.half_rate)
    }
}

/// Steps a causal filter that is primed on the first value it sees.
fn lazy_step(slot: &mut Option<CausalFilter>, coeffs: &FilterCoefficients, x: f64) -> f64 {
    slot.get_or_insert_with(|| CausalFilter::settled(coeffs, x)).step(x)
}

#[derive(Debug, Clone)]
struct Tick {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    in_gap: bool,
}

#[derive(Debug, Clone)]
struct Partial {
    vx: f64,
    vy: f64,
    speed: f64,
    fork_v: Option<f64>,
}

/// Incremental causal variant of [`process_chain`] for live sessions.
///
/// Frames are emitted two ticks after their timestamp (three for the very
/// first frame); [`StreamingChain::finish`] flushes the tail. The emitted
/// sequence equals `process_chain` run with every stage in causal mode.
pub struct StreamingChain {
    rate: f64,
    max_gap: f64,
    pos: FilterCoefficients,
    vel: FilterCoefficients,
    acc: FilterCoefficients,
    latency: ChainLatency,
    state: StreamState,
}

#[derive(Default)]
struct StreamState {
    t0: f64,
    next_tick: usize,
    prev: Option<PositionSample>,
    has_fork: bool,
    pos_f: [Option<CausalFilter>; 4],
    vel_f: [Option<CausalFilter>; 3],
    acc_f: Option<CausalFilter>,
    diffs: Option<[StreamDiff; 3]>,
    speed_diff: Option<StreamDiff>,
    ticks: VecDeque<Tick>,
    partials: VecDeque<Partial>,
    finished: bool,
}

impl StreamingChain {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        let rate = config.resample_rate;
        let pos = design(&config.filter_pos, rate)?;
        let vel = design(&config.filter_vel, rate)?;
        let acc = design(&config.filter_acc, rate)?;
        let (dp, dv, da) = (dc_group_delay(&pos), dc_group_delay(&vel), dc_group_delay(&acc));
        let latency = ChainLatency {
            emit_delay_s: 2.0 / rate,
            position_delay_s: dp / rate,
            speed_delay_s: (dp + dv) / rate,
            accel_delay_s: (dp + dv + da) / rate,
        };
        Ok(Self {
            rate,
            max_gap: config.max_gap,
            pos,
            vel,
            acc,
            latency,
            state: StreamState::default(),
        })
    }

    pub fn latency(&self) -> ChainLatency {
        self.latency
    }

    /// Feeds one sample (strictly newer than the previous one) and returns
    /// the frames it completed.
    pub fn push(&mut self, sample: &PositionSample) -> Vec<KinematicFrame> {
        assert!(!self.state.finished, "push after finish");
        let mut frames = Vec::new();
        let rate = self.rate;
        let Some(prev) = self.state.prev.take() else {
            self.state.t0 = sample.t;
            self.state.has_fork = sample.fork_z.is_some();
            self.state.next_tick = 1;
            self.tick(
                sample.t,
                [sample.x, sample.y, sample.z, sample.fork_z.unwrap_or(0.0)],
                false,
                &mut frames,
            );
            self.state.prev = Some(sample.clone());
            return frames;
        };
        if sample.t <= prev.t {
            self.state.prev = Some(prev);
            return frames;
        }
        let bridged = sample.t - prev.t > self.max_gap;
        loop {
            let k = self.state.next_tick;
            if k as f64 > (sample.t - self.state.t0) * rate + 1e-9 {
                break;
            }
            let t = self.state.t0 + k as f64 / rate;
            let eps = 1e-9 * t.abs().max(1.0);
            let lerp = |va: f64, vb: f64| {
                if (t - prev.t).abs() <= eps {
                    va
                } else if (t - sample.t).abs() <= eps {
                    vb
                } else {
                    va + (vb - va) * (t - prev.t) / (sample.t - prev.t)
                }
            };
            let fork_a = prev.fork_z.unwrap_or(0.0);
            let fork_b = sample.fork_z.unwrap_or(fork_a);
            let values = [
                lerp(prev.x, sample.x),
                lerp(prev.y, sample.y),
                lerp(prev.z, sample.z),
                lerp(fork_a, fork_b),
            ];
            let in_gap = bridged && t > prev.t + eps && t < sample.t - eps;
            self.tick(t, values, in_gap, &mut frames);
            self.state.next_tick += 1;
        }
        let mut kept = sample.clone();
        if self.state.has_fork && kept.fork_z.is_none() {
            kept.fork_z = prev.fork_z;
        }
        self.state.prev = Some(kept);
        frames
    }

    /// Flushes the frames still waiting for future samples.
    pub fn finish(&mut self) -> Vec<KinematicFrame> {
        let mut frames = Vec::new();
        if self.state.finished {
            return frames;
        }
        self.state.finished = true;
        let Some(diffs) = self.state.diffs.take() else {
            return frames;
        };
        let tails: Vec<Option<f64>> = diffs.iter().map(StreamDiff::finish).collect();
        if let [Some(dx), Some(dy), dfork] = tails[..] {
            self.velocity([dx, dy, dfork.unwrap_or(0.0)], &mut frames);
        }
        if let Some(da) = self.state.speed_diff.as_ref().and_then(StreamDiff::finish) {
            self.accel(da, &mut frames);
        }
        frames
    }

    fn tick(&mut self, t: f64, values: [f64; 4], in_gap: bool, frames: &mut Vec<KinematicFrame>) {
        let mut filtered = [0.0; 4];
        for (i, v) in values.into_iter().enumerate() {
            filtered[i] = lazy_step(&mut self.state.pos_f[i], &self.pos, v);
        }
        self.state.ticks.push_back(Tick {
            t,
            x: filtered[0],
            y: filtered[1],
            z: filtered[2],
            in_gap,
        });
        let rate = self.rate;
        let diffs = self
            .state
            .diffs
            .get_or_insert_with(|| [StreamDiff::new(rate), StreamDiff::new(rate), StreamDiff::new(rate)]);
        let mut dx = Vec::new();
        let mut dy = Vec::new();
        let mut df = Vec::new();
        diffs[0].push(filtered[0], &mut dx);
        diffs[1].push(filtered[1], &mut dy);
        diffs[2].push(filtered[3], &mut df);
        for i in 0..dx.len() {
            self.velocity([dx[i], dy[i], df[i]], frames);
        }
    }

    fn velocity(&mut self, raw: [f64; 3], frames: &mut Vec<KinematicFrame>) {
        let vx = lazy_step(&mut self.state.vel_f[0], &self.vel, raw[0]);
        let vy = lazy_step(&mut self.state.vel_f[1], &self.vel, raw[1]);
        let vf = lazy_step(&mut self.state.vel_f[2], &self.vel, raw[2]);
        let speed = vx.hypot(vy);
        self.state.partials.push_back(Partial {
            vx,
            vy,
            speed,
            fork_v: self.state.has_fork.then_some(vf),
        });
        let rate = self.rate;
        let mut da = Vec::new();
        self.state
            .speed_diff
            .get_or_insert_with(|| StreamDiff::new(rate))
            .push(speed, &mut da);
        for a in da {
            self.accel(a, frames);
        }
    }

    fn accel(&mut self, raw: f64, frames: &mut Vec<KinematicFrame>) {
        let accel = lazy_step(&mut self.state.acc_f, &self.acc, raw);
        let tick = self.state.ticks.pop_front().expect("tick for every accel value");
        let p = self.state.partials.pop_front().expect("velocity for every accel value");
        frames.push(KinematicFrame {
            t: tick.t,
            x: tick.x,
            y: tick.y,
            z: tick.z,
            vx: p.vx,
            vy: p.vy,
            speed: p.speed,
            accel,
            fork_v: p.fork_v,
            in_gap: tick.in_gap,
        });
    }
}
