//! Grid heatmaps and trajectory extraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::frame_dt;
use crate::kinematics::KinematicFrame;
use crate::kpi::window_frames;
use crate::window::Window;

pub const DEFAULT_SECTOR_SIZE: f64 = 500.0;

/// Regular grid of square sectors. Cells are half-open, so a point on an edge
/// belongs to the sector with the larger index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub sector_size: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], sector_size: f64, cols: usize, rows: usize) -> Result<Self> {
        if !(sector_size > 0.0 && sector_size.is_finite()) {
            return Err(Error::Config(format!("sector size must be positive, got {sector_size}")));
        }
        if cols == 0 || rows == 0 {
            return Err(Error::Config("grid needs at least one row and column".into()));
        }
        Ok(Self {
            origin,
            sector_size,
            cols,
            rows,
        })
    }

    /// Smallest grid aligned to multiples of `sector_size` that holds every frame.
    pub fn covering(frames: &[KinematicFrame], sector_size: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(sector_size > 0.0 && sector_size.is_finite()) {
            return Err(Error::Config(format!("sector size must be positive, got {sector_size}")));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for f in frames {
            for (i, v) in [f.x, f.y].into_iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        let origin = lo.map(|v| (v / sector_size).floor() * sector_size);
        let count = |i: usize| ((hi[i] - origin[i]) / sector_size).floor() as usize + 1;
        Self::new(origin, sector_size, count(0), count(1))
    }

    /// `(row, col)` of the sector holding `(x, y)`.
    pub fn sector_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = ((x - self.origin[0]) / self.sector_size).floor();
        let r = ((y - self.origin[1]) / self.sector_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapMetric {
    DwellTime,
    MaxSpeed,
    /// Largest `abs(accel)`.
    MaxAccel,
}

impl HeatmapMetric {
    pub const ALL: [HeatmapMetric; 3] = [Self::DwellTime, Self::MaxSpeed, Self::MaxAccel];

    pub fn name(self) -> &'static str {
        match self {
            Self::DwellTime => "dwell_time",
            Self::MaxSpeed => "max_speed",
            Self::MaxAccel => "max_accel",
        }
    }
}

impl fmt::Display for HeatmapMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeatmapMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown heatmap metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapLayer {
    pub metric: HeatmapMetric,
    pub grid: GridSpec,
    /// Row-major, `rows * cols` entries.
    pub values: Vec<f64>,
    /// Frame-aligned window that was aggregated.
    pub window: Window,
    pub out_of_grid_frames: usize,
    pub out_of_grid_dwell: f64,
}

impl HeatmapLayer {
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid.cols + col]
    }

    /// `(row, col)` of the largest value; first one wins on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.grid.cols, best % self.grid.cols)
    }
}

pub fn build_heatmap(
    frames: &[KinematicFrame],
    grid: &GridSpec,
    metric: HeatmapMetric,
    window: &Window,
) -> Result<HeatmapLayer> {
    let dt = frame_dt(frames)?;
    let range = window_frames(frames, window);
    if range.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut values = vec![0.0; grid.rows * grid.cols];
    let mut out_of_grid_frames = 0;
    for f in &frames[range.clone()] {
        let Some((r, c)) = grid.sector_of(f.x, f.y) else {
            out_of_grid_frames += 1;
            continue;
        };
        let cell = &mut values[r * grid.cols + c];
        match metric {
            HeatmapMetric::DwellTime => *cell += dt,
            HeatmapMetric::MaxSpeed => *cell = cell.max(f.speed),
            HeatmapMetric::MaxAccel => *cell = cell.max(f.accel.abs()),
        }
    }
    let start = frames[range.start].t;
    Ok(HeatmapLayer {
        metric,
        grid: *grid,
        values,
        window: Window {
            start,
            end: start + range.len() as f64 * dt,
        },
        out_of_grid_frames,
        out_of_grid_dwell: out_of_grid_frames as f64 * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", from = "[f64; 3]")]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl From<TrajectoryPoint> for [f64; 3] {
    fn from(p: TrajectoryPoint) -> Self {
        [p.t, p.x, p.y]
    }
}

impl From<[f64; 3]> for TrajectoryPoint {
    fn from([t, x, y]: [f64; 3]) -> Self {
        Self { t, x, y }
    }
}

/// Positions inside `window`, split into separate polylines at gaps.
pub fn extract_trajectory(frames: &[KinematicFrame], window: &Window) -> Vec<Vec<TrajectoryPoint>> {
    let mut lines: Vec<Vec<TrajectoryPoint>> = Vec::new();
    let mut current = Vec::new();
    for f in &frames[window_frames(frames, window)] {
        if f.in_gap {
            if !current.is_empty() {
                lines.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(TrajectoryPoint { t: f.t, x: f.x, y: f.y });
    }
    if !current.is_empty() {
        lines.push(current);
    }
    lines
}

/// One polyline per line, each an array of `[t, x, y]`.
pub fn trajectory_to_jsonl(lines: &[Vec<TrajectoryPoint>]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(line).expect("points serialize"));
        out.push('\n');
    }
    out
}
