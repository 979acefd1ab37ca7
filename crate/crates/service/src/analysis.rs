//! Batch analysis of one source and the byte-exact rendering shared by the
//! CLI artifacts and the HTTP responses.

use std::path::Path;

use serde::Serialize;
use truckmotion_core::area::{
    build_heatmap, extract_trajectory, trajectory_to_jsonl, GridSpec, HeatmapLayer, HeatmapMetric,
};
use truckmotion_core::events::{detect_events, EventStack, EventType};
use truckmotion_core::ingest::PositionSample;
use truckmotion_core::kinematics::{process_chain, KinematicFrame};
use truckmotion_core::kpi::{compute_kpis, window_frames, KpiReport};
use truckmotion_core::{Result, Window};

use crate::config::AnalysisConfig;

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const KPI_FILE: &str = "kpi.json";
pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";

pub fn heatmap_file(metric: HeatmapMetric) -> String {
    format!("heatmap_{metric}.json")
}

/// Compact JSON followed by a newline.
pub fn json_document<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("analysis types serialize");
    s.push('\n');
    s
}

pub fn frames_jsonl<'a>(frames: impl IntoIterator<Item = &'a KinematicFrame>) -> String {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f).expect("frames serialize"));
        out.push('\n');
    }
    out
}

/// Query window relative to the first frame; missing bounds are open.
pub fn relative_window(t0: f64, from: Option<f64>, to: Option<f64>) -> Result<Window> {
    let start = from.map_or(f64::NEG_INFINITY, |f| t0 + f);
    let end = to.map_or(f64::INFINITY, |t| t0 + t);
    if from.is_some_and(|f| !f.is_finite()) || to.is_some_and(|t| !t.is_finite()) || end < start {
        return Err(truckmotion_core::Error::InvalidWindow {
            start: from.unwrap_or(f64::NEG_INFINITY),
            end: to.unwrap_or(f64::INFINITY),
        });
    }
    Ok(Window { start, end })
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: AnalysisConfig,
    pub frames: Vec<KinematicFrame>,
    pub stack: EventStack,
}

impl Analysis {
    pub fn run(samples: &[PositionSample], config: &AnalysisConfig) -> Result<Self> {
        config.validate()?;
        let frames = process_chain(samples, &config.chain)?;
        let stack = detect_events(&frames, &config.limits)?;
        Ok(Self {
            config: config.clone(),
            frames,
            stack,
        })
    }

    pub fn start_time(&self) -> f64 {
        self.frames.first().map_or(0.0, |f| f.t)
    }

    pub fn window(&self, from: Option<f64>, to: Option<f64>) -> Result<Window> {
        relative_window(self.start_time(), from, to)
    }

    pub fn frames_in(&self, window: &Window, stride: usize) -> String {
        let range = window_frames(&self.frames, window);
        frames_jsonl(self.frames[range].iter().step_by(stride.max(1)))
    }

    pub fn events(&self, types: Option<&[EventType]>) -> String {
        match types {
            Some(types) => self.stack.filtered(types).to_jsonl(),
            None => self.stack.to_jsonl(),
        }
    }

    pub fn kpi(&self, window: &Window) -> Result<KpiReport> {
        compute_kpis(&self.stack, &self.frames, window)
    }

    /// Grid over the whole session, so every window shares cell indices.
    pub fn grid(&self, sector_size: f64) -> Result<GridSpec> {
        GridSpec::covering(&self.frames, sector_size)
    }

    pub fn heatmap(&self, metric: HeatmapMetric, sector_size: f64, window: &Window) -> Result<HeatmapLayer> {
        build_heatmap(&self.frames, &self.grid(sector_size)?, metric, window)
    }

    pub fn trajectory(&self, window: &Window) -> String {
        trajectory_to_jsonl(&extract_trajectory(&self.frames, window))
    }

    /// Every artifact over the full session, as `(file name, contents)`.
    pub fn artifacts(&self) -> Result<Vec<(String, String)>> {
        let all = Window::all();
        let mut out = vec![
            (FRAMES_FILE.to_string(), self.frames_in(&all, 1)),
            (EVENTS_FILE.to_string(), self.events(None)),
            (KPI_FILE.to_string(), json_document(&self.kpi(&all)?)),
        ];
        for metric in HeatmapMetric::ALL {
            let layer = self.heatmap(metric, self.config.sector_size, &all)?;
            out.push((heatmap_file(metric), json_document(&layer)));
        }
        out.push((TRAJECTORY_FILE.to_string(), self.trajectory(&all)));
        Ok(out)
    }

    pub fn write_artifacts(&self, dir: &Path) -> anyhow::Result<Vec<String>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", dir.display()))?;
        let mut names = Vec::new();
        for (name, body) in self.artifacts()? {
            let path = dir.join(&name);
            std::fs::write(&path, body).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
            names.push(name);
        }
        Ok(names)
    }
}
