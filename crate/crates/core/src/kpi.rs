//! Transport KPIs over an observation window.
//!
//! Events are clipped to the window on frame boundaries before aggregation,
//! so KPIs add up over any partition of the window at event boundaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{frame_dt, EventStack, EventType};
use crate::kinematics::KinematicFrame;
use crate::window::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub total_driving_time: f64,
    pub total_standstill_time: f64,
    /// Standstill time over the time considered.
    pub equipment_utilization: f64,
    pub average_driving_velocity: f64,
    pub simultaneous_loading_and_driving: f64,
    pub total_driving_distance: f64,
    /// Frame-aligned window the figures refer to.
    pub window: Window,
    /// `1 - equipment_utilization`.
    pub activity_ratio: f64,
    /// Set when the window holds no driving, braking or acceleration frames;
    /// `average_driving_velocity` is then reported as 0.
    pub no_driving: bool,
}

/// Index range of the frames whose time lies inside `window`.
pub fn window_frames(frames: &[KinematicFrame], window: &Window) -> std::ops::Range<usize> {
    let start = frames.partition_point(|f| f.t < window.start);
    let end = frames.partition_point(|f| f.t < window.end);
    start..end.max(start)
}

pub fn compute_kpis(stack: &EventStack, frames: &[KinematicFrame], window: &Window) -> Result<KpiReport> {
    let dt = frame_dt(frames)?;
    let range = window_frames(frames, window);
    if range.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let n = frames.len();
    let mut moving = vec![false; n];
    let mut forking = vec![false; n];
    let mut driving_frames = 0usize;
    let mut standstill_frames = 0usize;

    for e in stack.iter() {
        if e.end_idx > n {
            return Err(Error::Mismatch(format!(
                "event ends at frame {} of {}",
                e.end_idx, n
            )));
        }
        let clipped = e.start_idx.max(range.start)..e.end_idx.min(range.end);
        if clipped.is_empty() {
            continue;
        }
        match e.kind {
            EventType::Driving => driving_frames += clipped.len(),
            EventType::Standstill => standstill_frames += clipped.len(),
            _ => {}
        }
        if e.kind.is_moving() {
            moving[clipped.clone()].iter_mut().for_each(|m| *m = true);
        }
        if let EventType::ForkMotion { .. } = e.kind {
            forking[clipped].iter_mut().for_each(|m| *m = true);
        }
    }

    let mut moving_count = 0usize;
    let mut speed_sum = 0.0;
    let mut overlap = 0usize;
    for i in range.clone() {
        if moving[i] {
            moving_count += 1;
            speed_sum += frames[i].speed;
            if forking[i] {
                overlap += 1;
            }
        }
    }

    let considered = range.len() as f64 * dt;
    let utilization = standstill_frames as f64 * dt / considered;
    let start = frames[range.start].t;
    Ok(KpiReport {
        total_driving_time: driving_frames as f64 * dt,
        total_standstill_time: standstill_frames as f64 * dt,
        equipment_utilization: utilization,
        average_driving_velocity: if moving_count == 0 {
            0.0
        } else {
            speed_sum / moving_count as f64
        },
        simultaneous_loading_and_driving: overlap as f64 * dt,
        total_driving_distance: speed_sum * dt,
        window: Window {
            start,
            end: start + considered,
        },
        activity_ratio: 1.0 - utilization,
        no_driving: moving_count == 0,
    })
}
