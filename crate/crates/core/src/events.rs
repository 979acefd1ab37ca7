//! Threshold-based motion event detection.
//!
//! Each exclusive event type is evaluated in a configurable priority order:
//! frames meeting the type's condition are merged into runs, runs shorter
//! than the minimum duration are dropped, the survivors are trimmed against
//! events already on the stack and re-checked, and what is left is pushed.
//! Fork motion is detected independently and may overlap anything.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::KinematicFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForkDirection {
    Lift,
    Lower,
}

/// Event types that may not overlap each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusiveKind {
    Standstill,
    Maneuvering,
    Driving,
    HarshBraking,
    StrongAcceleration,
}

impl ExclusiveKind {
    pub const ALL: [ExclusiveKind; 5] = [
        Self::Standstill,
        Self::Maneuvering,
        Self::Driving,
        Self::HarshBraking,
        Self::StrongAcceleration,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventType {
    Standstill,
    Maneuvering,
    Driving,
    HarshBraking,
    StrongAcceleration,
    ForkMotion { direction: ForkDirection },
}

impl EventType {
    pub const LIFT: EventType = EventType::ForkMotion {
        direction: ForkDirection::Lift,
    };
    pub const LOWER: EventType = EventType::ForkMotion {
        direction: ForkDirection::Lower,
    };

    pub fn is_exclusive(self) -> bool {
        !matches!(self, Self::ForkMotion { .. })
    }

    /// Driving, harsh braking or strong acceleration.
    pub fn is_moving(self) -> bool {
        matches!(
            self,
            Self::Driving | Self::HarshBraking | Self::StrongAcceleration
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Standstill => "standstill",
            Self::Maneuvering => "maneuvering",
            Self::Driving => "driving",
            Self::HarshBraking => "harsh_braking",
            Self::StrongAcceleration => "strong_acceleration",
            Self::ForkMotion {
                direction: ForkDirection::Lift,
            } => "fork_lift",
            Self::ForkMotion {
                direction: ForkDirection::Lower,
            } => "fork_lower",
        }
    }
}

impl From<ExclusiveKind> for EventType {
    fn from(kind: ExclusiveKind) -> Self {
        match kind {
            ExclusiveKind::Standstill => Self::Standstill,
            ExclusiveKind::Maneuvering => Self::Maneuvering,
            ExclusiveKind::Driving => Self::Driving,
            ExclusiveKind::HarshBraking => Self::HarshBraking,
            ExclusiveKind::StrongAcceleration => Self::StrongAcceleration,
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "standstill" => Self::Standstill,
            "maneuvering" => Self::Maneuvering,
            "driving" => Self::Driving,
            "harsh_braking" => Self::HarshBraking,
            "strong_acceleration" => Self::StrongAcceleration,
            "fork_lift" => Self::LIFT,
            "fork_lower" => Self::LOWER,
            other => return Err(Error::Config(format!("unknown event type `{other}`"))),
        })
    }
}

/// Threshold and minimum duration for one event type. How the threshold is
/// compared depends on the type; see [`EventLimits`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limit {
    pub threshold: f64,
    pub min_duration: f64,
}

impl Limit {
    pub const fn new(threshold: f64, min_duration: f64) -> Self {
        Self {
            threshold,
            min_duration,
        }
    }
}

/// Per-type detection limits.
///
/// | type | condition |
/// |------|-----------|
/// | standstill | `speed < threshold` |
/// | maneuvering | `speed < threshold` |
/// | driving | `speed >= threshold` |
/// | harsh braking | `accel <= threshold` (negative) |
/// | strong acceleration | `accel >= threshold` |
/// | fork motion | `abs(fork_v) >= threshold` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventLimits {
    pub standstill: Limit,
    pub maneuvering: Limit,
    pub driving: Limit,
    pub harsh_braking: Limit,
    pub strong_acceleration: Limit,
    pub fork_motion: Limit,
    pub order: Vec<ExclusiveKind>,
}

impl Default for EventLimits {
    fn default() -> Self {
        default_limits()
    }
}

pub fn default_limits() -> EventLimits {
    EventLimits {
        standstill: Limit::new(100.0, 2.0),
        maneuvering: Limit::new(500.0, 1.5),
        driving: Limit::new(500.0, 1.0),
        harsh_braking: Limit::new(-1500.0, 0.3),
        strong_acceleration: Limit::new(1500.0, 0.3),
        fork_motion: Limit::new(50.0, 0.5),
        order: vec![
            ExclusiveKind::HarshBraking,
            ExclusiveKind::StrongAcceleration,
            ExclusiveKind::Standstill,
            ExclusiveKind::Maneuvering,
            ExclusiveKind::Driving,
        ],
    }
}

impl EventLimits {
    pub fn limit(&self, kind: ExclusiveKind) -> Limit {
        match kind {
            ExclusiveKind::Standstill => self.standstill,
            ExclusiveKind::Maneuvering => self.maneuvering,
            ExclusiveKind::Driving => self.driving,
            ExclusiveKind::HarshBraking => self.harsh_braking,
            ExclusiveKind::StrongAcceleration => self.strong_acceleration,
        }
    }

    fn condition(&self, kind: ExclusiveKind, frame: &KinematicFrame) -> bool {
        let th = self.limit(kind).threshold;
        match kind {
            ExclusiveKind::Standstill | ExclusiveKind::Maneuvering => frame.speed < th,
            ExclusiveKind::Driving => frame.speed >= th,
            ExclusiveKind::HarshBraking => frame.accel <= th,
            ExclusiveKind::StrongAcceleration => frame.accel >= th,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidLimits(msg));
        let all = [
            ("standstill", self.standstill),
            ("maneuvering", self.maneuvering),
            ("driving", self.driving),
            ("harsh_braking", self.harsh_braking),
            ("strong_acceleration", self.strong_acceleration),
            ("fork_motion", self.fork_motion),
        ];
        for (name, l) in all {
            if !l.threshold.is_finite() {
                return bad(format!("{name} threshold not finite"));
            }
            if !(l.min_duration >= 0.0 && l.min_duration.is_finite()) {
                return bad(format!("{name} min_duration must be >= 0"));
            }
        }
        if !(self.standstill.threshold < self.maneuvering.threshold
            && self.maneuvering.threshold <= self.driving.threshold)
        {
            return bad(format!(
                "speed bounds must satisfy standstill ({}) < maneuvering ({}) <= driving ({})",
                self.standstill.threshold, self.maneuvering.threshold, self.driving.threshold
            ));
        }
        if self.harsh_braking.threshold >= 0.0 {
            return bad("harsh_braking threshold must be negative".into());
        }
        if self.strong_acceleration.threshold <= 0.0 || self.fork_motion.threshold <= 0.0 {
            return bad("strong_acceleration and fork_motion thresholds must be positive".into());
        }
        for (i, k) in self.order.iter().enumerate() {
            if self.order[..i].contains(k) {
                return bad(format!("{k:?} listed twice in order"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent {
    #[serde(flatten)]
    pub kind: EventType,
    pub start_t: f64,
    pub end_t: f64,
    pub start_idx: usize,
    /// Exclusive.
    pub end_idx: usize,
    pub mean_speed: f64,
    /// Acceleration sample with the largest magnitude, sign kept.
    pub peak_accel: f64,
    pub distance: f64,
}

impl MotionEvent {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        self.start_idx..self.end_idx
    }

    /// Builds an event over `frames[range]`, each frame lasting `dt`.
    pub fn over(kind: EventType, frames: &[KinematicFrame], range: std::ops::Range<usize>, dt: f64) -> Self {
        let slice = &frames[range.clone()];
        let n = slice.len() as f64;
        let speed_sum: f64 = slice.iter().map(|f| f.speed).sum();
        let peak_accel = slice
            .iter()
            .map(|f| f.accel)
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        let start_t = frames[range.start].t;
        Self {
            kind,
            start_t,
            end_t: start_t + n * dt,
            start_idx: range.start,
            end_idx: range.end,
            mean_speed: if slice.is_empty() { 0.0 } else { speed_sum / n },
            peak_accel,
            distance: speed_sum * dt,
        }
    }
}

/// All detected events, sorted by start time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventStack {
    events: Vec<MotionEvent>,
}

impl EventStack {
    pub fn new(mut events: Vec<MotionEvent>) -> Self {
        events.sort_by(|a, b| {
            a.start_t
                .total_cmp(&b.start_t)
                .then(a.start_idx.cmp(&b.start_idx))
                .then(a.kind.cmp(&b.kind))
                .then(a.end_idx.cmp(&b.end_idx))
        });
        Self { events }
    }

    pub fn events(&self) -> &[MotionEvent] {
        &self.events
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MotionEvent> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn of_type(&self, kind: EventType) -> impl Iterator<Item = &MotionEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Keeps only events whose type is in `types`.
    pub fn filtered(&self, types: &[EventType]) -> EventStack {
        Self {
            events: self
                .events
                .iter()
                .filter(|e| types.contains(&e.kind))
                .cloned()
                .collect(),
        }
    }

    /// Checks ordering and that no two exclusive events share a frame.
    pub fn check_invariants(&self) -> Result<()> {
        for w in self.events.windows(2) {
            if w[1].start_t < w[0].start_t {
                return Err(Error::Mismatch("stack not sorted".into()));
            }
        }
        let mut exclusive: Vec<&MotionEvent> = self.events.iter().filter(|e| e.kind.is_exclusive()).collect();
        exclusive.sort_by_key(|e| e.start_idx);
        for w in exclusive.windows(2) {
            if w[1].start_idx < w[0].end_idx {
                return Err(Error::Mismatch(format!(
                    "{} at {} overlaps {} at {}",
                    w[1].kind, w[1].start_t, w[0].kind, w[0].start_t
                )));
            }
        }
        Ok(())
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let events = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Parse {
                    line: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(events))
    }
}

/// Frame spacing of a uniform frame sequence.
pub(crate) fn frame_dt(frames: &[KinematicFrame]) -> Result<f64> {
    match frames {
        [] => Err(Error::EmptyInput),
        [_] => Err(Error::TooFewSamples { needed: 2, got: 1 }),
        [first, .., last] => {
            let dt = (last.t - first.t) / (frames.len() - 1) as f64;
            if dt > 0.0 {
                Ok(dt)
            } else {
                Err(Error::ZeroDuration)
            }
        }
    }
}

fn runs(mask: impl Iterator<Item = bool>) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    let mut n = 0;
    for (i, m) in mask.enumerate() {
        match (m, open) {
            (true, None) => open = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                open = None;
            }
            _ => {}
        }
        n = i + 1;
    }
    if let Some(s) = open {
        out.push(s..n);
    }
    out
}

fn long_enough(range: &std::ops::Range<usize>, dt: f64, min_duration: f64) -> bool {
    range.len() as f64 * dt >= min_duration - 1e-9
}

pub fn detect_events(frames: &[KinematicFrame], limits: &EventLimits) -> Result<EventStack> {
    limits.validate()?;
    let dt = frame_dt(frames)?;
    let mut occupied = vec![false; frames.len()];
    let mut events = Vec::new();

    for &kind in &limits.order {
        let min = limits.limit(kind).min_duration;
        let candidates = runs(frames.iter().map(|f| !f.in_gap && limits.condition(kind, f)));
        for cand in candidates.into_iter().filter(|r| long_enough(r, dt, min)) {
            let pieces: Vec<_> = runs(cand.clone().map(|i| !occupied[i]))
                .into_iter()
                .map(|r| r.start + cand.start..r.end + cand.start)
                .filter(|r| long_enough(r, dt, min))
                .collect();
            for piece in pieces {
                occupied[piece.clone()].iter_mut().for_each(|o| *o = true);
                events.push(MotionEvent::over(kind.into(), frames, piece, dt));
            }
        }
    }

    let fork = limits.fork_motion;
    if frames.iter().any(|f| f.fork_v.is_some()) {
        for (direction, sign) in [(ForkDirection::Lift, 1.0), (ForkDirection::Lower, -1.0)] {
            let mask = frames
                .iter()
                .map(|f| !f.in_gap && f.fork_v.is_some_and(|v| sign * v >= fork.threshold));
            for r in runs(mask).into_iter().filter(|r| long_enough(r, dt, fork.min_duration)) {
                events.push(MotionEvent::over(EventType::ForkMotion { direction }, frames, r, dt));
            }
        }
    }
    Ok(EventStack::new(events))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    /// `None` marks frames no exclusive event covers.
    pub label: Option<EventType>,
    pub start_idx: usize,
    pub end_idx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Partition of all frames into maximal equally-labelled runs.
    pub runs: Vec<Run>,
    /// Fork motion intervals, drawn on top of `runs`.
    pub fork_overlay: Vec<Run>,
}

/// Labels every frame with the exclusive event covering it.
pub fn segment_trajectory(frames: &[KinematicFrame], stack: &EventStack) -> Result<Segmentation> {
    let mut labels: Vec<Option<EventType>> = vec![None; frames.len()];
    let mut fork_overlay = Vec::new();
    for e in stack.iter() {
        if e.end_idx > frames.len() || e.start_idx >= e.end_idx {
            return Err(Error::Mismatch(format!(
                "event [{}, {}) outside {} frames",
                e.start_idx,
                e.end_idx,
                frames.len()
            )));
        }
        if (frames[e.start_idx].t - e.start_t).abs() > 1e-6 {
            return Err(Error::Mismatch(format!(
                "event start {} does not match frame time {}",
                e.start_t, frames[e.start_idx].t
            )));
        }
        let run = Run {
            label: Some(e.kind),
            start_idx: e.start_idx,
            end_idx: e.end_idx,
        };
        if !e.kind.is_exclusive() {
            fork_overlay.push(run);
            continue;
        }
        for l in &mut labels[e.frames()] {
            if l.is_some() {
                return Err(Error::Mismatch("exclusive events overlap".into()));
            }
            *l = Some(e.kind);
        }
    }
    let mut runs: Vec<Run> = Vec::new();
    for (i, l) in labels.into_iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.label == l => r.end_idx = i + 1,
            _ => runs.push(Run {
                label: l,
                start_idx: i,
                end_idx: i + 1,
            }),
        }
    }
    Ok(Segmentation { runs, fork_overlay })
}
