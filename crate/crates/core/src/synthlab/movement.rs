use serde::{Deserialize, Serialize};

use super::{rng, Noise};
use crate::error::{Error, Result};
use crate::events::{EventStack, EventType, ExclusiveKind, ForkDirection, MotionEvent};
use crate::ingest::PositionSample;
use crate::kinematics::KinematicFrame;

const SCRIPT_SOURCE: &str = "scripted";
/// Height of the positioning tag on the truck, mm.
const TAG_HEIGHT: f64 = 2200.0;

/// Anchor points of the test area, mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub parking: [f64; 2],
    pub shelf_zone: [f64; 2],
    pub load_zone: [f64; 2],
    pub diagonal: [[f64; 2]; 2],
}

impl Default for Layout {
    /// A 10 m x 10 m hall.
    fn default() -> Self {
        Self {
            parking: [1000.0, 1000.0],
            shelf_zone: [8500.0, 3000.0],
            load_zone: [2000.0, 8500.0],
            diagonal: [[1000.0, 1000.0], [8500.0, 8500.0]],
        }
    }
}

/// Linear fork movement starting `offset` seconds into its phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForkStroke {
    /// Positive lifts.
    pub delta: f64,
    pub speed: f64,
    #[serde(default)]
    pub offset: f64,
}

impl ForkStroke {
    fn duration(&self) -> f64 {
        self.delta.abs() / self.speed
    }
}

fn standstill() -> ExclusiveKind {
    ExclusiveKind::Standstill
}

fn driving() -> ExclusiveKind {
    ExclusiveKind::Driving
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Stop {
        duration: f64,
        #[serde(default = "standstill")]
        label: ExclusiveKind,
        #[serde(default)]
        fork: Option<ForkStroke>,
    },
    /// Straight move with a trapezoidal (or triangular) speed profile.
    Move {
        to: [f64; 2],
        speed: f64,
        accel: f64,
        decel: f64,
        #[serde(default = "driving")]
        label: ExclusiveKind,
        /// Ground truth label of the speed-up ramp; `label` when absent.
        #[serde(default)]
        accel_label: Option<ExclusiveKind>,
        #[serde(default)]
        decel_label: Option<ExclusiveKind>,
        #[serde(default)]
        fork: Option<ForkStroke>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovementScript {
    pub start: [f64; 2],
    #[serde(default)]
    pub start_fork: f64,
    #[serde(default)]
    pub layout: Layout,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone)]
struct Leg {
    t0: f64,
    from: [f64; 2],
    dir: [f64; 2],
    accel: f64,
    decel: f64,
    peak: f64,
    ta: f64,
    tc: f64,
    td: f64,
}

impl Leg {
    fn stop(t0: f64, at: [f64; 2], duration: f64) -> Self {
        Self {
            t0,
            from: at,
            dir: [1.0, 0.0],
            accel: 0.0,
            decel: 0.0,
            peak: 0.0,
            ta: 0.0,
            tc: duration,
            td: 0.0,
        }
    }

    fn travel(t0: f64, from: [f64; 2], to: [f64; 2], speed: f64, accel: f64, decel: f64) -> Self {
        let d = [to[0] - from[0], to[1] - from[1]];
        let dist = d[0].hypot(d[1]);
        let ramps = speed * speed / (2.0 * accel) + speed * speed / (2.0 * decel);
        let (peak, tc) = if dist >= ramps {
            (speed, (dist - ramps) / speed)
        } else {
            ((2.0 * dist * accel * decel / (accel + decel)).sqrt(), 0.0)
        };
        Self {
            t0,
            from,
            dir: [d[0] / dist, d[1] / dist],
            accel,
            decel,
            peak,
            ta: peak / accel,
            tc,
            td: peak / decel,
        }
    }

    fn duration(&self) -> f64 {
        self.ta + self.tc + self.td
    }

    /// Distance, speed and signed speed derivative `tau` seconds in.
    fn state(&self, tau: f64) -> (f64, f64, f64) {
        let tau = tau.clamp(0.0, self.duration());
        if self.peak == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let sa = 0.5 * self.accel * self.ta * self.ta;
        if tau < self.ta {
            return (0.5 * self.accel * tau * tau, self.accel * tau, self.accel);
        }
        let tau = tau - self.ta;
        if tau < self.tc {
            return (sa + self.peak * tau, self.peak, 0.0);
        }
        let tau = (tau - self.tc).min(self.td);
        let s = sa + self.peak * self.tc + self.peak * tau - 0.5 * self.decel * tau * tau;
        let v = (self.peak - self.decel * tau).max(0.0);
        (s, v, if v > 0.0 { -self.decel } else { 0.0 })
    }

    #[cfg(test)]
    fn end(&self) -> [f64; 2] {
        let (s, _, _) = self.state(self.duration());
        [self.from[0] + self.dir[0] * s, self.from[1] + self.dir[1] * s]
    }
}

#[derive(Debug, Clone, Copy)]
struct Stroke {
    t0: f64,
    t1: f64,
    z0: f64,
    rate: f64,
}

#[derive(Debug, Clone)]
struct Timeline {
    legs: Vec<Leg>,
    labels: Vec<(f64, f64, ExclusiveKind)>,
    strokes: Vec<Stroke>,
    start_fork: f64,
}

impl Timeline {
    fn duration(&self) -> f64 {
        self.legs.last().map_or(0.0, |l| l.t0 + l.duration())
    }

    fn fork_at(&self, t: f64) -> (f64, f64) {
        let mut z = self.start_fork;
        for s in &self.strokes {
            if t >= s.t1 {
                z = s.z0 + s.rate * (s.t1 - s.t0);
            } else if t >= s.t0 {
                return (s.z0 + s.rate * (t - s.t0), s.rate);
            } else {
                break;
            }
        }
        (z, 0.0)
    }
}

impl MovementScript {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.phases.is_empty() {
            return bad("script has no phases".into());
        }
        let mut at = self.start;
        for (i, p) in self.phases.iter().enumerate() {
            let (fork, duration) = match p {
                Phase::Stop { duration, fork, .. } => {
                    if !(*duration > 0.0 && duration.is_finite()) {
                        return bad(format!("phase {i}: stop duration must be positive"));
                    }
                    (fork, *duration)
                }
                Phase::Move {
                    to,
                    speed,
                    accel,
                    decel,
                    fork,
                    ..
                } => {
                    if [*speed, *accel, *decel].iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                        return bad(format!("phase {i}: speed, accel and decel must be positive"));
                    }
                    if (to[0] - at[0]).hypot(to[1] - at[1]) < 1e-6 {
                        return bad(format!("phase {i}: move of zero length"));
                    }
                    let leg = Leg::travel(0.0, at, *to, *speed, *accel, *decel);
                    at = *to;
                    (fork, leg.duration())
                }
            };
            if let Some(f) = fork {
                if !(f.speed > 0.0 && f.offset >= 0.0 && f.delta != 0.0) {
                    return bad(format!("phase {i}: fork stroke needs positive speed and nonzero delta"));
                }
                if f.offset + f.duration() > duration + 1e-9 {
                    return bad(format!("phase {i}: fork stroke outlasts its phase"));
                }
            }
        }
        Ok(())
    }

    fn timeline(&self) -> Result<Timeline> {
        self.validate()?;
        let mut t = 0.0;
        let mut at = self.start;
        let mut fork_z = self.start_fork;
        let mut legs = Vec::new();
        let mut labels: Vec<(f64, f64, ExclusiveKind)> = Vec::new();
        let mut strokes = Vec::new();
        let mut push_label = |t0: f64, t1: f64, kind: ExclusiveKind| {
            if t1 <= t0 {
                return;
            }
            match labels.last_mut() {
                Some(last) if last.2 == kind && (last.1 - t0).abs() < 1e-9 => last.1 = t1,
                _ => labels.push((t0, t1, kind)),
            }
        };
        for p in &self.phases {
            let (leg, fork) = match p {
                Phase::Stop { duration, label, fork } => {
                    push_label(t, t + duration, *label);
                    (Leg::stop(t, at, *duration), fork)
                }
                Phase::Move {
                    to,
                    speed,
                    accel,
                    decel,
                    label,
                    accel_label,
                    decel_label,
                    fork,
                } => {
                    let leg = Leg::travel(t, at, *to, *speed, *accel, *decel);
                    push_label(t, t + leg.ta, accel_label.unwrap_or(*label));
                    push_label(t + leg.ta, t + leg.ta + leg.tc, *label);
                    push_label(t + leg.ta + leg.tc, t + leg.duration(), decel_label.unwrap_or(*label));
                    at = *to;
                    (leg, fork)
                }
            };
            if let Some(f) = fork {
                let t0 = t + f.offset;
                let t1 = t0 + f.duration();
                strokes.push(Stroke {
                    t0,
                    t1,
                    z0: fork_z,
                    rate: f.delta.signum() * f.speed,
                });
                fork_z += f.delta;
            }
            t += leg.duration();
            legs.push(leg);
        }
        Ok(Timeline {
            legs,
            labels,
            strokes,
            start_fork: self.start_fork,
        })
    }

    /// Total scripted time, s.
    pub fn duration(&self) -> Result<f64> {
        Ok(self.timeline()?.duration())
    }

    /// Stops, shelf and load-zone maneuvers with fork strokes, regular drives
    /// and two sprints along the diagonal that produce strong acceleration and
    /// harsh braking.
    pub fn warehouse_demo() -> Self {
        let layout = Layout::default();
        let [p, d_end] = layout.diagonal;
        let shelf = layout.shelf_zone;
        let load = layout.load_zone;
        let aisle_shelf = [shelf[0], shelf[1] + 1000.0];
        let aisle_load = [load[0] + 500.0, load[1] - 500.0];
        let stop = |duration: f64| Phase::Stop {
            duration,
            label: ExclusiveKind::Standstill,
            fork: None,
        };
        let sprint = |to: [f64; 2]| Phase::Move {
            to,
            speed: 3000.0,
            accel: 2000.0,
            decel: 2000.0,
            label: ExclusiveKind::Driving,
            accel_label: Some(ExclusiveKind::StrongAcceleration),
            decel_label: Some(ExclusiveKind::HarshBraking),
            fork: None,
        };
        let drive = |to: [f64; 2], speed: f64, ramp: f64, fork: Option<ForkStroke>| Phase::Move {
            to,
            speed,
            accel: ramp,
            decel: ramp,
            label: ExclusiveKind::Driving,
            accel_label: None,
            decel_label: None,
            fork,
        };
        let maneuver = |to: [f64; 2], speed: f64| Phase::Move {
            to,
            speed,
            accel: speed,
            decel: speed,
            label: ExclusiveKind::Maneuvering,
            accel_label: None,
            decel_label: None,
            fork: None,
        };
        let phases = vec![
            stop(6.0),
            sprint(d_end),
            stop(5.0),
            drive(aisle_shelf, 1200.0, 500.0, None),
            stop(3.0),
            maneuver(shelf, 300.0),
            Phase::Stop {
                duration: 6.0,
                label: ExclusiveKind::Standstill,
                fork: Some(ForkStroke {
                    delta: 800.0,
                    speed: 200.0,
                    offset: 1.0,
                }),
            },
            maneuver(aisle_shelf, 300.0),
            drive(
                aisle_load,
                1500.0,
                600.0,
                Some(ForkStroke {
                    delta: -500.0,
                    speed: 150.0,
                    offset: 3.0,
                }),
            ),
            maneuver(load, 250.0),
            Phase::Stop {
                duration: 1.0,
                label: ExclusiveKind::Maneuvering,
                fork: None,
            },
            maneuver(aisle_load, 250.0),
            Phase::Stop {
                duration: 5.0,
                label: ExclusiveKind::Standstill,
                fork: Some(ForkStroke {
                    delta: -300.0,
                    speed: 150.0,
                    offset: 1.0,
                }),
            },
            drive(d_end, 1200.0, 500.0, None),
            stop(4.0),
            sprint(p),
            stop(6.0),
        ];
        Self {
            start: p,
            start_fork: 100.0,
            layout,
            phases,
        }
    }

    /// `runs` straight drives of `length` mm back and forth along x, with
    /// 5 s stops in between and at both ends.
    pub fn shuttle_runs(runs: usize, length: f64) -> Self {
        let stop = Phase::Stop {
            duration: 5.0,
            label: ExclusiveKind::Standstill,
            fork: None,
        };
        let mut phases = vec![stop.clone()];
        for i in 0..runs {
            let x = if i % 2 == 0 { length } else { 0.0 };
            phases.push(Phase::Move {
                to: [x, 0.0],
                speed: 2000.0,
                accel: 1000.0,
                decel: 1000.0,
                label: ExclusiveKind::Driving,
                accel_label: None,
                decel_label: None,
                fork: None,
            });
            phases.push(stop.clone());
        }
        Self {
            start: [0.0, 0.0],
            start_fork: 0.0,
            layout: Layout::default(),
            phases,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovementOutput {
    pub samples: Vec<PositionSample>,
    pub reference: EventStack,
    /// Exact kinematics at the sample times.
    pub truth: Vec<KinematicFrame>,
}

fn first_index_at(t: f64, rate: f64, n: usize) -> usize {
    ((t * rate - 1e-9).ceil().max(0.0) as usize).min(n)
}

pub fn gen_movement(script: &MovementScript, rate: f64, noise_std: f64, seed: u64) -> Result<MovementOutput> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidRate(rate));
    }
    let timeline = script.timeline()?;
    let noise = Noise::new(noise_std)?;
    let total = timeline.duration();
    let n = (total * rate + 1e-9).floor() as usize + 1;
    let mut rng = rng(seed);

    let mut truth = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    let mut li = 0;
    for k in 0..n {
        let t = k as f64 / rate;
        while li + 1 < timeline.legs.len() && t >= timeline.legs[li + 1].t0 {
            li += 1;
        }
        let leg = &timeline.legs[li];
        let (s, v, a) = leg.state(t - leg.t0);
        let x = leg.from[0] + leg.dir[0] * s;
        let y = leg.from[1] + leg.dir[1] * s;
        let (fork_z, fork_v) = timeline.fork_at(t);
        truth.push(KinematicFrame {
            t,
            x,
            y,
            z: TAG_HEIGHT,
            vx: leg.dir[0] * v,
            vy: leg.dir[1] * v,
            speed: v,
            accel: a,
            fork_v: Some(fork_v),
            in_gap: false,
        });
        let mut sample = PositionSample::new(
            t,
            x + noise.draw(&mut rng),
            y + noise.draw(&mut rng),
            TAG_HEIGHT + noise.draw(&mut rng),
        )
        .with_fork(fork_z + noise.draw(&mut rng));
        sample.source_id = SCRIPT_SOURCE.into();
        samples.push(sample);
    }

    let dt = 1.0 / rate;
    let mut events = Vec::new();
    let mut add = |kind: EventType, t0: f64, t1: f64| {
        let range = first_index_at(t0, rate, n)..first_index_at(t1, rate, n);
        if range.is_empty() {
            return;
        }
        let mut e = MotionEvent::over(kind, &truth, range, dt);
        e.start_t = t0;
        e.end_t = t1;
        events.push(e);
    };
    for &(t0, t1, kind) in &timeline.labels {
        add(kind.into(), t0, t1);
    }
    for s in &timeline.strokes {
        let direction = if s.rate > 0.0 {
            ForkDirection::Lift
        } else {
            ForkDirection::Lower
        };
        add(EventType::ForkMotion { direction }, s.t0, s.t1);
    }
    Ok(MovementOutput {
        samples,
        reference: EventStack::new(events),
        truth,
    })
}
