use serde::{Deserialize, Serialize};

use crate::events::{EventStack, EventType, ForkDirection};

pub const DEFAULT_MATCH_OVERLAP: f64 = 0.5;

const TYPE_ORDER: [EventType; 7] = [
    EventType::Standstill,
    EventType::Maneuvering,
    EventType::Driving,
    EventType::HarshBraking,
    EventType::StrongAcceleration,
    EventType::ForkMotion {
        direction: ForkDirection::Lift,
    },
    EventType::ForkMotion {
        direction: ForkDirection::Lower,
    },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeQuality {
    pub event_type: EventType,
    pub reference: usize,
    pub detected: usize,
    pub matched: usize,
    pub missed: usize,
    pub spurious: usize,
    /// 0 with `recall_defined == false` when there is no reference event.
    pub recall: f64,
    pub recall_defined: bool,
    /// 0 with `precision_defined == false` when nothing was detected.
    pub precision: f64,
    pub precision_defined: bool,
    /// Detected minus reference start time per matched pair, s.
    pub start_deltas: Vec<f64>,
    pub end_deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionQuality {
    pub match_overlap: f64,
    pub per_type: Vec<TypeQuality>,
}

impl DetectionQuality {
    pub fn get(&self, kind: EventType) -> Option<&TypeQuality> {
        self.per_type.iter().find(|q| q.event_type == kind)
    }

    /// Absolute start and end deltas of every matched pair.
    pub fn abs_boundary_deltas(&self) -> Vec<f64> {
        self.per_type
            .iter()
            .flat_map(|q| q.start_deltas.iter().chain(&q.end_deltas))
            .map(|d| d.abs())
            .collect()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

/// Greedy one-to-one matching per type: reference events are visited in
/// chronological order and each takes the earliest unmatched detection whose
/// overlap covers at least `match_overlap` of the reference duration.
pub fn evaluate_detection(detected: &EventStack, reference: &EventStack, match_overlap: f64) -> DetectionQuality {
    let per_type = TYPE_ORDER
        .iter()
        .filter_map(|&kind| {
            let refs: Vec<_> = reference.of_type(kind).collect();
            let dets: Vec<_> = detected.of_type(kind).collect();
            if refs.is_empty() && dets.is_empty() {
                return None;
            }
            let mut used = vec![false; dets.len()];
            let mut start_deltas = Vec::new();
            let mut end_deltas = Vec::new();
            for r in &refs {
                let hit = dets.iter().enumerate().find(|(i, d)| {
                    let overlap = (d.end_t.min(r.end_t) - d.start_t.max(r.start_t)).max(0.0);
                    !used[*i] && overlap >= match_overlap * r.duration() - 1e-9 && overlap > 0.0
                });
                if let Some((i, d)) = hit {
                    used[i] = true;
                    start_deltas.push(d.start_t - r.start_t);
                    end_deltas.push(d.end_t - r.end_t);
                }
            }
            let matched = start_deltas.len();
            let (recall, recall_defined) = ratio(matched, refs.len());
            let (precision, precision_defined) = ratio(matched, dets.len());
            Some(TypeQuality {
                event_type: kind,
                reference: refs.len(),
                detected: dets.len(),
                matched,
                missed: refs.len() - matched,
                spurious: dets.len() - matched,
                recall,
                recall_defined,
                precision,
                precision_defined,
                start_deltas,
                end_deltas,
            })
        })
        .collect();
    DetectionQuality {
        match_overlap,
        per_type,
    }
}
