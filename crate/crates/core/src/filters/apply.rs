use super::design::{FilterCoefficients, Section};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct SectionState {
    b: Vec<f64>,
    a: Vec<f64>,
    z: Vec<f64>,
}

impl SectionState {
    fn new(section: &Section) -> Self {
        let n = section.b.len().max(section.a.len());
        let mut b = section.b.clone();
        let mut a = section.a.clone();
        b.resize(n, 0.0);
        a.resize(n, 0.0);
        Self {
            b,
            a,
            z: vec![0.0; n - 1],
        }
    }

    /// Sets the delay line to the steady state reached under constant input.
    fn settle(&mut self, input: f64) -> f64 {
        let gain = self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>();
        let output = input * gain;
        let n = self.b.len();
        for i in 0..n - 1 {
            self.z[i] = (i + 1..n)
                .map(|j| self.b[j] * input - self.a[j] * output)
                .sum();
        }
        output
    }

    // transposed direct form II
    fn step(&mut self, x: f64) -> f64 {
        let n = self.b.len();
        let y = self.b[0] * x + self.z.first().copied().unwrap_or(0.0);
        for i in 0..n - 1 {
            let next = if i + 1 < n - 1 { self.z[i + 1] } else { 0.0 };
            self.z[i] = self.b[i + 1] * x - self.a[i + 1] * y + next;
        }
        y
    }
}

/// Sample-by-sample runner for a designed filter.
#[derive(Debug, Clone)]
pub struct CausalFilter {
    sections: Vec<SectionState>,
}

impl CausalFilter {
    /// All delay lines zeroed.
    pub fn at_rest(coeffs: &FilterCoefficients) -> Self {
        Self {
            sections: coeffs.sections.iter().map(SectionState::new).collect(),
        }
    }

    /// Delay lines primed so that a constant `value` passes unchanged from the
    /// first sample on.
    pub fn settled(coeffs: &FilterCoefficients, value: f64) -> Self {
        let mut filter = Self::at_rest(coeffs);
        let mut v = value;
        for s in &mut filter.sections {
            v = s.settle(v);
        }
        filter
    }

    pub fn step(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |v, s| s.step(v))
    }
}

/// Single forward pass, primed on the first sample.
pub fn apply_causal(coeffs: &FilterCoefficients, series: &[f64]) -> Vec<f64> {
    let Some(&first) = series.first() else {
        return Vec::new();
    };
    let mut filter = CausalFilter::settled(coeffs, first);
    series.iter().map(|&x| filter.step(x)).collect()
}

/// Zero-phase application with odd (point-mirror) edge padding of
/// `3 * span` samples.
///
/// Recursive and FIR designs are run forward-backward. The result is the mean
/// of the forward-first and the backward-first pass, which makes the output
/// exactly time-reversal equivariant. Centered Savitzky-Golay kernels are
/// applied once as a symmetric window.
pub fn apply_zero_phase(coeffs: &FilterCoefficients, series: &[f64]) -> Result<Vec<f64>> {
    let pad = coeffs.pad_len();
    if series.len() <= pad {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: pad + 1,
        });
    }
    let ext = odd_extend(series, pad);
    let out = if coeffs.centered {
        centered_window(&coeffs.numerator, &ext)
    } else {
        let forward_first = forward_backward(coeffs, &ext);
        let mut rev = ext.clone();
        rev.reverse();
        let mut backward_first = forward_backward(coeffs, &rev);
        backward_first.reverse();
        forward_first
            .iter()
            .zip(&backward_first)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    };
    Ok(out[pad..pad + series.len()].to_vec())
}

fn forward_backward(coeffs: &FilterCoefficients, ext: &[f64]) -> Vec<f64> {
    let mut y = apply_causal(coeffs, ext);
    y.reverse();
    let mut y = apply_causal(coeffs, &y);
    y.reverse();
    y
}

fn centered_window(kernel: &[f64], ext: &[f64]) -> Vec<f64> {
    let m = kernel.len() / 2;
    (0..ext.len())
        .map(|k| {
            if k < m || k + m >= ext.len() {
                return ext[k];
            }
            kernel
                .iter()
                .enumerate()
                .map(|(j, c)| c * ext[k + m - j])
                .sum()
        })
        .collect()
}

fn odd_extend(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let (first, last) = (x[0], x[n - 1]);
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    out.extend_from_slice(x);
    out.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));
    out
}
