use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{FilterConfig, FilterKind, FilterMode};
use crate::error::{Error, Result};

/// One direct-form section, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl Section {
    pub fn fir(taps: Vec<f64>) -> Self {
        Self { b: taps, a: vec![1.0] }
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

/// Designed filter. `numerator`/`denominator` hold the expanded transfer
/// function; `sections` is the realization that is actually run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoefficients {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub design_rate: f64,
    pub sections: Vec<Section>,
    /// Numerator is a centered smoothing kernel (Savitzky-Golay post mode)
    /// that is applied once as a symmetric window rather than forward-backward.
    pub centered: bool,
}

impl FilterCoefficients {
    pub fn dc_gain(&self) -> f64 {
        self.numerator.iter().sum::<f64>() / self.denominator.iter().sum::<f64>()
    }

    /// Longest of numerator and denominator.
    pub fn span(&self) -> usize {
        self.numerator.len().max(self.denominator.len())
    }

    /// Edge padding used by forward-backward application.
    pub fn pad_len(&self) -> usize {
        3 * self.span()
    }

    fn from_sections(sections: Vec<Section>, rate: f64) -> Self {
        let mut num = vec![1.0];
        let mut den = vec![1.0];
        for s in &sections {
            num = convolve(&num, &s.b);
            den = convolve(&den, &s.a);
        }
        Self {
            numerator: num,
            denominator: den,
            design_rate: rate,
            sections,
            centered: false,
        }
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Odd number of taps nearest to `window_seconds * rate`; exact halves and
/// even products round up to the next odd count.
pub fn window_taps(window_seconds: f64, rate: f64) -> usize {
    let n = (window_seconds * rate).round().max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

pub fn design(config: &FilterConfig, rate: f64) -> Result<FilterCoefficients> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidRate(rate));
    }
    match config.kind {
        FilterKind::Butterworth => {
            check_cutoff(config.cutoff_hz, rate)?;
            if config.order == 0 {
                return Err(Error::Design("order must be at least 1".into()));
            }
            Ok(FilterCoefficients::from_sections(
                butterworth_sections(config.order, config.cutoff_hz, rate),
                rate,
            ))
        }
        FilterKind::Fir => {
            check_cutoff(config.cutoff_hz, rate)?;
            check_window(config.window_seconds)?;
            let taps = windowed_sinc(window_taps(config.window_seconds, rate), config.cutoff_hz, rate);
            Ok(FilterCoefficients::from_sections(vec![Section::fir(taps)], rate))
        }
        FilterKind::Savgol => {
            check_window(config.window_seconds)?;
            let n = window_taps(config.window_seconds, rate);
            if n <= config.poly_degree {
                return Err(Error::Design(format!(
                    "window of {n} samples cannot fit a degree-{} polynomial",
                    config.poly_degree
                )));
            }
            let centered = config.mode == FilterMode::ZeroPhase;
            let taps = savgol_taps(n, config.poly_degree, centered)
                .ok_or_else(|| Error::Design("singular least-squares system".into()))?;
            let mut coeffs = FilterCoefficients::from_sections(vec![Section::fir(taps)], rate);
            coeffs.centered = centered;
            Ok(coeffs)
        }
    }
}

fn check_cutoff(cutoff: f64, rate: f64) -> Result<()> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Error::Design(format!("cutoff {cutoff} Hz must be positive")));
    }
    if cutoff >= rate / 2.0 {
        return Err(Error::Design(format!(
            "cutoff {cutoff} Hz at or above Nyquist ({} Hz)",
            rate / 2.0
        )));
    }
    Ok(())
}

fn check_window(window: f64) -> Result<()> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(Error::Design(format!("window {window} s must be positive")));
    }
    Ok(())
}

/// Bilinear-transformed Butterworth low-pass, pre-warped so the -3 dB point
/// lands exactly on `cutoff`. Each section has unit DC gain.
fn butterworth_sections(order: usize, cutoff: f64, rate: f64) -> Vec<Section> {
    let k = (PI * cutoff / rate).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        let b0 = k * norm;
        sections.push(Section {
            b: vec![b0, b0],
            a: vec![1.0, (k - 1.0) * norm],
        });
    }
    let k2 = k * k;
    for i in 1..=order / 2 {
        let theta = (order + 1 - 2 * i) as f64 * PI / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.cos());
        let norm = 1.0 / (1.0 + k / q + k2);
        let b0 = k2 * norm;
        sections.push(Section {
            b: vec![b0, 2.0 * b0, b0],
            a: vec![1.0, 2.0 * (k2 - 1.0) * norm, (1.0 - k / q + k2) * norm],
        });
    }
    sections
}

fn windowed_sinc(n: usize, cutoff: f64, rate: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let wc = 2.0 * cutoff / rate;
    let mid = (n - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let x = wc * (i as f64 - mid);
            let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
            let hamming = 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            wc * sinc * hamming
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Least-squares polynomial smoothing taps, in FIR order (`taps[j]` weights
/// `x[k - j]`). Centered windows evaluate the fit at the middle sample,
/// trailing windows at the newest one.
fn savgol_taps(n: usize, degree: usize, centered: bool) -> Option<Vec<f64>> {
    let offsets: Vec<f64> = if centered {
        let m = (n / 2) as f64;
        (0..n).map(|i| i as f64 - m).collect()
    } else {
        (0..n).map(|i| i as f64 - (n - 1) as f64).collect()
    };
    let scale = offsets.iter().fold(1.0f64, |acc, o| acc.max(o.abs()));
    let u: Vec<f64> = offsets.iter().map(|o| o / scale).collect();
    let p = degree + 1;

    let mut normal = vec![vec![0.0; p]; p];
    for &ui in &u {
        let powers: Vec<f64> = (0..p).map(|k| ui.powi(k as i32)).collect();
        for r in 0..p {
            for c in 0..p {
                normal[r][c] += powers[r] * powers[c];
            }
        }
    }
    let mut e0 = vec![0.0; p];
    e0[0] = 1.0;
    let g = solve(normal, e0)?;

    // value of the fit at offset 0 is its constant term
    let by_offset: Vec<f64> = u
        .iter()
        .map(|&ui| (0..p).map(|k| g[k] * ui.powi(k as i32)).sum())
        .collect();
    Some(by_offset.into_iter().rev().collect())
}

#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
