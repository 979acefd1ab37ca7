use crate::error::{Error, Result};

/// Second-order finite differences: central in the interior, one-sided
/// three-point stencils at both ends. Output is in units per second.
pub fn differentiate(series: &[f64], rate: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { len: n, min: 3 });
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidRate(rate));
    }
    let half_rate = 0.5 * rate;
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * series[0] + 4.0 * series[1] - series[2]) * half_rate);
    out.extend(series.windows(3).map(|w| (w[2] - w[0]) * half_rate));
    out.push((3.0 * series[n - 1] - 4.0 * series[n - 2] + series[n - 3]) * half_rate);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ramp_gives_constant() {
        let x: Vec<f64> = (0..20).map(|k| 100.0 * k as f64).collect();
        for v in differentiate(&x, 100.0).unwrap() {
            assert!((v - 10_000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_gives_zero() {
        assert!(differentiate(&[3.0; 10], 50.0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sine_matches_analytic_derivative() {
        let rate = 100.0;
        let x: Vec<f64> = (0..1000)
            .map(|k| (2.0 * PI * 0.5 * k as f64 / rate).sin())
            .collect();
        let d = differentiate(&x, rate).unwrap();
        for (k, v) in d.iter().enumerate() {
            let t = k as f64 / rate;
            let expect = PI * (2.0 * PI * 0.5 * t).cos();
            // relative to the derivative amplitude
            assert!((v - expect).abs() <= 1e-3 * PI, "k={k} {v} vs {expect}");
        }
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            differentiate(&[1.0, 2.0], 10.0),
            Err(Error::SeriesTooShort { len: 2, min: 3 })
        ));
    }
}
