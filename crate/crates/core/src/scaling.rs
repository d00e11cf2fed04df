//! Log–log regression with windowed slopes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::line_fit;

/// Window width as a fraction of the log range.
pub const WINDOW_FRACTION: f64 = 1.0 / 3.0;
/// Window step as a fraction of the log range.
pub const STEP_FRACTION: f64 = 1.0 / 12.0;

/// Exponent estimate from samples `(x_k, y_k)` in log–log form.
///
/// Raw slopes are multiplied by `scale` to produce exponents (e.g. `1/(1−q)`
/// for dimensions, `1/q` for diffusion exponents). `upper`/`lower` are the
/// largest and smallest windowed exponents and stand in for limsup/liminf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub scale: f64,
    /// Exponent of the global fit, clamped if a clamp range was given.
    pub exponent: f64,
    /// Unclamped global exponent.
    pub raw_exponent: f64,
    pub windowed: Vec<f64>,
    pub upper: f64,
    pub lower: f64,
    pub raw_upper: f64,
    pub raw_lower: f64,
    pub residual_rms: f64,
    /// Range of the abscissa, in the caller's variable (exp of `xs`).
    pub range: (f64, f64),
}

impl ScalingFit {
    pub fn fit(xs: &[f64], ys: &[f64], scale: f64, clamp: Option<(f64, f64)>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 3 {
            return Err(Error::Insufficient(format!("{} samples, need at least 3", xs.len())));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Insufficient("non-finite sample in log-log fit".into()));
        }
        let (slope, _, rms) = line_fit(xs, ys);
        let x0 = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let x1 = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(x1 > x0) {
            return Err(Error::Insufficient("degenerate fit range".into()));
        }
        let width = (x1 - x0) * WINDOW_FRACTION;
        let step = (x1 - x0) * STEP_FRACTION;
        let mut windowed = Vec::new();
        let mut start = x0;
        while start + width <= x1 + 1e-9 * (x1 - x0) {
            let (wx, wy): (Vec<f64>, Vec<f64>) = xs
                .iter()
                .zip(ys)
                .filter(|(x, _)| **x >= start - 1e-12 && **x <= start + width + 1e-12)
                .map(|(x, y)| (*x, *y))
                .unzip();
            if wx.len() >= 3 {
                windowed.push(line_fit(&wx, &wy).0 * scale);
            }
            start += step;
        }
        let raw_exponent = slope * scale;
        if windowed.is_empty() {
            windowed.push(raw_exponent);
        }
        let raw_upper = windowed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw_lower = windowed.iter().copied().fold(f64::INFINITY, f64::min);
        let c = |v: f64| match clamp {
            Some((lo, hi)) => v.clamp(lo, hi),
            None => v,
        };
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            scale,
            exponent: c(raw_exponent),
            raw_exponent,
            windowed,
            upper: c(raw_upper),
            lower: c(raw_lower),
            raw_upper,
            raw_lower,
            residual_rms: rms,
            range: (x0.exp(), x1.exp()),
        })
    }

    /// Half the spread of the windowed exponents, used as an uncertainty proxy.
    pub fn spread(&self) -> f64 {
        0.5 * (self.raw_upper - self.raw_lower)
    }
}

/// Geometric grid `start · ratio^k` up to `stop` (inclusive within rounding).
pub fn geometric_grid(start: f64, stop: f64, ratio: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let v = start * ratio.powi(k);
        if v > stop * (1.0 + 1e-12) {
            break;
        }
        out.push(v);
        k += 1;
    }
    out
}
