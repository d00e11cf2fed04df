//! Gaussian sums over the lattice `ℤ × αℤ` with the elongated quadratic form
//! `F_δ(x, y) = δ(x + y)² + δ⁻¹(x − y)²`, and the Mehler-kernel lattice sums
//! they control.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::ScalingFit;
use crate::weyl_phase_space::{mehler_modulus, SymmetryOscillator};

/// Terms with `a·F_δ > CROWN` are left out (`e^{−40} ≈ 4e−18`).
pub const CROWN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSum {
    pub value: f64,
    pub terms: usize,
    /// Upper bound on the omitted terms.
    pub tail_bound: f64,
}

/// Lattice points of `ℤ × αℤ` (shifted by `(x₀, y₀)`) with `F_δ ≤ r` is at most
/// `((√(r/δ) + √(rδ))/α + 1)(2√(rδ) + 1)`.
fn crown_count(alpha: f64, delta: f64, r: f64) -> f64 {
    ((r / delta).sqrt() + (r * delta).sqrt()) / alpha + 1.0
}

fn tail_bound(alpha: f64, a: f64, delta: f64, r: f64) -> f64 {
    // dyadic crowns r·2^j < F ≤ r·2^{j+1}
    let mut total = 0.0;
    for j in 0..64 {
        let lo = r * 2f64.powi(j);
        let hi = 2.0 * lo;
        let term = crown_count(alpha, delta, hi) * (2.0 * (hi * delta).sqrt() + 1.0) * (-a * lo).exp();
        total += term;
        if term < 1e-30 * total.max(1e-300) || term == 0.0 {
            break;
        }
    }
    total
}

/// `S = Σ_{k,m ∈ ℤ} e^{−a F_δ(x₀ + k, y₀ + mα)}` over the crown `a F_δ ≤ 40`.
pub fn gaussian_lattice_sum(alpha: f64, a: f64, delta: f64, x0: f64, y0: f64) -> Result<LatticeSum> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1]")));
    }
    if !(alpha > 0.0 && a > 0.0) {
        return Err(Error::Domain("alpha and a must be positive".into()));
    }
    let r = CROWN / a;
    let u_max = (r / delta).sqrt();
    let v_max = (r * delta).sqrt();
    let y_max = 0.5 * (u_max + v_max);
    let m_lo = ((-y_max - y0) / alpha).floor() as i64;
    let m_hi = ((y_max - y0) / alpha).ceil() as i64;
    let mut terms = Vec::new();
    for m in m_lo..=m_hi {
        let y = y0 + m as f64 * alpha;
        let x_lo = (y - v_max).max(-y - u_max);
        let x_hi = (y + v_max).min(-y + u_max);
        if x_lo > x_hi {
            continue;
        }
        let k_lo = (x_lo - x0).floor() as i64;
        let k_hi = (x_hi - x0).ceil() as i64;
        for k in k_lo..=k_hi {
            let x = x0 + k as f64;
            let (u, v) = (x + y, x - y);
            let f = delta * u * u + v * v / delta;
            if a * f <= CROWN {
                terms.push((-a * f).exp());
            }
        }
    }
    let n = terms.len();
    Ok(LatticeSum { value: crate::linalg::compensated_sum(terms), terms: n, tail_bound: tail_bound(alpha, a, delta, r) })
}

/// One scan: the sup of a lattice sum over a grid of the base cell, per parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSumScan {
    pub alpha: f64,
    pub a: f64,
    /// `"delta"` or `"t"`.
    pub parameter: String,
    pub values: Vec<f64>,
    pub sups: Vec<f64>,
    /// Cell grid resolution per axis.
    pub cell: usize,
    pub cutoff: f64,
    /// Largest tail bound relative to the sum, over the scan.
    pub max_relative_tail: f64,
    /// Fit of `log sup` against `−log(parameter)`, excluding the largest half-decade.
    pub fit: ScalingFit,
}

fn fit_scan(values: &[f64], sups: &[f64]) -> Result<ScalingFit> {
    let vmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(sups)
        .filter(|(v, _)| **v <= vmax / 10f64.sqrt() * (1.0 + 1e-12))
        .map(|(v, s)| (-v.ln(), s.ln()))
        .unzip();
    ScalingFit::fit(&xs, &ys, 1.0, None)
}

fn check_cell(cell: usize) -> Result<()> {
    if cell < 8 {
        return Err(Error::Domain(format!("cell grid {cell}×{cell} is below 8×8")));
    }
    Ok(())
}

/// `sup` of [`gaussian_lattice_sum`] over a `cell × cell` grid of `[0,1) × [0,α)`.
pub fn lattice_sum_scan(alpha: f64, a: f64, deltas: &[f64], cell: usize) -> Result<LatticeSumScan> {
    check_cell(cell)?;
    let mut sups = Vec::with_capacity(deltas.len());
    let mut max_relative_tail: f64 = 0.0;
    for &delta in deltas {
        let mut sup: f64 = 0.0;
        for i in 0..cell {
            for j in 0..cell {
                let s = gaussian_lattice_sum(alpha, a, delta, i as f64 / cell as f64, alpha * j as f64 / cell as f64)?;
                max_relative_tail = max_relative_tail.max(s.tail_bound / s.value);
                sup = sup.max(s.value);
            }
        }
        sups.push(sup);
    }
    Ok(LatticeSumScan {
        alpha,
        a,
        parameter: "delta".into(),
        values: deltas.to_vec(),
        fit: fit_scan(deltas, &sups)?,
        sups,
        cell,
        cutoff: CROWN / a,
        max_relative_tail,
    })
}

/// Parameters `(α, a, δ, x₀, y₀)` of the Gaussian sum that, times the kernel
/// prefactor, equals the Mehler lattice sum at `(x, y)`.
///
/// Rescaling by `s = √θ/2π` maps the lattice `(2πm₁/√θ, √θm₂)` onto
/// `ℤ × (θ/2π)ℤ`, with `a = π²σ₀/θ` and `δ = tanh(μt/2)`.
pub fn mehler_reduction(osc: &SymmetryOscillator, theta: f64, t: f64, x: f64, y: f64) -> (f64, f64, f64, f64, f64) {
    let s = theta.sqrt() / (2.0 * PI);
    let delta = (0.5 * osc.mu * t).tanh();
    (theta / (2.0 * PI), PI * PI * osc.sigma0() / theta, delta, x * s, y * s)
}

/// `√σ₀ (2π sinh μt)^{−1/2}`.
pub fn mehler_prefactor(osc: &SymmetryOscillator, t: f64) -> f64 {
    osc.sigma0().sqrt() / (2.0 * PI * (osc.mu * t).sinh()).sqrt()
}

/// `Σ_{m ∈ ℤ²} |ℳ_S(t; x + 2πm₁/√θ, y + √θ m₂)|`, summed from the closed-form
/// kernel over every lattice point whose exponent is at most 40 (plus a margin).
pub fn mehler_lattice_sum(osc: &SymmetryOscillator, theta: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    let sx = 2.0 * PI / theta.sqrt();
    let sy = theta.sqrt();
    let th = (0.5 * osc.mu * t).tanh();
    let s0 = osc.sigma0();
    // exponent σ₀[(X−Y)²/th + (X+Y)²th]/4 ≤ 40 + 5 bounds |X ± Y|
    let e = 45.0;
    let du = (4.0 * e / (s0 * th)).sqrt();
    let dv = (4.0 * e * th / s0).sqrt();
    let ymax = 0.5 * (du + dv);
    let m2_lo = ((-ymax - y) / sy).floor() as i64;
    let m2_hi = ((ymax - y) / sy).ceil() as i64;
    let mut terms = Vec::new();
    for m2 in m2_lo..=m2_hi {
        let yy = y + sy * m2 as f64;
        let lo = (yy - dv).max(-yy - du);
        let hi = (yy + dv).min(-yy + du);
        if lo > hi {
            continue;
        }
        for m1 in ((lo - x) / sx).floor() as i64..=((hi - x) / sx).ceil() as i64 {
            terms.push(mehler_modulus(osc, t, x + sx * m1 as f64, yy));
        }
    }
    Ok(crate::linalg::compensated_sum(terms))
}

/// `sup` of [`mehler_lattice_sum`] over a `cell × cell` grid of
/// `[0, 2π/√θ) × [0, √θ)`, per t.
pub fn mehler_scan(osc: &SymmetryOscillator, theta: f64, ts: &[f64], cell: usize) -> Result<LatticeSumScan> {
    check_cell(cell)?;
    let sx = 2.0 * PI / theta.sqrt();
    let sy = theta.sqrt();
    let mut sups = Vec::with_capacity(ts.len());
    let mut max_relative_tail: f64 = 0.0;
    for &t in ts {
        let mut sup: f64 = 0.0;
        for i in 0..cell {
            for j in 0..cell {
                let (x, y) = (sx * i as f64 / cell as f64, sy * j as f64 / cell as f64);
                let v = mehler_lattice_sum(osc, theta, t, x, y)?;
                sup = sup.max(v);
            }
        }
        let (alpha, a, delta, _, _) = mehler_reduction(osc, theta, t, 0.0, 0.0);
        let pre = mehler_prefactor(osc, t);
        max_relative_tail = max_relative_tail.max(pre * tail_bound(alpha, a, delta, CROWN / a) / sup);
        sups.push(sup);
    }
    let (alpha, a, _, _, _) = mehler_reduction(osc, theta, 1.0, 0.0, 0.0);
    Ok(LatticeSumScan {
        alpha,
        a,
        parameter: "t".into(),
        values: ts.to_vec(),
        fit: fit_scan(ts, &sups)?,
        sups,
        cell,
        cutoff: CROWN / a,
        max_relative_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_term_and_periodicity() {
        let g = crate::GOLDEN;
        let s = gaussian_lattice_sum(g, 1.0, 0.01, 0.0, 0.0).unwrap();
        assert!(s.value >= 1.0);
        let a = gaussian_lattice_sum(g, 1.0, 0.01, 0.23, 0.41).unwrap();
        let b = gaussian_lattice_sum(g, 1.0, 0.01, 1.23, 0.41).unwrap();
        let c = gaussian_lattice_sum(g, 1.0, 0.01, 0.23, 0.41 + g).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        assert!((a.value - c.value).abs() < 1e-10);
        assert!(gaussian_lattice_sum(g, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(gaussian_lattice_sum(g, 1.0, 1.5, 0.0, 0.0).is_err());
    }
}
