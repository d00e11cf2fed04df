//! Tracial vectors, frame operators, frame bounds and the theta-function
//! zero certificate.
//!
//! For a vector ψ the dual-lattice frame operator is
//! `T_ψ = Σ_l |𝔚(2πl/√θ)ψ⟩⟨𝔚(2πl/√θ)ψ| = (θ/2π) π_W(D_ψ)` with
//! `D_ψ = Σ_m ⟨ψ|𝔚(√θ m)⁻¹|ψ⟩ W(m)`. A tracial ψ has `D_ψ = 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation_algebra::{represent_1d, trace_per_volume, FourierElement, HamiltonianSpec, Site};
use crate::spectral::omega_grid;
use crate::weyl_phase_space::{apply_element, dual_weyl, lattice_weyl, GridFunction, GridSpec};

/// Coefficients of a frame operator below this are dropped.
const COEFF_FLOOR: f64 = 1e-16;

/// `s(t) = g(t)/(g(t) + g(1−t))` with `g(t) = e^{−1/t}`: smooth, 0 for t ≤ 0, 1 for t ≥ 1.
fn smooth_step(t: f64) -> f64 {
    let g = |u: f64| if u <= 0.0 { 0.0 } else { (-1.0 / u).exp() };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        g(t) / (g(t) + g(1.0 - t))
    }
}

/// Bump on `[0, 2π + ε]` with `φ(x)² + φ(x + 2π)² = 1` on the overlap.
/// `ε = 0` gives the indicator of `[0, 2π)`.
fn tracial_profile(x: f64, eps: f64) -> f64 {
    let two_pi = 2.0 * PI;
    if eps == 0.0 {
        // grid points land on the endpoints up to rounding
        return if x > -1e-9 && x < two_pi - 1e-9 { 1.0 } else { 0.0 };
    }
    if x <= 0.0 || x >= two_pi + eps {
        0.0
    } else if x < eps {
        (0.5 * PI * smooth_step(x / eps)).sin()
    } else if x <= two_pi {
        1.0
    } else {
        (0.5 * PI * smooth_step((x - two_pi) / eps)).cos()
    }
}

/// Normalised θ-tracial vector `ψ(y) ∝ φ(√θ y)`.
///
/// Needs θ > 2π, `0 < ε < min(2π, θ − 2π)` and a grid on which `2π/√θ` is a
/// whole number of steps. `allow_critical` admits θ = 2π with the indicator
/// profile (ε = 0), which is tracial but not smooth.
pub fn tracial_vector(spec: &GridSpec, epsilon: f64, allow_critical: bool) -> Result<GridFunction> {
    let theta = spec.theta;
    let two_pi = 2.0 * PI;
    let critical = (theta - two_pi).abs() < 1e-12;
    if critical {
        if !allow_critical || epsilon != 0.0 {
            return Err(Error::Domain("θ = 2π only admits the non-smooth profile (ε = 0, explicit flag)".into()));
        }
    } else if theta < two_pi {
        return Err(Error::Domain(format!("no tracial vector exists for θ = {theta} < 2π")));
    } else if !(epsilon > 0.0 && epsilon < two_pi.min(theta - two_pi)) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, {})", two_pi.min(theta - two_pi))));
    }
    if spec.dual_steps.is_none() {
        return Err(Error::Incommensurate("tracial construction needs 2π/√θ on the grid".into()));
    }
    let r = theta.sqrt();
    let psi = GridFunction::from_fn(*spec, |y| Complex64::new(tracial_profile(r * y, epsilon), 0.0));
    Ok(psi.normalized())
}

/// `max_{|l|∞ ≤ radius} |⟨ψ|𝔚(√θ l)|ψ⟩ − δ_{l,0}|`.
pub fn tracial_defect(psi: &GridFunction, radius: i64) -> f64 {
    let mut worst: f64 = 0.0;
    for l1 in -radius..=radius {
        for l2 in -radius..=radius {
            let v = psi.inner(&lattice_weyl([l1, l2], psi));
            let target = if l1 == 0 && l2 == 0 { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOperator {
    /// `D_ψ` with coefficients `⟨ψ|𝔚(√θ m)⁻¹|ψ⟩`, `|m|∞ ≤ cutoff`.
    pub element: FourierElement,
    pub cutoff: i64,
    /// Largest coefficient on the outer ring `|m|∞ = cutoff`.
    pub ring_max: f64,
    /// Largest `|ψ|` within one lattice cell of the domain edge.
    pub edge_tail: f64,
    /// Set when the tail or the outer ring exceeds 1e−12.
    pub flagged: bool,
}

pub fn frame_operator(psi: &GridFunction, cutoff: i64) -> Result<FrameOperator> {
    if cutoff < 1 {
        return Err(Error::Domain("cutoff must be at least 1".into()));
    }
    let theta = psi.spec.theta;
    let mut coeffs = Vec::new();
    let mut ring_max: f64 = 0.0;
    for m1 in -cutoff..=cutoff {
        for m2 in -cutoff..=cutoff {
            let v = psi.inner(&lattice_weyl([-m1, -m2], psi));
            if m1.abs() == cutoff || m2.abs() == cutoff {
                ring_max = ring_max.max(v.norm());
            }
            if v.norm() > COEFF_FLOOR {
                coeffs.push(([m1, m2], v));
            }
        }
    }
    let edge_tail = psi.edge_tail(theta.sqrt());
    let element = FourierElement::new(theta, coeffs);
    Ok(FrameOperator { element, cutoff, ring_max, edge_tail, flagged: ring_max > 1e-12 || edge_tail > 1e-12 })
}

/// Extreme eigenvalues of `π_ω(D)` truncated to `2N + 1` sites, over `n_omega` phases.
///
/// Compressions of a self-adjoint operator have spectrum inside its convex
/// hull, so the pair brackets the true frame bounds from inside.
pub fn frame_bounds(d: &FourierElement, half_width: usize, n_omega: usize) -> Result<(f64, f64)> {
    if !d.is_self_adjoint(1e-10) {
        return Err(Error::Domain("frame operator is not self-adjoint".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for omega in omega_grid(n_omega.max(1)) {
        let (vals, _) = represent_1d(d, omega, half_width)?.eigen(false, omega)?;
        lo = lo.min(vals[0]);
        hi = hi.max(*vals.last().expect("nonempty"));
    }
    Ok((lo, hi))
}

/// Truncation parameters for [`functional_calculus`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalculusWindow {
    pub half_width: usize,
    /// Sites `|n| ≤ interior` enter the trace.
    pub interior: usize,
    pub n_omega: usize,
    /// Output coefficients are kept for `|m|∞ ≤ cutoff`.
    pub cutoff: i64,
}

impl Default for CalculusWindow {
    fn default() -> Self {
        Self { half_width: 96, interior: 32, n_omega: 32, cutoff: 12 }
    }
}

/// `f(A)` for self-adjoint A, with coefficients `a_m = τ(W(m)⁻¹ f(A))`
/// estimated by the trace per volume of `f(π_ω(A))` on interior sites,
/// averaged over the phase grid.
pub fn functional_calculus<F: Fn(f64) -> f64>(
    a: &FourierElement,
    f: F,
    window: CalculusWindow,
) -> Result<FourierElement> {
    if !a.is_self_adjoint(1e-10) {
        return Err(Error::Domain("functional calculus needs a self-adjoint element".into()));
    }
    if window.interior + window.cutoff as usize > window.half_width {
        return Err(Error::Window("interior plus cutoff exceeds the truncation".into()));
    }
    let theta = a.theta;
    let n = 2 * window.half_width + 1;
    let cut = window.cutoff;
    let side = (2 * cut + 1) as usize;
    let mut acc = vec![Complex64::new(0.0, 0.0); side * side];
    let omegas = omega_grid(window.n_omega.max(1));
    for &omega in &omegas {
        let m = represent_1d(a, omega, window.half_width)?;
        let (vals, vecs) = m.eigen(true, omega)?;
        let fv: Vec<f64> = vals.iter().map(|&v| f(v)).collect();
        // F_{r,c} = Σ_k f(λ_k) v_k(r) conj(v_k(c))
        let mut fm = DMatrix::<Complex64>::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            let col = &vecs[k * n..(k + 1) * n];
            for c in 0..n {
                let vc = col[c].conj() * w;
                if vc == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..n {
                    fm[(r, c)] += col[r] * vc;
                }
            }
        }
        for m1 in -cut..=cut {
            for m2 in -cut..=cut {
                let mut s = Complex64::new(0.0, 0.0);
                for site in -(window.interior as i64)..=window.interior as i64 {
                    let l = site + m1;
                    let phase = -0.5 * theta * (m1 * m2) as f64 - (omega - l as f64 * theta) * m2 as f64;
                    s += Complex64::from_polar(1.0, phase) * fm[(m.index(l), m.index(site))];
                }
                acc[((m1 + cut) as usize) * side + (m2 + cut) as usize] += s;
            }
        }
    }
    let norm = 1.0 / (omegas.len() * (2 * window.interior + 1)) as f64;
    let items = (0..side * side).map(|i| {
        let m: Site = [(i / side) as i64 - cut, (i % side) as i64 - cut];
        (m, acc[i] * norm)
    });
    Ok(FourierElement::new(theta, items.filter(|(_, v)| v.norm() > 1e-15)))
}

/// `ψ̂ = π_W(D_ψ^{−1/2}) ψ = (θ/2π)^{1/2} T_ψ^{−1/2} ψ`.
pub fn normalize_frame(psi: &GridFunction, d: &FourierElement, window: CalculusWindow) -> Result<GridFunction> {
    let inv_sqrt = functional_calculus(d, |x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt(), window)?;
    apply_element(&inv_sqrt, psi)
}

/// Both sides of the summation formula applied to φ: the dual-lattice sum
/// `Σ_{|l|∞ ≤ radius} ⟨𝔚(2πl/√θ)ψ|φ⟩ 𝔚(2πl/√θ)ψ` and `(θ/2π) π_W(D_ψ) φ`.
pub fn poisson_sides(
    psi: &GridFunction,
    d: &FourierElement,
    phi: &GridFunction,
    radius: i64,
) -> Result<(GridFunction, GridFunction)> {
    let mut lhs = GridFunction::zeros(psi.spec);
    for l1 in -radius..=radius {
        for l2 in -radius..=radius {
            let w = dual_weyl([l1, l2], psi)?;
            lhs = lhs.axpy(w.inner(phi), &w);
        }
    }
    let rhs = apply_element(d, phi)?.scaled(Complex64::new(psi.spec.theta / (2.0 * PI), 0.0));
    Ok((lhs, rhs))
}

/// Expansion `Σ_{|l|∞ ≤ radius} c_l 𝔚(2πl/√θ)ψ` with
/// `c_l = ⟨𝔚(2πl/√θ)ψ|T_ψ⁻¹φ⟩` and `T_ψ⁻¹ = (2π/θ) π_W(D_ψ⁻¹)`.
pub fn frame_reconstruction(
    psi: &GridFunction,
    d_inverse: &FourierElement,
    phi: &GridFunction,
    radius: i64,
) -> Result<GridFunction> {
    let t_inv_phi = apply_element(d_inverse, phi)?.scaled(Complex64::new(2.0 * PI / psi.spec.theta, 0.0));
    let mut out = GridFunction::zeros(psi.spec);
    for l1 in -radius..=radius {
        for l2 in -radius..=radius {
            let w = dual_weyl([l1, l2], psi)?;
            out = out.axpy(w.inner(&t_inv_phi), &w);
        }
    }
    Ok(out)
}

/// Element of the dual algebra at `θ′ = 4π²/θ` with coefficients
/// `(2π/θ)⟨ψ|𝔚(√θ′ l)⁻¹|ψ⟩`; for tracial ψ it represents the projection onto
/// the closed span of `{𝔚(√θ m)ψ}`.
pub fn dual_frame_element(psi: &GridFunction, radius: i64) -> Result<FourierElement> {
    let theta = psi.spec.theta;
    let theta_dual = 4.0 * PI * PI / theta;
    let mut coeffs = Vec::new();
    for l1 in -radius..=radius {
        for l2 in -radius..=radius {
            let v = psi.inner(&dual_weyl([-l1, -l2], psi)?) * (2.0 * PI / theta);
            if v.norm() > COEFF_FLOOR {
                coeffs.push(([l1, l2], v));
            }
        }
    }
    Ok(FourierElement::new(theta_dual, coeffs))
}

/// Mean over the phase grid of `(1/Λ) Tr_Λ π_ω(a)`.
pub fn mean_trace(a: &FourierElement, n_omega: usize, lambda: usize) -> Result<f64> {
    let omegas = omega_grid(n_omega.max(1));
    let mut s = 0.0;
    for &w in &omegas {
        s += trace_per_volume(a, w, lambda)?.re;
    }
    Ok(s / omegas.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub theta: f64,
    pub vector: String,
    pub tracial_defect: f64,
    pub frame_lower: f64,
    pub frame_upper: f64,
    pub cutoff: i64,
    pub half_width: usize,
    pub n_omega: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichBin {
    pub lo: f64,
    pub hi: f64,
    /// `𝒩(Δ)`.
    pub dos: f64,
    /// `ρ(Δ) = τ(χ_Δ(H) D_ψ)`.
    pub rho: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub frame_lower: f64,
    pub frame_upper: f64,
    /// Nonempty bins only.
    pub bins: Vec<SandwichBin>,
    /// `ρ(ℝ)`.
    pub rho_total: f64,
    /// `‖v‖² = τ(D_ψ)`.
    pub v_norm_sq: f64,
    pub holds_all: bool,
}

/// Compares the spectral measure `ρ(Δ) = ⟨v|χ_Δ(H_2D)|v⟩ = τ(χ_Δ(H) D_ψ)`
/// with the density of states bin by bin.
///
/// Both measures are computed from the same truncations `π_ω(H)`, `π_ω(D)` on
/// `2N + 1` sites, so with `(c, C)` the extreme eigenvalues of those `π_ω(D)`
/// the sandwich `c 𝒩(Δ) ≤ ρ(Δ) ≤ C 𝒩(Δ)` holds exactly; it is checked with a
/// relative slack of 1e−12.
pub fn dos_equivalence_check(
    h: &HamiltonianSpec,
    d: &FourierElement,
    half_width: usize,
    n_omega: usize,
    n_bins: usize,
) -> Result<SandwichReport> {
    let theta = d.theta;
    let a = h.element(theta);
    let edge = a.norm1() + 0.1;
    let width = 2.0 * edge / n_bins as f64;
    let mut dos = vec![0.0; n_bins];
    let mut rho = vec![0.0; n_bins];
    let (mut c, mut cap) = (f64::INFINITY, f64::NEG_INFINITY);
    let omegas = omega_grid(n_omega);
    let n = 2 * half_width + 1;
    let weight = 1.0 / (n * omegas.len()) as f64;
    for &omega in &omegas {
        let hm = represent_1d(&a, omega, half_width)?;
        let (vals, vecs) = hm.eigen(true, omega)?;
        let dm = represent_1d(d, omega, half_width)?;
        let (dvals, _) = dm.eigen(false, omega)?;
        c = c.min(dvals[0]);
        cap = cap.max(*dvals.last().expect("nonempty"));
        let mut dv = vec![Complex64::new(0.0, 0.0); n];
        for (k, &e) in vals.iter().enumerate() {
            let v = &vecs[k * n..(k + 1) * n];
            dm.matvec(v, &mut dv);
            let q: f64 = v.iter().zip(&dv).map(|(x, y)| (x.conj() * y).re).sum();
            let b = (((e + edge) / width) as usize).min(n_bins - 1);
            dos[b] += weight;
            rho[b] += weight * q;
        }
    }
    let mut bins = Vec::new();
    for b in 0..n_bins {
        if dos[b] == 0.0 {
            continue;
        }
        let slack = 1e-12 * dos[b];
        let holds = rho[b] >= c * dos[b] - slack && rho[b] <= cap * dos[b] + slack;
        bins.push(SandwichBin { lo: -edge + b as f64 * width, hi: -edge + (b + 1) as f64 * width, dos: dos[b], rho: rho[b], holds });
    }
    let holds_all = bins.iter().all(|b| b.holds);
    Ok(SandwichReport {
        frame_lower: c,
        frame_upper: cap,
        rho_total: crate::linalg::compensated_sum(rho.iter().copied()),
        v_norm_sq: d.coeff([0, 0]).re,
        bins,
        holds_all,
    })
}

/// `f(z) = Σ_{|n| ≤ n_max} e^{−πn² − nz}`.
pub fn theta_function(z: Complex64, n_max: i64) -> Complex64 {
    (-n_max..=n_max).map(|n| (-(PI * (n * n) as f64) - z * n as f64).exp()).sum()
}

fn theta_derivative(z: Complex64, n_max: i64) -> Complex64 {
    (-n_max..=n_max).map(|n| -(n as f64) * (-(PI * (n * n) as f64) - z * n as f64).exp()).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaCertificate {
    pub n_max: i64,
    pub center_value: f64,
    /// Largest error of `f(z + 2πi) = f(z)` over the sample points.
    pub period_error: f64,
    /// Largest relative error of `f(z + 2π) = e^{z+π} f(z)`.
    pub quasi_period_error: f64,
    /// `(1/2πi)∮ f′/f` around the cell `[0, 2π] + i[0, 2π]`.
    pub winding_raw: [f64; 2],
    pub winding: i64,
    /// Contour offset used (nonzero only after a refinement).
    pub contour_offset: f64,
    /// `min |f(π + iπ + r e^{iφ})| / r²` over `r ∈ [1e−3, 1e−1]`.
    pub c1: f64,
    /// Slope of `log min_φ |f|` against `log r` (a simple zero gives 1).
    pub local_exponent: f64,
    pub value_at_zero: f64,
    pub passed: bool,
}

pub fn theta_zero_certificate(n_max: i64) -> Result<ThetaCertificate> {
    if n_max < 20 {
        return Err(Error::Domain(format!("n_max = {n_max} is below 20")));
    }
    let z0 = Complex64::new(PI, PI);
    let center_value = theta_function(z0, n_max).norm();
    let samples = [
        Complex64::new(0.3, 0.2),
        Complex64::new(1.7, -2.1),
        Complex64::new(-2.5, 4.0),
        Complex64::new(3.9, 1.1),
        Complex64::new(-0.8, -5.5),
    ];
    let mut period_error: f64 = 0.0;
    let mut quasi_period_error: f64 = 0.0;
    for &z in &samples {
        let f = theta_function(z, n_max);
        let fi = theta_function(z + Complex64::new(0.0, 2.0 * PI), n_max);
        period_error = period_error.max((fi - f).norm() / f.norm().max(1.0));
        let fr = theta_function(z + 2.0 * PI, n_max);
        let want = (z + PI).exp() * f;
        quasi_period_error = quasi_period_error.max((fr - want).norm() / want.norm().max(1.0));
    }
    // contour: the square cell, shifted if it passes close to a zero
    let mut offset = 0.0;
    let points_per_side = 4096;
    let (winding_raw, _) = loop {
        let corners = [
            Complex64::new(offset, offset),
            Complex64::new(2.0 * PI + offset, offset),
            Complex64::new(2.0 * PI + offset, 2.0 * PI + offset),
            Complex64::new(offset, 2.0 * PI + offset),
        ];
        let mut integral = Complex64::new(0.0, 0.0);
        let mut min_abs = f64::INFINITY;
        for side in 0..4 {
            let a = corners[side];
            let b = corners[(side + 1) % 4];
            let dz = (b - a) / points_per_side as f64;
            for k in 0..points_per_side {
                // trapezoid on a closed contour: equal weights at the nodes
                let z = a + dz * k as f64;
                let f = theta_function(z, n_max);
                min_abs = min_abs.min(f.norm());
                integral += theta_derivative(z, n_max) / f * dz;
            }
        }
        if min_abs < 1e-6 && offset < 0.5 {
            offset += 0.1;
            continue;
        }
        let w = integral / Complex64::new(0.0, 2.0 * PI);
        break ([w.re, w.im], min_abs);
    };
    let winding = winding_raw[0].round() as i64;
    let radii = crate::scaling::geometric_grid(1e-3, 1e-1, 10f64.powf(0.25));
    let mut c1 = f64::INFINITY;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in &radii {
        let mut m = f64::INFINITY;
        for k in 0..64 {
            let phi = 2.0 * PI * k as f64 / 64.0;
            m = m.min(theta_function(z0 + Complex64::from_polar(r, phi), n_max).norm());
        }
        c1 = c1.min(m / (r * r));
        xs.push(r.ln());
        ys.push(m.ln());
    }
    let (local_exponent, _, _) = crate::linalg::line_fit(&xs, &ys);
    let value_at_zero = theta_function(Complex64::new(0.0, 0.0), n_max).re;
    let passed = center_value <= 1e-10
        && period_error <= 1e-10
        && quasi_period_error <= 1e-10
        && winding == 1
        && (winding_raw[0] - 1.0).abs() < 1e-6
        && c1 > 0.0;
    Ok(ThetaCertificate {
        n_max,
        center_value,
        period_error,
        quasi_period_error,
        winding_raw,
        winding,
        contour_offset: offset,
        c1,
        local_exponent,
        value_at_zero,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_partition_of_unity() {
        let eps = 0.7;
        for k in 0..100 {
            let x = eps * k as f64 / 100.0;
            let s = tracial_profile(x, eps).powi(2) + tracial_profile(x + 2.0 * PI, eps).powi(2);
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn theta_value_at_origin() {
        // π^{1/4}/Γ(3/4)
        let want = PI.powf(0.25) / 1.225_416_702_465_177_6;
        assert!((theta_function(Complex64::new(0.0, 0.0), 6).re - want).abs() < 1e-15);
    }
}
