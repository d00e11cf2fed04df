//! Wave-packet transport: Chebyshev propagation, position moments in the
//! chain, lattice and phase-space pictures, time averages, diffusion
//! exponents and the comparison of transport with spectral dimensions.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bessel_j_sequence, compensated_sum, hermite_functions};
use crate::rotation_algebra::{
    represent_1d, represent_2d, symmetry_automorphism, BandedMatrix, FourierElement, HamiltonianSpec, SparseMatrix2D,
};
use crate::scaling::{geometric_grid, ScalingFit};
use crate::spectral::{dos_estimate_with, multifractal_dimensions, omega_grid, Boundary, DimensionOptions};
use crate::weyl_phase_space::{build_oscillator, GridSpec, SymmetryOscillator};
use crate::{IntMatrix, S3, S4, S6};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bessel-tail target of one Chebyshev expansion.
pub const CHEBYSHEV_TOL: f64 = 1e-13;
/// Sites (in units of the hopping range) kept between the front `r‖H‖₁t` and the window edge.
pub const FRONT_MARGIN: usize = 32;
/// Gaussian time averages integrate up to `GAUSS_REACH · T`, where the weight is below 1e−12.
pub const GAUSS_REACH: f64 = 10.5;
/// Largest admissible `Δt · ‖H‖₁` for time averages.
pub const MAX_STEP_PHASE: f64 = 0.5;
/// Fraction of the phase-space grid (in x and in p) counted as its rim.
pub const RIM_FRACTION: f64 = 0.1;
/// Oscillator modes weighted exactly in the phase-space moment.
const LOW_MODES: usize = 64;

/// `e^{−ixy} = Σ_k c_k T_k(y)` on `[−1, 1]`, truncated where the Bessel tail
/// drops below [`CHEBYSHEV_TOL`].
fn chebyshev_coefficients(x: f64) -> Vec<Complex64> {
    let ax = x.abs();
    let kmax = (ax + 40.0 + 10.0 * ax.cbrt()).ceil() as usize;
    let j = bessel_j_sequence(x, kmax);
    let last = j.iter().rposition(|v| v.abs() > 1e-3 * CHEBYSHEV_TOL).unwrap_or(0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mi = Complex64::new(0.0, -1.0);
    (0..=(last + 1).min(kmax))
        .map(|k| {
            let v = pow * j[k] * if k == 0 { 1.0 } else { 2.0 };
            pow *= mi;
            v
        })
        .collect()
}

/// Jackson-damped Chebyshev coefficients of the indicator of `[a, b] ⊂ [−1, 1]`.
fn jackson_indicator(a: f64, b: f64, order: usize) -> Vec<f64> {
    let (ta, tb) = (a.clamp(-1.0, 1.0).acos(), b.clamp(-1.0, 1.0).acos());
    let kp = (order + 1) as f64;
    (0..=order)
        .map(|k| {
            let kf = k as f64;
            let mu = if k == 0 { (ta - tb) / PI } else { 2.0 * ((kf * ta).sin() - (kf * tb).sin()) / (kf * PI) };
            let g = ((kp - kf) * (PI * kf / kp).cos() + (PI * kf / kp).sin() / (PI / kp).tan()) / kp;
            g * mu
        })
        .collect()
}

/// A Hamiltonian acting on a state vector, with the geometry needed to
/// restrict work to the region a state can have reached.
trait Propagator {
    fn len(&self) -> usize;
    /// Index ranges of the sites within `radius` hops of the origin.
    fn rows(&self, radius: usize) -> Vec<Range<usize>>;
    /// `y = Hx` on `rows(radius)`, for x supported in `rows(radius − growth)`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64], radius: usize);
    fn growth(&self) -> usize;
    fn cap(&self) -> usize;
    /// Hop distance of site `i` from the origin.
    fn site_radius(&self, i: usize) -> usize;
}

struct ChainOp<'a> {
    m: &'a BandedMatrix,
}

impl Propagator for ChainOp<'_> {
    fn len(&self) -> usize {
        self.m.size()
    }
    fn rows(&self, radius: usize) -> Vec<Range<usize>> {
        let c = self.m.half_width;
        let r = radius.min(c);
        vec![c - r..c + r + 1]
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64], radius: usize) {
        let rg = self.rows(radius).remove(0);
        self.m.matvec_range(x, y, rg.start, rg.end);
    }
    fn growth(&self) -> usize {
        self.m.bandwidth
    }
    fn cap(&self) -> usize {
        self.m.half_width
    }
    fn site_radius(&self, i: usize) -> usize {
        i.abs_diff(self.m.half_width)
    }
}

struct LatticeOp<'a> {
    m: &'a SparseMatrix2D,
}

impl Propagator for LatticeOp<'_> {
    fn len(&self) -> usize {
        self.m.size()
    }
    fn rows(&self, radius: usize) -> Vec<Range<usize>> {
        let n = self.m.half_width;
        let r = radius.min(n);
        let s = self.m.side();
        (n - r..=n + r).map(|i1| i1 * s + n - r..i1 * s + n + r + 1).collect()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64], radius: usize) {
        self.m.matvec_box(x, y, radius);
    }
    fn growth(&self) -> usize {
        self.m.reach.0.max(self.m.reach.1) as usize
    }
    fn cap(&self) -> usize {
        self.m.half_width
    }
    fn site_radius(&self, i: usize) -> usize {
        let (s, n) = (self.m.side(), self.m.half_width);
        (i / s).abs_diff(n).max((i % s).abs_diff(n))
    }
}

/// `π_W(A) = Σ a_m 𝔚(√θ m)` on a grid: each term is an exact shift by
/// `m₁K` steps times a phase profile.
struct WeylOp {
    n: usize,
    terms: Vec<(i64, Vec<Complex64>)>,
}

impl WeylOp {
    fn new(a: &FourierElement, spec: &GridSpec) -> Self {
        let r = spec.theta.sqrt();
        let terms = a
            .coeffs()
            .iter()
            .map(|(m, am)| {
                let (a1, a2) = (r * m[0] as f64, r * m[1] as f64);
                let pre = am * Complex64::from_polar(1.0, 0.5 * a1 * a2);
                let phases = (0..spec.len()).map(|j| pre * Complex64::from_polar(1.0, a2 * spec.x(j))).collect();
                (m[0] * spec.refinement as i64, phases)
            })
            .collect();
        Self { n: spec.len(), terms }
    }
}

impl Propagator for WeylOp {
    fn len(&self) -> usize {
        self.n
    }
    fn rows(&self, _radius: usize) -> Vec<Range<usize>> {
        vec![0..self.n]
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64], _radius: usize) {
        let n = self.n as i64;
        y.iter_mut().for_each(|v| *v = ZERO);
        for (shift, phases) in &self.terms {
            let s = shift.rem_euclid(n) as usize;
            for (j, yj) in y.iter_mut().enumerate() {
                let src = if j + s >= self.n { j + s - self.n } else { j + s };
                *yj += phases[j] * x[src];
            }
        }
    }
    fn growth(&self) -> usize {
        0
    }
    fn cap(&self) -> usize {
        0
    }
    fn site_radius(&self, _i: usize) -> usize {
        0
    }
}

/// Zeroes the sites beyond the outermost one carrying more than 1e−30 of the
/// mass; returns the new radius and the norm of what was dropped.
fn trim<P: Propagator>(op: &P, psi: &mut [Complex64], radius: usize) -> (usize, f64) {
    let rows = op.rows(radius);
    let total: f64 = rows.iter().flat_map(|r| r.clone()).map(|i| psi[i].norm_sqr()).sum();
    let floor = 1e-30 * total;
    let mut keep = 0;
    for i in rows.iter().flat_map(|r| r.clone()) {
        if psi[i].norm_sqr() > floor {
            keep = keep.max(op.site_radius(i));
        }
    }
    let mut dropped = 0.0;
    for i in rows.iter().flat_map(|r| r.clone()) {
        if op.site_radius(i) > keep {
            dropped += psi[i].norm_sqr();
            psi[i] = ZERO;
        }
    }
    (keep, dropped.sqrt())
}

/// `e^{−iHt}ψ` for ψ supported within `radius`; returns the state and its new radius.
fn propagate<P: Propagator>(op: &P, scale: f64, psi: &[Complex64], radius: usize, t: f64) -> (Vec<Complex64>, usize) {
    let coeffs = chebyshev_coefficients(scale * t);
    chebyshev_series(op, scale, psi, radius, &coeffs)
}

/// `Σ c_k T_k(H/scale) ψ` by the three-term recurrence.
fn chebyshev_series<P: Propagator, C: Copy + Into<Complex64>>(
    op: &P,
    scale: f64,
    psi: &[Complex64],
    radius: usize,
    coeffs: &[C],
) -> (Vec<Complex64>, usize) {
    let n = op.len();
    let c0: Complex64 = coeffs[0].into();
    let mut out: Vec<Complex64> = psi.iter().map(|v| v * c0).collect();
    if coeffs.len() == 1 {
        return (out, radius);
    }
    let inv = 1.0 / scale;
    let mut prev = psi.to_vec();
    let mut cur = vec![ZERO; n];
    let mut r = (radius + op.growth()).min(op.cap());
    op.apply(&prev, &mut cur, r);
    let c1: Complex64 = coeffs[1].into();
    for rg in op.rows(r) {
        for i in rg {
            cur[i] *= inv;
            out[i] += c1 * cur[i];
        }
    }
    let mut next = vec![ZERO; n];
    for c in &coeffs[2..] {
        let c: Complex64 = (*c).into();
        r = (r + op.growth()).min(op.cap());
        op.apply(&cur, &mut next, r);
        for rg in op.rows(r) {
            for i in rg {
                next[i] = next[i] * (2.0 * inv) - prev[i];
                out[i] += c * next[i];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    (out, r)
}

fn norm(v: &[Complex64]) -> f64 {
    compensated_sum(v.iter().map(|z| z.norm_sqr())).sqrt()
}

/// `e^{−iHt}ψ₀` for a chain truncation H.
///
/// The spectral radius is bounded by Gershgorin. The result is refused when
/// the ballistic front `r·‖H‖·|t|` (plus a margin of [`FRONT_MARGIN`]·r sites)
/// from the bulk of ψ₀ (mass above 1e−30) would reach the window edge.
pub fn evolve(h: &BandedMatrix, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if psi0.len() != h.size() {
        return Err(Error::Domain(format!("state has {} entries, matrix has {}", psi0.len(), h.size())));
    }
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    let c = h.half_width as i64;
    // outermost site carrying more than 1e−30 of the mass
    let floor = 1e-30 * psi0.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let reach = psi0
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > floor)
        .map(|(i, _)| (i as i64 - c).unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let (lo, hi) = h.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    let r = h.bandwidth;
    if r > 0 {
        let room = h.half_width as f64 - reach as f64 - (FRONT_MARGIN * r) as f64;
        let t_max = (room / (r as f64 * scale)).max(0.0);
        if t.abs() > t_max {
            return Err(Error::Leakage { t, t_max });
        }
    }
    let full = psi0.iter().rposition(|v| *v != ZERO).map_or(0, |i| (i as i64 - c).unsigned_abs() as usize);
    let start = psi0.iter().position(|v| *v != ZERO).map_or(0, |i| (i as i64 - c).unsigned_abs() as usize);
    let (out, _) = propagate(&ChainOp { m: h }, scale, psi0, full.max(start), t);
    let (n0, n1) = (norm(psi0), norm(&out));
    if (n0 - n1).abs() > 1e-10 * n0.max(1.0) {
        return Err(Error::Invariant(format!("norm drifted from {n0} to {n1}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    #[serde(rename = "1d")]
    Chain,
    #[serde(rename = "2d")]
    Lattice,
    #[serde(rename = "weyl")]
    Weyl,
}

impl Representation {
    pub fn tag(&self) -> &'static str {
        match self {
            Representation::Chain => "1d",
            Representation::Lattice => "2d",
            Representation::Weyl => "weyl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// `(1/2T) ∫_{−T}^{T}`.
    Cesaro,
    /// Weight `e^{−t²/4T²}/(2√π T)` on the real line.
    Gaussian,
}

/// Moment samples `M(q, t_k)` on a uniform time grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportTrace {
    pub model: String,
    pub representation: Representation,
    pub q: f64,
    pub delta: Option<(f64, f64)>,
    pub times: Vec<f64>,
    pub moments: Vec<f64>,
    /// Bound on the truncation error of each moment.
    pub error_bounds: Vec<f64>,
    pub averaging: Averaging,
    /// `‖H‖₁`, which sets the admissible time step for averages.
    pub h_norm1: f64,
    pub metadata: Vec<(String, String)>,
}

impl TransportTrace {
    pub fn t_max(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Largest T whose average the samples support in the trace's mode.
    pub fn t_avg_max(&self) -> f64 {
        match self.averaging {
            Averaging::Cesaro => self.t_max(),
            Averaging::Gaussian => self.t_max() / GAUSS_REACH,
        }
    }

    pub fn with_averaging(&self, averaging: Averaging) -> Self {
        Self { averaging, ..self.clone() }
    }

    /// Largest ratio of error bound to moment over `t > 0`.
    pub fn worst_relative_error(&self) -> f64 {
        self.moments
            .iter()
            .zip(&self.error_bounds)
            .skip(1)
            .map(|(m, e)| if *m > 0.0 { e / m } else if *e > 0.0 { f64::INFINITY } else { 0.0 })
            .fold(0.0, f64::max)
    }

    /// `⟨M⟩_T` at each T.
    pub fn averages(&self, ts: &[f64]) -> Result<Vec<f64>> {
        let samples: Vec<(f64, f64)> = self.times.iter().copied().zip(self.moments.iter().copied()).collect();
        ts.iter().map(|&t| time_average(&samples, t, self.averaging, self.h_norm1)).collect()
    }

    /// Columns `t,moment,error_bound`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,moment,error_bound\n");
        for ((t, m), e) in self.times.iter().zip(&self.moments).zip(&self.error_bounds) {
            out.push_str(&format!("{t:.16e},{m:.16e},{e:.16e}\n"));
        }
        out
    }
}

/// Resources for a transport run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub qs: Vec<f64>,
    pub t_max: f64,
    /// Sample spacing; defaults to `0.5/‖H‖₁`.
    pub dt: Option<f64>,
    /// Energy window Δ; `None` is the whole line.
    pub delta: Option<(f64, f64)>,
    /// Chain sites `−N..=N`, or the lattice window `[−N, N]²`.
    pub half_width: usize,
    pub n_omega: usize,
    /// Window of the eigendecomposition behind the 1D energy filter.
    pub filter_half_width: usize,
    /// Degree of the Jackson-damped Chebyshev filter (2D and phase space).
    pub jackson_order: usize,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            qs: vec![2.0],
            t_max: 64.0,
            dt: None,
            delta: None,
            half_width: 512,
            n_omega: 16,
            filter_half_width: 200,
            jackson_order: 256,
        }
    }
}

impl TransportConfig {
    fn validate(&self) -> Result<()> {
        if self.qs.is_empty() || self.qs.iter().any(|q| !(*q > 0.0 && *q <= 2.0)) {
            return Err(Error::Domain(format!("q values {:?} must lie in (0, 2]", self.qs)));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::Domain(format!("t_max = {} must be nonnegative", self.t_max)));
        }
        if let Some((a, b)) = self.delta {
            if !(a < b) {
                return Err(Error::Domain(format!("energy window ({a}, {b}) is empty")));
            }
        }
        Ok(())
    }

    /// Uniform sample times `0, dt, …, t_max`.
    fn times(&self, h_norm1: f64) -> Result<Vec<f64>> {
        let dt_max = MAX_STEP_PHASE / h_norm1.max(1e-300);
        let dt = self.dt.unwrap_or(dt_max);
        if !(dt > 0.0) || dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("dt = {dt} exceeds {MAX_STEP_PHASE}/‖H‖₁ = {dt_max}")));
        }
        let steps = (self.t_max / dt).ceil() as usize;
        if steps == 0 {
            return Ok(vec![0.0]);
        }
        let h = self.t_max / steps as f64;
        Ok((0..=steps).map(|k| k as f64 * h).collect())
    }
}

/// Running Duhamel estimate of the distance to the untruncated evolution:
/// leak rate `L · (amplitude within hopping range of the edge)`.
struct LeakMeter {
    rate: f64,
    eps: f64,
    last_amp: f64,
}

impl LeakMeter {
    fn new(rate: f64, amp0: f64) -> Self {
        Self { rate, eps: 0.0, last_amp: amp0 }
    }
    fn step(&mut self, dt: f64, amp: f64) -> f64 {
        self.eps += dt * self.rate * self.last_amp.max(amp);
        self.last_amp = amp;
        self.eps
    }
}

/// `|⟨ψ|A|ψ⟩ − ⟨φ|A|φ⟩| ≤ ‖A‖(2‖ψ − φ‖ + ‖ψ − φ‖²)` for unit vectors.
fn moment_error(a_norm: f64, eps: f64) -> f64 {
    a_norm * (2.0 * eps + eps * eps)
}

fn make_traces(
    h: &HamiltonianSpec,
    rep: Representation,
    cfg: &TransportConfig,
    times: Vec<f64>,
    moments: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    h_norm1: f64,
    metadata: Vec<(String, String)>,
) -> Vec<TransportTrace> {
    cfg.qs
        .iter()
        .zip(moments.into_iter().zip(errors))
        .map(|(&q, (m, e))| TransportTrace {
            model: h.name.clone(),
            representation: rep,
            q,
            delta: cfg.delta,
            times: times.clone(),
            moments: m,
            error_bounds: e,
            averaging: Averaging::Cesaro,
            h_norm1,
            metadata: metadata.clone(),
        })
        .collect()
}

/// `χ_Δ(H_ω)|0⟩` from the eigendecomposition of the truncation to `−N_f..=N_f`,
/// embedded in the window `−N..=N`; also returns the amplitude near the
/// filter window's edge.
fn chain_filtered_origin(
    a: &FourierElement,
    omega: f64,
    delta: (f64, f64),
    n_f: usize,
    n: usize,
) -> Result<(Vec<Complex64>, f64)> {
    let mf = represent_1d(a, omega, n_f)?;
    let (vals, vecs) = mf.eigen(true, omega)?;
    let size = mf.size();
    let mut small = vec![ZERO; size];
    for (j, &e) in vals.iter().enumerate() {
        if e >= delta.0 && e <= delta.1 {
            let v = &vecs[j * size..(j + 1) * size];
            let w = v[n_f].conj();
            for (s, vi) in small.iter_mut().zip(v) {
                *s += vi * w;
            }
        }
    }
    let rim = 8 * mf.bandwidth.max(1);
    let edge = compensated_sum(
        small.iter().enumerate().filter(|(i, _)| (*i as i64 - n_f as i64).unsigned_abs() as usize + rim > n_f).map(|(_, v)| v.norm_sqr()),
    )
    .sqrt();
    let mut out = vec![ZERO; 2 * n + 1];
    out[n - n_f..n + n_f + 1].copy_from_slice(&small);
    Ok((out, edge))
}

/// Phase-averaged chain moments `⟨0|χ_Δ e^{iHt}|X|^q e^{−iHt}χ_Δ|0⟩`, one trace per q.
pub fn transport_1d(h: &HamiltonianSpec, theta: f64, cfg: &TransportConfig) -> Result<Vec<TransportTrace>> {
    cfg.validate()?;
    if cfg.n_omega == 0 {
        return Err(Error::Domain("n_omega must be at least 1".into()));
    }
    let a = h.element(theta);
    let h1 = a.norm1();
    let times = cfg.times(h1)?;
    let n = cfg.half_width;
    let (r1, _) = a.support_radius();
    let r = r1 as usize;
    let reach0 = match cfg.delta {
        None => 0,
        Some(_) => {
            if cfg.filter_half_width > n {
                return Err(Error::Window(format!("filter window {} exceeds N = {n}", cfg.filter_half_width)));
            }
            cfg.filter_half_width
        }
    };
    if r > 0 {
        let room = n as f64 - reach0 as f64 - (FRONT_MARGIN * r) as f64;
        let t_max = (room / (r as f64 * h1)).max(0.0);
        if cfg.t_max > t_max {
            return Err(Error::Leakage { t: cfg.t_max, t_max });
        }
    }
    let hop_rate: f64 = a.coeffs().iter().filter(|(m, _)| m[0] != 0).map(|(_, v)| v.norm()).sum();
    let nq = cfg.qs.len();
    let nt = times.len();
    let mut sum_m = vec![vec![0.0; nt]; nq];
    let mut sum_e = vec![vec![0.0; nt]; nq];
    let weights: Vec<Vec<f64>> = cfg.qs.iter().map(|&q| (0..=2 * n).map(|i| (i as f64 - n as f64).abs().powf(q)).collect()).collect();
    let omegas = omega_grid(cfg.n_omega);
    for &omega in &omegas {
        let m = represent_1d(&a, omega, n)?;
        let op = ChainOp { m: &m };
        let (mut psi, filter_err) = match cfg.delta {
            None => {
                let mut v = vec![ZERO; 2 * n + 1];
                v[n] = Complex64::new(1.0, 0.0);
                (v, 0.0)
            }
            Some(d) => chain_filtered_origin(&a, omega, d, cfg.filter_half_width, n)?,
        };
        let mut radius = reach0;
        let edge = |psi: &[Complex64], radius: usize| -> f64 {
            if radius + r <= n || r == 0 {
                return 0.0;
            }
            let rim = psi[..r].iter().chain(&psi[2 * n + 1 - r..]).map(|v| v.norm_sqr()).sum::<f64>();
            rim.sqrt()
        };
        let mut meter = LeakMeter::new(hop_rate, edge(&psi, radius));
        for k in 0..nt {
            if k > 0 {
                let dt = times[k] - times[k - 1];
                let (next, rad) = propagate(&op, h1, &psi, radius, dt);
                psi = next;
                let (rad, dropped) = trim(&op, &mut psi, rad);
                radius = rad;
                meter.eps += dropped;
            }
            let eps = if k > 0 { meter.step(times[k] - times[k - 1], edge(&psi, radius)) } else { 0.0 };
            let rg = op.rows(radius).remove(0);
            for qi in 0..nq {
                let mq = compensated_sum(rg.clone().map(|i| weights[qi][i] * psi[i].norm_sqr()));
                sum_m[qi][k] += mq;
                let a_norm = (n as f64).powf(cfg.qs[qi]);
                sum_e[qi][k] += moment_error(a_norm, eps) + moment_error(a_norm, filter_err);
            }
        }
    }
    let w = 1.0 / omegas.len() as f64;
    let moments: Vec<Vec<f64>> = sum_m.into_iter().map(|v| v.into_iter().map(|x| x * w).collect()).collect();
    let errors: Vec<Vec<f64>> = sum_e.into_iter().map(|v| v.into_iter().map(|x| x * w).collect()).collect();
    let mut meta = vec![
        ("theta".into(), format!("{theta:.16e}")),
        ("half_width".into(), n.to_string()),
        ("n_omega".into(), cfg.n_omega.to_string()),
    ];
    if cfg.delta.is_some() {
        meta.push(("filter".into(), format!("eigendecomposition on -{0}..={0}", cfg.filter_half_width)));
    }
    Ok(make_traces(h, Representation::Chain, cfg, times, moments, errors, h1, meta))
}

/// Lattice moments `⟨0|χ_Δ e^{iHt}(|X₁|^q + |X₂|^q)e^{−iHt}χ_Δ|0⟩` in the
/// magnetic representation, one trace per q.
pub fn transport_2d(h: &HamiltonianSpec, theta: f64, cfg: &TransportConfig) -> Result<Vec<TransportTrace>> {
    cfg.validate()?;
    let a = h.element(theta);
    let h1 = a.norm1();
    let times = cfg.times(h1)?;
    let n = cfg.half_width;
    let m = represent_2d(&a, n)?;
    let op = LatticeOp { m: &m };
    let r = op.growth();
    let reach0 = if cfg.delta.is_some() { r * cfg.jackson_order } else { 0 };
    if r > 0 {
        let room = n as f64 - reach0 as f64 - (FRONT_MARGIN * r) as f64;
        let t_max = (room / (r as f64 * h1)).max(0.0);
        if cfg.t_max > t_max {
            return Err(Error::Leakage { t: cfg.t_max, t_max });
        }
    }
    let origin = m.index([0, 0]).expect("origin inside the window");
    let mut psi = vec![ZERO; m.size()];
    psi[origin] = Complex64::new(1.0, 0.0);
    let mut meta = vec![("theta".into(), format!("{theta:.16e}")), ("half_width".into(), n.to_string())];
    let mut radius = 0;
    if let Some((lo, hi)) = cfg.delta {
        let coeffs = jackson_indicator(lo / h1, hi / h1, cfg.jackson_order);
        let (f, rad) = chebyshev_series(&op, h1, &psi, 0, &coeffs);
        psi = f;
        radius = rad;
        meta.push(("filter".into(), format!("jackson-chebyshev order {}", cfg.jackson_order)));
    }
    let side = m.side();
    let nq = cfg.qs.len();
    let nt = times.len();
    let mut moments = vec![vec![0.0; nt]; nq];
    let mut errors = vec![vec![0.0; nt]; nq];
    let coord_pow: Vec<Vec<f64>> = cfg.qs.iter().map(|&q| (0..side).map(|i| (i as f64 - n as f64).abs().powf(q)).collect()).collect();
    let edge = |psi: &[Complex64], radius: usize| -> f64 {
        if radius + r <= n || r == 0 {
            return 0.0;
        }
        let mut s = 0.0;
        for rg in op.rows(radius) {
            for i in rg {
                let (i1, i2) = (i / side, i % side);
                let d = (i1 as i64 - n as i64).unsigned_abs().max((i2 as i64 - n as i64).unsigned_abs()) as usize;
                if d + r > n {
                    s += psi[i].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut meter = LeakMeter::new(h1, edge(&psi, radius));
    for k in 0..nt {
        if k > 0 {
            let (next, rad) = propagate(&op, h1, &psi, radius, times[k] - times[k - 1]);
            psi = next;
            let (rad, dropped) = trim(&op, &mut psi, rad);
            radius = rad;
            meter.eps += dropped;
        }
        let eps = if k > 0 { meter.step(times[k] - times[k - 1], edge(&psi, radius)) } else { 0.0 };
        for qi in 0..nq {
            let w = &coord_pow[qi];
            let mut acc = Vec::new();
            for rg in op.rows(radius) {
                for i in rg {
                    acc.push((w[i / side] + w[i % side]) * psi[i].norm_sqr());
                }
            }
            moments[qi][k] = compensated_sum(acc);
            errors[qi][k] = moment_error(2.0 * (n as f64).powf(cfg.qs[qi]), eps);
        }
    }
    Ok(make_traces(h, Representation::Lattice, cfg, times, moments, errors, h1, meta))
}

/// `ℌ_S` on a grid with cached transforms.
struct GridOscillator {
    m: [[f64; 2]; 2],
    step: f64,
    xs: Vec<f64>,
    ks: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl GridOscillator {
    fn new(osc: &SymmetryOscillator, spec: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n = spec.len();
        Self {
            m: osc.m,
            step: spec.step(),
            xs: (0..n).map(|j| spec.x(j)).collect(),
            ks: spec.frequencies(),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = psi.len();
        let [[m11, m12], [_, m22]] = self.m;
        let mut hat = psi.to_vec();
        self.fwd.process(&mut hat);
        let scale = 1.0 / n as f64;
        let mut pp: Vec<Complex64> = hat.iter().zip(&self.ks).map(|(v, k)| v * (k * k * scale)).collect();
        self.inv.process(&mut pp);
        for j in 0..n {
            out[j] = (pp[j] * m11 + psi[j] * (m22 * self.xs[j] * self.xs[j])) * 0.5;
        }
        if m12 != 0.0 {
            let mut p: Vec<Complex64> = hat.iter().zip(&self.ks).map(|(v, k)| v * (k * scale)).collect();
            self.inv.process(&mut p);
            let mut xq: Vec<Complex64> = psi.iter().zip(&self.xs).map(|(v, x)| v * x).collect();
            self.fwd.process(&mut xq);
            for (v, k) in xq.iter_mut().zip(&self.ks) {
                *v *= k * scale;
            }
            self.inv.process(&mut xq);
            for j in 0..n {
                out[j] += (p[j] * self.xs[j] + xq[j]) * (0.5 * m12);
            }
        }
    }

    /// `⟨ψ|ℌ^β|ψ⟩` for `0 < β < 1`, as a plain grid sum.
    ///
    /// The lowest [`LOW_MODES`] oscillator eigenfunctions are projected out and
    /// weighted by `(μ(n + ½))^β` directly. The rest has spectrum above
    /// `μ(LOW_MODES + ½)` and goes through
    /// `ℌ^β = h₁^β + β/Γ(1−β) ∫₀^∞ (e^{−sh₁} − e^{−sℌ}) s^{−1−β} ds` (in mean,
    /// `h₁ = ⟨ℌ⟩`), whose integrand is `O(s²·Var ℌ)` near zero and dies like
    /// `e^{−μ·LOW_MODES·s}`. Without its chirp `ℌ` is `(a p² + b x²)/2`, and
    /// `e^{−sℌ}` factors exactly into a Gaussian multiplier between two heat
    /// kernels, so each node costs two FFTs. Splitting off the low modes
    /// keeps s small, before the periodic heat kernel flattens out.
    fn power_moment(&self, psi: &[Complex64], beta: f64) -> f64 {
        let n = psi.len();
        let [[m11, m12], [_, m22]] = self.m;
        let (a, chirp) = (m11, m12 / m11);
        let omega = (m11 * m22 - m12 * m12).sqrt();
        let b = omega * omega / a;
        let sigma0 = omega / a;
        let h = self.step;
        // φ = e^{icx²/2}ψ, split against σ₀^{1/4} h_k(√σ₀ x)
        let mut phi: Vec<Complex64> =
            psi.iter().zip(&self.xs).map(|(v, x)| v * Complex64::from_polar(1.0, 0.5 * chirp * x * x)).collect();
        let reach = ((2.0 * LOW_MODES as f64).sqrt() + 12.0) / sigma0.sqrt();
        let amp = sigma0.powf(0.25);
        let mut coef = vec![ZERO; LOW_MODES];
        for (v, &x) in phi.iter().zip(&self.xs) {
            if x.abs() <= reach {
                for (c, e) in coef.iter_mut().zip(hermite_functions(sigma0.sqrt() * x, LOW_MODES)) {
                    *c += v * (amp * e * h);
                }
            }
        }
        for (v, &x) in phi.iter_mut().zip(&self.xs) {
            if x.abs() <= reach {
                for (c, e) in coef.iter().zip(hermite_functions(sigma0.sqrt() * x, LOW_MODES)) {
                    *v -= c * (amp * e);
                }
            }
        }
        let low = compensated_sum(coef.iter().enumerate().map(|(k, c)| c.norm_sqr() * (omega * (k as f64 + 0.5)).powf(beta))) / h;
        let total: f64 = phi.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return low;
        }
        let rest: Vec<Complex64> =
            phi.iter().zip(&self.xs).map(|(v, x)| v * Complex64::from_polar(1.0, -0.5 * chirp * x * x)).collect();
        let mut hrest = vec![ZERO; n];
        self.apply(&rest, &mut hrest);
        let h1 = compensated_sum(rest.iter().zip(&hrest).map(|(a, b)| (a.conj() * b).re)) / total;
        let h2 = hrest.iter().map(|v| v.norm_sqr()).sum::<f64>() / total;
        let var = (h2 - h1 * h1).max(0.0);
        let head = h1.powf(beta);
        if var <= 1e-14 * h1 * h1 {
            return low + total * head;
        }
        let mut phi_hat = phi;
        self.fwd.process(&mut phi_hat);
        // ⟨φ|e^{−sℌ₀}|φ⟩ = ‖e^{−sℌ₀/2}φ‖²
        let mut v = vec![ZERO; n];
        let mut semigroup = |s: f64| -> f64 {
            let tau = 0.5 * s;
            let kappa = a / omega * (0.5 * omega * tau).tanh();
            let wide = b / omega * (omega * tau).sinh();
            for ((v, p), k) in v.iter_mut().zip(&phi_hat).zip(&self.ks) {
                *v = p * ((-0.5 * kappa * k * k).exp() / n as f64);
            }
            self.inv.process(&mut v);
            for (v, x) in v.iter_mut().zip(&self.xs) {
                *v *= (-0.5 * wide * x * x).exp();
            }
            self.fwd.process(&mut v);
            v.iter().zip(&self.ks).map(|(v, k)| v.norm_sqr() * (-kappa * k * k).exp()).sum::<f64>() / (n as f64 * total)
        };
        // both ends are cut where the neglected part is below 1e−12 of h₁^β
        let tol = 1e-12 * head;
        let s_lo = (2.0 * (2.0 - beta) * tol / var).powf(1.0 / (2.0 - beta));
        let s_hi = -(tol * beta).ln() / (omega * (LOW_MODES as f64 + 0.5));
        let step = 0.4;
        let nodes = ((s_hi / s_lo).ln() / step).ceil() as usize;
        let terms: Vec<f64> = (0..=nodes)
            .map(|k| {
                let s = s_lo * (step * k as f64).exp();
                ((-s * h1).exp() - semigroup(s)) * s.powf(-beta)
            })
            .collect();
        let body = compensated_sum(terms);
        low + total * (head + beta / libm::tgamma(1.0 - beta) * step * body)
    }

    /// Mass outside the inner `1 − RIM_FRACTION` of the x and p ranges, and
    /// the amplitude within `wx` of the x edges plus within `wp` of the p edges.
    fn rim(&self, psi: &[Complex64], wx: f64, wp: f64) -> (f64, f64) {
        let n = psi.len() as f64;
        let xmax = self.xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let kmax = self.ks.iter().fold(0.0_f64, |a, k| a.max(k.abs()));
        let total: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return (0.0, 0.0);
        }
        let mut hat = psi.to_vec();
        self.fwd.process(&mut hat);
        let total_hat = total * n;
        let mass = |vals: &[Complex64], coords: &[f64], edge: f64, width: f64, norm: f64| -> f64 {
            vals.iter().zip(coords).filter(|(_, c)| c.abs() > edge - width).map(|(v, _)| v.norm_sqr()).sum::<f64>() / norm
        };
        let defect = mass(psi, &self.xs, xmax, RIM_FRACTION * xmax, total) + mass(&hat, &self.ks, kmax, RIM_FRACTION * kmax, total_hat);
        let amp = (mass(psi, &self.xs, xmax, wx, total) + mass(&hat, &self.ks, kmax, wp, total_hat)).sqrt();
        (defect, amp)
    }

    /// Largest value of the quadratic symbol on the grid box.
    fn symbol_max(&self) -> f64 {
        let xmax = self.xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let kmax = self.ks.iter().fold(0.0_f64, |a, k| a.max(k.abs()));
        let [[m11, m12], [_, m22]] = self.m;
        0.5 * (m11 * kmax * kmax + 2.0 * m12.abs() * kmax * xmax + m22 * xmax * xmax)
    }
}

/// `⟨v|f(A)|v⟩` for Hermitian A by Gauss quadrature on the Lanczos recursion
/// started at v; stops when two estimates 25 steps apart agree to 1e−12.
#[cfg(test)]
fn lanczos_quadrature<A: FnMut(&[Complex64], &mut [Complex64]), F: Fn(f64) -> f64>(
    mut apply: A,
    v: &[Complex64],
    f: F,
    max_steps: usize,
) -> Result<f64> {
    let n = v.len();
    let b0 = norm(v);
    if b0 == 0.0 {
        return Ok(0.0);
    }
    let mut q_prev = vec![ZERO; n];
    let mut q: Vec<Complex64> = v.iter().map(|x| x / b0).collect();
    let mut w = vec![ZERO; n];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    for step in 1..=max_steps.min(n) {
        apply(&q, &mut w);
        let bp = betas.last().copied().unwrap_or(0.0);
        for i in 0..n {
            w[i] -= q_prev[i] * bp;
        }
        let alpha = compensated_sum(q.iter().zip(&w).map(|(a, b)| (a.conj() * b).re));
        for i in 0..n {
            w[i] -= q[i] * alpha;
        }
        alphas.push(alpha);
        let beta = norm(&w);
        let exhausted = beta <= 1e-13 * alpha.abs().max(1.0);
        if step % 25 == 0 || exhausted || step == max_steps.min(n) {
            let (nodes, first) = crate::linalg::tridiag_gauss(&alphas, &betas).ok_or(Error::Eigen { omega: 0.0, n: alphas.len() })?;
            let est = compensated_sum(nodes.iter().zip(&first).map(|(x, u)| u * u * f(x.max(0.0))));
            if exhausted || (est - last).abs() <= 1e-12 * est.abs() {
                return Ok(est * b0 * b0);
            }
            last = est;
        }
        betas.push(beta);
        q_prev = std::mem::replace(&mut q, w.iter().map(|x| x / beta).collect());
    }
    Err(Error::Insufficient(format!("Lanczos quadrature did not settle within {max_steps} steps")))
}

/// Phase-space moments `⟨φ_S|χ_Δ e^{itH_W} ℌ_S^{q/2} e^{−itH_W} χ_Δ|φ_S⟩` on a
/// grid, one trace per q.
///
/// `ℌ_S^{q/2}` is the exact quadratic form for q = 2 and a semigroup
/// integral otherwise. Runs whose state puts more than 1% of its mass on
/// the outer rim of the grid (in x or in p) are refused.
pub fn transport_weyl(
    h: &HamiltonianSpec,
    theta: f64,
    s: &IntMatrix,
    spec: GridSpec,
    cfg: &TransportConfig,
) -> Result<Vec<TransportTrace>> {
    cfg.validate()?;
    if (spec.theta - theta).abs() > 1e-12 * theta {
        return Err(Error::ThetaMismatch(theta, spec.theta));
    }
    let osc = build_oscillator(s)?;
    let a = h.element(theta);
    let h1 = a.norm1();
    let times = cfg.times(h1)?;
    let op = WeylOp::new(&a, &spec);
    let ho = GridOscillator::new(&osc, &spec);
    let g = osc.ground_state(spec).normalized();
    let hgrid = spec.step();
    let mut psi = g.values.clone();
    let mut meta = vec![
        ("theta".into(), format!("{theta:.16e}")),
        ("refinement".into(), spec.refinement.to_string()),
        ("cells".into(), spec.cells.to_string()),
        ("symmetry_order".into(), osc.order.to_string()),
    ];
    if let Some((lo, hi)) = cfg.delta {
        let coeffs = jackson_indicator(lo / h1, hi / h1, cfg.jackson_order);
        psi = chebyshev_series(&op, h1, &psi, 0, &coeffs).0;
        meta.push(("filter".into(), format!("jackson-chebyshev order {}", cfg.jackson_order)));
    }
    let (r1, r2) = a.support_radius();
    let (wx, wp) = (r1 as f64 * theta.sqrt(), r2 as f64 * theta.sqrt());
    let nq = cfg.qs.len();
    let nt = times.len();
    let mut moments = vec![vec![0.0; nt]; nq];
    let mut errors = vec![vec![0.0; nt]; nq];
    let symbol_max = ho.symbol_max();
    let (d0, amp0) = ho.rim(&psi, wx, wp);
    let mut meter = LeakMeter::new(h1, amp0);
    let mut worst_defect = d0;
    let mut hpsi = vec![ZERO; psi.len()];
    for k in 0..nt {
        if k > 0 {
            psi = propagate(&op, h1, &psi, 0, times[k] - times[k - 1]).0;
        }
        let (defect, amp) = ho.rim(&psi, wx, wp);
        worst_defect = worst_defect.max(defect);
        if defect > 0.01 {
            return Err(Error::Completeness(defect));
        }
        let eps = if k > 0 { meter.step(times[k] - times[k - 1], amp) } else { 0.0 };
        for (qi, &q) in cfg.qs.iter().enumerate() {
            let value = if q == 2.0 {
                ho.apply(&psi, &mut hpsi);
                compensated_sum(psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re))
            } else {
                ho.power_moment(&psi, 0.5 * q)
            };
            moments[qi][k] = value * hgrid;
            errors[qi][k] = moment_error(symbol_max.powf(0.5 * q), eps);
        }
    }
    meta.push(("completeness_defect".into(), format!("{worst_defect:.3e}")));
    Ok(make_traces(h, Representation::Weyl, cfg, times, moments, errors, h1, meta))
}

fn single(cfg: TransportConfig, run: impl FnOnce(&TransportConfig) -> Result<Vec<TransportTrace>>) -> Result<f64> {
    let traces = run(&cfg)?;
    Ok(*traces[0].moments.last().expect("at least one sample"))
}

/// `M_1D(q, t)` for a single time.
pub fn moment_1d(
    h: &HamiltonianSpec,
    theta: f64,
    q: f64,
    t: f64,
    delta: Option<(f64, f64)>,
    half_width: usize,
    n_omega: usize,
) -> Result<f64> {
    let cfg = TransportConfig { qs: vec![q], t_max: t, delta, half_width, n_omega, ..Default::default() };
    single(cfg, |c| transport_1d(h, theta, c))
}

/// Same as [`moment_1d`] for negative t too (the propagation runs backwards).
fn signed_moment_1d(h: &HamiltonianSpec, theta: f64, q: f64, t: f64, half_width: usize, n_omega: usize) -> Result<f64> {
    let a = h.element(theta);
    let h1 = a.norm1();
    let mut acc = Vec::new();
    for omega in omega_grid(n_omega) {
        let m = represent_1d(&a, omega, half_width)?;
        let mut psi = vec![ZERO; m.size()];
        psi[half_width] = Complex64::new(1.0, 0.0);
        let out = propagate(&ChainOp { m: &m }, h1, &psi, 0, t).0;
        acc.push(compensated_sum(
            out.iter().enumerate().map(|(i, v)| (i as f64 - half_width as f64).abs().powf(q) * v.norm_sqr()),
        ));
    }
    Ok(compensated_sum(acc) / n_omega as f64)
}

/// `|M(q, −t) − M(q, t)| / M(q, t)` for the phase-averaged chain moment; the
/// two-sided time averages rely on this vanishing.
pub fn time_reversal_defect(h: &HamiltonianSpec, theta: f64, q: f64, t: f64, half_width: usize, n_omega: usize) -> Result<f64> {
    let plus = signed_moment_1d(h, theta, q, t, half_width, n_omega)?;
    let minus = signed_moment_1d(h, theta, q, -t, half_width, n_omega)?;
    Ok(if plus == 0.0 { minus.abs() } else { (plus - minus).abs() / plus })
}

/// `M_2D(q, t)` for a single time.
pub fn moment_2d(h: &HamiltonianSpec, theta: f64, q: f64, t: f64, delta: Option<(f64, f64)>, half_width: usize) -> Result<f64> {
    let cfg = TransportConfig { qs: vec![q], t_max: t, delta, half_width, ..Default::default() };
    single(cfg, |c| transport_2d(h, theta, c))
}

/// `M_W(q, t)` for a single time.
pub fn moment_weyl(
    h: &HamiltonianSpec,
    theta: f64,
    s: &IntMatrix,
    q: f64,
    t: f64,
    delta: Option<(f64, f64)>,
    spec: GridSpec,
) -> Result<f64> {
    let cfg = TransportConfig { qs: vec![q], t_max: t, delta, ..Default::default() };
    single(cfg, |c| transport_weyl(h, theta, s, spec, c))
}

/// `⟨f⟩_T` from samples `(t_k, f_k)` with `t_0 = 0`, using evenness in t.
pub fn time_average(samples: &[(f64, f64)], t: f64, mode: Averaging, h_norm1: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("T = {t} must be positive")));
    }
    if samples.len() < 2 || samples[0].0 != 0.0 {
        return Err(Error::Insufficient("samples must start at t = 0 and hold at least two points".into()));
    }
    let mut dt_max: f64 = 0.0;
    for w in samples.windows(2) {
        let d = w[1].0 - w[0].0;
        if !(d > 0.0) {
            return Err(Error::Domain("sample times must increase".into()));
        }
        dt_max = dt_max.max(d);
    }
    if dt_max * h_norm1 > MAX_STEP_PHASE * (1.0 + 1e-9) {
        return Err(Error::Domain(format!(
            "time grid too coarse: dt·‖H‖₁ = {} exceeds {MAX_STEP_PHASE}",
            dt_max * h_norm1
        )));
    }
    let (end, weight): (f64, Box<dyn Fn(f64) -> f64>) = match mode {
        Averaging::Cesaro => (t, Box::new(move |_| 1.0 / t)),
        Averaging::Gaussian => (GAUSS_REACH * t, Box::new(move |s: f64| (-s * s / (4.0 * t * t)).exp() / (PI.sqrt() * t))),
    };
    let t_last = samples[samples.len() - 1].0;
    if t_last < end * (1.0 - 1e-12) {
        return Err(Error::Insufficient(format!("samples reach t = {t_last}, the average needs t = {end}")));
    }
    let mut terms = Vec::new();
    for w in samples.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if t0 >= end {
            break;
        }
        let (t1c, f1c) = if t1 > end { (end, f0 + (f1 - f0) * (end - t0) / (t1 - t0)) } else { (t1, f1) };
        terms.push(0.5 * (t1c - t0) * (weight(t0) * f0 + weight(t1c) * f1c));
    }
    Ok(compensated_sum(terms))
}

/// T grid `2 · 2^{k/4}` up to the largest T the trace supports.
pub fn default_t_grid(trace: &TransportTrace) -> Vec<f64> {
    geometric_grid(2.0, trace.t_avg_max(), 2f64.powf(0.25))
}

/// β from the slope of `log⟨M⟩_T` against `log T`, over the default T grid.
pub fn beta_estimate(trace: &TransportTrace) -> Result<ScalingFit> {
    beta_estimate_on(trace, &default_t_grid(trace))
}

/// β over a given T grid (at least 12 points spanning 1.5 decades). Zero
/// averages are floored at the smallest positive double, so an identically
/// vanishing moment yields β = 0.
pub fn beta_estimate_on(trace: &TransportTrace, ts: &[f64]) -> Result<ScalingFit> {
    if ts.len() < 12 {
        return Err(Error::Insufficient(format!("{} T points, need at least 12", ts.len())));
    }
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::Insufficient(format!("T range [{lo}, {hi}] spans less than 1.5 decades")));
    }
    let avg = trace.averages(ts)?;
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = avg.iter().map(|m| m.max(f64::MIN_POSITIVE).ln()).collect();
    ScalingFit::fit(&xs, &ys, 1.0 / trace.q, Some((0.0, 1.0)))
}

/// Symmetry order (3, 4 or 6) of a symmetry leaving the element invariant.
pub fn invariant_symmetry(a: &FourierElement) -> Option<usize> {
    [(S4, 4), (S3, 3), (S6, 6)]
        .into_iter()
        .find(|(s, _)| symmetry_automorphism(a, s).map(|b| b.max_diff(a) <= 1e-12).unwrap_or(false))
        .map(|(_, r)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResources {
    /// θ = 2πp/q.
    pub ratio: (u64, u64),
    /// Ring size for the density of states; a multiple of q.
    pub dos_sites: usize,
    pub dos_n_omega: usize,
    pub dos_k_points: usize,
    pub dim_t_grid: Vec<f64>,
    pub transport: TransportConfig,
    pub beta_t_grid: Vec<f64>,
    pub averaging: Averaging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub q: f64,
    pub beta: ScalingFit,
    /// `D(1 − q)` of the density of states.
    pub dimension: ScalingFit,
    /// `β̂⁻(q) − D̂⁺(1 − q)`.
    pub margin: f64,
    /// Sum of the half-spreads of the two windowed fits.
    pub uncertainty: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub model: String,
    pub theta: f64,
    /// Order of a symmetry leaving H invariant; the comparison is only a
    /// theorem when there is one.
    pub symmetry_order: Option<usize>,
    pub in_hypothesis: bool,
    pub time_reversal_defect: f64,
    pub max_relative_truncation: f64,
    pub entries: Vec<BoundEntry>,
}

/// Diffusion exponents of the phase-averaged chain against the generalized
/// dimensions of the density of states, per q.
pub fn verify_main_bound(h: &HamiltonianSpec, qs: &[f64], res: &BoundResources) -> Result<BoundReport> {
    if qs.is_empty() || qs.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(Error::Domain(format!("q values {qs:?} must lie in (0, 1)")));
    }
    let (p, q_den) = res.ratio;
    if q_den == 0 {
        return Err(Error::Domain("ratio denominator must be positive".into()));
    }
    let theta = 2.0 * PI * p as f64 / q_den as f64;
    let a = h.element(theta);
    let h1 = a.norm1();
    let mu = dos_estimate_with(h, theta, res.dos_sites, res.dos_n_omega, Boundary::Periodic { k_points: res.dos_k_points })?;
    let dim_qs: Vec<f64> = qs.iter().map(|q| 1.0 - q).collect();
    let dims = multifractal_dimensions(&mu, (-h1 - 0.1, h1 + 0.1), &dim_qs, &res.dim_t_grid, &DimensionOptions::default())?;
    let cfg = TransportConfig { qs: qs.to_vec(), ..res.transport.clone() };
    let traces = transport_1d(h, theta, &cfg)?;
    let reversal = time_reversal_defect(h, theta, 2.0, 8.0f64.min(cfg.t_max.max(1.0)), cfg.half_width, cfg.n_omega.min(8))?;
    let symmetry_order = invariant_symmetry(&a);
    let mut max_trunc: f64 = 0.0;
    let mut entries = Vec::new();
    for ((&q, trace), dim) in qs.iter().zip(traces).zip(dims) {
        max_trunc = max_trunc.max(trace.worst_relative_error());
        let beta = beta_estimate_on(&trace.with_averaging(res.averaging), &res.beta_t_grid)?;
        let margin = beta.lower - dim.fit.upper;
        let uncertainty = beta.spread() + dim.fit.spread();
        let verdict = if margin >= -uncertainty { Verdict::Pass } else { Verdict::Flag };
        entries.push(BoundEntry { q, beta, dimension: dim.fit, margin, uncertainty, verdict });
    }
    Ok(BoundReport {
        model: h.name.clone(),
        theta,
        symmetry_order,
        in_hypothesis: symmetry_order.is_some(),
        time_reversal_defect: reversal,
        max_relative_truncation: max_trunc,
        entries,
    })
}
