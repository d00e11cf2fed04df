//! Discretised Weyl representation on `L²(ℝ)`.
//!
//! Grid: `x_j = (j − n/2)·h` with `h = √θ/K` and `n = 2·cells·K`, periodic.
//! Weyl operator: `𝔚(a)ψ(x) = e^{ia₁a₂/2} e^{ia₂x} ψ(x + a₁)`; with
//! `P = −i d/dx` this is `e^{i(a₁P + a₂Q)}`, and `𝔚(a)𝔚(b) = e^{i a∧b/2}𝔚(a+b)`.
//! Lattice words act as `W(m) ↦ 𝔚(√θ m)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation_algebra::{FourierElement, Site};
use crate::IntMatrix;

/// Default half-width of the grid in units of `√θ`.
pub const DEFAULT_CELLS: usize = 24;
/// Default number of grid steps per `√θ`.
pub const DEFAULT_REFINEMENT: usize = 16;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta: f64,
    /// Steps per `√θ`.
    pub refinement: usize,
    /// Half-width in units of `√θ`.
    pub cells: usize,
    /// Steps per dual shift `2π/√θ`, when that is an integer.
    pub dual_steps: Option<usize>,
}

impl GridSpec {
    pub fn new(theta: f64, refinement: usize, cells: usize) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Domain(format!("theta = {theta} must be positive")));
        }
        if refinement < 8 {
            return Err(Error::Domain(format!("refinement K = {refinement} is below 8")));
        }
        if cells == 0 {
            return Err(Error::Domain("grid needs at least one cell".into()));
        }
        let dual = 2.0 * PI * refinement as f64 / theta;
        let dual_steps = ((dual - dual.round()).abs() < 1e-9 * dual.max(1.0)).then_some(dual.round() as usize);
        Ok(Self { theta, refinement, cells, dual_steps })
    }

    /// Grid for `θ = 2π·p/q` with both `√θ` and `2π/√θ` shifts exact: K is the
    /// smallest multiple of `p/gcd(p,q)` that is at least `min_refinement`.
    pub fn for_ratio(p: u64, q: u64, min_refinement: usize, cells: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Domain("ratio p/q needs positive p and q".into()));
        }
        let g = gcd(p, q);
        let step = (p / g) as usize;
        let k = min_refinement.max(8).div_ceil(step) * step;
        let theta = 2.0 * PI * p as f64 / q as f64;
        let mut spec = Self::new(theta, k, cells)?;
        spec.dual_steps = Some(k * (q / g) as usize / (p / g) as usize);
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        2 * self.cells * self.refinement
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.theta.sqrt() / self.refinement as f64
    }

    pub fn half_width(&self) -> f64 {
        self.cells as f64 * self.theta.sqrt()
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.len() / 2) as f64) * self.step()
    }

    /// Angular frequencies of the FFT bins in storage order.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.len();
        let dk = 2.0 * PI / (n as f64 * self.step());
        (0..n).map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk }).collect()
    }

    fn require_dual(&self) -> Result<usize> {
        self.dual_steps.ok_or_else(|| {
            Error::Incommensurate(format!(
                "2πK/θ = {} is not an integer for K = {}",
                2.0 * PI * self.refinement as f64 / self.theta,
                self.refinement
            ))
        })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn<F: Fn(f64) -> Complex64>(spec: GridSpec, f: F) -> Self {
        let values = (0..spec.len()).map(|j| f(spec.x(j))).collect();
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![ZERO; spec.len()] }
    }

    pub fn h(&self) -> f64 {
        self.spec.step()
    }

    pub fn norm_sq(&self) -> f64 {
        self.h() * crate::linalg::compensated_sum(self.values.iter().map(|z| z.norm_sqr()))
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Self {
        self.scaled(Complex64::new(1.0 / self.norm(), 0.0))
    }

    /// `⟨self|other⟩ = h Σ conj(self_j) other_j`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let re = crate::linalg::compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| (a.conj() * b).re));
        let im = crate::linalg::compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| (a.conj() * b).im));
        Complex64::new(re, im) * self.h()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self { spec: self.spec, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: Complex64, other: &Self) -> Self {
        Self { spec: self.spec, values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect() }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.axpy(Complex64::new(-1.0, 0.0), other).norm()
    }

    /// Largest `|ψ|` within `margin` of either end of the domain.
    pub fn edge_tail(&self, margin: f64) -> f64 {
        let l = self.spec.half_width();
        (0..self.values.len())
            .filter(|&j| self.spec.x(j).abs() >= l - margin)
            .map(|j| self.values[j].norm())
            .fold(0.0, f64::max)
    }

    /// Rows `x,re,im` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,re,im\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.spec.x(j), v.re, v.im));
        }
        out
    }

    fn map_momentum<F: Fn(f64) -> Complex64>(&self, f: F) -> Self {
        let n = self.values.len();
        let mut planner = FftPlanner::new();
        let mut buf = self.values.clone();
        planner.plan_fft_forward(n).process(&mut buf);
        for (b, k) in buf.iter_mut().zip(self.spec.frequencies()) {
            *b *= f(k) / n as f64;
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        Self { spec: self.spec, values: buf }
    }

    /// `P ψ` with `P = −i d/dx`, spectrally.
    pub fn momentum(&self) -> Self {
        self.map_momentum(|k| Complex64::new(k, 0.0))
    }

    /// `Q ψ`.
    pub fn position(&self) -> Self {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            *v *= self.spec.x(j);
        }
        out
    }

    /// `ψ(−x)`.
    pub fn parity(&self) -> Self {
        let n = self.values.len();
        Self { spec: self.spec, values: (0..n).map(|j| self.values[(n - j) % n]).collect() }
    }

    fn shift_phase(&self, steps: i64, a1: f64, a2: f64) -> Self {
        let n = self.values.len() as i64;
        let pre = Complex64::from_polar(1.0, 0.5 * a1 * a2);
        let values = (0..n)
            .map(|j| {
                let src = (j + steps).rem_euclid(n) as usize;
                pre * Complex64::from_polar(1.0, a2 * self.spec.x(j as usize)) * self.values[src]
            })
            .collect();
        Self { spec: self.spec, values }
    }
}

/// `𝔚(a)ψ`; `a₁` must be a whole number of grid steps.
pub fn weyl_operator(a: [f64; 2], psi: &GridFunction) -> Result<GridFunction> {
    let h = psi.h();
    let steps = a[0] / h;
    if (steps - steps.round()).abs() > 1e-9 * steps.abs().max(1.0) {
        return Err(Error::OffGrid { requested: a[0], nearest: steps.round() * h });
    }
    Ok(psi.shift_phase(steps.round() as i64, a[0], a[1]))
}

/// `𝔚(√θ m)ψ`, exact on every grid.
pub fn lattice_weyl(m: Site, psi: &GridFunction) -> GridFunction {
    let r = psi.spec.theta.sqrt();
    psi.shift_phase(m[0] * psi.spec.refinement as i64, r * m[0] as f64, r * m[1] as f64)
}

/// `𝔚(2πl/√θ)ψ`, the dual lattice; needs a commensurate grid.
pub fn dual_weyl(l: Site, psi: &GridFunction) -> Result<GridFunction> {
    let j = psi.spec.require_dual()? as i64;
    let s = 2.0 * PI / psi.spec.theta.sqrt();
    Ok(psi.shift_phase(l[0] * j, s * l[0] as f64, s * l[1] as f64))
}

/// `π_W(A)ψ = Σ a_m 𝔚(√θ m)ψ`.
pub fn apply_element(a: &FourierElement, psi: &GridFunction) -> Result<GridFunction> {
    if (a.theta - psi.spec.theta).abs() > 1e-12 * a.theta.abs() {
        return Err(Error::ThetaMismatch(a.theta, psi.spec.theta));
    }
    let mut out = GridFunction::zeros(psi.spec);
    for (m, am) in a.coeffs() {
        out = out.axpy(*am, &lattice_weyl(*m, psi));
    }
    Ok(out)
}

/// `S = L(κ)·D(λ)·R(s)` with `L(κ) = [[1,0],[κ,1]]`, `D(λ) = diag(λ, 1/λ)` and
/// `R(s)` the rotation by `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub kappa: f64,
    pub lambda: f64,
    pub s: f64,
}

impl Decomposition {
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = m;
        let det = a * d - b * c;
        if (det - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("symplectic matrix needs determinant 1, got {det}")));
        }
        let l2 = a * a + b * b;
        Ok(Self { kappa: (a * c + b * d) / l2, lambda: l2.sqrt(), s: (-b).atan2(a) })
    }

    pub fn from_int(m: &IntMatrix) -> Result<Self> {
        Self::from_matrix([[m[0][0] as f64, m[0][1] as f64], [m[1][0] as f64, m[1][1] as f64]])
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let (sn, cs) = self.s.sin_cos();
        let (l, k) = (self.lambda, self.kappa);
        [[l * cs, -l * sn], [k * l * cs + sn / l, -k * l * sn + cs / l]]
    }
}

/// `F_S ψ` for `S = L(κ)D(λ)R(s)`: rotation, then dilation, then chirp, so
/// that `𝔚(Sa) = F_S 𝔚(a) F_S⁻¹`. The rotation is normalised by `F_R h₀ = h₀`.
pub fn metaplectic(dec: &Decomposition, psi: &GridFunction) -> Result<GridFunction> {
    if !(dec.lambda > 0.0) {
        return Err(Error::Domain(format!("dilation lambda = {} must be positive", dec.lambda)));
    }
    let rotated = rotation(dec.s, psi);
    let dilated = if (dec.lambda - 1.0).abs() < 1e-15 { rotated } else { dilation(dec.lambda, &rotated) };
    Ok(chirp(dec.kappa, &dilated))
}

/// `e^{−iκQ²/2}ψ`.
pub fn chirp(kappa: f64, psi: &GridFunction) -> GridFunction {
    if kappa == 0.0 {
        return psi.clone();
    }
    let mut out = psi.clone();
    for (j, v) in out.values.iter_mut().enumerate() {
        let x = psi.spec.x(j);
        *v *= Complex64::from_polar(1.0, -0.5 * kappa * x * x);
    }
    out
}

/// `e^{ibP²/2}ψ`, the image of the shear `[[1,b],[0,1]]`.
pub fn shear(b: f64, psi: &GridFunction) -> GridFunction {
    psi.map_momentum(|k| Complex64::from_polar(1.0, 0.5 * b * k * k))
}

/// Fractional Fourier transform by angle `s` (`s = π/2` is the unitary
/// Fourier transform), from three shears.
pub fn rotation(s: f64, psi: &GridFunction) -> GridFunction {
    let s = (s + PI).rem_euclid(2.0 * PI) - PI;
    if s == 0.0 {
        return psi.clone();
    }
    if s.abs() > PI / 2.0 + 1e-12 {
        let rest = if s > 0.0 { s - PI } else { s + PI };
        return rotation(rest, &psi.parity());
    }
    let b = -(0.5 * s).tan();
    let kappa = s.sin();
    let out = shear(b, &chirp(kappa, &shear(b, psi)));
    out.scaled(rotation_phase(b, kappa).conj())
}

/// Phase picked up by `h₀` under shear(b)·chirp(κ)·shear(b), tracked through
/// the Gaussian parameter `e^{−a x²/2}`.
fn rotation_phase(b: f64, kappa: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let mut a = one;
    let mut amp = one;
    let shear_step = |a: Complex64, amp: Complex64| {
        let f = one - Complex64::new(0.0, 1.0) * a * b;
        (a / f, amp / f.sqrt())
    };
    (a, amp) = shear_step(a, amp);
    a += Complex64::new(0.0, kappa);
    (a, amp) = shear_step(a, amp);
    debug_assert!((a - one).norm() < 1e-9);
    amp / amp.norm()
}

/// `λ^{−1/2} ψ(x/λ)` by band-limited trigonometric interpolation.
pub fn dilation(lambda: f64, psi: &GridFunction) -> GridFunction {
    let n = psi.values.len();
    let mut coeffs = psi.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut coeffs);
    let half = (n / 2) as i64;
    let h = psi.h();
    let x0 = psi.spec.x(0);
    let scale = 1.0 / (n as f64 * lambda.sqrt());
    let values = (0..n)
        .map(|j| {
            let t = (psi.spec.x(j) / lambda - x0) / h;
            let base = Complex64::from_polar(1.0, 2.0 * PI * t / n as f64);
            // frequencies −n/2+1 .. n/2−1 plus the Nyquist bin as a cosine
            let mut p = base.powi(-(half as i32) + 1);
            let mut acc = ZERO;
            for k in (-half + 1)..half {
                acc += coeffs[k.rem_euclid(n as i64) as usize] * p;
                p *= base;
            }
            if n % 2 == 0 {
                acc += coeffs[half as usize] * (PI * t).cos();
            }
            acc * scale
        })
        .collect();
    GridFunction { spec: psi.spec, values }
}

/// Quadratic oscillator `ℌ_S = ½ Rᵀ M_S R` with `R = (P, Q)` and
/// `M_S = (2/r) Σ_{n<r} Sⁿ e₂ e₂ᵀ (Sᵀ)ⁿ`, so that `ℌ_{S₄} = (P² + Q²)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryOscillator {
    pub s: IntMatrix,
    pub order: usize,
    pub m: [[f64; 2]; 2],
    pub mu_plus: f64,
    pub mu_minus: f64,
    /// Angle of the `μ⁺` eigenvector.
    pub gamma: f64,
    /// `(μ⁺/μ⁻)^{1/4}`.
    pub lambda: f64,
    /// `(μ⁺μ⁻)^{1/2}`: level spacing of the spectrum `μ(n + ½)`.
    pub mu: f64,
    /// Ground state `∝ e^{−σ x²/2}`.
    pub sigma: Complex64,
}

/// Report shape used by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorReport {
    pub r: usize,
    #[serde(rename = "M_S")]
    pub m_s: [[f64; 2]; 2],
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
}

impl SymmetryOscillator {
    /// `M₁₂/M₁₁`: the chirp `e^{−icx²/2}` relating eigenfunctions to Hermite functions.
    pub fn chirp(&self) -> f64 {
        self.m[0][1] / self.m[0][0]
    }

    /// `Re σ = √det M / M₁₁`.
    pub fn sigma0(&self) -> f64 {
        self.sigma.re
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.mu * (n as f64 + 0.5)
    }

    pub fn report(&self) -> OscillatorReport {
        OscillatorReport {
            r: self.order,
            m_s: self.m,
            mu_plus: self.mu_plus,
            mu_minus: self.mu_minus,
            gamma: self.gamma,
            lambda: self.lambda,
            sigma_re: self.sigma.re,
            sigma_im: self.sigma.im,
        }
    }

    /// `ℌ_S ψ` on the grid.
    pub fn apply(&self, psi: &GridFunction) -> GridFunction {
        let [[m11, m12], [_, m22]] = self.m;
        let p = psi.momentum();
        let pp = p.momentum();
        let q = psi.position();
        let qp = p.position();
        let pq = q.momentum();
        let qq = q.position();
        let half = Complex64::new(0.5, 0.0);
        pp.scaled(half * m11)
            .axpy(half * m12, &pq)
            .axpy(half * m12, &qp)
            .axpy(half * m22, &qq)
    }

    /// `φ⁽ⁿ⁾(x) = e^{−icx²/2} σ₀^{1/4} h_n(√σ₀ x)` for n < count.
    pub fn eigenfunctions(&self, spec: GridSpec, count: usize) -> Vec<GridFunction> {
        let s0 = self.sigma0();
        let c = self.chirp();
        let amp = s0.powf(0.25);
        let mut out: Vec<GridFunction> = (0..count).map(|_| GridFunction::zeros(spec)).collect();
        for j in 0..spec.len() {
            let x = spec.x(j);
            let chirp = Complex64::from_polar(amp, -0.5 * c * x * x);
            for (n, h) in crate::linalg::hermite_functions(s0.sqrt() * x, count).into_iter().enumerate() {
                out[n].values[j] = chirp * h;
            }
        }
        out
    }

    pub fn ground_state(&self, spec: GridSpec) -> GridFunction {
        self.eigenfunctions(spec, 1).pop().expect("one eigenfunction")
    }
}

fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    crate::rotation_algebra::int_matrix_mul(a, b)
}

/// Order r of S, if S has order 3, 4 or 6.
pub fn symmetry_order(s: &IntMatrix) -> Option<usize> {
    let id = [[1, 0], [0, 1]];
    let mut p = *s;
    for r in 1..=6 {
        if p == id {
            return [3, 4, 6].contains(&r).then_some(r);
        }
        p = mat_mul(&p, s);
    }
    None
}

pub fn build_oscillator(s: &IntMatrix) -> Result<SymmetryOscillator> {
    let order = symmetry_order(s)
        .ok_or_else(|| Error::Domain(format!("{s:?} is not a symmetry of order 3, 4 or 6")))?;
    let mut m = [[0.0; 2]; 2];
    let mut v = [0i64, 1];
    for _ in 0..order {
        for i in 0..2 {
            for k in 0..2 {
                m[i][k] += 2.0 * (v[i] * v[k]) as f64 / order as f64;
            }
        }
        v = [s[0][0] * v[0] + s[0][1] * v[1], s[1][0] * v[0] + s[1][1] * v[1]];
    }
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0 && m[0][0] > 0.0) {
        return Err(Error::Invariant(format!("M_S = {m:?} is not positive definite")));
    }
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let mu_plus = 0.5 * tr + disc;
    let mu_minus = 0.5 * tr - disc;
    let gamma = 0.5 * (2.0 * m[0][1]).atan2(m[0][0] - m[1][1]);
    let mu = det.sqrt();
    let sigma = Complex64::new(mu / m[0][0], m[0][1] / m[0][0]);
    Ok(SymmetryOscillator {
        s: *s,
        order,
        m,
        mu_plus,
        mu_minus,
        gamma,
        lambda: (mu_plus / mu_minus).powf(0.25),
        mu,
        sigma,
    })
}

/// Kernel of `e^{−tℌ_S}`:
/// `e^{−icx²/2} √σ₀ (2π sinh μt)^{−1/2} exp(−σ₀[(x−y)² coth(μt/2) + (x+y)² tanh(μt/2)]/4) e^{icy²/2}`.
pub fn mehler_kernel(osc: &SymmetryOscillator, t: f64, x: f64, y: f64) -> Result<Complex64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    let modulus = mehler_modulus(osc, t, x, y);
    Ok(Complex64::from_polar(modulus, -0.5 * osc.chirp() * (x * x - y * y)))
}

/// `|ℳ_S(t; x, y)|`.
pub fn mehler_modulus(osc: &SymmetryOscillator, t: f64, x: f64, y: f64) -> f64 {
    let s0 = osc.sigma0();
    let tau = osc.mu * t;
    let th = (0.5 * tau).tanh();
    let quad = s0 * ((x - y) * (x - y) / th + (x + y) * (x + y) * th) / 4.0;
    s0.sqrt() / (2.0 * PI * tau.sinh()).sqrt() * (-quad).exp()
}

/// `(𝒢_ω φ)(n) = θ^{−1/4} φ((ω − nθ)/√θ)` on the phase grid `ω_j = jθ/K`.
///
/// Each grid point belongs to exactly one pair (j, n), so the slices are an
/// exact re-indexing of the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeSlices {
    pub theta: f64,
    pub omegas: Vec<f64>,
    /// Site of the first entry of every slice.
    pub n_min: i64,
    pub slices: Vec<Vec<Complex64>>,
}

pub fn gauge_slices(phi: &GridFunction, theta: f64) -> Result<GaugeSlices> {
    let spec = phi.spec;
    if (spec.theta - theta).abs() > 1e-12 * theta {
        return Err(Error::ThetaMismatch(spec.theta, theta));
    }
    let k = spec.refinement;
    if spec.len() % k != 0 || (spec.len() / 2) % k != 0 {
        return Err(Error::Incommensurate("grid length is not a multiple of K".into()));
    }
    let cells = spec.cells as i64;
    // x = (j − nK)h, storage index j − nK + cells·K, n ∈ (−cells, cells]
    let n_min = -cells + 1;
    let n_max = cells;
    let amp = theta.powf(-0.25);
    let omegas: Vec<f64> = (0..k).map(|j| j as f64 * theta / k as f64).collect();
    let slices = (0..k as i64)
        .map(|j| {
            (n_min..=n_max)
                .map(|n| {
                    let idx = j - n * k as i64 + cells * k as i64;
                    phi.values[idx as usize] * amp
                })
                .collect()
        })
        .collect();
    Ok(GaugeSlices { theta, omegas, n_min, slices })
}

impl GaugeSlices {
    /// `Σ_j (θ/K) ‖𝒢_{ω_j} φ‖²`.
    pub fn norm_quadrature(&self) -> f64 {
        let w = self.theta / self.omegas.len() as f64;
        w * crate::linalg::compensated_sum(self.slices.iter().flatten().map(|z| z.norm_sqr()))
    }

    /// `Σ_j (θ/K) ⟨𝒢_ω φ|π_ω(A)|𝒢_ω ψ⟩` with `self` as φ.
    pub fn direct_integral(&self, a: &FourierElement, psi: &GaugeSlices) -> Complex64 {
        let w = self.theta / self.omegas.len() as f64;
        let len = self.slices[0].len() as i64;
        let mut acc = ZERO;
        for ((omega, f), g) in self.omegas.iter().zip(&self.slices).zip(&psi.slices) {
            for (m, am) in a.coeffs() {
                for i in 0..len {
                    let src = i - m[0];
                    if src < 0 || src >= len {
                        continue;
                    }
                    let n = (i + self.n_min) as f64;
                    let phase = 0.5 * self.theta * (m[0] * m[1]) as f64 + (omega - n * self.theta) * m[1] as f64;
                    acc += f[i as usize].conj() * am * Complex64::from_polar(1.0, phase) * g[src as usize];
                }
            }
        }
        acc * w
    }
}
