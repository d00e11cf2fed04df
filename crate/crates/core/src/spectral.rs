//! Density of states, generalized dimensions and level-set partitions.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotation_algebra::{represent_1d, represent_ring, HamiltonianSpec};
use crate::scaling::ScalingFit;

/// Gaussian weights beyond `|E − E'|·T > GAUSS_CUT` are below 1e−18.
const GAUSS_CUT: f64 = 6.5;
/// Cell width (in units of 1/T) used to merge atoms for Gaussian ball masses.
const MERGE_CELL: f64 = 0.02;

/// Normalised weighted point masses, sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub total_mass: f64,
    pub provenance: Vec<(String, String)>,
}

impl EmpiricalMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(e, w)| !e.is_finite() || !(*w > 0.0)) {
            return Err(Error::Domain("atoms need finite positions and positive weights".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_mass = crate::linalg::compensated_sum(atoms.iter().map(|a| a.1));
        Ok(Self { atoms, total_mass, provenance: Vec::new() })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        Self::new(points.iter().map(|&e| (e, w)).collect())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn moment(&self, k: i32) -> f64 {
        crate::linalg::compensated_sum(self.atoms.iter().map(|(e, w)| w * e.powi(k)))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.atoms.first().map_or(0.0, |a| a.0), self.atoms.last().map_or(0.0, |a| a.0))
    }

    /// Index range of atoms inside the closed interval.
    fn range_of(&self, delta: (f64, f64)) -> std::ops::Range<usize> {
        let lo = self.atoms.partition_point(|a| a.0 < delta.0);
        let hi = self.atoms.partition_point(|a| a.0 <= delta.1);
        lo..hi.max(lo)
    }

    pub fn mass_in(&self, delta: (f64, f64)) -> f64 {
        crate::linalg::compensated_sum(self.atoms[self.range_of(delta)].iter().map(|a| a.1))
    }

    /// Push-forward under `E ↦ aE + b` (a > 0).
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut m = self.clone();
        for atom in &mut m.atoms {
            atom.0 = a * atom.0 + b;
        }
        m
    }

    /// Masses of `bins` equal bins over `[lo, hi)`; the last bin is closed.
    pub fn histogram(&self, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
        let mut out = vec![0.0; bins];
        let width = (hi - lo) / bins as f64;
        for &(e, w) in &self.atoms {
            if e < lo || e > hi {
                continue;
            }
            let k = (((e - lo) / width) as usize).min(bins - 1);
            out[k] += w;
        }
        out
    }
}

/// How the chain is truncated for the eigenvalue problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Open truncation to the sites `−N/2..=N/2`.
    Open,
    /// Ring of N sites with `k_points` Bloch twists; requires `Nθ/2π ∈ ℤ`.
    Periodic { k_points: usize },
}

/// Phase grid `ω_j = 2πj/n`.
pub fn omega_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Density of states from pooled eigenvalues of open truncations of `π_ω(H)`.
pub fn dos_estimate(h: &HamiltonianSpec, theta: f64, n_sites: usize, n_omega: usize) -> Result<EmpiricalMeasure> {
    dos_estimate_with(h, theta, n_sites, n_omega, Boundary::Open)
}

pub fn dos_estimate_with(
    h: &HamiltonianSpec,
    theta: f64,
    n_sites: usize,
    n_omega: usize,
    boundary: Boundary,
) -> Result<EmpiricalMeasure> {
    if n_sites < 64 {
        return Err(Error::Domain(format!("N = {n_sites} is below the minimum of 64 sites")));
    }
    if n_omega < 8 {
        return Err(Error::Domain(format!("n_omega = {n_omega} is below the minimum of 8 phases")));
    }
    let a = h.element(theta);
    let mut eigenvalues: Vec<f64> = Vec::new();
    let sites;
    match boundary {
        Boundary::Open => {
            let half = n_sites / 2;
            sites = 2 * half + 1;
            for omega in omega_grid(n_omega) {
                let m = represent_1d(&a, omega, half)?;
                let (vals, _) = m.eigen(false, omega)?;
                eigenvalues.extend(vals);
            }
        }
        Boundary::Periodic { k_points } => {
            let turns = n_sites as f64 * theta / (2.0 * PI);
            if (turns - turns.round()).abs() > 1e-8 {
                return Err(Error::Incommensurate(format!(
                    "ring of {n_sites} sites: N·θ/2π = {turns} is not an integer"
                )));
            }
            sites = n_sites;
            let k_points = k_points.max(1);
            for omega in omega_grid(n_omega) {
                for kj in 0..k_points {
                    let k = 2.0 * PI * kj as f64 / k_points as f64;
                    let m = represent_ring(&a, omega, n_sites, k)?;
                    eigenvalues.extend(ring_eigenvalues(&m));
                }
            }
        }
    }
    let blocks = match boundary {
        Boundary::Open => n_omega,
        Boundary::Periodic { k_points } => n_omega * k_points.max(1),
    };
    let w = 1.0 / (sites * blocks) as f64;
    let mut mu = EmpiricalMeasure::new(eigenvalues.into_iter().map(|e| (e, w)).collect())?;
    mu.provenance = vec![
        ("model".into(), h.name.clone()),
        ("theta".into(), format!("{theta:.17e}")),
        ("sites".into(), sites.to_string()),
        ("n_omega".into(), n_omega.to_string()),
        ("boundary".into(), format!("{boundary:?}")),
    ];
    Ok(mu)
}

fn ring_eigenvalues(m: &DMatrix<num_complex::Complex64>) -> Vec<f64> {
    crate::linalg::hermitian_eigenvalues(m)
}

/// `Σ_i w_i e^{−(E−E_i)²T²}`.
pub fn smoothed_mass(mu: &EmpiricalMeasure, e: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("T = {t} must be positive")));
    }
    let r = mu.range_of((e - GAUSS_CUT / t, e + GAUSS_CUT / t));
    Ok(crate::linalg::compensated_sum(
        mu.atoms[r].iter().map(|(ei, w)| w * (-(e - ei) * (e - ei) * t * t).exp()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// `e^{−(E−E')²T²}`.
    Gaussian,
    /// Indicator of `|E − E'| ≤ 1/T`.
    Indicator,
}

/// Ball masses grouped on cells: returns `(cell weight, ball mass at the cell)`.
///
/// Gaussian: atoms closer than `0.02/T` are merged into their centroid; the
/// first-order error cancels in `Σ w f(ρ)`, leaving O((0.02)²). Indicator:
/// exact, one cell per atom.
fn ball_masses(atoms: &[(f64, f64)], t: f64, kernel: Kernel) -> Vec<(f64, f64)> {
    match kernel {
        Kernel::Indicator => {
            let mut prefix = Vec::with_capacity(atoms.len() + 1);
            prefix.push(0.0);
            let mut acc = 0.0;
            for a in atoms {
                acc += a.1;
                prefix.push(acc);
            }
            let r = 1.0 / t;
            atoms
                .iter()
                .map(|&(e, w)| {
                    let lo = atoms.partition_point(|a| a.0 < e - r);
                    let hi = atoms.partition_point(|a| a.0 <= e + r);
                    (w, prefix[hi] - prefix[lo])
                })
                .collect()
        }
        Kernel::Gaussian => {
            let eps = MERGE_CELL / t;
            let mut cells: Vec<(f64, f64)> = Vec::new();
            let origin = atoms.first().map_or(0.0, |a| a.0);
            let mut current = i64::MIN;
            let (mut sw, mut swe) = (0.0, 0.0);
            for &(e, w) in atoms {
                let id = ((e - origin) / eps).floor() as i64;
                if id != current && sw > 0.0 {
                    cells.push((swe / sw, sw));
                    sw = 0.0;
                    swe = 0.0;
                }
                current = id;
                sw += w;
                swe += w * e;
            }
            if sw > 0.0 {
                cells.push((swe / sw, sw));
            }
            let cut = GAUSS_CUT / t;
            let mut lo = 0;
            let mut hi = 0;
            let mut out = Vec::with_capacity(cells.len());
            for i in 0..cells.len() {
                let c = cells[i].0;
                while cells[lo].0 < c - cut {
                    lo += 1;
                }
                while hi < cells.len() && cells[hi].0 <= c + cut {
                    hi += 1;
                }
                let mut s = 0.0;
                for cell in &cells[lo..hi] {
                    let d = (c - cell.0) * t;
                    s += cell.1 * (-d * d).exp();
                }
                out.push((cells[i].1, s));
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub kernel: Kernel,
    /// Largest admissible `T · (typical level spacing)`.
    pub c_spacing: f64,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self { kernel: Kernel::Gaussian, c_spacing: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub q: f64,
    pub fit: ScalingFit,
    /// Typical spacing of the atoms in Δ (median gap between distinct positions).
    pub spacing: f64,
    pub t_max_allowed: f64,
    pub kernel: Kernel,
}

/// Median gap between consecutive distinct positions; `None` for a single position.
fn typical_spacing(atoms: &[(f64, f64)]) -> Option<f64> {
    // positions closer than rounding noise count as one
    let span = atoms.last().map_or(0.0, |a| a.0) - atoms.first().map_or(0.0, |a| a.0);
    let tol = 1e-9 * span.max(1.0);
    let mut gaps: Vec<f64> = atoms.windows(2).map(|w| w[1].0 - w[0].0).filter(|g| *g > tol).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    Some(gaps[gaps.len() / 2])
}

/// Generalized dimension `D(q)` of `mu` restricted to Δ.
pub fn multifractal_dimension(
    mu: &EmpiricalMeasure,
    delta: (f64, f64),
    q: f64,
    t_grid: &[f64],
    opts: &DimensionOptions,
) -> Result<DimensionEstimate> {
    Ok(multifractal_dimensions(mu, delta, &[q], t_grid, opts)?.remove(0))
}

/// Several `q` at once, sharing the ball masses.
pub fn multifractal_dimensions(
    mu: &EmpiricalMeasure,
    delta: (f64, f64),
    qs: &[f64],
    t_grid: &[f64],
    opts: &DimensionOptions,
) -> Result<Vec<DimensionEstimate>> {
    if qs.iter().any(|&q| q == 1.0) {
        return Err(Error::Domain("q = 1 needs the information-dimension limit, not supported".into()));
    }
    let atoms = &mu.atoms[mu.range_of(delta)];
    if atoms.len() < 50 {
        return Err(Error::Insufficient(format!("interval carries {} atoms, need at least 50", atoms.len())));
    }
    if t_grid.len() < 3 || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("T grid needs at least 3 positive values".into()));
    }
    let spacing = typical_spacing(atoms);
    let t_max_allowed = spacing.map_or(f64::INFINITY, |s| opts.c_spacing / s);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    if t_max > t_max_allowed {
        return Err(Error::Domain(format!(
            "T_max = {t_max} exceeds the atom-resolution bound {t_max_allowed} (spacing {:.3e})",
            spacing.unwrap_or(0.0)
        )));
    }
    let mut logs = vec![Vec::with_capacity(t_grid.len()); qs.len()];
    for &t in t_grid {
        let cells = ball_masses(atoms, t, opts.kernel);
        for (qi, &q) in qs.iter().enumerate() {
            let i = crate::linalg::compensated_sum(cells.iter().map(|(w, rho)| w * rho.powf(q - 1.0)));
            logs[qi].push(i.ln());
        }
    }
    let xs: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    qs.iter()
        .zip(logs)
        .map(|(&q, ys)| {
            Ok(DimensionEstimate {
                q,
                fit: ScalingFit::fit(&xs, &ys, 1.0 / (1.0 - q), Some((0.0, 1.0)))?,
                spacing: spacing.unwrap_or(0.0),
                t_max_allowed,
                kernel: opts.kernel,
            })
        })
        .collect()
}

/// `I_q(T)` for a single T (diagnostic access to the estimator's sample).
pub fn dimension_integral(mu: &EmpiricalMeasure, delta: (f64, f64), q: f64, t: f64, kernel: Kernel) -> f64 {
    let atoms = &mu.atoms[mu.range_of(delta)];
    let cells = ball_masses(atoms, t, kernel);
    crate::linalg::compensated_sum(cells.iter().map(|(w, rho)| w * rho.powf(q - 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub t: f64,
    pub p: f64,
    pub kappa: f64,
    pub kappa_doubled: bool,
    /// Set when all mass stays in Ω₀ even after doubling κ.
    pub flagged: bool,
    /// `ρ(Ω₀), ρ(Ω₁), …`.
    pub band_masses: Vec<f64>,
    /// Maximising band `j ≥ 1`.
    pub j_star: usize,
    pub alpha: f64,
    /// `∫ dρ ρ(B)^{p−1}`.
    pub integral: f64,
    /// Share of the integral carried by Ω₀.
    pub omega0_share: f64,
    /// Largest c for which `ρ(I_α) ≥ c T^{(p−1)α} ∫ρ(B)^{p−1} / log T` holds.
    pub c_fit: f64,
    /// Constant delivered by the pigeonhole argument.
    pub c_bound: f64,
    /// `ρ(I_α) − c_bound T^{(p−1)α} ∫ρ(B)^{p−1} / log T`, nonnegative by construction.
    pub margin: f64,
    /// Same margin with c = 1.
    pub margin_unit: f64,
}

/// Partition of the atoms by `log ρ(B_T(E))` into unit-width bands below
/// `T^{−κ}` and selection of the band carrying the largest share of
/// `∫ρ(B)^{p−1}`.
pub fn level_set_partition(mu: &EmpiricalMeasure, t: f64, p: f64, kappa: Option<f64>) -> Result<LevelSetReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p = {p} must lie in (0, 1]")));
    }
    if !(t > 1.0) {
        return Err(Error::Domain(format!("T = {t} must exceed 1")));
    }
    if mu.len() < 1000 {
        return Err(Error::Insufficient(format!("{} atoms, need at least 1000", mu.len())));
    }
    let log_t = t.ln();
    let rho = ball_masses(&mu.atoms, t, Kernel::Gaussian);
    let mut kappa = kappa.unwrap_or(2.0 / p);
    let mut doubled = false;
    loop {
        let n_bands = (kappa * log_t).ceil() as usize;
        let mut masses = vec![0.0; n_bands + 1];
        let mut parts = vec![0.0; n_bands + 1];
        for &(w, r) in &rho {
            let level = r.ln() + kappa * log_t;
            let j = if level <= 0.0 { 0 } else { (level.ceil() as usize).min(n_bands) };
            masses[j] += w;
            parts[j] += w * r.powf(p - 1.0);
        }
        let integral: f64 = parts.iter().sum();
        if masses[0] >= mu.total_mass * (1.0 - 1e-12) {
            if !doubled {
                kappa *= 2.0;
                doubled = true;
                continue;
            }
            return Ok(LevelSetReport {
                t,
                p,
                kappa,
                kappa_doubled: doubled,
                flagged: true,
                band_masses: masses,
                j_star: 0,
                alpha: kappa,
                integral,
                omega0_share: 1.0,
                c_fit: 0.0,
                c_bound: 0.0,
                margin: 0.0,
                margin_unit: 0.0,
            });
        }
        let j_star = (1..=n_bands).max_by(|&a, &b| parts[a].total_cmp(&parts[b])).unwrap_or(1);
        let alpha = kappa - j_star as f64 / log_t;
        let scale = t.powf((p - 1.0) * alpha) * integral / log_t;
        let omega0_share = parts[0] / integral;
        let c_fit = masses[j_star] / scale;
        let c_bound = (p - 1.0).exp() * (1.0 - omega0_share) * log_t / n_bands as f64;
        let margin = masses[j_star] - c_bound * scale;
        let margin_unit = masses[j_star] - scale;
        return Ok(LevelSetReport {
            t,
            p,
            kappa,
            kappa_doubled: doubled,
            flagged: false,
            band_masses: masses,
            j_star,
            alpha,
            integral,
            omega0_share,
            c_fit,
            c_bound,
            margin,
            margin_unit,
        });
    }
}

/// Atoms of the uniform measure on the middle-third Cantor set at the given
/// depth (left endpoints of the surviving intervals).
pub fn cantor_measure(depth: u32) -> EmpiricalMeasure {
    let mut points = vec![0.0f64];
    let mut scale = 1.0;
    for _ in 0..depth {
        scale /= 3.0;
        let mut next = Vec::with_capacity(points.len() * 2);
        for &x in &points {
            next.push(x);
            next.push(x + 2.0 * scale);
        }
        points = next;
    }
    EmpiricalMeasure::uniform(&points).expect("finite points")
}

/// `n` equally weighted atoms at the midpoints of a uniform partition of [0,1].
pub fn lebesgue_proxy(n: usize) -> EmpiricalMeasure {
    let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    EmpiricalMeasure::uniform(&pts).expect("finite points")
}
