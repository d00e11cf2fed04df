//! Finite Fourier elements `A = Σ a_m W(m)` of the rotation algebra and their
//! matrix representations.
//!
//! Conventions: `W(l) W(m) = e^{iθ l∧m/2} W(l+m)` with `l∧m = l₁m₂ − l₂m₁`,
//! `W(m) = e^{−iθ m₁m₂/2} U^{m₁} V^{m₂}`.
//!
//! 1D chain: `π_ω(U)` shifts `|l⟩ → |l+1⟩`, `π_ω(V) = e^{i(ω − θX)}`, so that
//! `⟨n|π_ω(W(m))|l⟩ = e^{−iθm₁m₂/2} e^{i(ω−lθ)m₂} δ_{n,l+m₁}`.
//!
//! 2D lattice: `π_2D(W(m))ψ(l) = e^{iθ m∧l/2} ψ(l−m)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::IntMatrix;

/// Relative pruning threshold for coefficients.
pub const PRUNE_REL: f64 = 1e-14;

pub type Site = [i64; 2];

fn wedge(l: Site, m: Site) -> i64 {
    l[0] * m[1] - l[1] * m[0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierElement {
    pub theta: f64,
    /// Sorted by `m`, no duplicates, no pruned entries.
    coeffs: Vec<(Site, Complex64)>,
}

/// One serialized coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub m1: i64,
    pub m2: i64,
    pub re: f64,
    pub im: f64,
    pub theta: f64,
}

impl FourierElement {
    /// Collects coefficients, summing duplicates and pruning entries below
    /// `1e-14 · max|a|`.
    pub fn new<I: IntoIterator<Item = (Site, Complex64)>>(theta: f64, items: I) -> Self {
        let mut map: BTreeMap<Site, Complex64> = BTreeMap::new();
        for (m, a) in items {
            *map.entry(m).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Self::from_map(theta, map)
    }

    fn from_map(theta: f64, map: BTreeMap<Site, Complex64>) -> Self {
        let max = map.values().map(|a| a.norm()).fold(0.0, f64::max);
        let floor = PRUNE_REL * max;
        let coeffs = map.into_iter().filter(|(_, a)| a.norm() > floor).collect();
        Self { theta, coeffs }
    }

    pub fn zero(theta: f64) -> Self {
        Self { theta, coeffs: Vec::new() }
    }

    pub fn identity(theta: f64) -> Self {
        Self::word(theta, [0, 0])
    }

    /// The basis word `W(m)`.
    pub fn word(theta: f64, m: Site) -> Self {
        Self { theta, coeffs: vec![(m, Complex64::new(1.0, 0.0))] }
    }

    pub fn coeffs(&self) -> &[(Site, Complex64)] {
        &self.coeffs
    }

    pub fn coeff(&self, m: Site) -> Complex64 {
        match self.coeffs.binary_search_by(|(k, _)| k.cmp(&m)) {
            Ok(i) => self.coeffs[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Same coefficients read as an element at another angle.
    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, coeffs: self.coeffs.clone() }
    }

    /// `Σ |a_m|`, an upper bound for the norm in every representation.
    pub fn norm1(&self) -> f64 {
        self.coeffs.iter().map(|(_, a)| a.norm()).sum()
    }

    /// `(max |m₁|, max |m₂|)` over the support.
    pub fn support_radius(&self) -> (i64, i64) {
        self.coeffs
            .iter()
            .fold((0, 0), |(r1, r2), (m, _)| (r1.max(m[0].abs()), r2.max(m[1].abs())))
    }

    /// `A* = Σ conj(a_m) W(−m)`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.theta, self.coeffs.iter().map(|(m, a)| ([-m[0], -m[1]], a.conj())))
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|(m, a)| (self.coeff([-m[0], -m[1]]) - a.conj()).norm() <= tol)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.theta, self.coeffs.iter().map(|(m, a)| (*m, a * s)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_theta(self.theta, other.theta)?;
        Ok(Self::new(self.theta, self.coeffs.iter().chain(other.coeffs.iter()).copied()))
    }

    /// Largest coefficient difference, assuming equal angles.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<Site> = self.coeffs.iter().map(|c| c.0).collect();
        keys.extend(other.coeffs.iter().map(|c| c.0));
        keys.iter().map(|&m| (self.coeff(m) - other.coeff(m)).norm()).fold(0.0, f64::max)
    }

    pub fn to_records(&self) -> Vec<CoefficientRecord> {
        self.coeffs
            .iter()
            .map(|(m, a)| CoefficientRecord { m1: m[0], m2: m[1], re: a.re, im: a.im, theta: self.theta })
            .collect()
    }

    /// All records must carry the same angle.
    pub fn from_records(records: &[CoefficientRecord]) -> Result<Self> {
        let theta = records.first().map(|r| r.theta).ok_or_else(|| Error::Domain("no coefficients".into()))?;
        for r in records {
            check_theta(theta, r.theta)?;
        }
        Ok(Self::new(theta, records.iter().map(|r| ([r.m1, r.m2], Complex64::new(r.re, r.im)))))
    }
}

fn check_theta(a: f64, b: f64) -> Result<()> {
    if a != b {
        return Err(Error::ThetaMismatch(a, b));
    }
    Ok(())
}

/// Twisted convolution `c_n = Σ_l a_l b_{n−l} e^{iθ l∧(n−l)/2}`.
pub fn weyl_product(a: &FourierElement, b: &FourierElement) -> Result<FourierElement> {
    check_theta(a.theta, b.theta)?;
    let theta = a.theta;
    let mut map: BTreeMap<Site, Complex64> = BTreeMap::new();
    for (l, al) in &a.coeffs {
        for (m, bm) in &b.coeffs {
            let n = [l[0] + m[0], l[1] + m[1]];
            let phase = Complex64::from_polar(1.0, 0.5 * theta * wedge(*l, *m) as f64);
            *map.entry(n).or_insert(Complex64::new(0.0, 0.0)) += al * bm * phase;
        }
    }
    Ok(FourierElement::from_map(theta, map))
}

/// `τ(A) = a_(0,0)`.
pub fn trace(a: &FourierElement) -> Complex64 {
    a.coeff([0, 0])
}

/// `δ_j W(m) = i m_j W(m)`, `j ∈ {1, 2}`.
pub fn derivation(a: &FourierElement, j: usize) -> Result<FourierElement> {
    if j != 1 && j != 2 {
        return Err(Error::Domain(format!("derivation index {j} must be 1 or 2")));
    }
    Ok(FourierElement::new(
        a.theta,
        a.coeffs.iter().map(|(m, c)| (*m, c * Complex64::new(0.0, m[j - 1] as f64))),
    ))
}

fn apply_int(s: &IntMatrix, m: Site) -> Site {
    [s[0][0] * m[0] + s[0][1] * m[1], s[1][0] * m[0] + s[1][1] * m[1]]
}

pub fn int_matrix_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `η_S(W(m)) = W(Sm)` for `S ∈ SL(2, ℤ)`.
pub fn symmetry_automorphism(a: &FourierElement, s: &IntMatrix) -> Result<FourierElement> {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if det != 1 {
        return Err(Error::Domain(format!("symmetry matrix has determinant {det}, expected 1")));
    }
    Ok(FourierElement::new(a.theta, a.coeffs.iter().map(|(m, c)| (apply_int(s, *m), *c))))
}

/// Named Hamiltonians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    /// `U + U⁻¹ + V + V⁻¹`.
    Harper4,
    /// Harper plus the words `W(±(1,1))`.
    Triangular6,
    /// `U + U⁻¹`: ballistic calibration.
    FreeChain,
    /// `V + V⁻¹`: a multiplication operator with no transport, the negative control.
    PotentialOnly,
    /// Coefficients read from a JSON record list; the angle is rebound to the experiment's.
    Custom(Vec<(Site, Complex64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub name: String,
    pub model: Model,
}

impl HamiltonianSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let model = match name {
            "harper4" => Model::Harper4,
            "triangular6" => Model::Triangular6,
            "free-chain" => Model::FreeChain,
            "v-control" => Model::PotentialOnly,
            other => return Err(Error::Domain(format!("unknown model preset '{other}'"))),
        };
        Ok(Self { name: name.to_string(), model })
    }

    pub fn custom(name: &str, element: &FourierElement) -> Self {
        Self { name: name.to_string(), model: Model::Custom(element.coeffs.clone()) }
    }

    pub fn element(&self, theta: f64) -> FourierElement {
        let one = Complex64::new(1.0, 0.0);
        let words: Vec<Site> = match &self.model {
            Model::Harper4 => vec![[1, 0], [-1, 0], [0, 1], [0, -1]],
            Model::Triangular6 => vec![[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]],
            Model::FreeChain => vec![[1, 0], [-1, 0]],
            Model::PotentialOnly => vec![[0, 1], [0, -1]],
            Model::Custom(c) => return FourierElement::new(theta, c.iter().copied()),
        };
        FourierElement::new(theta, words.into_iter().map(|m| (m, one)))
    }
}

/// Banded matrix on the sites `−N..=N` of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    pub half_width: usize,
    pub bandwidth: usize,
    /// `bands[d + bandwidth][j]` holds the entry at (row j + d, column j).
    bands: Vec<Vec<Complex64>>,
    pub hermitian: bool,
}

impl BandedMatrix {
    pub fn size(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Row/column index of site n.
    pub fn index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }

    /// Entry `⟨n|M|l⟩` with sites in `−N..=N`.
    pub fn get(&self, n: i64, l: i64) -> Complex64 {
        let d = n - l;
        if d.unsigned_abs() as usize > self.bandwidth {
            return Complex64::new(0.0, 0.0);
        }
        let (i, j) = (self.index(n), self.index(l));
        if i >= self.size() || j >= self.size() {
            return Complex64::new(0.0, 0.0);
        }
        self.bands[(d + self.bandwidth as i64) as usize][j]
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.matvec_range(x, y, 0, self.size());
    }

    /// `y[i] = Σ_j M_ij x[j]` for rows `i ∈ [lo, hi)`; other rows untouched.
    pub fn matvec_range(&self, x: &[Complex64], y: &mut [Complex64], lo: usize, hi: usize) {
        let n = self.size();
        let b = self.bandwidth as i64;
        for i in lo..hi {
            let mut acc = Complex64::new(0.0, 0.0);
            for d in -b..=b {
                let j = i as i64 - d;
                if j < 0 || j >= n as i64 {
                    continue;
                }
                acc += self.bands[(d + b) as usize][j as usize] * x[j as usize];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.size();
        let b = self.bandwidth as i64;
        DMatrix::from_fn(n, n, |i, j| {
            let d = i as i64 - j as i64;
            if d.abs() > b {
                Complex64::new(0.0, 0.0)
            } else {
                self.bands[(d + b) as usize][j]
            }
        })
    }

    /// Diagonal and first sub-diagonal, when the matrix is tridiagonal.
    pub fn tridiagonal_parts(&self) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        if self.bandwidth > 1 {
            return None;
        }
        let n = self.size();
        let diag = if self.bandwidth == 0 { self.bands[0].clone() } else { self.bands[1].clone() };
        let sub = if self.bandwidth == 0 { vec![Complex64::new(0.0, 0.0); n - 1] } else { self.bands[2][..n - 1].to_vec() };
        Some((diag, sub))
    }

    /// Hopping velocity bound `max_i Σ_j |M_ij| |i − j|`.
    pub fn velocity_bound(&self) -> f64 {
        let b = self.bandwidth as i64;
        let n = self.size();
        (0..n)
            .map(|i| {
                (-b..=b)
                    .filter_map(|d| {
                        let j = i as i64 - d;
                        (j >= 0 && j < n as i64).then(|| self.bands[(d + b) as usize][j as usize].norm() * d.abs() as f64)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.size();
        let b = self.bandwidth as i64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut center = 0.0;
            let mut radius = 0.0;
            for d in -b..=b {
                let j = i as i64 - d;
                if j < 0 || j >= n as i64 {
                    continue;
                }
                let v = self.bands[(d + b) as usize][j as usize];
                if d == 0 {
                    center = v.re;
                } else {
                    radius += v.norm();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        (lo, hi)
    }

    /// Eigenvalues (ascending) and optionally eigenvectors (column-major).
    ///
    /// Tridiagonal Hermitian matrices are gauged to real symmetric form and
    /// solved by implicit QL; wider bands use the dense Hermitian solver.
    pub fn eigen(&self, vectors: bool, omega: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
        let n = self.size();
        if let Some((diag, sub)) = self.tridiagonal_parts() {
            let d: Vec<f64> = diag.iter().map(|z| z.re).collect();
            let off: Vec<f64> = sub.iter().map(|z| z.norm()).collect();
            let (vals, z) = crate::linalg::tridiag_eigen(&d, &off, vectors).ok_or(Error::Eigen { omega, n })?;
            if !vectors {
                return Ok((vals, Vec::new()));
            }
            // H = G T G* with G = diag(u), u_{i+1} = u_i · b_i/|b_i|
            let mut gauge = vec![Complex64::new(1.0, 0.0); n];
            for i in 0..n - 1 {
                let b = sub[i];
                gauge[i + 1] = if b.norm() > 0.0 { gauge[i] * b / b.norm() } else { gauge[i] };
            }
            let mut vecs = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    vecs.push(gauge[i] * z[j * n + i]);
                }
            }
            return Ok((vals, vecs));
        }
        crate::linalg::hermitian_band_eigen(&self.to_dense(), self.bandwidth, vectors).ok_or(Error::Eigen { omega, n })
    }
}

fn chain_entry(theta: f64, omega: f64, m: Site, l: i64) -> Complex64 {
    let phase = -0.5 * theta * (m[0] * m[1]) as f64 + (omega - l as f64 * theta) * m[1] as f64;
    Complex64::from_polar(1.0, phase)
}

/// Truncation of `π_ω(A)` to the sites `−N..=N` (open boundary).
pub fn represent_1d(a: &FourierElement, omega: f64, half_width: usize) -> Result<BandedMatrix> {
    let (r1, _) = a.support_radius();
    if r1 as usize > 2 * half_width {
        return Err(Error::Window(format!("support radius {r1} exceeds window 2N = {}", 2 * half_width)));
    }
    let n = 2 * half_width + 1;
    let b = r1 as usize;
    let mut bands = vec![vec![Complex64::new(0.0, 0.0); n]; 2 * b + 1];
    for (m, am) in a.coeffs() {
        let d = m[0];
        let band = &mut bands[(d + b as i64) as usize];
        for j in 0..n {
            let i = j as i64 + d;
            if i < 0 || i >= n as i64 {
                continue;
            }
            let l = j as i64 - half_width as i64;
            band[j] += am * chain_entry(a.theta, omega, *m, l);
        }
    }
    Ok(BandedMatrix { half_width, bandwidth: b, bands, hermitian: a.is_self_adjoint(1e-12) })
}

/// `π_ω(A)` on a ring of `n` sites (`0..n`) with twisted boundary `e^{ik}`:
/// hopping across the seam picks up `e^{±ik}`. With `θ/2π = p/q` and `q | n`
/// this is the Bloch reduction of the periodic chain, free of edge states.
pub fn represent_ring(a: &FourierElement, omega: f64, n: usize, k: f64) -> Result<DMatrix<Complex64>> {
    let (r1, _) = a.support_radius();
    if r1 as usize >= n {
        return Err(Error::Window(format!("support radius {r1} exceeds ring size {n}")));
    }
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    for (m, am) in a.coeffs() {
        for l in 0..n as i64 {
            let target = l + m[0];
            let wraps = target.div_euclid(n as i64);
            let row = target.rem_euclid(n as i64) as usize;
            let twist = Complex64::from_polar(1.0, k * wraps as f64);
            mat[(row, l as usize)] += am * chain_entry(a.theta, omega, *m, l) * twist;
        }
    }
    Ok(mat)
}

/// Compressed-row sparse matrix on the square window `[−N, N]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix2D {
    pub half_width: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    pub hermitian: bool,
    /// `(max |m₁|, max |m₂|)` of the represented element.
    pub reach: (i64, i64),
    /// `Σ |a_m|`.
    pub norm1: f64,
}

impl SparseMatrix2D {
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn size(&self) -> usize {
        self.side() * self.side()
    }

    pub fn index(&self, l: Site) -> Option<usize> {
        let n = self.half_width as i64;
        if l[0].abs() > n || l[1].abs() > n {
            return None;
        }
        Some(((l[0] + n) as usize) * self.side() + (l[1] + n) as usize)
    }

    pub fn site(&self, idx: usize) -> Site {
        let n = self.half_width as i64;
        let s = self.side();
        [(idx / s) as i64 - n, (idx % s) as i64 - n]
    }

    pub fn get(&self, row: Site, col: Site) -> Complex64 {
        let (Some(r), Some(c)) = (self.index(row), self.index(col)) else {
            return Complex64::new(0.0, 0.0);
        };
        let span = self.row_start[r]..self.row_start[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for r in 0..self.size() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    /// Rows restricted to the box `|l₁|, |l₂| ≤ radius`.
    pub fn matvec_box(&self, x: &[Complex64], y: &mut [Complex64], radius: usize) {
        let n = self.half_width as i64;
        let r = (radius as i64).min(n);
        let s = self.side();
        for i1 in -r..=r {
            let base = ((i1 + n) as usize) * s;
            for i2 in -r..=r {
                let row = base + (i2 + n) as usize;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in self.row_start[row]..self.row_start[row + 1] {
                    acc += self.vals[k] * x[self.cols[k]];
                }
                y[row] = acc;
            }
        }
    }
}

/// Truncation of `π_2D(A)` to the window `[−N, N]²` (open boundary).
pub fn represent_2d(a: &FourierElement, half_width: usize) -> Result<SparseMatrix2D> {
    let (r1, r2) = a.support_radius();
    if r1.max(r2) as usize > 2 * half_width {
        return Err(Error::Window(format!("support radius {} exceeds window 2N = {}", r1.max(r2), 2 * half_width)));
    }
    let n = half_width as i64;
    let side = 2 * half_width + 1;
    let mut row_start = Vec::with_capacity(side * side + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_start.push(0);
    let mut row_entries: Vec<(usize, Complex64)> = Vec::with_capacity(a.len());
    for l1 in -n..=n {
        for l2 in -n..=n {
            row_entries.clear();
            for (m, am) in a.coeffs() {
                let c = [l1 - m[0], l2 - m[1]];
                if c[0].abs() > n || c[1].abs() > n {
                    continue;
                }
                let idx = ((c[0] + n) as usize) * side + (c[1] + n) as usize;
                let phase = Complex64::from_polar(1.0, 0.5 * a.theta * wedge(*m, [l1, l2]) as f64);
                row_entries.push((idx, am * phase));
            }
            row_entries.sort_by_key(|e| e.0);
            for &(c, v) in &row_entries {
                cols.push(c);
                vals.push(v);
            }
            row_start.push(cols.len());
        }
    }
    Ok(SparseMatrix2D {
        half_width,
        row_start,
        cols,
        vals,
        hermitian: a.is_self_adjoint(1e-12),
        reach: (r1, r2),
        norm1: a.norm1(),
    })
}

/// `(1/Λ) Σ_{n=1}^{Λ} ⟨n|π_ω(A)|n⟩`.
pub fn trace_per_volume(a: &FourierElement, omega: f64, lambda: usize) -> Result<Complex64> {
    if lambda == 0 {
        return Err(Error::Domain("Lambda must be at least 1".into()));
    }
    let diag: Vec<(Site, Complex64)> = a.coeffs().iter().filter(|(m, _)| m[0] == 0).copied().collect();
    let mut re = Vec::with_capacity(lambda);
    let mut im = Vec::with_capacity(lambda);
    for n in 1..=lambda as i64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, am) in &diag {
            acc += am * chain_entry(a.theta, omega, *m, n);
        }
        re.push(acc.re);
        im.push(acc.im);
    }
    let l = lambda as f64;
    Ok(Complex64::new(
        crate::linalg::compensated_sum(re) / l,
        crate::linalg::compensated_sum(im) / l,
    ))
}
