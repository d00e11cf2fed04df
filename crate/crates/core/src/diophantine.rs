//! Continued fractions, Roth-type diagnostics and the Denjoy–Koksma inequality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Remainders below this floor are treated as zero.
const REMAINDER_FLOOR: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// All requested terms were produced.
    Requested,
    /// The remainder dropped below the precision floor: alpha is rational at
    /// working precision and the expansion is finite.
    Terminated,
    /// The convergent already reproduces alpha to machine precision; further
    /// quotients would be rounding noise.
    PrecisionExhausted,
    /// The next denominator would overflow 64 bits.
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub alpha: f64,
    /// `a_1, …, a_n`.
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` for k = 1..n; the seeds `p_0/q_0 = 0/1` are implicit.
    pub convergents: Vec<(u64, u64)>,
    pub stop: StopReason,
}

impl ContinuedFraction {
    pub fn terminated(&self) -> bool {
        self.stop == StopReason::Terminated
    }

    pub fn len(&self) -> usize {
        self.partial_quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partial_quotients.is_empty()
    }

    /// Denominator `q_k`, with `q_0 = 1`.
    pub fn q(&self, k: usize) -> u64 {
        if k == 0 {
            1
        } else {
            self.convergents[k - 1].1
        }
    }

    /// Build from explicit partial quotients; alpha is evaluated backwards.
    pub fn from_partial_quotients(quotients: &[u64]) -> Result<Self> {
        if quotients.is_empty() || quotients.contains(&0) {
            return Err(Error::Domain("partial quotients must be positive and non-empty".into()));
        }
        let mut x = 0.0;
        for &a in quotients.iter().rev() {
            x = 1.0 / (a as f64 + x);
        }
        let mut convergents = Vec::with_capacity(quotients.len());
        let (mut p_prev, mut q_prev, mut p, mut q) = (1u64, 0u64, 0u64, 1u64);
        let mut stop = StopReason::Requested;
        for &a in quotients {
            match next_convergent(a, p_prev, q_prev, p, q) {
                Some((pn, qn)) => {
                    p_prev = p;
                    q_prev = q;
                    p = pn;
                    q = qn;
                    convergents.push((p, q));
                }
                None => {
                    stop = StopReason::Overflow;
                    break;
                }
            }
        }
        let partial_quotients = quotients[..convergents.len()].to_vec();
        Ok(Self { alpha: x, partial_quotients, convergents, stop })
    }

    /// Convergent `p_k/q_k` as a float.
    pub fn ratio(&self, k: usize) -> f64 {
        let (p, q) = self.convergents[k - 1];
        p as f64 / q as f64
    }
}

fn next_convergent(a: u64, p_prev: u64, q_prev: u64, p: u64, q: u64) -> Option<(u64, u64)> {
    let pn = a.checked_mul(p)?.checked_add(p_prev)?;
    let qn = a.checked_mul(q)?.checked_add(q_prev)?;
    Some((pn, qn))
}

/// Continued-fraction expansion of `alpha ∈ (0,1)` with at most `n_terms`
/// partial quotients.
pub fn continued_fraction(alpha: f64, n_terms: usize) -> Result<ContinuedFraction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside (0, 1)")));
    }
    if n_terms == 0 {
        return Err(Error::Domain("n_terms must be positive".into()));
    }
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let (mut p_prev, mut q_prev, mut p, mut q) = (1u64, 0u64, 0u64, 1u64);
    let mut x = alpha;
    let mut stop = StopReason::Requested;
    while quotients.len() < n_terms {
        let inv = 1.0 / x;
        let a_f = inv.floor();
        if a_f >= u64::MAX as f64 {
            stop = StopReason::Overflow;
            break;
        }
        let a = a_f as u64;
        let (pn, qn) = match next_convergent(a, p_prev, q_prev, p, q) {
            Some(v) => v,
            None => {
                stop = StopReason::Overflow;
                break;
            }
        };
        quotients.push(a);
        convergents.push((pn, qn));
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        let rem = inv - a_f;
        if rem < REMAINDER_FLOOR {
            stop = StopReason::Terminated;
            break;
        }
        // |alpha - p/q| at the rounding level of alpha: further quotients are noise
        if (alpha - p as f64 / q as f64).abs() <= 4.0 * f64::EPSILON * alpha {
            if quotients.len() < n_terms {
                stop = StopReason::PrecisionExhausted;
            }
            break;
        }
        x = rem;
    }
    Ok(ContinuedFraction { alpha, partial_quotients: quotients, convergents, stop })
}

/// Partial sums `Σ_{n=1}^{N} a_{n+1} / q_n^ε` for N = 1..len−1.
///
/// The series converges for numbers of Roth type; a finite window cannot
/// decide convergence, so only the data is returned.
pub fn roth_diagnostic(cf: &ContinuedFraction, epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    if cf.convergents.len() < 2 {
        return Err(Error::Insufficient("need at least two convergents".into()));
    }
    let mut sums = Vec::with_capacity(cf.len() - 1);
    let mut acc = 0.0;
    for n in 1..cf.len() {
        acc += cf.partial_quotients[n] as f64 / (cf.q(n) as f64).powf(epsilon);
        sums.push(acc);
    }
    Ok(sums)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenjoyKoksma {
    pub ergodic_sum: f64,
    pub discrepancy: f64,
    pub variation: f64,
}

/// Ergodic sum of a 1-periodic function of bounded variation along the
/// rotation by `alpha`, compared with `q ∫φ`.
///
/// `integral` is the period integral of `phi`; when absent it is computed by a
/// composite midpoint rule on 2¹⁶ cells. The returned discrepancy is checked
/// against the declared variation and a violation is an error.
pub fn denjoy_koksma<F: Fn(f64) -> f64>(
    phi: F,
    variation: f64,
    integral: Option<f64>,
    x: f64,
    alpha: f64,
    q: u64,
) -> Result<DenjoyKoksma> {
    if q == 0 {
        return Err(Error::Domain("q must be positive".into()));
    }
    let qf = q as f64;
    let p = (qf * alpha).round();
    if (alpha - p / qf).abs() >= 1.0 / (qf * qf) {
        return Err(Error::Domain(format!(
            "q = {q} is not an approximant denominator of alpha = {alpha}: |alpha - {p}/{q}| = {:.3e} >= 1/q^2",
            (alpha - p / qf).abs()
        )));
    }
    let integral = integral.unwrap_or_else(|| {
        let m = 1 << 16;
        let h = 1.0 / m as f64;
        crate::linalg::compensated_sum((0..m).map(|k| phi((k as f64 + 0.5) * h))) * h
    });
    let ergodic_sum =
        crate::linalg::compensated_sum((1..=q).map(|j| phi((x + j as f64 * alpha).rem_euclid(1.0))));
    let discrepancy = (ergodic_sum - qf * integral).abs();
    if discrepancy > variation {
        return Err(Error::Invariant(format!(
            "Denjoy-Koksma violated: discrepancy {discrepancy} > variation {variation}"
        )));
    }
    Ok(DenjoyKoksma { ergodic_sum, discrepancy, variation })
}
