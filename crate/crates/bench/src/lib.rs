//! Fixtures shared by the kernel benchmarks.

use std::f64::consts::TAU;

use rotlab::{FourierElement, HamiltonianSpec};

/// θ = 2π·377/610, a golden-mean convergent.
pub fn convergent_theta() -> f64 {
    TAU * 377.0 / 610.0
}

pub fn harper() -> HamiltonianSpec {
    HamiltonianSpec::preset("harper4").expect("harper4 is a preset")
}

/// A dense element on the square `[−r, r]²` with deterministic coefficients.
pub fn dense_element(theta: f64, r: i64) -> FourierElement {
    FourierElement::new(
        theta,
        (-r..=r).flat_map(|a| (-r..=r).map(move |b| ([a, b], rotlab::Complex64::new(1.0 / (1 + a * a + b * b) as f64, 0.1 * a as f64)))),
    )
}
