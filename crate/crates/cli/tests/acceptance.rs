//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs as a plain binary (`harness = false`). Positional arguments such as
//! `3 9` restrict the run to those criteria. Exits nonzero if any criterion
//! fails.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotlab::diophantine::{continued_fraction, denjoy_koksma};
use rotlab::dynamics::*;
use rotlab::frames::*;
use rotlab::lattice_sums::*;
use rotlab::rotation_algebra::*;
use rotlab::scaling::geometric_grid;
use rotlab::spectral::*;
use rotlab::weyl_phase_space::{build_oscillator, mehler_kernel, GridFunction, GridSpec};
use rotlab::{Complex64, IntMatrix, GOLDEN, S3, S4, S6};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn harper() -> HamiltonianSpec {
    HamiltonianSpec::preset("harper4").unwrap()
}

fn random_element(rng: &mut ChaCha8Rng, theta: f64, terms: usize, reach: i64) -> FourierElement {
    FourierElement::new(
        theta,
        (0..terms).map(|_| {
            let m = [rng.gen_range(-reach..=reach), rng.gen_range(-reach..=reach)];
            (m, c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        }),
    )
}

fn wedge(l: [i64; 2], m: [i64; 2]) -> f64 {
    (l[0] * m[1] - l[1] * m[0]) as f64
}

// ---------------------------------------------------------------- 1

const ALGEBRA_TOL: f64 = 1e-12;

fn algebra_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let theta = rng.gen_range(0.0..TAU);
        // phase law on single words
        let l = [rng.gen_range(-6..=6), rng.gen_range(-6..=6)];
        let m = [rng.gen_range(-6..=6), rng.gen_range(-6..=6)];
        let prod = weyl_product(&FourierElement::word(theta, l), &FourierElement::word(theta, m)).unwrap();
        let want = FourierElement::word(theta, [l[0] + m[0], l[1] + m[1]])
            .scale(Complex64::from_polar(1.0, 0.5 * theta * wedge(l, m)));
        worst[0] = worst[0].max(prod.max_diff(&want));

        // a_m = τ(W(m)⁻¹ A), with W(m)⁻¹ = W(−m)
        let a = random_element(&mut rng, theta, 8, 3);
        for (site, coeff) in a.coeffs() {
            let inv = FourierElement::word(theta, [-site[0], -site[1]]);
            let got = trace(&weyl_product(&inv, &a).unwrap());
            worst[1] = worst[1].max((got - coeff).norm());
        }

        let b = random_element(&mut rng, theta, 6, 3);
        let d = random_element(&mut rng, theta, 6, 3);
        let left = weyl_product(&weyl_product(&a, &b).unwrap(), &d).unwrap();
        let right = weyl_product(&a, &weyl_product(&b, &d).unwrap()).unwrap();
        worst[2] = worst[2].max(left.max_diff(&right) / (a.norm1() * b.norm1() * d.norm1()).max(1.0));

        let s: IntMatrix = [S3, S4, S6, [[1, 1], [0, 1]]][rng.gen_range(0..4)];
        let eta = |x: &FourierElement| symmetry_automorphism(x, &s).unwrap();
        let hom = eta(&weyl_product(&a, &b).unwrap()).max_diff(&weyl_product(&eta(&a), &eta(&b)).unwrap());
        worst[3] = worst[3].max(hom / (a.norm1() * b.norm1()).max(1.0));
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max <= ALGEBRA_TOL,
        format!(
            "phase {:.1e}, inversion {:.1e}, assoc {:.1e}, eta {:.1e} (tol {ALGEBRA_TOL:.0e}, 200 seeded cases)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// ---------------------------------------------------------------- 2

const REPRESENTATION_TOL: f64 = 1e-12;

fn representation_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 4];
    for _ in 0..40 {
        let theta = rng.gen_range(0.1..TAU);
        let omega = rng.gen_range(-PI..PI);
        let a = random_element(&mut rng, theta, 5, 2);
        let b = random_element(&mut rng, theta, 5, 2);
        let scale = (a.norm1() * b.norm1()).max(1.0);
        let ab = weyl_product(&a, &b).unwrap();

        let n = 12usize;
        let pab = represent_1d(&ab, omega, n).unwrap().to_dense();
        let prod = represent_1d(&a, omega, n).unwrap().to_dense() * represent_1d(&b, omega, n).unwrap().to_dense();
        let inner = n as i64 - a.support_radius().0 - b.support_radius().0;
        for r in -inner..=inner {
            for col in -inner..=inner {
                let (i, j) = ((r + n as i64) as usize, (col + n as i64) as usize);
                worst[0] = worst[0].max((pab[(i, j)] - prod[(i, j)]).norm() / scale);
            }
        }

        let n2 = 6usize;
        let (qa, qb, qab) = (represent_2d(&a, n2).unwrap(), represent_2d(&b, n2).unwrap(), represent_2d(&ab, n2).unwrap());
        let size = qa.size();
        let reach = |x: &FourierElement| {
            let (r1, r2) = x.support_radius();
            r1.max(r2)
        };
        let inner2 = n2 as i64 - reach(&a) - reach(&b);
        for col in 0..size {
            let site = qa.site(col);
            if site[0].abs() > inner2 || site[1].abs() > inner2 {
                continue;
            }
            let mut e = vec![c(0.0, 0.0); size];
            e[col] = c(1.0, 0.0);
            let (mut be, mut abe, mut direct) = (vec![c(0.0, 0.0); size], vec![c(0.0, 0.0); size], vec![c(0.0, 0.0); size]);
            qb.matvec(&e, &mut be);
            qa.matvec(&be, &mut abe);
            qab.matvec(&e, &mut direct);
            for (x, y) in abe.iter().zip(&direct) {
                worst[1] = worst[1].max((x - y).norm() / scale);
            }
        }

        let m = represent_1d(&a, omega, 10).unwrap();
        let shifted = represent_1d(&a, omega - theta, 10).unwrap();
        let wrapped = represent_1d(&a, omega + TAU, 10).unwrap();
        for r in -10i64..10 {
            for col in -10i64..10 {
                worst[2] = worst[2].max((m.get(r + 1, col + 1) - shifted.get(r, col)).norm() / a.norm1().max(1.0));
                worst[3] = worst[3].max((m.get(r, col) - wrapped.get(r, col)).norm() / a.norm1().max(1.0));
            }
        }
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    outcome(
        max <= REPRESENTATION_TOL,
        format!(
            "chain {:.1e}, plane {:.1e}, covariance {:.1e}, periodicity {:.1e} (tol {REPRESENTATION_TOL:.0e})",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// ---------------------------------------------------------------- 3

fn dos_moments() -> Outcome {
    let theta = TAU * 377.0 / 610.0;
    let mu = dos_estimate(&harper(), theta, 2000, 64).unwrap();
    let mass = mu.total_mass;
    let (mean, second) = (mu.moment(1), mu.moment(2));
    let (lo, hi) = mu.support();
    let pass = (mass - 1.0).abs() <= 1e-12
        && mean.abs() <= 0.01
        && (second - 4.0).abs() <= 0.05
        && lo >= -4.01
        && hi <= 4.01;
    outcome(pass, format!("mass {mass:.15}, mean {mean:.2e}, second {second:.4}, support [{lo:.4}, {hi:.4}]"))
}

// ---------------------------------------------------------------- 4

const CALIBRATION_QS: [f64; 4] = [-1.0, 0.25, 0.5, 2.0];

fn estimator_calibration() -> Outcome {
    let opts = DimensionOptions::default();
    let leb = lebesgue_proxy(100_000);
    let leb_ts = geometric_grid(20.0, 4000.0, 10f64.powf(0.125));
    let leb_err = multifractal_dimensions(&leb, (0.0, 1.0), &CALIBRATION_QS, &leb_ts, &opts)
        .unwrap()
        .iter()
        .map(|d| (d.fit.exponent - 1.0).abs())
        .fold(0.0, f64::max);

    let target = 2f64.ln() / 3f64.ln();
    let cantor = cantor_measure(12);
    let cantor_ts = geometric_grid(9.0, 3f64.powi(8), 3f64.powf(0.25));
    let cantor_err = multifractal_dimensions(&cantor, (0.0, 1.0), &CALIBRATION_QS, &cantor_ts, &opts)
        .unwrap()
        .iter()
        .map(|d| (d.fit.exponent - target).abs())
        .fold(0.0, f64::max);

    let point = EmpiricalMeasure::new((0..64).map(|_| (0.25, 1.0 / 64.0)).collect()).unwrap();
    let point_err = multifractal_dimensions(&point, (0.0, 1.0), &CALIBRATION_QS, &geometric_grid(1.0, 1e4, 2.0), &opts)
        .unwrap()
        .iter()
        .map(|d| d.fit.exponent.abs())
        .fold(0.0, f64::max);

    outcome(
        leb_err <= 0.05 && cantor_err <= 0.03 && point_err <= 0.01,
        format!("worst |D - D*|: lebesgue {leb_err:.4} (0.05), cantor {cantor_err:.4} (0.03), point {point_err:.4} (0.01)"),
    )
}

// ---------------------------------------------------------------- 5

fn harper_dimension() -> Outcome {
    let h = harper();
    let ts = geometric_grid(10.0, 1000.0, 10f64.powf(0.125));
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, q) in [(233u64, 377usize), (377, 610)] {
        let theta = TAU * p as f64 / q as f64;
        let mu = dos_estimate_with(&h, theta, q, 16, Boundary::Periodic { k_points: 4 }).unwrap();
        let reach = h.element(theta).norm1() + 0.1;
        let d = multifractal_dimension(&mu, (-reach, reach), -1.0, &ts, &DimensionOptions::default()).unwrap();
        let ok = [d.fit.exponent, d.fit.lower, d.fit.upper].iter().all(|x| (0.45..=0.55).contains(x));
        pass &= ok;
        parts.push(format!("{p}/{q}: D(-1) {:.4} windowed [{:.4}, {:.4}]", d.fit.exponent, d.fit.lower, d.fit.upper));
    }
    outcome(pass, format!("{} (target [0.45, 0.55])", parts.join("; ")))
}

// ---------------------------------------------------------------- 6

fn transport_calibration() -> Outcome {
    let theta = TAU * GOLDEN;
    let free = HamiltonianSpec::preset("free-chain").unwrap();
    let cfg = TransportConfig { qs: vec![2.0], t_max: 64.0, half_width: 200, n_omega: 1, ..Default::default() };
    let tr = &transport_1d(&free, theta, &cfg).unwrap()[0];
    // Σ n² J_n(2t)² = 2t²
    let sum_rule = tr
        .times
        .iter()
        .zip(&tr.moments)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, m)| (m / (2.0 * t * t) - 1.0).abs())
        .fold(0.0, f64::max);
    let beta_free = beta_estimate(tr).unwrap().exponent;

    let v = HamiltonianSpec::preset("v-control").unwrap();
    let cfg = TransportConfig { qs: vec![2.0], t_max: 64.0, half_width: 40, n_omega: 4, ..Default::default() };
    let beta_v = beta_estimate(&transport_1d(&v, theta, &cfg).unwrap()[0]).unwrap().exponent;

    let t = 0.05;
    let taylor = moment_1d(&harper(), theta, 2.0, t, None, 40, 8).unwrap() / (t * t);

    let pass = sum_rule <= 1e-6 && (beta_free - 1.0).abs() <= 0.05 && beta_v.abs() <= 0.05 && (taylor / 2.0 - 1.0).abs() <= 0.01;
    outcome(
        pass,
        format!("free beta(2) {beta_free:.4}, sum-rule rel err {sum_rule:.1e}, V beta {beta_v:.4}, M/t^2 at t=0.05 {taylor:.5}"),
    )
}

// ---------------------------------------------------------------- 7

const MARGIN_FLOOR: f64 = -0.1;

fn main_bound_margin() -> Outcome {
    let res = BoundResources {
        ratio: (987, 610),
        dos_sites: 610,
        dos_n_omega: 16,
        dos_k_points: 4,
        dim_t_grid: geometric_grid(10.0, 1000.0, 10f64.powf(0.125)),
        transport: TransportConfig { t_max: 256.0, half_width: 1064, n_omega: 16, ..Default::default() },
        beta_t_grid: geometric_grid(2.0, 256.0, 2f64.powf(0.25)),
        averaging: Averaging::Cesaro,
    };
    let report = verify_main_bound(&harper(), &[0.25, 0.5, 0.75], &res).unwrap();
    let pass = report.entries.iter().all(|e| e.margin >= MARGIN_FLOOR);
    let parts: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("q={}: beta {:.3} D {:.3} margin {:+.4}", e.q, e.beta.exponent, e.dimension.exponent, e.margin))
        .collect();
    outcome(pass, format!("{} (floor {MARGIN_FLOOR})", parts.join("; ")))
}

// ---------------------------------------------------------------- 8

const CROSS_TOL: f64 = 0.05;

fn cross_representation() -> Outcome {
    let h = harper();
    let theta = TAU * (1.0 + 377.0 / 610.0);
    let qs = vec![1.0, 2.0];
    let ts = geometric_grid(2.0, 64.0, 2f64.powf(0.25));
    let betas = |traces: Vec<TransportTrace>| -> Vec<f64> {
        traces.iter().map(|tr| beta_estimate_on(tr, &ts).unwrap().exponent).collect()
    };
    let spec = GridSpec::new(theta, 448, 84).unwrap();
    let weyl = betas(transport_weyl(&h, theta, &S4, spec, &TransportConfig { qs: qs.clone(), t_max: 64.0, ..Default::default() }).unwrap());
    let plane = betas(transport_2d(&h, theta, &TransportConfig { qs: qs.clone(), t_max: 64.0, half_width: 296, ..Default::default() }).unwrap());
    let chain = betas(
        transport_1d(&h, theta, &TransportConfig { qs: qs.clone(), t_max: 64.0, half_width: 296, n_omega: 16, ..Default::default() }).unwrap(),
    );
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 0..qs.len() {
        pass &= (weyl[i] - plane[i]).abs() <= CROSS_TOL && weyl[i] <= chain[i] + CROSS_TOL;
        parts.push(format!("q={}: weyl {:.4} 2d {:.4} 1d {:.4}", qs[i], weyl[i], plane[i], chain[i]));
    }
    outcome(pass, format!("{} (tol {CROSS_TOL})", parts.join("; ")))
}

// ---------------------------------------------------------------- 9

fn mixture(spec: GridSpec, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<(f64, f64, Complex64)> = (0..3)
        .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    GridFunction::from_fn(spec, |x| {
        p.iter().map(|&(x0, k0, a)| a * Complex64::from_polar((-(x - x0) * (x - x0) / 2.0).exp(), k0 * x)).sum()
    })
    .normalized()
}

fn frames() -> Outcome {
    let osc = build_oscillator(&S4).unwrap();
    let tracial = tracial_vector(&GridSpec::for_ratio(89, 55, 16, 8).unwrap(), 1.0, false).unwrap();
    let defect = tracial_defect(&tracial, 5);

    let spec = GridSpec::for_ratio(89, 55, 16, 10).unwrap();
    let g = osc.ground_state(spec);
    let d = frame_operator(&g, 5).unwrap();
    let (lhs, rhs) = poisson_sides(&g, &d.element, &mixture(spec, 17), 14).unwrap();
    let poisson = lhs.distance(&rhs);

    let wide = GridSpec::for_ratio(144, 55, 16, 8).unwrap();
    let d_wide = frame_operator(&osc.ground_state(wide), 3).unwrap();
    let (c_lower, c_upper) = frame_bounds(&d_wide.element, 256, 32).unwrap();

    let small = GridSpec::for_ratio(89, 55, 16, 10).unwrap();
    let d_small = frame_operator(&osc.ground_state(small), 4).unwrap();
    let sandwich = dos_equivalence_check(&harper(), &d_small.element, 128, 32, 64).unwrap();

    let hat = normalize_frame(&g, &d.element, CalculusWindow::default()).unwrap();
    let t_dual = dual_frame_element(&hat, 6).unwrap();
    let one_minus = FourierElement::identity(t_dual.theta).add(&t_dual.scale(c(-1.0, 0.0))).unwrap();
    let tr = mean_trace(&one_minus, 16, 400).unwrap();
    let law = (tr - (1.0 - TAU / spec.theta)).abs();

    let pass = defect <= 1e-8 && poisson <= 1e-6 && c_lower > 0.0 && sandwich.holds_all && law <= 1e-2;
    outcome(
        pass,
        format!(
            "defect {defect:.1e}, poisson {poisson:.1e}, bounds at 144/55 [{c_lower:.4}, {c_upper:.4}], sandwich {} over {} bins, projection trace err {law:.1e}",
            if sandwich.holds_all { "holds" } else { "broken" },
            sandwich.bins.len()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn theta_certificate() -> Outcome {
    let cert = theta_zero_certificate(30).unwrap();
    let pass = cert.passed
        && cert.winding == 1
        && cert.center_value <= 1e-10
        && cert.period_error <= 1e-10
        && cert.quasi_period_error <= 1e-10;
    outcome(
        pass,
        format!(
            "winding {}, |f(pi+i pi)| {:.1e}, period err {:.1e}, quasi-period err {:.1e}",
            cert.winding, cert.center_value, cert.period_error, cert.quasi_period_error
        ),
    )
}

// ---------------------------------------------------------------- 11

const MEHLER_TOL: f64 = 1e-6;

fn mehler_oracle() -> Outcome {
    let osc = build_oscillator(&S4).unwrap();
    let pts = [-3.0, -1.7, -0.6, 0.0, 0.4, 1.1, 2.5, 3.2];
    let hermite: Vec<Vec<f64>> = pts.iter().map(|&x| rotlab::linalg::hermite_functions(x, 200)).collect();
    let mut worst: f64 = 0.0;
    for t in [0.1, 0.2, 0.5, 1.0, 2.0, 5.0] {
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                let sum: f64 = (0..200).map(|n| (-t * (n as f64 + 0.5)).exp() * hermite[i][n] * hermite[j][n]).sum();
                worst = worst.max((mehler_kernel(&osc, t, x, y).unwrap() - c(sum, 0.0)).norm());
            }
        }
    }
    outcome(worst <= MEHLER_TOL, format!("sup error {worst:.1e} over t in [0.1, 5] (tol {MEHLER_TOL:.0e})"))
}

// ---------------------------------------------------------------- 12

/// Piecewise-constant 1-periodic function: value `values[i]` on `[cuts[i], cuts[i+1])`.
struct Step {
    cuts: Vec<f64>,
    values: Vec<f64>,
}

impl Step {
    fn random(rng: &mut ChaCha8Rng, pieces: usize) -> Self {
        let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        cuts.push(0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.push(1.0);
        Step { cuts, values: (0..pieces).map(|_| rng.gen_range(-2.0..2.0)).collect() }
    }

    fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let i = self.cuts.partition_point(|c| *c <= x) - 1;
        self.values[i.min(self.values.len() - 1)]
    }

    fn integral(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| v * (self.cuts[i + 1] - self.cuts[i])).sum()
    }

    /// Total variation around the circle, including the jump at 0.
    fn variation(&self) -> f64 {
        let n = self.values.len();
        (0..n).map(|i| (self.values[(i + 1) % n] - self.values[i]).abs()).sum()
    }
}

fn denjoy_koksma_corpus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut alphas = vec![GOLDEN, 2f64.sqrt() - 1.0, PI - 3.0, std::f64::consts::E - 2.0];
    alphas.extend((0..4).map(|_| rng.gen_range(0.0..1.0)));
    let steps: Vec<Step> = (0..6).map(|i| Step::random(&mut rng, 2 + 3 * i)).collect();
    let (mut pairs, mut violations, mut tightest) = (0usize, 0usize, 0.0f64);
    for &alpha in &alphas {
        let cf = continued_fraction(alpha, 30).unwrap();
        for &(_, q) in cf.convergents.iter().filter(|(_, q)| *q >= 1 && *q <= 100_000) {
            let x = rng.gen_range(0.0..1.0);
            for step in &steps {
                // independent ergodic sum against the exact integral and variation
                let sum: f64 = (0..q).map(|j| step.eval(x + j as f64 * alpha)).sum();
                let gap = (sum - q as f64 * step.integral()).abs();
                let lib = denjoy_koksma(|y| step.eval(y), step.variation(), Some(step.integral()), x, alpha, q);
                pairs += 1;
                if gap > step.variation() || lib.is_err() {
                    violations += 1;
                }
                tightest = tightest.max(gap / step.variation());
            }
            // smooth case: cos 2πx + sin 6πx/2 has variation at most 4 + 6
            let smooth = |y: f64| (TAU * y).cos() + 0.5 * (3.0 * TAU * y).sin();
            let sum: f64 = (0..q).map(|j| smooth(x + j as f64 * alpha)).sum();
            pairs += 1;
            if sum.abs() > 10.0 || denjoy_koksma(smooth, 10.0, Some(0.0), x, alpha, q).is_err() {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{pairs} (function, convergent) pairs, {violations} violations, largest gap/variation {tightest:.3}"),
    )
}

// ---------------------------------------------------------------- 13

fn lattice_sum_scaling() -> Outcome {
    let gaussian = lattice_sum_scan(GOLDEN, 1.0, &geometric_grid(1e-4, 1e-1, 10f64.powf(0.25)), 8).unwrap();
    let theta = TAU * (1.0 + GOLDEN);
    let osc = build_oscillator(&S4).unwrap();
    let mehler = mehler_scan(&osc, theta, &geometric_grid(1e-3, 1.0, 10f64.powf(0.25)), 8).unwrap();
    let mut reduction: f64 = 0.0;
    for s in [S4, S3] {
        let osc = build_oscillator(&s).unwrap();
        for &t in &[1.0, 0.1, 0.01, 0.001] {
            for &(x, y) in &[(0.0, 0.0), (0.8, 1.7), (1.5, 0.4)] {
                let direct = mehler_lattice_sum(&osc, theta, t, x, y).unwrap();
                let (alpha, a, delta, x0, y0) = mehler_reduction(&osc, theta, t, x, y);
                let reduced = mehler_prefactor(&osc, t) * gaussian_lattice_sum(alpha, a, delta, x0, y0).unwrap().value;
                reduction = reduction.max((direct - reduced).abs() / reduced);
            }
        }
    }
    let (ge, me) = (gaussian.fit.exponent, mehler.fit.exponent);
    outcome(
        ge <= 0.3 && (0.45..=0.7).contains(&me) && reduction <= 1e-8,
        format!("gaussian exponent {ge:.4} (<= 0.3), mehler exponent {me:.4} (in [0.45, 0.7]), reduction rel err {reduction:.1e}"),
    )
}

// ---------------------------------------------------------------- 14

fn run_cli(args: &[&str], cache: &Path) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_rotlab"))
        .args(args)
        .env("ROTLAB_CACHE", cache)
        .output()
        .expect("spawn rotlab");
    assert!(out.status.success(), "rotlab {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn reproducibility() -> Outcome {
    let runs: [&[&str]; 9] = [
        &["cf", "--alpha", "sqrt2", "--terms", "20"],
        &["dos", "--sites", "400", "--n-omega", "8"],
        &["dims"],
        &["transport", "--rep", "1d", "--t-max", "32", "--sites", "160", "--n-omega", "4"],
        &["bound"],
        &["frame"],
        &["theta-zeros"],
        &["lattice-sum", "--lattice", "mehler"],
        &["oscillator", "--symmetry", "S6"],
    ];
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for args in runs {
        if run_cli(args, first.path()) != run_cli(args, second.path()) {
            differing.push(args[0]);
        }
    }
    // a warm cache and a corrupted one must give the same bytes as a cold run
    let dims_cold = run_cli(&["dims"], second.path());
    let dims_warm = run_cli(&["dims"], first.path());
    let mut corrupted = 0;
    for entry in std::fs::read_dir(first.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replacen('1', "2", 1)).unwrap();
        corrupted += 1;
    }
    let dims_repaired = run_cli(&["dims"], first.path());
    let cache_ok = dims_cold == dims_warm && dims_cold == dims_repaired && corrupted > 0;
    outcome(
        differing.is_empty() && cache_ok,
        format!(
            "{} subcommands run twice, differing: {differing:?}; cache warm/corrupted ({corrupted} entries) {}",
            runs.len(),
            if cache_ok { "identical" } else { "DIFFER" }
        ),
    )
}

// ----------------------------------------------------------------

type Criterion = (usize, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 14] = [
    (1, "algebra exactness", algebra_exactness),
    (2, "representation consistency", representation_consistency),
    (3, "DOS moments", dos_moments),
    (4, "dimension estimator calibration", estimator_calibration),
    (5, "Harper spectral dimension", harper_dimension),
    (6, "transport calibration", transport_calibration),
    (7, "diffusion vs dimension margin", main_bound_margin),
    (8, "cross-representation exponents", cross_representation),
    (9, "frames", frames),
    (10, "theta-zero certificate", theta_certificate),
    (11, "Mehler kernel vs Hermite sum", mehler_oracle),
    (12, "Denjoy-Koksma corpus", denjoy_koksma_corpus),
    (13, "lattice-sum scaling", lattice_sum_scaling),
    (14, "reproducibility", reproducibility),
];

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "AC{id:02} {} {name}: {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
