use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotlab::weyl_phase_space::*;
use rotlab::{Complex64, FourierElement, S3, S4, S6};
use rustfft::FftPlanner;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Sum of a few Gaussian wave packets with random centres, momenta and widths.
fn schwartz_mixture(spec: GridSpec, seed: u64, spread: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let packets: Vec<(f64, f64, f64, Complex64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-spread..spread),
                rng.gen_range(-spread..spread),
                rng.gen_range(0.7..1.3),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
        })
        .collect();
    GridFunction::from_fn(spec, |x| {
        packets
            .iter()
            .map(|&(x0, k0, w, a)| a * Complex64::from_polar((-(x - x0) * (x - x0) / (2.0 * w * w)).exp(), k0 * x))
            .sum()
    })
    .normalized()
}

/// Unitary DFT on a grid with `n h² = 2π`, where the Fourier grid coincides with the position grid.
fn dft_oracle(psi: &GridFunction) -> GridFunction {
    let n = psi.values.len();
    let h = psi.h();
    assert!((n as f64 * h * h - 2.0 * PI).abs() < 1e-12);
    let mut buf: Vec<Complex64> =
        psi.values.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -v }).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let values = buf
        .iter()
        .enumerate()
        .map(|(m, v)| v * (h / (2.0 * PI).sqrt()) * if m % 2 == 0 { sign } else { -sign })
        .collect();
    GridFunction { spec: psi.spec, values }
}

/// Distance between a and b after removing the best global phase.
fn phase_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    let z = b.inner(a);
    a.distance(&b.scaled(z / z.norm()))
}

#[test]
fn quarter_turn_is_the_fourier_transform() {
    // θ = πK/cells gives n h² = 2π
    let spec = GridSpec::new(PI * 16.0 / 8.0, 16, 8).unwrap();
    let psi = schwartz_mixture(spec, 7, 2.0);
    let dec = Decomposition::from_int(&S4).unwrap();
    let f = metaplectic(&dec, &psi).unwrap();
    let oracle = dft_oracle(&psi);
    assert!(f.distance(&oracle) < 1e-10, "distance {}", f.distance(&oracle));
}

#[test]
fn identity_symplectic_map_is_identity() {
    let spec = GridSpec::new(2.0 * PI * 1.2, 16, 10).unwrap();
    let psi = schwartz_mixture(spec, 3, 2.0);
    let dec = Decomposition::from_matrix([[1.0, 0.0], [0.0, 1.0]]).unwrap();
    assert!(phase_distance(&metaplectic(&dec, &psi).unwrap(), &psi) < 1e-14);
}

#[test]
fn metaplectic_is_unitary_and_covariant() {
    let spec = GridSpec::new(2.0 * PI * 1.2, 32, 10).unwrap();
    let h = spec.step();
    let psi = schwartz_mixture(spec, 11, 2.0);
    for s in [S3, S4, S6] {
        let dec = Decomposition::from_int(&s).unwrap();
        let f_psi = metaplectic(&dec, &psi).unwrap();
        assert!((f_psi.norm() - 1.0).abs() < 1e-8, "{s:?}: norm {}", f_psi.norm());
        for (k1, k2) in [(3i64, 0i64), (0, 4), (-5, 2)] {
            let a = [k1 as f64 * h, k2 as f64 * h];
            let sa = [(s[0][0] * k1 + s[0][1] * k2) as f64 * h, (s[1][0] * k1 + s[1][1] * k2) as f64 * h];
            let lhs = metaplectic(&dec, &weyl_operator(a, &psi).unwrap()).unwrap();
            let rhs = weyl_operator(sa, &f_psi).unwrap();
            assert!(lhs.distance(&rhs) < 1e-8, "{s:?} a = {a:?}: {}", lhs.distance(&rhs));
        }
    }
}

#[test]
fn order_three_cube_is_a_phase() {
    let spec = GridSpec::new(2.0 * PI * 1.2, 32, 10).unwrap();
    let psi = schwartz_mixture(spec, 5, 2.0);
    let dec = Decomposition::from_int(&S3).unwrap();
    let mut out = psi.clone();
    for _ in 0..3 {
        out = metaplectic(&dec, &out).unwrap();
    }
    assert!(phase_distance(&out, &psi) < 1e-6);
    let dec6 = Decomposition::from_int(&S6).unwrap();
    let mut out = psi.clone();
    for _ in 0..6 {
        out = metaplectic(&dec6, &out).unwrap();
    }
    assert!(phase_distance(&out, &psi) < 1e-6, "{}", phase_distance(&out, &psi));
}

#[test]
fn ground_states_are_fixed_and_oscillator_commutes() {
    let spec = GridSpec::new(2.0 * PI * 1.2, 48, 12).unwrap();
    for s in [S3, S4, S6] {
        let osc = build_oscillator(&s).unwrap();
        let dec = Decomposition::from_int(&s).unwrap();
        let states = osc.eigenfunctions(spec, 50);
        assert!(phase_distance(&metaplectic(&dec, &states[0]).unwrap(), &states[0]) < 1e-6);
        for (n, phi) in states.iter().enumerate() {
            let e = osc.energy(n);
            let resid = osc.apply(phi).axpy(c(-e, 0.0), phi).norm();
            assert!(resid < 1e-8, "{s:?} n = {n}: eigen residual {resid}");
            let f = metaplectic(&dec, phi).unwrap();
            let comm = osc.apply(&f).axpy(c(-e, 0.0), &f).norm();
            assert!(comm < 1e-6, "{s:?} n = {n}: commutator {comm}");
        }
    }
}

#[test]
fn mehler_matches_hermite_sum() {
    let osc = build_oscillator(&S4).unwrap();
    let k0 = mehler_kernel(&osc, 1.0, 0.0, 0.0).unwrap();
    assert!((k0.re - 1.0 / (2.0 * PI * 1f64.sinh()).sqrt()).abs() < 1e-15);
    let pts = [-3.0, -1.2, 0.0, 0.4, 2.5];
    for t in [0.1, 0.3, 1.0, 2.0] {
        for &x in &pts {
            let hx = rotlab::linalg::hermite_functions(x, 200);
            for &y in &pts {
                let hy = rotlab::linalg::hermite_functions(y, 200);
                let sum: f64 = (0..200).map(|n| (-t * (n as f64 + 0.5)).exp() * hx[n] * hy[n]).sum();
                let k = mehler_kernel(&osc, t, x, y).unwrap();
                assert!((k - c(sum, 0.0)).norm() < 1e-6, "t = {t}, ({x}, {y}): {k} vs {sum}");
            }
        }
    }
    assert!(mehler_kernel(&osc, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn mehler_hermiticity() {
    for s in [S3, S6] {
        let osc = build_oscillator(&s).unwrap();
        for (x, y) in [(0.3, -1.1), (2.0, 0.5)] {
            let a = mehler_kernel(&osc, 0.7, x, y).unwrap();
            let b = mehler_kernel(&osc, 0.7, y, x).unwrap();
            assert!((a - b.conj()).norm() < 1e-15);
        }
    }
}

#[test]
fn mehler_matches_grid_heat_kernel() {
    // independent oracle: exp(−tℌ) from a dense eigen-decomposition of the grid operator
    let spec = GridSpec::new(2.0 * PI, 16, 6).unwrap();
    let n = spec.len();
    let h = spec.step();
    for s in [S3, S6] {
        let osc = build_oscillator(&s).unwrap();
        let mut mat = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let mut e = GridFunction::zeros(spec);
            e.values[j] = c(1.0, 0.0);
            let col = osc.apply(&e);
            for i in 0..n {
                mat[(i, j)] = col.values[i];
            }
        }
        let herm = (&mat + mat.adjoint()) * c(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let t = 0.5;
        for &(i, j) in &[(n / 2, n / 2), (n / 2 + 5, n / 2 - 7), (n / 2 - 12, n / 2 + 3)] {
            let mut k = c(0.0, 0.0);
            for m in 0..n {
                let w = (-t * eig.eigenvalues[m]).exp();
                k += eig.eigenvectors[(i, m)] * eig.eigenvectors[(j, m)].conj() * w;
            }
            k /= h;
            let closed = mehler_kernel(&osc, t, spec.x(i), spec.x(j)).unwrap();
            assert!((k - closed).norm() < 1e-6, "{s:?} ({i},{j}): {k} vs {closed}");
        }
    }
}

#[test]
fn direct_integral_identity() {
    let spec = GridSpec::new(2.0 * PI * 1.3, 16, 16).unwrap();
    let phi = schwartz_mixture(spec, 21, 3.0);
    let psi = schwartz_mixture(spec, 22, 3.0);
    let gphi = gauge_slices(&phi, spec.theta).unwrap();
    let gpsi = gauge_slices(&psi, spec.theta).unwrap();
    assert!((gphi.norm_quadrature() - 1.0).abs() < 1e-12);
    let theta = spec.theta;
    let elements = [
        FourierElement::word(theta, [1, 0]),
        FourierElement::word(theta, [0, 1]),
        FourierElement::new(theta, [([1, 2], c(0.3, -0.2)), ([-2, 1], c(1.0, 0.5)), ([0, 0], c(0.7, 0.0))]),
    ];
    for a in &elements {
        let lhs = phi.inner(&apply_element(a, &psi).unwrap());
        let rhs = gphi.direct_integral(a, &gpsi);
        assert!((lhs - rhs).norm() < 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn bump_in_one_cell_has_one_component_per_phase() {
    let spec = GridSpec::new(2.0 * PI * 1.3, 16, 8).unwrap();
    let r = spec.theta.sqrt();
    let phi = GridFunction::from_fn(spec, |x| {
        let u = x / r - 0.5;
        if u.abs() < 0.5 { c((-1.0 / (0.25 - u * u)).exp(), 0.0) } else { c(0.0, 0.0) }
    });
    let g = gauge_slices(&phi, spec.theta).unwrap();
    for slice in &g.slices {
        assert!(slice.iter().filter(|z| z.norm() > 0.0).count() <= 1);
    }
}

#[test]
fn coherent_resolution_of_identity() {
    let spec = GridSpec::new(2.0 * PI, 16, 6).unwrap();
    let h = spec.step();
    let psi = rotlab::weyl_phase_space::build_oscillator(&S4).unwrap().ground_state(spec);
    let phi = schwartz_mixture(spec, 9, 1.5);
    // (1/2π) ∫ d²b ⟨𝔚(b)ψ|φ⟩ 𝔚(b)ψ = ‖ψ‖² φ
    let stride = 3;
    let d1 = stride as f64 * h;
    let d2 = 0.45;
    let mut acc = GridFunction::zeros(spec);
    for k1 in -40i64..=40 {
        for k2 in -24i64..=24 {
            let b = [(k1 * stride) as f64 * h, k2 as f64 * d2];
            let wpsi = weyl_operator(b, &psi).unwrap();
            acc = acc.axpy(wpsi.inner(&phi) * (d1 * d2 / (2.0 * PI)), &wpsi);
        }
    }
    assert!(acc.distance(&phi) < 1e-3, "{}", acc.distance(&phi));
}

#[test]
fn husimi_from_ambiguity_function() {
    let spec = GridSpec::new(2.0 * PI, 16, 6).unwrap();
    let h = spec.step();
    let g = build_oscillator(&S4).unwrap().ground_state(spec);
    let psi = schwartz_mixture(spec, 13, 1.0);
    // Q(z) = (1/2π) ∫ da ⟨ψ|𝔚(−a)|ψ⟩ e^{i a∧z} e^{−|a|²/4}
    let stride = 2;
    let d1 = stride as f64 * h;
    let d2 = 0.3;
    let mut amb = Vec::new();
    for k1 in -40i64..=40 {
        for k2 in -40i64..=40 {
            let a = [(k1 * stride) as f64 * h, k2 as f64 * d2];
            amb.push((a, psi.inner(&weyl_operator([-a[0], -a[1]], &psi).unwrap())));
        }
    }
    for z in [[0.0, 0.0], [4.0 * h, 0.5], [-10.0 * h, -0.8]] {
        let direct = weyl_operator(z, &g).unwrap().inner(&psi).norm_sqr();
        let mut q = c(0.0, 0.0);
        for (a, v) in &amb {
            let wedge = a[0] * z[1] - a[1] * z[0];
            q += v * Complex64::from_polar((-(a[0] * a[0] + a[1] * a[1]) / 4.0).exp(), wedge);
        }
        q *= d1 * d2 / (2.0 * PI);
        assert!((q.re - direct).abs() < 1e-4 && q.im.abs() < 1e-4, "z = {z:?}: {q} vs {direct}");
    }
}

#[test]
fn csv_dump_has_header_and_rows() {
    let spec = GridSpec::new(2.0 * PI, 8, 1).unwrap();
    let g = build_oscillator(&S4).unwrap().ground_state(spec);
    let csv = g.to_csv();
    assert!(csv.starts_with("x,re,im\n"));
    assert_eq!(csv.lines().count(), spec.len() + 1);
}
