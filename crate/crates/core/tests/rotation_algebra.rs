use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;
use rotlab::diophantine::continued_fraction;
use rotlab::rotation_algebra::*;
use rotlab::{IntMatrix, GOLDEN, S3, S4, S6};

const SHEAR: IntMatrix = [[1, 1], [0, 1]];

fn element(theta: f64, terms: Vec<((i64, i64), (f64, f64))>) -> FourierElement {
    FourierElement::new(theta, terms.into_iter().map(|((a, b), (re, im))| ([a, b], Complex64::new(re, im))))
}

fn terms(max: usize) -> impl Strategy<Value = Vec<((i64, i64), (f64, f64))>> {
    prop::collection::vec(((-2i64..=2, -2i64..=2), (-1.0f64..1.0, -1.0f64..1.0)), 1..=max)
}

fn mul(a: &FourierElement, b: &FourierElement) -> FourierElement {
    weyl_product(a, b).unwrap()
}

fn scale_of(a: &FourierElement) -> f64 {
    a.norm1().max(1.0)
}

#[test]
fn harper_square_coefficients() {
    let theta = TAU * GOLDEN;
    let h = HamiltonianSpec::preset("harper4").unwrap().element(theta);
    let h2 = mul(&h, &h);
    assert!((trace(&h2) - 4.0).norm() < 1e-14);
    for m in [[2, 0], [-2, 0], [0, 2], [0, -2]] {
        assert!((h2.coeff(m) - 1.0).norm() < 1e-14);
    }
    // W(l)W(m) + W(m)W(l) at l ⊥ m: two phases e^{±iθ/2} add to 2cos(θ/2)
    for m in [[1, 1], [-1, -1], [1, -1], [-1, 1]] {
        assert!((h2.coeff(m).norm() - 2.0 * (theta / 2.0).cos().abs()).abs() < 1e-14);
    }
    assert!((trace_per_volume(&h2, 0.3, 10_000).unwrap() - 4.0).norm() < 1e-2);
}

#[test]
fn named_symmetries_fix_their_models() {
    let theta = 1.7;
    let h4 = HamiltonianSpec::preset("harper4").unwrap().element(theta);
    let h6 = HamiltonianSpec::preset("triangular6").unwrap().element(theta);
    assert_eq!(symmetry_automorphism(&h4, &S4).unwrap(), h4);
    assert_eq!(symmetry_automorphism(&h6, &S6).unwrap(), h6);
    assert_eq!(symmetry_automorphism(&h6, &S3).unwrap(), h6);
    assert!(symmetry_automorphism(&h4, &[[2, 0], [0, 1]]).is_err());
    assert!(HamiltonianSpec::preset("kagome").is_err());
}

#[test]
fn harper_trace_per_volume_cancels_at_convergents() {
    let theta = TAU * GOLDEN;
    let h = HamiltonianSpec::preset("harper4").unwrap().element(theta);
    let cf = continued_fraction(GOLDEN, 20).unwrap();
    for &(_, q) in cf.convergents.iter().skip(3) {
        // the diagonal 2cos(nθ+ω) has variation 4 per period
        let v = trace_per_volume(&h, 0.7, q as usize).unwrap();
        assert!(v.norm() * q as f64 <= 4.0, "q = {q}: {}", v.norm() * q as f64);
    }
    assert!(trace_per_volume(&h, 0.0, 0).is_err());
}

#[test]
fn two_dimensional_square_of_harper() {
    let h = HamiltonianSpec::preset("harper4").unwrap().element(TAU * GOLDEN);
    let m = represent_2d(&h, 4).unwrap();
    let mut e0 = vec![Complex64::new(0.0, 0.0); m.size()];
    e0[m.index([0, 0]).unwrap()] = Complex64::new(1.0, 0.0);
    let mut v = e0.clone();
    let mut w = e0.clone();
    m.matvec(&e0, &mut v);
    m.matvec(&v, &mut w);
    assert!((w[m.index([0, 0]).unwrap()] - 4.0).norm() < 1e-14);
    assert!(represent_2d(&h, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative(theta in 0.1f64..6.2, a in terms(5), b in terms(5), c in terms(5)) {
        let (a, b, c) = (element(theta, a), element(theta, b), element(theta, c));
        let left = mul(&mul(&a, &b), &c);
        let right = mul(&a, &mul(&b, &c));
        let tol = 1e-12 * scale_of(&a) * scale_of(&b) * scale_of(&c);
        prop_assert!(left.max_diff(&right) <= tol);
    }

    #[test]
    fn trace_is_tracial_and_positive(theta in 0.1f64..6.2, a in terms(6), b in terms(6)) {
        let (a, b) = (element(theta, a), element(theta, b));
        prop_assert!((trace(&mul(&a, &b)) - trace(&mul(&b, &a))).norm() <= 1e-13 * scale_of(&a) * scale_of(&b));
        let sq = trace(&mul(&a.adjoint(), &a));
        let expected: f64 = a.coeffs().iter().map(|(_, c)| c.norm_sqr()).sum();
        prop_assert!(sq.im.abs() <= 1e-14 * expected.max(1.0));
        prop_assert!((sq.re - expected).abs() <= 1e-13 * expected.max(1.0));
        prop_assert!(sq.re >= 0.0);
    }

    #[test]
    fn mismatched_angles_are_refused(theta in 0.1f64..3.0, a in terms(3)) {
        let a = element(theta, a);
        prop_assert!(weyl_product(&a, &a.with_theta(theta + 0.5)).is_err());
        prop_assert_eq!(mul(&a, &FourierElement::identity(theta)), a.clone());
    }

    #[test]
    fn symmetries_are_homomorphisms(theta in 0.1f64..6.2, a in terms(5), b in terms(5), which in 0usize..4) {
        let s = [S3, S4, S6, SHEAR][which];
        let (a, b) = (element(theta, a), element(theta, b));
        let eta = |x: &FourierElement| symmetry_automorphism(x, &s).unwrap();
        let lhs = eta(&mul(&a, &b));
        let rhs = mul(&eta(&a), &eta(&b));
        prop_assert!(lhs.max_diff(&rhs) <= 1e-13 * scale_of(&a) * scale_of(&b));
        prop_assert_eq!(trace(&eta(&a)), trace(&a));
    }

    #[test]
    fn order_three_symmetry_cubes_to_identity(theta in 0.1f64..6.2, a in terms(6)) {
        let a = element(theta, a);
        let mut x = a.clone();
        for _ in 0..3 {
            x = symmetry_automorphism(&x, &S3).unwrap();
        }
        prop_assert_eq!(x, a);
        prop_assert_eq!(int_matrix_mul(&S3, &int_matrix_mul(&S3, &S3)), [[1, 0], [0, 1]]);
    }

    #[test]
    fn derivations_obey_leibniz(theta in 0.1f64..6.2, a in terms(5), b in terms(5), j in 1usize..=2) {
        let (a, b) = (element(theta, a), element(theta, b));
        let d = |x: &FourierElement| derivation(x, j).unwrap();
        let lhs = d(&mul(&a, &b));
        let rhs = mul(&d(&a), &b).add(&mul(&a, &d(&b))).unwrap();
        prop_assert!(lhs.max_diff(&rhs) <= 1e-12 * scale_of(&a) * scale_of(&b));
    }

    #[test]
    fn records_round_trip(theta in 0.1f64..6.2, a in terms(8)) {
        let a = element(theta, a);
        // the angle travels inside the records, so an empty element cannot round-trip
        prop_assume!(!a.is_empty());
        let json = serde_json::to_string(&a.to_records()).unwrap();
        let records: Vec<CoefficientRecord> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(FourierElement::from_records(&records).unwrap(), a);
    }

    #[test]
    fn chain_covariance_and_periodicity(theta in 0.1f64..6.2, omega in -PI..PI, a in terms(6)) {
        let a = element(theta, a);
        let n = 10i64;
        let m = represent_1d(&a, omega, n as usize).unwrap();
        // shifting both sites by one lowers the phase by θ
        let shifted = represent_1d(&a, omega - theta, n as usize).unwrap();
        let wrapped = represent_1d(&a, omega + TAU, n as usize).unwrap();
        for r in -n..n {
            for c in -n..n {
                prop_assert!((m.get(r + 1, c + 1) - shifted.get(r, c)).norm() <= 1e-12 * scale_of(&a));
                prop_assert!((m.get(r, c) - wrapped.get(r, c)).norm() <= 1e-12 * scale_of(&a));
            }
        }
    }

    #[test]
    fn chain_representation_is_multiplicative_inside(theta in 0.1f64..6.2, omega in -PI..PI, a in terms(5), b in terms(5)) {
        let (a, b) = (element(theta, a), element(theta, b));
        let n = 12usize;
        let ab = represent_1d(&mul(&a, &b), omega, n).unwrap().to_dense();
        let prod = represent_1d(&a, omega, n).unwrap().to_dense() * represent_1d(&b, omega, n).unwrap().to_dense();
        let inner = n as i64 - a.support_radius().0 - b.support_radius().0;
        let tol = 1e-12 * scale_of(&a) * scale_of(&b);
        for r in -inner..=inner {
            for c in -inner..=inner {
                let (i, j) = ((r + n as i64) as usize, (c + n as i64) as usize);
                prop_assert!((ab[(i, j)] - prod[(i, j)]).norm() <= tol);
            }
        }
    }

    #[test]
    fn self_adjoint_elements_give_hermitian_matrices(theta in 0.1f64..6.2, omega in -PI..PI, a in terms(5)) {
        let a = element(theta, a);
        let h = a.add(&a.adjoint()).unwrap();
        prop_assert!(h.is_self_adjoint(1e-14));
        let m = represent_1d(&h, omega, 8).unwrap();
        prop_assert!(m.hermitian);
        let dense = m.to_dense();
        prop_assert!((&dense - dense.adjoint()).norm() <= 1e-13 * scale_of(&h));
        prop_assert!(represent_2d(&h, 4).unwrap().hermitian);
    }

    #[test]
    fn plane_representation_is_multiplicative_inside(theta in 0.1f64..6.2, a in terms(4), b in terms(4)) {
        let (a, b) = (element(theta, a), element(theta, b));
        let n = 7usize;
        let pa = represent_2d(&a, n).unwrap();
        let pb = represent_2d(&b, n).unwrap();
        let pab = represent_2d(&mul(&a, &b), n).unwrap();
        let reach = |x: &FourierElement| { let (r1, r2) = x.support_radius(); r1.max(r2) };
        let inner = n as i64 - reach(&a) - reach(&b);
        let tol = 1e-12 * scale_of(&a) * scale_of(&b);
        let zero = Complex64::new(0.0, 0.0);
        for l1 in -inner..=inner {
            for l2 in -inner..=inner {
                let col = [l1, l2];
                let mut e = vec![zero; pa.size()];
                e[pa.index(col).unwrap()] = Complex64::new(1.0, 0.0);
                let mut tmp = vec![zero; pa.size()];
                let mut out = vec![zero; pa.size()];
                pb.matvec(&e, &mut tmp);
                pa.matvec(&tmp, &mut out);
                for (idx, v) in out.iter().enumerate() {
                    prop_assert!((pab.get(pab.site(idx), col) - v).norm() <= tol);
                }
                prop_assert!((pab.get(col, col) - trace(&mul(&a, &b))).norm() <= tol);
            }
        }
    }
}
