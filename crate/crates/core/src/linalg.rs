//! Eigen-solvers and special functions shared by the other modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Eigen-decomposition of a real symmetric tridiagonal matrix by implicit QL
/// iterations with Wilkinson-type shifts.
///
/// `diag` has length n, `off` has length n − 1 (`off[i]` couples i and i+1).
/// Eigenvalues are returned in ascending order. When `vectors` is set the
/// eigenvectors come back column-major: column j is `z[j*n..(j+1)*n]`.
pub fn tridiag_eigen(diag: &[f64], off: &[f64], vectors: bool) -> Option<(Vec<f64>, Vec<f64>)> {
    tridiag_ql(diag, off, if vectors { diag.len() } else { 0 })
}

/// Eigenvalues and the first component of each normalised eigenvector: the
/// nodes and (square roots of the) weights of the Gauss rule of a Jacobi matrix.
pub fn tridiag_gauss(diag: &[f64], off: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    tridiag_ql(diag, off, 1.min(diag.len()))
}

/// QL iterations tracking the leading `keep` components of every eigenvector;
/// the returned vectors are `keep`-long blocks, one per eigenvalue.
fn tridiag_ql(diag: &[f64], off: &[f64], keep: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    assert_eq!(off.len() + 1, n, "off-diagonal length must be n - 1");
    let vectors = keep > 0;
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0; n * keep];
    for i in 0..keep {
        z[i * keep + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if vectors {
                    let (lo, hi) = z.split_at_mut((i + 1) * keep);
                    let zi = &mut lo[i * keep..(i + 1) * keep];
                    let zi1 = &mut hi[..keep];
                    for k in 0..keep {
                        let f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * keep];
    for (j, &src) in order.iter().enumerate() {
        vecs[j * keep..(j + 1) * keep].copy_from_slice(&z[src * keep..(src + 1) * keep]);
    }
    Some((vals, vecs))
}

/// Eigenvalues (ascending) and optionally eigenvectors of a dense Hermitian matrix.
/// Eigenvectors are returned column-major as in [`tridiag_eigen`].
pub fn hermitian_eigen(m: &DMatrix<Complex64>, vectors: bool) -> (Vec<f64>, Vec<Complex64>) {
    let n = m.nrows();
    if !vectors {
        let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        return (vals, Vec::new());
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Vec::with_capacity(n * n);
    for &j in &order {
        vecs.extend(eig.eigenvectors.column(j).iter().copied());
    }
    (vals, vecs)
}

/// Eigen-decomposition of a dense Hermitian matrix whose entries vanish
/// beyond `bandwidth` off the diagonal.
///
/// Givens rotations with bulge chasing reduce the band to tridiagonal form
/// in O(n² b), the tridiagonal is gauged real and solved by [`tridiag_eigen`].
/// Eigenvectors (column-major) are transformed back when requested.
pub fn hermitian_band_eigen(
    m: &DMatrix<Complex64>,
    bandwidth: usize,
    vectors: bool,
) -> Option<(Vec<f64>, Vec<Complex64>)> {
    let n = m.nrows();
    if n == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let b = bandwidth.max(1);
    let mut a = m.clone();
    let mut q = if vectors { Some(DMatrix::<Complex64>::identity(n, n)) } else { None };
    for k in 0..n.saturating_sub(2) {
        for r in ((k + 2)..=(k + b).min(n - 1)).rev() {
            if a[(r, k)] == Complex64::new(0.0, 0.0) {
                continue;
            }
            rotate_away(&mut a, q.as_mut(), r - 1, k, b);
            // chase the bulge created at (row, col) down the band
            let (mut row, mut col) = (r + b, r - 1);
            while row < n && a[(row, col)] != Complex64::new(0.0, 0.0) {
                rotate_away(&mut a, q.as_mut(), row - 1, col, b);
                col = row - 1;
                row += b;
            }
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let sub: Vec<Complex64> = (0..n - 1).map(|i| a[(i + 1, i)]).collect();
    let off: Vec<f64> = sub.iter().map(|z| z.norm()).collect();
    let (vals, z) = tridiag_eigen(&diag, &off, vectors)?;
    if !vectors {
        return Some((vals, Vec::new()));
    }
    let q = q.expect("rotations accumulated");
    let mut gauge = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n - 1 {
        let s = sub[i];
        gauge[i + 1] = if s.norm() > 0.0 { gauge[i] * s / s.norm() } else { gauge[i] };
    }
    // A = Qᴴ T Q, so eigenvectors of A are Qᴴ (gauge ⊙ z)
    let mut vecs = vec![Complex64::new(0.0, 0.0); n * n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            w[i] = gauge[i] * z[j * n + i];
        }
        let out = &mut vecs[j * n..(j + 1) * n];
        for r in 0..n {
            let wr = w[r];
            if wr == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                out[i] += q[(r, i)].conj() * wr;
            }
        }
    }
    Some((vals, vecs))
}

/// Largest `|i − j|` with a nonzero entry.
pub fn bandwidth_of(m: &DMatrix<Complex64>) -> usize {
    let n = m.nrows();
    let mut b = 0;
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

/// Eigenvalues (ascending) of a Hermitian matrix, using the band solver when
/// the matrix is banded either as given or after the zigzag ordering
/// `0, n−1, 1, n−2, …` (which makes periodic chains banded).
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let direct = bandwidth_of(m);
    let order: Vec<usize> = (0..n).map(|i| if i % 2 == 0 { i / 2 } else { n - 1 - i / 2 }).collect();
    let zig = DMatrix::from_fn(n, n, |i, j| m[(order[i], order[j])]);
    let zb = bandwidth_of(&zig);
    let (mat, b) = if zb < direct { (&zig, zb) } else { (m, direct) };
    if 8 * b <= n {
        if let Some((mut vals, _)) = hermitian_band_eigen(mat, b, false) {
            vals.sort_by(f64::total_cmp);
            return vals;
        }
    }
    hermitian_eigen(m, false).0
}

/// Unitary rotation in the plane (p, p+1) that zeroes `a[(p+1, col)]`,
/// applied as a similarity on the rows and columns near the band.
fn rotate_away(a: &mut DMatrix<Complex64>, q: Option<&mut DMatrix<Complex64>>, p: usize, col: usize, b: usize) {
    let n = a.nrows();
    let x = a[(p, col)];
    let y = a[(p + 1, col)];
    let norm = x.norm().hypot(y.norm());
    let (c, s) = if x.norm() == 0.0 {
        (0.0, y.conj() / y.norm())
    } else {
        (x.norm() / norm, (x / x.norm()) * y.conj() / norm)
    };
    let lo = p.saturating_sub(2 * b + 2);
    let hi = (p + 2 * b + 4).min(n);
    // rows: G A
    for j in lo..hi {
        let (u, v) = (a[(p, j)], a[(p + 1, j)]);
        a[(p, j)] = u * c + s * v;
        a[(p + 1, j)] = -s.conj() * u + v * c;
    }
    // columns: (G A) Gᴴ
    for i in lo..hi {
        let (u, v) = (a[(i, p)], a[(i, p + 1)]);
        a[(i, p)] = u * c + v * s.conj();
        a[(i, p + 1)] = -u * s + v * c;
    }
    a[(p + 1, col)] = Complex64::new(0.0, 0.0);
    a[(col, p + 1)] = Complex64::new(0.0, 0.0);
    if let Some(q) = q {
        for j in 0..n {
            let (u, v) = (q[(p, j)], q[(p + 1, j)]);
            q[(p, j)] = u * c + s * v;
            q[(p + 1, j)] = -s.conj() * u + v * c;
        }
    }
}

/// Bessel functions `J_0(x) … J_kmax(x)` for integer order by Miller's
/// backward recurrence, normalised with `J_0 + 2 Σ J_2k = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let base = (kmax as f64).max(ax);
        (base + 30.0 + 10.0 * base.sqrt()) as usize + 2
    };
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=kmax {
        let mut v = vals[k] / norm;
        if x < 0.0 && k % 2 == 1 {
            v = -v;
        }
        out[k] = v;
    }
    out
}

/// Normalised Hermite functions `h_0(x) … h_{n-1}(x)` at a single point,
/// computed with a running exponent so that large orders at large |x| do not
/// underflow.
pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let mut log_scale = -0.5 * x * x;
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    let mut raw = vec![0.0; n];
    let mut scales = vec![0.0; n];
    raw[0] = cur;
    scales[0] = log_scale;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / kf).sqrt() * x * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e200 {
            prev *= 1e-200;
            cur *= 1e-200;
            log_scale += 200.0 * std::f64::consts::LN_10;
        }
        raw[k] = cur;
        scales[k] = log_scale;
    }
    for k in 0..n {
        out[k] = if raw[k] == 0.0 { 0.0 } else { raw[k] * scales[k].exp() };
    }
    out
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`; returns
/// `(slope, intercept, residual_rms)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Sum with Neumaier compensation, fixed order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in it {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}
