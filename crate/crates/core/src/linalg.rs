//! Small dense complex linear-algebra helpers shared by the loop, Toeplitz and
//! factorization code.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().copied().sum()
}

/// Map an angle onto (-pi, pi].
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Logarithm of a determinant with the phase reduced to (-pi, pi].
///
/// A singular matrix yields a real part of `-inf`.
pub fn wrap_log(z: Complex64) -> Complex64 {
    if !z.re.is_finite() {
        return z;
    }
    Complex64::new(z.re, wrap_phase(z.im))
}

pub fn is_singular_log(z: Complex64) -> bool {
    z.re == f64::NEG_INFINITY
}

/// `log det(a)` by LU with partial pivoting.
///
/// The modulus is accumulated as a sum of `ln|u_ii|` and the phase pivot by
/// pivot, so matrices whose determinant over- or underflows are handled. The
/// returned phase is reduced to (-pi, pi]. An exactly vanishing pivot gives
/// `-inf + 0i`.
pub fn log_det(a: &CMat) -> Complex64 {
    assert!(a.is_square(), "log_det needs a square matrix");
    let n = a.nrows();
    let mut lu = a.clone();
    let mut log_mod = 0.0;
    let mut phase = 0.0;
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].norm();
        for i in k + 1..n {
            let v = lu[(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        if p != k {
            lu.swap_rows(p, k);
            phase += PI;
        }
        let pivot = lu[(k, k)];
        log_mod += best.ln();
        phase += pivot.arg();
        let inv = ONE / pivot;
        for i in k + 1..n {
            let f = lu[(i, k)] * inv;
            if f == ZERO {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= f * u;
            }
        }
    }
    Complex64::new(log_mod, wrap_phase(phase))
}

/// Matrix exponential (scaling and squaring with Pade approximants).
pub fn expm(a: &CMat) -> CMat {
    if a.iter().all(|z| *z == ZERO) {
        return identity(a.nrows());
    }
    a.exp()
}

/// Least-squares solution of `a x = b` via SVD, together with the 2-norm
/// condition estimate `sigma_max / sigma_min` of `a`.
pub fn lstsq(a: &CMat, b: &CMat) -> (CMat, f64) {
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let eps = smax * f64::EPSILON * (a.nrows().max(a.ncols()) as f64);
    let x = svd.solve(b, eps).expect("SVD with both factors computed");
    (x, cond)
}
