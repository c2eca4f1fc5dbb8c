//! Finite block Toeplitz determinants, block Hankel operators and the
//! Szegő-Widom limit `D_inf = lim D_N / G^(N+1) = det(Id - H(phi) H~(phi^-1))`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, identity, wrap_log, CMat, ZERO};
use crate::loops::{BlockLoop, CircleGrid, DEFAULT_TAIL_TOL};

/// Largest Hankel truncation (in blocks) tried before giving up.
const MAX_HANKEL_BLOCKS: usize = 2048;

/// Relative change below which a sequence difference is treated as rounding.
const NOISE_FLOOR: f64 = 1e-13;

/// `T_N(phi)`: the `(N+1) x (N+1)` block matrix with block `(j, k) = phi_{j-k}`.
#[derive(Debug, Clone)]
pub struct BlockToeplitzFinite {
    pub symbol: BlockLoop,
    pub size: usize,
    pub data: CMat,
}

/// Truncations of `H(phi)` (blocks `phi_{j+k+1}`) and `H~(phi)` (blocks
/// `phi_{-j-k-1}`) to `m_h x m_h` blocks.
#[derive(Debug, Clone)]
pub struct HankelTruncation {
    pub symbol: BlockLoop,
    pub m_h: usize,
    pub h: CMat,
    pub h_tilde: CMat,
}

impl HankelTruncation {
    pub fn new(symbol: &BlockLoop, m_h: usize) -> Self {
        Self {
            symbol: symbol.clone(),
            m_h,
            h: hankel(symbol, m_h, 1),
            h_tilde: hankel(symbol, m_h, -1),
        }
    }
}

/// Estimate of `log D_inf` from finite sections.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    /// Extrapolated `log D_inf`.
    pub value: Complex64,
    /// Sizes `N` that produced a finite determinant.
    pub schedule: Vec<usize>,
    /// `log D_N` along the schedule.
    pub log_dn: Vec<Complex64>,
    /// `log D_N - (N+1) log G`, phase reduced to (-pi, pi].
    pub normalized_sequence: Vec<Complex64>,
    /// Magnitude of the last extrapolation correction.
    pub extrapolated_error: f64,
}

/// Dense `rows x cols` block matrix with block `(j, k) = phi_{j-k}`.
pub fn toeplitz_blocks(phi: &BlockLoop, rows: usize, cols: usize) -> CMat {
    let n = phi.n();
    let mut out = CMat::zeros(rows * n, cols * n);
    for j in 0..rows {
        for k in 0..cols {
            if let Some(b) = phi.coeff(j as i64 - k as i64) {
                out.view_mut((j * n, k * n), (n, n)).copy_from(b);
            }
        }
    }
    out
}

/// Hankel truncation: `sign = 1` gives `H(phi)`, `sign = -1` gives `H~(phi)`.
fn hankel(phi: &BlockLoop, size: usize, sign: i64) -> CMat {
    let n = phi.n();
    let mut out = CMat::zeros(size * n, size * n);
    for j in 0..size {
        for k in 0..size {
            if let Some(b) = phi.coeff(sign * (j + k + 1) as i64) {
                out.view_mut((j * n, k * n), (n, n)).copy_from(b);
            }
        }
    }
    out
}

pub fn assemble_toeplitz(phi: &BlockLoop, size: usize) -> BlockToeplitzFinite {
    BlockToeplitzFinite { symbol: phi.clone(), size, data: toeplitz_blocks(phi, size + 1, size + 1) }
}

/// `log D_N(phi)`; a singular section yields `-inf` in the real part.
pub fn log_det_dn(phi: &BlockLoop, size: usize) -> Complex64 {
    linalg::log_det(&assemble_toeplitz(phi, size).data)
}

/// Max-norm discrepancy of `T(a)T(b) = T(ab) - H(a)H~(b)` on the rows where
/// the finite sections of both sides are exact.
///
/// Both sides are applied to the block basis vectors `0..=N`; rows
/// `0..=N - (bw(a) + bw(b))` are compared.
pub fn identity_residual(a: &BlockLoop, b: &BlockLoop, size: usize) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    let bandwidth = a.bandwidth() + b.bandwidth();
    if size < bandwidth {
        return Err(Error::WindowEmpty { n: size, bandwidth });
    }
    let k = size + 1;
    let n = a.n();
    let lhs = toeplitz_blocks(a, k, k) * toeplitz_blocks(b, k, k);
    let ab = a.multiply(b)?;
    let rhs = toeplitz_blocks(&ab, k, k) - hankel(a, k, 1) * hankel(b, k, -1);
    let rows = (size - bandwidth + 1) * n;
    let diff = lhs.rows(0, rows) - rhs.rows(0, rows);
    Ok(diff.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// `log det(Id - H(phi) H~(psi))` with both Hankels cut to `m_h` blocks.
///
/// With `swapped` the product is taken as `H~(psi) H(phi)`, which has the
/// same Fredholm determinant.
pub fn hankel_product_log_det(phi: &BlockLoop, psi: &BlockLoop, m_h: usize, swapped: bool) -> Complex64 {
    let h = hankel(phi, m_h, 1);
    let ht = hankel(psi, m_h, -1);
    let prod = if swapped { &ht * &h } else { &h * &ht };
    linalg::log_det(&(identity(prod.nrows()) - prod))
}

/// Result of a Fredholm-determinant evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FredholmDet {
    /// `log D_inf(phi)`, phase reduced to (-pi, pi]; `-inf` when the
    /// determinant vanishes.
    pub log_value: Complex64,
    /// Hankel truncation (blocks) that produced `log_value`.
    pub m_h: usize,
    /// Change against the truncation `m_h - 8`.
    pub last_change: f64,
    /// Tail mass discarded when forming `phi^-1`.
    pub inverse_tail: f64,
}

/// `log D_inf(phi) = log det(Id - H(phi) H~(phi^-1))`, starting from `m_h`
/// blocks and doubling until adding eight blocks changes the value by at most
/// `1e-10`.
pub fn fredholm_det(phi: &BlockLoop, grid: &CircleGrid, m_h: usize) -> Result<Complex64> {
    Ok(fredholm_det_report(phi, grid, m_h, DEFAULT_TAIL_TOL)?.log_value)
}

/// Start size for the Hankel truncation: positive bandwidth of `phi` plus
/// negative bandwidth of `phi^-1` plus eight.
pub fn default_hankel_size(phi: &BlockLoop, phi_inv: &BlockLoop) -> usize {
    phi.positive_bandwidth() + phi_inv.negative_bandwidth() + 8
}

/// [`fredholm_det`] with the starting size chosen by [`default_hankel_size`].
pub fn fredholm_det_auto(phi: &BlockLoop, grid: &CircleGrid, tail_tol: f64) -> Result<FredholmDet> {
    if phi.k_max() <= 0 {
        return Ok(trivial(0.0));
    }
    let (inv, tail) = phi.inverse_with_report(grid, tail_tol)?;
    let m_h = default_hankel_size(phi, &inv);
    fredholm_with_inverse(phi, &inv, m_h, tail)
}

pub fn fredholm_det_report(phi: &BlockLoop, grid: &CircleGrid, m_h: usize, tail_tol: f64) -> Result<FredholmDet> {
    if phi.k_max() <= 0 {
        return Ok(trivial(0.0));
    }
    let (inv, tail) = phi.inverse_with_report(grid, tail_tol)?;
    fredholm_with_inverse(phi, &inv, m_h, tail)
}

fn fredholm_with_inverse(phi: &BlockLoop, inv: &BlockLoop, m_h: usize, inverse_tail: f64) -> Result<FredholmDet> {
    // Only H(phi) with nonzero blocks matters: nothing to do without positive modes.
    if phi.k_max() <= 0 || inv.k_min() >= 0 {
        return Ok(trivial(inverse_tail));
    }
    let mut size = m_h.max(1);
    loop {
        let base = hankel_product_log_det(phi, inv, size, false);
        let more = hankel_product_log_det(phi, inv, size + 8, false);
        let change = log_distance(base, more);
        if change <= 1e-10 {
            return Ok(FredholmDet { log_value: more, m_h: size + 8, last_change: change, inverse_tail });
        }
        if size >= MAX_HANKEL_BLOCKS {
            return Err(Error::NotConverged { stage: "fredholm_det", size });
        }
        size *= 2;
    }
}

/// `H(phi) = 0` or `H~(phi^-1) = 0`: the determinant is exactly one.
fn trivial(inverse_tail: f64) -> FredholmDet {
    FredholmDet { log_value: ZERO, m_h: 0, last_change: 0.0, inverse_tail }
}

/// Distance between two log-determinants, with phases compared modulo 2 pi
/// and two vanishing determinants treated as equal.
pub fn log_distance(a: Complex64, b: Complex64) -> f64 {
    match (linalg::is_singular_log(a), linalg::is_singular_log(b)) {
        (true, true) => 0.0,
        (false, false) => wrap_log(a - b).norm(),
        _ => f64::INFINITY,
    }
}

/// Szegő-Widom limit from `log D_N - (N+1) log G` along `schedule`,
/// extrapolated with the geometric model `L + C rho^N` on the last three
/// finite entries.
pub fn szego_widom_limit(phi: &BlockLoop, schedule: &[usize], grid: &CircleGrid) -> Result<LimitEstimate> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("schedule must be strictly increasing".into()));
    }
    let log_g = phi.log_geometric_mean(grid)?;
    let logs: Vec<Complex64> = schedule.par_iter().map(|&size| log_det_dn(phi, size)).collect();

    let mut kept = Vec::new();
    let mut log_dn = Vec::new();
    let mut normalized = Vec::new();
    for (&size, &ld) in schedule.iter().zip(&logs) {
        if linalg::is_singular_log(ld) {
            log::warn!("D_N vanishes at N = {size}; skipped");
            continue;
        }
        kept.push(size);
        log_dn.push(ld);
        normalized.push(wrap_log(ld - log_g * (size as f64 + 1.0)));
    }
    if kept.is_empty() {
        return Err(Error::NotConverged { stage: "szego_widom_limit", size: schedule.last().copied().unwrap_or(0) });
    }
    let (value, extrapolated_error) = extrapolate_geometric(&kept, &normalized)?;
    Ok(LimitEstimate { value, schedule: kept, log_dn, normalized_sequence: normalized, extrapolated_error })
}

/// Fit `x_N = L + C rho^N` through the last three points and return
/// `(L, |L - x_last|)`. Differences at rounding level short-circuit to the last
/// value.
pub fn extrapolate_geometric(ns: &[usize], xs: &[Complex64]) -> Result<(Complex64, f64)> {
    let len = xs.len();
    let last = xs[len - 1];
    if len == 1 {
        return Ok((last, 0.0));
    }
    let floor = NOISE_FLOOR * last.norm().max(1.0);
    let d2 = wrap_log(xs[len - 1] - xs[len - 2]);
    if len == 2 || d2.norm() <= floor {
        return Ok((last, d2.norm()));
    }
    let d1 = wrap_log(xs[len - 2] - xs[len - 3]);
    let q = d2.norm() / d1.norm();
    if q >= 1.0 {
        return Err(Error::DivergenceDetected { ratio: q });
    }
    let (n1, n2, n3) = (ns[len - 3] as f64, ns[len - 2] as f64, ns[len - 1] as f64);
    // f(rho) = u (1 - a) / (1 - u), u = rho^(n2-n1), a = rho^(n3-n2); increasing on (0, 1).
    let f = |log_rho: f64| {
        let u = (log_rho * (n2 - n1)).exp();
        let a = (log_rho * (n3 - n2)).exp();
        u * (1.0 - a) / (1.0 - u)
    };
    let limit = (n3 - n2) / (n2 - n1);
    if q >= limit {
        // Too slow for the model; report the raw step as the error.
        return Ok((last, d2.norm()));
    }
    let (mut lo, mut hi) = (-745.0_f64 / (n2 - n1).max(1.0), -1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = (0.5 * (lo + hi) * (n3 - n2)).exp();
    let correction = d2 * (a / (1.0 - a));
    Ok((last + correction, correction.norm()))
}

/// Classical strong Szegő limit for scalar symbols:
/// `log D_inf = sum_{k >= 1} k s_k s_{-k}` with `s_k` the Fourier coefficients
/// of a continuous `log phi`.
pub fn strong_szego_scalar(phi: &BlockLoop, grid: &CircleGrid) -> Result<Complex64> {
    if phi.n() != 1 {
        return Err(Error::NotScalar(phi.n()));
    }
    let (logs, winding) = phi.continuous_log_det(grid)?;
    if winding != 0 {
        return Err(Error::NonzeroWinding(winding));
    }
    let samples: Vec<CMat> = logs.iter().map(|l| CMat::from_element(1, 1, *l)).collect();
    let s = grid.fourier_coefficients(&samples);
    let mut sum = ZERO;
    let mut small = 0;
    for k in 1..=grid.max_mode() {
        let term = s.coeff(k).unwrap()[(0, 0)] * s.coeff(-k).unwrap()[(0, 0)] * k as f64;
        sum += term;
        if term.norm() < 1e-16 {
            small += 1;
            if small == 3 {
                break;
            }
        } else {
            small = 0;
        }
    }
    Ok(sum)
}
