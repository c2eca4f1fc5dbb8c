//! Matrix-valued loops on the unit circle stored by their Fourier blocks.
//!
//! A [`BlockLoop`] is `phi(z) = sum_k phi_k z^k` with `n x n` complex blocks on a
//! contiguous range `k_min..=k_max`. Products and derivatives act on the
//! coefficients exactly; inverses, exponentials and other nonlinear maps are
//! taken pointwise on a [`CircleGrid`] and transformed back with a declared
//! tail tolerance.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hs_norm, identity, wrap_phase, CMat, ONE, ZERO};

/// Default truncation tolerance for coefficients recovered from grid samples.
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

/// Number of consecutive sub-tolerance blocks required before a tail is cut.
const TAIL_RUN: usize = 3;

/// Largest accepted phase increment of `det phi` between neighbouring nodes.
pub const MAX_PHASE_STEP: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Keep `k >= 0`.
    Plus,
    /// Keep `k < 0`.
    Minus,
}

/// Finitely supported matrix Fourier series.
#[derive(Clone, PartialEq)]
pub struct BlockLoop {
    n: usize,
    k_min: i64,
    coeffs: Vec<CMat>,
    tail_tol: f64,
}

impl fmt::Debug for BlockLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockLoop")
            .field("n", &self.n)
            .field("support", &(self.k_min..=self.k_max()))
            .field("tail_tol", &self.tail_tol)
            .finish()
    }
}

impl BlockLoop {
    pub fn new(n: usize, k_min: i64, coeffs: Vec<CMat>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("block size must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("a loop needs at least one coefficient".into()));
        }
        for c in &coeffs {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.nrows().max(c.ncols()) });
            }
        }
        Ok(Self { n, k_min, coeffs, tail_tol: 0.0 })
    }

    pub fn constant(m: CMat) -> Self {
        assert!(m.is_square(), "loop coefficients are square blocks");
        Self { n: m.nrows(), k_min: 0, coeffs: vec![m], tail_tol: 0.0 }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(identity(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::constant(linalg::zeros(n))
    }

    /// `m z^k`.
    pub fn monomial(k: i64, m: CMat) -> Self {
        assert!(m.is_square(), "loop coefficients are square blocks");
        Self { n: m.nrows(), k_min: k, coeffs: vec![m], tail_tol: 0.0 }
    }

    /// Scalar loop `sum_j values[j] z^(k_min + j)`.
    pub fn scalar(k_min: i64, values: &[Complex64]) -> Self {
        assert!(!values.is_empty());
        let coeffs = values.iter().map(|v| CMat::from_element(1, 1, *v)).collect();
        Self { n: 1, k_min, coeffs, tail_tol: 0.0 }
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.coeffs.len() as i64 - 1
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    /// Coefficient block at mode `k`, if inside the stored support.
    pub fn coeff(&self, k: i64) -> Option<&CMat> {
        if k < self.k_min || k > self.k_max() {
            None
        } else {
            Some(&self.coeffs[(k - self.k_min) as usize])
        }
    }

    pub fn coeff_or_zero(&self, k: i64) -> CMat {
        self.coeff(k).cloned().unwrap_or_else(|| linalg::zeros(self.n))
    }

    /// Largest nonnegative mode present (0 if none).
    pub fn positive_bandwidth(&self) -> usize {
        self.k_max().max(0) as usize
    }

    /// Largest `|k|` over negative modes present (0 if none).
    pub fn negative_bandwidth(&self) -> usize {
        (-self.k_min).max(0) as usize
    }

    pub fn bandwidth(&self) -> usize {
        self.positive_bandwidth().max(self.negative_bandwidth())
    }

    /// Remove exactly-zero blocks at both ends of the support.
    ///
    /// Blocks that are merely small are kept; an all-zero loop collapses to the
    /// zero constant.
    pub fn trim(mut self) -> Self {
        let is_zero = |m: &CMat| m.iter().all(|z| *z == ZERO);
        let first = self.coeffs.iter().position(|c| !is_zero(c));
        match first {
            None => Self::zero(self.n).with_tail_tol(self.tail_tol),
            Some(first) => {
                let last = self.coeffs.iter().rposition(|c| !is_zero(c)).unwrap();
                self.coeffs.truncate(last + 1);
                self.coeffs.drain(..first);
                self.k_min += first as i64;
                self
            }
        }
    }

    /// Drop every coefficient outside `lo..=hi` (no-op where the support is
    /// already inside).
    pub fn restrict(&self, lo: i64, hi: i64) -> Self {
        let lo = lo.max(self.k_min);
        let hi = hi.min(self.k_max());
        if lo > hi {
            return Self::zero(self.n).with_tail_tol(self.tail_tol);
        }
        let coeffs = (lo..=hi).map(|k| self.coeff_or_zero(k)).collect();
        Self { n: self.n, k_min: lo, coeffs, tail_tol: self.tail_tol }
    }

    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        if z == ZERO {
            if self.k_min < 0 {
                return Err(Error::ZeroArgument);
            }
            return Ok(if self.k_min == 0 { self.coeffs[0].clone() } else { linalg::zeros(self.n) });
        }
        // Horner in z over the stored block range, then shift by z^k_min.
        let mut acc = linalg::zeros(self.n);
        for c in self.coeffs.iter().rev() {
            acc *= z;
            acc += c;
        }
        Ok(acc * z.powi(self.k_min as i32))
    }

    /// Values at every node of `grid`.
    pub fn samples(&self, grid: &CircleGrid) -> Vec<CMat> {
        grid.nodes()
            .iter()
            .map(|z| self.eval(*z).expect("grid nodes are nonzero"))
            .collect()
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.check_dim(other)?;
        let lo = self.k_min.min(other.k_min);
        let hi = self.k_max().max(other.k_max());
        let coeffs = (lo..=hi)
            .map(|k| {
                let mut c = self.coeff_or_zero(k);
                if let Some(o) = other.coeff(k) {
                    c += o * Complex64::from(sign);
                }
                c
            })
            .collect();
        Ok(Self { n: self.n, k_min: lo, coeffs, tail_tol: self.tail_tol.max(other.tail_tol) })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            k_min: self.k_min,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            tail_tol: self.tail_tol,
        }
    }

    /// Multiply every block on the left by a constant matrix.
    pub fn left_mul_const(&self, m: &CMat) -> Self {
        Self {
            n: self.n,
            k_min: self.k_min,
            coeffs: self.coeffs.iter().map(|c| m * c).collect(),
            tail_tol: self.tail_tol,
        }
    }

    /// `z^shift * phi`.
    pub fn shift(&self, shift: i64) -> Self {
        Self { k_min: self.k_min + shift, ..self.clone() }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    /// Exact block convolution `(ab)_k = sum_j a_j b_{k-j}`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let len = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![linalg::zeros(self.n); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.iter().all(|z| *z == ZERO) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Ok(Self {
            n: self.n,
            k_min: self.k_min + other.k_min,
            coeffs,
            tail_tol: self.tail_tol.max(other.tail_tol),
        })
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.multiply(other)?.sub(&other.multiply(self)?)
    }

    /// Pointwise inverse transformed back to Fourier blocks.
    pub fn inverse(&self, grid: &CircleGrid, tail_tol: f64) -> Result<Self> {
        Ok(self.inverse_with_report(grid, tail_tol)?.0)
    }

    /// As [`inverse`](Self::inverse), also returning the discarded tail mass
    /// (sum of Hilbert-Schmidt norms of the dropped blocks).
    pub fn inverse_with_report(&self, grid: &CircleGrid, tail_tol: f64) -> Result<(Self, f64)> {
        let inv = invert_samples(&self.samples(grid))?;
        grid.from_samples(&inv, tail_tol)
    }

    /// `d/dz`: block `k * phi_k` moves to mode `k - 1`.
    pub fn z_derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from((self.k_min + i as i64) as f64))
            .collect();
        Self { n: self.n, k_min: self.k_min - 1, coeffs, tail_tol: self.tail_tol }
    }

    pub fn project(&self, sign: Projection) -> Self {
        match sign {
            Projection::Plus => {
                if self.k_max() < 0 {
                    Self::zero(self.n).with_tail_tol(self.tail_tol)
                } else {
                    self.restrict(0, self.k_max())
                }
            }
            Projection::Minus => {
                if self.k_min >= 0 {
                    Self::zero(self.n).with_tail_tol(self.tail_tol)
                } else {
                    self.restrict(self.k_min, -1)
                }
            }
        }
    }

    /// Winding number of `det phi` about the origin.
    pub fn winding_number(&self, grid: &CircleGrid) -> Result<i64> {
        let dets = det_samples(&self.samples(grid))?;
        Ok(unwrap_log_dets(&dets)?.winding)
    }

    /// A continuous branch of `log det phi` at the grid nodes, and the winding
    /// number of `det phi`.
    pub fn continuous_log_det(&self, grid: &CircleGrid) -> Result<(Vec<Complex64>, i64)> {
        let dets = det_samples(&self.samples(grid))?;
        let u = unwrap_log_dets(&dets)?;
        Ok((u.logs, u.winding))
    }

    /// `exp(mean log det phi)`, the per-row growth factor of `D_N`.
    pub fn geometric_mean(&self, grid: &CircleGrid) -> Result<Complex64> {
        Ok(self.log_geometric_mean(grid)?.exp())
    }

    /// Circle mean of a continuous branch of `log det phi`.
    pub fn log_geometric_mean(&self, grid: &CircleGrid) -> Result<Complex64> {
        let dets = det_samples(&self.samples(grid))?;
        let unwrapped = unwrap_log_dets(&dets)?;
        if unwrapped.winding != 0 {
            return Err(Error::NonzeroWinding(unwrapped.winding));
        }
        let sum: Complex64 = unwrapped.logs.iter().sum();
        Ok(sum / grid.m() as f64)
    }

    /// `(sum_k |k| ||phi_k||_HS^2)^(1/2)`.
    pub fn l_half_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = (self.k_min + i as i64).unsigned_abs() as f64;
                k * hs_norm(c).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Grid maximum of the pointwise Hilbert-Schmidt norm.
    pub fn sup_norm(&self, grid: &CircleGrid) -> f64 {
        self.samples(grid).iter().map(hs_norm).fold(0.0, f64::max)
    }

    /// Sum of block norms, an upper bound for [`sup_norm`](Self::sup_norm).
    pub fn wiener_norm(&self) -> f64 {
        self.coeffs.iter().map(hs_norm).sum()
    }
}

/// Uniform quadrature grid `z_m = exp(2 pi i m / M)` on the unit circle.
#[derive(Clone)]
pub struct CircleGrid {
    nodes: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CircleGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleGrid").field("m", &self.nodes.len()).finish()
    }
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.m() == other.m()
    }
}

impl CircleGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 nodes, got {m}")));
        }
        let nodes = (0..m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        Ok(Self { nodes, fft })
    }

    /// Smallest power of two `>= 4 * bandwidth + 16`.
    pub fn for_bandwidth(bandwidth: usize) -> Self {
        let m = (4 * bandwidth + 16).next_power_of_two();
        Self::new(m).expect("m >= 16")
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// Highest unambiguous mode `|k|` recoverable from samples.
    pub fn max_mode(&self) -> i64 {
        ((self.m() - 1) / 2) as i64
    }

    /// `oint Tr F(z) dz / (2 pi i)` by the trapezoidal rule, `(1/M) sum Tr F(z_m) z_m`.
    pub fn contour_trace_integral(&self, values: &[CMat]) -> Complex64 {
        assert_eq!(values.len(), self.m(), "one sample per node");
        let sum: Complex64 = values
            .iter()
            .zip(&self.nodes)
            .map(|(v, z)| linalg::trace(v) * z)
            .sum();
        sum / self.m() as f64
    }

    /// Raw discrete Fourier coefficients for modes `-max_mode..=max_mode`.
    pub fn fourier_coefficients(&self, samples: &[CMat]) -> BlockLoop {
        assert_eq!(samples.len(), self.m(), "one sample per node");
        let n = samples[0].nrows();
        let m = self.m();
        let kmax = self.max_mode();
        let mut coeffs = vec![linalg::zeros(n); (2 * kmax + 1) as usize];
        let mut buf = vec![ZERO; m];
        let scale = 1.0 / m as f64;
        for r in 0..n {
            for c in 0..n {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s[(r, c)];
                }
                self.fft.process(&mut buf);
                for k in -kmax..=kmax {
                    let idx = k.rem_euclid(m as i64) as usize;
                    coeffs[(k + kmax) as usize][(r, c)] = buf[idx] * scale;
                }
            }
        }
        BlockLoop { n, k_min: -kmax, coeffs, tail_tol: 0.0 }
    }

    /// Fourier blocks of sampled values, with both tails cut where they fall
    /// below `tail_tol`. Returns the loop and the discarded tail mass.
    ///
    /// A tail is accepted only if at least three consecutive blocks below
    /// `tail_tol` separate the retained support from the aliasing limit.
    pub fn from_samples(&self, samples: &[CMat], tail_tol: f64) -> Result<(BlockLoop, f64)> {
        self.from_samples_within(samples, tail_tol, i64::MIN, i64::MAX)
    }

    /// As [`from_samples`](Self::from_samples), additionally discarding modes
    /// outside `lo..=hi` (their mass is added to the report).
    pub fn from_samples_within(
        &self,
        samples: &[CMat],
        tail_tol: f64,
        lo: i64,
        hi: i64,
    ) -> Result<(BlockLoop, f64)> {
        let raw = self.fourier_coefficients(samples);
        let kmax = self.max_mode();
        let norms: Vec<f64> = raw.coeffs.iter().map(hs_norm).collect();
        let norm_at = |k: i64| norms[(k + kmax) as usize];
        let mut nyquist = 0.0;
        if self.m().is_multiple_of(2) {
            // The Nyquist mode is shared by +M/2 and -M/2; it belongs to the tail.
            let col: Vec<CMat> = samples
                .iter()
                .enumerate()
                .map(|(j, s)| if j % 2 == 0 { s.clone() } else { -s.clone() })
                .collect();
            nyquist = hs_norm(&col.iter().fold(linalg::zeros(raw.n), |a, b| a + b)) / self.m() as f64;
        }
        let top = (1..=kmax).rev().find(|&k| norm_at(k) >= tail_tol).unwrap_or(0);
        let bottom = (1..=kmax).rev().find(|&k| norm_at(-k) >= tail_tol).unwrap_or(0);
        let run = TAIL_RUN as i64;
        if top > kmax - run || bottom > kmax - run || nyquist >= tail_tol {
            let tail = [norm_at(kmax), norm_at(-kmax), nyquist]
                .into_iter()
                .fold(0.0, f64::max);
            return Err(Error::TailNotConverged { tol: tail_tol, tail });
        }
        let keep_lo = (-bottom).max(lo);
        let keep_hi = top.min(hi);
        let discarded: f64 = (-kmax..=kmax)
            .filter(|k| *k < keep_lo || *k > keep_hi)
            .map(norm_at)
            .sum::<f64>()
            + nyquist;
        let out = if keep_lo > keep_hi {
            BlockLoop::zero(raw.n)
        } else {
            raw.restrict(keep_lo, keep_hi)
        };
        Ok((out.with_tail_tol(tail_tol), discarded))
    }
}

/// Pointwise matrix inverses; fails on the first singular node.
pub fn invert_samples(samples: &[CMat]) -> Result<Vec<CMat>> {
    samples
        .iter()
        .enumerate()
        .map(|(m, s)| s.clone().try_inverse().ok_or(Error::SingularAtNode(m)))
        .collect()
}

fn det_samples(samples: &[CMat]) -> Result<Vec<Complex64>> {
    samples
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let ld = linalg::log_det(s);
            if linalg::is_singular_log(ld) {
                Err(Error::SingularAtNode(m))
            } else {
                Ok(ld)
            }
        })
        .collect()
}

struct UnwrappedLog {
    logs: Vec<Complex64>,
    winding: i64,
}

/// Continuous branch of `log det` along the grid by nearest-branch continuation.
fn unwrap_log_dets(logs: &[Complex64]) -> Result<UnwrappedLog> {
    let mut out = Vec::with_capacity(logs.len());
    let mut phase = logs[0].im;
    out.push(logs[0]);
    for m in 1..=logs.len() {
        let next = logs[m % logs.len()];
        let step = wrap_phase(next.im - logs[m - 1].im);
        if step.abs() > MAX_PHASE_STEP {
            return Err(Error::PhaseJumpTooLarge { node: m - 1, jump: step });
        }
        phase += step;
        if m < logs.len() {
            out.push(Complex64::new(next.re, phase));
        }
    }
    let total = phase - logs[0].im;
    let winding = (total / (2.0 * std::f64::consts::PI)).round() as i64;
    Ok(UnwrappedLog { logs: out, winding })
}

/// One record of the loop literal format: the block at mode `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffRecord {
    pub k: i64,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

/// Loop literal: a list of `{k, re, im}` blocks. Repeated `k` entries add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LoopLiteral(pub Vec<CoeffRecord>);

impl LoopLiteral {
    pub fn to_loop(&self) -> Result<BlockLoop> {
        let first = self
            .0
            .first()
            .ok_or_else(|| Error::InvalidInput("empty loop literal".into()))?;
        let n = first.re.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty coefficient matrix".into()));
        }
        let lo = self.0.iter().map(|r| r.k).min().unwrap();
        let hi = self.0.iter().map(|r| r.k).max().unwrap();
        let mut coeffs = vec![linalg::zeros(n); (hi - lo + 1) as usize];
        for rec in &self.0 {
            let block = record_matrix(rec, n)?;
            coeffs[(rec.k - lo) as usize] += block;
        }
        BlockLoop::new(n, lo, coeffs).map(BlockLoop::trim)
    }

    pub fn from_loop(l: &BlockLoop) -> Self {
        let n = l.n();
        let recs = l
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| CoeffRecord {
                k: l.k_min() + i as i64,
                re: (0..n).map(|r| (0..n).map(|s| c[(r, s)].re).collect()).collect(),
                im: (0..n).map(|r| (0..n).map(|s| c[(r, s)].im).collect()).collect(),
            })
            .collect();
        Self(recs)
    }
}

fn record_matrix(rec: &CoeffRecord, n: usize) -> Result<CMat> {
    let bad = |what: &str| Error::InvalidInput(format!("block k = {}: {what} is not {n}x{n}", rec.k));
    if rec.re.len() != n || rec.re.iter().any(|row| row.len() != n) {
        return Err(bad("re"));
    }
    let im_present = !rec.im.is_empty();
    if im_present && (rec.im.len() != n || rec.im.iter().any(|row| row.len() != n)) {
        return Err(bad("im"));
    }
    Ok(CMat::from_fn(n, n, |r, c| {
        let im = if im_present { rec.im[r][c] } else { 0.0 };
        Complex64::new(rec.re[r][c], im)
    }))
}

/// Constructors for the named symbol presets.
pub mod presets {
    use super::*;

    pub fn identity(n: usize) -> BlockLoop {
        BlockLoop::identity(n)
    }

    /// `Id * (1 + c / (z - depth))`, expanded as
    /// `1 + c sum_{m >= 0} depth^m z^{-m-1}` and truncated once the terms fall
    /// below `tail_tol`. Requires `|depth| < 1`.
    pub fn one_pole(n: usize, c: Complex64, depth: Complex64, tail_tol: f64) -> Result<BlockLoop> {
        if depth.norm() >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "one_pole depth must lie inside the unit disk, got |depth| = {}",
                depth.norm()
            )));
        }
        let mut values = vec![ONE];
        let mut term = c;
        loop {
            values.push(term);
            term *= depth;
            if term.norm() < tail_tol || term == ZERO {
                break;
            }
        }
        values.reverse();
        let k_min = -(values.len() as i64 - 1);
        let coeffs = values.iter().map(|v| linalg::identity(n) * *v).collect();
        Ok(BlockLoop::new(n, k_min, coeffs)?.with_tail_tol(tail_tol))
    }

    /// `exp(X(z))` with the matrix exponential taken node by node.
    pub fn exp_of(exponent: &BlockLoop, grid: &CircleGrid, tail_tol: f64) -> Result<BlockLoop> {
        let samples: Vec<CMat> = exponent.samples(grid).iter().map(linalg::expm).collect();
        Ok(grid.from_samples(&samples, tail_tol)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_plus(cst: f64) -> BlockLoop {
        BlockLoop::scalar(-1, &[c(cst, 0.0), ONE])
    }

    fn lambda2() -> BlockLoop {
        let l0 = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]);
        let l1 = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        BlockLoop::new(2, 0, vec![l0, l1]).unwrap()
    }

    fn close(a: &CMat, b: &CMat, tol: f64) -> bool {
        hs_norm(&(a - b)) <= tol
    }

    #[test]
    fn eval_examples() {
        let id = BlockLoop::identity(2);
        assert_eq!(id.eval(c(0.7, 0.1)).unwrap(), identity(2));
        let v = one_plus(0.3).eval(ONE).unwrap();
        assert!((v[(0, 0)] - c(1.3, 0.0)).norm() < 1e-15);
        let l = lambda2().eval(c(4.0, 0.0)).unwrap();
        assert_eq!(l, CMat::from_row_slice(2, 2, &[ZERO, c(4.0, 0.0), ONE, ZERO]));
    }

    #[test]
    fn eval_at_zero_needs_no_negative_modes() {
        assert_eq!(one_plus(0.3).eval(ZERO), Err(Error::ZeroArgument));
        assert_eq!(lambda2().eval(ZERO).unwrap()[(1, 0)], ONE);
    }

    #[test]
    fn multiply_examples() {
        let phi = one_plus(0.3);
        assert_eq!(BlockLoop::identity(1).multiply(&phi).unwrap(), phi);
        let prod = one_plus(0.3).multiply(&one_plus(-0.3)).unwrap().trim();
        assert_eq!(prod.k_min(), -2);
        assert!((prod.coeff(-2).unwrap()[(0, 0)] - c(-0.09, 0.0)).norm() < 1e-16);
        assert_eq!(prod.coeff(-1).unwrap()[(0, 0)], ZERO);
        let sq = lambda2().multiply(&lambda2()).unwrap().trim();
        assert_eq!(sq, BlockLoop::monomial(1, identity(2)));
    }

    #[test]
    fn multiply_rejects_mismatched_blocks() {
        assert!(matches!(
            BlockLoop::identity(1).multiply(&BlockLoop::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_examples() {
        let grid = CircleGrid::new(64).unwrap();
        let inv = BlockLoop::identity(2).inverse(&grid, 1e-14).unwrap();
        assert_eq!(inv.k_min(), 0);
        assert_eq!(inv.k_max(), 0);
        assert!(close(&inv.coeffs()[0], &identity(2), 1e-15));

        let inv = one_plus(0.3).inverse(&grid, 1e-14).unwrap();
        assert_eq!(inv.k_max(), 0);
        for m in 0..=10 {
            let expect = (-0.3f64).powi(m);
            assert!((inv.coeff(-(m as i64)).unwrap()[(0, 0)] - c(expect, 0.0)).norm() < 1e-15);
        }
        assert!((inv.coeff(-3).unwrap()[(0, 0)].re + 0.027).abs() < 1e-15);

        let inv = lambda2().inverse(&grid, 1e-14).unwrap();
        assert!(close(&inv.coeff_or_zero(0), &CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]), 1e-15));
        assert!(close(&inv.coeff_or_zero(-1), &CMat::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]), 1e-15));
        assert_eq!(inv.k_min(), -1);
        assert_eq!(inv.k_max(), 0);
    }

    #[test]
    fn inverse_reports_unresolved_tail() {
        // 1 + 0.95/z has a slowly decaying inverse that a 32-point grid cannot hold.
        let grid = CircleGrid::new(32).unwrap();
        assert!(matches!(
            one_plus(0.95).inverse(&grid, 1e-14),
            Err(Error::TailNotConverged { .. })
        ));
    }

    #[test]
    fn inverse_detects_singular_node() {
        let grid = CircleGrid::new(8).unwrap();
        // 1 - z vanishes exactly at node 0.
        let phi = BlockLoop::scalar(0, &[ONE, -ONE]);
        assert_eq!(phi.inverse(&grid, 1e-14), Err(Error::SingularAtNode(0)));
    }

    #[test]
    fn derivative_examples() {
        let d = BlockLoop::constant(identity(2)).z_derivative().trim();
        assert_eq!(d, BlockLoop::zero(2));
        let d = one_plus(0.3).z_derivative().trim();
        assert_eq!(d.k_min(), -2);
        assert_eq!(d.k_max(), -2);
        assert!((d.coeffs()[0][(0, 0)] - c(-0.3, 0.0)).norm() < 1e-16);
        let d = lambda2().z_derivative().trim();
        assert_eq!(d, BlockLoop::constant(CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])));
    }

    #[test]
    fn projection_examples() {
        let phi = one_plus(0.3);
        assert_eq!(phi.project(Projection::Plus).trim(), BlockLoop::identity(1));
        assert_eq!(phi.project(Projection::Minus).trim(), BlockLoop::scalar(-1, &[c(0.3, 0.0)]));
        assert_eq!(BlockLoop::identity(2).project(Projection::Minus).trim(), BlockLoop::zero(2));
    }

    #[test]
    fn winding_examples() {
        let grid = CircleGrid::new(64).unwrap();
        assert_eq!(BlockLoop::identity(3).winding_number(&grid).unwrap(), 0);
        assert_eq!(lambda2().winding_number(&grid).unwrap(), 1);
        assert_eq!(one_plus(0.3).winding_number(&grid).unwrap(), 0);
        let z3 = BlockLoop::scalar(-3, &[ONE]);
        assert_eq!(z3.winding_number(&grid).unwrap(), -3);
    }

    #[test]
    fn coarse_grid_refuses_to_guess() {
        let grid = CircleGrid::new(4).unwrap();
        let z3 = BlockLoop::scalar(3, &[ONE]);
        assert!(matches!(z3.winding_number(&grid), Err(Error::PhaseJumpTooLarge { .. })));
    }

    #[test]
    fn geometric_mean_examples() {
        let grid = CircleGrid::new(64).unwrap();
        assert!((BlockLoop::identity(2).geometric_mean(&grid).unwrap() - ONE).norm() < 1e-15);
        let two = BlockLoop::constant(identity(2) * c(2.0, 0.0));
        assert!((two.geometric_mean(&grid).unwrap() - c(4.0, 0.0)).norm() < 1e-14);
        assert!((one_plus(0.3).geometric_mean(&grid).unwrap() - ONE).norm() < 1e-15);
        assert_eq!(lambda2().geometric_mean(&grid), Err(Error::NonzeroWinding(1)));
    }

    #[test]
    fn contour_integral_examples() {
        let grid = CircleGrid::new(64).unwrap();
        let ones = vec![identity(1); 64];
        assert!(grid.contour_trace_integral(&ones).norm() < 1e-16);
        let inv_z: Vec<CMat> = grid.nodes().iter().map(|z| CMat::from_element(1, 1, ONE / z)).collect();
        assert!((grid.contour_trace_integral(&inv_z) - ONE).norm() < 1e-15);
        // z * (-0.3 z^-2) / (1 + 0.3/z) has residue -0.3 at the origin.
        let f: Vec<CMat> = grid
            .nodes()
            .iter()
            .map(|z| CMat::from_element(1, 1, z * c(-0.3, 0.0) / (z * z) / (ONE + c(0.3, 0.0) / z)))
            .collect();
        assert!((grid.contour_trace_integral(&f) - c(-0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn l_half_norm_examples() {
        assert_eq!(BlockLoop::identity(2).l_half_norm(), 0.0);
        assert!((one_plus(0.3).l_half_norm() - 0.3).abs() < 1e-16);
        let sym = BlockLoop::scalar(-1, &[c(0.5, 0.0), ZERO, c(0.5, 0.0)]);
        assert!((sym.l_half_norm() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn trim_keeps_small_but_nonzero_margins() {
        let phi = BlockLoop::scalar(-2, &[c(1e-300, 0.0), ZERO, ONE, ZERO]).trim();
        assert_eq!(phi.k_min(), -2);
        assert_eq!(phi.k_max(), 0);
    }

    #[test]
    fn literal_round_trip() {
        let json = r#"[{"k": 0, "re": [[1.0]], "im": [[0.0]]}, {"k": -1, "re": [[0.3]]}]"#;
        let lit: LoopLiteral = serde_json::from_str(json).unwrap();
        let l = lit.to_loop().unwrap();
        assert_eq!(l, one_plus(0.3));
        assert_eq!(LoopLiteral::from_loop(&l).to_loop().unwrap(), l);
        let bad = r#"[{"k": 0, "re": [[1.0]], "extra": 1}]"#;
        assert!(serde_json::from_str::<LoopLiteral>(bad).is_err());
    }

    #[test]
    fn one_pole_preset_expands_geometric_series() {
        let g = presets::one_pole(1, c(0.5, 0.0), c(0.4, 0.0), 1e-14).unwrap();
        assert_eq!(g.coeff(0).unwrap()[(0, 0)], ONE);
        assert!((g.coeff(-3).unwrap()[(0, 0)] - c(0.5 * 0.16, 0.0)).norm() < 1e-16);
        let z = c(2.0, 1.0);
        let exact = ONE + c(0.5, 0.0) / (z - c(0.4, 0.0));
        assert!((g.eval(z).unwrap()[(0, 0)] - exact).norm() < 1e-14);
        assert!(presets::one_pole(1, ONE, c(1.0, 0.0), 1e-14).is_err());
    }

    #[test]
    fn exp_of_scalar_matches_bessel_structure() {
        // exp(0.5 z + 0.5/z) has symmetric coefficients I_k(1).
        let grid = CircleGrid::new(64).unwrap();
        let x = BlockLoop::scalar(-1, &[c(0.5, 0.0), ZERO, c(0.5, 0.0)]);
        let e = presets::exp_of(&x, &grid, 1e-15).unwrap();
        let i0 = 1.266_065_877_752_008_4;
        let i1 = 0.565_159_103_992_485_0;
        assert!((e.coeff(0).unwrap()[(0, 0)].re - i0).abs() < 1e-14);
        assert!((e.coeff(1).unwrap()[(0, 0)].re - i1).abs() < 1e-14);
        assert!((e.coeff(-1).unwrap()[(0, 0)].re - i1).abs() < 1e-14);
    }
}
