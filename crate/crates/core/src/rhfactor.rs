//! Riemann-Hilbert (Birkhoff) factorization `Gamma_+ = Gamma_- J` on the unit
//! circle with `Gamma_-(inf) = Id`, and the quantities built from it: the
//! Malgrange form / Jimbo-Miwa-Ueno log-derivative and Widom's formula for
//! `d log D_inf`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, hs_norm, identity, CMat};
use crate::loops::{invert_samples, BlockLoop, CircleGrid, Projection, DEFAULT_TAIL_TOL};

/// Deformation parameters: flow index to (possibly complex) time.
pub type Times = BTreeMap<u32, Complex64>;

/// Condition estimate above which the Galerkin system is declared singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Coefficient size below which positive modes of `J` do not widen the
/// Galerkin system.
const MARGIN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhOptions {
    /// Truncation depth `P` of `Gamma_- = Id + sum_{k=1..P} c_k z^-k`.
    pub depth: usize,
    /// Largest accepted residual `sum_{k<0} ||(Gamma_- J)_k||`.
    pub residual_tol: f64,
    pub max_condition: f64,
}

impl Default for RhOptions {
    fn default() -> Self {
        Self { depth: 32, residual_tol: 1e-9, max_condition: MAX_CONDITION }
    }
}

impl RhOptions {
    pub fn with_depth(depth: usize) -> Self {
        Self { depth, ..Self::default() }
    }
}

/// Solution of the factorization problem for one jump matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RhSolution {
    /// Supported on `-P..=0`, constant term exactly `Id`.
    pub gamma_minus: BlockLoop,
    /// `p_+(Gamma_- J)`.
    pub gamma_plus: BlockLoop,
    /// `sum_{k<0} ||(Gamma_- J)_k||_HS`, which bounds the grid max-norm of
    /// `Gamma_- J - Gamma_+`.
    pub residual: f64,
    pub depth: usize,
    /// 2-norm condition estimate of the least-squares system.
    pub condition: f64,
}

/// The two factorizations `J^-1 = T_+ T_- = S_- S_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFactorization {
    pub t_plus: BlockLoop,
    pub t_minus: BlockLoop,
    pub s_minus: BlockLoop,
    pub s_plus: BlockLoop,
    /// Grid max-norm of `T_+ T_- - J^-1`.
    pub residual_t: f64,
    /// Grid max-norm of `S_- S_+ - J^-1`.
    pub residual_s: f64,
}

fn effective_positive_bandwidth(j: &BlockLoop) -> usize {
    (1..=j.k_max().max(0))
        .rev()
        .find(|&k| j.coeff(k).map(hs_norm).unwrap_or(0.0) >= MARGIN_TOL)
        .unwrap_or(0) as usize
}

/// Solve `p_-(Gamma_- J) = 0` for `Gamma_- = Id + sum_{k=1..P} c_k z^-k`.
///
/// The equations for modes `-1..=-(P + m)`, with `m` the positive bandwidth of
/// `J` above `1e-14`, are solved in the least-squares sense.
pub fn birkhoff_factorize(j: &BlockLoop, depth: usize, grid: &CircleGrid) -> Result<RhSolution> {
    birkhoff_factorize_with(j, grid, &RhOptions::with_depth(depth))
}

pub fn birkhoff_factorize_with(j: &BlockLoop, grid: &CircleGrid, opts: &RhOptions) -> Result<RhSolution> {
    let depth = opts.depth;
    if depth == 0 {
        return Err(Error::InvalidInput("factorization depth must be positive".into()));
    }
    let winding = j.winding_number(grid)?;
    if winding != 0 {
        return Err(Error::NonzeroWinding(winding));
    }
    let n = j.n();
    let rows = depth + effective_positive_bandwidth(j);

    // Transposed block system: sum_k J_{k-r}^T c_k^T = -J_{-r}^T, r = 1..=rows.
    let mut a = CMat::zeros(rows * n, depth * n);
    let mut b = CMat::zeros(rows * n, n);
    for r in 1..=rows {
        let row0 = (r - 1) * n;
        for k in 1..=depth {
            if let Some(blk) = j.coeff(k as i64 - r as i64) {
                a.view_mut((row0, (k - 1) * n), (n, n)).copy_from(&blk.transpose());
            }
        }
        if let Some(blk) = j.coeff(-(r as i64)) {
            b.view_mut((row0, 0), (n, n)).copy_from(&(-blk.transpose()));
        }
    }
    let (x, condition) = linalg::lstsq(&a, &b);
    if !(condition <= opts.max_condition) {
        return Err(Error::SingularSystem { cond: condition });
    }

    // Gamma_- blocks ordered from z^-P up to z^0.
    let mut coeffs: Vec<CMat> = (1..=depth)
        .rev()
        .map(|k| x.view(((k - 1) * n, 0), (n, n)).transpose())
        .collect();
    coeffs.push(identity(n));
    let gamma_minus = BlockLoop::new(n, -(depth as i64), coeffs)?.with_tail_tol(j.tail_tol());

    let product = gamma_minus.multiply(j)?;
    let residual = product.project(Projection::Minus).wiener_norm();
    let gamma_plus = product.project(Projection::Plus);
    if residual > opts.residual_tol {
        return Err(Error::NotConverged { stage: "birkhoff_factorize", size: depth });
    }
    Ok(RhSolution { gamma_minus, gamma_plus, residual, depth, condition })
}

/// `T_+ = Gamma_+^-1`, `T_- = Gamma_-`, `S_- = gamma^-1`, `S_+ = g` for a jump
/// `J = g^-1 gamma`.
pub fn dual_factorize(
    j: &BlockLoop,
    sol: &RhSolution,
    gamma: &BlockLoop,
    g: &BlockLoop,
    grid: &CircleGrid,
) -> Result<DualFactorization> {
    let fail = |e: Error| Error::InverseFailed(e.to_string());
    let gp_inv = invert_samples(&sol.gamma_plus.samples(grid)).map_err(fail)?;
    let (t_plus, _) = grid.from_samples_within(&gp_inv, DEFAULT_TAIL_TOL, 0, i64::MAX).map_err(fail)?;
    let gamma_inv = invert_samples(&gamma.samples(grid)).map_err(fail)?;
    let (s_minus, _) = grid.from_samples_within(&gamma_inv, DEFAULT_TAIL_TOL, i64::MIN, 0).map_err(fail)?;
    let t_minus = sol.gamma_minus.clone();
    let s_plus = g.clone();

    let j_inv = invert_samples(&j.samples(grid)).map_err(fail)?;
    let residual_t = product_residual(&t_plus, &t_minus, &j_inv, grid);
    let residual_s = product_residual(&s_minus, &s_plus, &j_inv, grid);
    let tol = (10.0 * sol.residual).max(1e-11);
    if residual_t > tol || residual_s > tol {
        return Err(Error::InverseFailed(format!(
            "dual factorization residuals {residual_t:e}, {residual_s:e} exceed {tol:e}"
        )));
    }
    Ok(DualFactorization { t_plus, t_minus, s_minus, s_plus, residual_t, residual_s })
}

fn product_residual(a: &BlockLoop, b: &BlockLoop, target: &[CMat], grid: &CircleGrid) -> f64 {
    a.samples(grid)
        .iter()
        .zip(b.samples(grid))
        .zip(target)
        .map(|((x, y), t)| hs_norm(&(x * y - t)))
        .fold(0.0, f64::max)
}

/// `oint Tr(Gamma_-^-1 dGamma_-/dz . dJ/dt . J^-1) dz/(2 pi i)`, the
/// Malgrange form on `d/dt`, i.e. `d/dt log tau_JMU`.
pub fn malgrange_jmu_logderiv(sol: &RhSolution, j: &BlockLoop, dj_dt: &BlockLoop, grid: &CircleGrid) -> Result<Complex64> {
    let fail = |e: Error| Error::InverseFailed(e.to_string());
    let gm_inv = invert_samples(&sol.gamma_minus.samples(grid)).map_err(fail)?;
    let j_inv = invert_samples(&j.samples(grid)).map_err(fail)?;
    let dgm = sol.gamma_minus.z_derivative().samples(grid);
    let dj = dj_dt.samples(grid);
    let integrand: Vec<CMat> = (0..grid.m())
        .map(|m| &gm_inv[m] * &dgm[m] * &dj[m] * &j_inv[m])
        .collect();
    Ok(grid.contour_trace_integral(&integrand))
}

/// Widom's formula
/// `d/dt log D_inf(J) = -oint Tr[((T_+)' T_- - (S_-)' S_+) dJ/dt] dz/(2 pi i)`.
pub fn widom_derivative(dual: &DualFactorization, dj_dt: &BlockLoop, grid: &CircleGrid) -> Complex64 {
    let dtp = dual.t_plus.z_derivative().samples(grid);
    let tm = dual.t_minus.samples(grid);
    let dsm = dual.s_minus.z_derivative().samples(grid);
    let sp = dual.s_plus.samples(grid);
    let dj = dj_dt.samples(grid);
    let integrand: Vec<CMat> = (0..grid.m())
        .map(|m| (&dtp[m] * &tm[m] - &dsm[m] * &sp[m]) * &dj[m])
        .collect();
    -grid.contour_trace_integral(&integrand)
}

/// A family of jump matrices over a space of commuting times.
pub trait JumpFamily {
    fn grid(&self) -> &CircleGrid;

    fn jump_at(&self, times: &Times) -> Result<BlockLoop>;

    /// `dJ/dt_index` at `times`.
    fn jump_derivative(&self, times: &Times, index: u32, jump: &BlockLoop) -> Result<BlockLoop>;
}

/// Malgrange form `omega(d/dt_index)` at `times`.
pub fn malgrange_at<F: JumpFamily + ?Sized>(family: &F, times: &Times, index: u32, opts: &RhOptions) -> Result<Complex64> {
    let j = family.jump_at(times)?;
    let sol = birkhoff_factorize_with(&j, family.grid(), opts)?;
    let dj = family.jump_derivative(times, index, &j)?;
    malgrange_jmu_logderiv(&sol, &j, &dj, family.grid())
}

/// `|d_b omega(d_a) - d_a omega(d_b)|` by central differences of step `h`.
pub fn closedness_residual<F: JumpFamily + ?Sized>(
    family: &F,
    times: &Times,
    a: u32,
    b: u32,
    h: f64,
    opts: &RhOptions,
) -> Result<f64> {
    let shifted = |idx: u32, delta: f64| {
        let mut t = times.clone();
        *t.entry(idx).or_default() += delta;
        t
    };
    let d_b_omega_a = (malgrange_at(family, &shifted(b, h), a, opts)? - malgrange_at(family, &shifted(b, -h), a, opts)?)
        / (2.0 * h);
    let d_a_omega_b = (malgrange_at(family, &shifted(a, h), b, opts)? - malgrange_at(family, &shifted(a, -h), b, opts)?)
        / (2.0 * h);
    Ok((d_b_omega_a - d_a_omega_b).norm())
}
