//! Points `W = gamma H_+` of the Sato-Segal-Wilson Grassmannian, abelian flow
//! groups acting on them, and the tau function and Baker function that go
//! with a point and a time.
//!
//! The tau function is evaluated as the Szegő-Widom constant of the jump
//! `J = g^-1 gamma`; no infinite operator is ever formed.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kacmoody;
use crate::linalg::{self, hs_norm, identity, CMat, ZERO};
use crate::loops::{invert_samples, BlockLoop, CircleGrid, DEFAULT_TAIL_TOL};
use crate::rhfactor::{self, birkhoff_factorize_with, JumpFamily, RhOptions, RhSolution};
use crate::toeplitz::{self, LimitEstimate};

/// Flow times, indexed like the generators of a [`FlowGroupElement`].
pub type FlowTimes = rhfactor::Times;

/// Largest grid max-norm of `[Lambda_i, Lambda_j]` accepted for a flow group.
const COMMUTATOR_TOL: f64 = 1e-12;

/// Allowed distance of the constant term of `gamma` from `Id`.
const NORMALIZATION_TOL: f64 = 1e-12;

/// A point `W = gamma H_+` given by a loop supported on `k <= 0` with constant
/// term `Id`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    gamma: BlockLoop,
    label: String,
}

impl GrassmannPoint {
    pub fn new(gamma: BlockLoop, label: impl Into<String>) -> Result<Self> {
        let top = gamma.clone().trim().k_max();
        if top > 0 {
            return Err(Error::InvalidInput(format!("gamma must be supported on k <= 0, found mode {top}")));
        }
        let n = gamma.n();
        let gamma = gamma.restrict(gamma.k_min().min(0), 0);
        let c0 = gamma.coeff_or_zero(0);
        let off = hs_norm(&(&c0 - identity(n)));
        if off > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!("constant term of gamma is {off:e} away from Id")));
        }
        let mut coeffs = gamma.coeffs().to_vec();
        let last = coeffs.len() - 1;
        coeffs[last] = identity(n);
        let gamma = BlockLoop::new(n, gamma.k_min(), coeffs)?.with_tail_tol(gamma.tail_tol());
        let grid = CircleGrid::for_bandwidth(gamma.bandwidth());
        let winding = gamma.winding_number(&grid)?;
        if winding != 0 {
            // Index != 0: tau vanishes identically.
            return Err(Error::NonzeroWinding(winding));
        }
        Ok(Self { gamma, label: label.into() })
    }

    pub fn identity(n: usize) -> Self {
        Self { gamma: BlockLoop::identity(n), label: "identity".into() }
    }

    pub fn gamma(&self) -> &BlockLoop {
        &self.gamma
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.gamma.n()
    }
}

/// Which standard family a flow group belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowFamily {
    /// `Lambda_j = z^j Id`.
    Kp,
    /// `Lambda_j = Lambda^j` for the principal element of type A.
    PrincipalA,
    /// `z^j H_i`, indexed by `j n + i`.
    HomogeneousA,
    Custom,
}

impl FlowFamily {
    pub fn name(self) -> &'static str {
        match self {
            FlowFamily::Kp => "kp",
            FlowFamily::PrincipalA => "principal_A",
            FlowFamily::HomogeneousA => "homogeneous_A",
            FlowFamily::Custom => "custom",
        }
    }
}

impl std::str::FromStr for FlowFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kp" => Ok(FlowFamily::Kp),
            "principal_A" => Ok(FlowFamily::PrincipalA),
            "homogeneous_A" => Ok(FlowFamily::HomogeneousA),
            other => Err(Error::InvalidInput(format!("unknown flow family `{other}`"))),
        }
    }
}

/// `g = exp(sum_j t_j Lambda_j)` for commuting holomorphic generators.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowGroupElement {
    family: FlowFamily,
    generators: Vec<(u32, BlockLoop)>,
    times: FlowTimes,
    grid: CircleGrid,
}

impl FlowGroupElement {
    pub fn new(family: FlowFamily, generators: Vec<(u32, BlockLoop)>, times: FlowTimes, grid: CircleGrid) -> Result<Self> {
        let Some((_, first)) = generators.first() else {
            return Err(Error::InvalidInput("a flow group needs at least one generator".into()));
        };
        let n = first.n();
        for (idx, gen) in &generators {
            if gen.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: gen.n() });
            }
            if gen.k_min() < 0 && gen.restrict(gen.k_min(), -1).trim().wiener_norm() > 0.0 {
                return Err(Error::InvalidInput(format!("generator {idx} has negative modes")));
            }
        }
        for (a, (ia, ga)) in generators.iter().enumerate() {
            if generators[..a].iter().any(|(ib, _)| ib == ia) {
                return Err(Error::InvalidInput(format!("generator index {ia} repeated")));
            }
            for (ib, gb) in &generators[a + 1..] {
                let defect = ga.commutator(gb)?.sup_norm(&grid);
                if defect > COMMUTATOR_TOL {
                    log::debug!("generators {ia} and {ib} fail to commute by {defect:e}");
                    return Err(Error::NonCommuting(defect));
                }
            }
        }
        let out = Self { family, generators, times: FlowTimes::new(), grid };
        out.with_times(times)
    }

    /// Scalar-type flows `z^j Id`, `j = 1..=max_index`.
    pub fn kp(n: usize, max_index: u32, grid: CircleGrid) -> Result<Self> {
        let gens = (1..=max_index)
            .map(|j| (j, BlockLoop::monomial(j as i64, identity(n))))
            .collect();
        Self::new(FlowFamily::Kp, gens, FlowTimes::new(), grid)
    }

    /// Powers `Lambda^j`, `j = 1..=max_index`, of the principal element.
    /// Indices divisible by `n` give the central flows `z^(j/n) Id`.
    pub fn principal_a(n: usize, max_index: u32, grid: CircleGrid) -> Result<Self> {
        let gens = (1..=max_index)
            .map(|j| Ok((j, kacmoody::lambda_power(n, j as i64)?)))
            .collect::<Result<_>>()?;
        Self::new(FlowFamily::PrincipalA, gens, FlowTimes::new(), grid)
    }

    /// `z^j H_i` for `j = 1..=max_degree`, `i = 1..n`, with index `j n + i`.
    pub fn homogeneous_a(n: usize, max_degree: u32, grid: CircleGrid) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput("homogeneous flows need n >= 2".into()));
        }
        let mut gens = Vec::new();
        for j in 1..=max_degree {
            for i in 1..n {
                let h = kacmoody::cartan_h(n, i);
                gens.push((j * n as u32 + i as u32, BlockLoop::monomial(j as i64, h)));
            }
        }
        Self::new(FlowFamily::HomogeneousA, gens, FlowTimes::new(), grid)
    }

    /// Same generators at new times. Every time must name a generator.
    pub fn with_times(&self, times: FlowTimes) -> Result<Self> {
        if let Some(bad) = times.keys().find(|k| !self.generators.iter().any(|(i, _)| i == *k)) {
            return Err(Error::InvalidInput(format!("no generator with index {bad}")));
        }
        Ok(Self { times, ..self.clone() })
    }

    pub fn family(&self) -> FlowFamily {
        self.family
    }

    pub fn generators(&self) -> &[(u32, BlockLoop)] {
        &self.generators
    }

    pub fn generator(&self, index: u32) -> Result<&BlockLoop> {
        self.generators
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::InvalidInput(format!("no generator with index {index}")))
    }

    pub fn times(&self) -> &FlowTimes {
        &self.times
    }

    pub fn grid(&self) -> &CircleGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.generators[0].1.n()
    }

    /// `X = sum_j t_j Lambda_j`.
    pub fn exponent(&self) -> BlockLoop {
        self.times.iter().fold(BlockLoop::zero(self.n()), |acc, (j, t)| {
            let gen = self.generator(*j).expect("times validated");
            acc.add(&gen.scale(*t)).expect("same size")
        })
    }

    /// `exp(sign X)` at each grid node.
    pub fn samples(&self, sign: f64) -> Vec<CMat> {
        let x = self.exponent().scale(Complex64::new(sign, 0.0));
        x.samples(&self.grid).iter().map(linalg::expm).collect()
    }

    /// `g(z)` anywhere in the plane.
    pub fn eval(&self, z: Complex64) -> Result<CMat> {
        Ok(linalg::expm(&self.exponent().eval(z)?))
    }

    /// Fourier data of `g`, which is supported on `k >= 0`.
    pub fn to_loop(&self, tail_tol: f64) -> Result<BlockLoop> {
        Ok(self.grid.from_samples_within(&self.samples(1.0), tail_tol, 0, i64::MAX)?.0)
    }
}

fn same_size(point: &GrassmannPoint, flow: &FlowGroupElement) -> Result<()> {
    if point.n() != flow.n() {
        return Err(Error::DimensionMismatch { expected: point.n(), found: flow.n() });
    }
    Ok(())
}

/// `J = g^-1 gamma` with the default tail tolerance.
pub fn jump(point: &GrassmannPoint, flow: &FlowGroupElement) -> Result<BlockLoop> {
    jump_with(point, flow, DEFAULT_TAIL_TOL)
}

pub fn jump_with(point: &GrassmannPoint, flow: &FlowGroupElement, tail_tol: f64) -> Result<BlockLoop> {
    same_size(point, flow)?;
    if flow.times.values().all(|t| *t == ZERO) {
        return Ok(point.gamma.clone());
    }
    let grid = &flow.grid;
    let g_inv = flow.samples(-1.0);
    let product: Vec<CMat> = g_inv
        .iter()
        .zip(point.gamma.samples(grid))
        .map(|(a, b)| a * b)
        .collect();
    Ok(grid.from_samples_within(&product, tail_tol, point.gamma.k_min(), i64::MAX)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMethod {
    Fredholm,
    Extrapolation,
}

impl TauMethod {
    pub fn name(self) -> &'static str {
        match self {
            TauMethod::Fredholm => "fredholm",
            TauMethod::Extrapolation => "extrapolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauParams {
    pub method: TauMethod,
    pub tail_tol: f64,
    /// Starting Hankel truncation; chosen from the bandwidths when `None`.
    pub hankel_size: Option<usize>,
    /// Sizes used by [`TauMethod::Extrapolation`].
    pub schedule: Vec<usize>,
}

impl Default for TauParams {
    fn default() -> Self {
        Self {
            method: TauMethod::Fredholm,
            tail_tol: DEFAULT_TAIL_TOL,
            hankel_size: None,
            schedule: vec![16, 32, 64, 128],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TauDiagnostics {
    Hankel { m_h: usize, last_change: f64, inverse_tail: f64 },
    Limit(LimitEstimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauEvaluation {
    /// `log tau_SSW`; real part `-inf` off the big cell.
    pub log_value: Complex64,
    pub times: FlowTimes,
    pub method: TauMethod,
    pub diagnostics: TauDiagnostics,
}

impl TauEvaluation {
    pub fn in_big_cell(&self) -> bool {
        !linalg::is_singular_log(self.log_value)
    }
}

/// `log tau_SSW(t) = log D_inf(g^-1 gamma)`.
pub fn tau_ssw(point: &GrassmannPoint, flow: &FlowGroupElement, params: &TauParams) -> Result<TauEvaluation> {
    let j = jump_with(point, flow, params.tail_tol)?;
    let grid = &flow.grid;
    let (log_value, diagnostics) = match params.method {
        TauMethod::Fredholm => {
            let det = match params.hankel_size {
                Some(m_h) => toeplitz::fredholm_det_report(&j, grid, m_h, params.tail_tol)?,
                None => toeplitz::fredholm_det_auto(&j, grid, params.tail_tol)?,
            };
            let diag = TauDiagnostics::Hankel {
                m_h: det.m_h,
                last_change: det.last_change,
                inverse_tail: det.inverse_tail,
            };
            (det.log_value, diag)
        }
        TauMethod::Extrapolation => {
            let est = toeplitz::szego_widom_limit(&j, &params.schedule, grid)?;
            (est.value, TauDiagnostics::Limit(est))
        }
    };
    Ok(TauEvaluation { log_value, times: flow.times.clone(), method: params.method, diagnostics })
}

/// `w = g Gamma_-^-1` on the grid together with its Fourier data.
#[derive(Debug, Clone, PartialEq)]
pub struct BakerFunction {
    pub samples: Vec<CMat>,
    pub fourier: BlockLoop,
    pub solution: RhSolution,
    pub jump: BlockLoop,
}

pub fn baker_function(point: &GrassmannPoint, flow: &FlowGroupElement, opts: &RhOptions) -> Result<BakerFunction> {
    let grid = &flow.grid;
    let j = jump(point, flow)?;
    let solution = birkhoff_factorize_with(&j, grid, opts)?;
    let gm_inv = invert_samples(&solution.gamma_minus.samples(grid))?;
    let samples: Vec<CMat> = flow
        .samples(1.0)
        .iter()
        .zip(&gm_inv)
        .map(|(g, m)| g * m)
        .collect();
    let (fourier, _) = grid.from_samples(&samples, DEFAULT_TAIL_TOL)?;
    Ok(BakerFunction { samples, fourier, solution, jump: j })
}

/// `sum_{k<0} ||(gamma^-1 w)_k||`, zero exactly when `w` lies in `W`.
pub fn membership_residual(w: &[CMat], point: &GrassmannPoint, grid: &CircleGrid) -> f64 {
    let Ok(gamma_inv) = invert_samples(&point.gamma.samples(grid)) else {
        return f64::INFINITY;
    };
    let prod: Vec<CMat> = gamma_inv.iter().zip(w).map(|(a, b)| a * b).collect();
    let raw = grid.fourier_coefficients(&prod);
    raw.restrict(raw.k_min(), -1).wiener_norm()
}

/// Grid max-norm of `p_+(g^-1 w) - Id`.
pub fn normalization_residual(baker: &BakerFunction, flow: &FlowGroupElement) -> f64 {
    let grid = &flow.grid;
    let prod: Vec<CMat> = flow
        .samples(-1.0)
        .iter()
        .zip(&baker.samples)
        .map(|(a, b)| a * b)
        .collect();
    let raw = grid.fourier_coefficients(&prod);
    let plus = raw.restrict(0, raw.k_max());
    plus.sub(&BlockLoop::identity(raw.n())).expect("same size").sup_norm(grid)
}

/// `oint Tr(w' w^-1 Lambda_j) dz/(2 pi i)`, the logarithmic derivative of
/// `tau_SSW` along flow `j`.
pub fn generalized_sato_logderiv(point: &GrassmannPoint, flow: &FlowGroupElement, index: u32, opts: &RhOptions) -> Result<Complex64> {
    let baker = baker_function(point, flow, opts)?;
    sato_logderiv_from(&baker, flow, index)
}

pub fn sato_logderiv_from(baker: &BakerFunction, flow: &FlowGroupElement, index: u32) -> Result<Complex64> {
    let grid = &flow.grid;
    let lambda = flow.generator(index)?.samples(grid);
    let dw = baker.fourier.z_derivative().samples(grid);
    let w_inv = invert_samples(&baker.samples)?;
    let integrand: Vec<CMat> = (0..grid.m()).map(|m| &dw[m] * &w_inv[m] * &lambda[m]).collect();
    Ok(grid.contour_trace_integral(&integrand))
}

/// `dJ/dt_j = -Lambda_j J`.
fn jump_derivative_of(flow: &FlowGroupElement, index: u32, j: &BlockLoop) -> Result<BlockLoop> {
    Ok(flow.generator(index)?.multiply(j)?.scale(Complex64::new(-1.0, 0.0)))
}

/// Malgrange form of the jump family `t -> g(t)^-1 gamma` on `d/dt_index`.
pub fn jmu_logderiv(point: &GrassmannPoint, flow: &FlowGroupElement, index: u32, opts: &RhOptions) -> Result<Complex64> {
    let j = jump(point, flow)?;
    let sol = birkhoff_factorize_with(&j, &flow.grid, opts)?;
    let dj = jump_derivative_of(flow, index, &j)?;
    rhfactor::malgrange_jmu_logderiv(&sol, &j, &dj, &flow.grid)
}

/// Widom's formula along `d/dt_index`, with `S_- = gamma^-1` and `S_+ = g`.
pub fn widom_logderiv(point: &GrassmannPoint, flow: &FlowGroupElement, index: u32, opts: &RhOptions) -> Result<Complex64> {
    let j = jump(point, flow)?;
    let sol = birkhoff_factorize_with(&j, &flow.grid, opts)?;
    let g = flow.to_loop(DEFAULT_TAIL_TOL)?;
    let dual = rhfactor::dual_factorize(&j, &sol, &point.gamma, &g, &flow.grid)?;
    let dj = jump_derivative_of(flow, index, &j)?;
    Ok(rhfactor::widom_derivative(&dual, &dj, &flow.grid))
}

/// A point together with a flow group, seen as a family of jumps over the
/// flow times.
pub struct FlowedPoint<'a> {
    pub point: &'a GrassmannPoint,
    pub flow: &'a FlowGroupElement,
}

impl JumpFamily for FlowedPoint<'_> {
    fn grid(&self) -> &CircleGrid {
        &self.flow.grid
    }

    fn jump_at(&self, times: &FlowTimes) -> Result<BlockLoop> {
        jump(self.point, &self.flow.with_times(times.clone())?)
    }

    fn jump_derivative(&self, _times: &FlowTimes, index: u32, jump: &BlockLoop) -> Result<BlockLoop> {
        jump_derivative_of(self.flow, index, jump)
    }
}

/// Relative gap between `w(t; z0)` and `g(t; z0) tau(t - [1/z0]) / tau(t)`,
/// with the Miwa shift truncated after `k_trunc` terms.
pub fn sato_shift_check(
    point: &GrassmannPoint,
    flow: &FlowGroupElement,
    z0: Complex64,
    k_trunc: u32,
    params: &TauParams,
    opts: &RhOptions,
) -> Result<f64> {
    if point.n() != 1 {
        return Err(Error::NotScalar(point.n()));
    }
    if z0.norm() <= 1.0 {
        return Err(Error::InvalidInput(format!("shift point must lie outside the unit disk, got |z0| = {}", z0.norm())));
    }
    if let Some(k) = flow.times.iter().find(|(k, t)| **k > k_trunc && **t != ZERO).map(|(k, _)| k) {
        return Err(Error::InvalidInput(format!("time t_{k} is nonzero beyond the truncation {k_trunc}")));
    }
    let mut shifted = flow.times.clone();
    let inv = z0.inv();
    let mut power = Complex64::new(1.0, 0.0);
    for k in 1..=k_trunc {
        power *= inv;
        let gen = flow.generator(k)?;
        if gen.clone().trim() != BlockLoop::monomial(k as i64, identity(1)) {
            return Err(Error::InvalidInput(format!("generator {k} is not z^{k}")));
        }
        *shifted.entry(k).or_default() -= power / k as f64;
    }

    let baker = baker_function(point, flow, opts)?;
    let gm = baker.solution.gamma_minus.eval(z0)?[(0, 0)];
    let g0 = flow.eval(z0)?[(0, 0)];
    let w = g0 / gm;

    let base = tau_ssw(point, flow, params)?.log_value;
    let moved = tau_ssw(point, &flow.with_times(shifted)?, params)?.log_value;
    let rhs = g0 * (moved - base).exp();
    Ok((w - rhs).norm() / w.norm())
}

/// Cubic lattice in `(t1, t2, t3)` centred on the flow's current times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HirotaLattice {
    /// Points per axis; at least 7.
    pub points: usize,
    /// Lattice spacing, also the finite-difference step.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HirotaReport {
    /// Largest `|(D1^4 + 3 D2^2 - 4 D1 D3) tau.tau|` over interior points.
    pub max_defect: f64,
    pub max_tau_sq: f64,
    /// `max_defect / max_tau_sq`.
    pub relative: f64,
    pub interior_points: usize,
    /// Lattice points off the big cell.
    pub zeros: usize,
}

// Fourth-order central stencils on offsets -3..=3.
const D1: [f64; 7] = [0.0, 1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0, 0.0];
const D2: [f64; 7] = [0.0, -1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0, 0.0];
const D3: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];
const D4: [f64; 7] = [-1.0 / 6.0, 2.0, -6.5, 28.0 / 3.0, -6.5, 2.0, -1.0 / 6.0];

/// KP bilinear defect of `tau_SSW` on a lattice, by central differences.
pub fn hirota_kp_residual(
    point: &GrassmannPoint,
    flow: &FlowGroupElement,
    lattice: HirotaLattice,
    params: &TauParams,
) -> Result<HirotaReport> {
    if point.n() != 1 {
        return Err(Error::NotScalar(point.n()));
    }
    let p = lattice.points;
    if p < 7 {
        return Err(Error::InvalidInput(format!("Hirota lattice needs at least 7 points per axis, got {p}")));
    }
    for k in 1..=3 {
        flow.generator(k)?;
    }
    let h = lattice.h;
    let mid = (p - 1) as f64 / 2.0;
    let idx = |a: usize, b: usize, c: usize| (a * p + b) * p + c;

    let taus: Vec<Complex64> = (0..p * p * p)
        .into_par_iter()
        .map(|flat| {
            let (a, b, c) = (flat / (p * p), (flat / p) % p, flat % p);
            let mut times = flow.times.clone();
            for (k, i) in [(1u32, a), (2, b), (3, c)] {
                *times.entry(k).or_default() += (i as f64 - mid) * h;
            }
            let ev = tau_ssw(point, &flow.with_times(times)?, params)?;
            Ok(ev.log_value.exp())
        })
        .collect::<Result<_>>()?;

    let zeros = taus.iter().filter(|t| t.norm() == 0.0).count();
    let max_tau_sq = taus.iter().map(|t| t.norm_sqr()).fold(0.0, f64::max);
    let along = |stencil: &[f64; 7], axis: usize, a: usize, b: usize, c: usize| -> Complex64 {
        let mut acc = ZERO;
        for (s, w) in stencil.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let off = s as isize - 3;
            let (mut x, mut y, mut z) = (a as isize, b as isize, c as isize);
            match axis {
                0 => x += off,
                1 => y += off,
                _ => z += off,
            }
            acc += taus[idx(x as usize, y as usize, z as usize)] * *w;
        }
        acc
    };

    let mut max_defect: f64 = 0.0;
    let mut interior = 0;
    for a in 3..p - 3 {
        for b in 2..p - 2 {
            for c in 2..p - 2 {
                let tau = taus[idx(a, b, c)];
                let t1 = along(&D1, 0, a, b, c) / h;
                let t11 = along(&D2, 0, a, b, c) / (h * h);
                let t111 = along(&D3, 0, a, b, c) / (h * h * h);
                let t1111 = along(&D4, 0, a, b, c) / (h * h * h * h);
                let t2 = along(&D1, 1, a, b, c) / h;
                let t22 = along(&D2, 1, a, b, c) / (h * h);
                let t3 = along(&D1, 2, a, b, c) / h;
                let mut t13 = ZERO;
                for (s, w) in D1.iter().enumerate() {
                    if *w != 0.0 {
                        let x = (a as isize + s as isize - 3) as usize;
                        t13 += along(&D1, 2, x, b, c) * *w;
                    }
                }
                t13 /= h * h;
                let defect = 2.0
                    * (tau * t1111 - 4.0 * t1 * t111 + 3.0 * t11 * t11 + 3.0 * tau * t22 - 3.0 * t2 * t2
                        - 4.0 * tau * t13
                        + 4.0 * t1 * t3);
                max_defect = max_defect.max(defect.norm());
                interior += 1;
            }
        }
    }
    let relative = if max_tau_sq > 0.0 { max_defect / max_tau_sq } else { max_defect };
    Ok(HirotaReport { max_defect, max_tau_sq, relative, interior_points: interior, zeros })
}
