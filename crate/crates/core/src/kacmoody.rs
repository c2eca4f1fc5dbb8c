//! Loop realization of the affine algebra of type `A_{n-1}^(1)`: Chevalley
//! generators, the principal and homogeneous Heisenberg elements, the central
//! extension by the cocycle `(kappa / (r k0)) oint Tr(A' B) dz/(2 pi i)`, and
//! the Drinfeld-Sokolov tau relation.
//!
//! In the homogeneous realization `alpha_i^v = H_i` for `i >= 1`, so the
//! coefficient of `c` in an [`ExtendedElement`] is its tracked central scalar.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grassmann::{self, FlowGroupElement, GrassmannPoint};
use crate::linalg::{self, hs_norm, trace, CMat, ONE, ZERO};
use crate::loops::{invert_samples, BlockLoop, CircleGrid, DEFAULT_TAIL_TOL};
use crate::rhfactor::{birkhoff_factorize_with, RhOptions};

/// Largest block trace tolerated in an [`ExtendedElement`].
const TRACE_TOL: f64 = 1e-12;

/// Size below which a term of the adjoint series counts as zero.
const SERIES_TOL: f64 = 1e-17;

pub const MIN_SERIES_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AffineFamily {
    /// Untwisted `A_{n-1}^(1)`.
    A1,
}

impl AffineFamily {
    pub fn name(self) -> &'static str {
        match self {
            AffineFamily::A1 => "A1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineData {
    pub family: AffineFamily,
    pub n: usize,
    /// Normalization of the invariant form.
    pub kappa: f64,
    /// Twist order.
    pub r: u32,
    /// Kac label `k_0`.
    pub k0: u32,
}

impl AffineData {
    pub fn a1(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self { family: AffineFamily::A1, n, kappa: 1.0, r: 1, k0: 1 })
    }

    /// `kappa / (r k0)`, the factor in front of the cocycle.
    pub fn central_scale(&self) -> f64 {
        self.kappa / (self.r as f64 * self.k0 as f64)
    }

    pub fn coxeter(&self) -> usize {
        self.n
    }

    pub fn is_exponent(&self, j: i64) -> bool {
        j.rem_euclid(self.n as i64) != 0
    }

    /// Exponents `j` with `|j| <= bound`, ascending.
    pub fn exponents(&self, bound: i64) -> Vec<i64> {
        (-bound..=bound).filter(|&j| self.is_exponent(j)).collect()
    }

    /// Dual Kac labels `k_i^v`, all one for this family.
    pub fn dual_kac_labels(&self) -> Vec<u32> {
        vec![1; self.n]
    }

    /// Homogeneous gradation `s^0 = (1, 0, ..., 0)`.
    pub fn homogeneous_gradation(&self) -> Vec<u32> {
        let mut s = vec![0; self.n];
        s[0] = 1;
        s
    }

    /// Principal gradation `s^1 = (1, ..., 1)`.
    pub fn principal_gradation(&self) -> Vec<u32> {
        vec![1; self.n]
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("affine type A needs n >= 2, got {n}")));
    }
    Ok(())
}

/// Loop with trace-free blocks plus a coefficient of the central element `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedElement {
    pub loop_part: BlockLoop,
    pub central: Complex64,
}

impl ExtendedElement {
    pub fn new(loop_part: BlockLoop, central: Complex64) -> Result<Self> {
        if let Some(k) = (loop_part.k_min()..=loop_part.k_max())
            .find(|&k| trace(&loop_part.coeff_or_zero(k)).norm() > TRACE_TOL)
        {
            return Err(Error::InvalidInput(format!("block {k} is not trace-free")));
        }
        Ok(Self { loop_part, central })
    }

    pub fn from_loop(loop_part: BlockLoop) -> Result<Self> {
        Self::new(loop_part, ZERO)
    }

    pub fn zero(n: usize) -> Self {
        Self { loop_part: BlockLoop::zero(n), central: ZERO }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self { loop_part: self.loop_part.add(&other.loop_part)?, central: self.central + other.central })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { loop_part: self.loop_part.scale(s), central: self.central * s }
    }
}

/// `e_{i,j}` (1-based) of size `n`.
pub fn elementary(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i - 1, j - 1)] = ONE;
    m
}

/// `H_i = e_{i+1,i+1} - e_{i,i}`, the matrix part of `alpha_i^v`.
pub fn cartan_h(n: usize, i: usize) -> CMat {
    elementary(n, i + 1, i + 1) - elementary(n, i, i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeylGenerators {
    pub e: Vec<ExtendedElement>,
    pub f: Vec<ExtendedElement>,
    /// `alpha_i^v = [e_i, f_i]`.
    pub coroots: Vec<ExtendedElement>,
}

pub fn weyl_generators(n: usize) -> Result<WeylGenerators> {
    let data = AffineData::a1(n)?;
    let mut e = vec![ExtendedElement::from_loop(BlockLoop::monomial(1, elementary(n, 1, n)))?];
    let mut f = vec![ExtendedElement::from_loop(BlockLoop::monomial(-1, elementary(n, n, 1)))?];
    for i in 1..n {
        e.push(ExtendedElement::from_loop(BlockLoop::constant(elementary(n, i + 1, i)))?);
        f.push(ExtendedElement::from_loop(BlockLoop::constant(elementary(n, i, i + 1)))?);
    }
    let coroots = e
        .iter()
        .zip(&f)
        .map(|(a, b)| extended_bracket(a, b, &data))
        .collect::<Result<_>>()?;
    Ok(WeylGenerators { e, f, coroots })
}

/// `Lambda = e_0 + ... + e_{n-1}`: ones below the diagonal and `z` in the
/// top right corner.
pub fn principal_lambda(n: usize) -> Result<BlockLoop> {
    lambda_power(n, 1)
}

/// `Lambda^j` for any integer `j`, built as `z^q Lambda^s` with `j = q n + s`,
/// `0 <= s < n`.
pub fn lambda_power(n: usize, j: i64) -> Result<BlockLoop> {
    check_n(n)?;
    let q = j.div_euclid(n as i64);
    let s = j.rem_euclid(n as i64) as usize;
    // Lambda^s e_k = e_{k+s}, wrapping past e_n with a factor z.
    let mut low = CMat::zeros(n, n);
    let mut high = CMat::zeros(n, n);
    for k in 0..n {
        if k + s < n {
            low[(k + s, k)] = ONE;
        } else {
            high[(k + s - n, k)] = ONE;
        }
    }
    let base = BlockLoop::new(n, 0, vec![low, high])?.trim();
    Ok(base.shift(q))
}

/// `Lambda_j = Lambda^j` for an exponent `j`.
pub fn lambda_j(n: usize, j: i64) -> Result<BlockLoop> {
    check_n(n)?;
    if j.rem_euclid(n as i64) == 0 {
        return Err(Error::NotAnExponent(j));
    }
    lambda_power(n, j)
}

/// `omega(A, B) = (kappa / (r k0)) oint Tr(A' B) dz/(2 pi i)` by quadrature.
pub fn cocycle(a: &BlockLoop, b: &BlockLoop, data: &AffineData, grid: &CircleGrid) -> Complex64 {
    let da = a.z_derivative().samples(grid);
    let bs = b.samples(grid);
    let values: Vec<CMat> = da.iter().zip(&bs).map(|(x, y)| x * y).collect();
    grid.contour_trace_integral(&values) * data.central_scale()
}

/// The same cocycle from the Fourier blocks: `sum_k k Tr(A_k B_-k)`.
pub fn cocycle_exact(a: &BlockLoop, b: &BlockLoop, data: &AffineData) -> Complex64 {
    let lo = a.k_min().max(-b.k_max());
    let hi = a.k_max().min(-b.k_min());
    let mut acc = ZERO;
    for k in lo..=hi {
        if k == 0 {
            continue;
        }
        if let (Some(x), Some(y)) = (a.coeff(k), b.coeff(-k)) {
            acc += trace(&(x * y)) * k as f64;
        }
    }
    acc * data.central_scale()
}

/// `[X + x c, Y + y c] = [X, Y] + omega(X, Y) c`.
pub fn extended_bracket(x: &ExtendedElement, y: &ExtendedElement, data: &AffineData) -> Result<ExtendedElement> {
    if x.loop_part.n() != y.loop_part.n() {
        return Err(Error::DimensionMismatch { expected: x.loop_part.n(), found: y.loop_part.n() });
    }
    Ok(ExtendedElement {
        loop_part: x.loop_part.commutator(&y.loop_part)?,
        // Averaging both orders makes antisymmetry exact in floating point.
        central: (cocycle_exact(&x.loop_part, &y.loop_part, data) - cocycle_exact(&y.loop_part, &x.loop_part, data))
            * 0.5,
    })
}

/// Coefficient of `c` in `e^X Y e^-X`, by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CCoefficient {
    /// From `sum_m (ad_X)^m Y / m!` with extended brackets.
    pub series: Complex64,
    /// From `(kappa / (r k0)) oint Tr((e^X)' Y e^-X) dz/(2 pi i)`.
    pub contour: Complex64,
    /// Number of series terms used.
    pub terms: usize,
}

pub fn adjoint_c_coefficient(
    x: &BlockLoop,
    y: &BlockLoop,
    data: &AffineData,
    series_order: usize,
    grid: &CircleGrid,
) -> Result<CCoefficient> {
    if series_order < MIN_SERIES_ORDER {
        return Err(Error::InvalidInput(format!("series order must be at least {MIN_SERIES_ORDER}")));
    }
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), found: y.n() });
    }

    let mut series = ZERO;
    let mut term = y.clone();
    let mut terms = None;
    for m in 1..=series_order {
        // (ad_X)^m Y / m! from (ad_X)^(m-1) Y / (m-1)!.
        series += cocycle_exact(x, &term, data) / m as f64;
        term = x.commutator(&term)?.scale(Complex64::new(1.0 / m as f64, 0.0));
        let reach = term.restrict(1.max(term.k_min()), term.k_max()).wiener_norm();
        let size = term.wiener_norm();
        if size <= SERIES_TOL || (x.k_max() < 0 && reach <= SERIES_TOL) {
            terms = Some(m);
            break;
        }
    }
    let Some(terms) = terms else {
        return Err(Error::SeriesNotConverged(series_order));
    };

    let contour = conjugation_c_coefficient(x, y, data, grid)?;
    Ok(CCoefficient { series, contour, terms })
}

fn conjugation_c_coefficient(x: &BlockLoop, y: &BlockLoop, data: &AffineData, grid: &CircleGrid) -> Result<Complex64> {
    let xs = x.samples(grid);
    let plus: Vec<CMat> = xs.iter().map(linalg::expm).collect();
    let minus: Vec<CMat> = xs.iter().map(|v| linalg::expm(&-v)).collect();
    let (ex, _) = grid.from_samples(&plus, DEFAULT_TAIL_TOL)?;
    let dex = ex.z_derivative().samples(grid);
    let ys = y.samples(grid);
    let values: Vec<CMat> = (0..grid.m()).map(|m| &dex[m] * &ys[m] * &minus[m]).collect();
    Ok(grid.contour_trace_integral(&values) * data.central_scale())
}

/// Both sides of the Drinfeld-Sokolov tau relation along flow `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsCheck {
    /// Coefficient of `c` in `Theta Lambda_j Theta^-1`, `Theta = Gamma_-`.
    pub c_coefficient: Complex64,
    /// `d/dt_j log tau_SSW` from the Baker function.
    pub sato_logderiv: Complex64,
    /// `|-c_coefficient - (kappa / (r k0)) sato_logderiv|`.
    pub residual: f64,
}

pub fn ds_tau_relation_check(
    point: &GrassmannPoint,
    flow: &FlowGroupElement,
    j: i64,
    data: &AffineData,
    opts: &RhOptions,
) -> Result<DsCheck> {
    let n = data.n;
    if point.n() != n || flow.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: point.n().max(flow.n()) });
    }
    let lambda = lambda_j(n, j)?;
    let index = u32::try_from(j).map_err(|_| Error::InvalidInput(format!("flow index {j} must be positive")))?;
    let grid = flow.grid();
    let gen = flow.generator(index)?;
    if gen.sub(&lambda)?.wiener_norm() > 0.0 {
        return Err(Error::InvalidInput(format!("generator {j} of the flow is not Lambda^{j}")));
    }
    let det_defect = point
        .gamma()
        .samples(grid)
        .iter()
        .map(|s| (s.determinant() - ONE).norm())
        .fold(0.0, f64::max);
    if det_defect > 1e-10 {
        return Err(Error::InvalidInput(format!("det gamma differs from 1 by {det_defect:e}")));
    }

    let jump = grassmann::jump(point, flow)?;
    let sol = birkhoff_factorize_with(&jump, grid, opts)?;
    let theta = &sol.gamma_minus;
    let theta_inv = invert_samples(&theta.samples(grid))?;
    let dtheta = theta.z_derivative().samples(grid);
    let ls = lambda.samples(grid);
    let values: Vec<CMat> = (0..grid.m()).map(|m| &dtheta[m] * &ls[m] * &theta_inv[m]).collect();
    let c_coefficient = grid.contour_trace_integral(&values) * data.central_scale();

    let sato_logderiv = grassmann::generalized_sato_logderiv(point, flow, index, opts)?;
    let residual = (-c_coefficient - sato_logderiv * data.central_scale()).norm();
    Ok(DsCheck { c_coefficient, sato_logderiv, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergElement {
    pub degree: i64,
    /// `i` in `z^degree H_i`.
    pub index: usize,
    pub loop_part: BlockLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeisenbergBasis {
    pub elements: Vec<HeisenbergElement>,
    /// `((j, i, i'), omega(z^j H_i, z^-j H_i'))`.
    pub pairings: Vec<((i64, usize, usize), Complex64)>,
}

/// `z^j H_i` for `|j| <= j_max`, `i = 1..n`, with their pairings.
pub fn homogeneous_heisenberg_basis(n: usize, j_max: u32) -> Result<HeisenbergBasis> {
    let data = AffineData::a1(n)?;
    let j_max = j_max as i64;
    let mut elements = Vec::new();
    for degree in -j_max..=j_max {
        for index in 1..n {
            elements.push(HeisenbergElement { degree, index, loop_part: BlockLoop::monomial(degree, cartan_h(n, index)) });
        }
    }
    let mut pairings = Vec::new();
    for degree in -j_max..=j_max {
        for i in 1..n {
            for k in 1..n {
                let a = BlockLoop::monomial(degree, cartan_h(n, i));
                let b = BlockLoop::monomial(-degree, cartan_h(n, k));
                pairings.push(((degree, i, k), cocycle_exact(&a, &b, &data)));
            }
        }
    }
    Ok(HeisenbergBasis { elements, pairings })
}

/// Grid max-norm of `Lambda^j Lambda^-j - Id` with `Lambda^-j` from
/// [`BlockLoop::inverse`], for checking the closed form.
pub fn lambda_inverse_defect(n: usize, j: i64, grid: &CircleGrid) -> Result<f64> {
    let l = lambda_power(n, j)?;
    let inv = l.inverse(grid, DEFAULT_TAIL_TOL)?;
    let closed = lambda_power(n, -j)?;
    Ok(inv.sub(&closed)?.trim().coeffs().iter().map(hs_norm).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::FlowTimes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mat(n: usize, entries: &[(usize, usize, Complex64)]) -> CMat {
        let mut m = CMat::zeros(n, n);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
        }
        m
    }

    #[test]
    fn weyl_generators_n2() {
        let w = weyl_generators(2).unwrap();
        assert_eq!(w.e[0].loop_part, BlockLoop::monomial(1, mat(2, &[(0, 1, ONE)])));
        assert_eq!(w.e[1].loop_part, BlockLoop::constant(mat(2, &[(1, 0, ONE)])));
        let a1 = &w.coroots[1];
        assert_eq!(a1.loop_part.clone().trim(), BlockLoop::constant(mat(2, &[(0, 0, -ONE), (1, 1, ONE)])));
        assert_eq!(a1.central, ZERO);
        let a0 = &w.coroots[0];
        assert_eq!(a0.loop_part.clone().trim(), BlockLoop::constant(mat(2, &[(0, 0, ONE), (1, 1, -ONE)])));
        assert_eq!(a0.central, ONE);
    }

    #[test]
    fn coroots_sum_to_central_element() {
        for n in 2..=6 {
            let w = weyl_generators(n).unwrap();
            let total = w.coroots.iter().fold(ExtendedElement::zero(n), |acc, x| acc.add(x).unwrap());
            assert_eq!(total.loop_part.trim(), BlockLoop::zero(n), "n = {n}");
            assert_eq!(total.central, ONE);
        }
    }

    #[test]
    fn principal_lambda_shapes() {
        assert_eq!(principal_lambda(2).unwrap(), BlockLoop::new(2, 0, vec![mat(2, &[(1, 0, ONE)]), mat(2, &[(0, 1, ONE)])]).unwrap());
        let l3 = principal_lambda(3).unwrap();
        assert_eq!(l3.coeff(0).unwrap(), &mat(3, &[(1, 0, ONE), (2, 1, ONE)]));
        assert_eq!(l3.coeff(1).unwrap(), &mat(3, &[(0, 2, ONE)]));
        let sq = principal_lambda(2).unwrap().multiply(&principal_lambda(2).unwrap()).unwrap().trim();
        assert_eq!(sq, BlockLoop::monomial(1, linalg::identity(2)));
        let grid = CircleGrid::new(16).unwrap();
        let det = l3.eval(grid.nodes()[3]).unwrap().determinant();
        assert!((det - grid.nodes()[3]).norm() < 1e-15);
    }

    #[test]
    fn lambda_j_examples() {
        let l = principal_lambda(2).unwrap();
        assert_eq!(lambda_j(2, 1).unwrap(), l);
        assert_eq!(lambda_j(2, 3).unwrap(), l.shift(1));
        let l32 = lambda_j(3, 2).unwrap();
        assert_eq!(l32.coeff(0).unwrap(), &mat(3, &[(2, 0, ONE)]));
        assert_eq!(l32.coeff(1).unwrap(), &mat(3, &[(0, 1, ONE), (1, 2, ONE)]));
        assert_eq!(lambda_j(3, 6), Err(Error::NotAnExponent(6)));
        for n in 2..=4 {
            for j in [1, 2, 5] {
                let lj = lambda_power(n, j).unwrap();
                assert_eq!(lambda_power(n, j + n as i64).unwrap(), lj.shift(1));
            }
        }
    }

    #[test]
    fn closed_form_inverse_matches_numerical() {
        let grid = CircleGrid::new(64).unwrap();
        for n in 2..=4 {
            assert!(lambda_inverse_defect(n, 1, &grid).unwrap() < 1e-14);
        }
    }

    #[test]
    fn cocycle_examples() {
        let data = AffineData::a1(2).unwrap();
        let grid = CircleGrid::new(32).unwrap();
        let a = BlockLoop::constant(mat(2, &[(0, 1, ONE)]));
        let b = BlockLoop::constant(mat(2, &[(1, 0, ONE)]));
        assert_eq!(cocycle(&a, &b, &data, &grid), ZERO);
        let l1 = lambda_j(2, 1).unwrap();
        let lm1 = lambda_j(2, -1).unwrap();
        assert!((cocycle(&l1, &lm1, &data, &grid) - ONE).norm() < 1e-14);
        assert!(cocycle(&l1, &lambda_j(2, 1).unwrap(), &data, &grid).norm() < 1e-14);
        assert!(cocycle(&lambda_j(2, 3).unwrap(), &lm1, &data, &grid).norm() < 1e-14);
    }

    #[test]
    fn bracket_examples() {
        let data = AffineData::a1(2).unwrap();
        let x = ExtendedElement::from_loop(lambda_j(2, 1).unwrap()).unwrap();
        let y = ExtendedElement::from_loop(lambda_j(2, -1).unwrap()).unwrap();
        let xx = extended_bracket(&x, &x, &data).unwrap();
        assert_eq!(xx.loop_part.trim(), BlockLoop::zero(2));
        assert_eq!(xx.central, ZERO);
        let xy = extended_bracket(&x, &y, &data).unwrap();
        assert_eq!(xy.loop_part.trim(), BlockLoop::zero(2));
        assert_eq!(xy.central, ONE);
        let w = weyl_generators(3).unwrap();
        assert!(matches!(extended_bracket(&x, &w.e[0], &data), Err(Error::DimensionMismatch { .. })));
        assert!(ExtendedElement::from_loop(BlockLoop::identity(2)).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let data = AffineData::a1(2).unwrap();
        let grid = CircleGrid::new(64).unwrap();
        let y = lambda_j(2, 1).unwrap();
        let zero = adjoint_c_coefficient(&BlockLoop::zero(2), &y, &data, 12, &grid).unwrap();
        assert_eq!(zero.series, ZERO);
        assert!(zero.contour.norm() < 1e-15);

        let x = BlockLoop::monomial(-1, mat(2, &[(1, 0, c(0.3, 0.0))]));
        let r = adjoint_c_coefficient(&x, &y, &data, 12, &grid).unwrap();
        // e^X = Id + X and only the first bracket has a central part.
        assert!((r.series - c(-0.3, 0.0)).norm() < 1e-15, "{}", r.series);
        assert!((r.contour - r.series).norm() < 1e-12);
        assert!(matches!(adjoint_c_coefficient(&x, &y, &data, 4, &grid), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn heisenberg_examples() {
        let b = homogeneous_heisenberg_basis(2, 0).unwrap();
        assert_eq!(b.elements.len(), 1);
        assert_eq!(b.elements[0].loop_part, BlockLoop::constant(mat(2, &[(0, 0, -ONE), (1, 1, ONE)])));
        let b = homogeneous_heisenberg_basis(3, 2).unwrap();
        for x in &b.elements {
            for y in &b.elements {
                assert_eq!(x.loop_part.commutator(&y.loop_part).unwrap().trim(), BlockLoop::zero(3));
            }
        }
        let b = homogeneous_heisenberg_basis(2, 1).unwrap();
        let v = b.pairings.iter().find(|(k, _)| *k == (1, 1, 1)).unwrap().1;
        assert_eq!(v, c(2.0, 0.0));
    }

    fn ds_point(n: usize) -> GrassmannPoint {
        let grid = CircleGrid::new(64).unwrap();
        let v0 = BlockLoop::monomial(-1, elementary(n, n, 1) * c(0.2, 0.0));
        let gamma = crate::loops::presets::exp_of(&v0, &grid, DEFAULT_TAIL_TOL).unwrap();
        GrassmannPoint::new(gamma, "graded").unwrap()
    }

    #[test]
    fn ds_relation_examples() {
        let opts = RhOptions::default();
        let data = AffineData::a1(2).unwrap();
        let flow = FlowGroupElement::principal_a(2, 3, CircleGrid::new(128).unwrap()).unwrap();
        let r = ds_tau_relation_check(&GrassmannPoint::identity(2), &flow, 1, &data, &opts).unwrap();
        assert!(r.residual < 1e-14);
        assert!(r.c_coefficient.norm() < 1e-14);

        let at0 = ds_tau_relation_check(&ds_point(2), &flow, 1, &data, &opts).unwrap();
        assert!((at0.sato_logderiv - c(-0.2, 0.0)).norm() < 1e-12);

        let times: FlowTimes = [(1, c(0.3, 0.0)), (3, c(-0.2, 0.0))].into_iter().collect();
        let flow = flow.with_times(times).unwrap();
        for j in [1, 3] {
            let r = ds_tau_relation_check(&ds_point(2), &flow, j, &data, &opts).unwrap();
            assert!(r.residual <= 1e-6, "j = {j}: {}", r.residual);
        }
        assert_eq!(ds_tau_relation_check(&ds_point(2), &flow, 2, &data, &opts), Err(Error::NotAnExponent(2)));
    }
}
