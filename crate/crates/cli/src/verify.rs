//! Seeded randomized identity suite run under `--verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tau_core::kacmoody::{self, AffineData, ExtendedElement};
use tau_core::toeplitz;
use tau_core::{BlockLoop, CMat, Complex64};

use crate::report::Check;

fn random_loop(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64, r: f64) -> BlockLoop {
    let coeffs = (lo..=hi)
        .map(|_| CMat::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))))
        .collect();
    BlockLoop::new(n, lo, coeffs).expect("consistent sizes")
}

fn traceless(l: BlockLoop) -> BlockLoop {
    let n = l.n();
    let coeffs = l
        .coeffs()
        .iter()
        .map(|b| b - CMat::identity(n, n) * (b.trace() / n as f64))
        .collect();
    BlockLoop::new(n, l.k_min(), coeffs).expect("consistent sizes")
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// Toeplitz-Hankel product identity on random band-2 pairs.
fn toeplitz_hankel(rng: &mut ChaCha8Rng) -> Check {
    let value = worst((0..20).map(|_| {
        let a = random_loop(rng, 2, -2, 2, 1.0);
        let b = random_loop(rng, 2, -2, 2, 1.0);
        toeplitz::identity_residual(&a, &b, 32).unwrap_or(f64::INFINITY)
    }));
    Check::new("toeplitz_hankel_identity", "block_toeplitz", value, 1e-12)
}

/// Jacobi identity of the centrally extended bracket.
fn jacobi(rng: &mut ChaCha8Rng) -> Check {
    let data = AffineData::a1(2).expect("n = 2");
    let elem = |rng: &mut ChaCha8Rng| {
        let l = traceless(random_loop(rng, 2, -2, 2, 1.0));
        ExtendedElement::new(l, Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).expect("trace-free")
    };
    let value = worst((0..20).map(|_| {
        let (x, y, z) = (elem(rng), elem(rng), elem(rng));
        let br = |a: &ExtendedElement, b: &ExtendedElement| kacmoody::extended_bracket(a, b, &data).expect("same size");
        let sum = br(&x, &br(&y, &z)).add(&br(&y, &br(&z, &x))).and_then(|s| s.add(&br(&z, &br(&x, &y))));
        match sum {
            Ok(s) => s.loop_part.wiener_norm().max(s.central.norm()),
            Err(_) => f64::INFINITY,
        }
    }));
    Check::new("jacobi_with_central_terms", "extended_bracket", value, 1e-10)
}

/// Series versus contour routes for the c-coefficient of `e^X Y e^-X`.
fn c_coefficient(rng: &mut ChaCha8Rng) -> Check {
    let data = AffineData::a1(2).expect("n = 2");
    let grid = tau_core::CircleGrid::new(256).expect("valid size");
    let y = kacmoody::lambda_j(2, 1).expect("exponent");
    let value = worst((0..5).map(|_| {
        let raw = traceless(random_loop(rng, 2, -2, -1, 1.0));
        let x = raw.scale(Complex64::new(0.5 / raw.wiener_norm().max(1e-300), 0.0));
        match kacmoody::adjoint_c_coefficient(&x, &y, &data, 40, &grid) {
            Ok(c) => (c.series - c.contour).norm(),
            Err(_) => f64::INFINITY,
        }
    }));
    Check::new("c_coefficient_routes", "series/contour", value, 1e-8)
}

pub fn suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![toeplitz_hankel(&mut rng), jacobi(&mut rng), c_coefficient(&mut rng)]
}
