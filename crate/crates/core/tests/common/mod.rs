#![allow(dead_code)]

use proptest::prelude::*;
use tau_core::linalg::{hs_norm, identity};
use tau_core::{BlockLoop, CMat, Complex64};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Loops of size `n` supported on `lo..=hi` with entries in the box `[-r, r]^2`.
pub fn band_loop(n: usize, lo: i64, hi: i64, r: f64) -> impl Strategy<Value = BlockLoop> {
    let len = ((hi - lo + 1) as usize) * n * n * 2;
    prop::collection::vec(-r..r, len).prop_map(move |v| {
        let coeffs = v
            .chunks(n * n * 2)
            .map(|blk| CMat::from_fn(n, n, |i, j| c(blk[2 * (i * n + j)], blk[2 * (i * n + j) + 1])))
            .collect();
        BlockLoop::new(n, lo, coeffs).unwrap()
    })
}

/// `Id + E` with `E` on `lo..=hi` scaled so that its Wiener norm is `size`.
pub fn near_identity(n: usize, lo: i64, hi: i64, size: f64) -> impl Strategy<Value = BlockLoop> {
    band_loop(n, lo, hi, 1.0).prop_map(move |e| {
        let w = e.wiener_norm();
        let e = if w > 0.0 { e.scale(c(size / w, 0.0)) } else { e };
        e.add(&BlockLoop::identity(n)).unwrap()
    })
}

/// Largest block difference between two loops.
pub fn loop_distance(a: &BlockLoop, b: &BlockLoop) -> f64 {
    let lo = a.k_min().min(b.k_min());
    let hi = a.k_max().max(b.k_max());
    (lo..=hi)
        .map(|k| hs_norm(&(a.coeff_or_zero(k) - b.coeff_or_zero(k))))
        .fold(0.0, f64::max)
}

pub fn max_block(a: &BlockLoop) -> f64 {
    a.coeffs().iter().map(hs_norm).fold(0.0, f64::max)
}

pub fn id(n: usize) -> CMat {
    identity(n)
}

/// Fixed case count, no regression files.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}

/// Removes the trace of every block.
pub fn traceless(l: &BlockLoop) -> BlockLoop {
    let n = l.n();
    let coeffs = l
        .coeffs()
        .iter()
        .map(|b| b - identity(n) * (b.trace() / n as f64))
        .collect();
    BlockLoop::new(n, l.k_min(), coeffs).unwrap()
}

/// `Id + C/z` for the standard 2x2 point, `C = [[0, 0.2], [0.1, 0]]`.
pub fn standard_two_by_two() -> BlockLoop {
    let cm = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.2, 0.0), c(0.1, 0.0), c(0.0, 0.0)]);
    BlockLoop::new(2, -1, vec![cm, identity(2)]).unwrap()
}
