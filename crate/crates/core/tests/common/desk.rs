//! Desk-scale drivers for the coded matrix product, shared by the matrix
//! and acceptance suites.

use nalgebra::DMatrix;
use pbacc::berrut::MaskVariance;
use pbacc::grid::InterpolationGrid;
use pbacc::matrix::{self, MatrixMasking, RowPacking};
use pbacc::rng::{stream, Phase};
use rand::Rng;

pub fn random(rows: usize, cols: usize, seed: u64, lo: f64) -> DMatrix<f64> {
    let mut rng = stream(seed, Phase::Input, 7);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..1.0))
}

pub fn masking(seed: u64) -> MatrixMasking {
    MatrixMasking {
        sigma_n: 2.0,
        variance: MaskVariance::Full,
        seed,
    }
}

/// Runs the encode → worker_multiply path for every node and checks it
/// against the term-by-term oracle; returns the largest deviation.
pub fn worst_deviation(
    k: usize,
    d: usize,
    n: usize,
    packing: RowPacking,
    masked: bool,
    seed: u64,
) -> f64 {
    let p = k / packing.r;
    let s = if masked { p * packing.v } else { 0 };
    let g = InterpolationGrid::new(p, s, n, 10.0).unwrap();
    let a = random(k, d, seed, -1.0);
    let b = random(k, d, seed + 100, -1.0);
    let (ma, mb) = if masked {
        let m = masking(seed);
        (
            Some(m.sample(k, d, packing, Phase::MatrixA, 0).unwrap()),
            Some(m.sample(k, d, packing, Phase::MatrixB, 0).unwrap()),
        )
    } else {
        (None, None)
    };
    let ua = matrix::encode_packed(&a, &g, packing, ma.as_ref()).unwrap();
    let ub = matrix::encode_packed(&b, &g, packing, mb.as_ref()).unwrap();
    let (ra, rb) = (super::to_rows(&a), super::to_rows(&b));
    let (rma, rmb) = (
        ma.as_ref().map(super::to_rows),
        mb.as_ref().map(super::to_rows),
    );
    let mut worst = 0.0f64;
    for j in 0..n {
        let share = matrix::worker_multiply(&ua[j], &ub[j], &g, packing.r).unwrap();
        let q = super::berrut(g.z(j), g.alphas());
        let want = super::worker_oracle(
            &ra,
            &rb,
            rma.as_ref(),
            rmb.as_ref(),
            &q,
            packing.r,
            packing.v,
        );
        worst = worst.max(super::max_abs_diff(&share.payload, &want));
    }
    worst
}
