//! Chebyshev point families anchoring encoding, decoding and leakage analysis.
//!
//! * data points: first-kind nodes `cos((2j+1)π/(2K))` in (−1, 1)
//! * mask points: first-kind nodes shifted by `mask_shift`
//! * evaluation points: second-kind nodes `cos(jπ/(N−1))` in [−1, 1]

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default offset of the mask interpolation points.
pub const DEFAULT_MASK_SHIFT: f64 = 10.0;

/// Two points closer than this are treated as colliding.
pub const COLLISION_GUARD: f64 = 1e-12;

/// Returns `count` Chebyshev points of the first kind, in decreasing order.
pub fn chebyshev_first_kind(count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(invalid("chebyshev_first_kind requires count >= 1"));
    }
    let n = count as f64;
    Ok((0..count)
        .map(|j| {
            // Exact zero for the middle node of an odd family.
            if 2 * j + 1 == count {
                0.0
            } else {
                ((2 * j + 1) as f64 * PI / (2.0 * n)).cos()
            }
        })
        .collect())
}

/// Returns `count` Chebyshev points of the second kind: `1, ..., −1`.
pub fn chebyshev_second_kind(count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(invalid("chebyshev_second_kind requires count >= 2"));
    }
    let m = (count - 1) as f64;
    Ok((0..count)
        .map(|j| {
            if j == 0 {
                1.0
            } else if j == count - 1 {
                -1.0
            } else if 2 * j == count - 1 {
                0.0
            } else {
                (j as f64 * PI / m).cos()
            }
        })
        .collect())
}

/// First-kind points translated by `shift`.
pub fn shifted_first_kind(count: usize, shift: f64) -> Result<Vec<f64>> {
    Ok(chebyshev_first_kind(count)?
        .into_iter()
        .map(|x| x + shift)
        .collect())
}

/// The validated point families of one coded computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationGrid {
    k: usize,
    t: usize,
    n: usize,
    mask_shift: f64,
    alphas: Vec<f64>,
    zs: Vec<f64>,
}

impl InterpolationGrid {
    /// Builds and validates a grid with `k` data points, `t` mask points and
    /// `n` evaluation points.
    pub fn new(k: usize, t: usize, n: usize, mask_shift: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("grid needs at least one data point"));
        }
        if n < 2 {
            return Err(invalid("grid needs at least two evaluation points"));
        }
        if t > 0 && !(mask_shift.abs() > 2.0 && mask_shift.is_finite()) {
            return Err(Error::InvalidShift { shift: mask_shift });
        }
        let mut alphas = chebyshev_first_kind(k)?;
        if t > 0 {
            alphas.extend(shifted_first_kind(t, mask_shift)?);
        }
        let zs = chebyshev_second_kind(n)?;
        check_collisions(&alphas[..k], &zs)?;
        Ok(InterpolationGrid {
            k,
            t,
            n,
            mask_shift,
            alphas,
            zs,
        })
    }

    /// Number of data interpolation points.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of mask interpolation points.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of evaluation points (nodes).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask_shift(&self) -> f64 {
        self.mask_shift
    }

    /// All `k + t` interpolation points, data points first.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// The `k` data interpolation points.
    pub fn data_alphas(&self) -> &[f64] {
        &self.alphas[..self.k]
    }

    /// The `t` shifted mask interpolation points.
    pub fn mask_alphas(&self) -> &[f64] {
        &self.alphas[self.k..]
    }

    /// Evaluation point of every node.
    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    /// Evaluation point of node `j`.
    pub fn z(&self, j: usize) -> f64 {
        self.zs[j]
    }
}

/// Shorthand for [`InterpolationGrid::new`].
pub fn build_grid(k: usize, t: usize, n: usize, mask_shift: f64) -> Result<InterpolationGrid> {
    InterpolationGrid::new(k, t, n, mask_shift)
}

fn check_collisions(alphas: &[f64], zs: &[f64]) -> Result<()> {
    // Both families are sorted in decreasing order, so a merge walk finds the
    // closest pairs in linear time.
    let (mut i, mut j) = (0usize, 0usize);
    while i < alphas.len() && j < zs.len() {
        let (a, z) = (alphas[i], zs[j]);
        if a == z || (a - z).abs() < COLLISION_GUARD {
            return Err(Error::GridCollision {
                z_index: j,
                alpha_index: i,
                value: z,
            });
        }
        if a > z {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn first_kind_small_counts() {
        assert_eq!(chebyshev_first_kind(1).unwrap(), vec![0.0]);
        let two = chebyshev_first_kind(2).unwrap();
        assert!((two[0] - SQRT2_2).abs() < 1e-15 && (two[1] + SQRT2_2).abs() < 1e-15);
        let three = chebyshev_first_kind(3).unwrap();
        assert!((three[0] - 0.8660254037844387).abs() < 1e-15);
        assert_eq!(three[1], 0.0);
        assert!((three[2] + 0.8660254037844387).abs() < 1e-15);
        assert!(chebyshev_first_kind(0).is_err());
    }

    #[test]
    fn second_kind_small_counts() {
        assert_eq!(chebyshev_second_kind(2).unwrap(), vec![1.0, -1.0]);
        assert_eq!(chebyshev_second_kind(3).unwrap(), vec![1.0, 0.0, -1.0]);
        let four = chebyshev_second_kind(4).unwrap();
        assert!((four[1] - 0.5).abs() < 1e-15 && (four[2] + 0.5).abs() < 1e-15);
        assert!(chebyshev_second_kind(1).is_err());
    }

    #[test]
    fn shifted_points() {
        assert_eq!(shifted_first_kind(1, 10.0).unwrap(), vec![10.0]);
        let s = shifted_first_kind(2, 10.0).unwrap();
        assert!((s[0] - 10.707106781186548).abs() < 1e-14);
        assert!((s[1] - 9.292893218813452).abs() < 1e-14);
        assert_eq!(
            shifted_first_kind(2, 0.0).unwrap(),
            chebyshev_first_kind(2).unwrap()
        );
    }

    #[test]
    fn grid_construction() {
        let g = build_grid(2, 0, 4, 10.0).unwrap();
        assert_eq!(g.zs().len(), 4);
        assert!(matches!(
            build_grid(3, 0, 3, 10.0),
            Err(Error::GridCollision { .. })
        ));
        assert!(matches!(
            build_grid(2, 2, 4, 1.5),
            Err(Error::InvalidShift { .. })
        ));
        let op = build_grid(1000, 1000, 200, DEFAULT_MASK_SHIFT).unwrap();
        assert_eq!(op.alphas().len(), 2000);
        assert!(op.mask_alphas().iter().all(|&b| b > 9.0 && b < 11.0));
    }
}
