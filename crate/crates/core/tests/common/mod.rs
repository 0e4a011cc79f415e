//! Reference implementations used as test oracles. These are written directly
//! from the closed-form definitions, with plain loops and no shared code.

#![allow(dead_code)]

use std::f64::consts::PI;

pub mod desk;

pub fn cheb1(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| ((2 * i + 1) as f64 * PI / (2 * k) as f64).cos())
        .collect()
}

pub fn cheb2(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| (j as f64 * PI / (n - 1) as f64).cos())
        .collect()
}

/// Whether some data point and evaluation point coincide within 1e-12.
pub fn collides(k: usize, n: usize) -> bool {
    let zs = cheb2(n);
    cheb1(k)
        .iter()
        .any(|a| zs.iter().any(|z| (z - a).abs() <= 1e-12))
}

/// Berrut basis at `z` over `points`, evaluated from the quotient formula.
pub fn berrut(z: f64, points: &[f64]) -> Vec<f64> {
    if let Some(hit) = points.iter().position(|&p| p == z) {
        let mut w = vec![0.0; points.len()];
        w[hit] = 1.0;
        return w;
    }
    let terms: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, &p)| if i % 2 == 0 { 1.0 } else { -1.0 } / (z - p))
        .collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

pub type Mat = Vec<Vec<f64>>;

pub fn zeros(rows: usize, cols: usize) -> Mat {
    vec![vec![0.0; cols]; rows]
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, p);
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: Mat) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        if a[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            a.swap(piv, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

pub fn to_rows(m: &nalgebra::DMatrix<f64>) -> Mat {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<f64>, b: &Mat) -> f64 {
    assert_eq!(a.nrows(), b.len());
    let mut worst = 0.0f64;
    for (i, row) in b.iter().enumerate() {
        assert_eq!(a.ncols(), row.len());
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((a[(i, j)] - v).abs());
        }
    }
    worst
}

/// Worker result for one node written out term by term: scale row `i` of the
/// masked operands by `q_i(z)`, form every product block, divide column block
/// `j` by `q_j(z)` and add up the row blocks.
pub fn worker_oracle(
    a: &Mat,
    b: &Mat,
    a_masks: Option<&Mat>,
    b_masks: Option<&Mat>,
    q: &[f64],
    r: usize,
    v: usize,
) -> Mat {
    let k = a.len();
    let d = a[0].len();
    let p_count = k / r;
    let coded = |m: &Mat, masks: Option<&Mat>| -> Mat {
        let mut out = zeros(k, d);
        for p in 0..p_count {
            for s in 0..r {
                let row = p * r + s;
                for c in 0..d {
                    let mut value = m[row][c];
                    if let Some(rm) = masks {
                        for w in 0..v {
                            let block = p * v + w;
                            value += q[p_count + block] * rm[block * r + s][c];
                        }
                    }
                    out[row][c] = q[p] * value;
                }
            }
        }
        out
    };
    let ua = coded(a, a_masks);
    let ub = coded(b, b_masks);
    let full = matmul(&ua, &transpose(&ub));
    let mut out = zeros(r, k);
    for p in 0..p_count {
        for s in 0..r {
            for col in 0..k {
                out[s][col] += full[p * r + s][col] / q[col / r];
            }
        }
    }
    out
}
