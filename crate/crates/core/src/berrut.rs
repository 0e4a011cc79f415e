//! Berrut rational encoding and decoding of data blocks.
//!
//! A data block `X` (K×L, row `i` is `X_i`) is encoded into the rational
//! function
//!
//! ```text
//! u(z) = Σ_i q_i(z) X_i,   q_i(z) = ((−1)^i / (z − α_i)) / Σ_j ((−1)^j / (z − α_j))
//! ```
//!
//! and node `j` receives `u(z_j)`. The private variant appends `T` Gaussian
//! mask rows anchored at the shifted points. A master recovers the data
//! points by Berrut-interpolating whatever node results arrive.
//!
//! ```
//! use pbacc::berrut::{decode, encode_plain};
//! use pbacc::grid::build_grid;
//! use nalgebra::DMatrix;
//!
//! let grid = build_grid(1, 0, 8, 10.0).unwrap();
//! let x = DMatrix::from_row_slice(1, 2, &[3.0, -4.0]);
//! let shares = encode_plain(&x, &grid).unwrap();
//! let out = decode(&shares, &grid).unwrap();
//! assert!((out.values[(0, 1)] + 4.0).abs() < 1e-12);
//! ```

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::grid::InterpolationGrid;
use crate::rng::{stream, Phase};

/// Distance below which an evaluation point is treated as the interpolation point.
pub const POLE_EPS: f64 = 1e-14;

/// Lebesgue constant above which a decode is flagged as ill-conditioned.
pub const ILL_CONDITIONED_LEBESGUE: f64 = 1e3;

/// A K×L block of real data; row `i` is `X_i`.
pub type DataBlock = DMatrix<f64>;

/// How the per-entry variance of the mask coefficients is derived from `sigma_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaskVariance {
    /// `sigma_n² / T`, so the total mask power is `sigma_n²`.
    #[default]
    Split,
    /// `sigma_n²` per entry.
    Full,
}

/// Configuration of the privacy masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub t: usize,
    pub sigma_n: f64,
    pub seed: u64,
    pub mask_shift: f64,
    #[serde(default)]
    pub variance: MaskVariance,
    /// Index of the random stream, e.g. the owning node.
    #[serde(default)]
    pub stream: u64,
}

impl MaskSpec {
    pub fn new(t: usize, sigma_n: f64, seed: u64) -> Self {
        MaskSpec {
            t,
            sigma_n,
            seed,
            mask_shift: crate::grid::DEFAULT_MASK_SHIFT,
            variance: MaskVariance::Split,
            stream: 0,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_variance(mut self, variance: MaskVariance) -> Self {
        self.variance = variance;
        self
    }

    /// Standard deviation of each mask entry.
    pub fn entry_std(&self) -> f64 {
        match self.variance {
            MaskVariance::Split => self.sigma_n / (self.t.max(1) as f64).sqrt(),
            MaskVariance::Full => self.sigma_n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.t > 0 && !(self.sigma_n > 0.0 && self.sigma_n.is_finite()) {
            return Err(invalid(
                "sigma_n must be positive and finite when masks are used",
            ));
        }
        Ok(())
    }
}

/// One node's encoded view.
#[derive(Debug, Clone, PartialEq)]
pub struct Share {
    pub node_index: usize,
    pub z: f64,
    pub payload: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ShareWire {
    node_index: usize,
    z: f64,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Share {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ShareWire {
            node_index: self.node_index,
            z: self.z,
            rows: self.payload.nrows(),
            cols: self.payload.ncols(),
            data: row_major(&self.payload),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Share {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let w = ShareWire::deserialize(deserializer)?;
        if w.rows * w.cols != w.data.len() {
            return Err(serde::de::Error::custom(format!(
                "share data has {} entries, expected {}x{}",
                w.data.len(),
                w.rows,
                w.cols
            )));
        }
        Ok(Share {
            node_index: w.node_index,
            z: w.z,
            payload: DMatrix::from_row_slice(w.rows, w.cols, &w.data),
        })
    }
}

/// Entries of `m` in row-major order.
pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Output of [`decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingResult {
    /// Approximations at the data points, stacked in data-point order.
    pub values: DMatrix<f64>,
    /// Node indices used, ascending.
    pub used_nodes: Vec<usize>,
    pub n: usize,
    /// `max_k Σ_i |q̂_i(α_k)|` over the fast set.
    pub lebesgue: f64,
}

impl DecodingResult {
    pub fn ill_conditioned(&self) -> bool {
        !(self.lebesgue < ILL_CONDITIONED_LEBESGUE)
    }
}

/// Berrut basis weights `q_i(z)` over `points`, written into `out`.
pub fn basis_weights_into(z: f64, points: &[f64], out: &mut [f64]) {
    debug_assert_eq!(points.len(), out.len());
    if let Some(hit) = points.iter().position(|&p| (z - p).abs() < POLE_EPS) {
        out.fill(0.0);
        out[hit] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for (i, (&p, o)) in points.iter().zip(out.iter_mut()).enumerate() {
        let term = if i % 2 == 0 { 1.0 } else { -1.0 } / (z - p);
        *o = term;
        denom += term;
    }
    for o in out.iter_mut() {
        *o /= denom;
    }
}

/// Berrut basis weights `q_i(z)` over `points`.
pub fn basis_weights(z: f64, points: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points.len()];
    basis_weights_into(z, points, &mut out);
    out
}

/// Matrix whose row `h` holds the basis weights at `zs[h]`.
pub fn weight_matrix(zs: &[f64], points: &[f64]) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(zs.len(), points.len());
    let mut row = vec![0.0; points.len()];
    for (h, &z) in zs.iter().enumerate() {
        basis_weights_into(z, points, &mut row);
        for (i, &v) in row.iter().enumerate() {
            w[(h, i)] = v;
        }
    }
    w
}

/// Draws the `T×cols` mask matrix described by `spec`.
pub fn sample_masks(spec: &MaskSpec, cols: usize) -> Result<DMatrix<f64>> {
    if spec.t == 0 {
        return Err(invalid("sample_masks requires T >= 1"));
    }
    spec.validate()?;
    sample_gaussian(
        spec.t,
        cols,
        spec.entry_std(),
        spec.seed,
        Phase::Mask,
        spec.stream,
    )
}

pub(crate) fn sample_gaussian(
    rows: usize,
    cols: usize,
    std: f64,
    seed: u64,
    phase: Phase,
    index: u64,
) -> Result<DMatrix<f64>> {
    let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
    let mut rng = stream(seed, phase, index);
    // Row-major fill so the draw order matches the serialized layout.
    let data: Vec<f64> = (0..rows * cols).map(|_| normal.sample(&mut rng)).collect();
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Encodes without masks: share `j` carries `u(z_j)`.
pub fn encode_plain(data: &DataBlock, grid: &InterpolationGrid) -> Result<Vec<Share>> {
    if grid.t() != 0 {
        return Err(invalid("encode_plain requires a grid without mask points"));
    }
    encode_packed(data, grid, 1, None)
}

/// Encodes with Gaussian masks sampled from `spec`.
pub fn encode_private(
    data: &DataBlock,
    grid: &InterpolationGrid,
    spec: &MaskSpec,
) -> Result<Vec<Share>> {
    if spec.t == 0 {
        return Err(invalid("encode_private requires T >= 1; use encode_plain"));
    }
    if grid.t() != spec.t {
        return Err(invalid(format!(
            "grid has T = {}, mask spec has T = {}",
            grid.t(),
            spec.t
        )));
    }
    let masks = sample_masks(spec, data.ncols())?;
    encode_packed(data, grid, 1, Some(&masks))
}

/// Encodes with the given mask rows (one per mask point).
pub fn encode_private_with_masks(
    data: &DataBlock,
    grid: &InterpolationGrid,
    masks: &DMatrix<f64>,
) -> Result<Vec<Share>> {
    encode_packed(data, grid, 1, Some(masks))
}

/// Packed encoding: `r` consecutive rows share one interpolation point.
///
/// The grid must hold `K/r` data points and `T/r` mask points, where `K` is
/// `data.nrows()` and `T` is `masks.nrows()`. Share payloads are `r×L`.
pub fn encode_packed(
    data: &DataBlock,
    grid: &InterpolationGrid,
    r: usize,
    masks: Option<&DMatrix<f64>>,
) -> Result<Vec<Share>> {
    let (k, l) = data.shape();
    if r == 0 || k % r != 0 {
        return Err(invalid(format!("packing r = {r} does not divide K = {k}")));
    }
    if k / r != grid.k() {
        return Err(invalid(format!(
            "data has {} packed rows, grid has K = {}",
            k / r,
            grid.k()
        )));
    }
    let mask_points = match masks {
        Some(m) => {
            if m.ncols() != l || m.nrows() % r != 0 {
                return Err(invalid("mask matrix shape does not match data and packing"));
            }
            m.nrows() / r
        }
        None => 0,
    };
    if mask_points != grid.t() {
        return Err(invalid(format!(
            "{} packed mask rows supplied, grid has T = {}",
            mask_points,
            grid.t()
        )));
    }
    let mut stacked = pack_rows(data, r);
    if let Some(m) = masks {
        stacked = stack(&stacked, &pack_rows(m, r));
    }
    let w = weight_matrix(grid.zs(), grid.alphas());
    let encoded = w * stacked;
    Ok((0..grid.n())
        .map(|j| Share {
            node_index: j,
            z: grid.z(j),
            payload: unpack_row(&encoded, j, r, l),
        })
        .collect())
}

/// Flattens each group of `r` rows of an `rows×L` matrix into one row of
/// length `r·L` (row-major inside the group).
pub(crate) fn pack_rows(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (rows, l) = m.shape();
    let p = rows / r;
    DMatrix::from_fn(p, r * l, |g, c| m[(g * r + c / l, c % l)])
}

pub(crate) fn unpack_row(m: &DMatrix<f64>, row: usize, r: usize, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, l, |a, c| m[(row, a * l + c)])
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Berrut-decodes node results at the grid's data points.
///
/// Results are sorted by node index before interpolation, so the output does
/// not depend on arrival order. Each result payload may be `r×L`; the decoded
/// blocks are stacked into a `(K·r)×L` matrix.
pub fn decode(results: &[Share], grid: &InterpolationGrid) -> Result<DecodingResult> {
    decode_at(results, grid.data_alphas())
}

/// Berrut-decodes node results at arbitrary query points.
pub fn decode_at(results: &[Share], queries: &[f64]) -> Result<DecodingResult> {
    if results.is_empty() {
        return Err(Error::InsufficientResults(
            "no node results to decode".into(),
        ));
    }
    let mut order: Vec<&Share> = results.iter().collect();
    order.sort_by_key(|s| s.node_index);
    let (r, l) = order[0].payload.shape();
    for pair in order.windows(2) {
        if pair[0].node_index == pair[1].node_index || pair[0].z == pair[1].z {
            return Err(invalid(format!(
                "duplicate result for node {} (z = {})",
                pair[1].node_index, pair[1].z
            )));
        }
    }
    if order.iter().any(|s| s.payload.shape() != (r, l)) {
        return Err(invalid("node results have inconsistent shapes"));
    }
    let nodes: Vec<f64> = order.iter().map(|s| s.z).collect();
    let w = weight_matrix(queries, &nodes);
    let lebesgue = w
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut received = DMatrix::zeros(order.len(), r * l);
    for (i, s) in order.iter().enumerate() {
        for a in 0..r {
            for c in 0..l {
                received[(i, a * l + c)] = s.payload[(a, c)];
            }
        }
    }
    let decoded = w * received;
    let values = DMatrix::from_fn(queries.len() * r, l, |row, c| {
        decoded[(row / r, (row % r) * l + c)]
    });
    Ok(DecodingResult {
        values,
        used_nodes: order.iter().map(|s| s.node_index).collect(),
        n: order.len(),
        lebesgue,
    })
}
