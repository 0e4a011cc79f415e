//! Approximate distributed matrix multiplication over Berrut-coded shares.
//!
//! The direct scheme approximates `A·Bᵀ` for `A, B` of shape K×d. Node `j`
//! receives coded copies whose row block `p` is scaled by `t_p(z_j)`:
//!
//! ```text
//! u_A(z)[p] = t_p(z)·A′_p + t_p(z)·Σ_v t_{P+pV+v}(z)·R′_{p,v}
//! ```
//!
//! It multiplies them, rescales column block `p′` by `1/t_{p′}(z)` and sums the
//! row blocks, yielding an `r×K` result that Berrut-decodes to the product.
//! The blocked scheme approximates `AᵀB` by running the direct scheme on
//! every pair of vertical column blocks.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::berrut::{basis_weights, decode, sample_gaussian, MaskVariance, Share};
use crate::error::{invalid, Error, Result};
use crate::grid::InterpolationGrid;
use crate::rng::Phase;

/// Smallest admissible magnitude of a rescaling weight.
pub const DEGENERATE_WEIGHT: f64 = 1e-14;

/// Coded copy of a K×d matrix held by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedMatrix {
    pub node_index: usize,
    pub z: f64,
    pub entries: DMatrix<f64>,
}

/// Rows per interpolation point and masks per packed row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowPacking {
    pub r: usize,
    /// Mask blocks per packed row block.
    pub v: usize,
}

impl RowPacking {
    pub fn new(r: usize, v: usize) -> Self {
        RowPacking { r, v }
    }

    /// One row per point, one mask per row.
    pub fn unpacked() -> Self {
        RowPacking { r: 1, v: 1 }
    }

    /// Data interpolation points `P = K / r`.
    pub fn data_points(&self, k: usize) -> Result<usize> {
        if self.r == 0 || !k.is_multiple_of(self.r) {
            return Err(invalid(format!(
                "packing r = {} does not divide K = {k}",
                self.r
            )));
        }
        Ok(k / self.r)
    }

    /// Mask interpolation points `S = P·V`.
    pub fn mask_points(&self, k: usize) -> Result<usize> {
        Ok(self.data_points(k)? * self.v)
    }
}

/// Gaussian mask configuration for a matrix operand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixMasking {
    pub sigma_n: f64,
    pub variance: MaskVariance,
    pub seed: u64,
}

impl MatrixMasking {
    fn entry_std(&self, mask_rows: usize) -> f64 {
        match self.variance {
            MaskVariance::Split => self.sigma_n / (mask_rows.max(1) as f64).sqrt(),
            MaskVariance::Full => self.sigma_n,
        }
    }

    /// Mask rows for an operand with `k` rows and `d` columns; one mask row per
    /// data row and per mask block.
    pub fn sample(
        &self,
        k: usize,
        d: usize,
        packing: RowPacking,
        phase: Phase,
        index: u64,
    ) -> Result<DMatrix<f64>> {
        let rows = k * packing.v;
        sample_gaussian(rows, d, self.entry_std(rows), self.seed, phase, index)
    }
}

fn check_grid(
    k: usize,
    grid: &InterpolationGrid,
    packing: RowPacking,
    masked: bool,
) -> Result<usize> {
    let p = packing.data_points(k)?;
    if grid.k() != p {
        return Err(invalid(format!(
            "grid has K = {}, packing needs {p} data points",
            grid.k()
        )));
    }
    let s = if masked { packing.mask_points(k)? } else { 0 };
    if grid.t() != s {
        return Err(invalid(format!(
            "grid has T = {}, expected {s} mask points",
            grid.t()
        )));
    }
    Ok(p)
}

/// Coded copy of `m` at evaluation point `z`, given the weights
/// `t = basis_weights(z, grid.alphas())`.
pub fn encode_matrix_share(
    m: &DMatrix<f64>,
    weights: &[f64],
    packing: RowPacking,
    masks: Option<&DMatrix<f64>>,
) -> DMatrix<f64> {
    let (k, d) = m.shape();
    let r = packing.r;
    let p_count = k / r;
    let mut out = m.clone();
    for p in 0..p_count {
        let tp = weights[p];
        for a in 0..r {
            let row = p * r + a;
            match masks {
                Some(rm) => {
                    for c in 0..d {
                        let mut noise = 0.0;
                        for v in 0..packing.v {
                            let block = p * packing.v + v;
                            noise += weights[p_count + block] * rm[(block * r + a, c)];
                        }
                        out[(row, c)] = tp * (m[(row, c)] + noise);
                    }
                }
                None => {
                    for c in 0..d {
                        out[(row, c)] *= tp;
                    }
                }
            }
        }
    }
    out
}

/// Fused worker step for one node: the result of [`worker_multiply`] on the
/// coded copies of `a` and `b`, without materializing them.
///
/// The folded left operand is `Σ_p t_p (A′_p + Σ_v t_{P+pV+v} R′_{p,v})` and
/// the rescaled right operand is `B + Σ_v t_{P+p′V+v} R′_{p′,v}` blockwise,
/// since the division by `t_{p′}` cancels the encoding scale.
pub fn node_product(
    z: f64,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    a_masks: Option<&DMatrix<f64>>,
    b_masks: Option<&DMatrix<f64>>,
    weights: &[f64],
    packing: RowPacking,
) -> Result<DMatrix<f64>> {
    let r = packing.r;
    let (k, d) = a.shape();
    let p_count = k / r;
    let mut folded = DMatrix::zeros(r, d);
    for p in 0..p_count {
        let tp = weights[p];
        folded += a.rows(p * r, r) * tp;
        if let Some(rm) = a_masks {
            for v in 0..packing.v {
                let block = p * packing.v + v;
                folded += rm.rows(block * r, r) * (tp * weights[p_count + block]);
            }
        }
    }
    if b.shape() != (k, d) {
        return Err(invalid("A and B must have the same shape"));
    }
    for (p, &t) in weights.iter().take(p_count).enumerate() {
        if t.abs() < DEGENERATE_WEIGHT {
            return Err(Error::DegenerateWeight {
                z,
                column: p,
                weight: t,
            });
        }
    }
    let product = match b_masks {
        None => b * folded.transpose(),
        Some(rm) => {
            let mut rescaled = b.clone();
            for p in 0..p_count {
                for v in 0..packing.v {
                    let block = p * packing.v + v;
                    let mut dst = rescaled.rows_mut(p * r, r);
                    dst += rm.rows(block * r, r) * weights[p_count + block];
                }
            }
            rescaled * folded.transpose()
        }
    };
    Ok(product.transpose())
}

/// Encodes `m` (K×d) for every node, with `r = 1` and one mask row per data row.
pub fn encode_matrix_rows(
    m: &DMatrix<f64>,
    grid: &InterpolationGrid,
    masks: Option<&DMatrix<f64>>,
) -> Result<Vec<CodedMatrix>> {
    encode_packed(m, grid, RowPacking::unpacked(), masks)
}

/// Encodes `m` with `r` rows per interpolation point.
pub fn encode_packed(
    m: &DMatrix<f64>,
    grid: &InterpolationGrid,
    packing: RowPacking,
    masks: Option<&DMatrix<f64>>,
) -> Result<Vec<CodedMatrix>> {
    let (k, d) = m.shape();
    check_grid(k, grid, packing, masks.is_some())?;
    if let Some(rm) = masks {
        if rm.shape() != (k * packing.v, d) {
            return Err(invalid(format!(
                "mask matrix is {}x{}, expected {}x{d}",
                rm.nrows(),
                rm.ncols(),
                k * packing.v
            )));
        }
    }
    Ok((0..grid.n())
        .map(|j| {
            let w = basis_weights(grid.z(j), grid.alphas());
            CodedMatrix {
                node_index: j,
                z: grid.z(j),
                entries: encode_matrix_share(m, &w, packing, masks),
            }
        })
        .collect())
}

/// Worker step: `Σ_p (u_A u_Bᵀ)[p-th row block]` with column block `p′`
/// divided by `t_{p′}(z)`, returned as an `r×K` share.
///
/// Computed as `(Σ_p u_A[p]) · (u_B / t)ᵀ`, which costs `r·d·K` instead of
/// `K²·d`.
pub fn worker_multiply(
    ua: &CodedMatrix,
    ub: &CodedMatrix,
    grid: &InterpolationGrid,
    r: usize,
) -> Result<Share> {
    if ua.z != ub.z || ua.node_index != ub.node_index {
        return Err(invalid("coded operands belong to different nodes"));
    }
    let (k, d) = ua.entries.shape();
    if ub.entries.ncols() != d {
        return Err(invalid("operands disagree on the inner dimension"));
    }
    if r == 0 || k % r != 0 || !ub.entries.nrows().is_multiple_of(r) {
        return Err(invalid(format!(
            "packing r = {r} does not divide the row counts"
        )));
    }
    let weights = basis_weights(ua.z, grid.alphas());
    let (pa, pb) = (k / r, ub.entries.nrows() / r);
    if pa > grid.k() || pb > grid.k() {
        return Err(invalid(
            "operand has more row blocks than the grid has data points",
        ));
    }
    let mut folded = DMatrix::zeros(r, d);
    for p in 0..pa {
        folded += ua.entries.rows(p * r, r);
    }
    let mut rescaled = ub.entries.clone();
    for p in 0..pb {
        let t = weights[p];
        if t.abs() < DEGENERATE_WEIGHT {
            return Err(Error::DegenerateWeight {
                z: ua.z,
                column: p,
                weight: t,
            });
        }
        rescaled.rows_mut(p * r, r).scale_mut(1.0 / t);
    }
    Ok(Share {
        node_index: ua.node_index,
        z: ua.z,
        payload: folded * rescaled.transpose(),
    })
}

/// Decodes worker results into the `K×K` approximation of `A·Bᵀ`.
pub fn decode_product(row_shares: &[Share], grid: &InterpolationGrid) -> Result<DMatrix<f64>> {
    Ok(decode(row_shares, grid)?.values)
}

// ---------------------------------------------------------------------------
// Block partition

/// How block pairs are mapped onto nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockAssignment {
    /// Each pair gets its own group of `⌊N / b²⌋` nodes.
    Disjoint,
    /// Every node computes every pair; each block is decoded from all fast nodes.
    #[default]
    Replicated,
}

/// Assignment of `(x, y)` block pairs to nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub block_count: usize,
    pub cols_per_block: usize,
    pub assignment: BlockAssignment,
    /// Nodes serving pair `(x, y)`, at index `x·b + y`.
    pub groups: Vec<Vec<usize>>,
}

impl BlockPlan {
    pub fn group(&self, x: usize, y: usize) -> &[usize] {
        &self.groups[x * self.block_count + y]
    }

    /// All `(x, y)` pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let b = self.block_count;
        (0..b * b).map(move |i| (i / b, i % b))
    }
}

/// Splits `A` and `B` (both `K×L`) into `b` vertical blocks and maps the `b²`
/// block pairs onto `node_count` nodes.
pub fn plan_blocks(
    a_shape: (usize, usize),
    b_shape: (usize, usize),
    block_count: usize,
    node_count: usize,
    assignment: BlockAssignment,
) -> Result<BlockPlan> {
    if a_shape.0 != b_shape.0 {
        return Err(invalid("A and B must have the same number of rows"));
    }
    let l = a_shape.1;
    if b_shape.1 != l {
        return Err(invalid("A and B must have the same number of columns"));
    }
    if block_count == 0 || !l.is_multiple_of(block_count) {
        return Err(invalid(format!(
            "block count {block_count} does not divide L = {l}"
        )));
    }
    let pairs = block_count * block_count;
    if node_count < pairs {
        return Err(Error::Capacity {
            needed: pairs,
            available: node_count,
        });
    }
    let groups = match assignment {
        BlockAssignment::Disjoint => {
            let size = node_count / pairs;
            (0..pairs)
                .map(|g| (g * size..(g + 1) * size).collect())
                .collect()
        }
        BlockAssignment::Replicated => vec![(0..node_count).collect(); pairs],
    };
    Ok(BlockPlan {
        block_count,
        cols_per_block: l / block_count,
        assignment,
        groups,
    })
}

/// Assembles the decoded `h×h` blocks of `AᵀB` into the `L×L` product.
pub fn assemble_blocks(
    decoded: &BTreeMap<(usize, usize), DMatrix<f64>>,
    plan: &BlockPlan,
) -> Result<DMatrix<f64>> {
    let missing: Vec<(usize, usize)> = plan.pairs().filter(|p| !decoded.contains_key(p)).collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteAssembly { missing });
    }
    let h = plan.cols_per_block;
    let l = h * plan.block_count;
    let mut out = DMatrix::zeros(l, l);
    for ((x, y), block) in decoded {
        if block.shape() != (h, h) {
            return Err(invalid(format!("block ({x}, {y}) is not {h}x{h}")));
        }
        out.view_mut((x * h, y * h), (h, h)).copy_from(block);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pipelines

/// Parameters shared by the direct and blocked pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductSetup {
    pub nodes: usize,
    pub packing: RowPacking,
    pub mask_shift: f64,
    pub masking: Option<MatrixMasking>,
}

/// Node results of one coded product before decoding.
#[derive(Debug, Clone)]
pub struct WorkerOutputs {
    pub grid: InterpolationGrid,
    /// One `r×K` share per node, indexed by node.
    pub shares: Vec<Share>,
}

impl WorkerOutputs {
    /// Decodes from the given node subset (local node indices).
    pub fn decode_from(&self, fast: &[usize]) -> Result<DMatrix<f64>> {
        let chosen: Vec<Share> = fast.iter().map(|&j| self.shares[j].clone()).collect();
        decode_product(&chosen, &self.grid)
    }
}

/// Every node result is a bilinear combination of the blocks of
/// `G = [A; R_A]·[B; R_B]ᵀ`, so the simulator forms `G` once and combines its
/// blocks with each node's weights. Equal to [`node_product`] up to rounding.
struct GramCombiner {
    gram: DMatrix<f64>,
    k: usize,
    packing: RowPacking,
    masked: bool,
}

impl GramCombiner {
    fn new(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        a_masks: Option<&DMatrix<f64>>,
        b_masks: Option<&DMatrix<f64>>,
        packing: RowPacking,
    ) -> Self {
        let stack = |m: &DMatrix<f64>, masks: Option<&DMatrix<f64>>| match masks {
            None => m.clone(),
            Some(rm) => {
                let mut out = DMatrix::zeros(m.nrows() + rm.nrows(), m.ncols());
                out.rows_mut(0, m.nrows()).copy_from(m);
                out.rows_mut(m.nrows(), rm.nrows()).copy_from(rm);
                out
            }
        };
        let left = stack(a, a_masks);
        let right = stack(b, b_masks);
        GramCombiner {
            gram: &left * right.transpose(),
            k: a.nrows(),
            packing,
            masked: a_masks.is_some() && b_masks.is_some(),
        }
    }

    fn node_result(&self, z: f64, weights: &[f64]) -> Result<DMatrix<f64>> {
        let (k, r, v_count) = (self.k, self.packing.r, self.packing.v);
        let p_count = k / r;
        for (p, &t) in weights.iter().take(p_count).enumerate() {
            if t.abs() < DEGENERATE_WEIGHT {
                return Err(Error::DegenerateWeight {
                    z,
                    column: p,
                    weight: t,
                });
            }
        }
        let mut folded = DMatrix::zeros(r, self.gram.ncols());
        for p in 0..p_count {
            let tp = weights[p];
            folded += self.gram.rows(p * r, r) * tp;
            if self.masked {
                for v in 0..v_count {
                    let block = p * v_count + v;
                    folded += self.gram.rows(k + block * r, r) * (tp * weights[p_count + block]);
                }
            }
        }
        let mut out = folded.columns(0, k).into_owned();
        if self.masked {
            for p in 0..p_count {
                let mut dst = out.columns_mut(p * r, r);
                for v in 0..v_count {
                    let block = p * v_count + v;
                    dst += folded.columns(k + block * r, r) * weights[p_count + block];
                }
            }
        }
        Ok(out)
    }
}

/// Runs every node of the direct scheme for `A·Bᵀ` (`A`, `B` both K×d) and
/// returns the per-node results. Masks are drawn from the `(MatrixA, index)`
/// and `(MatrixB, index)` streams.
pub fn direct_workers(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    setup: &ProductSetup,
    nodes: usize,
    a_index: u64,
    b_index: u64,
) -> Result<WorkerOutputs> {
    let (k, d) = a.shape();
    if b.ncols() != d {
        return Err(invalid("A and B must share the inner dimension"));
    }
    if b.nrows() != k {
        return Err(invalid("A and B must have the same number of rows"));
    }
    let packing = setup.packing;
    let p = packing.data_points(k)?;
    let s = if setup.masking.is_some() {
        packing.mask_points(k)?
    } else {
        0
    };
    let grid = InterpolationGrid::new(p, s, nodes, setup.mask_shift)?;
    let (ma, mb) = match setup.masking {
        Some(m) => (
            Some(m.sample(k, d, packing, Phase::MatrixA, a_index)?),
            Some(m.sample(k, d, packing, Phase::MatrixB, b_index)?),
        ),
        None => (None, None),
    };
    let gram = GramCombiner::new(a, b, ma.as_ref(), mb.as_ref(), packing);
    let shares = (0..nodes)
        .map(|j| {
            let w = basis_weights(grid.z(j), grid.alphas());
            Ok(Share {
                node_index: j,
                z: grid.z(j),
                payload: gram.node_result(grid.z(j), &w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WorkerOutputs { grid, shares })
}

/// Direct pipeline: approximates `A·Bᵀ` decoding from the `fast` nodes.
pub fn direct_product(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    setup: &ProductSetup,
    fast: &[usize],
) -> Result<DMatrix<f64>> {
    direct_workers(a, b, setup, setup.nodes, 0, 0)?.decode_from(fast)
}

/// Per-pair node results of the blocked scheme.
#[derive(Debug, Clone)]
pub struct BlockedOutputs {
    pub plan: BlockPlan,
    pub pairs: BTreeMap<(usize, usize), WorkerOutputs>,
}

impl BlockedOutputs {
    /// Decodes every block from the fast nodes of its group and assembles `AᵀB`.
    pub fn decode_from(&self, fast: &[usize]) -> Result<DMatrix<f64>> {
        let mut decoded = BTreeMap::new();
        for (&(x, y), outputs) in &self.pairs {
            let group = self.plan.group(x, y);
            let local: Vec<usize> = group
                .iter()
                .enumerate()
                .filter(|(_, g)| fast.binary_search(g).is_ok())
                .map(|(i, _)| i)
                .collect();
            if local.is_empty() {
                return Err(Error::InsufficientResults(format!(
                    "block ({x}, {y}) has no fast node"
                )));
            }
            decoded.insert((x, y), outputs.decode_from(&local)?);
        }
        assemble_blocks(&decoded, &self.plan)
    }
}

/// Runs every node of the blocked scheme for `AᵀB` (`A`, `B` both K×L).
///
/// Pair `(x, y)` runs the direct scheme on `Â_xᵀ` and `B̂_yᵀ`; the masks of
/// `Â_x` and `B̂_y` are drawn once per block, so `b = 1` reproduces the direct
/// pipeline on `(Aᵀ, Bᵀ)`.
pub fn blocked_workers(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    plan: &BlockPlan,
    setup: &ProductSetup,
) -> Result<BlockedOutputs> {
    let h = plan.cols_per_block;
    let mut pairs = BTreeMap::new();
    for (x, y) in plan.pairs() {
        let ax = a.columns(x * h, h).transpose();
        let by = b.columns(y * h, h).transpose();
        let nodes = plan.group(x, y).len();
        pairs.insert(
            (x, y),
            direct_workers(&ax, &by, setup, nodes, x as u64, y as u64)?,
        );
    }
    Ok(BlockedOutputs {
        plan: plan.clone(),
        pairs,
    })
}

/// Blocked pipeline: approximates `AᵀB` decoding from the `fast` nodes
/// (sorted global node indices).
pub fn blocked_product(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    plan: &BlockPlan,
    setup: &ProductSetup,
    fast: &[usize],
) -> Result<DMatrix<f64>> {
    blocked_workers(a, b, plan, setup)?.decode_from(fast)
}
