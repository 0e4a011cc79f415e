//! Three-phase multi-input secret sharing (PBSS) and its baselines.
//!
//! 1. Every node Berrut-encodes its own input, optionally masked, and sends
//!    the share at `z_j` to node `j`.
//! 2. Node `j` combines the `N` shares it received, e.g. `Σ_i f(share_i)` or
//!    an elementwise median.
//! 3. The master decodes the data points from the fast nodes' results.
//!
//! BSS is the same protocol without masks; BSS+DP perturbs the raw inputs with
//! Gaussian noise and then runs BSS.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::berrut::{decode, encode_packed, sample_masks, MaskSpec, Share};
use crate::error::{invalid, Error, Result};
use crate::grid::InterpolationGrid;
use crate::rng::{stream, Phase};

/// Exact values with magnitude below this are excluded from the RME.
pub const RME_ZERO_GUARD: f64 = 1e-12;

/// Inputs are kept at least this fraction of the amplitude away from zero.
pub const INPUT_ZERO_MARGIN: f64 = 1e-6;

/// Function evaluated by the nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionId {
    Relu,
    Sigmoid,
    Swish,
    BinaryStep,
    Median,
    Identity,
    Matmul,
}

impl FunctionId {
    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Relu => "relu",
            FunctionId::Sigmoid => "sigmoid",
            FunctionId::Swish => "swish",
            FunctionId::BinaryStep => "binary_step",
            FunctionId::Median => "median",
            FunctionId::Identity => "identity",
            FunctionId::Matmul => "matmul",
        }
    }

    /// Applies a pointwise function; `None` for aggregates.
    pub fn pointwise(self, x: f64) -> Option<f64> {
        match self {
            FunctionId::Relu => Some(relu(x)),
            FunctionId::Sigmoid => Some(sigmoid(x)),
            FunctionId::Swish => Some(swish(x)),
            FunctionId::BinaryStep => Some(binary_step(x)),
            FunctionId::Identity => Some(x),
            FunctionId::Median | FunctionId::Matmul => None,
        }
    }
}

impl std::fmt::Display for FunctionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn swish(x: f64) -> f64 {
    x * sigmoid(x)
}

/// `1` for `x > 0`, else `0`.
pub fn binary_step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Median of `values`; the mean of the two central values for even counts.
pub fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    assert!(n > 0, "median of an empty slice");
    values.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// How node `j` merges the shares it received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    SumOverNodes,
    ElementwiseMedianOverNodes,
}

/// Target aggregate of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateSpec {
    pub function: FunctionId,
    pub combine: Combine,
}

impl AggregateSpec {
    /// Pairs the function with its combine rule.
    pub fn new(function: FunctionId) -> Self {
        let combine = match function {
            FunctionId::Median => Combine::ElementwiseMedianOverNodes,
            _ => Combine::SumOverNodes,
        };
        AggregateSpec { function, combine }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.function, self.combine) {
            (FunctionId::Median, Combine::ElementwiseMedianOverNodes) => Ok(()),
            (FunctionId::Median, _) | (_, Combine::ElementwiseMedianOverNodes) => Err(invalid(
                "median must pair with the elementwise median combine rule",
            )),
            (FunctionId::Matmul, _) => {
                Err(invalid("matrix products run through the matrix pipelines"))
            }
            _ => Ok(()),
        }
    }
}

/// One node's private input.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInput {
    pub node_index: usize,
    pub data: DMatrix<f64>,
}

/// Which nodes fail to report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StragglerModel {
    None,
    /// `count` uniformly random stragglers.
    Random {
        count: usize,
        seed: u64,
    },
    /// Explicit straggler set.
    Fixed(Vec<usize>),
}

impl StragglerModel {
    /// Sorted indices of the nodes whose results reach the master.
    pub fn fast_set(&self, n: usize) -> Result<Vec<usize>> {
        let fast: Vec<usize> = match self {
            StragglerModel::None => (0..n).collect(),
            StragglerModel::Random { count, seed } => {
                if *count >= n {
                    return Err(Error::InsufficientResults(format!(
                        "{count} stragglers out of {n} nodes"
                    )));
                }
                let mut rng = stream(*seed, Phase::Stragglers, n as u64);
                let slow = sample(&mut rng, n, *count).into_vec();
                let mut mark = vec![true; n];
                for s in slow {
                    mark[s] = false;
                }
                (0..n).filter(|&j| mark[j]).collect()
            }
            StragglerModel::Fixed(slow) => (0..n).filter(|j| !slow.contains(j)).collect(),
        };
        if fast.is_empty() {
            return Err(Error::InsufficientResults(
                "every node is a straggler".into(),
            ));
        }
        Ok(fast)
    }
}

/// Outcome of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(skip)]
    pub decoded: DMatrix<f64>,
    #[serde(skip)]
    pub exact: DMatrix<f64>,
    pub rme: f64,
    /// Exact entries skipped by the RME zero guard.
    pub zero_excluded: usize,
    pub n_used: usize,
    pub lebesgue: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Mean relative error with the count of excluded entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmeStats {
    pub value: f64,
    pub excluded: usize,
}

/// `mean |(approx − exact) / exact|` over entries with `|exact| ≥ 1e−12`.
pub fn rme_stats(approx: &DMatrix<f64>, exact: &DMatrix<f64>) -> Result<RmeStats> {
    if approx.shape() != exact.shape() {
        return Err(invalid("approximation and exact result differ in shape"));
    }
    let mut total = 0.0;
    let mut used = 0usize;
    for (a, y) in approx.iter().zip(exact.iter()) {
        if y.abs() < RME_ZERO_GUARD {
            continue;
        }
        total += ((a - y) / y).abs();
        used += 1;
    }
    if used == 0 {
        return Err(invalid("every exact entry is zero; RME undefined"));
    }
    Ok(RmeStats {
        value: total / used as f64,
        excluded: exact.len() - used,
    })
}

/// Normalized relative mean error.
pub fn rme(approx: &DMatrix<f64>, exact: &DMatrix<f64>) -> Result<f64> {
    Ok(rme_stats(approx, exact)?.value)
}

/// Uncoded computation of the aggregate.
pub fn exact_reference(inputs: &[NodeInput], spec: &AggregateSpec) -> Result<DMatrix<f64>> {
    let first = inputs.first().ok_or_else(|| invalid("no inputs"))?;
    let (k, l) = first.data.shape();
    if inputs.iter().any(|x| x.data.shape() != (k, l)) && spec.function != FunctionId::Matmul {
        return Err(invalid("inputs disagree in shape"));
    }
    Ok(match spec.function {
        FunctionId::Median => {
            let mut column = vec![0.0; inputs.len()];
            DMatrix::from_fn(k, l, |r, c| {
                for (slot, x) in column.iter_mut().zip(inputs) {
                    *slot = x.data[(r, c)];
                }
                median(&mut column)
            })
        }
        FunctionId::Matmul => {
            if inputs.len() != 2 {
                return Err(invalid("matmul reference takes exactly two inputs"));
            }
            &inputs[0].data * inputs[1].data.transpose()
        }
        f => {
            let mut acc = DMatrix::zeros(k, l);
            for x in inputs {
                acc += x.data.map(|v| f.pointwise(v).unwrap_or(v));
            }
            acc
        }
    })
}

/// Range of the generated inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputRange {
    /// `U(−s, s)`.
    Symmetric,
    /// `U(0, s)`.
    Nonnegative,
}

/// Uniform K×L inputs for every node, kept `1e−6·s` away from zero.
pub fn generate_inputs(
    nodes: usize,
    k: usize,
    l: usize,
    amplitude: f64,
    range: InputRange,
    seed: u64,
) -> Result<Vec<NodeInput>> {
    (0..nodes)
        .map(|i| {
            let data = uniform_matrix(k, l, amplitude, range, seed, Phase::Input, i as u64)?;
            Ok(NodeInput {
                node_index: i,
                data,
            })
        })
        .collect()
}

/// Uniform matrix drawn from the `(phase, index)` stream; entries lie away
/// from zero by `1e−6·s`.
pub fn uniform_matrix(
    rows: usize,
    cols: usize,
    amplitude: f64,
    range: InputRange,
    seed: u64,
    phase: Phase,
    index: u64,
) -> Result<DMatrix<f64>> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude must be positive"));
    }
    let lo = match range {
        InputRange::Symmetric => -amplitude,
        InputRange::Nonnegative => 0.0,
    };
    let dist = Uniform::new(lo, amplitude).map_err(|e| invalid(e.to_string()))?;
    let margin = INPUT_ZERO_MARGIN * amplitude;
    let mut rng = stream(seed, phase, index);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| loop {
            let x = dist.sample(&mut rng);
            if x.abs() >= margin {
                break x;
            }
        })
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Sparse matrix: each entry is nonzero with probability `density`, nonzeros
/// uniform as in [`uniform_matrix`].
pub fn sparse_matrix(
    rows: usize,
    cols: usize,
    amplitude: f64,
    range: InputRange,
    density: f64,
    seed: u64,
    phase: Phase,
    index: u64,
) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid("density must lie in [0, 1]"));
    }
    let values = uniform_matrix(rows, cols, amplitude, range, seed, phase, index)?;
    let mut rng = stream(seed, phase, index ^ (1 << 63));
    let mask: Vec<bool> = (0..rows * cols)
        .map(|_| rng.random::<f64>() < density)
        .collect();
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        if mask[r * cols + c] {
            values[(r, c)]
        } else {
            0.0
        }
    }))
}

/// Adds i.i.d. `N(0, σ_dp²)` noise to every input, one stream per node.
pub fn perturb_inputs(inputs: &[NodeInput], sigma_dp: f64, seed: u64) -> Result<Vec<NodeInput>> {
    if !(sigma_dp > 0.0 && sigma_dp.is_finite()) {
        return Err(invalid("sigma_dp must be positive"));
    }
    let normal = Normal::new(0.0, sigma_dp).map_err(|e| invalid(e.to_string()))?;
    Ok(inputs
        .iter()
        .map(|x| {
            let mut rng = stream(seed, Phase::DpNoise, x.node_index as u64);
            let (k, l) = x.data.shape();
            let noise: Vec<f64> = (0..k * l).map(|_| normal.sample(&mut rng)).collect();
            NodeInput {
                node_index: x.node_index,
                data: &x.data + DMatrix::from_row_slice(k, l, &noise),
            }
        })
        .collect())
}

/// Full protocol; `mask = None` runs BSS. Shares and results are written to
/// `trace` as JSON lines when given.
pub fn run_protocol(
    inputs: &[NodeInput],
    grid: &InterpolationGrid,
    r: usize,
    mask: Option<&MaskSpec>,
    spec: &AggregateSpec,
    stragglers: &StragglerModel,
    mut trace: Option<&mut dyn Write>,
) -> Result<RunReport> {
    let start = Instant::now();
    spec.validate()?;
    let n = grid.n();
    if inputs.len() != n {
        return Err(invalid(format!("{} inputs for {n} nodes", inputs.len())));
    }
    let (k, l) = inputs[0].data.shape();
    if inputs
        .iter()
        .enumerate()
        .any(|(i, x)| x.node_index != i || x.data.shape() != (k, l))
    {
        return Err(invalid("inputs must be indexed 0..N with a common shape"));
    }
    if let Some(m) = mask {
        if m.t == 0 || m.t % r != 0 || m.t / r != grid.t() {
            return Err(invalid(format!(
                "mask count {} does not match the grid (T = {}, r = {r})",
                m.t,
                grid.t()
            )));
        }
    } else if grid.t() != 0 {
        return Err(invalid("unmasked runs need a grid without mask points"));
    }
    let fast = stragglers.fast_set(n)?;

    // Phase 1 and 2. results[j] accumulates node j's combined value.
    let width = r * l;
    let median_mode = spec.combine == Combine::ElementwiseMedianOverNodes;
    let mut sums = vec![vec![0.0; width]; n];
    let mut received = if median_mode {
        vec![vec![0.0; n * width]; n]
    } else {
        Vec::new()
    };
    for (i, x) in inputs.iter().enumerate() {
        let masks = match mask {
            Some(m) => Some(sample_masks(&m.with_stream(i as u64), l)?),
            None => None,
        };
        let shares = encode_packed(&x.data, grid, r, masks.as_ref())?;
        for (j, share) in shares.iter().enumerate() {
            if let Some(w) = trace.as_deref_mut() {
                writeln!(
                    w,
                    "{}",
                    json!({"phase": 1, "from": i, "to": j, "share": share})
                )?;
            }
            let flat = share.payload.transpose();
            if median_mode {
                received[j][i * width..(i + 1) * width].copy_from_slice(flat.as_slice());
            } else {
                for (acc, &v) in sums[j].iter_mut().zip(flat.iter()) {
                    *acc += spec.function.pointwise(v).unwrap_or(v);
                }
            }
        }
    }
    if median_mode {
        let mut column = vec![0.0; n];
        for j in 0..n {
            for e in 0..width {
                for i in 0..n {
                    column[i] = received[j][i * width + e];
                }
                sums[j][e] = median(&mut column);
            }
        }
    }

    // Phase 3.
    let results: Vec<Share> = fast
        .iter()
        .map(|&j| Share {
            node_index: j,
            z: grid.z(j),
            payload: DMatrix::from_row_slice(r, l, &sums[j]),
        })
        .collect();
    if let Some(w) = trace.as_deref_mut() {
        for s in &results {
            writeln!(
                w,
                "{}",
                json!({"phase": 2, "from": s.node_index, "to": "master", "share": s})
            )?;
        }
    }
    let decoded = decode(&results, grid)?;
    if let Some(w) = trace {
        writeln!(
            w,
            "{}",
            json!({"phase": 3, "used_nodes": decoded.used_nodes, "lebesgue": decoded.lebesgue})
        )?;
    }
    let exact = exact_reference(inputs, spec)?;
    let stats = rme_stats(&decoded.values, &exact)?;
    Ok(RunReport {
        decoded: decoded.values,
        exact,
        rme: stats.value,
        zero_excluded: stats.excluded,
        n_used: decoded.n,
        lebesgue: decoded.lebesgue,
        wall_time: start.elapsed(),
    })
}

/// PBSS: masked sharing with one mask stream per node.
pub fn run_pbss(
    inputs: &[NodeInput],
    grid: &InterpolationGrid,
    mask: &MaskSpec,
    spec: &AggregateSpec,
    stragglers: &StragglerModel,
    r: usize,
) -> Result<RunReport> {
    run_protocol(inputs, grid, r, Some(mask), spec, stragglers, None)
}

/// BSS: unmasked sharing.
pub fn run_bss(
    inputs: &[NodeInput],
    grid: &InterpolationGrid,
    spec: &AggregateSpec,
    stragglers: &StragglerModel,
    r: usize,
) -> Result<RunReport> {
    run_protocol(inputs, grid, r, None, spec, stragglers, None)
}

/// BSS+DP: inputs perturbed by `N(0, σ_dp²)` before unmasked sharing; the
/// RME is measured against the aggregate of the clean inputs.
pub fn run_bss_dp(
    inputs: &[NodeInput],
    grid: &InterpolationGrid,
    spec: &AggregateSpec,
    stragglers: &StragglerModel,
    r: usize,
    sigma_dp: f64,
    seed: u64,
) -> Result<RunReport> {
    let noisy = perturb_inputs(inputs, sigma_dp, seed)?;
    let mut report = run_protocol(&noisy, grid, r, None, spec, stragglers, None)?;
    let exact = exact_reference(inputs, spec)?;
    let stats = rme_stats(&report.decoded, &exact)?;
    report.exact = exact;
    report.rme = stats.value;
    report.zero_excluded = stats.excluded;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rme_examples() {
        let y = DMatrix::from_row_slice(1, 1, &[2.0]);
        assert_eq!(rme(&y, &y).unwrap(), 0.0);
        assert_eq!(
            rme(&DMatrix::from_row_slice(1, 1, &[3.0]), &y).unwrap(),
            0.5
        );
        let y2 = DMatrix::from_row_slice(1, 2, &[1.0, -2.0]);
        let a2 = DMatrix::from_row_slice(1, 2, &[1.1, -1.8]);
        assert!((rme(&a2, &y2).unwrap() - 0.1).abs() < 1e-12);
        let with_zero = DMatrix::from_row_slice(1, 2, &[0.0, 4.0]);
        let stats = rme_stats(&DMatrix::from_row_slice(1, 2, &[1.0, 5.0]), &with_zero).unwrap();
        assert_eq!(stats.excluded, 1);
        assert!((stats.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_reference_examples() {
        let relu_in = vec![
            NodeInput {
                node_index: 0,
                data: DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            },
            NodeInput {
                node_index: 1,
                data: DMatrix::from_row_slice(1, 2, &[-2.0, 3.0]),
            },
        ];
        let out = exact_reference(&relu_in, &AggregateSpec::new(FunctionId::Relu)).unwrap();
        assert_eq!(out, DMatrix::from_row_slice(1, 2, &[1.0, 3.0]));
        let med_in: Vec<NodeInput> = [1.0, 5.0, 9.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| NodeInput {
                node_index: i,
                data: DMatrix::from_element(1, 1, v),
            })
            .collect();
        let out = exact_reference(&med_in, &AggregateSpec::new(FunctionId::Median)).unwrap();
        assert_eq!(out[(0, 0)], 5.0);
    }

    #[test]
    fn combine_pairing() {
        assert!(AggregateSpec::new(FunctionId::Median).validate().is_ok());
        let bad = AggregateSpec {
            function: FunctionId::Relu,
            combine: Combine::ElementwiseMedianOverNodes,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn straggler_sets() {
        assert_eq!(StragglerModel::None.fast_set(3).unwrap(), vec![0, 1, 2]);
        assert_eq!(
            StragglerModel::Fixed(vec![1]).fast_set(3).unwrap(),
            vec![0, 2]
        );
        let r = StragglerModel::Random { count: 50, seed: 1 }
            .fast_set(200)
            .unwrap();
        assert_eq!(r.len(), 150);
        assert!(r.windows(2).all(|w| w[0] < w[1]));
        assert!(StragglerModel::Fixed(vec![0, 1]).fast_set(2).is_err());
    }

    #[test]
    fn inputs_avoid_zero() {
        let x = uniform_matrix(100, 10, 1.0, InputRange::Symmetric, 3, Phase::Input, 0).unwrap();
        assert!(x.iter().all(|v| v.abs() >= 1e-6 && v.abs() < 1.0));
        let y = uniform_matrix(100, 10, 1.0, InputRange::Nonnegative, 3, Phase::Input, 0).unwrap();
        assert!(y.iter().all(|&v| v > 0.0));
    }
}
