//! Upper bounds on the information leaked to colluding nodes.
//!
//! Colluders `𝒞` observe `Y = Q_c X + Q̃_c R`. Treating the masks as Gaussian
//! noise, the mutual information is bounded by the MIMO capacity expression
//!
//! ```text
//! I_L ≤ log₂ det(I + (s²/σ_e²) Σ̃⁻¹ Σ),   Σ = Q_c Q_cᵀ,   Σ̃ = reg(Q̃_c Q̃_cᵀ)
//! ```
//!
//! where `σ_e²` is the per-entry mask variance (`σ_n²/T` by default) and
//! `reg` is the minimum-eigenvalue clamp. The normalized leakage is
//! `ι_L = I_L / K`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::berrut::{basis_weights_into, MaskVariance};
use crate::error::{invalid, Error, Result};
use crate::grid::InterpolationGrid;
use crate::rng::{stream, Phase};

/// Relative factor of the default floor `1e−10 · trace / p`.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-10;

/// Absolute floor giving a normalized leakage of about 0.197 bits per point at the
/// experimental operating point (N=200, K=T=1000, s=100, σ_n=1e4, c=50).
pub const OPERATING_POINT_FLOOR: f64 = 7.0e-3;

/// Set of colluding nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollusionScenario {
    nodes: Vec<usize>,
}

impl CollusionScenario {
    /// Validates that the indices are distinct and below `n`.
    pub fn new(mut nodes: Vec<usize>, n: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("a collusion scenario needs at least one node"));
        }
        if let Some(&bad) = nodes.iter().find(|&&j| j >= n) {
            return Err(invalid(format!(
                "colluder index {bad} out of range for N = {n}"
            )));
        }
        let len = nodes.len();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.len() != len {
            return Err(invalid("colluder indices must be distinct"));
        }
        Ok(CollusionScenario { nodes })
    }

    /// The first `c` evaluation points.
    pub fn prefix(c: usize, n: usize) -> Result<Self> {
        Self::new((0..c).collect(), n)
    }

    /// Every node colludes.
    pub fn all(n: usize) -> Self {
        CollusionScenario {
            nodes: (0..n).collect(),
        }
    }

    pub fn c(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }
}

/// How colluding subsets are chosen when only their size is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum ScenarioPolicy {
    /// Nodes `0..c`.
    Prefix,
    /// Nested sets grown by greedily adding the node with the largest
    /// marginal log-det gain.
    Greedy,
    /// Maximum over `samples` uniformly random subsets (a lower bound on the
    /// true maximum).
    RandomMax { samples: usize, seed: u64 },
}

/// Regularization floor for the mask covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Floor {
    Absolute(f64),
    /// Multiple of `trace / p` of the unregularized covariance.
    RelativeTrace(f64),
}

impl Default for Floor {
    fn default() -> Self {
        Floor::RelativeTrace(DEFAULT_RELATIVE_FLOOR)
    }
}

impl Floor {
    fn resolve(self, m: &DMatrix<f64>) -> f64 {
        match self {
            Floor::Absolute(f) => f,
            Floor::RelativeTrace(rel) => rel * m.trace() / m.nrows().max(1) as f64,
        }
    }
}

/// Inputs of the leakage bound besides the grid and the colluders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageParams {
    /// Amplitude `s` bounding the data entries.
    pub amplitude: f64,
    pub sigma_n: f64,
    pub floor: Floor,
    /// Target `ε` for the normalized leakage.
    pub epsilon: f64,
    pub variance: MaskVariance,
}

impl LeakageParams {
    pub fn new(amplitude: f64, sigma_n: f64, floor: Floor) -> Self {
        LeakageParams {
            amplitude,
            sigma_n,
            floor,
            epsilon: f64::INFINITY,
            variance: MaskVariance::Split,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Signal-to-noise factor `s² / σ_e²` for `t` mask coefficients.
    pub fn snr(&self, t: usize) -> f64 {
        let var = match self.variance {
            MaskVariance::Split => self.sigma_n * self.sigma_n / t as f64,
            MaskVariance::Full => self.sigma_n * self.sigma_n,
        };
        self.amplitude * self.amplitude / var
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_n > 0.0) || !(self.amplitude > 0.0) {
            return Err(invalid("amplitude and sigma_n must be positive"));
        }
        Ok(())
    }
}

/// Result of a leakage computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub c: usize,
    /// Bound on the mutual information, in bits.
    pub i_l: f64,
    /// Normalized leakage in bits per data point.
    pub iota_l: f64,
    pub epsilon: f64,
    pub satisfied: bool,
    /// Floor actually applied to the eigenvalues.
    pub regularization_floor: f64,
}

impl LeakageReport {
    fn new(c: usize, i_l: f64, iota_l: f64, epsilon: f64, floor: f64) -> Self {
        LeakageReport {
            c,
            i_l,
            iota_l,
            epsilon,
            satisfied: iota_l < epsilon,
            regularization_floor: floor,
        }
    }
}

/// One point of a leakage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub c: usize,
    pub sigma_n: f64,
    pub i_l: f64,
    pub iota_l: f64,
}

/// Entropy `log₂(2s)` of a uniform variable on `[−s, s]`, in bits.
pub fn uniform_entropy_bits(amplitude: f64) -> f64 {
    (2.0 * amplitude).log2()
}

/// Rows of the encoding weights seen by the colluders, split into the data
/// part `Q_c` (c×K) and the mask part `Q̃_c` (c×T).
pub fn interpolation_matrices(
    grid: &InterpolationGrid,
    scenario: &CollusionScenario,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (k, t) = (grid.k(), grid.t());
    let mut q = DMatrix::zeros(scenario.c(), k);
    let mut qt = DMatrix::zeros(scenario.c(), t);
    let mut row = vec![0.0; k + t];
    for (h, &j) in scenario.nodes().iter().enumerate() {
        basis_weights_into(grid.z(j), grid.alphas(), &mut row);
        for i in 0..k {
            q[(h, i)] = row[i];
        }
        for i in 0..t {
            qt[(h, i)] = row[k + i];
        }
    }
    (q, qt)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(invalid("covariance must be square"));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn clamped_eigen(m: &DMatrix<f64>, floor: f64) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let mut eig = SymmetricEigen::new(m.clone());
    for v in eig.eigenvalues.iter_mut() {
        if *v < floor {
            *v = floor;
        }
    }
    eig
}

/// Minimum-eigenvalue method: clamps eigenvalues below `floor` to `floor`.
pub fn regularize_covariance(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(invalid("regularization floor must be positive and finite"));
    }
    let eig = clamped_eigen(m, floor);
    let out = eig.recompose();
    Ok((&out + out.transpose()) * 0.5)
}

/// `log₂ det(I + snr · Σ̃⁻¹ Σ)` for observation matrices `q` (c×K) and
/// `q_tilde` (c×T). Returns the bound and the floor applied.
pub fn mimo_bound(
    q: &DMatrix<f64>,
    q_tilde: &DMatrix<f64>,
    snr: f64,
    floor: Floor,
) -> Result<(f64, f64)> {
    let c = q.nrows();
    if q_tilde.nrows() != c {
        return Err(invalid(
            "observation matrices disagree on the colluder count",
        ));
    }
    if c == 0 {
        return Ok((0.0, 0.0));
    }
    let raw = q_tilde * q_tilde.transpose();
    let floor_value = floor.resolve(&raw);
    if !(floor_value > 0.0 && floor_value.is_finite()) {
        return Err(invalid(format!(
            "resolved floor {floor_value:e} is not positive"
        )));
    }
    let eig = clamped_eigen(&raw, floor_value);
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let whiten = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    // I + snr·W Σ W = I + G Gᵀ with G = √snr·W·Q, so the log-determinant is
    // Σ ln(1 + σ_i²) over the singular values of G.
    let g = whiten * q * snr.sqrt();
    let singular = g.singular_values();
    let ln_det: f64 = singular.iter().map(|s| (s * s).ln_1p()).sum();
    if !ln_det.is_finite() {
        return Err(Error::NumericalFailure {
            message: "non-finite log-determinant".into(),
            min_eigenvalue: eig.eigenvalues.min(),
            max_eigenvalue: eig.eigenvalues.max(),
        });
    }
    Ok((ln_det.max(0.0) / std::f64::consts::LN_2, floor_value))
}

/// Leakage bound for the vector encoding.
pub fn leakage_bound(
    grid: &InterpolationGrid,
    scenario: &CollusionScenario,
    params: &LeakageParams,
) -> Result<LeakageReport> {
    if grid.t() == 0 {
        return Err(Error::UnboundedLeakage(
            "the grid has no mask points".into(),
        ));
    }
    params.validate()?;
    check_scenario(grid, scenario)?;
    let (q, qt) = interpolation_matrices(grid, scenario);
    let (i_l, floor) = mimo_bound(&q, &qt, params.snr(grid.t()), params.floor)?;
    Ok(LeakageReport::new(
        scenario.c(),
        i_l,
        i_l / grid.k() as f64,
        params.epsilon,
        floor,
    ))
}

fn check_scenario(grid: &InterpolationGrid, scenario: &CollusionScenario) -> Result<()> {
    match scenario.nodes().last() {
        Some(&j) if j >= grid.n() => Err(invalid(format!(
            "colluder {j} out of range for N = {}",
            grid.n()
        ))),
        _ => Ok(()),
    }
}

/// Finds an absolute floor for which the bound equals `target_bits`.
///
/// The bound decreases monotonically in the floor; the search bisects on
/// `log10(floor)` over `[1e−30, 1e30]`.
pub fn calibrate_floor(
    grid: &InterpolationGrid,
    scenario: &CollusionScenario,
    params: &LeakageParams,
    target_bits: f64,
) -> Result<f64> {
    let bits = |log_floor: f64| -> Result<f64> {
        let p = LeakageParams {
            floor: Floor::Absolute(10f64.powf(log_floor)),
            ..*params
        };
        Ok(leakage_bound(grid, scenario, &p)?.i_l)
    };
    let (mut lo, mut hi) = (-30.0, 30.0);
    if bits(lo)? < target_bits || bits(hi)? > target_bits {
        return Err(invalid(format!(
            "target of {target_bits} bits is not reachable by any floor"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bits(mid)? > target_bits {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(10f64.powf(0.5 * (lo + hi)))
}

/// Colluder sets of every size in `c_values` under `policy`.
///
/// `Prefix` and `Greedy` return nested sets.
pub fn scenarios_for(
    grid: &InterpolationGrid,
    c_values: &[usize],
    policy: ScenarioPolicy,
    params: &LeakageParams,
) -> Result<Vec<Vec<CollusionScenario>>> {
    let n = grid.n();
    if let Some(&c) = c_values.iter().find(|&&c| c > n) {
        return Err(invalid(format!("c = {c} exceeds N = {n}")));
    }
    match policy {
        ScenarioPolicy::Prefix => c_values
            .iter()
            .map(|&c| {
                Ok(if c == 0 {
                    vec![]
                } else {
                    vec![CollusionScenario::prefix(c, n)?]
                })
            })
            .collect(),
        ScenarioPolicy::Greedy => {
            let max_c = c_values.iter().copied().max().unwrap_or(0);
            let order = greedy_order(grid, max_c, params)?;
            c_values
                .iter()
                .map(|&c| {
                    Ok(if c == 0 {
                        vec![]
                    } else {
                        vec![CollusionScenario::new(order[..c].to_vec(), n)?]
                    })
                })
                .collect()
        }
        ScenarioPolicy::RandomMax { samples, seed } => c_values
            .iter()
            .map(|&c| {
                if c == 0 {
                    return Ok(vec![]);
                }
                let mut rng = stream(seed, Phase::Collusion, c as u64);
                (0..samples.max(1))
                    .map(|_| CollusionScenario::new(sample(&mut rng, n, c).into_vec(), n))
                    .collect()
            })
            .collect(),
    }
}

/// Greedy order of nodes maximizing the marginal gain of
/// `log det(I + a Σ_S q qᵀ)` with `a = snr / floor`, the bound obtained when
/// the mask covariance is fully clamped.
fn greedy_order(
    grid: &InterpolationGrid,
    count: usize,
    params: &LeakageParams,
) -> Result<Vec<usize>> {
    let all = CollusionScenario::all(grid.n());
    let (q, qt) = interpolation_matrices(grid, &all);
    let floor = params.floor.resolve(&(&qt * qt.transpose()));
    let a = params.snr(grid.t().max(1)) / floor;
    let k = grid.k();
    // Inverse of M = I + a Σ q qᵀ, maintained with Sherman-Morrison updates.
    let mut m_inv = DMatrix::<f64>::identity(k, k);
    let mut chosen = vec![false; grid.n()];
    let mut order = Vec::with_capacity(count);
    for _ in 0..count {
        let proj = &q * &m_inv;
        let mut best = (f64::NEG_INFINITY, 0usize);
        for j in 0..grid.n() {
            if chosen[j] {
                continue;
            }
            let gain = proj.row(j).dot(&q.row(j));
            if gain > best.0 {
                best = (gain, j);
            }
        }
        let j = best.1;
        chosen[j] = true;
        order.push(j);
        let u = proj.row(j).transpose();
        let denom = 1.0 + a * best.0;
        m_inv -= &u * u.transpose() * (a / denom);
    }
    Ok(order)
}

/// Leakage curve over `c_values` for each `σ_n`, in `(σ_n, c)` order.
pub fn leakage_curve(
    grid: &InterpolationGrid,
    amplitude: f64,
    sigma_n_list: &[f64],
    c_values: &[usize],
    floor: Floor,
    policy: ScenarioPolicy,
) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(sigma_n_list.len() * c_values.len());
    for &sigma_n in sigma_n_list {
        let params = LeakageParams::new(amplitude, sigma_n, floor);
        let sets = scenarios_for(grid, c_values, policy, &params)?;
        for (&c, scenarios) in c_values.iter().zip(&sets) {
            let mut i_l: f64 = 0.0;
            for s in scenarios {
                i_l = i_l.max(leakage_bound(grid, s, &params)?.i_l);
            }
            out.push(CurvePoint {
                c,
                sigma_n,
                i_l,
                iota_l: i_l / grid.k() as f64,
            });
        }
    }
    Ok(out)
}

/// Row-wise leakage of the private matrix encoding, averaged over the rows.
///
/// Row `i` is protected by the `v` masks at interpolation points
/// `K + i·v .. K + (i+1)·v`, each multiplied by `q_i(z)`.
pub fn rowwise_leakage(
    grid: &InterpolationGrid,
    scenario: &CollusionScenario,
    v: usize,
    params: &LeakageParams,
) -> Result<LeakageReport> {
    if v == 0 {
        return Err(Error::UnboundedLeakage(
            "no mask coefficients per row".into(),
        ));
    }
    let k = grid.k();
    if grid.t() != k * v {
        return Err(invalid(format!(
            "grid has T = {}, expected K·v = {}",
            grid.t(),
            k * v
        )));
    }
    params.validate()?;
    check_scenario(grid, scenario)?;
    let c = scenario.c();
    let (q, qt) = interpolation_matrices(grid, scenario);
    let snr = params.snr(grid.t());
    let mut total = 0.0;
    let mut floor_used = 0.0;
    for i in 0..k {
        let l = q.columns(i, 1).into_owned();
        let lt = DMatrix::from_fn(c, v, |h, t| qt[(h, i * v + t)] * q[(h, i)]);
        let (bits, floor) = mimo_bound(&l, &lt, snr, params.floor)?;
        total += bits;
        floor_used = floor;
    }
    let iota = total / k as f64;
    Ok(LeakageReport::new(
        c,
        total,
        iota,
        params.epsilon,
        floor_used,
    ))
}
