use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::berrut::MaskVariance;
use crate::error::{Error, Result};
use crate::matrix::BlockAssignment;
use crate::privacy::{ScenarioPolicy, OPERATING_POINT_FLOOR};
use crate::sim::{FunctionId, InputRange};

/// Version accepted in the `schema_version` field.
pub const SCHEMA_VERSION: u32 = 1;

/// Protocol variant of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bss,
    Pbss,
    BssDp,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bss => "bss",
            Scheme::Pbss => "pbss",
            Scheme::BssDp => "bss_dp",
        }
    }
}

/// Input distribution selector; `auto` picks `nonnegative` for medians and
/// matrix products and `symmetric` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputChoice {
    #[default]
    Auto,
    Symmetric,
    Nonnegative,
}

impl InputChoice {
    pub fn resolve(self, function: FunctionId) -> InputRange {
        match self {
            InputChoice::Symmetric => InputRange::Symmetric,
            InputChoice::Nonnegative => InputRange::Nonnegative,
            InputChoice::Auto => match function {
                FunctionId::Median | FunctionId::Matmul => InputRange::Nonnegative,
                _ => InputRange::Symmetric,
            },
        }
    }
}

/// Regularization floor of the leakage sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FloorConfig {
    /// Tune an absolute floor so that all `nodes` colluding on a grid with
    /// `data_rows` and `masks` leak `target_bits`.
    Calibrated {
        target_bits: f64,
        data_rows: usize,
        masks: usize,
        amplitude: f64,
        sigma_n: f64,
    },
    Absolute {
        value: f64,
    },
    RelativeTrace {
        value: f64,
    },
}

impl Default for FloorConfig {
    fn default() -> Self {
        FloorConfig::Calibrated {
            target_bits: 14.28,
            data_rows: 10,
            masks: 1,
            amplitude: 1e4,
            sigma_n: 1e4,
        }
    }
}

/// Leakage curve sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeakageConfig {
    pub data_rows: usize,
    pub masks: usize,
    pub amplitude: f64,
    pub sigma_n: Vec<f64>,
    pub c_min: usize,
    pub c_max: usize,
    pub c_step: usize,
    pub floor: FloorConfig,
    pub policy: ScenarioPolicy,
    /// Floor used for the operating-point report.
    pub operating_point_floor: f64,
    pub epsilon: f64,
}

impl Default for LeakageConfig {
    fn default() -> Self {
        LeakageConfig {
            data_rows: 10,
            masks: 50,
            amplitude: 1e4,
            sigma_n: vec![1e5, 2e5, 5e5],
            c_min: 1,
            c_max: 200,
            c_step: 1,
            floor: FloorConfig::default(),
            policy: ScenarioPolicy::Greedy,
            operating_point_floor: OPERATING_POINT_FLOOR,
            epsilon: 1.0,
        }
    }
}

/// Matrix layout of a product experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `A·Bᵀ` with row packing.
    Direct,
    /// `AᵀB` over `block_count` vertical blocks of `Aᵀ` and `Bᵀ`.
    Blocked,
}

/// Input matrix family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Dense,
    Sparse,
}

/// Matrix product sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatmulConfig {
    pub layouts: Vec<Layout>,
    pub kinds: Vec<MatrixKind>,
    /// Inner dimension of dense operands.
    pub inner_dim: usize,
    /// Inner dimension of sparse operands.
    pub sparse_inner_dim: usize,
    pub density: f64,
    pub mask_variance: MaskVariance,
    pub masks_per_row: usize,
    pub assignment: BlockAssignment,
}

impl Default for MatmulConfig {
    fn default() -> Self {
        MatmulConfig {
            layouts: vec![Layout::Direct, Layout::Blocked],
            kinds: vec![MatrixKind::Dense, MatrixKind::Sparse],
            inner_dim: 16,
            sparse_inner_dim: 3200,
            density: 0.1,
            mask_variance: MaskVariance::Full,
            masks_per_row: 1,
            assignment: BlockAssignment::Replicated,
        }
    }
}

/// Full experiment description. Defaults are the reference operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// N
    pub nodes: usize,
    /// K
    pub data_rows: usize,
    /// L
    pub columns: usize,
    /// s
    pub amplitude: f64,
    pub sigma_n: f64,
    /// T
    pub masks: usize,
    /// c
    pub colluders: usize,
    pub sigma_dp: f64,
    /// r
    pub rows_per_point: usize,
    pub block_count: usize,
    pub mask_shift: f64,
    pub stragglers: Vec<usize>,
    pub functions: Vec<FunctionId>,
    pub schemes: Vec<Scheme>,
    pub input_range: InputChoice,
    pub seed: u64,
    pub repetitions: u64,
    pub leakage: LeakageConfig,
    pub matmul: MatmulConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            nodes: 200,
            data_rows: 1000,
            columns: 1,
            amplitude: 100.0,
            sigma_n: 1e4,
            masks: 1000,
            colluders: 50,
            sigma_dp: 30.0,
            rows_per_point: 50,
            block_count: 2,
            mask_shift: 10.0,
            stragglers: vec![0, 50, 100],
            functions: vec![FunctionId::Relu, FunctionId::Sigmoid, FunctionId::Swish],
            schemes: vec![Scheme::Bss, Scheme::Pbss, Scheme::BssDp],
            input_range: InputChoice::Auto,
            seed: 0,
            repetitions: 5,
            leakage: LeakageConfig::default(),
            matmul: MatmulConfig::default(),
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.nodes < 2 {
            return Err(field("nodes", "at least 2 nodes are required"));
        }
        if self.data_rows == 0 || self.columns == 0 {
            return Err(field("data_rows", "data dimensions must be positive"));
        }
        if self.rows_per_point == 0 || !self.data_rows.is_multiple_of(self.rows_per_point) {
            return Err(field("rows_per_point", "must divide data_rows"));
        }
        if self.masks == 0 || !self.masks.is_multiple_of(self.rows_per_point) {
            return Err(field(
                "masks",
                "must be a positive multiple of rows_per_point",
            ));
        }
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("sigma_n", self.sigma_n),
            ("sigma_dp", self.sigma_dp),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(field(name, "must be positive and finite"));
            }
        }
        if !(self.mask_shift.abs() > 2.0 && self.mask_shift.is_finite()) {
            return Err(field("mask_shift", "must satisfy |mask_shift| > 2"));
        }
        if self.colluders == 0 || self.colluders > self.nodes {
            return Err(field("colluders", "must lie in 1..=nodes"));
        }
        if let Some(&s) = self.stragglers.iter().find(|&&s| s >= self.nodes) {
            return Err(field(
                "stragglers",
                format!("{s} stragglers leave no fast node"),
            ));
        }
        if self.stragglers.is_empty() {
            return Err(field(
                "stragglers",
                "at least one straggler level is required",
            ));
        }
        if self.repetitions == 0 {
            return Err(field("repetitions", "must be at least 1"));
        }
        if self.block_count == 0 || !self.data_rows.is_multiple_of(self.block_count) {
            return Err(field("block_count", "must divide data_rows"));
        }
        if let Some(f) = self.functions.iter().find(|f| **f == FunctionId::Matmul) {
            return Err(field(
                "functions",
                format!("`{f}` runs through the matmul subcommand"),
            ));
        }
        let lk = &self.leakage;
        if lk.data_rows == 0 || lk.masks == 0 {
            return Err(field(
                "leakage.masks",
                "leakage sweeps need data rows and mask points",
            ));
        }
        if lk.c_step == 0 || lk.c_min > lk.c_max || lk.c_max > self.nodes {
            return Err(field(
                "leakage.c_max",
                "need c_min <= c_max <= nodes and c_step >= 1",
            ));
        }
        if lk.sigma_n.is_empty() || lk.sigma_n.iter().any(|v| !(*v > 0.0)) {
            return Err(field("leakage.sigma_n", "needs positive values"));
        }
        let mm = &self.matmul;
        if mm.inner_dim == 0 || mm.sparse_inner_dim == 0 || mm.masks_per_row == 0 {
            return Err(field("matmul.inner_dim", "dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&mm.density) || mm.density == 0.0 {
            return Err(field("matmul.density", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Operands of the blocked layout have `data_rows / block_count` columns
    /// per block, which must be a multiple of `rows_per_point`.
    pub fn block_rows_per_point(&self) -> Result<usize> {
        let h = self.data_rows / self.block_count;
        if !h.is_multiple_of(self.rows_per_point) {
            return Err(field(
                "rows_per_point",
                format!("must divide the block width {h}"),
            ));
        }
        Ok(self.rows_per_point)
    }

    /// Seed of repetition `rep`; a CSV row with this seed is reproduced by a
    /// config with `seed` set to it and `repetitions = 1`.
    pub fn rep_seed(&self, rep: u64) -> u64 {
        self.seed.wrapping_add(rep)
    }
}
