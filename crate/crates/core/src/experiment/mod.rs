//! Configuration-driven experiment sweeps.
//!
//! Each command writes a canonical CSV file into the output directory, an
//! optional SVG chart, and returns a human-readable summary. Runs may execute
//! concurrently, but rows are always written in sweep order, so repeated
//! invocations with the same seed produce byte-identical CSV output.

pub mod config;
pub mod plot;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentConfig, FloorConfig, InputChoice, Layout, MatrixKind, Scheme};

use crate::berrut::{MaskSpec, MaskVariance};
use crate::error::{Error, Result};
use crate::grid::InterpolationGrid;
use crate::matrix::{
    blocked_workers, direct_workers, plan_blocks, MatrixMasking, ProductSetup, RowPacking,
};
use crate::privacy::{
    calibrate_floor, leakage_bound, leakage_curve, uniform_entropy_bits, CollusionScenario, Floor,
    LeakageParams, ScenarioPolicy,
};
use crate::rng::Phase;
use crate::sim::{
    generate_inputs, rme, run_bss, run_bss_dp, run_pbss, sparse_matrix, uniform_matrix,
    AggregateSpec, FunctionId, InputRange, StragglerModel,
};
use plot::{Chart, Series};

/// Options shared by all commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Upper bound on concurrently executing runs.
    pub jobs: usize,
    /// Replaces the configured seed.
    pub seed: Option<u64>,
    pub plot: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("."),
            jobs: 1,
            seed: None,
            plot: false,
        }
    }
}

/// Files written and the summary of a command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: PathBuf,
    pub plots: Vec<PathBuf>,
    pub summary: String,
}

/// One row of `run.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub scheme: Scheme,
    pub function: FunctionId,
    pub nodes: usize,
    pub data_rows: usize,
    pub columns: usize,
    pub masks: usize,
    pub rows_per_point: usize,
    pub amplitude: f64,
    pub sigma_n: f64,
    pub sigma_dp: f64,
    pub mask_shift: f64,
    pub input_range: InputRange,
    pub stragglers: usize,
    pub seed: u64,
    pub rme: f64,
    pub zero_excluded: usize,
    pub n_used: usize,
}

/// One row of `leakage.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageRow {
    pub c: usize,
    pub sigma_n: f64,
    #[serde(rename = "I_L_bits")]
    pub i_l_bits: f64,
    #[serde(rename = "iota_L_bits_per_point")]
    pub iota_l_bits_per_point: f64,
    pub nodes: usize,
    pub data_rows: usize,
    pub masks: usize,
    pub amplitude: f64,
    pub mask_shift: f64,
    pub floor: f64,
    pub policy: String,
}

/// One row of `matmul.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatmulRow {
    pub layout: Layout,
    pub matrix: MatrixKind,
    pub scheme: Scheme,
    pub nodes: usize,
    pub data_rows: usize,
    pub inner_dim: usize,
    pub density: f64,
    pub rows_per_point: usize,
    pub block_count: usize,
    pub assignment: crate::matrix::BlockAssignment,
    pub sigma_n: f64,
    pub mask_variance: MaskVariance,
    pub masks_per_row: usize,
    pub mask_shift: f64,
    pub amplitude: f64,
    pub stragglers: usize,
    pub seed: u64,
    pub rme: f64,
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(pool.install(f))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_plot(path: PathBuf, chart: &Chart, plots: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, chart.to_svg())?;
    plots.push(path);
    Ok(())
}

fn median_of(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    crate::sim::median(&mut v)
}

fn effective(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut cfg = config.clone();
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// run

/// Grids of a PBSS sweep: unmasked and masked.
fn protocol_grids(cfg: &ExperimentConfig) -> Result<(InterpolationGrid, InterpolationGrid)> {
    let p = cfg.data_rows / cfg.rows_per_point;
    let s = cfg.masks / cfg.rows_per_point;
    Ok((
        InterpolationGrid::new(p, 0, cfg.nodes, cfg.mask_shift)?,
        InterpolationGrid::new(p, s, cfg.nodes, cfg.mask_shift)?,
    ))
}

fn run_job(cfg: &ExperimentConfig, function: FunctionId, rep: u64) -> Result<Vec<RunRow>> {
    let seed = cfg.rep_seed(rep);
    let range = cfg.input_range.resolve(function);
    let inputs = generate_inputs(
        cfg.nodes,
        cfg.data_rows,
        cfg.columns,
        cfg.amplitude,
        range,
        seed,
    )?;
    let (plain, masked) = protocol_grids(cfg)?;
    let spec = AggregateSpec::new(function);
    let mask = MaskSpec {
        t: cfg.masks,
        sigma_n: cfg.sigma_n,
        seed,
        mask_shift: cfg.mask_shift,
        variance: MaskVariance::Split,
        stream: 0,
    };
    let r = cfg.rows_per_point;
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for &stragglers in &cfg.stragglers {
            let model = StragglerModel::Random {
                count: stragglers,
                seed,
            };
            let report = match scheme {
                Scheme::Bss => run_bss(&inputs, &plain, &spec, &model, r)?,
                Scheme::Pbss => run_pbss(&inputs, &masked, &mask, &spec, &model, r)?,
                Scheme::BssDp => run_bss_dp(&inputs, &plain, &spec, &model, r, cfg.sigma_dp, seed)?,
            };
            rows.push(RunRow {
                scheme,
                function,
                nodes: cfg.nodes,
                data_rows: cfg.data_rows,
                columns: cfg.columns,
                masks: cfg.masks,
                rows_per_point: r,
                amplitude: cfg.amplitude,
                sigma_n: cfg.sigma_n,
                sigma_dp: cfg.sigma_dp,
                mask_shift: cfg.mask_shift,
                input_range: range,
                stragglers,
                seed,
                rme: report.rme,
                zero_excluded: report.zero_excluded,
                n_used: report.n_used,
            });
        }
    }
    Ok(rows)
}

/// Computes the rows of the `run` sweep in deterministic order: function,
/// scheme, straggler level, repetition.
pub fn run_rows(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<RunRow>> {
    let work: Vec<(usize, FunctionId, u64)> = cfg
        .functions
        .iter()
        .enumerate()
        .flat_map(|(fi, &f)| (0..cfg.repetitions).map(move |rep| (fi, f, rep)))
        .collect();
    let chunks: Vec<Result<Vec<RunRow>>> = with_pool(jobs, || {
        work.par_iter()
            .map(|&(_, f, rep)| run_job(cfg, f, rep))
            .collect()
    })?;
    let mut keyed = Vec::new();
    for ((fi, _, rep), chunk) in work.iter().zip(chunks) {
        for row in chunk? {
            let si = cfg
                .schemes
                .iter()
                .position(|s| *s == row.scheme)
                .unwrap_or(0);
            let li = cfg
                .stragglers
                .iter()
                .position(|s| *s == row.stragglers)
                .unwrap_or(0);
            keyed.push(((*fi, si, li, *rep), row));
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// Median RME per `(function, scheme, stragglers)`.
pub fn run_medians(rows: &[RunRow]) -> BTreeMap<(FunctionId, Scheme, usize), f64> {
    let mut groups: BTreeMap<(FunctionId, Scheme, usize), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.function, r.scheme, r.stragglers))
            .or_default()
            .push(r.rme);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, median_of(&v)))
        .collect()
}

/// `run` subcommand: protocol precision sweep.
pub fn cmd_run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective(config, opts)?;
    let rows = run_rows(&cfg, opts.jobs)?;
    let csv = opts.out_dir.join("run.csv");
    write_csv(&csv, &rows)?;
    let medians = run_medians(&rows);
    let mut summary = String::from("median RME over repetitions\nfunction      scheme  ");
    for s in &cfg.stragglers {
        let _ = write!(summary, "{:>14}", format!("{s} stragglers"));
    }
    summary.push('\n');
    let mut plots = Vec::new();
    for &f in &cfg.functions {
        let mut series = Vec::new();
        for &scheme in &cfg.schemes {
            let _ = write!(summary, "{:<13} {:<7}", f.name(), scheme.name());
            let mut points = Vec::new();
            for &s in &cfg.stragglers {
                let m = medians[&(f, scheme, s)];
                let _ = write!(summary, "{m:>14.4e}");
                points.push((s as f64, m));
            }
            summary.push('\n');
            series.push(Series {
                name: scheme.name().to_string(),
                points,
            });
        }
        if opts.plot {
            let chart = Chart {
                title: format!(
                    "{} (N={}, K={}, T={})",
                    f.name(),
                    cfg.nodes,
                    cfg.data_rows,
                    cfg.masks
                ),
                x_label: "stragglers".into(),
                y_label: "RME".into(),
                log_y: true,
                series,
            };
            write_plot(
                opts.out_dir.join(format!("run-{}.svg", f.name())),
                &chart,
                &mut plots,
            )?;
        }
    }
    Ok(Outcome {
        csv,
        plots,
        summary,
    })
}

// ---------------------------------------------------------------------------
// leakage

/// Absolute floor value for a leakage sweep.
pub fn resolve_floor(cfg: &ExperimentConfig) -> Result<Floor> {
    Ok(match cfg.leakage.floor {
        FloorConfig::Absolute { value } => Floor::Absolute(value),
        FloorConfig::RelativeTrace { value } => Floor::RelativeTrace(value),
        FloorConfig::Calibrated {
            target_bits,
            data_rows,
            masks,
            amplitude,
            sigma_n,
        } => {
            let grid = InterpolationGrid::new(data_rows, masks, cfg.nodes, cfg.mask_shift)?;
            let params = LeakageParams::new(amplitude, sigma_n, Floor::Absolute(1.0));
            Floor::Absolute(calibrate_floor(
                &grid,
                &CollusionScenario::all(cfg.nodes),
                &params,
                target_bits,
            )?)
        }
    })
}

fn policy_name(p: ScenarioPolicy) -> String {
    match p {
        ScenarioPolicy::Prefix => "prefix".into(),
        ScenarioPolicy::Greedy => "greedy".into(),
        ScenarioPolicy::RandomMax { samples, seed } => format!("random_max_{samples}_{seed}"),
    }
}

/// Leakage curve rows in `(σ_n, c)` order.
pub fn leakage_rows(cfg: &ExperimentConfig, jobs: usize) -> Result<(Vec<LeakageRow>, f64)> {
    let lk = &cfg.leakage;
    let floor = resolve_floor(cfg)?;
    let grid = InterpolationGrid::new(lk.data_rows, lk.masks, cfg.nodes, cfg.mask_shift)?;
    let c_values: Vec<usize> = (lk.c_min..=lk.c_max).step_by(lk.c_step).collect();
    let policy = match lk.policy {
        ScenarioPolicy::RandomMax { samples, seed } => ScenarioPolicy::RandomMax {
            samples,
            seed: seed.wrapping_add(cfg.seed),
        },
        p => p,
    };
    let curves: Vec<Result<Vec<_>>> = with_pool(jobs, || {
        lk.sigma_n
            .par_iter()
            .map(|&s| leakage_curve(&grid, lk.amplitude, &[s], &c_values, floor, policy))
            .collect()
    })?;
    let floor_value = match floor {
        Floor::Absolute(v) => v,
        Floor::RelativeTrace(v) => v,
    };
    let mut rows = Vec::new();
    for curve in curves {
        for p in curve? {
            rows.push(LeakageRow {
                c: p.c,
                sigma_n: p.sigma_n,
                i_l_bits: p.i_l,
                iota_l_bits_per_point: p.iota_l,
                nodes: cfg.nodes,
                data_rows: lk.data_rows,
                masks: lk.masks,
                amplitude: lk.amplitude,
                mask_shift: cfg.mask_shift,
                floor: floor_value,
                policy: policy_name(policy),
            });
        }
    }
    Ok((rows, floor_value))
}

/// `leakage` subcommand: curves over the colluder count plus an
/// operating-point report.
pub fn cmd_leakage(config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective(config, opts)?;
    let (rows, floor) = leakage_rows(&cfg, opts.jobs)?;
    let csv = opts.out_dir.join("leakage.csv");
    write_csv(&csv, &rows)?;
    let lk = &cfg.leakage;
    let mut summary = String::new();
    let _ = writeln!(summary, "regularization floor {floor:.6e} ({:?})", lk.floor);
    let _ = writeln!(
        summary,
        "H(X) = log2(2s): {:.4} bits at s = {}",
        uniform_entropy_bits(lk.amplitude),
        lk.amplitude
    );
    for &s in &lk.sigma_n {
        let last = rows.iter().rfind(|r| r.sigma_n == s);
        if let Some(r) = last {
            let _ = writeln!(
                summary,
                "sigma_n = {s:e}: I_L({}) = {:.4} bits",
                r.c, r.i_l_bits
            );
        }
    }
    let grid = InterpolationGrid::new(cfg.data_rows, cfg.masks, cfg.nodes, cfg.mask_shift)?;
    let params = LeakageParams::new(
        cfg.amplitude,
        cfg.sigma_n,
        Floor::Absolute(lk.operating_point_floor),
    )
    .with_epsilon(lk.epsilon);
    let op = leakage_bound(
        &grid,
        &CollusionScenario::prefix(cfg.colluders, cfg.nodes)?,
        &params,
    )?;
    let _ = writeln!(
        summary,
        "operating point (N={}, K={}, T={}, c={}, floor {:e}): I_L = {:.3} bits, iota_L = {:.4} bits/point, epsilon {} -> {}",
        cfg.nodes,
        cfg.data_rows,
        cfg.masks,
        cfg.colluders,
        op.regularization_floor,
        op.i_l,
        op.iota_l,
        op.epsilon,
        if op.satisfied { "satisfied" } else { "violated" }
    );
    let mut plots = Vec::new();
    if opts.plot {
        let series = lk
            .sigma_n
            .iter()
            .map(|&s| Series {
                name: format!("sigma_n = {s:e}"),
                points: rows
                    .iter()
                    .filter(|r| r.sigma_n == s)
                    .map(|r| (r.c as f64, r.i_l_bits))
                    .collect(),
            })
            .collect();
        let chart = Chart {
            title: format!(
                "I_L for T = {} (K = {}, N = {})",
                lk.masks, lk.data_rows, cfg.nodes
            ),
            x_label: "colluding nodes c".into(),
            y_label: "I_L (bits)".into(),
            log_y: false,
            series,
        };
        write_plot(opts.out_dir.join("leakage-curve.svg"), &chart, &mut plots)?;
    }
    Ok(Outcome {
        csv,
        plots,
        summary,
    })
}

// ---------------------------------------------------------------------------
// matmul

fn matmul_operands(
    cfg: &ExperimentConfig,
    kind: MatrixKind,
    seed: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let range = cfg.input_range.resolve(FunctionId::Matmul);
    let k = cfg.data_rows;
    let mm = &cfg.matmul;
    Ok(match kind {
        MatrixKind::Dense => (
            uniform_matrix(k, mm.inner_dim, cfg.amplitude, range, seed, Phase::Input, 0)?,
            uniform_matrix(k, mm.inner_dim, cfg.amplitude, range, seed, Phase::Input, 1)?,
            mm.inner_dim,
        ),
        MatrixKind::Sparse => (
            sparse_matrix(
                k,
                mm.sparse_inner_dim,
                cfg.amplitude,
                range,
                mm.density,
                seed,
                Phase::Input,
                0,
            )?,
            sparse_matrix(
                k,
                mm.sparse_inner_dim,
                cfg.amplitude,
                range,
                mm.density,
                seed,
                Phase::Input,
                1,
            )?,
            mm.sparse_inner_dim,
        ),
    })
}

fn matmul_job(cfg: &ExperimentConfig, kind: MatrixKind, rep: u64) -> Result<Vec<MatmulRow>> {
    let seed = cfg.rep_seed(rep);
    let mm = &cfg.matmul;
    let (a, b, d) = matmul_operands(cfg, kind, seed)?;
    let exact = &a * b.transpose();
    let fast_sets: Vec<Vec<usize>> = cfg
        .stragglers
        .iter()
        .map(|&count| StragglerModel::Random { count, seed }.fast_set(cfg.nodes))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &layout in &mm.layouts {
        for &scheme in cfg.schemes.iter().filter(|s| **s != Scheme::BssDp) {
            let setup = ProductSetup {
                nodes: cfg.nodes,
                packing: RowPacking::new(cfg.rows_per_point, mm.masks_per_row),
                mask_shift: cfg.mask_shift,
                masking: (scheme == Scheme::Pbss).then_some(MatrixMasking {
                    sigma_n: cfg.sigma_n,
                    variance: mm.mask_variance,
                    seed,
                }),
            };
            let decoded: Vec<DMatrix<f64>> = match layout {
                Layout::Direct => {
                    let w = direct_workers(&a, &b, &setup, cfg.nodes, 0, 0)?;
                    fast_sets
                        .iter()
                        .map(|f| w.decode_from(f))
                        .collect::<Result<_>>()?
                }
                Layout::Blocked => {
                    cfg.block_rows_per_point()?;
                    let (at, bt) = (a.transpose(), b.transpose());
                    let plan = plan_blocks(
                        at.shape(),
                        bt.shape(),
                        cfg.block_count,
                        cfg.nodes,
                        mm.assignment,
                    )?;
                    let w = blocked_workers(&at, &bt, &plan, &setup)?;
                    fast_sets
                        .iter()
                        .map(|f| w.decode_from(f))
                        .collect::<Result<_>>()?
                }
            };
            for (&stragglers, approx) in cfg.stragglers.iter().zip(&decoded) {
                rows.push(MatmulRow {
                    layout,
                    matrix: kind,
                    scheme,
                    nodes: cfg.nodes,
                    data_rows: cfg.data_rows,
                    inner_dim: d,
                    density: if kind == MatrixKind::Sparse {
                        mm.density
                    } else {
                        1.0
                    },
                    rows_per_point: cfg.rows_per_point,
                    block_count: if layout == Layout::Blocked {
                        cfg.block_count
                    } else {
                        1
                    },
                    assignment: mm.assignment,
                    sigma_n: cfg.sigma_n,
                    mask_variance: mm.mask_variance,
                    masks_per_row: mm.masks_per_row,
                    mask_shift: cfg.mask_shift,
                    amplitude: cfg.amplitude,
                    stragglers,
                    seed,
                    rme: rme(approx, &exact)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Matrix product rows in order: kind, layout, scheme, straggler level,
/// repetition.
pub fn matmul_rows(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<MatmulRow>> {
    let work: Vec<(usize, MatrixKind, u64)> = cfg
        .matmul
        .kinds
        .iter()
        .enumerate()
        .flat_map(|(ki, &k)| (0..cfg.repetitions).map(move |rep| (ki, k, rep)))
        .collect();
    let chunks: Vec<Result<Vec<MatmulRow>>> = with_pool(jobs, || {
        work.par_iter()
            .map(|&(_, k, rep)| matmul_job(cfg, k, rep))
            .collect()
    })?;
    let mut keyed = Vec::new();
    for ((ki, _, rep), chunk) in work.iter().zip(chunks) {
        for row in chunk? {
            let li = cfg
                .matmul
                .layouts
                .iter()
                .position(|l| *l == row.layout)
                .unwrap_or(0);
            let si = cfg
                .schemes
                .iter()
                .position(|s| *s == row.scheme)
                .unwrap_or(0);
            let ti = cfg
                .stragglers
                .iter()
                .position(|s| *s == row.stragglers)
                .unwrap_or(0);
            keyed.push(((*ki, li, si, ti, *rep), row));
        }
    }
    keyed.sort_by_key(|(k, _)| *k);
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// Median RME per `(kind, layout, scheme, stragglers)`.
pub fn matmul_medians(rows: &[MatmulRow]) -> BTreeMap<(MatrixKind, Layout, Scheme, usize), f64> {
    let mut groups: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.matrix, r.layout, r.scheme, r.stragglers))
            .or_default()
            .push(r.rme);
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, median_of(&v)))
        .collect()
}

fn layout_name(l: Layout) -> &'static str {
    match l {
        Layout::Direct => "direct",
        Layout::Blocked => "blocked",
    }
}

fn kind_name(k: MatrixKind) -> &'static str {
    match k {
        MatrixKind::Dense => "dense",
        MatrixKind::Sparse => "sparse",
    }
}

/// `matmul` subcommand: coded matrix product precision sweep.
pub fn cmd_matmul(config: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let cfg = effective(config, opts)?;
    let rows = matmul_rows(&cfg, opts.jobs)?;
    let csv = opts.out_dir.join("matmul.csv");
    write_csv(&csv, &rows)?;
    let medians = matmul_medians(&rows);
    let mut summary = String::from("median RME over repetitions\nmatrix  layout   scheme ");
    for s in &cfg.stragglers {
        let _ = write!(summary, "{:>14}", format!("{s} stragglers"));
    }
    summary.push('\n');
    let mut plots = Vec::new();
    for &kind in &cfg.matmul.kinds {
        for &layout in &cfg.matmul.layouts {
            let mut series = Vec::new();
            for &scheme in cfg.schemes.iter().filter(|s| **s != Scheme::BssDp) {
                let _ = write!(
                    summary,
                    "{:<7} {:<8} {:<6}",
                    kind_name(kind),
                    layout_name(layout),
                    scheme.name()
                );
                let mut points = Vec::new();
                for &s in &cfg.stragglers {
                    let m = medians[&(kind, layout, scheme, s)];
                    let _ = write!(summary, "{m:>14.4e}");
                    points.push((s as f64, m));
                }
                summary.push('\n');
                series.push(Series {
                    name: scheme.name().to_string(),
                    points,
                });
            }
            if opts.plot {
                let chart = Chart {
                    title: format!(
                        "{} {} product (N={}, K={})",
                        kind_name(kind),
                        layout_name(layout),
                        cfg.nodes,
                        cfg.data_rows
                    ),
                    x_label: "stragglers".into(),
                    y_label: "RME".into(),
                    log_y: true,
                    series,
                };
                let name = format!("matmul-{}_{}.svg", layout_name(layout), kind_name(kind));
                write_plot(opts.out_dir.join(name), &chart, &mut plots)?;
            }
        }
    }
    Ok(Outcome {
        csv,
        plots,
        summary,
    })
}

/// Process exit code for an error: 2 for configuration problems (including
/// grids and block plans the configuration cannot realize), 3 for numerical
/// failures, 1 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::GridCollision { .. }
        | Error::InvalidShift { .. }
        | Error::Capacity { .. } => 2,
        Error::Io(_) => 1,
        _ => 3,
    }
}
