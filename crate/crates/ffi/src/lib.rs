//! C interface to `pbacc`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or
//! `*_encode` functions and released by the matching `*_free`. Every fallible
//! call returns a [`PbaccStatus`]; on failure a description is available from
//! [`pbacc_last_error_message`] on the same thread.
//!
//! Matrices are passed row-major as `double` buffers together with their
//! dimensions.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use pbacc::berrut::{self, MaskSpec, Share};
use pbacc::grid::InterpolationGrid;
use pbacc::privacy::{self, CollusionScenario, Floor, LeakageParams};
use pbacc::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbaccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridCollision = 3,
    InvalidShift = 4,
    InsufficientResults = 5,
    DegenerateWeight = 6,
    UnboundedLeakage = 7,
    NumericalFailure = 8,
    BufferTooSmall = 9,
    Internal = 10,
    Panic = 11,
}

/// Interpolation grid handle.
pub struct PbaccGrid(InterpolationGrid);

/// Collection of encoded shares, one per node.
pub struct PbaccShareSet(Vec<Share>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PbaccStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Capacity { .. } => {
                PbaccStatus::InvalidArgument
            }
            Error::GridCollision { .. } => PbaccStatus::GridCollision,
            Error::InvalidShift { .. } => PbaccStatus::InvalidShift,
            Error::InsufficientResults(_) | Error::IncompleteAssembly { .. } => {
                PbaccStatus::InsufficientResults
            }
            Error::DegenerateWeight { .. } => PbaccStatus::DegenerateWeight,
            Error::UnboundedLeakage(_) => PbaccStatus::UnboundedLeakage,
            Error::NumericalFailure { .. } => PbaccStatus::NumericalFailure,
            _ => PbaccStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PbaccStatus::NullPointer, format!("`{what}` is null"))
}

fn too_small(needed: usize, capacity: usize) -> Failure {
    Failure(
        PbaccStatus::BufferTooSmall,
        format!("buffer holds {capacity} values, {needed} required"),
    )
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PbaccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PbaccStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {message}"));
            PbaccStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T: Copy>(values: &[T], out: *mut T, capacity: usize) -> Result<(), Failure> {
    if values.len() > capacity {
        return Err(too_small(values.len(), capacity));
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn grid_ref<'a>(grid: *const PbaccGrid) -> Result<&'a InterpolationGrid, Failure> {
    grid.as_ref().map(|g| &g.0).ok_or_else(|| null("grid"))
}

unsafe fn shares_ref<'a>(set: *const PbaccShareSet) -> Result<&'a [Share], Failure> {
    set.as_ref()
        .map(|s| s.0.as_slice())
        .ok_or_else(|| null("shares"))
}

/// Message describing the most recent failure on the calling thread, or null
/// if no call has failed yet. The string is owned by the library and stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pbacc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds the grid for `k` data points, `t` mask points and `n` nodes.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle. On
/// success it receives a grid that must be released with [`pbacc_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn pbacc_grid_new(
    k: usize,
    t: usize,
    n: usize,
    mask_shift: f64,
    out: *mut *mut PbaccGrid,
) -> PbaccStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = InterpolationGrid::new(k, t, n, mask_shift)?;
        *out = Box::into_raw(Box::new(PbaccGrid(grid)));
        Ok(())
    })
}

/// Releases a grid. Null is ignored.
///
/// # Safety
/// `grid` must be null or a handle from [`pbacc_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbacc_grid_free(grid: *mut PbaccGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes `N`, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn pbacc_grid_num_nodes(grid: *const PbaccGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.n())
}

/// Copies the `N` evaluation points into `out`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pbacc_grid_eval_points(
    grid: *const PbaccGrid,
    out: *mut f64,
    capacity: usize,
) -> PbaccStatus {
    guard(|| {
        let grid = grid_ref(grid)?;
        write_out(grid.zs(), out, capacity)
    })
}

/// Copies the `K + T` interpolation points (data first, then masks) into `out`.
///
/// # Safety
/// `grid` must be a live grid handle and `out` must point to `capacity`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pbacc_grid_interpolation_points(
    grid: *const PbaccGrid,
    out: *mut f64,
    capacity: usize,
) -> PbaccStatus {
    guard(|| {
        let grid = grid_ref(grid)?;
        write_out(grid.alphas(), out, capacity)
    })
}

/// Berrut basis weights of `z` over `count` interpolation points.
///
/// # Safety
/// `points` must point to `count` readable doubles and `out` to `count`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pbacc_basis_weights(
    z: f64,
    points: *const f64,
    count: usize,
    out: *mut f64,
) -> PbaccStatus {
    guard(|| {
        let points = slice(points, count, "points")?;
        if !z.is_finite() || points.iter().any(|p| !p.is_finite()) {
            return Err(Failure(
                PbaccStatus::InvalidArgument,
                "non-finite point".into(),
            ));
        }
        write_out(&berrut::basis_weights(z, points), out, count)
    })
}

/// Encodes a `rows×cols` row-major block with one row per data point.
///
/// A grid without mask points yields the plain encoding; otherwise Gaussian
/// masks with standard deviation `sigma_n` are drawn deterministically from
/// `seed`.
///
/// # Safety
/// `grid` must be a live grid handle, `data` must point to `rows·cols`
/// readable doubles and `out` to writable storage for one handle, released
/// with [`pbacc_shares_free`].
#[no_mangle]
pub unsafe extern "C" fn pbacc_encode(
    grid: *const PbaccGrid,
    data: *const f64,
    rows: usize,
    cols: usize,
    sigma_n: f64,
    seed: u64,
    out: *mut *mut PbaccShareSet,
) -> PbaccStatus {
    guard(|| {
        let grid = grid_ref(grid)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(PbaccStatus::InvalidArgument, "size overflow".into()))?;
        let values = slice(data, len, "data")?;
        let block = DMatrix::from_row_slice(rows, cols, values);
        let shares = if grid.t() == 0 {
            berrut::encode_plain(&block, grid)?
        } else {
            berrut::encode_private(&block, grid, &MaskSpec::new(grid.t(), sigma_n, seed))?
        };
        *out = Box::into_raw(Box::new(PbaccShareSet(shares)));
        Ok(())
    })
}

/// Releases a share set. Null is ignored.
///
/// # Safety
/// `set` must be null or a handle from [`pbacc_encode`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbacc_shares_free(set: *mut PbaccShareSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of shares in the set, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live share-set handle.
#[no_mangle]
pub unsafe extern "C" fn pbacc_shares_len(set: *const PbaccShareSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Copies share `index` row-major into `out` and reports its shape.
///
/// When `capacity` is too small the shape is still written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `set` must be a live share-set handle, `rows` and `cols` valid writable
/// pointers, and `out` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pbacc_shares_payload(
    set: *const PbaccShareSet,
    index: usize,
    out: *mut f64,
    capacity: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> PbaccStatus {
    guard(|| {
        let shares = shares_ref(set)?;
        if rows.is_null() || cols.is_null() {
            return Err(null("rows/cols"));
        }
        let share = shares.get(index).ok_or_else(|| {
            Failure(
                PbaccStatus::InvalidArgument,
                format!("share {index} out of range for {} shares", shares.len()),
            )
        })?;
        *rows = share.payload.nrows();
        *cols = share.payload.ncols();
        write_out(&berrut::row_major(&share.payload), out, capacity)
    })
}

/// Serializes the share set as a JSON array. The returned string must be
/// released with [`pbacc_string_free`]; null is returned on failure.
///
/// # Safety
/// `set` must be a live share-set handle.
#[no_mangle]
pub unsafe extern "C" fn pbacc_shares_to_json(set: *const PbaccShareSet) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let shares = shares_ref(set)?;
        let json = serde_json::to_string(shares)
            .map_err(|e| Failure(PbaccStatus::Internal, e.to_string()))?;
        result = CString::new(json)
            .map_err(|e| Failure(PbaccStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    });
    result
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from [`pbacc_shares_to_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbacc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decodes the shares of the listed nodes at the grid's data points.
///
/// `nodes` selects the fast set; pass null with `node_count = 0` to use every
/// share. The `K×cols` estimate is written row-major to `out` and the Lebesgue
/// constant of the decoder to `lebesgue` when it is not null.
///
/// # Safety
/// `set` and `grid` must be live handles, `nodes` must point to `node_count`
/// readable indices, `out` to `capacity` writable doubles, and `lebesgue`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn pbacc_decode(
    set: *const PbaccShareSet,
    grid: *const PbaccGrid,
    nodes: *const usize,
    node_count: usize,
    out: *mut f64,
    capacity: usize,
    lebesgue: *mut f64,
) -> PbaccStatus {
    guard(|| {
        let shares = shares_ref(set)?;
        let grid = grid_ref(grid)?;
        let nodes = slice(nodes, node_count, "nodes")?;
        let selected: Vec<Share> = if nodes.is_empty() {
            shares.to_vec()
        } else {
            nodes
                .iter()
                .map(|&j| {
                    shares
                        .iter()
                        .find(|s| s.node_index == j)
                        .cloned()
                        .ok_or_else(|| {
                            Failure(
                                PbaccStatus::InvalidArgument,
                                format!("no share for node {j}"),
                            )
                        })
                })
                .collect::<Result<_, _>>()?
        };
        let decoded = berrut::decode(&selected, grid)?;
        write_out(&berrut::row_major(&decoded.values), out, capacity)?;
        if let Some(l) = lebesgue.as_mut() {
            *l = decoded.lebesgue;
        }
        Ok(())
    })
}

/// Leakage bound in bits for the listed colluding nodes.
///
/// A positive `floor` is used as an absolute eigenvalue floor; zero or a
/// negative value selects the default trace-relative floor.
///
/// # Safety
/// `grid` must be a live grid handle, `colluders` must point to
/// `colluder_count` readable indices and `out_bits` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbacc_leakage_bound(
    grid: *const PbaccGrid,
    colluders: *const usize,
    colluder_count: usize,
    amplitude: f64,
    sigma_n: f64,
    floor: f64,
    out_bits: *mut f64,
) -> PbaccStatus {
    guard(|| {
        let grid = grid_ref(grid)?;
        if out_bits.is_null() {
            return Err(null("out_bits"));
        }
        let nodes = slice(colluders, colluder_count, "colluders")?.to_vec();
        let scenario = CollusionScenario::new(nodes, grid.n())?;
        let floor = if floor > 0.0 {
            Floor::Absolute(floor)
        } else {
            Floor::default()
        };
        let report = privacy::leakage_bound(
            grid,
            &scenario,
            &LeakageParams::new(amplitude, sigma_n, floor),
        )?;
        *out_bits = report.i_l;
        Ok(())
    })
}

/// Relative mean error of `approx` against `exact`, skipping near-zero
/// reference entries.
///
/// # Safety
/// `approx` and `exact` must each point to `len` readable doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pbacc_rme(
    approx: *const f64,
    exact: *const f64,
    len: usize,
    out: *mut f64,
) -> PbaccStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = DMatrix::from_row_slice(len, 1, slice(approx, len, "approx")?);
        let e = DMatrix::from_row_slice(len, 1, slice(exact, len, "exact")?);
        *out = pbacc::sim::rme(&a, &e)?;
        Ok(())
    })
}
