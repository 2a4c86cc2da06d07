//! C ABI over the `manifactor` pipeline.
//!
//! Objects cross the boundary as opaque heap handles created by `mf_*`
//! constructors and released with the matching `mf_*_free`. Every fallible
//! call returns an [`MfStatus`]; on failure a human-readable message is kept
//! per thread and can be fetched with [`mf_last_error_message`]. Panics are
//! caught and reported as [`MfStatus::Panic`], never unwound into C.
//!
//! Matrices are row-major `double` buffers. Eigenvector indices are 1-based
//! with index 1 the trivial constant vector, as in the Rust API.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manifactor::factorize::DeltaMode;
use manifactor::pipeline::{run_pipeline, PipelineConfig};
use manifactor::separate::{assign_factors, build_separability, max_cut, FactorAssignment, SdpOptions};
use manifactor::spectral::{density_normalize, pairwise_kernel, select_epsilon, spectral_decompose};
use manifactor::synthgen::{sample_rectangle, sample_torus, PointCloud};
use manifactor::{find_triplets, Error, FactorizationParams, SpectralDecomposition, TripletList};
use nalgebra::DMatrix;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// The eigensolver or SDP ascent failed to converge.
    NoConvergence = 3,
    IndexOutOfRange = 4,
    /// No triplet survived the thresholds.
    EmptyResult = 5,
    /// Output buffer shorter than required.
    BufferTooSmall = 6,
    Io = 7,
    Format = 8,
    /// The data does not support the request (disconnected graph, rank
    /// deficiency, too few factors).
    Degenerate = 9,
    Panic = 10,
}

/// Point cloud handle.
pub struct MfCloud(PointCloud);
/// Spectrum handle.
pub struct MfDecomposition(SpectralDecomposition);
/// Triplet list handle.
pub struct MfTriplets(TripletList);
/// Factor assignment handle.
pub struct MfAssignment(FactorAssignment);

/// One retained product relation `phi_k ~ phi_i * phi_j`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfTriplet {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub score: f64,
    pub eig_gap: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MfStatus {
    match err {
        Error::InvalidParameter(_) | Error::TooLarge { .. } => MfStatus::InvalidParameter,
        Error::NoConvergence { .. } | Error::SdpNoConvergence { .. } => MfStatus::NoConvergence,
        Error::Index { .. } => MfStatus::IndexOutOfRange,
        Error::EmptyTriplets => MfStatus::EmptyResult,
        Error::Io(_) => MfStatus::Io,
        Error::Format { .. } | Error::Csv(_) | Error::Json(_) | Error::Toml(_) => MfStatus::Format,
        Error::Stage { source, .. } => status_of(source),
        Error::RankDeficient { .. }
        | Error::ZeroBandwidth
        | Error::DisconnectedPoint { .. }
        | Error::Disconnected { .. }
        | Error::InsufficientFactors { .. } => MfStatus::Degenerate,
    }
}

fn fail(status: MfStatus, msg: impl Into<String>) -> MfStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), MfStatus>) -> MfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfStatus::Ok,
        Ok(Err(s)) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(MfStatus::Panic, format!("panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, MfStatus>;
}

impl<T> OrStatus<T> for manifactor::Result<T> {
    fn or_status(self) -> Result<T, MfStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, MfStatus> {
    p.as_ref().ok_or_else(|| fail(MfStatus::NullPointer, format!("`{name}` is NULL")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, MfStatus> {
    p.as_mut().ok_or_else(|| fail(MfStatus::NullPointer, format!("`{name}` is NULL")))
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, len: usize, name: &str) -> Result<(), MfStatus> {
    if len < src.len() {
        return Err(fail(MfStatus::BufferTooSmall, format!("`{name}` holds {len} values, {} needed", src.len())));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(fail(MfStatus::NullPointer, format!("`{name}` is NULL")));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

fn boxed<T>(value: T, out: &mut *mut T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or NULL if it succeeded.
/// The pointer stays valid until the next `mf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn mf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Wraps an `n x d` row-major buffer as a point cloud (no latent data).
///
/// # Safety
/// `data` must point to `n * d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_from_points(data: *const f64, n: usize, d: usize, out: *mut *mut MfCloud) -> MfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let len = n.checked_mul(d).ok_or_else(|| fail(MfStatus::InvalidParameter, "n * d overflows"))?;
        if len == 0 {
            return Err(fail(MfStatus::InvalidParameter, "n and d must be >= 1"));
        }
        let data = deref(data, "data")?;
        let slice = std::slice::from_raw_parts(data, len);
        let cloud = PointCloud::from_points(DMatrix::from_row_slice(n, d, slice)).or_status()?;
        boxed(MfCloud(cloud), out);
        Ok(())
    })
}

/// Uniform rectangle `[0,a] x [0,b]` in R^3 with `N(0, sigma^2)` noise on z.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_sample_rectangle(
    n: usize,
    a: f64,
    b: f64,
    noise_sigma: f64,
    seed: u64,
    out: *mut *mut MfCloud,
) -> MfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        boxed(MfCloud(sample_rectangle(n, a, b, noise_sigma, seed).or_status()?), out);
        Ok(())
    })
}

/// Torus with radii `major_radius > minor_radius`, angles uniform.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_sample_torus(
    n: usize,
    major_radius: f64,
    minor_radius: f64,
    seed: u64,
    out: *mut *mut MfCloud,
) -> MfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        boxed(MfCloud(sample_torus(n, major_radius, minor_radius, seed).or_status()?), out);
        Ok(())
    })
}

/// # Safety
/// `cloud` must be NULL or a valid handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_free(cloud: *mut MfCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Number of points.
///
/// # Safety
/// `cloud` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_len(cloud: *const MfCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.0.n())
}

/// Number of latent columns (0 when the cloud has no ground truth).
///
/// # Safety
/// `cloud` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_latent_dim(cloud: *const MfCloud) -> usize {
    cloud.as_ref().and_then(|c| c.0.latent()).map_or(0, |l| l.ncols())
}

/// Copies the `n x latent_dim` ground truth, row-major.
///
/// # Safety
/// `cloud` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_cloud_latent(cloud: *const MfCloud, out: *mut f64, len: usize) -> MfStatus {
    guard(|| {
        let cloud = deref(cloud, "cloud")?;
        let latent = cloud.0.latent().ok_or_else(|| fail(MfStatus::InvalidParameter, "cloud has no latent data"))?;
        let rows: Vec<f64> = latent.transpose().as_slice().to_vec();
        copy_out(&rows, out, len, "out")
    })
}

/// Kernel graph and `n_eigs` nontrivial eigenpairs.
///
/// `epsilon <= 0` selects the median rule; `neighbors == 0` keeps the dense
/// kernel; `normalize != 0` applies the density-invariant
/// normalization.
///
/// # Safety
/// `cloud` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_decompose(
    cloud: *const MfCloud,
    epsilon: f64,
    neighbors: usize,
    normalize: i32,
    n_eigs: usize,
    out: *mut *mut MfDecomposition,
) -> MfStatus {
    guard(|| {
        let cloud = deref(cloud, "cloud")?;
        let out = out_ptr(out, "out")?;
        let points = cloud.0.points();
        let eps = if epsilon > 0.0 { epsilon } else { select_epsilon(points, 1.0).or_status()? };
        let nn = (neighbors > 0).then_some(neighbors);
        let mut graph = pairwise_kernel(points, eps, nn).or_status()?;
        if normalize != 0 {
            graph = density_normalize(&graph).or_status()?;
        }
        boxed(MfDecomposition(spectral_decompose(&graph, n_eigs).or_status()?), out);
        Ok(())
    })
}

/// # Safety
/// `dec` must be NULL or a valid handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_decomposition_free(dec: *mut MfDecomposition) {
    if !dec.is_null() {
        drop(Box::from_raw(dec));
    }
}

/// Number of nontrivial eigenpairs N.
///
/// # Safety
/// `dec` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_decomposition_n_eigs(dec: *const MfDecomposition) -> usize {
    dec.as_ref().map_or(0, |d| d.0.n_eigs())
}

/// Number of points the eigenvectors are defined on.
///
/// # Safety
/// `dec` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_decomposition_n_points(dec: *const MfDecomposition) -> usize {
    dec.as_ref().map_or(0, |d| d.0.n_points())
}

/// Copies all `N + 1` eigenvalues, trivial one first.
///
/// # Safety
/// `dec` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_decomposition_eigenvalues(dec: *const MfDecomposition, out: *mut f64, len: usize) -> MfStatus {
    guard(|| {
        let dec = deref(dec, "dec")?;
        copy_out(dec.0.eigenvalues(), out, len, "out")
    })
}

/// Copies eigenvector `index` (1-based) into `out`.
///
/// # Safety
/// `dec` must be valid; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_decomposition_eigenvector(
    dec: *const MfDecomposition,
    index: usize,
    out: *mut f64,
    len: usize,
) -> MfStatus {
    guard(|| {
        let dec = deref(dec, "dec")?;
        dec.0.check_index(index).or_status()?;
        let v: Vec<f64> = dec.0.eigenvector(index).iter().copied().collect();
        copy_out(&v, out, len, "out")
    })
}

/// Product-eigenvector search. `relative != 0` measures the eigenvalue
/// gap in units of the first nontrivial eigenvalue.
///
/// # Safety
/// `dec` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_find_triplets(
    dec: *const MfDecomposition,
    delta: f64,
    gamma: f64,
    relative: i32,
    out: *mut *mut MfTriplets,
) -> MfStatus {
    guard(|| {
        let dec = deref(dec, "dec")?;
        let out = out_ptr(out, "out")?;
        let mut params = FactorizationParams::new(delta, gamma, dec.0.n_eigs()).or_status()?;
        if relative != 0 {
            params.delta_mode = DeltaMode::Relative;
        }
        boxed(MfTriplets(find_triplets(&dec.0, &params).or_status()?), out);
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a valid handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_triplets_free(t: *mut MfTriplets) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of retained triplets.
///
/// # Safety
/// `t` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_triplets_len(t: *const MfTriplets) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

/// Candidate pairs whose product was actually evaluated.
///
/// # Safety
/// `t` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_triplets_visited_pairs(t: *const MfTriplets) -> u64 {
    t.as_ref().map_or(0, |t| t.0.visited_pairs)
}

/// Copies triplet `position` (0-based, ascending `k`).
///
/// # Safety
/// `t` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_triplets_get(t: *const MfTriplets, position: usize, out: *mut MfTriplet) -> MfStatus {
    guard(|| {
        let t = deref(t, "triplets")?;
        let out = out_ptr(out, "out")?;
        let tr = t.0.triplets.get(position).ok_or_else(|| {
            fail(MfStatus::IndexOutOfRange, format!("position {position} out of range (len {})", t.0.len()))
        })?;
        *out = MfTriplet { i: tr.i, j: tr.j, k: tr.k, score: tr.score, eig_gap: tr.eig_gap };
        Ok(())
    })
}

/// Separability matrix, Max-Cut and final grouping. Uses the exact solver
/// for small problems and the seeded SDP relaxation otherwise.
///
/// # Safety
/// `t` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_separate(
    t: *const MfTriplets,
    restarts: usize,
    rounding_repeats: usize,
    seed: u64,
    out: *mut *mut MfAssignment,
) -> MfStatus {
    guard(|| {
        let t = deref(t, "triplets")?;
        let out = out_ptr(out, "out")?;
        let opts = SdpOptions { restarts, rounding_repeats, seed, ..SdpOptions::default() };
        let cut = max_cut(&build_separability(&t.0).or_status()?, &opts).or_status()?;
        boxed(MfAssignment(assign_factors(&t.0, &cut).or_status()?), out);
        Ok(())
    })
}

/// # Safety
/// `a` must be NULL or a valid handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mf_assignment_free(a: *mut MfAssignment) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Size of factor group `group` (0 or 1); 0 for other values.
///
/// # Safety
/// `a` must be a valid handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn mf_assignment_group_len(a: *const MfAssignment, group: usize) -> usize {
    a.as_ref().and_then(|a| a.0.factors().get(group).map(|g| g.len())).unwrap_or(0)
}

/// Copies the eigenvector indices of factor group `group`.
///
/// # Safety
/// `a` must be valid; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn mf_assignment_group(a: *const MfAssignment, group: usize, out: *mut usize, len: usize) -> MfStatus {
    guard(|| {
        let a = deref(a, "assignment")?;
        let g = a.0.factors().get(group).copied().ok_or_else(|| {
            fail(MfStatus::IndexOutOfRange, format!("group {group} out of range (0 or 1)"))
        })?;
        copy_out(g, out, len, "out")
    })
}

/// Cut weight of the final bipartition.
///
/// # Safety
/// `a` must be a valid handle or NULL (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn mf_assignment_cut_value(a: *const MfAssignment) -> f64 {
    a.as_ref().map_or(f64::NAN, |a| a.0.cut_value)
}

/// Runs the whole pipeline from a TOML configuration, writing every output
/// file. A non-NULL `output_dir` overrides the configured directory.
///
/// # Safety
/// `config_toml` must be a NUL-terminated UTF-8 string; `output_dir` must be
/// NULL or NUL-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn mf_run_pipeline_toml(config_toml: *const c_char, output_dir: *const c_char) -> MfStatus {
    guard(|| {
        let text = utf8(config_toml, "config_toml")?;
        let mut cfg = PipelineConfig::from_toml(text).or_status()?;
        if !output_dir.is_null() {
            cfg.output_dir = utf8(output_dir, "output_dir")?.into();
        }
        run_pipeline(&cfg).or_status()?;
        Ok(())
    })
}

unsafe fn utf8<'a>(p: *const c_char, name: &str) -> Result<&'a str, MfStatus> {
    if p.is_null() {
        return Err(fail(MfStatus::NullPointer, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(MfStatus::InvalidParameter, format!("`{name}` is not UTF-8: {e}")))
}
