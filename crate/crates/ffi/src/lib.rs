// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! C interface to the homophily tests.
//!
//! Graphs and reports are opaque handles created and freed through this
//! interface. Every fallible function returns an [`HtStatus`]; on failure
//! a description is available from [`ht_last_error_message`] on the same
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use homotest::community_detection::{walktrap, CutCriterion, Detector};
use homotest::graph::{parse_edge_list, CommunityAssignment, Graph, Indexing, ParseOptions};
use homotest::homophily::t_statistic;
use homotest::hypothesis_tests::{
    asymptotic_threshold, bootstrap_test, labeled_bootstrap_test, TestReport,
};
use homotest::null_models::{fit_null, NullKind};
use homotest::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Degenerate = 4,
    Domain = 5,
    Refused = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtNull {
    Er = 0,
    ChungLu = 1,
    Lsm = 2,
}

impl From<HtNull> for NullKind {
    fn from(n: HtNull) -> Self {
        match n {
            HtNull::Er => NullKind::Er,
            HtNull::ChungLu => NullKind::ChungLu,
            HtNull::Lsm => NullKind::Lsm,
        }
    }
}

/// Opaque undirected graph.
pub struct HtGraph(Graph);

/// Opaque test report.
pub struct HtReport(TestReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> HtStatus {
    match e {
        Error::Parse { .. } | Error::Json(_) => HtStatus::Parse,
        Error::Validation(_) => HtStatus::InvalidArgument,
        Error::Domain(_) => HtStatus::Domain,
        Error::Assignment(_) | Error::Degenerate(_) => HtStatus::Degenerate,
        Error::Refused(_) => HtStatus::Refused,
        Error::Io(_) => HtStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard<F>(body: F) -> HtStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HtStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is a null pointer"));
            HtStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            HtStatus::Panic
        }
    }
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: caller promises `p` is null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: caller promises `p` points to `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the caller, writable.
    unsafe { p.write(value) };
    Ok(())
}

unsafe fn labels_for(
    g: &Graph,
    labels: *const usize,
    len: usize,
) -> Result<CommunityAssignment, Failure> {
    // SAFETY: forwarded caller contract.
    let raw = unsafe { slice(labels, len, "labels") }?;
    if raw.len() != g.node_count() {
        return Err(Error::Validation(format!(
            "{} labels for {} nodes",
            raw.len(),
            g.node_count()
        ))
        .into());
    }
    Ok(CommunityAssignment::from_labels(raw))
}

/// Message for the last failure on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ht_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a graph on `n` nodes from `len` pairs `(sources[i], targets[i])`.
///
/// # Safety
/// `sources` and `targets` must point to `len` elements each; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ht_graph_from_edges(
    n: usize,
    sources: *const usize,
    targets: *const usize,
    len: usize,
    out: *mut *mut HtGraph,
) -> HtStatus {
    guard(|| {
        // SAFETY: caller contract.
        let (s, t) = unsafe {
            (
                slice(sources, len, "sources")?,
                slice(targets, len, "targets")?,
            )
        };
        let g = Graph::from_edges(n, s.iter().copied().zip(t.iter().copied()))?;
        // SAFETY: caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(HtGraph(g))), "out") }
    })
}

/// Parses an edge list (NUL-terminated text).
///
/// # Safety
/// `text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_graph_parse(
    text: *const c_char,
    one_indexed: bool,
    out: *mut *mut HtGraph,
) -> HtStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Null("text"));
        }
        // SAFETY: non-null C string per caller contract.
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| Error::Validation("edge list is not UTF-8".into()))?;
        let options = ParseOptions {
            indexing: if one_indexed {
                Indexing::One
            } else {
                Indexing::Zero
            },
            ..ParseOptions::default()
        };
        let g = parse_edge_list(text, &options)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(HtGraph(g))), "out") }
    })
}

/// # Safety
/// `g` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ht_graph_free(g: *mut HtGraph) {
    if !g.is_null() {
        // SAFETY: handle was created by Box::into_raw.
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_graph_node_count(g: *const HtGraph) -> usize {
    // SAFETY: caller contract.
    unsafe { g.as_ref() }.map_or(0, |g| g.0.node_count())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_graph_edge_count(g: *const HtGraph) -> usize {
    // SAFETY: caller contract.
    unsafe { g.as_ref() }.map_or(0, |g| g.0.edge_count())
}

/// Homophily statistic of the graph under `labels` (one per node).
///
/// # Safety
/// `g` must be a live handle, `labels` must hold `len` elements and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_t_statistic(
    g: *const HtGraph,
    labels: *const usize,
    len: usize,
    out: *mut f64,
) -> HtStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { reference(g, "graph") }?;
        // SAFETY: caller contract.
        let c = unsafe { labels_for(&g.0, labels, len) }?;
        let t = t_statistic(&c, &g.0)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, t, "out") }
    })
}

/// Walktrap with the modularity cut. Writes zero-based community labels to
/// `labels_out` (room for every node), the number of communities to
/// `k_out` and the statistic of the result to `statistic_out`.
///
/// # Safety
/// `g` must be a live handle; `labels_out` must have room for
/// `ht_graph_node_count(g)` elements; the other pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_walktrap(
    g: *const HtGraph,
    steps: usize,
    labels_out: *mut usize,
    k_out: *mut usize,
    statistic_out: *mut f64,
) -> HtStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { reference(g, "graph") }?;
        let result = walktrap(&g.0, steps, CutCriterion::Modularity)?;
        let t = t_statistic(&result.assignment, &g.0)?;
        if labels_out.is_null() {
            return Err(Failure::Null("labels_out"));
        }
        // SAFETY: room for every node per caller contract.
        let dest = unsafe { std::slice::from_raw_parts_mut(labels_out, g.0.node_count()) };
        dest.copy_from_slice(result.assignment.labels());
        // SAFETY: caller contract.
        unsafe {
            write_out(k_out, result.assignment.k(), "k_out")?;
            write_out(statistic_out, t, "statistic_out")
        }
    })
}

fn check_null_kind(raw: i32) -> Result<HtNull, Failure> {
    match raw {
        0 => Ok(HtNull::Er),
        1 => Ok(HtNull::ChungLu),
        2 => Ok(HtNull::Lsm),
        other => Err(Error::Validation(format!("unknown null model code {other}")).into()),
    }
}

/// Bootstrap test with Walktrap detection against a fitted null
/// (an [`HtNull`] code).
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_bootstrap_test(
    g: *const HtGraph,
    null: i32,
    b: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut HtReport,
) -> HtStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { reference(g, "graph") }?;
        let fitted = fit_null(&g.0, check_null_kind(null)?.into())?;
        let report = bootstrap_test(&g.0, &fitted, b, &Detector::default(), alpha, seed)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(HtReport(report))), "out") }
    })
}

/// Bootstrap test with fixed labels (one per node).
///
/// # Safety
/// `g` must be a live handle, `labels` must hold `len` elements and `out`
/// must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ht_labeled_bootstrap_test(
    g: *const HtGraph,
    labels: *const usize,
    len: usize,
    null: i32,
    b: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut HtReport,
) -> HtStatus {
    guard(|| {
        // SAFETY: caller contract.
        let g = unsafe { reference(g, "graph") }?;
        // SAFETY: caller contract.
        let c = unsafe { labels_for(&g.0, labels, len) }?;
        let fitted = fit_null(&g.0, check_null_kind(null)?.into())?;
        let report = labeled_bootstrap_test(&g.0, &c, &fitted, b, alpha, seed)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, Box::into_raw(Box::new(HtReport(report))), "out") }
    })
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ht_report_free(r: *mut HtReport) {
    if !r.is_null() {
        // SAFETY: handle was created by Box::into_raw.
        drop(unsafe { Box::from_raw(r) });
    }
}

/// Observed statistic; NaN for a null handle.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ht_report_t_obs(r: *const HtReport) -> f64 {
    // SAFETY: caller contract.
    unsafe { r.as_ref() }.map_or(f64::NAN, |r| r.0.t_obs)
}

/// Bootstrap p-value; NaN when absent.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ht_report_p_value(r: *const HtReport) -> f64 {
    // SAFETY: caller contract.
    unsafe { r.as_ref() }
        .and_then(|r| r.0.p_value)
        .unwrap_or(f64::NAN)
}

/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ht_report_reject(r: *const HtReport) -> bool {
    // SAFETY: caller contract.
    unsafe { r.as_ref() }.is_some_and(|r| r.0.reject)
}

/// Copies up to `capacity` replicate statistics into `buffer` and returns
/// the total number available.
///
/// # Safety
/// `r` must be null or a live report handle; `buffer` must have room for
/// `capacity` elements (it may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn ht_report_samples(
    r: *const HtReport,
    buffer: *mut f64,
    capacity: usize,
) -> usize {
    // SAFETY: caller contract.
    let Some(r) = (unsafe { r.as_ref() }) else {
        return 0;
    };
    let samples = &r.0.bootstrap_samples;
    let count = samples.len().min(capacity);
    if count > 0 && !buffer.is_null() {
        // SAFETY: room for `capacity >= count` elements.
        unsafe { ptr::copy_nonoverlapping(samples.as_ptr(), buffer, count) };
    }
    samples.len()
}

/// The report as JSON. Free the string with [`ht_string_free`]. Null on
/// failure.
///
/// # Safety
/// `r` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn ht_report_json(r: *const HtReport) -> *mut c_char {
    // SAFETY: caller contract.
    let Some(r) = (unsafe { r.as_ref() }) else {
        set_error("report is a null pointer".into());
        return ptr::null_mut();
    };
    match serde_json::to_string(&r.0).map(CString::new) {
        Ok(Ok(s)) => s.into_raw(),
        _ => {
            set_error("report could not be serialized".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ht_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Asymptotic rejection threshold; see the library documentation.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ht_asymptotic_threshold(
    n: usize,
    k: usize,
    alpha: f64,
    p_hat: f64,
    epsilon: f64,
    equal_sizes: bool,
    out: *mut f64,
) -> HtStatus {
    guard(|| {
        let c = asymptotic_threshold(n, k, alpha, p_hat, epsilon, equal_sizes)?;
        // SAFETY: caller contract.
        unsafe { write_out(out, c, "out") }
    })
}
