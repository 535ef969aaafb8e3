//! C ABI over `learngraph`.
//!
//! Every fallible function returns an [`LgStatus`]; on failure the message
//! is kept per thread and read with [`lg_last_error_message`]. Graphs are
//! opaque [`LgGraph`] handles released with [`lg_graph_free`]; strings
//! returned through `out` pointers are released with [`lg_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use learngraph::analysis::total_complexity;
use learngraph::builders::{build_kclique, build_kdistinctness, build_subgraph, BuildOptions, Family, GraphInput, ProblemInstance, SubgraphPattern};
use learngraph::emit::{graph_dot, graph_json, parse_graph_json};
use learngraph::graph::{check_flow, validate_structure, FlowAssignment, LearningGraph};
use learngraph::optimize::{balance, containment_exponent, g_of_h, stage_exponent_terms, Variables};
use learngraph::symmetry::SymmetryGroup;
use learngraph::{Error, Q};
use num_traits::ToPrimitive;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    NegativeInstance = 4,
    CapExceeded = 5,
    ParseError = 6,
    /// A rational did not fit in 64 bits.
    Overflow = 7,
    /// Any other library error; see the message.
    Failed = 8,
    Panic = 9,
}

/// A learning graph, with the flow of the instance it was built for when
/// there is one.
pub struct LgGraph {
    graph: LearningGraph,
    flow: Option<FlowAssignment>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> LgStatus {
    match e {
        Error::InvalidParameter(_) | Error::DegreeMismatch { .. } | Error::WrongMode(_) => LgStatus::InvalidParameter,
        Error::NegativeInstance(_) => LgStatus::NegativeInstance,
        Error::CapExceeded { .. } => LgStatus::CapExceeded,
        Error::Parse(_) => LgStatus::ParseError,
        _ => LgStatus::Failed,
    }
}

fn fail(status: LgStatus, msg: impl Into<String>) -> LgStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), LgStatus>) -> LgStatus {
    clear_error();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(())) => LgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LgStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: learngraph::Result<T>) -> Result<T, LgStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> Result<&'a [T], LgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(fail(LgStatus::NullPointer, "null array with nonzero length"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn string<'a>(s: *const c_char) -> Result<&'a str, LgStatus> {
    if s.is_null() {
        return Err(fail(LgStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(LgStatus::InvalidUtf8, "string is not UTF-8"))
}

unsafe fn graph_ref<'a>(g: *const LgGraph) -> Result<&'a LgGraph, LgStatus> {
    g.as_ref().ok_or_else(|| fail(LgStatus::NullPointer, "null graph handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), LgStatus> {
    if out.is_null() {
        return Err(fail(LgStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), LgStatus> {
    let c = CString::new(s).map_err(|_| fail(LgStatus::Failed, "output holds a NUL byte"))?;
    put(out, c.into_raw())
}

unsafe fn put_graph(out: *mut *mut LgGraph, graph: LearningGraph, flow: Option<FlowAssignment>) -> Result<(), LgStatus> {
    put(out, Box::into_raw(Box::new(LgGraph { graph, flow })))
}

unsafe fn put_rational(x: &Q, num: *mut i64, den: *mut i64) -> Result<(), LgStatus> {
    let (n, d) = match (x.numer().to_i64(), x.denom().to_i64()) {
        (Some(n), Some(d)) => (n, d),
        _ => return Err(fail(LgStatus::Overflow, format!("{x} does not fit in 64-bit integers"))),
    };
    put(num, n)?;
    put(den, d)
}

/// `edges` holds `2 * edge_count` vertex numbers, `u0 v0 u1 v1 ...`.
unsafe fn edge_pairs(edges: *const u32, edge_count: usize) -> Result<Vec<(u32, u32)>, LgStatus> {
    Ok(slice(edges, edge_count.checked_mul(2).ok_or_else(|| fail(LgStatus::InvalidParameter, "edge count overflows"))?)?
        .chunks_exact(2)
        .map(|p| (p[0], p[1]))
        .collect())
}

unsafe fn pattern(k: usize, edges: *const u32, edge_count: usize) -> Result<SubgraphPattern, LgStatus> {
    lib(SubgraphPattern::new(k, edge_pairs(edges, edge_count)?))
}

unsafe fn graph_instance(n: usize, edges: *const u32, edge_count: usize, h: &SubgraphPattern) -> Result<ProblemInstance, LgStatus> {
    Ok(ProblemInstance::graph(lib(GraphInput::from_edges(n, edge_pairs(edges, edge_count)?))?, h))
}

/// The message of the last failed call on this thread, or null. Valid
/// until the next call on this thread; do not free.
#[no_mangle]
pub extern "C" fn lg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a graph handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_free(g: *mut LgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// k-distinctness graph on `len` values with the flow of that input.
#[no_mangle]
pub unsafe extern "C" fn lg_build_kdist(k: usize, r: usize, values: *const u32, len: usize, out: *mut *mut LgGraph) -> LgStatus {
    guard(|| {
        let inst = ProblemInstance::distinctness(slice(values, len)?.to_vec(), k);
        let b = lib(build_kdistinctness(len, k, r, &inst))?;
        put_graph(out, b.graph, Some(b.flow))
    })
}

/// k-clique graph for an `n`-vertex input graph given as edge pairs.
#[no_mangle]
pub unsafe extern "C" fn lg_build_clique(n: usize, k: usize, r: usize, edges: *const u32, edge_count: usize, out: *mut *mut LgGraph) -> LgStatus {
    guard(|| {
        let h = lib(SubgraphPattern::clique(k))?;
        let inst = graph_instance(n, edges, edge_count, &h)?;
        let b = lib(build_kclique(n, k, r, &inst, &BuildOptions::default()))?;
        put_graph(out, b.graph, Some(b.flow))
    })
}

/// Subgraph-containment graph for pattern `(pattern_k, pattern_edges)`
/// with threshold `s = s_num / s_den`, on an `n`-vertex input graph.
#[no_mangle]
pub unsafe extern "C" fn lg_build_subgraph(
    n: usize,
    pattern_k: usize,
    pattern_edges: *const u32,
    pattern_edge_count: usize,
    r: usize,
    s_num: i64,
    s_den: i64,
    edges: *const u32,
    edge_count: usize,
    out: *mut *mut LgGraph,
) -> LgStatus {
    guard(|| {
        if s_den == 0 {
            return Err(fail(LgStatus::InvalidParameter, "s has a zero denominator"));
        }
        let h = pattern(pattern_k, pattern_edges, pattern_edge_count)?;
        let inst = graph_instance(n, edges, edge_count, &h)?;
        let s = Q::new(s_num.into(), s_den.into());
        let b = lib(build_subgraph(n, &h, r, &s, &inst, &BuildOptions::default()))?;
        put_graph(out, b.graph, Some(b.flow))
    })
}

/// Parses learning-graph JSON (flows optional).
#[no_mangle]
pub unsafe extern "C" fn lg_graph_from_json(json: *const c_char, out: *mut *mut LgGraph) -> LgStatus {
    guard(|| {
        let (graph, flow) = lib(parse_graph_json(string(json)?))?;
        put_graph(out, graph, flow)
    })
}

#[no_mangle]
pub unsafe extern "C" fn lg_graph_to_json(g: *const LgGraph, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let g = graph_ref(g)?;
        put_string(out, graph_json(&g.graph, g.flow.as_ref()))
    })
}

#[no_mangle]
pub unsafe extern "C" fn lg_graph_to_dot(g: *const LgGraph, out: *mut *mut c_char) -> LgStatus {
    guard(|| put_string(out, graph_dot(&graph_ref(g)?.graph)))
}

/// L-vertices, transitions and stages of the top-level graph.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_counts(g: *const LgGraph, nodes: *mut usize, transitions: *mut usize, stages: *mut usize) -> LgStatus {
    guard(|| {
        let g = &graph_ref(g)?.graph;
        put(nodes, g.node_count())?;
        put(transitions, g.transition_count())?;
        put(stages, g.stage_count())
    })
}

/// Structural validity.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_validate(g: *const LgGraph, valid: *mut bool) -> LgStatus {
    guard(|| put(valid, validate_structure(&graph_ref(g)?.graph).is_valid()))
}

/// Flow validity; fails with `InvalidParameter` when the handle has no flow.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_check_flow(g: *const LgGraph, valid: *mut bool) -> LgStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let flow = g.flow.as_ref().ok_or_else(|| fail(LgStatus::InvalidParameter, "graph carries no flow"))?;
        put(valid, lib(check_flow(&g.graph, flow))?.is_valid())
    })
}

/// Complexity report (JSON) under the full symmetric group.
#[no_mangle]
pub unsafe extern "C" fn lg_graph_analyze_json(g: *const LgGraph, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let g = graph_ref(g)?;
        let flow = g.flow.as_ref().ok_or_else(|| fail(LgStatus::InvalidParameter, "graph carries no flow"))?;
        let report = lib(total_complexity(&[(&g.graph, flow)], &SymmetryGroup::exhaustive(g.graph.universe)))?;
        put_string(out, serde_json::to_string(&report).expect("report serializes"))
    })
}

/// `g(H)` as a reduced fraction.
#[no_mangle]
pub unsafe extern "C" fn lg_g_of_h(k: usize, edges: *const u32, edge_count: usize, num: *mut i64, den: *mut i64) -> LgStatus {
    guard(|| put_rational(&g_of_h(&pattern(k, edges, edge_count)?), num, den))
}

/// Containment exponent `2 - 2/k - g(H)` as a reduced fraction.
#[no_mangle]
pub unsafe extern "C" fn lg_containment_exponent(k: usize, edges: *const u32, edge_count: usize, num: *mut i64, den: *mut i64) -> LgStatus {
    guard(|| put_rational(&containment_exponent(&pattern(k, edges, edge_count)?), num, den))
}

/// Balances the simplified bound of `family` ("kdist", "clique" or
/// "subgraph"); `k` is ignored for "subgraph", which reads the pattern.
/// Writes the solution as JSON.
#[no_mangle]
pub unsafe extern "C" fn lg_balance_json(
    family: *const c_char,
    k: usize,
    pattern_k: usize,
    pattern_edges: *const u32,
    pattern_edge_count: usize,
    out: *mut *mut c_char,
) -> LgStatus {
    guard(|| {
        let family: Family = lib(string(family)?.parse())?;
        let (terms, vars) = match family {
            Family::Subgraph => {
                let h = pattern(pattern_k, pattern_edges, pattern_edge_count)?;
                (lib(stage_exponent_terms(family, h.k(), h.l(), h.m()))?, Variables::Both)
            }
            _ => (lib(stage_exponent_terms(family, k, 0, 0))?, Variables::Alpha),
        };
        let sol = lib(balance(&terms, vars))?;
        put_string(out, serde_json::to_string(&sol).expect("solution serializes"))
    })
}
