//! C ABI over the figrl embedding pipeline.
//!
//! Graphs and models are opaque handles created by `figrl_*_load`,
//! `figrl_graph_parse` or `figrl_embed` and released with the matching
//! `_free`. Every fallible call returns a [`FigrlStatus`]; on failure the
//! message is available from [`figrl_last_error_message`] on the same
//! thread. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use figrl::io::{load_model, save_model};
use figrl::{embed_with_sketch_size, fold_in, sketch_size, ApproxParams, EmbeddingModel, Error, Graph, UnseenNode};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    UnknownNode = 6,
    BufferTooSmall = 7,
    Internal = 8,
}

/// Opaque graph handle.
pub struct FigrlGraph(Graph);

/// Opaque embedding model handle.
pub struct FigrlModel(EmbeddingModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(err: &Error) -> FigrlStatus {
    match err {
        Error::Parse { .. } | Error::SelfLoop { .. } | Error::Format(_) => FigrlStatus::Parse,
        Error::Io { .. } => FigrlStatus::Io,
        Error::Numerical(_) | Error::NotOrthonormal(_) => FigrlStatus::Numerical,
        Error::UnknownNode(_) => FigrlStatus::UnknownNode,
        _ => FigrlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (FigrlStatus, String)>) -> FigrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FigrlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FigrlStatus::Internal
        }
    }
}

fn lib(err: Error) -> (FigrlStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (FigrlStatus, String) {
    (FigrlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (FigrlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FigrlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FigrlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (FigrlStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn figrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads an edge list (`u v [w]` per line) from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn figrl_graph_load(path: *const c_char, out: *mut *mut FigrlGraph) -> FigrlStatus {
    guard(|| {
        let path = text(path, "path")?;
        let g = Graph::load_edge_list(path).map_err(lib)?;
        write(out, Box::into_raw(Box::new(FigrlGraph(g))), "out")
    })
}

/// Parses an edge list held in memory.
///
/// # Safety
/// `edges` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn figrl_graph_parse(edges: *const c_char, out: *mut *mut FigrlGraph) -> FigrlStatus {
    guard(|| {
        let edges = text(edges, "edges")?;
        let g = Graph::parse_edge_list(edges).map_err(lib)?;
        write(out, Box::into_raw(Box::new(FigrlGraph(g))), "out")
    })
}

/// # Safety
/// `graph` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn figrl_graph_free(graph: *mut FigrlGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_graph_counts(
    graph: *const FigrlGraph,
    nodes: *mut usize,
    edges: *mut usize,
) -> FigrlStatus {
    guard(|| {
        let g = &borrow(graph, "graph")?.0;
        write(nodes, g.n(), "nodes")?;
        write(edges, g.m(), "edges")
    })
}

/// Default sketch size for `n` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_sketch_size(n: usize, epsilon: f64, k: usize, out: *mut usize) -> FigrlStatus {
    guard(|| {
        let params = ApproxParams::new(epsilon, k).map_err(lib)?;
        write(out, sketch_size(n, &params).map_err(lib)?, "out")
    })
}

/// Embeds `graph`. `d = 0` selects the default sketch size.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_embed(
    graph: *const FigrlGraph,
    epsilon: f64,
    k: usize,
    seed: u64,
    d: usize,
    out: *mut *mut FigrlModel,
) -> FigrlStatus {
    guard(|| {
        let g = &borrow(graph, "graph")?.0;
        let params = ApproxParams::new(epsilon, k).map_err(lib)?;
        let d = if d == 0 { sketch_size(g.n(), &params).map_err(lib)? } else { d };
        let model = embed_with_sketch_size(g, &params, seed, d).map_err(lib)?;
        write(out, Box::into_raw(Box::new(FigrlModel(model))), "out")
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_free(model: *mut FigrlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Node count, embedding dimension and sketch size of `model`.
///
/// # Safety
/// `model` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_dims(
    model: *const FigrlModel,
    n: *mut usize,
    k: *mut usize,
    d: *mut usize,
) -> FigrlStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        write(n, m.n(), "n")?;
        write(k, m.k(), "k")?;
        write(d, m.d(), "d")
    })
}

/// Copies the `n x k` embedding row-major into `buf` of length `len`.
///
/// # Safety
/// `model` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_copy_embedding(
    model: *const FigrlModel,
    buf: *mut f64,
    len: usize,
) -> FigrlStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        let need = m.n() * m.k();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < need {
            return Err((FigrlStatus::BufferTooSmall, format!("need {need} values, got {len}")));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for r in 0..m.n() {
            for c in 0..m.k() {
                out[r * m.k() + c] = m.y[(r, c)];
            }
        }
        Ok(())
    })
}

/// Row index of node `id` in the embedding.
///
/// # Safety
/// `model` must be a live handle, `id` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_node_index(
    model: *const FigrlModel,
    id: *const c_char,
    out: *mut usize,
) -> FigrlStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        let id = text(id, "id")?;
        let i = m
            .index_of(id)
            .ok_or_else(|| (FigrlStatus::UnknownNode, format!("unknown node '{id}'")))?;
        write(out, i, "out")
    })
}

/// Folds an unseen node with `count` weighted links to seen nodes into
/// `model`, writing `k` values to `out`.
///
/// # Safety
/// `targets` and `weights` must be valid for `count` reads, each target
/// NUL-terminated; `out` must be valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_fold_in(
    model: *const FigrlModel,
    targets: *const *const c_char,
    weights: *const f64,
    count: usize,
    out: *mut f64,
    out_len: usize,
) -> FigrlStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        if targets.is_null() || weights.is_null() || out.is_null() {
            return Err(null("targets, weights or out"));
        }
        if out_len < m.k() {
            return Err((FigrlStatus::BufferTooSmall, format!("need {} values, got {out_len}", m.k())));
        }
        let names = std::slice::from_raw_parts(targets, count);
        let ws = std::slice::from_raw_parts(weights, count);
        let mut links = Vec::with_capacity(count);
        for (&name, &w) in names.iter().zip(ws) {
            links.push((text(name, "target")?.to_owned(), w));
        }
        let node = UnseenNode::new("<unseen>", links).map_err(lib)?;
        let y = fold_in(m, &node).map_err(lib)?;
        ptr::copy_nonoverlapping(y.as_ptr(), out, y.len());
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_save(model: *const FigrlModel, path: *const c_char) -> FigrlStatus {
    guard(|| {
        let m = &borrow(model, "model")?.0;
        save_model(m, text(path, "path")?).map_err(lib)
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn figrl_model_load(path: *const c_char, out: *mut *mut FigrlModel) -> FigrlStatus {
    guard(|| {
        let m = load_model(text(path, "path")?).map_err(lib)?;
        write(out, Box::into_raw(Box::new(FigrlModel(m))), "out")
    })
}
