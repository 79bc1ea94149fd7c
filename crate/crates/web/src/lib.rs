//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export returns a flat `Float64Array` so the page can plot it
//! without a serialization layer. The plain-Rust functions in [`demo`] do the
//! work and are what the native tests call.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

/// `[φ, |F_a|, |F_b|]` triples over `φ ∈ [0, π]`.
#[wasm_bindgen(js_name = rateCurves)]
pub fn rate_curves(
    j0: f64,
    delta_j: f64,
    m: u32,
    delta_a: f64,
    delta_b: f64,
    steps: usize,
) -> Result<Vec<f64>, JsError> {
    demo::rate_curves(j0, delta_j, m, delta_a, delta_b, steps).map_err(js_err)
}

/// Site populations of the averaged chain at time `t`, sites `-half_width..=half_width`.
#[wasm_bindgen(js_name = averagedPopulations)]
#[allow(clippy::too_many_arguments)]
pub fn averaged_populations(
    j0: f64,
    delta_j: f64,
    m: u32,
    phi: f64,
    delta_a: f64,
    delta_b: f64,
    start: i32,
    t: f64,
    half_width: i32,
) -> Result<Vec<f64>, JsError> {
    let rates = demo::Rates { j0, delta_j, m, delta_a, delta_b };
    demo::averaged_populations(&rates, phi, start.into(), t, half_width.into()).map_err(js_err)
}

/// `[t, <x>]` pairs of the two-phase ratchet in the averaged model.
#[wasm_bindgen(js_name = ratchetTrace)]
pub fn ratchet_trace(j0: f64, delta_j: f64, delta_a: f64, delta_b: f64, cycles: usize) -> Result<Vec<f64>, JsError> {
    let rates = demo::Rates { j0, delta_j, m: 2, delta_a, delta_b };
    demo::ratchet_trace(&rates, cycles).map(|r| r.trace).map_err(js_err)
}
