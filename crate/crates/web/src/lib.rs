//! Browser demo: WebAssembly bindings over a handful of `fica` operations.
//!
//! Build with `wasm-pack build crates/web --target web --out-dir www/pkg`
//! and serve `crates/web/www`.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = transformTable)]
pub fn transform_table(values: Vec<f64>, kind: &str) -> Result<Vec<f64>, JsError> {
    js(demo::transform_table(&values, kind))
}

#[wasm_bindgen(js_name = energyProfile)]
pub fn energy_profile(values: Vec<f64>, kind: &str) -> Result<Vec<f64>, JsError> {
    js(demo::energy_profile(&values, kind))
}

#[wasm_bindgen(js_name = sparseErrorCurve)]
pub fn sparse_error_curve(values: Vec<f64>, kind: &str) -> Result<Vec<f64>, JsError> {
    js(demo::sparse_error_curve(&values, kind))
}

#[wasm_bindgen(js_name = sampleValues)]
pub fn sample_values(family: &str, m: usize, seed: u32, bidder: usize) -> Result<Vec<f64>, JsError> {
    js(demo::sample_values(family, m, seed as u64, bidder))
}
