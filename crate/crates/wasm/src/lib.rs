//! Browser demo bindings. Three operations, each returning a JSON
//! payload the static page renders: sign-matrix construction with the
//! full property report, bound tables with a δ-curve, and the restart
//! optimizer on small problems.
//!
//! The payload builders are plain Rust (testable on any target); the
//! `*_json` exports wrap them for wasm-bindgen.

use serde_json::json;
use wasm_bindgen::prelude::*;

use projconst_core::bounds;
use projconst_core::frame::{
    check_mutually_unbiased, frame_report, frames_from_sign_matrix, verify_properties,
    DEFAULT_TOL,
};
use projconst_core::gf2::build_sign_matrix;
use projconst_core::optimizer::{certify, maximize, OptimizerConfig};

/// Largest family parameter the demo will build (120×136 renders fine;
/// anything bigger is pointless on a canvas).
const DEMO_MAX_S: u32 = 4;

/// Caps that keep a single-threaded browser tab responsive.
const DEMO_MAX_N: u32 = 32;
const DEMO_MAX_RESTARTS: u32 = 200;

fn construct_payload(s: u32) -> Result<String, String> {
    if !(2..=DEMO_MAX_S).contains(&s) {
        return Err(format!("s must be between 2 and {DEMO_MAX_S}"));
    }
    let x = build_sign_matrix(s).map_err(|e| e.to_string())?;
    let report = verify_properties(&x, DEFAULT_TOL);
    let (v, w) = frames_from_sign_matrix(&x, DEFAULT_TOL).map_err(|e| e.to_string())?;
    let rv = frame_report(&v, DEFAULT_TOL);
    let rw = frame_report(&w, DEFAULT_TOL);
    let unb = check_mutually_unbiased(&v, &w, DEFAULT_TOL).map_err(|e| e.to_string())?;

    let entries: Vec<Vec<i8>> = (0..x.k())
        .map(|i| (0..x.l()).map(|j| x.entries()[(i, j)] as i8).collect())
        .collect();
    let payload = json!({
        "s": s,
        "k": x.k(),
        "l": x.l(),
        "m": report.rank,
        "entries": entries,
        "property_report": report,
        "frame_v": rv,
        "frame_w": rw,
        "unbiasedness": unb,
        "all_pass": report.all_pass(),
    });
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

fn bounds_payload(m: u32, k: u32, l: u32, n_max: u32) -> Result<String, String> {
    let report = bounds::report_triple(m, k, l).map_err(|e| e.to_string())?;
    let n_max = n_max.clamp(m.max(2), 512);
    let mut curve_n = Vec::new();
    let mut curve_delta = Vec::new();
    for n in m..=n_max {
        curve_n.push(n);
        curve_delta.push(bounds::delta(m, n).map_err(|e| e.to_string())?);
    }
    let payload = json!({
        "report": report,
        "curve": {
            "m": m,
            "n": curve_n,
            "delta": curve_delta,
            "sqrt_m": bounds::kadec_snobar(m),
            "gamma": report.gamma,
            "gamma_n": k + l,
        },
    });
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

fn optimize_payload(m: u32, n: u32, restarts: u32, seed: u64) -> Result<String, String> {
    if m < 1 || n < m {
        return Err("need n >= m >= 1".into());
    }
    if n > DEMO_MAX_N {
        return Err(format!("demo is capped at n <= {DEMO_MAX_N}"));
    }
    if restarts == 0 || restarts > DEMO_MAX_RESTARTS {
        return Err(format!("restarts must be in 1..={DEMO_MAX_RESTARTS}"));
    }
    let mut cfg = OptimizerConfig::new(m, n);
    cfg.restarts = restarts;
    cfg.seed = seed;
    let result = maximize(&cfg).map_err(|e| e.to_string())?;
    let spectral = certify(&result);
    let delta = bounds::delta(m, n).map_err(|e| e.to_string())?;
    let payload = json!({
        "m": m,
        "n": n,
        "seed": seed,
        "value": result.value,
        "best_restart": result.best_restart,
        "iterations_used": result.iterations_used,
        "restarts_converged": result.restarts_converged,
        "histogram": result.value_histogram,
        "spectral_report": spectral,
        "delta": delta,
        "sqrt_m": bounds::kadec_snobar(m),
        "t": result.best.t,
    });
    serde_json::to_string(&payload).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn construct_json(s: u32) -> Result<String, JsValue> {
    construct_payload(s).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bounds_json(m: u32, k: u32, l: u32, n_max: u32) -> Result<String, JsValue> {
    bounds_payload(m, k, l, n_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn optimize_json(m: u32, n: u32, restarts: u32, seed: u32) -> Result<String, JsValue> {
    optimize_payload(m, n, restarts, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn construct_payload_carries_the_grid_and_report() {
        let payload: Value = serde_json::from_str(&construct_payload(2).unwrap()).unwrap();
        assert_eq!(payload["k"], 6);
        assert_eq!(payload["l"], 10);
        assert_eq!(payload["m"], 5);
        assert_eq!(payload["all_pass"], Value::Bool(true));
        assert_eq!(payload["entries"].as_array().unwrap().len(), 6);
        assert_eq!(payload["property_report"]["a_value"], 12.0);
        assert!(construct_payload(1).is_err());
        assert!(construct_payload(9).is_err());
    }

    #[test]
    fn bounds_payload_matches_the_library_values() {
        let payload: Value = serde_json::from_str(&bounds_payload(5, 6, 10, 40).unwrap()).unwrap();
        let gamma = payload["report"]["gamma"].as_f64().unwrap();
        assert!((gamma - 5.0 * (11.0 + 6.0 * 5.0_f64.sqrt()) / 59.0).abs() < 1e-14);
        let curve = payload["curve"]["delta"].as_array().unwrap();
        assert_eq!(curve.len(), 36);
        assert!(payload["curve"]["sqrt_m"].as_f64().unwrap() > gamma);
    }

    #[test]
    fn optimize_payload_reaches_known_values() {
        let payload: Value =
            serde_json::from_str(&optimize_payload(2, 3, 10, 1).unwrap()).unwrap();
        assert!((payload["value"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-6);
        assert_eq!(payload["histogram"].as_array().unwrap().len(), 10);
        assert!(optimize_payload(5, 40, 10, 1).is_err());
        assert!(optimize_payload(2, 3, 0, 1).is_err());
    }
}
