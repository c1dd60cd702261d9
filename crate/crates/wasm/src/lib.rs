//! Browser bindings for the interactive demo page.
//!
//! Three operations, all JSON in / JSON out so the page needs no generated
//! glue types:
//!
//! - [`run_convergence_demo`] — generate a random network and trace the
//!   per-iteration weighted sum-rates of the selected algorithms;
//! - [`run_diagnostics_demo`] — solve with the fixed-point algorithm and
//!   report stationarity residuals, scaling-invariance deviations, and the
//!   gradient finite-difference check;
//! - [`water_fill_demo`] — the classic water-filling allocation for a
//!   hand-picked set of subchannel gains.
//!
//! Build with `wasm-pack build crates/wasm --target web` (or wasm-bindgen
//! directly); `www/index.html` is the host page.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use duallink_core::dual_link::{InitStrategy, SolverConfig};
use duallink_core::harness::{self, Algorithm, ExperimentConfig};
use duallink_core::hermitian::water_fill_weighted;
use duallink_core::kkt;

#[derive(Deserialize)]
#[serde(default)]
struct DemoConfig {
    links: usize,
    tx: usize,
    rx: usize,
    gain_diag_db: f64,
    gain_offdiag_db: f64,
    total_power: f64,
    seed: u64,
    realization: u64,
    algorithms: Vec<Algorithm>,
    tol: f64,
    max_iters: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            links: 10,
            tx: 3,
            rx: 4,
            gain_diag_db: 0.0,
            gain_offdiag_db: 0.0,
            total_power: 100.0,
            seed: 1,
            realization: 0,
            algorithms: vec![Algorithm::DualLink, Algorithm::Pwf, Algorithm::Wmmse],
            tol: 1e-8,
            max_iters: 80,
        }
    }
}

impl DemoConfig {
    fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            links: self.links,
            tx: self.tx,
            rx: self.rx,
            gain_diag_db: self.gain_diag_db,
            gain_offdiag_db: self.gain_offdiag_db,
            total_power: self.total_power,
            master_seed: self.seed,
            realizations: 1,
            ..ExperimentConfig::default()
        }
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            init: InitStrategy::RandomSeeded(self.seed.wrapping_mul(0x9E37).wrapping_add(1)),
            record_trace: true,
        }
    }
}

#[derive(Serialize)]
struct TraceOut {
    algorithm: String,
    converged: bool,
    iterations: usize,
    wsr: f64,
    forward: Vec<f64>,
    reverse: Vec<f64>,
    residual: Vec<f64>,
    error: Option<String>,
}

fn convergence_json(config_json: &str) -> Result<String, String> {
    let cfg: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let spec = harness::generate_network(&cfg.experiment(), cfg.realization)
        .map_err(|e| e.to_string())?;
    let runs = harness::run_convergence(&spec, &cfg.algorithms, &cfg.solver());
    let out: Vec<TraceOut> = runs
        .into_iter()
        .map(|run| match run.outcome {
            Ok(result) => {
                let trace = result.trace.as_ref().unwrap();
                TraceOut {
                    algorithm: run.algorithm.to_string(),
                    converged: result.converged,
                    iterations: result.iterations,
                    wsr: result.wsr,
                    forward: trace.records.iter().map(|r| r.forward_wsr).collect(),
                    reverse: trace.records.iter().map(|r| r.reverse_wsr).collect(),
                    residual: trace.records.iter().map(|r| r.kkt_residual).collect(),
                    error: None,
                }
            }
            Err(e) => TraceOut {
                algorithm: run.algorithm.to_string(),
                converged: false,
                iterations: 0,
                wsr: f64::NAN,
                forward: vec![],
                reverse: vec![],
                residual: vec![],
                error: Some(e.to_string()),
            },
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Trace the selected algorithms on one random network realization.
#[wasm_bindgen]
pub fn run_convergence_demo(config_json: &str) -> Result<String, JsValue> {
    convergence_json(config_json).map_err(|e| JsValue::from_str(&e))
}

fn diagnostics_json(config_json: &str) -> Result<String, String> {
    let cfg: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let spec = harness::generate_network(&cfg.experiment(), cfg.realization)
        .map_err(|e| e.to_string())?;
    let solver = SolverConfig {
        record_trace: false,
        ..cfg.solver()
    };
    let result = duallink_core::dual_link::solve(&spec, &solver).map_err(|e| e.to_string())?;
    let report = kkt::diagnostics_report(&spec, &result, &[0.1, 0.5, 2.0, 10.0], 5, cfg.seed)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Solve with the fixed-point algorithm and report the stationarity and
/// scaling-invariance diagnostics.
#[wasm_bindgen]
pub fn run_diagnostics_demo(config_json: &str) -> Result<String, JsValue> {
    diagnostics_json(config_json).map_err(|e| JsValue::from_str(&e))
}

#[derive(Deserialize)]
struct WaterFillInput {
    gains: Vec<f64>,
    #[serde(default)]
    weights: Vec<f64>,
    budget: f64,
}

#[derive(Serialize)]
struct WaterFillOutput {
    allocations: Vec<f64>,
    /// Inverse gains 1/g (the "floor" heights in the classic picture).
    floors: Vec<f64>,
    level: f64,
}

fn water_fill_json(input_json: &str) -> Result<String, String> {
    let input: WaterFillInput = serde_json::from_str(input_json).map_err(|e| e.to_string())?;
    let weights = if input.weights.is_empty() {
        vec![1.0; input.gains.len()]
    } else {
        input.weights.clone()
    };
    let allocations =
        water_fill_weighted(&input.gains, &weights, input.budget).map_err(|e| e.to_string())?;
    let level = allocations
        .iter()
        .zip(&input.gains)
        .zip(&weights)
        .filter(|((p, _), _)| **p > 0.0)
        .map(|((p, g), w)| (p + 1.0 / g) / w)
        .next()
        .unwrap_or(0.0);
    let floors = input
        .gains
        .iter()
        .map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY })
        .collect();
    serde_json::to_string(&WaterFillOutput {
        allocations,
        floors,
        level,
    })
    .map_err(|e| e.to_string())
}

/// Water-filling power allocation over parallel subchannels.
#[wasm_bindgen]
pub fn water_fill_demo(input_json: &str) -> Result<String, JsValue> {
    water_fill_json(input_json).map_err(|e| JsValue::from_str(&e))
}
