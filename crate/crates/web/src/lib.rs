//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a flat `Vec<f64>`, which
//! arrives in JavaScript as a `Float64Array`. Errors surface as thrown strings.

use sgdlab::experiments::{exit_row_analytic, exit_row_sgd, himmelblau_path, ExitSetup};
use sgdlab::landscape::{Landscape, HIMMELBLAU_MAXIMUM};
use sgdlab::noise::NoiseModel;
use sgdlab::sgd::{run, SgdRun, StopRule};
use wasm_bindgen::prelude::*;

fn noise_for(kind: &str, alpha: f64) -> Result<NoiseModel, String> {
    let n = match kind {
        "stable" => NoiseModel::alpha_stable(alpha),
        "pareto" => NoiseModel::pareto_symmetric(alpha, 1.0),
        "gaussian" => NoiseModel::gaussian(1.0),
        other => return Err(format!("unknown noise '{other}'")),
    };
    n.map_err(|e| e.to_string())
}

/// Iterates of SGD on the double well, every `stride`-th step starting with
/// `x0`. `noise` is `"stable"`, `"pareto"` or `"gaussian"`.
#[wasm_bindgen]
pub fn double_well_trajectory(
    noise: &str,
    alpha: f64,
    epsilon: f64,
    x0: f64,
    steps: u32,
    stride: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let model = noise_for(noise, alpha)?;
    let mut cfg = SgdRun::new(epsilon, x0, steps.into(), seed.into());
    cfg.record_stride = stride.max(1).into();
    let summary = run(&cfg, &Landscape::double_well(), &model, StopRule::FixedSteps)
        .map_err(|e| e.to_string())?;
    Ok(summary.path.unwrap_or_default().into_iter().map(|(_, x)| x).collect())
}

/// Exit sides from the sharp maximum of the V-shape (`ε = 0.01`, `δ = 1`)
/// under double-exponential noise.
///
/// Returns `[mu_up, mu_down, est_left, est_right, sim_left, sim_right]`;
/// the simulated pair is `NaN` when `runs == 0`.
#[wasm_bindgen]
pub fn escape_probabilities(
    alpha: f64,
    beta: f64,
    c_l: f64,
    c_r: f64,
    runs: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let setup = ExitSetup { alpha, c_l, c_r, ..ExitSetup::default() };
    let row = if runs == 0 {
        exit_row_analytic(&setup, beta)
    } else {
        exit_row_sgd(&setup, beta, runs.into(), seed.into())
    }
    .map_err(|e| e.to_string())?;
    Ok(vec![row.mu_up, row.mu_down, row.est_left, row.est_right, row.sim_left, row.sim_right])
}

/// Noisy SGD on the Himmelblau surface from its local maximum, flattened as
/// `[x0, y0, x1, y1, ...]`.
#[wasm_bindgen]
pub fn himmelblau_trajectory(
    epsilon: f64,
    alpha: f64,
    steps: u32,
    stride: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    let stats = himmelblau_path(epsilon, HIMMELBLAU_MAXIMUM, steps.into(), stride.into(), alpha, seed.into())
        .map_err(|e| e.to_string())?;
    Ok(stats.path.path.iter().flat_map(|&(_, x, y)| [x, y]).collect())
}
