//! Browser demo: gate budgets, a step-1 unity search and the step-2 path
//! profile, each returned to JavaScript as a JSON string.
//!
//! The `report_*` functions hold the logic and run natively; the exported
//! wrappers only turn errors into JS exceptions.

use serde::Serialize;
use unicirc::circuit::{gate_budget, min_cnots_per_unit, preset_rotations, preset_topology, unit_unitary};
use unicirc::compiler::{find_unity, path_targets, target_generator, unity_start, PathSchedule};
use unicirc::linalg::{eig_unitary, haar_random, SquareMatrix};
use unicirc::objective::distance;
use unicirc::optimize::{minimize, OptimizerConfig};
use unicirc::{GateBudget, ObjectiveSpec, Result};
use wasm_bindgen::prelude::*;

/// Most restarts the page may request; each one is a full descent.
pub const MAX_DEMO_RESTARTS: usize = 20;
/// Path profiles are limited to n ≤ 4 to keep the page responsive.
pub const MAX_PROFILE_QUBITS: usize = 4;

#[derive(Debug, Serialize)]
pub struct UnityReport {
    pub topology: String,
    pub n: usize,
    pub restarts_used: usize,
    pub residual_cost: f64,
    pub chi: f64,
    /// Eigenphases of the unit in `(−π, π]`, ascending.
    pub eigenphases: Vec<f64>,
    /// `[iteration, cost]` of the descent run that succeeded, before any polish.
    pub trace: Vec<(usize, f64)>,
    pub polished: bool,
    /// Distance of the unit's `2^n`-th power to the identity.
    pub power_distance: f64,
}

#[derive(Debug, Serialize)]
pub struct PathProfile {
    pub n: usize,
    pub seed: u64,
    pub steps: usize,
    /// `D(U^(j,M), I)` for `j = 1..M`.
    pub distances: Vec<f64>,
    pub branch_cut_warning: bool,
}

pub fn report_budget(n: usize) -> Result<GateBudget> {
    if !(2..=unicirc::circuit::MAX_QUBITS).contains(&n) {
        return Err(qubit_range(n, unicirc::circuit::MAX_QUBITS));
    }
    Ok(gate_budget(n, min_cnots_per_unit(n) as usize, preset_rotations(n)))
}

pub fn report_unity(preset: &str, seed: u64, restarts: usize) -> Result<UnityReport> {
    let topology = preset_topology(preset)?;
    let config = OptimizerConfig {
        seed,
        ..OptimizerConfig::default()
    };
    let restarts = restarts.clamp(1, MAX_DEMO_RESTARTS);
    let tol = unicirc::compiler::DEFAULT_UNITY_TOL;
    let unity = find_unity(&topology, &config, restarts, tol)?;
    let start = unity_start(&topology, seed, unity.restarts_used - 1);
    let run = OptimizerConfig {
        cost_tolerance: tol,
        ..config
    };
    let (_, trace) = minimize(&ObjectiveSpec::unity(&topology), &start, &run)?;
    let u = unit_unitary(&topology, &unity.unit_params)?;
    let (mut eigenphases, _) = eig_unitary(&u)?;
    eigenphases.sort_by(f64::total_cmp);
    let power = u.pow(topology.unit_count() as u64);
    Ok(UnityReport {
        topology: topology.name.clone(),
        n: topology.n,
        restarts_used: unity.restarts_used,
        residual_cost: unity.residual_cost,
        chi: unity.chi,
        eigenphases,
        polished: trace.final_cost() > tol,
        trace: trace.records,
        power_distance: distance(&power, &SquareMatrix::identity(topology.dim()))?,
    })
}

pub fn report_path_profile(n: usize, seed: u64, steps: usize) -> Result<PathProfile> {
    if !(2..=MAX_PROFILE_QUBITS).contains(&n) {
        return Err(qubit_range(n, MAX_PROFILE_QUBITS));
    }
    let target = haar_random(1 << n, seed)?;
    let (h, branch_cut_warning) = target_generator(&target)?;
    let identity = SquareMatrix::identity(1 << n);
    let distances = path_targets(&h, &PathSchedule::new(steps)?)?
        .iter()
        .map(|u| distance(u, &identity))
        .collect::<Result<_>>()?;
    Ok(PathProfile {
        n,
        seed,
        steps,
        distances,
        branch_cut_warning,
    })
}

fn qubit_range(n: usize, max: usize) -> unicirc::Error {
    unicirc::Error::InvalidConfig(format!("qubit count {n} outside 2..={max}"))
}

fn to_js<T: Serialize>(value: Result<T>) -> std::result::Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Gate budget of an `n`-qubit circuit with the preset gate counts.
#[wasm_bindgen(js_name = gateBudget)]
pub fn gate_budget_js(n: u32) -> std::result::Result<String, JsError> {
    to_js(report_budget(n as usize))
}

/// Step-1 unity search on a preset with Armijo gradient descent.
#[wasm_bindgen(js_name = findUnity)]
pub fn find_unity_js(preset: &str, seed: u32, restarts: u32) -> std::result::Result<String, JsError> {
    to_js(report_unity(preset, seed as u64, restarts as usize))
}

/// Distances to the identity along the √-schedule towards a Haar target.
#[wasm_bindgen(js_name = pathProfile)]
pub fn path_profile_js(n: u32, seed: u32, steps: u32) -> std::result::Result<String, JsError> {
    to_js(report_path_profile(n as usize, seed as u64, steps as usize))
}
