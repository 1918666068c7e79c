//! The two-step compiling pipeline.
//!
//! Step 1 ([`find_unity`]) works on a single unit and is done once per
//! architecture. Step 2 ([`compile`]) runs once per target, starting from the
//! replicated unity angles and following the √-schedule of intermediate
//! targets. [`test_universality`] and [`bench_efficiency`] build on both.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    circuit_unitary, replicate_params, unit_unitary, CircuitTopology, ParameterVector, Scope,
};
use crate::error::{Error, Result};
use crate::linalg::{
    char_poly_coeffs, eig_unitary, eigh, expm_hermitian, haar_random, logm_unitary,
    random_hermitian, SquareMatrix, C64,
};
use crate::objective::{distance, unity_cost, ObjectiveSpec};
use crate::optimize::{
    fit_decay_rate, minimize, ConvergenceTrace, DecayFit, Mode, OptimizerConfig, Termination,
};
use crate::seed;

pub const DEFAULT_UNITY_TOL: f64 = 1e-10;
pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MID_TOL: f64 = 0.01;
pub const DEFAULT_FINAL_TOL: f64 = 1e-6;

/// Eigenphases closer than this to ±π flag a possibly discontinuous generator.
pub const BRANCH_CUT_MARGIN: f64 = 1e-3;

/// Unit angles whose matrix is an N-th root of the identity up to phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitySolution {
    pub unit_params: ParameterVector,
    pub residual_cost: f64,
    /// Phase of the characteristic polynomial's constant term.
    pub chi: f64,
    pub restarts_used: usize,
    /// Descent iterations summed over all restarts.
    pub iterations: usize,
    pub seed: u64,
}

/// Result of the certification checks on a unity solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnityCheck {
    pub cost: f64,
    /// Largest deviation of a consecutive eigenphase gap from 2π/N.
    pub max_gap_error: f64,
    /// Distance of the unit's N-th power to the identity.
    pub power_distance: f64,
}

/// Step 1: drives the unity cost of one unit below `unity_tol`.
///
/// Each restart descends on `Σ|λ_j|` with `config`, then, if that run ends
/// above the tolerance, continues with a smooth polish (see [`polish_unity`]).
///
/// Restart `r` draws its initial angles uniformly from `[−π, π)` with seed
/// `seed::derive(config.seed, seed::RESTARTS, r)`.
pub fn find_unity(
    topology: &CircuitTopology,
    config: &OptimizerConfig,
    max_restarts: usize,
    unity_tol: f64,
) -> Result<UnitySolution> {
    if !(unity_tol > 0.0) {
        return Err(Error::InvalidConfig("unity tolerance must be positive".into()));
    }
    if max_restarts == 0 {
        return Err(Error::InvalidConfig("at least one restart is required".into()));
    }
    let objective = ObjectiveSpec::unity(topology);
    let run_config = OptimizerConfig {
        cost_tolerance: unity_tol,
        ..config.clone()
    };
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    for restart in 0..max_restarts {
        let start = unity_start(topology, config.seed, restart);
        let (mut angles, trace) = minimize(&objective, &start, &run_config)?;
        iterations += trace.steps();
        let mut residual = trace.final_cost();
        if residual > unity_tol {
            let (polished, steps) = polish_unity(topology, &angles, unity_tol)?;
            iterations += steps;
            let polished_residual = objective.evaluate(&ParameterVector::unit(polished.clone()))?;
            if polished_residual < residual {
                angles = polished;
                residual = polished_residual;
            }
        }
        if residual <= unity_tol {
            let unit_params = ParameterVector::unit(angles);
            let chi = char_poly_coeffs(&unit_unitary(topology, &unit_params)?)?.chi();
            return Ok(UnitySolution {
                unit_params,
                residual_cost: residual,
                chi,
                restarts_used: restart + 1,
                iterations,
                seed: config.seed,
            });
        }
        best = best.min(residual);
    }
    Err(Error::UnityNotFound {
        restarts: max_restarts,
        best_residual: best,
    })
}

/// Initial unit angles of restart `restart`, uniform in `[−π, π)`.
pub fn unity_start(topology: &CircuitTopology, seed: u64, restart: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, seed::RESTARTS, restart as u64));
    (0..topology.unit_param_len()).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Quasi-Newton descent on `Σ|λ_j|²` with a fine difference step.
///
/// `Σ|λ_j|` has a kink at every zero coefficient and central differences
/// carry an `O(h²)` gradient error, so first-order descent on it levels off
/// far above a 1e-10 residual. The squared cost is smooth there, and
/// `Σ|λ_j| ≤ √(N−1) · (Σ|λ_j|²)^½` turns its tolerance into the modulus one.
fn polish_unity(
    topology: &CircuitTopology,
    start: &[f64],
    unity_tol: f64,
) -> Result<(Vec<f64>, usize)> {
    let squared = ObjectiveSpec::unity(topology).with_squared_modulus(true);
    let terms = (topology.dim() - 1) as f64;
    let config = OptimizerConfig {
        mode: Mode::QuasiNewton,
        cost_tolerance: unity_tol * unity_tol / (4.0 * terms),
        gradient_step: POLISH_GRADIENT_STEP,
        max_iterations: POLISH_ITERATIONS,
        ..OptimizerConfig::default()
    };
    let (angles, trace) = minimize(&squared, start, &config)?;
    Ok((angles, trace.steps()))
}

const POLISH_GRADIENT_STEP: f64 = 1e-7;
const POLISH_ITERATIONS: usize = 1000;

/// Recomputes the unity certificates from scratch.
pub fn check_unity(topology: &CircuitTopology, unity: &UnitySolution) -> Result<UnityCheck> {
    let u = unit_unitary(topology, &unity.unit_params)?;
    let cost = unity_cost(&u)?;
    let (mut phases, _) = eig_unitary(&u)?;
    phases.sort_by(f64::total_cmp);
    let n = phases.len();
    let expected = 2.0 * PI / n as f64;
    let max_gap_error = (0..n)
        .map(|k| {
            let gap = if k + 1 < n {
                phases[k + 1] - phases[k]
            } else {
                phases[0] + 2.0 * PI - phases[n - 1]
            };
            (gap - expected).abs()
        })
        .fold(0.0, f64::max);
    let power = u.pow(topology.unit_count() as u64);
    let power_distance = distance(&power, &SquareMatrix::identity(u.dim()))?;
    Ok(UnityCheck {
        cost,
        max_gap_error,
        power_distance,
    })
}

fn check_unity_shape(topology: &CircuitTopology, unity: &UnitySolution) -> Result<()> {
    if unity.unit_params.scope != Scope::Unit {
        return Err(Error::WrongScope {
            expected: Scope::Unit,
        });
    }
    if unity.unit_params.len() != topology.unit_param_len() {
        return Err(Error::ParameterLength {
            expected: topology.unit_param_len(),
            actual: unity.unit_params.len(),
        });
    }
    Ok(())
}

/// Intermediate-target exponents `√(j/M)` for `j = 1..=M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSchedule {
    pub steps: usize,
    pub exponents: Vec<f64>,
}

impl PathSchedule {
    pub fn new(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidConfig("path needs at least one step".into()));
        }
        let exponents = (1..=steps)
            .map(|j| {
                if j == steps {
                    1.0
                } else {
                    (j as f64 / steps as f64).sqrt()
                }
            })
            .collect();
        Ok(Self { steps, exponents })
    }

    /// `max(10, ⌈20 · D(target, I)⌉)`.
    pub fn default_steps(target: &SquareMatrix) -> Result<usize> {
        let d = distance(target, &SquareMatrix::identity(target.dim()))?;
        Ok(((20.0 * d).ceil() as usize).max(10))
    }
}

/// `exp(i √(j/M) H)` for every exponent of the schedule.
pub fn path_targets(h_target: &SquareMatrix, schedule: &PathSchedule) -> Result<Vec<SquareMatrix>> {
    let (values, vectors) = eigh(h_target)?;
    let n = h_target.dim();
    Ok(schedule
        .exponents
        .iter()
        .map(|s| {
            let phases: Vec<C64> = values.iter().map(|l| C64::from_polar(1.0, s * l)).collect();
            SquareMatrix::from_fn(n, |i, j| {
                (0..n)
                    .map(|k| vectors[(i, k)] * phases[k] * vectors[(j, k)].conj())
                    .sum()
            })
        })
        .collect())
}

/// Removes the global phase: rescales so the trace is real and non-negative.
///
/// When the trace nearly vanishes, the first entry of modulus above 0.1 (in
/// row-major order) is made real and positive instead.
pub fn canonical_phase(u: &SquareMatrix) -> SquareMatrix {
    let t = u.trace();
    let reference = if t.norm() >= 1e-6 {
        t
    } else {
        match u.as_slice().iter().find(|z| z.norm() > 0.1) {
            Some(z) => *z,
            None => return u.clone(),
        }
    };
    u.scale(reference.conj() / reference.norm())
}

/// Grid spacing used by [`phase_representative`].
pub const REPRESENTATIVE_GRID: f64 = 1.0 / (1u64 << 30) as f64;

/// One matrix per global-phase class: the phase-canonicalized target,
/// snapped to a `2⁻³⁰` grid and projected back onto the unitaries.
///
/// `U` and `e^{iα} U` canonicalize to matrices that agree only up to
/// rounding, and a long descent amplifies that into a different last
/// iterate. Snapping removes the rounding, so both compile identically. The
/// representative stays within ~1e-9 of the canonical target.
pub fn phase_representative(u: &SquareMatrix) -> Result<SquareMatrix> {
    let snap = |x: f64| (x / REPRESENTATIVE_GRID).round() * REPRESENTATIVE_GRID;
    let canonical = canonical_phase(u);
    let snapped = SquareMatrix::from_fn(u.dim(), |i, j| {
        let z = canonical[(i, j)];
        C64::new(snap(z.re), snap(z.im))
    });
    // Polar factor A (A†A)^{-1/2}.
    let gram = &snapped.adjoint() * &snapped;
    let gram = SquareMatrix::from_fn(u.dim(), |i, j| (gram[(i, j)] + gram[(j, i)].conj()) * 0.5);
    let (values, vectors) = eigh(&gram)?;
    if values.iter().any(|v| !(*v > 0.5)) {
        return Err(Error::NotUnitary {
            deviation: u.unitarity_deviation(),
            tolerance: 1e-8,
        });
    }
    let n = u.dim();
    let inverse_root = SquareMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| vectors[(i, k)] * (1.0 / values[k].sqrt()) * vectors[(j, k)].conj())
            .sum()
    });
    Ok(&snapped * &inverse_root)
}

/// Generator of the target's [`phase_representative`], and whether any of
/// its eigenphases sits within [`BRANCH_CUT_MARGIN`] of π.
pub fn target_generator(target: &SquareMatrix) -> Result<(SquareMatrix, bool)> {
    let representative = phase_representative(target)?;
    let (phases, _) = eig_unitary(&representative)?;
    let near_cut = phases.iter().any(|p| PI - p.abs() < BRANCH_CUT_MARGIN);
    Ok((logm_unitary(&representative)?, near_cut))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileConfig {
    /// Number of legs `M`; `None` uses [`PathSchedule::default_steps`].
    pub steps: Option<usize>,
    pub mid_tol: f64,
    pub final_tol: f64,
    pub keep_intermediates: bool,
}

impl Default for CompileConfig {
    fn default() -> Self {
        Self {
            steps: None,
            mid_tol: DEFAULT_MID_TOL,
            final_tol: DEFAULT_FINAL_TOL,
            keep_intermediates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    /// 1-based leg index.
    pub j: usize,
    pub trace: ConvergenceTrace,
    pub achieved_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilationResult {
    pub full_params: ParameterVector,
    /// Distance of the compiled circuit to the requested target.
    pub final_distance: f64,
    pub legs: Vec<Leg>,
    pub schedule: PathSchedule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate_params: Option<Vec<ParameterVector>>,
    /// Set when the target generator may be discontinuous (eigenphase near π).
    pub branch_cut_warning: bool,
}

impl CompilationResult {
    pub fn total_iterations(&self) -> usize {
        self.legs.iter().map(|l| l.trace.steps()).sum()
    }
}

/// Step 2: follows the √-schedule from the replicated unity to `target`.
///
/// Leg `j` starts from the parameters of leg `j − 1` and descends until the
/// distance to `exp(i √(j/M) H)` is below `mid_tol` (`final_tol` for the
/// last leg).
pub fn compile(
    topology: &CircuitTopology,
    unity: &UnitySolution,
    target: &SquareMatrix,
    settings: &CompileConfig,
    config: &OptimizerConfig,
) -> Result<CompilationResult> {
    check_unity_shape(topology, unity)?;
    if target.dim() != topology.dim() {
        return Err(Error::DimensionMismatch {
            left: target.dim(),
            right: topology.dim(),
        });
    }
    let deviation = target.unitarity_deviation();
    if deviation > 1e-8 {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: 1e-8,
        });
    }
    if !(settings.mid_tol > 0.0 && settings.final_tol > 0.0) {
        return Err(Error::InvalidConfig("leg tolerances must be positive".into()));
    }
    let steps = match settings.steps {
        Some(m) => m,
        None => PathSchedule::default_steps(target)?,
    };
    let schedule = PathSchedule::new(steps)?;
    let (generator, branch_cut_warning) = target_generator(target)?;
    let targets = path_targets(&generator, &schedule)?;

    let mut params = replicate_params(&unity.unit_params, topology.n)?;
    let mut legs = Vec::with_capacity(steps);
    let mut intermediates = settings.keep_intermediates.then(Vec::new);
    for (index, leg_target) in targets.iter().enumerate() {
        let j = index + 1;
        let tolerance = if j == steps {
            settings.final_tol
        } else {
            settings.mid_tol
        };
        let objective = ObjectiveSpec::target_distance(topology, leg_target)?;
        let leg_config = OptimizerConfig {
            cost_tolerance: tolerance,
            ..config.clone()
        };
        let (angles, trace) = minimize(&objective, &params.angles, &leg_config)?;
        let achieved = trace.final_cost();
        if achieved > tolerance {
            return Err(Error::LegFailed {
                leg: j,
                legs: steps,
                tolerance,
                best_distance: achieved,
            });
        }
        params = ParameterVector::full(angles);
        if let Some(list) = intermediates.as_mut() {
            list.push(params.clone());
        }
        legs.push(Leg {
            j,
            trace,
            achieved_distance: achieved,
        });
    }
    let final_distance = distance(&circuit_unitary(topology, &params)?, target)?;
    Ok(CompilationResult {
        full_params: params,
        final_distance,
        legs,
        schedule,
        intermediate_params: intermediates,
        branch_cut_warning,
    })
}

/// Continues descent on the last leg from a finished result, to a tighter tolerance.
pub fn refine(
    topology: &CircuitTopology,
    result: &CompilationResult,
    target: &SquareMatrix,
    tolerance: f64,
    config: &OptimizerConfig,
) -> Result<(ParameterVector, ConvergenceTrace)> {
    let objective = ObjectiveSpec::target_distance(topology, target)?;
    let leg_config = OptimizerConfig {
        cost_tolerance: tolerance,
        ..config.clone()
    };
    let (angles, trace) = minimize(&objective, &result.full_params.angles, &leg_config)?;
    Ok((ParameterVector::full(angles), trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityConfig {
    pub n_targets: usize,
    /// Desired `D(target, I)` of the random near-identity targets.
    pub target_distance: f64,
    pub gamma_min: f64,
    /// Fits below this r² count as γ = 0.
    pub r2_min: f64,
    pub distance_max: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for UniversalityConfig {
    fn default() -> Self {
        Self {
            n_targets: 10,
            target_distance: 0.1,
            gamma_min: 0.005,
            r2_min: 0.9,
            distance_max: 1e-6,
            max_iterations: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub seed: u64,
    /// `None` when the trace was too short or flat to fit.
    pub fit: Option<DecayFit>,
    pub final_distance: f64,
    pub iterations: usize,
    pub terminated_by: Termination,
}

impl TargetOutcome {
    fn effective_gamma(&self, r2_min: f64) -> f64 {
        match self.fit {
            Some(fit) if fit.r_squared >= r2_min => fit.gamma,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub per_target: Vec<TargetOutcome>,
    /// Median over targets of γ, with unusable fits counted as zero.
    pub median_gamma: f64,
    pub median_r_squared: f64,
    pub median_final_distance: f64,
    pub pass: bool,
    pub config: UniversalityConfig,
}

/// Unitary `exp(i t H)` with `H` a seeded random Hermitian draw and `t`
/// chosen by bisection so that `D(·, I)` equals `target_distance`.
pub fn near_identity_target(dim: usize, target_distance: f64, seed: u64) -> Result<SquareMatrix> {
    if !(target_distance > 0.0 && target_distance < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target distance {target_distance} outside (0, 1)"
        )));
    }
    let h = random_hermitian(dim, 1.0, seed)?;
    let (values, _) = eigh(&h)?;
    let d_of = |t: f64| {
        let s: C64 = values.iter().map(|l| C64::from_polar(1.0, t * l)).sum();
        1.0 - s.norm_sqr() / (dim * dim) as f64
    };
    let mut hi = 0.1;
    while d_of(hi) < target_distance && hi < PI {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if d_of(mid) < target_distance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    expm_hermitian(&h, 0.5 * (lo + hi))
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Certifies compiling universality by descending from the unity towards
/// random near-identity targets and fitting the exponential decay rate.
pub fn test_universality(
    topology: &CircuitTopology,
    unity: &UnitySolution,
    settings: &UniversalityConfig,
    config: &OptimizerConfig,
) -> Result<UniversalityReport> {
    check_unity_shape(topology, unity)?;
    if settings.n_targets == 0 {
        return Err(Error::InvalidConfig("need at least one target".into()));
    }
    let start = replicate_params(&unity.unit_params, topology.n)?;
    let run_config = OptimizerConfig {
        cost_tolerance: settings.distance_max,
        max_iterations: settings.max_iterations,
        ..config.clone()
    };
    let mut per_target = Vec::with_capacity(settings.n_targets);
    for index in 0..settings.n_targets {
        let target_seed = seed::derive(settings.seed, seed::UNIVERSALITY_TARGETS, index as u64);
        let target = near_identity_target(topology.dim(), settings.target_distance, target_seed)?;
        let objective = ObjectiveSpec::target_distance(topology, &target)?;
        let (_, trace) = minimize(&objective, &start.angles, &run_config)?;
        per_target.push(TargetOutcome {
            seed: target_seed,
            fit: fit_decay_rate(&trace).ok(),
            final_distance: trace.final_cost(),
            iterations: trace.steps(),
            terminated_by: trace.terminated_by,
        });
    }
    let mut gammas: Vec<f64> = per_target
        .iter()
        .map(|t| t.effective_gamma(settings.r2_min))
        .collect();
    let mut r2: Vec<f64> = per_target
        .iter()
        .map(|t| t.fit.map_or(0.0, |f| f.r_squared))
        .collect();
    let mut finals: Vec<f64> = per_target.iter().map(|t| t.final_distance).collect();
    let median_gamma = median(&mut gammas);
    let median_final_distance = median(&mut finals);
    Ok(UniversalityReport {
        median_r_squared: median(&mut r2),
        pass: median_gamma >= settings.gamma_min
            && median_final_distance <= settings.distance_max,
        median_gamma,
        median_final_distance,
        per_target,
        config: settings.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_targets: usize,
    pub compile: CompileConfig,
    /// Certify each topology before benchmarking it; `None` skips the check.
    pub universality: Option<UniversalityConfig>,
    pub restarts: usize,
    pub unity_tol: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_targets: 5,
            compile: CompileConfig::default(),
            universality: Some(UniversalityConfig::default()),
            restarts: DEFAULT_RESTARTS,
            unity_tol: DEFAULT_UNITY_TOL,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub n: usize,
    pub total_cnots: u64,
    /// `None` when the topology was benchmarked; otherwise why it was not.
    pub non_compiling: Option<String>,
    pub iterations: Vec<usize>,
    pub median_iterations: Option<f64>,
    /// Wall-clock seconds per target; not reproducible across machines.
    pub wall_seconds: Vec<f64>,
    pub median_wall_seconds: Option<f64>,
}

/// A topology to benchmark, with its unity solution if one is already known.
#[derive(Debug, Clone)]
pub struct BenchEntry {
    pub topology: CircuitTopology,
    pub unity: Option<UnitySolution>,
}

/// Compiles the same seeded Haar targets on every topology and reports
/// per-topology medians of the total descent iterations.
pub fn bench_efficiency(
    entries: &[BenchEntry],
    settings: &BenchConfig,
    config: &OptimizerConfig,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(entries.len());
    for entry in entries {
        let topology = &entry.topology;
        let mut row = BenchRow {
            name: topology.name.clone(),
            n: topology.n,
            total_cnots: topology.budget().total_cnots,
            non_compiling: None,
            iterations: Vec::new(),
            median_iterations: None,
            wall_seconds: Vec::new(),
            median_wall_seconds: None,
        };
        let unity = match &entry.unity {
            Some(u) => Ok(u.clone()),
            None => find_unity(topology, config, settings.restarts, settings.unity_tol),
        };
        let unity = match unity {
            Ok(u) => u,
            Err(e) => {
                row.non_compiling = Some(format!("no unity: {e}"));
                rows.push(row);
                continue;
            }
        };
        if let Some(check) = &settings.universality {
            let report = test_universality(topology, &unity, check, config)?;
            if !report.pass {
                row.non_compiling = Some(format!(
                    "universality failed (median gamma {:.3e}, median distance {:.3e})",
                    report.median_gamma, report.median_final_distance
                ));
                rows.push(row);
                continue;
            }
        }
        let mut failures = 0;
        for index in 0..settings.n_targets {
            let target_seed = seed::derive(settings.seed, seed::BENCH_TARGETS, index as u64);
            let target = haar_random(topology.dim(), target_seed)?;
            let clock = Clock::start();
            match compile(topology, &unity, &target, &settings.compile, config) {
                Ok(result) => {
                    row.iterations.push(result.total_iterations());
                    row.wall_seconds.push(clock.seconds());
                }
                Err(Error::LegFailed { .. }) => failures += 1,
                Err(e) => return Err(e),
            }
        }
        if failures > 0 {
            row.non_compiling = Some(format!("{failures} of {} targets failed", settings.n_targets));
        } else if !row.iterations.is_empty() {
            let mut its: Vec<f64> = row.iterations.iter().map(|i| *i as f64).collect();
            row.median_iterations = Some(median(&mut its));
            row.median_wall_seconds = Some(median(&mut row.wall_seconds.clone()));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Wall clock that degrades to zero where `std::time` is unavailable.
struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        Clock(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
