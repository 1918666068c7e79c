use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use unicirc::circuit::{gate_budget, min_cnots_per_unit, preset_rotations, preset_topology, qft_unitary, PRESET_NAMES};
use unicirc::compiler::{
    bench_efficiency, check_unity, compile, find_unity, test_universality, BenchConfig, BenchEntry,
    BenchRow, CompilationResult, CompileConfig, UnityCheck, UnitySolution, UniversalityConfig,
    UniversalityReport,
};
use unicirc::linalg::haar_random;
use unicirc::optimize::{Mode, OptimizerConfig};
use unicirc::{seed, CircuitTopology, SquareMatrix};

use crate::args::{
    BenchArgs, BoundsArgs, CheckUniversalArgs, Command, CompileArgs, FindUnityArgs, OptimizerArgs,
    PresetsArgs, TargetSource, TopologySource,
};
use crate::error::{CliError, CliResult};
use crate::files::{format_matrix, parse_matrix, read_bytes, read_text, sha256_hex, to_json_bytes};
use crate::manifest::FileDigest;

pub const TOOL_VERSION: &str = unicirc::VERSION;

/// What a command produced: files to write, plus the manifest details.
pub struct Outcome {
    /// Output paths (relative ones resolve against the output directory) and contents.
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: String,
    pub config: Value,
    pub seeds: BTreeMap<String, Vec<u64>>,
    pub inputs: Vec<FileDigest>,
    /// Failure to report after the files are written.
    pub verdict: Option<CliError>,
}

impl Outcome {
    fn printed(stdout: String) -> Self {
        Outcome {
            files: Vec::new(),
            stdout,
            config: Value::Null,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            verdict: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyRef {
    pub name: String,
    pub n: usize,
    pub hash: String,
}

impl TopologyRef {
    fn of(t: &CircuitTopology) -> Self {
        TopologyRef {
            name: t.name.clone(),
            n: t.n,
            hash: t.hash(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnityFile {
    pub tool_version: String,
    pub topology: TopologyRef,
    pub unity_tol: f64,
    pub max_restarts: usize,
    pub optimizer: OptimizerConfig,
    pub unity: UnitySolution,
    pub check: UnityCheck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalityFile {
    pub tool_version: String,
    pub topology: TopologyRef,
    pub unity_sha256: String,
    pub optimizer: OptimizerConfig,
    pub report: UniversalityReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetInfo {
    /// `named`, `matrix` or `haar`.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// SHA-256 of the target in the matrix text layout.
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompileFile {
    pub tool_version: String,
    pub topology: TopologyRef,
    pub unity_sha256: String,
    pub target: TargetInfo,
    pub optimizer: OptimizerConfig,
    pub settings: CompileConfig,
    pub per_leg_iterations: Vec<usize>,
    pub total_iterations: usize,
    pub result: CompilationResult,
}

pub fn run(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Bounds(a) => bounds(a),
        Command::Presets(a) => presets(a),
        Command::FindUnity(a) => find_unity_cmd(a),
        Command::CheckUniversal(a) => check_universal(a),
        Command::Compile(a) => compile_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Replay(_) => unreachable!("replay is dispatched by main"),
    }
}

fn optimizer_config(args: &OptimizerArgs, default: Mode) -> OptimizerConfig {
    let defaults = OptimizerConfig::default();
    OptimizerConfig {
        mode: args.mode.map_or(default, Mode::from),
        max_iterations: args.max_iter.unwrap_or(defaults.max_iterations),
        seed: args.seed,
        ..defaults
    }
}

fn validated(config: OptimizerConfig) -> CliResult<OptimizerConfig> {
    config.validate()?;
    Ok(config)
}

fn digest(path: &Path) -> CliResult<FileDigest> {
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&read_bytes(path)?),
    })
}

fn load_topology(source: &TopologySource, inputs: &mut Vec<FileDigest>) -> CliResult<CircuitTopology> {
    match (&source.preset, &source.topology) {
        (Some(name), _) => preset_topology(name).map_err(|e| CliError::Usage(e.to_string())),
        (None, Some(path)) => load_topology_file(path, inputs),
        (None, None) => Err(CliError::Usage("give --preset or --topology".into())),
    }
}

fn load_topology_file(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<CircuitTopology> {
    let text = read_text(path)?;
    inputs.push(digest(path)?);
    CircuitTopology::from_json(&text).map_err(|e| CliError::parse_in(path, e))
}

/// Reads a unity file and checks it was computed for `topology`.
fn load_unity(
    path: &Path,
    topology: &CircuitTopology,
    inputs: &mut Vec<FileDigest>,
) -> CliResult<(UnityFile, String)> {
    let bytes = read_bytes(path)?;
    let file: UnityFile =
        serde_json::from_slice(&bytes).map_err(|e| CliError::parse_in(path, e))?;
    let hash = topology.hash();
    if file.topology.hash != hash {
        return Err(CliError::Validation(format!(
            "{} holds a unity for topology `{}` (hash {}), not for `{}` (hash {hash})",
            path.display(),
            file.topology.name,
            file.topology.hash,
            topology.name
        )));
    }
    let sha = sha256_hex(&bytes);
    inputs.push(FileDigest {
        path: path.to_path_buf(),
        sha256: sha.clone(),
    });
    Ok((file, sha))
}

fn bounds(args: &BoundsArgs) -> CliResult<Outcome> {
    let ns: Vec<usize> = match args.n {
        Some(n) => vec![n as usize],
        None => (2..=7).collect(),
    };
    let budgets: Vec<_> = ns
        .iter()
        .map(|&n| gate_budget(n, min_cnots_per_unit(n) as usize, preset_rotations(n)))
        .collect();
    let stdout = if args.json {
        String::from_utf8(to_json_bytes(&budgets)).expect("utf-8 json")
    } else {
        let mut out = format!(
            "{:>2}  {:>10}  {:>10}  {:>12}  {:>10}  {:>11}  {:>13}  {:>9}\n",
            "n", "cnots/unit", "cnot bound", "preset cnots", "rots/unit", "preset rots", "preset params", "4^n - 1"
        );
        for b in &budgets {
            let params = 3 * b.total_rots;
            out.push_str(&format!(
                "{:>2}  {:>10}  {:>10}  {:>12}  {:>10}  {:>11}  {:>13}  {:>9}\n",
                b.n,
                b.min_cnots_per_unit,
                b.min_cnots_total,
                b.total_cnots,
                b.min_rots_per_unit,
                b.chosen_rots_per_unit,
                params,
                4u64.pow(b.n as u32) - 1
            ));
        }
        out
    };
    Ok(Outcome::printed(stdout))
}

fn presets(args: &PresetsArgs) -> CliResult<Outcome> {
    if let Some(name) = &args.show {
        let t = preset_topology(name).map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(Outcome::printed(t.to_json() + "\n"));
    }
    let mut out = String::new();
    for name in PRESET_NAMES {
        let t = preset_topology(name)?;
        out.push_str(&format!(
            "{:<10} n={} cnots/unit={} rots/unit={} total cnots={}  {}\n",
            name,
            t.n,
            t.cnot_count(),
            t.rot_count(),
            t.budget().total_cnots,
            layout(&t)
        ));
    }
    Ok(Outcome::printed(out))
}

fn layout(t: &CircuitTopology) -> String {
    let text = t.to_string();
    text.split_once(": ").map_or(text.clone(), |(_, l)| l.to_string())
}

fn find_unity_cmd(args: &FindUnityArgs) -> CliResult<Outcome> {
    let mut inputs = Vec::new();
    let topology = load_topology(&args.topology, &mut inputs)?;
    let config = validated(optimizer_config(&args.optimizer, Mode::GradientDescent))?;
    let unity = find_unity(&topology, &config, args.restarts, args.tol)?;
    let check = check_unity(&topology, &unity)?;
    let restart_seeds = (0..unity.restarts_used as u64)
        .map(|r| seed::derive(config.seed, seed::RESTARTS, r))
        .collect();
    let file = UnityFile {
        tool_version: TOOL_VERSION.into(),
        topology: TopologyRef::of(&topology),
        unity_tol: args.tol,
        max_restarts: args.restarts,
        optimizer: config.clone(),
        unity,
        check,
    };
    let stdout = format!(
        "unity for {}: residual {:.3e} after {} restart(s), {} iterations; chi {:.6}; max gap error {:.2e}; D(U^{}, I) {:.2e}\n",
        topology.name,
        file.unity.residual_cost,
        file.unity.restarts_used,
        file.unity.iterations,
        file.unity.chi,
        check.max_gap_error,
        topology.unit_count(),
        check.power_distance
    );
    Ok(Outcome {
        files: vec![(args.out.clone(), to_json_bytes(&file))],
        stdout,
        config: json!({
            "optimizer": config,
            "restarts": args.restarts,
            "unity_tol": args.tol,
        }),
        seeds: BTreeMap::from([("restarts".to_string(), restart_seeds)]),
        inputs,
        verdict: None,
    })
}

fn check_universal(args: &CheckUniversalArgs) -> CliResult<Outcome> {
    let mut inputs = Vec::new();
    let topology = load_topology(&args.topology, &mut inputs)?;
    let (unity, unity_sha256) = load_unity(&args.unity, &topology, &mut inputs)?;
    let config = validated(optimizer_config(&args.optimizer, Mode::QuasiNewton))?;
    let settings = UniversalityConfig {
        n_targets: args.targets,
        target_distance: args.target_distance,
        gamma_min: args.gamma_min,
        r2_min: args.r2_min,
        distance_max: args.distance_max,
        max_iterations: args.optimizer.max_iter.unwrap_or(UniversalityConfig::default().max_iterations),
        seed: args.optimizer.seed,
    };
    let report = test_universality(&topology, &unity.unity, &settings, &config)?;
    let mut stdout = String::new();
    for t in &report.per_target {
        let (gamma, r2) = t.fit.map_or((f64::NAN, f64::NAN), |f| (f.gamma, f.r_squared));
        stdout.push_str(&format!(
            "target seed {:>20}: gamma {gamma:.4e} r2 {r2:.3} final D {:.3e} in {} iterations ({:?})\n",
            t.seed, t.final_distance, t.iterations, t.terminated_by
        ));
    }
    stdout.push_str(&format!(
        "{}: median gamma {:.4e} (min {}), median final D {:.3e} (max {:e}) -> {}\n",
        topology.name,
        report.median_gamma,
        settings.gamma_min,
        report.median_final_distance,
        settings.distance_max,
        if report.pass { "PASS" } else { "FAIL" }
    ));
    let verdict = (!report.pass).then(|| {
        CliError::NotUniversal(format!(
            "{}: median gamma {:.3e}, median final distance {:.3e}",
            topology.name, report.median_gamma, report.median_final_distance
        ))
    });
    let seeds = report.per_target.iter().map(|t| t.seed).collect();
    let file = UniversalityFile {
        tool_version: TOOL_VERSION.into(),
        topology: TopologyRef::of(&topology),
        unity_sha256,
        optimizer: config.clone(),
        report,
    };
    Ok(Outcome {
        files: vec![(args.out.clone(), to_json_bytes(&file))],
        stdout,
        config: json!({ "optimizer": config, "universality": settings }),
        seeds: BTreeMap::from([("universality_targets".to_string(), seeds)]),
        inputs,
        verdict,
    })
}

fn named_target(name: &str, n: usize) -> CliResult<SquareMatrix> {
    match name {
        "id" => Ok(SquareMatrix::identity(1 << n)),
        "qft" => Ok(qft_unitary(n)?),
        other => {
            let k = other
                .strip_prefix("qft")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| CliError::Usage(format!("unknown target `{other}` (use id, qft or qftN)")))?;
            if k != n {
                return Err(CliError::Validation(format!(
                    "target {other} acts on {k} qubits but the topology has {n}"
                )));
            }
            Ok(qft_unitary(k)?)
        }
    }
}

fn load_target(
    source: &TargetSource,
    n: usize,
    command_seed: u64,
    inputs: &mut Vec<FileDigest>,
) -> CliResult<(SquareMatrix, TargetInfo)> {
    let (matrix, source_name, name, seed) = if let Some(name) = &source.target {
        (named_target(name, n)?, "named", Some(name.clone()), None)
    } else if let Some(path) = &source.matrix {
        let text = read_text(path)?;
        inputs.push(digest(path)?);
        let m = parse_matrix(&text).map_err(|e| CliError::parse_in(path, e))?;
        (m, "matrix", Some(path.display().to_string()), None)
    } else if source.haar {
        let child = seed::derive(command_seed, seed::COMPILE_TARGET, 0);
        (haar_random(1 << n, child)?, "haar", None, Some(child))
    } else {
        return Err(CliError::Usage("give --target, --matrix or --haar".into()));
    };
    let info = TargetInfo {
        source: source_name.into(),
        name,
        seed,
        sha256: sha256_hex(format_matrix(&matrix).as_bytes()),
    };
    Ok((matrix, info))
}

fn compile_cmd(args: &CompileArgs) -> CliResult<Outcome> {
    let mut inputs = Vec::new();
    let topology = load_topology(&args.topology, &mut inputs)?;
    let (unity, unity_sha256) = load_unity(&args.unity, &topology, &mut inputs)?;
    let config = validated(optimizer_config(&args.optimizer, Mode::QuasiNewton))?;
    let (target, target_info) = load_target(&args.target, topology.n, args.optimizer.seed, &mut inputs)?;
    let settings = CompileConfig {
        steps: args.steps,
        mid_tol: args.mid_tol,
        final_tol: args.final_tol,
        keep_intermediates: args.keep_intermediates,
    };
    let result = compile(&topology, &unity.unity, &target, &settings, &config)?;
    let per_leg: Vec<usize> = result.legs.iter().map(|l| l.trace.steps()).collect();
    let mut stdout = format!(
        "compiled onto {} ({} CNOTs): D = {:.3e} after {} legs, {} iterations\n",
        topology.name,
        topology.budget().total_cnots,
        result.final_distance,
        result.legs.len(),
        result.total_iterations()
    );
    if result.branch_cut_warning {
        stdout.push_str("warning: a target eigenphase lies within 1e-3 of pi; the generator may jump across the branch cut\n");
    }
    let mut files = Vec::new();
    if let Some(dir) = &args.traces {
        for leg in &result.legs {
            files.push((dir.join(format!("leg-{:02}.csv", leg.j)), leg.trace.to_csv().into_bytes()));
        }
    }
    let seeds = match target_info.seed {
        Some(s) => BTreeMap::from([("haar_target".to_string(), vec![s])]),
        None => BTreeMap::new(),
    };
    let file = CompileFile {
        tool_version: TOOL_VERSION.into(),
        topology: TopologyRef::of(&topology),
        unity_sha256,
        target: target_info,
        optimizer: config.clone(),
        settings: settings.clone(),
        total_iterations: result.total_iterations(),
        per_leg_iterations: per_leg,
        result,
    };
    files.insert(0, (args.out.clone(), to_json_bytes(&file)));
    Ok(Outcome {
        files,
        stdout,
        config: json!({ "optimizer": config, "compile": settings }),
        seeds,
        inputs,
        verdict: None,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Deterministic CSV: wall-clock times are left out on purpose.
pub fn bench_csv(rows: &[BenchRow], hashes: &[String]) -> String {
    let mut out = String::from("topology,n,total_cnots,hash,status,median_iterations,iterations\n");
    for (row, hash) in rows.iter().zip(hashes) {
        let status = row.non_compiling.as_deref().map_or("ok".to_string(), |r| format!("non-compiling: {r}"));
        let median = row.median_iterations.map_or(String::new(), |m| m.to_string());
        let its: Vec<String> = row.iterations.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&row.name),
            row.n,
            row.total_cnots,
            hash,
            csv_field(&status),
            median,
            its.join(";")
        ));
    }
    out
}

fn bench(args: &BenchArgs) -> CliResult<Outcome> {
    let mut inputs = Vec::new();
    let mut topologies = Vec::new();
    for name in &args.presets {
        topologies.push(preset_topology(name).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    for path in &args.topologies {
        topologies.push(load_topology_file(path, &mut inputs)?);
    }
    if topologies.is_empty() {
        return Err(CliError::Usage("bench needs at least one --preset or --topology".into()));
    }
    let mut known: Vec<UnityFile> = Vec::new();
    for path in &args.unities {
        let bytes = read_bytes(path)?;
        let file: UnityFile = serde_json::from_slice(&bytes).map_err(|e| CliError::parse_in(path, e))?;
        inputs.push(FileDigest {
            path: path.clone(),
            sha256: sha256_hex(&bytes),
        });
        known.push(file);
    }
    let entries: Vec<BenchEntry> = topologies
        .iter()
        .map(|t| BenchEntry {
            topology: t.clone(),
            unity: known
                .iter()
                .find(|u| u.topology.hash == t.hash())
                .map(|u| u.unity.clone()),
        })
        .collect();
    let config = validated(optimizer_config(&args.optimizer, Mode::QuasiNewton))?;
    let settings = BenchConfig {
        n_targets: args.targets,
        compile: CompileConfig {
            steps: args.steps,
            final_tol: args.tol,
            ..CompileConfig::default()
        },
        universality: (!args.skip_universality).then(|| UniversalityConfig {
            seed: args.optimizer.seed,
            ..UniversalityConfig::default()
        }),
        restarts: args.restarts,
        seed: args.optimizer.seed,
        ..BenchConfig::default()
    };
    let rows = bench_efficiency(&entries, &settings, &config)?;
    let mut stdout = format!(
        "{:<12} {:>2} {:>6} {:>14} {:>12}  status\n",
        "topology", "n", "cnots", "median iters", "median wall"
    );
    for row in &rows {
        stdout.push_str(&format!(
            "{:<12} {:>2} {:>6} {:>14} {:>12}  {}\n",
            row.name,
            row.n,
            row.total_cnots,
            row.median_iterations.map_or("-".into(), |m| format!("{m}")),
            row.median_wall_seconds.map_or("-".into(), |s| format!("{s:.3}s")),
            row.non_compiling.as_deref().unwrap_or("ok")
        ));
    }
    let hashes: Vec<String> = topologies.iter().map(|t| t.hash()).collect();
    let target_seeds = (0..args.targets as u64)
        .map(|k| seed::derive(settings.seed, seed::BENCH_TARGETS, k))
        .collect();
    Ok(Outcome {
        files: vec![(args.out.clone(), bench_csv(&rows, &hashes).into_bytes())],
        stdout,
        config: json!({ "optimizer": config, "bench": settings }),
        seeds: BTreeMap::from([("bench_targets".to_string(), target_seeds)]),
        inputs,
        verdict: None,
    })
}
