use std::sync::OnceLock;

use unicirc::circuit::{
    circuit_unitary, preset_topology, replicate_params, unit_unitary, CircuitTopology, GateSlot,
    ParameterVector,
};
use unicirc::compiler::{
    bench_efficiency, check_unity, compile, find_unity, path_targets, refine, target_generator,
    test_universality, BenchConfig, BenchEntry, CompileConfig, PathSchedule, UnitySolution,
    UniversalityConfig,
};
use unicirc::linalg::{char_poly_coeffs, haar_random, SquareMatrix, C64};
use unicirc::objective::{distance, ObjectiveSpec};
use unicirc::optimize::{linear_fit, minimize, Mode, OptimizerConfig};
use unicirc::Error;

fn chain3() -> &'static (CircuitTopology, UnitySolution) {
    static CELL: OnceLock<(CircuitTopology, UnitySolution)> = OnceLock::new();
    CELL.get_or_init(|| {
        let topology = preset_topology("chain3").unwrap();
        let unity = find_unity(&topology, &OptimizerConfig::default(), 10, 1e-10).unwrap();
        (topology, unity)
    })
}

fn qn() -> OptimizerConfig {
    OptimizerConfig {
        mode: Mode::QuasiNewton,
        ..OptimizerConfig::default()
    }
}

fn qft(n: usize) -> SquareMatrix {
    let dim = 1usize << n;
    let scale = 1.0 / (dim as f64).sqrt();
    SquareMatrix::from_fn(dim, |i, j| {
        C64::from_polar(scale, 2.0 * std::f64::consts::PI * (i * j) as f64 / dim as f64)
    })
}

#[test]
fn chain3_unity_is_certified() {
    let (topology, unity) = chain3();
    assert!(unity.residual_cost <= 1e-10);
    assert!(unity.restarts_used <= 10);
    let check = check_unity(topology, unity).unwrap();
    assert!(check.cost <= 1e-10);
    assert!(check.max_gap_error <= 1e-5, "gap error {}", check.max_gap_error);
    assert!(check.power_distance <= 1e-6);
    let u = unit_unitary(topology, &unity.unit_params).unwrap();
    let chi = char_poly_coeffs(&u).unwrap().chi();
    assert_eq!(chi, unity.chi);
}

#[test]
fn unity_search_is_deterministic() {
    let topology = preset_topology("chain3").unwrap();
    let config = OptimizerConfig {
        seed: 7,
        ..OptimizerConfig::default()
    };
    let a = find_unity(&topology, &config, 10, 1e-10).unwrap();
    let b = find_unity(&topology, &config, 10, 1e-10).unwrap();
    assert_eq!(a, b);
}

#[test]
fn chain3_is_compiling_universal() {
    let (topology, unity) = chain3();
    let report = test_universality(topology, unity, &UniversalityConfig::default(), &qn()).unwrap();
    assert!(report.pass, "median gamma {}", report.median_gamma);
    assert_eq!(report.per_target.len(), 10);
    let again = test_universality(topology, unity, &UniversalityConfig::default(), &qn()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn rotation_free_topology_is_not_universal() {
    let topology = CircuitTopology::new(
        3,
        "cnots-only",
        vec![
            GateSlot::Cnot { control: 1, target: 2 },
            GateSlot::Cnot { control: 2, target: 3 },
        ],
        None,
    )
    .unwrap();
    let unity = UnitySolution {
        unit_params: ParameterVector::unit(Vec::new()),
        residual_cost: 0.0,
        chi: 0.0,
        restarts_used: 0,
        iterations: 0,
        seed: 0,
    };
    let settings = UniversalityConfig {
        n_targets: 3,
        ..UniversalityConfig::default()
    };
    let report = test_universality(&topology, &unity, &settings, &qn()).unwrap();
    assert!(!report.pass);
}

#[test]
fn own_unity_target_needs_no_work() {
    let (topology, unity) = chain3();
    let full = replicate_params(&unity.unit_params, 3).unwrap();
    let target = circuit_unitary(topology, &full).unwrap();
    let result = compile(topology, unity, &target, &CompileConfig::default(), &qn()).unwrap();
    assert!(result.final_distance <= 1e-12);
    assert_eq!(result.total_iterations(), 0);
    assert_eq!(result.legs.len(), result.schedule.steps);
}

#[test]
fn qft3_compiles() {
    let (topology, unity) = chain3();
    let target = qft(3);
    let settings = CompileConfig {
        steps: Some(20),
        ..CompileConfig::default()
    };
    let result = compile(topology, unity, &target, &settings, &qn()).unwrap();
    assert!(result.final_distance <= 1e-6);
    let j: Vec<usize> = result.legs.iter().map(|l| l.j).collect();
    assert_eq!(j, (1..=20).collect::<Vec<_>>());
    for leg in &result.legs[..19] {
        assert!(leg.achieved_distance <= 0.01);
    }
    let circuit = circuit_unitary(topology, &result.full_params).unwrap();
    assert!((distance(&circuit, &target).unwrap() - result.final_distance).abs() < 1e-15);
}

#[test]
fn haar_targets_compile_and_refine() {
    let (topology, unity) = chain3();
    let settings = CompileConfig {
        steps: Some(20),
        ..CompileConfig::default()
    };
    for seed in 0..10 {
        let target = haar_random(8, 900 + seed).unwrap();
        let result = compile(topology, unity, &target, &settings, &qn()).unwrap();
        assert!(result.final_distance <= 1e-6, "seed {seed}");
        let (params, trace) = refine(topology, &result, &target, 1e-7, &qn()).unwrap();
        let refined = distance(&circuit_unitary(topology, &params).unwrap(), &target).unwrap();
        assert!(refined <= 1e-7, "seed {seed}: refined {refined:e}");
        assert!(trace.final_cost() <= 1e-7);
    }
}

#[test]
fn compile_is_phase_blind() {
    let (topology, unity) = chain3();
    let settings = CompileConfig {
        steps: Some(20),
        ..CompileConfig::default()
    };
    let target = haar_random(8, 31).unwrap();
    let a = compile(topology, unity, &target, &settings, &qn()).unwrap();
    for alpha in [0.4, -2.0, 3.0] {
        let rotated = target.scale(C64::from_polar(1.0, alpha));
        let b = compile(topology, unity, &rotated, &settings, &qn()).unwrap();
        assert!((a.final_distance - b.final_distance).abs() <= 1e-12);
    }
}

#[test]
fn intermediates_are_kept_on_request() {
    let (topology, unity) = chain3();
    let settings = CompileConfig {
        steps: Some(10),
        keep_intermediates: true,
        ..CompileConfig::default()
    };
    let target = haar_random(8, 2).unwrap();
    let result = compile(topology, unity, &target, &settings, &qn()).unwrap();
    let kept = result.intermediate_params.as_ref().unwrap();
    assert_eq!(kept.len(), 10);
    assert_eq!(kept[9], result.full_params);
}

#[test]
fn leg_failure_names_the_leg() {
    let (topology, unity) = chain3();
    let config = OptimizerConfig {
        max_iterations: 1,
        ..OptimizerConfig::default()
    };
    let target = haar_random(8, 3).unwrap();
    match compile(topology, unity, &target, &CompileConfig::default(), &config) {
        Err(Error::LegFailed { leg, best_distance, .. }) => {
            assert_eq!(leg, 1);
            assert!(best_distance > 0.01);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn path_has_no_wild_jumps() {
    for seed in 0..20 {
        let target = haar_random(8, 4000 + seed).unwrap();
        let steps = PathSchedule::default_steps(&target).unwrap();
        let (h, _) = target_generator(&target).unwrap();
        let path = path_targets(&h, &PathSchedule::new(steps).unwrap()).unwrap();
        let first = distance(&path[0], &SquareMatrix::identity(8)).unwrap();
        for pair in path.windows(2) {
            assert!(distance(&pair[0], &pair[1]).unwrap() < first + 0.05);
        }
    }
}

#[test]
fn path_distance_grows_linearly_early_on() {
    let mut r2_sum = 0.0;
    for seed in 0..20 {
        let target = haar_random(8, 6000 + seed).unwrap();
        let (h, _) = target_generator(&target).unwrap();
        let path = path_targets(&h, &PathSchedule::new(20).unwrap()).unwrap();
        let profile: Vec<(f64, f64)> = path[..10]
            .iter()
            .enumerate()
            .map(|(j, u)| ((j + 1) as f64, distance(u, &SquareMatrix::identity(8)).unwrap()))
            .collect();
        assert!(profile.windows(2).all(|w| w[1].1 >= w[0].1), "seed {seed}");
        r2_sum += linear_fit(&profile).unwrap().1;
    }
    assert!(r2_sum / 20.0 >= 0.9);
}

fn bench_settings() -> BenchConfig {
    BenchConfig {
        n_targets: 3,
        compile: CompileConfig {
            steps: Some(20),
            ..CompileConfig::default()
        },
        universality: None,
        seed: 5,
        ..BenchConfig::default()
    }
}

#[test]
fn bench_identical_topologies_tie() {
    let (topology, unity) = chain3();
    let entry = BenchEntry {
        topology: topology.clone(),
        unity: Some(unity.clone()),
    };
    let rows = bench_efficiency(&[entry.clone(), entry], &bench_settings(), &qn()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].non_compiling.is_none());
    assert_eq!(rows[0].iterations, rows[1].iterations);
    assert_eq!(rows[0].median_iterations, rows[1].median_iterations);
}

#[test]
fn bench_marks_failures_as_non_compiling() {
    let (topology, unity) = chain3();
    let mut settings = bench_settings();
    settings.n_targets = 1;
    let strict = OptimizerConfig {
        max_iterations: 2,
        ..qn()
    };
    let entry = BenchEntry {
        topology: topology.clone(),
        unity: Some(unity.clone()),
    };
    let rows = bench_efficiency(&[entry], &settings, &strict).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].non_compiling.is_some());
    assert!(rows[0].median_iterations.is_none());
}

#[test]
fn bench_extra_cnot_helps() {
    let (topology, unity) = chain3();
    let entries = [
        BenchEntry {
            topology: topology.clone(),
            unity: Some(unity.clone()),
        },
        BenchEntry {
            topology: preset_topology("triangle3").unwrap(),
            unity: None,
        },
    ];
    let mut settings = bench_settings();
    settings.n_targets = 5;
    let rows = bench_efficiency(&entries, &settings, &qn()).unwrap();
    let chain = rows[0].median_iterations.unwrap();
    let triangle = rows[1].median_iterations.unwrap();
    println!("chain3 {chain} triangle3 {triangle} ratio {:.2}", chain / triangle);
    assert!(triangle < chain);
}

/// Quasi-Newton against plain descent at twice the budget. Reported, and only
/// a clear majority is required, since individual instances may go either way.
#[test]
fn quasi_newton_soft_benchmark() {
    let topology = preset_topology("chain3").unwrap();
    let (_, unity) = chain3();
    let start = replicate_params(&unity.unit_params, 3).unwrap();
    let mut wins = 0;
    for seed in 0..10 {
        let target = unicirc::compiler::near_identity_target(8, 0.1, 50 + seed).unwrap();
        let spec = ObjectiveSpec::target_distance(&topology, &target).unwrap();
        let budget = 300;
        let gd = OptimizerConfig {
            max_iterations: 2 * budget,
            cost_tolerance: 1e-12,
            ..OptimizerConfig::default()
        };
        let q = OptimizerConfig {
            mode: Mode::QuasiNewton,
            max_iterations: budget,
            ..gd.clone()
        };
        let (_, gd_trace) = minimize(&spec, &start.angles, &gd).unwrap();
        let (_, qn_trace) = minimize(&spec, &start.angles, &q).unwrap();
        println!(
            "seed {seed}: gd {:.3e} qn {:.3e}",
            gd_trace.final_cost(),
            qn_trace.final_cost()
        );
        if qn_trace.final_cost() <= gd_trace.final_cost() {
            wins += 1;
        }
    }
    println!("quasi-newton no worse on {wins} of 10");
    assert!(wins >= 8);
}
