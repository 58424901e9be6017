use std::collections::BTreeSet;

use spinchain::classical_mc::Readout;
use spinchain::lattice::LatticeSpec;
use spinchain::protocols::{run_hysteresis, Engine, EquilibriumSettings, ExperimentPlan};
use spinchain::records::{read_jsonl, Direction};
use spinchain::runspec::{execute, summarize, ExperimentKind, RunSpec};

fn small_hysteresis() -> ExperimentPlan {
    ExperimentPlan {
        engine: Engine::Classical,
        lattice: LatticeSpec::periodic(3, 3),
        gammas: vec![0.0],
        h_grid: vec![0.5, 1.0, 1.5],
        rates: vec![20.0, 200.0],
        directions: vec![Direction::Down, Direction::Up],
        replicas: 3,
        seed: 5,
        readout: Readout::GreedyQuench,
        ..ExperimentPlan::default()
    }
}

#[test]
fn replicas_are_distinguishable() {
    let out = run_hysteresis(&small_hysteresis()).unwrap();
    assert_eq!(out.records.len(), 3 * 2 * 2 * 3);
    let seeds: BTreeSet<u64> = out.records.iter().map(|r| r.meta.seed).collect();
    assert_eq!(seeds.len(), out.records.len());
    let reps: BTreeSet<u32> = out.records.iter().map(|r| r.meta.replica).collect();
    assert_eq!(reps, [0, 1, 2].into_iter().collect());
}

#[test]
fn summary_has_one_row_per_grid_point() {
    let plan = small_hysteresis();
    let out = run_hysteresis(&plan).unwrap();
    let rows = summarize(&out.records);
    assert_eq!(
        rows.len(),
        plan.h_grid.len() * plan.rates.len() * plan.directions.len() * plan.gammas.len()
    );
    assert!(rows.iter().all(|r| r.n == 3));
}

#[test]
fn pimc_records_carry_the_protocol_gamma() {
    let plan = ExperimentPlan {
        engine: Engine::Pimc,
        gammas: vec![0.51, 1.06],
        rates: vec![50.0],
        directions: vec![Direction::Down],
        replicas: 1,
        pimc: spinchain::pimc::PimcParams {
            l_tau: 8,
            ..Default::default()
        },
        readout: Readout::MajorityVote,
        ..small_hysteresis()
    };
    let out = run_hysteresis(&plan).unwrap();
    let rows = summarize(&out.records);
    assert_eq!(rows.len(), 2 * 3);
    let gammas: BTreeSet<u64> = rows.iter().map(|r| r.gamma.to_bits()).collect();
    assert_eq!(gammas, [0.51f64.to_bits(), 1.06f64.to_bits()].into_iter().collect());
}

#[test]
fn minimal_equilibrium_spec_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ExperimentPlan {
        engine: Engine::Classical,
        lattice: LatticeSpec::periodic(6, 6),
        gammas: vec![0.0],
        h_grid: vec![1.0, 1.8],
        replicas: 2,
        snapshots: true,
        equilibrium: EquilibriumSettings {
            anneal_sweeps: 100,
            dwell_sweeps: 200,
            samples: 3,
            sample_interval: 10,
            ..EquilibriumSettings::default()
        },
        ..ExperimentPlan::default()
    };
    let mut spec = RunSpec::new(ExperimentKind::Equilibrium, plan);
    spec.output.dir = Some(dir.path().join("eq"));
    let out = execute(&spec).unwrap();
    for name in [
        "records.jsonl",
        "records.csv",
        "summary.csv",
        "m_curve.svg",
        "m_fim_curve.svg",
    ] {
        assert!(out.dir.join(name).is_file(), "{name} missing");
    }
    let (header, records) = read_jsonl(&out.dir.join("records.jsonl")).unwrap();
    let header = header.expect("header line");
    assert_eq!(header.spec_hash, spec.spec_hash());
    assert_eq!(records.len(), 2 * 2 * 3);
    assert!(records.iter().any(|r| r.snapshot.is_some()));

    let mut render = RunSpec::new(ExperimentKind::Render, ExperimentPlan::default());
    render.input = Some(out.dir.join("records.jsonl"));
    render.output.dir = Some(dir.path().join("svg"));
    let drawn = execute(&render).unwrap();
    assert!(!drawn.files.is_empty());
    assert!(drawn.files.iter().all(|f| f.extension().is_some_and(|e| e == "svg")));
}

#[test]
fn spec_hash_ignores_the_output_section() {
    let mut a = RunSpec::new(ExperimentKind::Hysteresis, small_hysteresis());
    let b = a.clone();
    a.output.dir = Some("elsewhere".into());
    a.output.timestamp = false;
    assert_eq!(a.spec_hash(), b.spec_hash());
    a.plan.seed += 1;
    assert_ne!(a.spec_hash(), b.spec_hash());
}

#[test]
fn bad_specs_name_the_field() {
    let err = RunSpec::from_json_str(r#"{"schema_version":1,"kind":"equilibrium","plan":{"betas":[-1.0]}}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("plan.betas[0]"), "{err}");
    let err = RunSpec::from_json_str(r#"{"schema_version":1,"kind":"equilibrium","plan":{"replica":3}}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("plan"), "{err}");
}
