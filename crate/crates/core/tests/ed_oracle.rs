use approx::assert_relative_eq;
use spinchain::ed::{diagonalize, enumerate_ground_manifold, SpinHamiltonian};
use spinchain::lattice::LatticeSpec;
use spinchain::protocols::{run_equilibrium_scan, Engine, ExperimentPlan};
use spinchain::records::Source;

/// Independent-set counts by size on the `l1 × l2` triangular torus via a
/// row transfer matrix, closing the trace row by row.
fn transfer_counts(l1: usize, l2: usize) -> Vec<u64> {
    let full = (1u32 << l2) - 1;
    let rot = |s: u32| ((s << 1) | (s >> (l2 - 1))) & full;
    let rows: Vec<u32> = (0..=full).filter(|&s| s & rot(s) == 0).collect();
    // row below: same column and one column to the left
    let fits = |a: u32, b: u32| a & b == 0 && a & rot(b) == 0;
    let n = l1 * l2;
    let mut total = vec![0u64; n + 1];
    for &first in &rows {
        let mut dp: Vec<Vec<u64>> = rows
            .iter()
            .map(|&s| {
                let mut v = vec![0u64; n + 1];
                if s == first {
                    v[s.count_ones() as usize] = 1;
                }
                v
            })
            .collect();
        for _ in 1..l1 {
            let mut next = vec![vec![0u64; n + 1]; rows.len()];
            for (i, &a) in rows.iter().enumerate() {
                for (j, &b) in rows.iter().enumerate() {
                    if !fits(a, b) {
                        continue;
                    }
                    let w = b.count_ones() as usize;
                    for k in 0..=n - w {
                        next[j][k + w] += dp[i][k];
                    }
                }
            }
            dp = next;
        }
        for (i, &last) in rows.iter().enumerate() {
            if fits(last, first) {
                for k in 0..=n {
                    total[k] += dp[i][k];
                }
            }
        }
    }
    while total.len() > 1 && *total.last().unwrap() == 0 {
        total.pop();
    }
    total
}

#[test]
fn enumeration_matches_transfer_matrix() {
    for (l1, l2) in [(3, 3), (3, 4), (4, 3), (4, 4), (3, 6), (5, 5), (6, 6)] {
        let rep = enumerate_ground_manifold(l1, l2, true).unwrap();
        let tm = transfer_counts(l1, l2);
        assert_eq!(rep.counts_by_size, tm, "{l1}x{l2}");
        assert_eq!(rep.total_states, tm.iter().sum::<u64>());
    }
}

#[test]
fn single_spin_closed_form() {
    for (b, g) in [(0.0, 1.0), (0.6, 0.8), (1.5, 0.3), (0.4, 0.0)] {
        let ham = SpinHamiltonian {
            fields: vec![b],
            couplings: vec![],
            transverse: vec![g],
            sublattice: None,
        };
        let spec = diagonalize(&ham).unwrap();
        let r: f64 = (b * b + g * g).sqrt();
        assert_relative_eq!(spec.ground_energy(), -r, epsilon = 1e-12);
        for beta in [0.5, 4.0] {
            let t = spec.thermal(beta);
            let expect = if r == 0.0 { 0.0 } else { -b / r * (beta * r).tanh() };
            assert_relative_eq!(t.magnetization, expect, epsilon = 1e-12);
            assert_relative_eq!(t.energy, -r * (beta * r).tanh(), epsilon = 1e-12);
        }
    }
}

#[test]
fn ferromagnetic_pair_closed_form() {
    for (j, g) in [(1.8, 0.51), (1.8, 1.06), (1.0, 2.0)] {
        let spec = diagonalize(&SpinHamiltonian::fm_chain(2, j, g)).unwrap();
        assert_relative_eq!(spec.ground_energy(), -(j * j + 4.0 * g * g).sqrt(), epsilon = 1e-12);
        assert_eq!(spec.ground_degeneracy(), 1);
    }
}

#[test]
fn ed_engine_records_are_tagged() {
    let plan = ExperimentPlan {
        engine: Engine::Ed,
        lattice: LatticeSpec::triangle().with_chain_length(2),
        gammas: vec![0.51],
        h_grid: vec![0.5, 1.0, 1.5],
        replicas: 1,
        ..ExperimentPlan::default()
    };
    let out = run_equilibrium_scan(&plan).unwrap();
    assert_eq!(out.records.len(), 3);
    assert!(out.records.iter().all(|r| r.meta.source == Source::Ed));
    let lat = spinchain::lattice::build_lattice(&plan.lattice).unwrap();
    for r in &out.records {
        let ham = SpinHamiltonian::from_lattice(&lat, &spinchain::model::ModelParams::reduced(r.meta.h, 0.51, 4.5));
        let t = diagonalize(&ham).unwrap().thermal(4.5);
        assert_relative_eq!(r.m_over_msat, -t.magnetization, epsilon = 1e-9);
    }
}
