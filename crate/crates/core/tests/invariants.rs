use num_complex::Complex;
use num_rational::Ratio;
use proptest::prelude::*;
use spinchain::classical_mc::{metropolis_sweep, McChainState, SpinConfiguration};
use spinchain::ed::{diagonalize, SpinHamiltonian};
use spinchain::lattice::{build_lattice, LatticeSpec};
use spinchain::model::{
    classical_energy, energy_delta_single_flip, map_to_effective, Controls, ModelParams, Schedule, SegmentKind,
};
use spinchain::observables::{magnetization, order_parameter, order_parameter_from_sublattices};

fn spins(n: usize) -> impl Strategy<Value = Vec<i8>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n)
}

fn params() -> impl Strategy<Value = ModelParams<f64>> {
    (0.0..2.0f64, 0.5..3.0f64, 0.2..2.0f64).prop_map(|(b, j0, j1)| ModelParams {
        j1,
        j0,
        b,
        gamma: 0.0,
        temperature: 1.0,
    })
}

proptest! {
    #[test]
    fn periodic_bond_counts(r in 1usize..4, c in 1usize..4, len in 2usize..6) {
        let lat = build_lattice(&LatticeSpec::periodic(3 * r, 3 * c).with_chain_length(len)).unwrap();
        prop_assert_eq!(2 * lat.afm_bonds().len(), 6 * lat.n_chains());
        prop_assert_eq!(lat.fm_bonds().len(), (len - 1) * lat.n_chains());
    }

    #[test]
    fn sublattices_survive_rebuilds(r in 1usize..4, c in 1usize..4) {
        let spec = LatticeSpec::periodic(3 * r, 3 * c);
        let a = build_lattice(&spec).unwrap();
        let b = build_lattice(&spec).unwrap();
        for k in 0..a.n_chains() {
            prop_assert_eq!(a.sublattice(k), b.sublattice(k));
        }
        prop_assert_eq!(a.tag(), b.tag());
    }

    #[test]
    fn vacancy_removes_its_bonds(v in 0usize..36) {
        let full = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let holed = build_lattice(&LatticeSpec::periodic(6, 6).with_vacancies([v])).unwrap();
        prop_assert_eq!(full.fm_bonds().len() - holed.fm_bonds().len(), 3);
        let lost = full.afm_bonds().len() - holed.afm_bonds().len();
        prop_assert!((1..=6).contains(&lost));
    }

    #[test]
    fn flip_delta_matches_recomputation(v in spins(36), p in params(), i in 0usize..36) {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let s = SpinConfiguration::new(&lat, v).unwrap();
        let d = energy_delta_single_flip(&lat, &s, &p, i).unwrap();
        let mut t = s.clone();
        t.flip(i);
        let e0 = classical_energy(&lat, &s, &p).unwrap();
        let e1 = classical_energy(&lat, &t, &p).unwrap();
        prop_assert!((e1 - e0 - d).abs() < 1e-9);
        let back = energy_delta_single_flip(&lat, &t, &p, i).unwrap();
        prop_assert!((d + back).abs() < 1e-12);
    }

    #[test]
    fn global_flip_symmetry(v in spins(36), mut p in params()) {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let s = SpinConfiguration::new(&lat, v.clone()).unwrap();
        let t = SpinConfiguration::new(&lat, v.iter().map(|x| -x).collect()).unwrap();
        let e = classical_energy(&lat, &s, &p).unwrap();
        let mut q = p;
        q.b = -p.b;
        prop_assert!((e - classical_energy(&lat, &t, &q).unwrap()).abs() < 1e-9);
        p.b = 0.0;
        let e0 = classical_energy(&lat, &s, &p).unwrap();
        prop_assert!((e0 - classical_energy(&lat, &t, &p).unwrap()).abs() < 1e-9);
        let (fs, ft) = (s.field_frame(), t.field_frame());
        prop_assert!((magnetization::<f64>(&lat, &fs, None) + magnetization::<f64>(&lat, &ft, None)).abs() < 1e-12);
        let (a, b) = (order_parameter::<f64>(&lat, &fs, None), order_parameter::<f64>(&lat, &ft, None));
        prop_assert!((a.m_fim + b.m_fim).abs() < 1e-12);
    }

    #[test]
    fn energy_is_extensive(v in spins(36), p in params()) {
        let small = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let big = build_lattice(&LatticeSpec::periodic(3, 6)).unwrap();
        let mut tiled = vec![0i8; big.n_spins()];
        for (c, ch) in big.chains().iter().enumerate() {
            let src = small.chain_at(ch.row, ch.col % 3).unwrap();
            for (k, &i) in big.chains()[c].spins.iter().enumerate() {
                tiled[i] = v[small.chains()[src].spins[k]];
            }
        }
        let e1 = classical_energy(&small, &SpinConfiguration::new(&small, v).unwrap(), &p).unwrap();
        let e2 = classical_energy(&big, &SpinConfiguration::new(&big, tiled).unwrap(), &p).unwrap();
        prop_assert!((e2 - 2.0 * e1).abs() < 1e-9 * (1.0 + e1.abs()));
    }

    #[test]
    fn effective_mapping_is_monotone(g1 in 0.01..1.0f64, dg in 0.001..0.5f64, j0 in 0.5..3.0f64, dj in 0.001..1.0f64) {
        let p = |gamma: f64, j0: f64| ModelParams { j1: 1.0, j0, b: 0.5, gamma, temperature: 1.0 };
        let a = map_to_effective(&p(g1, j0)).unwrap().gamma_eff;
        prop_assert!(map_to_effective(&p(g1 + dg, j0)).unwrap().gamma_eff > a);
        prop_assert!(map_to_effective(&p(g1, j0 + dj)).unwrap().gamma_eff < a);
    }

    #[test]
    fn effective_mapping_over_rationals(gn in 1i64..20, jn in 10i64..40, bn in 0i64..20) {
        let p = ModelParams {
            j1: Ratio::from_integer(1),
            j0: Ratio::new(jn, 10),
            b: Ratio::new(bn, 10),
            gamma: Ratio::new(gn, 10),
            temperature: Ratio::from_integer(1),
        };
        let e = map_to_effective(&p).unwrap();
        prop_assert_eq!(e.gamma_eff * p.j0 * p.j0 * p.j0, p.gamma * p.gamma * p.gamma * p.gamma);
        prop_assert_eq!(e.b_eff, p.b * 4);
        prop_assert_eq!(e.b_sat_eff, Ratio::from_integer(6));
    }

    #[test]
    fn schedules_are_continuous(durs in prop::collection::vec(1u64..50, 1..5), hs in prop::collection::vec(0.0..2.0f64, 5)) {
        let mut sch = Schedule::constant(Controls::new(0.0, 0.5, hs[0]));
        let mut t = 0;
        let mut joints = Vec::new();
        for (k, &d) in durs.iter().enumerate() {
            sch = sch.then(SegmentKind::Sweep, d, Controls::new(1.0, 0.5, hs[k + 1]));
            t += d;
            joints.push(t);
        }
        sch.validate().unwrap();
        for &j in &joints[..joints.len() - 1] {
            let (a, b, c) = (sch.at(j as f64 - 1e-7).unwrap(), sch.at(j as f64).unwrap(), sch.at(j as f64 + 1e-7).unwrap());
            prop_assert!((a.h - b.h).abs() < 1e-6 && (c.h - b.h).abs() < 1e-6);
            prop_assert!((a.ising - b.ising).abs() < 1e-6 && (c.ising - b.ising).abs() < 1e-6);
        }
    }

    #[test]
    fn psi_is_equivariant_under_cyclic_relabelling(m in prop::array::uniform3(-1.0..1.0f64)) {
        let a = order_parameter_from_sublattices(m);
        let b = order_parameter_from_sublattices([m[2], m[0], m[1]]);
        let w = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        prop_assert!((b.psi - a.psi * w).norm() < 1e-12);
        prop_assert!((a.m_fim - b.m_fim).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_trajectory(seed in any::<u64>()) {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let p = ModelParams::<f64>::reduced(1.0, 0.0, 4.5);
        let run = || {
            let mut st = McChainState::new(SpinConfiguration::random(&lat, seed), seed, p);
            for _ in 0..20 {
                metropolis_sweep(&mut st, &lat).unwrap();
            }
            st.config.values().to_vec()
        };
        prop_assert_eq!(run(), run());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ed_is_invariant_under_site_relabelling(perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle(), b in 0.0..2.0f64, g in 0.1..1.5f64) {
        let lat = build_lattice(&LatticeSpec::triangle().with_chain_length(2)).unwrap();
        let ham = SpinHamiltonian::from_lattice(&lat, &ModelParams::reduced(b, g, 4.5));
        let a = diagonalize(&ham).unwrap();
        let r = diagonalize(&ham.relabeled(&perm)).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&r.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let (ta, tr) = (a.thermal(4.5), r.thermal(4.5));
        prop_assert!((ta.magnetization - tr.magnetization).abs() < 1e-9);
        prop_assert!((ta.energy - tr.energy).abs() < 1e-9);
    }

    #[test]
    fn f32_and_f64_energies_agree(v in spins(36), b in 0.0..2.0f64) {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let s = SpinConfiguration::new(&lat, v).unwrap();
        let e64 = classical_energy(&lat, &s, &ModelParams::<f64>::reduced(b, 0.0, 4.5)).unwrap();
        let e32 = classical_energy(&lat, &s, &ModelParams::<f32>::reduced(b, 0.0, 4.5)).unwrap();
        prop_assert!((e64 - e32 as f64).abs() < 1e-4 * (1.0 + e64.abs()));
    }
}
