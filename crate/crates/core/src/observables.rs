//! Measurements on σᶻ configurations.
//!
//! Functions here take configurations in whatever frame the caller supplies;
//! [`measure`] converts raw σᶻ states to the field frame (`+1` = aligned with the
//! applied field, i.e. raw σᶻ = −1) before evaluating, so magnetization curves
//! run from 0 to +1 and the up-up-down plateau has `M/M_sat = 1/3`,
//! `m_FIM = +1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::classical_mc::SpinConfiguration;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::model::{classical_energy, ModelParams};
use crate::scalar::Real;

/// Mean of the spins of `chain`, in `{−1, −1/2, 0, 1/2, 1}` for four-spin chains.
pub fn chain_magnetization(lat: &Lattice, s: &SpinConfiguration, chain: usize) -> f64 {
    let spins = &lat.chains()[chain].spins;
    let v = s.values();
    spins.iter().map(|&i| v[i] as i64).sum::<i64>() as f64 / spins.len() as f64
}

/// Pseudospin of an unbroken chain, `None` if its spins disagree.
pub fn pseudospin(lat: &Lattice, s: &SpinConfiguration, chain: usize) -> Option<i8> {
    let spins = &lat.chains()[chain].spins;
    let v = s.values();
    let first = v[spins[0]];
    spins.iter().all(|&i| v[i] == first).then_some(first)
}

/// Mean spin over the chains selected by `mask` (all chains when `None`).
pub fn magnetization<T: Real>(lat: &Lattice, s: &SpinConfiguration, mask: Option<&[bool]>) -> T {
    let v = s.values();
    let mut sum = 0i64;
    let mut n = 0usize;
    for (c, ch) in lat.chains().iter().enumerate() {
        if mask.is_some_and(|m| !m[c]) {
            continue;
        }
        sum += ch.spins.iter().map(|&i| v[i] as i64).sum::<i64>();
        n += ch.spins.len();
    }
    if n == 0 {
        T::zero()
    } else {
        T::lit(sum as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter<T> {
    /// `ψ = m e^{iθ} = (m₁ + m₂ e^{2πi/3} + m₃ e^{4πi/3})/√3`
    pub psi: Complex<T>,
    /// `−Re[(ψ √3/2)³]`
    pub m_fim: T,
    pub sublattice: [T; 3],
}

/// `ψ` and `m_FIM` from three sublattice magnetizations.
pub fn order_parameter_from_sublattices<T: Real>(m: [T; 3]) -> OrderParameter<T> {
    let third = T::lit(2.0) * T::PI() / T::lit(3.0);
    let w1 = Complex::from_polar(T::one(), third);
    let w2 = Complex::from_polar(T::one(), third + third);
    let sqrt3 = T::lit(3.0).sqrt();
    let psi = (Complex::new(m[0], T::zero()) + w1 * m[1] + w2 * m[2]) / sqrt3;
    let z = psi * (sqrt3 / T::lit(2.0));
    let m_fim = -(z * z * z).re;
    OrderParameter {
        psi,
        m_fim,
        sublattice: m,
    }
}

/// Three-sublattice order parameter from chain pseudospin means over the
/// chains selected by `mask`.
pub fn order_parameter<T: Real>(lat: &Lattice, s: &SpinConfiguration, mask: Option<&[bool]>) -> OrderParameter<T> {
    let mut sums = [0.0f64; 3];
    let mut counts = [0usize; 3];
    for c in 0..lat.n_chains() {
        if mask.is_some_and(|m| !m[c]) {
            continue;
        }
        let k = lat.sublattice(c).index();
        sums[k] += chain_magnetization(lat, s, c);
        counts[k] += 1;
    }
    let m = [0, 1, 2].map(|k| {
        if counts[k] == 0 {
            T::zero()
        } else {
            T::lit(sums[k] / counts[k] as f64)
        }
    });
    order_parameter_from_sublattices(m)
}

pub fn broken_chain_fraction(lat: &Lattice, s: &SpinConfiguration) -> f64 {
    if lat.n_chains() == 0 {
        return 0.0;
    }
    let broken = (0..lat.n_chains()).filter(|&c| pseudospin(lat, s, c).is_none()).count();
    broken as f64 / lat.n_chains() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalEntropy {
    /// Number of admissible down/up pseudospin swaps.
    pub moves: u32,
    /// Chains excluded from counting because their spins disagree.
    pub broken_chains: u32,
}

/// Count swaps of a down pseudospin with an adjacent up pseudospin (unbroken
/// chains only; `-1` is "down"). With `strict`, only swaps that leave the
/// classical energy unchanged are counted. The field term is invariant under a
/// swap, so the check only involves the inter-chain bonds and needs no
/// parameters.
pub fn local_entropy(lat: &Lattice, s: &SpinConfiguration, strict: bool) -> LocalEntropy {
    let v = s.values();
    let pseudo: Vec<Option<i8>> = (0..lat.n_chains()).map(|c| pseudospin(lat, s, c)).collect();
    let broken_chains = pseudo.iter().filter(|p| p.is_none()).count() as u32;
    // Σ σ_own σ_foreign over AFM bonds of `c`, excluding bonds into `skip`.
    let bond_sum = |c: usize, skip: usize| -> i32 {
        lat.chain_afm_bonds(c)
            .iter()
            .filter(|&&(_, f)| lat.chain_of(f) != skip)
            .map(|&(o, f)| (v[o] * v[f]) as i32)
            .sum()
    };
    let mut moves = 0;
    for j in 0..lat.n_chains() {
        if pseudo[j] != Some(-1) {
            continue;
        }
        for &l in lat.chain_neighbors(j) {
            if pseudo[l] != Some(1) {
                continue;
            }
            if !strict || bond_sum(j, l) + bond_sum(l, j) == 0 {
                moves += 1;
            }
        }
    }
    LocalEntropy { moves, broken_chains }
}

/// Mean local entropy over all samples and the standard deviation of the
/// per-group means (one group per independent chain/programming).
pub fn local_entropy_stats(groups: &[Vec<u32>]) -> (f64, f64) {
    let all: Vec<f64> = groups.iter().flatten().map(|&x| x as f64).collect();
    let mean = crate::stats::mean(&all);
    let group_means: Vec<f64> = groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| g.iter().map(|&x| x as f64).sum::<f64>() / g.len() as f64)
        .collect();
    (mean, crate::stats::std_dev(&group_means))
}

/// `χ = dM/d(B/B_MAX)` with `B/B_MAX = H/2`: central differences inside,
/// one-sided at the ends.
pub fn susceptibility(curve: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if curve.len() < 3 {
        return Err(Error::Analysis(format!(
            "susceptibility needs at least 3 points, got {}",
            curve.len()
        )));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Analysis("H grid must be strictly increasing".into()));
    }
    let n = curve.len();
    let slope = |a: usize, b: usize| (curve[b].1 - curve[a].1) / ((curve[b].0 - curve[a].0) / 2.0);
    Ok((0..n)
        .map(|i| {
            let chi = match i {
                0 => slope(0, 1),
                i if i == n - 1 => slope(n - 2, n - 1),
                i => slope(i - 1, i + 1),
            };
            (curve[i].0, chi)
        })
        .collect())
}

/// Indices of local maxima of `y` (interior points, `y[i-1] < y[i] >= y[i+1]`).
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1])
        .collect()
}

/// All observables of one configuration in the field frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub m_over_msat: f64,
    pub psi: Complex<f64>,
    pub m_fim: f64,
    pub energy_per_spin: f64,
    pub local_entropy: u32,
    pub broken_chain_fraction: f64,
}

/// Measure a raw σᶻ configuration. With `trim`, averages use bulk chains only
/// (falling back to all chains when the lattice has no bulk).
pub fn measure<T: Real>(
    lat: &Lattice,
    raw: &SpinConfiguration,
    params: &ModelParams<T>,
    trim: bool,
) -> Result<Measurement> {
    let energy = classical_energy(lat, raw, params)?.as_f64();
    let s = raw.field_frame();
    let bulk = lat.bulk_mask();
    let mask = (trim && bulk.iter().any(|&b| b)).then_some(bulk);
    let op = order_parameter::<f64>(lat, &s, mask);
    Ok(Measurement {
        m_over_msat: magnetization::<f64>(lat, &s, mask),
        psi: op.psi,
        m_fim: op.m_fim,
        energy_per_spin: energy / lat.n_spins() as f64,
        local_entropy: local_entropy(lat, &s, true).moves,
        broken_chain_fraction: broken_chain_fraction(lat, &s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeSpec, Sublattice};
    use approx::assert_relative_eq;

    fn sublattice_state(lat: &Lattice, m: [i8; 3]) -> SpinConfiguration {
        let mut v = vec![0i8; lat.n_spins()];
        for (c, ch) in lat.chains().iter().enumerate() {
            for &i in &ch.spins {
                v[i] = m[lat.sublattice(c).index()];
            }
        }
        SpinConfiguration::new(lat, v).unwrap()
    }

    #[test]
    fn uniform_state_has_no_order() {
        let op = order_parameter_from_sublattices([1.0f64, 1.0, 1.0]);
        assert!(op.psi.norm() < 1e-12);
        assert!(op.m_fim.abs() < 1e-12);
    }

    #[test]
    fn up_up_down_saturates() {
        let op = order_parameter_from_sublattices([1.0f64, 1.0, -1.0]);
        assert_relative_eq!(op.psi.norm(), 2.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(op.m_fim, 1.0, epsilon = 1e-12);
        let op = order_parameter_from_sublattices([-1.0f64, -1.0, 1.0]);
        assert_relative_eq!(op.m_fim, -1.0, epsilon = 1e-12);
        // the three plateau states all have ψ = −(2/√3) e^{2πik/3}
        for m in [[-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]] {
            let op = order_parameter_from_sublattices::<f64>(m);
            assert_relative_eq!(op.m_fim, 1.0, epsilon = 1e-12);
            let arg = (-op.psi).arg().rem_euclid(2.0 * std::f64::consts::PI);
            let k = arg / (2.0 * std::f64::consts::PI / 3.0);
            assert_relative_eq!(k, k.round(), epsilon = 1e-9);
        }
    }

    #[test]
    fn order_parameter_on_lattice() {
        let lat = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let s = sublattice_state(&lat, [1, 1, -1]);
        let op = order_parameter::<f64>(&lat, &s, None);
        assert_relative_eq!(op.m_fim, 1.0, epsilon = 1e-12);
        assert_relative_eq!(magnetization::<f64>(&lat, &s, None), 1.0 / 3.0, epsilon = 1e-12);
        let f = order_parameter::<f32>(&lat, &s, None);
        assert!((f.m_fim - 1.0).abs() < 1e-5);
    }

    #[test]
    fn susceptibility_arithmetic() {
        let chi = susceptibility(&[(0.96, 0.30), (1.00, 0.34), (1.04, 0.40)]).unwrap();
        assert_relative_eq!(chi[1].1, 2.5, epsilon = 1e-12);
        let flat = susceptibility(&[(0.0, 0.2), (0.5, 0.2), (1.0, 0.2), (1.5, 0.2)]).unwrap();
        assert!(flat.iter().all(|&(_, c)| c == 0.0));
        assert!(susceptibility(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(susceptibility(&[(0.0, 0.0), (1.0, 1.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn local_entropy_cases() {
        let lat = build_lattice(&LatticeSpec::triangle()).unwrap();
        let up = SpinConfiguration::uniform(&lat, 1);
        assert_eq!(local_entropy(&lat, &up, true).moves, 0);
        let mut v = up.values().to_vec();
        for &i in &lat.chains()[0].spins {
            v[i] = -1;
        }
        let one_down = SpinConfiguration::new(&lat, v).unwrap();
        assert_eq!(local_entropy(&lat, &one_down, true).moves, 2);
    }

    #[test]
    fn strict_local_entropy_matches_energy_check() {
        // FIM state with one extra down chain: compare the strict count
        // against explicit energy evaluation of each swap.
        let lat = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let mut s = sublattice_state(&lat, [1, 1, -1]);
        let extra = (0..lat.n_chains())
            .find(|&c| lat.sublattice(c) == Sublattice::A)
            .unwrap();
        for &i in &lat.chains()[extra].spins {
            s.values_mut()[i] = -1;
        }
        let p = ModelParams::<f64>::reduced(1.5, 0.0, 4.5);
        let e0 = classical_energy(&lat, &s, &p).unwrap();
        let mut brute = 0;
        for j in 0..lat.n_chains() {
            if pseudospin(&lat, &s, j) != Some(-1) {
                continue;
            }
            for &l in lat.chain_neighbors(j) {
                if pseudospin(&lat, &s, l) != Some(1) {
                    continue;
                }
                let mut t = s.clone();
                for &i in lat.chains()[j].spins.iter().chain(&lat.chains()[l].spins) {
                    t.values_mut()[i] *= -1;
                }
                if (classical_energy(&lat, &t, &p).unwrap() - e0).abs() < 1e-12 {
                    brute += 1;
                }
            }
        }
        assert_eq!(local_entropy(&lat, &s, true).moves, brute);
        assert!(local_entropy(&lat, &s, false).moves >= brute);
    }

    #[test]
    fn broken_chains() {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let mut s = sublattice_state(&lat, [1, 1, -1]);
        assert_eq!(broken_chain_fraction(&lat, &s), 0.0);
        let interior = lat.chains()[4].spins[1];
        s.values_mut()[interior] *= -1;
        assert_relative_eq!(broken_chain_fraction(&lat, &s), 1.0 / 9.0);
        assert_eq!(local_entropy(&lat, &s, true).broken_chains, 1);
    }

    #[test]
    fn entropy_stats() {
        let (mean, sd) = local_entropy_stats(&[vec![1, 3], vec![2, 2], vec![5, 7]]);
        assert_relative_eq!(mean, 20.0 / 6.0);
        let means = [2.0, 2.0, 6.0];
        let m = 10.0 / 3.0;
        let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 2.0;
        assert_relative_eq!(sd, var.sqrt());
    }

    #[test]
    fn trimming_ignores_boundary_ring() {
        // periodic FIM pattern vs the same pattern embedded in an open lattice
        // with a random boundary ring
        let per = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let open = build_lattice(&LatticeSpec::open(8, 8)).unwrap();
        let mut v = vec![0i8; open.n_spins()];
        let mut k = 17u64;
        for (c, ch) in open.chains().iter().enumerate() {
            for &i in &ch.spins {
                v[i] = if open.bulk_mask()[c] {
                    // same colour formula as the periodic lattice
                    [-1, -1, 1][open.sublattice(c).index()]
                } else {
                    k = crate::rng::splitmix64(k);
                    if k & 1 == 0 {
                        1
                    } else {
                        -1
                    }
                };
            }
        }
        let s_open = SpinConfiguration::new(&open, v).unwrap();
        let s_per = sublattice_state(&per, [-1, -1, 1]);
        let p = ModelParams::<f64>::reduced(1.0, 0.0, 4.5);
        let a = measure(&open, &s_open, &p, true).unwrap();
        let b = measure(&per, &s_per, &p, true).unwrap();
        assert_relative_eq!(a.m_over_msat, b.m_over_msat, epsilon = 1e-12);
        assert_relative_eq!(a.m_fim, b.m_fim, epsilon = 1e-12);
        assert_relative_eq!(a.m_over_msat, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn local_maxima_detection() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.5, 0.7, 0.2]), vec![1, 3]);
        assert!(local_maxima(&[1.0, 2.0]).is_empty());
    }
}
