//! Exact diagonalization and exhaustive enumeration for small instances.
//!
//! Basis states are bit strings; bit `i` clear means `σᶻ_i = +1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Lattice, DIRECTIONS};
use crate::model::{EffectiveModelParams, ModelParams};
use crate::observables::order_parameter_from_sublattices;

/// Largest system handled by full diagonalization.
pub const DENSE_LIMIT: usize = 12;
/// Largest system handled by the ground-state Lanczos solver.
pub const LANCZOS_LIMIT: usize = 24;
/// Largest lattice for exhaustive independent-set enumeration.
pub const ENUMERATION_LIMIT: usize = 36;

/// Periodic triangular lattice of `l1 × l2` sites with a column shift of
/// `shift` when wrapping across rows. Edges keep their multiplicity so that
/// every site has total coordination 6 even on tiny tori.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangularGraph {
    pub l1: usize,
    pub l2: usize,
    pub shift: usize,
    edges: Vec<(usize, usize)>,
}

impl TriangularGraph {
    pub fn periodic(l1: usize, l2: usize, shift: usize) -> Result<Self> {
        if l1 == 0 || l2 == 0 {
            return Err(Error::LatticeSpec("triangular dimensions must be positive".into()));
        }
        let mut edges = Vec::with_capacity(3 * l1 * l2);
        for r in 0..l1 {
            for c in 0..l2 {
                let i = r * l2 + c;
                for &(dr, dc) in &DIRECTIONS[..3] {
                    let j = Self::wrap(l1, l2, shift, r as isize + dr, c as isize + dc);
                    if j == i {
                        return Err(Error::LatticeSpec(format!(
                            "{l1}×{l2} torus with shift {shift} has a self-bond at site {i}"
                        )));
                    }
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
        edges.sort_unstable();
        Ok(TriangularGraph { l1, l2, shift, edges })
    }

    fn wrap(l1: usize, l2: usize, shift: usize, r: isize, c: isize) -> usize {
        let (l1i, l2i) = (l1 as isize, l2 as isize);
        let turns = r.div_euclid(l1i);
        let r = r.rem_euclid(l1i);
        let c = (c + turns * shift as isize).rem_euclid(l2i);
        (r * l2i + c) as usize
    }

    pub fn n_sites(&self) -> usize {
        self.l1 * self.l2
    }

    /// Edge list with multiplicity, each pair as `(min, max)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Distinct neighbours of every site.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_sites()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for nb in &mut adj {
            nb.sort_unstable();
            nb.dedup();
        }
        adj
    }

    /// Sublattice label `(row + 2·col) mod 3`, or `None` if it is not a proper
    /// colouring of this torus.
    pub fn sublattice(&self) -> Option<Vec<u8>> {
        let colour: Vec<u8> = (0..self.n_sites())
            .map(|i| ((i / self.l2 + 2 * (i % self.l2)) % 3) as u8)
            .collect();
        self.edges
            .iter()
            .all(|&(a, b)| colour[a] != colour[b])
            .then_some(colour)
    }
}

/// `H = Σ hᵢ σᶻᵢ + Σ Jᵢⱼ σᶻᵢσᶻⱼ − Σ Γᵢ σˣᵢ` on at most [`LANCZOS_LIMIT`] spins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub fields: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub transverse: Vec<f64>,
    /// Sublattice of each spin, used for `m_FIM`.
    pub sublattice: Option<Vec<u8>>,
}

impl SpinHamiltonian {
    pub fn n_spins(&self) -> usize {
        self.fields.len()
    }

    /// Chain-lattice Hamiltonian.
    pub fn from_lattice(lat: &Lattice, p: &ModelParams<f64>) -> Self {
        let n = lat.n_spins();
        let mut couplings = Vec::with_capacity(lat.fm_bonds().len() + lat.afm_bonds().len());
        couplings.extend(lat.fm_bonds().iter().map(|&(a, b)| (a, b, -p.j0)));
        couplings.extend(lat.afm_bonds().iter().map(|&(a, b)| (a, b, p.j1)));
        SpinHamiltonian {
            fields: vec![p.b; n],
            couplings,
            transverse: vec![p.gamma; n],
            sublattice: Some((0..n).map(|i| lat.sublattice(lat.chain_of(i)).index() as u8).collect()),
        }
    }

    /// Effective triangular-lattice Hamiltonian of chain pseudospins.
    pub fn effective(g: &TriangularGraph, p: &EffectiveModelParams<f64>) -> Self {
        let n = g.n_sites();
        SpinHamiltonian {
            fields: vec![p.b_eff; n],
            couplings: g.edges().iter().map(|&(a, b)| (a, b, p.j1_eff)).collect(),
            transverse: vec![p.gamma_eff; n],
            sublattice: g.sublattice(),
        }
    }

    /// Single ferromagnetic chain `−J₀ Σ σσ − Γ Σ σˣ` of `len` spins.
    pub fn fm_chain(len: usize, j0: f64, gamma: f64) -> Self {
        SpinHamiltonian {
            fields: vec![0.0; len],
            couplings: (0..len.saturating_sub(1)).map(|i| (i, i + 1, -j0)).collect(),
            transverse: vec![gamma; len],
            sublattice: None,
        }
    }

    /// Same operator with site `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.n_spins();
        let mut fields = vec![0.0; n];
        let mut transverse = vec![0.0; n];
        let mut sublattice = self.sublattice.as_ref().map(|_| vec![0u8; n]);
        for i in 0..n {
            fields[perm[i]] = self.fields[i];
            transverse[perm[i]] = self.transverse[i];
            if let (Some(out), Some(src)) = (sublattice.as_mut(), self.sublattice.as_ref()) {
                out[perm[i]] = src[i];
            }
        }
        SpinHamiltonian {
            fields,
            couplings: self.couplings.iter().map(|&(a, b, j)| (perm[a], perm[b], j)).collect(),
            transverse,
            sublattice,
        }
    }

    #[inline]
    fn sigma(state: usize, i: usize) -> f64 {
        if state >> i & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn diagonal(&self, state: usize) -> f64 {
        let mut e = 0.0;
        for (i, h) in self.fields.iter().enumerate() {
            e += h * Self::sigma(state, i);
        }
        for &(a, b, j) in &self.couplings {
            e += j * Self::sigma(state, a) * Self::sigma(state, b);
        }
        e
    }

    /// Raw mean `σᶻ` of a basis state.
    pub fn magnetization(&self, state: usize) -> f64 {
        let n = self.n_spins();
        (0..n).map(|i| Self::sigma(state, i)).sum::<f64>() / n as f64
    }

    /// Field-frame `ψ` and `m_FIM` of a basis state, when sublattices are known.
    pub fn order_parameter(&self, state: usize) -> Option<(Complex<f64>, f64)> {
        let sub = self.sublattice.as_ref()?;
        let mut sums = [0.0; 3];
        let mut counts = [0usize; 3];
        for (i, &k) in sub.iter().enumerate() {
            sums[k as usize] -= Self::sigma(state, i);
            counts[k as usize] += 1;
        }
        let m = [0, 1, 2].map(|k| {
            if counts[k] == 0 {
                0.0
            } else {
                sums[k] / counts[k] as f64
            }
        });
        let op = order_parameter_from_sublattices(m);
        Some((op.psi, op.m_fim))
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.n_spins();
        let dim = 1usize << n;
        let mut h = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            h[(s, s)] = self.diagonal(s);
            for (i, g) in self.transverse.iter().enumerate() {
                if *g != 0.0 {
                    h[(s ^ (1 << i), s)] -= g;
                }
            }
        }
        h
    }

    /// `y = H x` without storing `H`.
    fn apply(&self, diag: &[f64], x: &[f64], y: &mut [f64]) {
        for s in 0..x.len() {
            let mut acc = diag[s] * x[s];
            for (i, g) in self.transverse.iter().enumerate() {
                acc -= g * x[s ^ (1 << i)];
            }
            y[s] = acc;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub energy: f64,
    pub degeneracy: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundExpectations {
    /// Field-frame `M/M_sat`.
    pub magnetization: f64,
    pub m_fim: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<Level>,
    /// Columns are eigenvectors in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub ground_expectations: GroundExpectations,
    /// `‖V Λ Vᵀ − H‖_F`, an upper bound on the operator-norm residual.
    pub reconstruction_residual: f64,
    /// `‖H − Hᵀ‖_F` of the assembled matrix.
    pub hermiticity_residual: f64,
    pub norm: f64,
    ham: SpinHamiltonian,
}

/// Thermal averages of diagonal observables and the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalExpectations {
    pub energy: f64,
    /// Raw `⟨σᶻ⟩` per spin.
    pub magnetization: f64,
    pub m_fim: Option<f64>,
    pub psi: Option<[f64; 2]>,
}

impl DenseSpectrum {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.levels[0].degeneracy
    }

    pub fn hamiltonian(&self) -> &SpinHamiltonian {
        &self.ham
    }

    /// Boltzmann weights of the eigenstates, normalised; `β = ∞` spreads the
    /// weight evenly over the ground level.
    fn weights(&self, beta: f64) -> Vec<f64> {
        let e0 = self.eigenvalues[0];
        let w: Vec<f64> = if beta.is_infinite() {
            let g = self.ground_degeneracy();
            (0..self.eigenvalues.len())
                .map(|k| if k < g { 1.0 } else { 0.0 })
                .collect()
        } else {
            self.eigenvalues.iter().map(|e| (-beta * (e - e0)).exp()).collect()
        };
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    /// Thermal average of a diagonal observable `f(basis state)`.
    pub fn thermal_diagonal(&self, beta: f64, f: impl Fn(usize) -> f64) -> f64 {
        let w = self.weights(beta);
        let dim = self.eigenvalues.len();
        let fs: Vec<f64> = (0..dim).map(&f).collect();
        let mut total = 0.0;
        for (k, wk) in w.iter().enumerate() {
            if *wk < 1e-300 {
                continue;
            }
            let v = self.eigenvectors.column(k);
            let mut x = 0.0;
            for s in 0..dim {
                x += v[s] * v[s] * fs[s];
            }
            total += wk * x;
        }
        total
    }

    pub fn thermal(&self, beta: f64) -> ThermalExpectations {
        let w = self.weights(beta);
        let energy = w.iter().zip(&self.eigenvalues).map(|(a, b)| a * b).sum();
        let magnetization = self.thermal_diagonal(beta, |s| self.ham.magnetization(s));
        let (m_fim, psi) = if self.ham.sublattice.is_some() {
            let m = self.thermal_diagonal(beta, |s| self.ham.order_parameter(s).map_or(0.0, |o| o.1));
            let re = self.thermal_diagonal(beta, |s| self.ham.order_parameter(s).map_or(0.0, |o| o.0.re));
            let im = self.thermal_diagonal(beta, |s| self.ham.order_parameter(s).map_or(0.0, |o| o.0.im));
            (Some(m), Some([re, im]))
        } else {
            (None, None)
        };
        ThermalExpectations {
            energy,
            magnetization,
            m_fim,
            psi,
        }
    }
}

fn group_levels(eigenvalues: &[f64], tol: f64) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    for &e in eigenvalues {
        match levels.last_mut() {
            Some(l) if (e - l.energy).abs() <= tol => l.degeneracy += 1,
            _ => levels.push(Level {
                energy: e,
                degeneracy: 1,
            }),
        }
    }
    levels
}

/// Relative tolerance for grouping eigenvalues into degenerate levels.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Full spectrum of `ham`.
pub fn diagonalize(ham: &SpinHamiltonian) -> Result<DenseSpectrum> {
    let n = ham.n_spins();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: DENSE_LIMIT,
            mode: "dense",
        });
    }
    let h = ham.dense();
    let hermiticity_residual = (&h - h.transpose()).norm();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    let recon =
        &eigenvectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())) * eigenvectors.transpose();
    let reconstruction_residual = (recon - &h).norm();
    let norm = eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let levels = group_levels(&eigenvalues, DEGENERACY_RTOL * norm.max(1.0));
    let mut spec = DenseSpectrum {
        eigenvalues,
        levels,
        eigenvectors,
        ground_expectations: GroundExpectations {
            magnetization: 0.0,
            m_fim: None,
        },
        reconstruction_residual,
        hermiticity_residual,
        norm,
        ham: ham.clone(),
    };
    let t = spec.thermal(f64::INFINITY);
    spec.ground_expectations = GroundExpectations {
        magnetization: -t.magnetization,
        m_fim: t.m_fim,
    };
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Ground state by Lanczos iteration without storing the Krylov basis (the
/// vector is rebuilt in a second pass). Suited to stoquastic Hamiltonians,
/// whose ground state overlaps the uniform start vector.
pub fn lanczos_ground_state(ham: &SpinHamiltonian, max_iter: usize, tol: f64) -> Result<LanczosResult> {
    let n = ham.n_spins();
    if n > LANCZOS_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: LANCZOS_LIMIT,
            mode: "lanczos",
        });
    }
    let dim = 1usize << n;
    let diag: Vec<f64> = (0..dim).map(|s| ham.diagonal(s)).collect();
    let start = vec![1.0 / (dim as f64).sqrt(); dim];

    let run = |steps: usize, coeffs: Option<&DVector<f64>>| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        let mut v_prev = vec![0.0; dim];
        let mut v = start.clone();
        let mut w = vec![0.0; dim];
        let mut out = vec![0.0; if coeffs.is_some() { dim } else { 0 }];
        let mut beta_prev = 0.0;
        let mut last = f64::INFINITY;
        for k in 0..steps {
            if let Some(c) = coeffs {
                for s in 0..dim {
                    out[s] += c[k] * v[s];
                }
            }
            ham.apply(&diag, &v, &mut w);
            let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            for s in 0..dim {
                w[s] -= alpha * v[s] + beta_prev * v_prev[s];
            }
            let beta: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            alphas.push(alpha);
            if coeffs.is_none() && (k % 5 == 4 || beta < 1e-12) {
                let e = lowest_ritz(&alphas, &betas);
                if (e - last).abs() < tol || beta < 1e-12 {
                    break;
                }
                last = e;
            }
            if beta < 1e-12 || k + 1 == steps {
                break;
            }
            betas.push(beta);
            std::mem::swap(&mut v_prev, &mut v);
            for s in 0..dim {
                v[s] = w[s] / beta;
            }
            beta_prev = beta;
        }
        (alphas, betas, out)
    };

    let (alphas, betas, _) = run(max_iter.max(1).min(dim), None);
    let m = alphas.len();
    let t = tridiagonal(&alphas, &betas[..m - 1]);
    let eig = SymmetricEigen::new(t);
    let k0 = (0..m)
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap();
    let coeffs = eig.eigenvectors.column(k0).into_owned();
    let (_, _, mut vector) = run(m, Some(&coeffs));
    let norm: f64 = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    Ok(LanczosResult {
        energy: eig.eigenvalues[k0],
        vector,
        iterations: m,
    })
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let m = alphas.len();
    DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alphas[r]
        } else if r + 1 == c {
            betas[r]
        } else if c + 1 == r {
            betas[c]
        } else {
            0.0
        }
    })
}

fn lowest_ritz(alphas: &[f64], betas: &[f64]) -> f64 {
    let m = alphas.len();
    let eig = SymmetricEigen::new(tridiagonal(alphas, &betas[..m.saturating_sub(1).min(betas.len())]));
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Exact expectations of the discretised path integral with `l_tau`
/// slices, i.e. the `Lτ → ∞` bias-free target of a PIMC run at that `Lτ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterExpectations {
    /// Expectation of the thermodynamic energy estimator.
    pub energy: f64,
    /// Raw `⟨σᶻ⟩` per spin.
    pub magnetization: f64,
}

pub fn trotter_expectations(ham: &SpinHamiltonian, beta: f64, l_tau: usize) -> Result<TrotterExpectations> {
    let n = ham.n_spins();
    if n > 10 {
        return Err(Error::TooLarge {
            n,
            limit: 10,
            mode: "trotter transfer matrix",
        });
    }
    let gamma = ham.transverse.first().copied().unwrap_or(0.0);
    if gamma <= 0.0 || ham.transverse.iter().any(|&g| g != gamma) {
        return Err(Error::Analysis(
            "transfer matrix needs a uniform positive transverse field".into(),
        ));
    }
    let dim = 1usize << n;
    let diag: Vec<f64> = (0..dim).map(|s| ham.diagonal(s)).collect();
    let emin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let mag: Vec<f64> = (0..dim).map(|s| ham.magnetization(s)).collect();

    // ln Tr T^L and ⟨σᶻ⟩ at inverse temperature b.
    let eval = |b: f64| -> (f64, f64) {
        let eps = b / l_tau as f64;
        let (c, s) = ((eps * gamma).cosh(), (eps * gamma).sinh());
        let t = DMatrix::from_fn(dim, dim, |r, col| {
            let flips = (r ^ col).count_ones() as i32;
            (-eps * (diag[r] - emin)).exp() * c.powi(n as i32 - flips) * s.powi(flips)
        });
        let (p, log_scale) = matrix_power_scaled(&t, l_tau);
        let tr = p.trace();
        let m: f64 = (0..dim).map(|k| mag[k] * p[(k, k)]).sum::<f64>() / tr;
        (-b * emin + tr.ln() + log_scale, m)
    };
    let h = 1e-4 * beta;
    let (lz_p, _) = eval(beta + h);
    let (lz_m, _) = eval(beta - h);
    let (_, m) = eval(beta);
    Ok(TrotterExpectations {
        energy: -(lz_p - lz_m) / (2.0 * h),
        magnetization: m,
    })
}

/// `A^k` as `(P, s)` with `A^k = e^s · P`, rescaling to avoid overflow.
fn matrix_power_scaled(a: &DMatrix<f64>, mut k: usize) -> (DMatrix<f64>, f64) {
    let dim = a.nrows();
    let mut result = DMatrix::identity(dim, dim);
    let mut result_log = 0.0;
    let mut base = a.clone();
    let mut base_log = 0.0;
    let rescale = |m: &mut DMatrix<f64>, log: &mut f64| {
        let mx = m.amax();
        if mx > 0.0 {
            *m /= mx;
            *log += mx.ln();
        }
    };
    rescale(&mut base, &mut base_log);
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
            result_log += base_log;
            rescale(&mut result, &mut result_log);
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
            base_log *= 2.0;
            rescale(&mut base, &mut base_log);
        }
    }
    (result, result_log)
}

/// Classical ground manifold of the effective model at saturation: states
/// whose anti-aligned pseudospins form an independent set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundManifoldReport {
    pub n_sites: usize,
    /// Number of independent sets of each size `k`.
    pub counts_by_size: Vec<u64>,
    /// `(M/M_sat, count)` with `M/M_sat = 1 − 2k/n`, sorted by magnetization.
    pub magnetization_histogram: Vec<(f64, u64)>,
    /// Magnetization with the largest count (largest `M` among ties).
    pub m_m: f64,
    pub total_states: u64,
}

/// Count independent sets on the periodic `l1 × l2` triangular lattice.
/// With `at_saturation = false` only the maximum sets are kept (the plateau
/// ground states just below saturation).
pub fn enumerate_ground_manifold(l1: usize, l2: usize, at_saturation: bool) -> Result<GroundManifoldReport> {
    enumerate_independent_sets(&TriangularGraph::periodic(l1, l2, 0)?, at_saturation)
}

pub fn enumerate_independent_sets(g: &TriangularGraph, at_saturation: bool) -> Result<GroundManifoldReport> {
    let n = g.n_sites();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: ENUMERATION_LIMIT,
            mode: "exhaustive enumeration",
        });
    }
    let adj = g.adjacency();
    // neighbours with smaller index, as bit masks
    let lower: Vec<u64> = adj
        .iter()
        .enumerate()
        .map(|(i, nb)| nb.iter().filter(|&&j| j < i).fold(0u64, |m, &j| m | 1 << j))
        .collect();
    let mut counts = vec![0u64; n + 1];
    fn walk(i: usize, n: usize, chosen: u64, k: usize, lower: &[u64], counts: &mut [u64]) {
        if i == n {
            counts[k] += 1;
            return;
        }
        walk(i + 1, n, chosen, k, lower, counts);
        if chosen & lower[i] == 0 {
            walk(i + 1, n, chosen | 1 << i, k + 1, lower, counts);
        }
    }
    walk(0, n, 0, 0, &lower, &mut counts);
    while counts.len() > 1 && *counts.last().unwrap() == 0 {
        counts.pop();
    }
    if !at_saturation {
        let kmax = counts.len() - 1;
        for (k, c) in counts.iter_mut().enumerate() {
            if k != kmax {
                *c = 0;
            }
        }
    }
    let mut magnetization_histogram: Vec<(f64, u64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (1.0 - 2.0 * k as f64 / n as f64, c))
        .collect();
    magnetization_histogram.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = magnetization_histogram.iter().fold(
        (f64::NEG_INFINITY, 0u64),
        |acc, &(m, c)| if c >= acc.1 { (m, c) } else { acc },
    );
    Ok(GroundManifoldReport {
        n_sites: n,
        total_states: counts.iter().sum(),
        counts_by_size: counts,
        magnetization_histogram,
        m_m: best.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub gamma: f64,
    /// Half the gap between the two lowest chain states, which the effective
    /// two-level model predicts to be `Γ̃`.
    pub splitting: f64,
    pub prediction: f64,
    pub relative_deviation: Option<f64>,
}

/// Compare the tunnelling splitting of an isolated four-spin chain with
/// `Γ̃ = Γ⁴/J₀³`.
pub fn perturbative_gap_check(j0: f64, gammas: &[f64]) -> Result<Vec<GapRow>> {
    gammas
        .iter()
        .map(|&gamma| {
            let spec = diagonalize(&SpinHamiltonian::fm_chain(4, j0, gamma))?;
            let splitting = (spec.eigenvalues[1] - spec.eigenvalues[0]) / 2.0;
            let prediction = gamma.powi(4) / j0.powi(3);
            Ok(GapRow {
                gamma,
                splitting,
                prediction,
                relative_deviation: (prediction > 0.0).then(|| (splitting - prediction).abs() / prediction),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampReport {
    /// `(B̃, M/M_sat)` along the ramp.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope `(1/M_sat) dM/dB̃`.
    pub slope: f64,
    /// `slope · 3Γ̃`, predicted to be of order one.
    pub slope_times_3gamma: f64,
}

/// Field-frame magnetization of the effective toy at `b_eff` (thermal, or
/// ground-manifold average for `β = ∞`).
pub fn effective_magnetization(g: &TriangularGraph, j1_eff: f64, gamma_eff: f64, b_eff: f64, beta: f64) -> Result<f64> {
    let p = EffectiveModelParams {
        b_eff,
        j1_eff,
        gamma_eff,
        b_sat_eff: 6.0 * j1_eff,
        delta_b_eff: gamma_eff,
        outside_validity: false,
    };
    let spec = diagonalize(&SpinHamiltonian::effective(g, &p))?;
    Ok(-spec.thermal(beta).magnetization)
}

/// Ground-level degeneracy of the effective toy at `B̃ = B̃_sat = 6J̃`.
pub fn saturation_degeneracy(g: &TriangularGraph, j1_eff: f64, gamma_eff: f64) -> Result<usize> {
    let p = EffectiveModelParams {
        b_eff: 6.0 * j1_eff,
        j1_eff,
        gamma_eff,
        b_sat_eff: 6.0 * j1_eff,
        delta_b_eff: gamma_eff,
        outside_validity: false,
    };
    Ok(diagonalize(&SpinHamiltonian::effective(g, &p))?.ground_degeneracy())
}

/// Magnetization across `B̃ ∈ [B̃_sat − 2Γ̃, B̃_sat]` and its fitted slope.
/// For `Γ̃ = 0` the two points `B̃_sat ∓ J̃/10` bracket the classical step.
pub fn ramp_slope_check(
    g: &TriangularGraph,
    j1_eff: f64,
    gamma_eff: f64,
    beta: f64,
    n_points: usize,
) -> Result<RampReport> {
    let b_sat = 6.0 * j1_eff;
    let bs: Vec<f64> = if gamma_eff == 0.0 {
        vec![b_sat - 0.1 * j1_eff, b_sat + 0.1 * j1_eff]
    } else {
        let n = n_points.max(2);
        (0..n)
            .map(|k| b_sat - 2.0 * gamma_eff + 2.0 * gamma_eff * k as f64 / (n - 1) as f64)
            .collect()
    };
    let points = bs
        .iter()
        .map(|&b| Ok((b, effective_magnetization(g, j1_eff, gamma_eff, b, beta)?)))
        .collect::<Result<Vec<_>>>()?;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    Ok(RampReport {
        points,
        slope,
        slope_times_3gamma: slope * 3.0 * gamma_eff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_spin_spectrum() {
        let h = SpinHamiltonian {
            fields: vec![0.6],
            couplings: vec![],
            transverse: vec![0.8],
            sublattice: None,
        };
        let s = diagonalize(&h).unwrap();
        assert_relative_eq!(s.eigenvalues[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-12);
        assert!(s.hermiticity_residual == 0.0);
        assert!(s.reconstruction_residual < 1e-10);
    }

    #[test]
    fn small_tori() {
        let g = TriangularGraph::periodic(1, 3, 2).unwrap();
        assert_eq!(g.edges().len(), 9);
        assert_eq!(g.adjacency().iter().map(Vec::len).collect::<Vec<_>>(), vec![2, 2, 2]);
        assert!(g.sublattice().is_some());
        let g = TriangularGraph::periodic(2, 3, 0).unwrap();
        let mut degree = vec![0; 6];
        for &(a, b) in g.edges() {
            degree[a] += 1;
            degree[b] += 1;
        }
        assert!(degree.iter().all(|&d| d == 6));
        assert!(TriangularGraph::periodic(1, 1, 0).is_err());
        assert!(TriangularGraph::periodic(3, 3, 0).unwrap().sublattice().is_some());
        assert!(TriangularGraph::periodic(4, 4, 0).unwrap().sublattice().is_none());
    }

    #[test]
    fn triangle_manifold_listing() {
        let tri = enumerate_independent_sets(&TriangularGraph::periodic(1, 3, 2).unwrap(), true).unwrap();
        let h = &tri.magnetization_histogram;
        assert_eq!((h.len(), h[0].1, h[1].1), (2, 3, 1));
        assert_relative_eq!(h[0].0, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(tri.m_m, 1.0 / 3.0, epsilon = 1e-12);
        let r = enumerate_ground_manifold(3, 3, true).unwrap();
        assert_eq!(r.counts_by_size[0], 1);
        assert_eq!(r.counts_by_size[1], 9);
        let max_only = enumerate_ground_manifold(3, 3, false).unwrap();
        assert_eq!(max_only.total_states, 3);
        assert_relative_eq!(max_only.m_m, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        let g = TriangularGraph::periodic(3, 3, 0).unwrap();
        let p = EffectiveModelParams {
            b_eff: 5.5,
            j1_eff: 1.0,
            gamma_eff: 0.3,
            b_sat_eff: 6.0,
            delta_b_eff: 0.3,
            outside_validity: false,
        };
        let h = SpinHamiltonian::effective(&g, &p);
        let d = diagonalize(&h).unwrap();
        let l = lanczos_ground_state(&h, 300, 1e-12).unwrap();
        assert_relative_eq!(l.energy, d.ground_energy(), epsilon = 1e-8);
        let overlap: f64 = (0..l.vector.len()).map(|s| l.vector[s] * d.eigenvectors[(s, 0)]).sum();
        assert_relative_eq!(overlap.abs(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn trotter_limit_approaches_exact() {
        let h = SpinHamiltonian {
            fields: vec![0.6],
            couplings: vec![],
            transverse: vec![0.8],
            sublattice: None,
        };
        let exact = diagonalize(&h).unwrap().thermal(4.0);
        let t64 = trotter_expectations(&h, 4.0, 64).unwrap();
        let t8 = trotter_expectations(&h, 4.0, 8).unwrap();
        assert!((t64.energy - exact.energy).abs() < (t8.energy - exact.energy).abs());
        assert!((t64.energy - exact.energy).abs() < 1e-3);
        assert!((t64.magnetization - exact.magnetization).abs() < 1e-3);
    }

    #[test]
    fn gap_at_zero_gamma() {
        let rows = perturbative_gap_check(1.8, &[0.0]).unwrap();
        assert_eq!(rows[0].splitting, 0.0);
        assert!(rows[0].relative_deviation.is_none());
    }
}
