//! Discrete-time path-integral Monte Carlo for the transverse-field model.
//!
//! The partition function is sampled with the Suzuki-Trotter action
//!
//! ```text
//! S = ε Σ_k E(s_k) − K Σ_k Σ_i s_{k,i} s_{k+1,i},   ε = β/Lτ,
//! K = −½ ln tanh(εΓ)
//! ```
//!
//! over `Lτ` periodic imaginary-time slices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classical_mc::{chain_flip_delta, make_record, Readout, RunOptions, SpinConfiguration, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{BondKind, Lattice};
use crate::model::{classical_energy, local_field, ModelParams, Schedule};
use crate::records::{Snapshot, Source};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;

pub const DEFAULT_L_TAU: usize = 32;

/// `K = −½ ln tanh(βΓ/Lτ)`.
pub fn k_tau<T: Real>(beta: T, gamma: T, l_tau: usize) -> Result<T> {
    if gamma <= T::zero() {
        return Err(Error::ZeroTransverseField);
    }
    let x = beta * gamma / T::lit(l_tau as f64);
    Ok(-T::lit(0.5) * x.tanh().ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateFamily {
    SingleSpin,
    /// Whole-chain flips within one slice only. Chains never break, so the
    /// dynamics is that of the triangular pseudospin model.
    ChainCollective,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PimcParams {
    pub l_tau: usize,
    pub update_family: UpdateFamily,
    /// Record every `measure_cadence` sweeps (final record only when `None`).
    #[serde(default)]
    pub measure_cadence: Option<u64>,
}

impl Default for PimcParams {
    fn default() -> Self {
        PimcParams {
            l_tau: DEFAULT_L_TAU,
            update_family: UpdateFamily::SingleSpin,
            measure_cadence: None,
        }
    }
}

impl PimcParams {
    pub fn validate(&self) -> Result<()> {
        if self.l_tau < 2 {
            return Err(Error::param("l_tau", "needs at least 2 slices"));
        }
        Ok(())
    }
}

/// Spins on `l_tau` imaginary-time slices, stored slice-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldlineConfiguration<T> {
    spins: Vec<i8>,
    n_spins: usize,
    l_tau: usize,
    pub beta: T,
    pub k_tau: T,
    lattice_tag: u64,
}

impl<T: Real> WorldlineConfiguration<T> {
    /// Every slice a copy of `s`.
    pub fn inflate(s: &SpinConfiguration, l_tau: usize) -> Self {
        let n = s.len();
        let mut spins = Vec::with_capacity(n * l_tau);
        for _ in 0..l_tau {
            spins.extend_from_slice(s.values());
        }
        WorldlineConfiguration {
            spins,
            n_spins: n,
            l_tau,
            beta: T::zero(),
            k_tau: T::zero(),
            lattice_tag: s.lattice_tag(),
        }
    }

    pub fn l_tau(&self) -> usize {
        self.l_tau
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn slice_values(&self, k: usize) -> &[i8] {
        &self.spins[k * self.n_spins..(k + 1) * self.n_spins]
    }

    pub fn slice(&self, k: usize) -> SpinConfiguration {
        SpinConfiguration::from_raw(self.slice_values(k).to_vec(), self.lattice_tag)
    }

    pub fn values(&self) -> &[i8] {
        &self.spins
    }

    /// Recompute `β` and `K` for the given parameters.
    pub fn set_params(&mut self, p: &ModelParams<T>) -> Result<()> {
        self.beta = p.beta();
        self.k_tau = k_tau(self.beta, p.gamma, self.l_tau)?;
        Ok(())
    }

    /// Mean raw σᶻ over all slices and spins.
    pub fn magnetization(&self) -> f64 {
        self.spins.iter().map(|&v| v as i64).sum::<i64>() as f64 / self.spins.len().max(1) as f64
    }

    /// Σ_k Σ_i s_{k,i} s_{k+1,i}.
    pub fn time_bond_sum(&self) -> i64 {
        let n = self.n_spins;
        let mut sum = 0i64;
        for k in 0..self.l_tau {
            let a = &self.spins[k * n..(k + 1) * n];
            let kn = (k + 1) % self.l_tau;
            let b = &self.spins[kn * n..(kn + 1) * n];
            sum += a.iter().zip(b).map(|(&x, &y)| (x * y) as i64).sum::<i64>();
        }
        sum
    }

    /// σᶻ projection by majority over slices; ties broken by a fair coin.
    pub fn majority_projection(&self, rng: &mut ChaCha8Rng) -> SpinConfiguration {
        let n = self.n_spins;
        let values = (0..n)
            .map(|i| {
                let s: i64 = (0..self.l_tau).map(|k| self.spins[k * n + i] as i64).sum();
                match s.signum() {
                    1 => 1,
                    -1 => -1,
                    _ => {
                        if rng.gen::<bool>() {
                            1
                        } else {
                            -1
                        }
                    }
                }
            })
            .collect();
        SpinConfiguration::from_raw(values, self.lattice_tag)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PimcState<T> {
    pub worldlines: WorldlineConfiguration<T>,
    pub rng_seed: u64,
    pub sweep_count: u64,
    pub params: ModelParams<T>,
}

impl<T: Real> PimcState<T> {
    pub fn new(initial: &SpinConfiguration, l_tau: usize, rng_seed: u64, params: ModelParams<T>) -> Result<Self> {
        let mut worldlines = WorldlineConfiguration::inflate(initial, l_tau);
        worldlines.set_params(&params)?;
        Ok(PimcState {
            worldlines,
            rng_seed,
            sweep_count: 0,
            params,
        })
    }

    fn prepare(&mut self, lat: &Lattice) -> Result<ChaCha8Rng> {
        if self.worldlines.n_spins != lat.n_spins() {
            return Err(Error::SizeMismatch {
                expected: lat.n_spins(),
                got: self.worldlines.n_spins,
            });
        }
        if self.params.temperature <= T::zero() {
            return Err(Error::NonPositiveTemperature(self.params.temperature.as_f64()));
        }
        let p = self.params;
        self.worldlines.set_params(&p)?;
        Ok(stream(self.rng_seed, Purpose::Sweep, self.sweep_count))
    }
}

#[inline]
fn accept<T: Real>(ds: T, rng: &mut ChaCha8Rng) -> bool {
    ds <= T::zero() || T::unit(rng) < (-ds).exp()
}

#[inline]
fn sign<T: Real>(x: i8) -> T {
    if x > 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `ΔS` and `exp(−ΔS)` of a single-spin flip for every combination of
/// `σ`, `σ·Σ_afm σⱼ`, `σ·Σ_fm σⱼ` and `σ·(σ_prev + σ_next)`.
struct FlipTable<T> {
    max_afm: i32,
    max_fm: i32,
    ds: Vec<T>,
    weight: Vec<T>,
}

impl<T: Real> FlipTable<T> {
    fn new(lat: &Lattice, eps: T, two_k: T, p: &ModelParams<T>) -> Self {
        let (mut max_afm, mut max_fm) = (0i32, 0i32);
        for i in 0..lat.n_spins() {
            let nb = lat.neighbors(i);
            let afm = nb.iter().filter(|x| x.kind == BondKind::Antiferro).count() as i32;
            max_afm = max_afm.max(afm);
            max_fm = max_fm.max(nb.len() as i32 - afm);
        }
        let mut ds = Vec::new();
        for sigma in [-1.0, 1.0] {
            for a in -max_afm..=max_afm {
                for f in -max_fm..=max_fm {
                    for t in [-2.0, 0.0, 2.0] {
                        let sh = T::lit(sigma) * p.b + p.j1 * T::lit(a as f64) - p.j0 * T::lit(f as f64);
                        ds.push(-(sh + sh) * eps + two_k * T::lit(t));
                    }
                }
            }
        }
        let weight = ds.iter().map(|&d: &T| (-d).exp()).collect();
        FlipTable {
            max_afm,
            max_fm,
            ds,
            weight,
        }
    }

    #[inline]
    fn index(&self, s: i8, a: i32, f: i32, t: i32) -> usize {
        let sigma = usize::from(s > 0);
        let na = (2 * self.max_afm + 1) as usize;
        let nf = (2 * self.max_fm + 1) as usize;
        (((sigma * na + (a + self.max_afm) as usize) * nf + (f + self.max_fm) as usize) * 3) + (t / 2 + 1) as usize
    }
}

fn single_pass<T: Real>(lat: &Lattice, wl: &mut WorldlineConfiguration<T>, p: &ModelParams<T>, rng: &mut ChaCha8Rng) {
    let n = wl.n_spins;
    let l = wl.l_tau;
    let eps = wl.beta / T::lit(l as f64);
    let table = FlipTable::new(lat, eps, wl.k_tau + wl.k_tau, p);
    for k in 0..l {
        let prev = ((k + l - 1) % l) * n;
        let next = ((k + 1) % l) * n;
        let base = k * n;
        for i in 0..n {
            let slice = &wl.spins[base..base + n];
            let s = slice[i];
            let (mut a, mut f) = (0i32, 0i32);
            for nb in lat.neighbors(i) {
                let x = (slice[nb.spin] * s) as i32;
                match nb.kind {
                    BondKind::Antiferro => a += x,
                    BondKind::Ferro => f += x,
                }
            }
            let t = (s * (wl.spins[prev + i] + wl.spins[next + i])) as i32;
            let idx = table.index(s, a, f, t);
            if table.ds[idx] <= T::zero() || T::unit(rng) < table.weight[idx] {
                wl.spins[base + i] = -s;
            }
        }
    }
}

fn chain_pass<T: Real>(lat: &Lattice, wl: &mut WorldlineConfiguration<T>, p: &ModelParams<T>, rng: &mut ChaCha8Rng) {
    let n = wl.n_spins;
    let l = wl.l_tau;
    let eps = wl.beta / T::lit(l as f64);
    let two_k = wl.k_tau + wl.k_tau;
    for k in 0..l {
        let prev = ((k + l - 1) % l) * n;
        let next = ((k + 1) % l) * n;
        let base = k * n;
        for c in 0..lat.n_chains() {
            let spins = &lat.chains()[c].spins;
            let de = chain_flip_delta(lat, &wl.spins[base..base + n], p, c);
            let tau: i64 = spins
                .iter()
                .map(|&i| (wl.spins[base + i] * (wl.spins[prev + i] + wl.spins[next + i])) as i64)
                .sum();
            let ds = eps * de + two_k * T::lit(tau as f64);
            if accept(ds, rng) {
                for &i in spins {
                    wl.spins[base + i] = -wl.spins[base + i];
                }
            }
        }
    }
}

/// Flip whole chains and single spins across all slices at once. Time bonds
/// are invariant under these moves; they only cross classical barriers faster.
fn worldline_pass<T: Real>(
    lat: &Lattice,
    wl: &mut WorldlineConfiguration<T>,
    p: &ModelParams<T>,
    rng: &mut ChaCha8Rng,
) {
    let n = wl.n_spins;
    let l = wl.l_tau;
    let eps = wl.beta / T::lit(l as f64);
    for c in 0..lat.n_chains() {
        let mut de = T::zero();
        for k in 0..l {
            de = de + chain_flip_delta(lat, &wl.spins[k * n..(k + 1) * n], p, c);
        }
        if accept(eps * de, rng) {
            for k in 0..l {
                for &i in &lat.chains()[c].spins {
                    wl.spins[k * n + i] = -wl.spins[k * n + i];
                }
            }
        }
    }
    for i in 0..n {
        let mut de = T::zero();
        for k in 0..l {
            let sigma = sign::<T>(wl.spins[k * n + i]);
            de = de - (sigma + sigma) * local_field(lat, &wl.spins[k * n..(k + 1) * n], p, i);
        }
        if accept(eps * de, rng) {
            for k in 0..l {
                wl.spins[k * n + i] = -wl.spins[k * n + i];
            }
        }
    }
}

/// One Metropolis proposal per (slice, spin).
pub fn pimc_sweep_single<T: Real>(state: &mut PimcState<T>, lat: &Lattice) -> Result<()> {
    let mut rng = state.prepare(lat)?;
    let p = state.params;
    single_pass(lat, &mut state.worldlines, &p, &mut rng);
    state.sweep_count += 1;
    Ok(())
}

/// One whole-chain flip proposal per (slice, chain).
pub fn pimc_sweep_chain<T: Real>(state: &mut PimcState<T>, lat: &Lattice) -> Result<()> {
    let mut rng = state.prepare(lat)?;
    let p = state.params;
    chain_pass(lat, &mut state.worldlines, &p, &mut rng);
    state.sweep_count += 1;
    Ok(())
}

/// One sweep of the given family, optionally followed by worldline moves.
pub fn pimc_sweep<T: Real>(
    state: &mut PimcState<T>,
    lat: &Lattice,
    family: UpdateFamily,
    worldline_moves: bool,
) -> Result<()> {
    let mut rng = state.prepare(lat)?;
    let p = state.params;
    let wl = &mut state.worldlines;
    match family {
        UpdateFamily::SingleSpin => single_pass(lat, wl, &p, &mut rng),
        UpdateFamily::ChainCollective => chain_pass(lat, wl, &p, &mut rng),
    }
    if worldline_moves {
        worldline_pass(lat, wl, &p, &mut rng);
    }
    state.sweep_count += 1;
    Ok(())
}

/// Thermodynamic energy estimator of the quantum Hamiltonian for one
/// worldline configuration; its average is `⟨H⟩`.
pub fn energy_estimator<T: Real>(lat: &Lattice, wl: &WorldlineConfiguration<T>, p: &ModelParams<T>) -> Result<T> {
    let l = wl.l_tau;
    let mut e_cl = T::zero();
    for k in 0..l {
        e_cl = e_cl + classical_energy(lat, &wl.slice(k), p)?;
    }
    let lt = T::lit(l as f64);
    let x = T::lit(2.0) * p.beta() * p.gamma / lt;
    let n = T::lit(wl.n_spins as f64);
    let coth = x.cosh() / x.sinh();
    Ok(e_cl / lt - n * p.gamma * coth + p.gamma / (lt * x.sinh()) * T::lit(wl.time_bond_sum() as f64))
}

/// Drive a worldline chain through `sch`. The final record is the
/// majority-vote projection at the end of the schedule.
pub fn run_schedule_pimc<T: Real>(
    lat: &Lattice,
    sch: &Schedule,
    pimc: &PimcParams,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    sch.validate()?;
    pimc.validate()?;
    if opts.beta_j1 <= 0.0 {
        return Err(Error::NonPositiveTemperature(1.0 / opts.beta_j1));
    }
    let temperature = 1.0 / opts.beta_j1;
    if sch.min_gamma() <= 0.0 {
        return Err(Error::ZeroTransverseField);
    }
    let start = sch.start.params::<T>(opts.i0, opts.i1, temperature);
    let init = opts.initial_config(lat, seed)?;
    let mut state = PimcState::new(&init, pimc.l_tau, seed, start)?;
    let total = sch.total_duration();
    let cadence = pimc.measure_cadence.or(opts.cadence);
    let mut records = Vec::new();
    let mut meta_opts = opts.clone();
    meta_opts.meta.l_tau = Some(pimc.l_tau as u32);
    for n in 0..total {
        let c = sch.at_sweep(n);
        state.params = c.params(opts.i0, opts.i1, temperature);
        pimc_sweep(&mut state, lat, pimc.update_family, opts.collective_moves)?;
        if cadence.is_some_and(|k| k > 0 && (n + 1) % k == 0 && n + 1 < total) {
            let mut rng = stream(seed, Purpose::Readout, n + 1);
            let proj = state.worldlines.majority_projection(&mut rng);
            let mut rec = make_record(
                lat,
                &proj,
                &state.params,
                &meta_opts,
                Source::Pimc,
                seed,
                n + 1,
                c.h,
                c.gamma,
            )?;
            rec.meta.k_tau = Some(state.worldlines.k_tau.as_f64());
            records.push(rec);
        }
    }
    let fin = sch.final_controls();
    let params = fin.params::<T>(opts.i0, opts.i1, temperature);
    state.worldlines.set_params(&params)?;
    let config = match opts.readout {
        Readout::None => state.worldlines.slice(0),
        _ => {
            let mut rng = stream(seed, Purpose::Readout, total);
            state.worldlines.majority_projection(&mut rng)
        }
    };
    let mut rec = make_record(
        lat,
        &config,
        &params,
        &meta_opts,
        Source::Pimc,
        seed,
        total,
        fin.h,
        fin.gamma,
    )?;
    rec.meta.k_tau = Some(state.worldlines.k_tau.as_f64());
    rec.meta.readout = Some(
        match opts.readout {
            Readout::None => "slice0",
            _ => Readout::MajorityVote.label(),
        }
        .to_string(),
    );
    if opts.snapshot {
        rec.snapshot = Some(Snapshot {
            lattice: lat.spec().clone(),
            spins: config.values().to_vec(),
        });
    }
    records.push(rec);
    Ok(Trajectory {
        records,
        final_config: config,
    })
}

/// Settings of the iterated relax-quench-readout chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QemcOptions {
    pub n_steps: usize,
    pub dwell_sweeps: u64,
    /// Length of each of the Γ ramps up and down.
    pub ramp_sweeps: u64,
    /// Transverse field at the bottom of the ramps.
    pub gamma_low: f64,
    pub pimc: PimcParams,
}

impl Default for QemcOptions {
    fn default() -> Self {
        QemcOptions {
            n_steps: 100,
            dwell_sweeps: 100,
            ramp_sweeps: 20,
            gamma_low: 0.05,
            pimc: PimcParams::default(),
        }
    }
}

/// Number of leading QEMC samples treated as burn-in.
pub fn qemc_burn_in(n_steps: usize) -> usize {
    n_steps / 2
}

/// Iterated reverse anneal: inflate the classical state, ramp Γ from
/// `gamma_low` up to `p.gamma`, dwell, ramp back down and project. Returns one
/// classical sample per step.
pub fn qemc_emulation<T: Real>(
    lat: &Lattice,
    p: &ModelParams<T>,
    q: &QemcOptions,
    initial: &SpinConfiguration,
    seed: u64,
) -> Result<Vec<SpinConfiguration>> {
    if q.n_steps == 0 {
        return Err(Error::param("n_steps", "must be at least 1"));
    }
    q.pimc.validate()?;
    let low = T::lit(q.gamma_low);
    let high = p.gamma;
    let mut current = initial.clone();
    let mut samples = Vec::with_capacity(q.n_steps);
    let mut sweep = 0u64;
    let per_step = 2 * q.ramp_sweeps + q.dwell_sweeps;
    for _ in 0..q.n_steps {
        let mut params = *p;
        params.gamma = if per_step == 0 { high } else { low };
        let mut state = PimcState::new(&current, q.pimc.l_tau, seed, params)?;
        state.sweep_count = sweep;
        for t in 0..per_step {
            let g = if t < q.ramp_sweeps {
                low + (high - low) * T::lit((t + 1) as f64 / q.ramp_sweeps as f64)
            } else if t < q.ramp_sweeps + q.dwell_sweeps {
                high
            } else {
                let u = t - q.ramp_sweeps - q.dwell_sweeps + 1;
                high + (low - high) * T::lit(u as f64 / q.ramp_sweeps as f64)
            };
            state.params.gamma = g;
            pimc_sweep(&mut state, lat, q.pimc.update_family, false)?;
        }
        sweep = state.sweep_count;
        let mut rng = stream(seed, Purpose::Readout, sweep);
        current = state.worldlines.majority_projection(&mut rng);
        samples.push(current.clone());
        sweep += 1;
    }
    Ok(samples)
}
