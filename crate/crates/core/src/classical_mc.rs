//! Metropolis sampling of the Γ = 0 Ising limit.
//!
//! A sweep visits spins in id order and uses one random stream keyed by
//! `(seed, sweep_count)`, so a state is resumable from `(config, seed,
//! sweep_count, params)` alone.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::model::{local_field, ModelParams, Schedule, FM_RATIO};
use crate::observables::measure;
use crate::records::{ObservableRecord, ProtocolKind, RecordMeta, Snapshot, Source};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    values: Vec<i8>,
    lattice_tag: u64,
}

impl SpinConfiguration {
    pub fn new(lat: &Lattice, values: Vec<i8>) -> Result<Self> {
        if values.len() != lat.n_spins() {
            return Err(Error::SizeMismatch {
                expected: lat.n_spins(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::param("values", format!("spin {i} is not ±1")));
        }
        Ok(SpinConfiguration {
            values,
            lattice_tag: lat.tag(),
        })
    }

    pub(crate) fn from_raw(values: Vec<i8>, lattice_tag: u64) -> Self {
        SpinConfiguration { values, lattice_tag }
    }

    pub fn uniform(lat: &Lattice, v: i8) -> Self {
        assert!(v == 1 || v == -1);
        SpinConfiguration {
            values: vec![v; lat.n_spins()],
            lattice_tag: lat.tag(),
        }
    }

    pub fn random(lat: &Lattice, seed: u64) -> Self {
        let mut rng = stream(seed, Purpose::Init, 0);
        SpinConfiguration {
            values: (0..lat.n_spins())
                .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                .collect(),
            lattice_tag: lat.tag(),
        }
    }

    /// Configuration from chain pseudospins (all spins of a chain equal).
    pub fn from_pseudospins(lat: &Lattice, pseudo: &[i8]) -> Result<Self> {
        if pseudo.len() != lat.n_chains() {
            return Err(Error::SizeMismatch {
                expected: lat.n_chains(),
                got: pseudo.len(),
            });
        }
        let values = (0..lat.n_spins()).map(|i| pseudo[lat.chain_of(i)]).collect();
        SpinConfiguration::new(lat, values)
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// Mutable access; callers must keep entries at ±1.
    pub fn values_mut(&mut self) -> &mut [i8] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lattice_tag(&self) -> u64 {
        self.lattice_tag
    }

    pub fn flip(&mut self, spin: usize) {
        self.values[spin] = -self.values[spin];
    }

    /// Copy expressed along the field (`+1` = aligned with `B > 0`).
    pub fn field_frame(&self) -> Self {
        SpinConfiguration {
            values: self.values.iter().map(|&v| -v).collect(),
            lattice_tag: self.lattice_tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McChainState<T> {
    pub config: SpinConfiguration,
    pub rng_seed: u64,
    pub sweep_count: u64,
    pub params: ModelParams<T>,
}

impl<T: Real> McChainState<T> {
    pub fn new(config: SpinConfiguration, rng_seed: u64, params: ModelParams<T>) -> Self {
        McChainState {
            config,
            rng_seed,
            sweep_count: 0,
            params,
        }
    }

    fn check(&self, lat: &Lattice) -> Result<()> {
        if self.config.len() != lat.n_spins() {
            return Err(Error::SizeMismatch {
                expected: lat.n_spins(),
                got: self.config.len(),
            });
        }
        if self.params.temperature <= T::zero() {
            return Err(Error::NonPositiveTemperature(self.params.temperature.as_f64()));
        }
        Ok(())
    }
}

#[inline]
fn accept<T: Real>(delta: T, beta: T, rng: &mut ChaCha8Rng) -> bool {
    delta <= T::zero() || T::unit(rng) < (-beta * delta).exp()
}

fn single_pass<T: Real>(lat: &Lattice, v: &mut [i8], p: &ModelParams<T>, rng: &mut ChaCha8Rng) -> T {
    let beta = p.beta();
    let mut total = T::zero();
    for i in 0..v.len() {
        let sigma = if v[i] > 0 { T::one() } else { -T::one() };
        let delta = -(sigma + sigma) * local_field(lat, v, p, i);
        if accept(delta, beta, rng) {
            v[i] = -v[i];
            total = total + delta;
        }
    }
    total
}

/// Energy change from flipping every spin of `chain`. Intra-chain bonds are
/// invariant, so only the field and foreign AFM bonds contribute.
pub fn chain_flip_delta<T: Real>(lat: &Lattice, v: &[i8], p: &ModelParams<T>, chain: usize) -> T {
    let mut s = 0i64;
    for &i in &lat.chains()[chain].spins {
        s += v[i] as i64;
    }
    let mut afm = 0i64;
    for &(own, foreign) in lat.chain_afm_bonds(chain) {
        afm += (v[own] * v[foreign]) as i64;
    }
    -T::lit(2.0) * (p.b * T::lit(s as f64) + p.j1 * T::lit(afm as f64))
}

fn chain_pass<T: Real>(lat: &Lattice, v: &mut [i8], p: &ModelParams<T>, rng: &mut ChaCha8Rng) -> T {
    let beta = p.beta();
    let mut total = T::zero();
    for c in 0..lat.n_chains() {
        let delta = chain_flip_delta(lat, v, p, c);
        if accept(delta, beta, rng) {
            for &i in &lat.chains()[c].spins {
                v[i] = -v[i];
            }
            total = total + delta;
        }
    }
    total
}

/// One sequential single-spin Metropolis sweep. Returns the summed energy
/// change of accepted flips.
pub fn metropolis_sweep<T: Real>(state: &mut McChainState<T>, lat: &Lattice) -> Result<T> {
    state.check(lat)?;
    let mut rng = stream(state.rng_seed, Purpose::Sweep, state.sweep_count);
    let d = single_pass(lat, state.config.values_mut(), &state.params, &mut rng);
    state.sweep_count += 1;
    Ok(d)
}

/// A single-spin sweep followed by one whole-chain flip proposal per chain.
/// Used only to reach equilibrium where single flips freeze.
pub fn metropolis_sweep_with_chain_moves<T: Real>(state: &mut McChainState<T>, lat: &Lattice) -> Result<T> {
    state.check(lat)?;
    let mut rng = stream(state.rng_seed, Purpose::Sweep, state.sweep_count);
    let p = state.params;
    let v = state.config.values_mut();
    let d = single_pass(lat, v, &p, &mut rng) + chain_pass(lat, v, &p, &mut rng);
    state.sweep_count += 1;
    Ok(d)
}

/// One pass in id order flipping every spin whose flip strictly lowers the
/// energy. Returns the number of flips.
pub fn greedy_readout<T: Real>(lat: &Lattice, s: &mut SpinConfiguration, p: &ModelParams<T>) -> usize {
    let v = s.values_mut();
    let mut flips = 0;
    for i in 0..v.len() {
        let sigma = T::lit(v[i] as f64);
        if -(sigma + sigma) * local_field(lat, v, p, i) < T::zero() {
            v[i] = -v[i];
            flips += 1;
        }
    }
    flips
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// One strictly-downhill single-spin pass at the final controls.
    GreedyQuench,
    /// Majority vote over imaginary-time slices (PIMC).
    MajorityVote,
    None,
}

impl Readout {
    pub fn label(self) -> &'static str {
        match self {
            Readout::GreedyQuench => "greedy_quench",
            Readout::MajorityVote => "majority_vote",
            Readout::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Uniform random spins drawn from the run seed.
    Random,
    /// Unbroken chains with uniform random pseudospins.
    RandomPseudospins,
    /// Every raw spin set to the given value.
    Uniform(i8),
    Given(Vec<i8>),
}

/// Settings shared by the schedule-driven engines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub beta_j1: f64,
    /// FM and AFM couplings at full Ising scale.
    pub i0: f64,
    pub i1: f64,
    /// Emit a record every `cadence` sweeps in addition to the final one.
    pub cadence: Option<u64>,
    pub readout: Readout,
    /// Average over bulk chains only.
    pub trim: bool,
    /// Add collective chain/worldline moves (equilibrium sampling only).
    pub collective_moves: bool,
    pub initial: InitialState,
    /// Attach the final spin state to the last record.
    pub snapshot: bool,
    /// Template for protocol metadata (protocol, replica, rate, direction).
    pub meta: RecordMeta,
}

impl RunOptions {
    pub fn new(beta_j1: f64, protocol: ProtocolKind) -> Self {
        RunOptions {
            beta_j1,
            i0: FM_RATIO,
            i1: 1.0,
            cadence: None,
            readout: Readout::GreedyQuench,
            trim: false,
            collective_moves: false,
            initial: InitialState::Random,
            snapshot: false,
            meta: RecordMeta::new(Source::Classical, protocol, 0),
        }
    }

    pub(crate) fn initial_config(&self, lat: &Lattice, seed: u64) -> Result<SpinConfiguration> {
        match &self.initial {
            InitialState::Random => Ok(SpinConfiguration::random(lat, seed)),
            InitialState::RandomPseudospins => {
                let mut rng = stream(seed, Purpose::Init, 1);
                let pseudo: Vec<i8> = (0..lat.n_chains())
                    .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                    .collect();
                SpinConfiguration::from_pseudospins(lat, &pseudo)
            }
            InitialState::Uniform(v) if *v == 1 || *v == -1 => Ok(SpinConfiguration::uniform(lat, *v)),
            InitialState::Uniform(v) => Err(Error::param("initial", format!("uniform value {v} is not ±1"))),
            InitialState::Given(v) => SpinConfiguration::new(lat, v.clone()),
        }
    }
}

/// Records of one run plus the final (read-out) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<ObservableRecord>,
    pub final_config: SpinConfiguration,
}

pub(crate) fn make_record<T: Real>(
    lat: &Lattice,
    s: &SpinConfiguration,
    params: &ModelParams<T>,
    opts: &RunOptions,
    source: Source,
    seed: u64,
    sweep: u64,
    h: f64,
    gamma: f64,
) -> Result<ObservableRecord> {
    let m = measure(lat, s, params, opts.trim)?;
    let mut meta = opts.meta.clone();
    meta.source = source;
    meta.seed = seed;
    meta.sweep = sweep;
    meta.h = h;
    meta.gamma = gamma;
    meta.beta_j1 = opts.beta_j1;
    Ok(ObservableRecord::from_measurement(&m, meta))
}

/// Drive a classical chain through `sch`, one sweep per schedule step.
/// The final record is the read-out state at the final controls.
pub fn run_schedule_classical<T: Real>(
    lat: &Lattice,
    sch: &Schedule,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trajectory> {
    sch.validate()?;
    if sch.max_gamma() > 0.0 {
        return Err(Error::TransverseFieldInClassical(sch.max_gamma()));
    }
    if opts.beta_j1 <= 0.0 {
        return Err(Error::NonPositiveTemperature(1.0 / opts.beta_j1));
    }
    let temperature = 1.0 / opts.beta_j1;
    let start = sch.start.params::<T>(opts.i0, opts.i1, temperature);
    let mut state = McChainState::new(opts.initial_config(lat, seed)?, seed, start);
    let total = sch.total_duration();
    let mut records = Vec::new();
    for n in 0..total {
        let c = sch.at_sweep(n);
        state.params = c.params(opts.i0, opts.i1, temperature);
        if opts.collective_moves {
            metropolis_sweep_with_chain_moves(&mut state, lat)?;
        } else {
            metropolis_sweep(&mut state, lat)?;
        }
        if opts.cadence.is_some_and(|k| k > 0 && (n + 1) % k == 0 && n + 1 < total) {
            records.push(make_record(
                lat,
                &state.config,
                &state.params,
                opts,
                Source::Classical,
                seed,
                n + 1,
                c.h,
                0.0,
            )?);
        }
    }
    let fin = sch.final_controls();
    let params = fin.params::<T>(opts.i0, opts.i1, temperature);
    let mut config = state.config;
    let mut meta_readout = opts.readout;
    match opts.readout {
        Readout::GreedyQuench => {
            greedy_readout(lat, &mut config, &params);
        }
        Readout::MajorityVote => meta_readout = Readout::None,
        Readout::None => {}
    }
    let mut rec = make_record(lat, &config, &params, opts, Source::Classical, seed, total, fin.h, 0.0)?;
    rec.meta.readout = Some(meta_readout.label().to_string());
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
