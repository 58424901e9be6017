//! Experiment drivers: equilibrium scans, field-sweep hysteresis, phase
//! boundary extraction and step/shoulder analysis of magnetization curves.
//!
//! Every job (one replica at one protocol point) draws its seed from
//! `job_seed(plan.seed, indices)`, so results do not depend on execution order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical_mc::{
    greedy_readout, make_record, metropolis_sweep, metropolis_sweep_with_chain_moves, run_schedule_classical,
    InitialState, McChainState, Readout, RunOptions, SpinConfiguration,
};
use crate::ed::{diagonalize, SpinHamiltonian};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, Lattice, LatticeSpec};
use crate::model::{Controls, ModelParams, Schedule, SegmentKind, SweepProtocol, DEFAULT_BETA_J1, FM_RATIO, H_MAX};
use crate::observables::{local_maxima, susceptibility};
use crate::pimc::{pimc_sweep, run_schedule_pimc, PimcParams, PimcState, UpdateFamily};
use crate::records::{Direction, ObservableRecord, ProtocolKind, RecordMeta, Snapshot, Source};
use crate::rng::{job_seed, stream, Purpose};
use crate::stats::{mean, std_dev, std_err, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Classical,
    Pimc,
    Ed,
}

/// `H = 0, 0.04, …, 2`.
pub fn default_h_grid() -> Vec<f64> {
    (0..=50).map(|k| k as f64 * 0.04).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumSettings {
    /// Linear ramp of the Ising scale `𝒥: 0 → 1` (and Γ from `gamma_start`).
    pub anneal_sweeps: u64,
    pub dwell_sweeps: u64,
    /// Samples per replica, taken every `sample_interval` sweeps after the dwell.
    pub samples: u32,
    pub sample_interval: u64,
    /// Transverse field at the start of the anneal; `None` starts at the target Γ.
    pub gamma_start: Option<f64>,
    /// Whole-chain (and whole-worldline) moves to cross frozen barriers.
    pub collective_moves: bool,
}

impl Default for EquilibriumSettings {
    fn default() -> Self {
        EquilibriumSettings {
            anneal_sweeps: 2_000,
            dwell_sweeps: 10_000,
            samples: 50,
            sample_interval: 100,
            gamma_start: None,
            collective_moves: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HysteresisSettings {
    pub anneal_sweeps: u64,
    /// Transverse field at the start of the anneal; `None` starts at the target Γ.
    pub anneal_gamma_start: Option<f64>,
    pub quench_sweeps: u64,
    /// Transverse field at the end of the PIMC readout quench.
    pub gamma_cutoff: f64,
}

impl Default for HysteresisSettings {
    fn default() -> Self {
        HysteresisSettings {
            anneal_sweeps: 100,
            anneal_gamma_start: None,
            quench_sweeps: 20,
            gamma_cutoff: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentPlan {
    pub engine: Engine,
    pub lattice: LatticeSpec,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    pub h_grid: Vec<f64>,
    /// Sweeps per unit of `H`, ascending.
    pub rates: Vec<f64>,
    pub directions: Vec<Direction>,
    pub replicas: u32,
    pub seed: u64,
    pub pimc: PimcParams,
    pub readout: Readout,
    pub trim: bool,
    /// Attach the final spin configuration to final records.
    pub snapshots: bool,
    pub equilibrium: EquilibriumSettings,
    pub hysteresis: HysteresisSettings,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            engine: Engine::Pimc,
            lattice: LatticeSpec::periodic(12, 12),
            gammas: vec![0.51, 1.06],
            betas: vec![DEFAULT_BETA_J1],
            h_grid: default_h_grid(),
            rates: vec![1e3, 1e5, 1e7],
            directions: vec![Direction::Down, Direction::Up],
            replicas: 20,
            seed: 0,
            pimc: PimcParams::default(),
            readout: Readout::MajorityVote,
            trim: false,
            snapshots: false,
            equilibrium: EquilibriumSettings::default(),
            hysteresis: HysteresisSettings::default(),
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        let nonempty = [
            ("gammas", self.gammas.is_empty()),
            ("betas", self.betas.is_empty()),
            ("h_grid", self.h_grid.is_empty()),
        ];
        for (name, empty) in nonempty {
            if empty {
                return Err(Error::param(name, "must not be empty"));
            }
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas", "must be at least 1"));
        }
        if let Some(b) = self.betas.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::param("betas", format!("β·J1 = {b} is not positive")));
        }
        if let Some(g) = self.gammas.iter().find(|&&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::param("gammas", format!("Γ/J1 = {g} is negative")));
        }
        if self.h_grid.iter().any(|&h| !(0.0..=H_MAX).contains(&h)) {
            return Err(Error::param("h_grid", "values must lie in [0, 2]"));
        }
        if self.rates.windows(2).any(|w| w[1] < w[0]) || self.rates.iter().any(|&r| r <= 0.0) {
            return Err(Error::param("rates", "must be positive and ascending"));
        }
        match self.engine {
            Engine::Classical if self.gammas.iter().any(|&g| g > 0.0) => Err(Error::param(
                "gammas",
                "the classical engine needs Γ = 0; use the pimc engine for Γ > 0",
            )),
            Engine::Pimc if self.gammas.iter().any(|&g| g <= 0.0) => Err(Error::param(
                "gammas",
                "the pimc engine needs Γ > 0; use the classical engine for Γ = 0",
            )),
            _ => self.pimc.validate(),
        }
    }

    fn run_options(&self, beta_j1: f64, protocol: ProtocolKind, replica: u32, source: Source) -> RunOptions {
        let mut o = RunOptions::new(beta_j1, protocol);
        o.readout = self.readout;
        o.trim = self.trim;
        o.snapshot = self.snapshots;
        o.meta = RecordMeta::new(source, protocol, 0);
        o.meta.replica = replica;
        o
    }
}

/// Estimates at one field value, with per-replica means kept for bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub h: f64,
    pub m: f64,
    pub m_err: f64,
    pub m_fim: f64,
    pub m_fim_err: f64,
    pub local_entropy: f64,
    /// Standard deviation of per-replica mean local entropy.
    pub local_entropy_std: f64,
    pub broken_chain_fraction: f64,
    pub chi: Option<f64>,
    pub replica_m: Vec<f64>,
    pub replica_m_fim: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub engine: Engine,
    pub gamma: f64,
    pub beta_j1: f64,
    pub rate: Option<f64>,
    pub direction: Option<Direction>,
    pub family: Option<UpdateFamily>,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn m_curve(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.h, p.m)).collect()
    }

    pub fn point_at(&self, h: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.h - h).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub curves: Vec<Curve>,
    pub records: Vec<ObservableRecord>,
}

fn aggregate(h: f64, per_replica: &[Vec<&ObservableRecord>]) -> CurvePoint {
    let rm: Vec<f64> = per_replica
        .iter()
        .map(|rs| mean(&rs.iter().map(|r| r.m_over_msat).collect::<Vec<_>>()))
        .collect();
    let rf: Vec<f64> = per_replica
        .iter()
        .map(|rs| mean(&rs.iter().map(|r| r.m_fim).collect::<Vec<_>>()))
        .collect();
    let re: Vec<f64> = per_replica
        .iter()
        .map(|rs| mean(&rs.iter().map(|r| r.local_entropy).collect::<Vec<_>>()))
        .collect();
    let rb: Vec<f64> = per_replica
        .iter()
        .map(|rs| mean(&rs.iter().map(|r| r.broken_chain_fraction).collect::<Vec<_>>()))
        .collect();
    CurvePoint {
        h,
        m: mean(&rm),
        m_err: std_err(&rm),
        m_fim: mean(&rf),
        m_fim_err: std_err(&rf),
        local_entropy: mean(&re),
        local_entropy_std: std_dev(&re),
        broken_chain_fraction: mean(&rb),
        chi: None,
        replica_m: rm,
        replica_m_fim: rf,
    }
}

fn attach_chi(points: &mut [CurvePoint]) {
    let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.h, p.m)).collect();
    if let Ok(chi) = susceptibility(&curve) {
        for (p, (_, c)) in points.iter_mut().zip(chi) {
            p.chi = Some(c);
        }
    }
}

enum Sampler {
    Classical(McChainState<f64>),
    Pimc(PimcState<f64>, PimcParams),
}

impl Sampler {
    fn sweep(&mut self, lat: &Lattice, p: ModelParams<f64>, collective: bool) -> Result<()> {
        match self {
            Sampler::Classical(st) => {
                st.params = p;
                if collective {
                    metropolis_sweep_with_chain_moves(st, lat)?;
                } else {
                    metropolis_sweep(st, lat)?;
                }
            }
            Sampler::Pimc(st, pp) => {
                st.params = p;
                pimc_sweep(st, lat, pp.update_family, collective)?;
            }
        }
        Ok(())
    }

    fn sweep_count(&self) -> u64 {
        match self {
            Sampler::Classical(st) => st.sweep_count,
            Sampler::Pimc(st, _) => st.sweep_count,
        }
    }

    fn readout(&self, lat: &Lattice, p: &ModelParams<f64>, readout: Readout, seed: u64) -> SpinConfiguration {
        match self {
            Sampler::Classical(st) => {
                let mut c = st.config.clone();
                if readout == Readout::GreedyQuench {
                    greedy_readout(lat, &mut c, p);
                }
                c
            }
            Sampler::Pimc(st, _) => {
                let mut rng = stream(seed, Purpose::Readout, st.sweep_count);
                st.worldlines.majority_projection(&mut rng)
            }
        }
    }
}

/// One replica of the long-dwell equilibrium protocol at `(h, Γ, β)`.
pub fn equilibrium_job(
    plan: &ExperimentPlan,
    lat: &Lattice,
    h: f64,
    gamma: f64,
    beta_j1: f64,
    replica: u32,
    seed: u64,
) -> Result<Vec<ObservableRecord>> {
    let eq = &plan.equilibrium;
    let source = match plan.engine {
        Engine::Classical => Source::Classical,
        _ => Source::Pimc,
    };
    let mut opts = plan.run_options(beta_j1, ProtocolKind::Equilibrium, replica, source);
    if source == Source::Pimc {
        opts.meta.l_tau = Some(plan.pimc.l_tau as u32);
        opts.meta.readout = Some(Readout::MajorityVote.label().into());
    } else {
        opts.meta.readout = Some(plan.readout.label().into());
    }
    let temperature = 1.0 / beta_j1;
    let sch = Schedule::equilibrium(
        h,
        gamma,
        eq.gamma_start.unwrap_or(gamma),
        eq.anneal_sweeps,
        eq.dwell_sweeps,
    );
    let init = SpinConfiguration::random(lat, seed);
    let p0 = sch.start.params::<f64>(FM_RATIO, 1.0, temperature);
    let mut sampler = match source {
        Source::Classical => Sampler::Classical(McChainState::new(init, seed, p0)),
        _ => Sampler::Pimc(PimcState::new(&init, plan.pimc.l_tau, seed, p0)?, plan.pimc),
    };
    for n in 0..sch.total_duration() {
        let c = sch.at_sweep(n);
        sampler.sweep(lat, c.params(FM_RATIO, 1.0, temperature), eq.collective_moves)?;
    }
    let p = sch.final_controls().params::<f64>(FM_RATIO, 1.0, temperature);
    let mut out = Vec::with_capacity(eq.samples as usize);
    for k in 0..eq.samples {
        for _ in 0..eq.sample_interval {
            sampler.sweep(lat, p, eq.collective_moves)?;
        }
        let config = sampler.readout(lat, &p, plan.readout, seed);
        let mut rec = make_record(lat, &config, &p, &opts, source, seed, sampler.sweep_count(), h, gamma)?;
        if let Sampler::Pimc(st, _) = &sampler {
            rec.meta.k_tau = Some(st.worldlines.k_tau);
        }
        if plan.snapshots && k + 1 == eq.samples {
            rec.snapshot = Some(Snapshot {
                lattice: plan.lattice.clone(),
                spins: config.values().to_vec(),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

fn ed_point(lat: &Lattice, h: f64, gamma: f64, beta_j1: f64, seed: u64) -> Result<ObservableRecord> {
    let p = ModelParams::<f64>::reduced(h, gamma, beta_j1);
    let spec = diagonalize(&SpinHamiltonian::from_lattice(lat, &p))?;
    let t = spec.thermal(beta_j1);
    let mut meta = RecordMeta::new(Source::Ed, ProtocolKind::Ed, seed);
    meta.h = h;
    meta.gamma = gamma;
    meta.beta_j1 = beta_j1;
    meta.readout = Some(Readout::None.label().into());
    Ok(ObservableRecord {
        m_over_msat: -t.magnetization,
        chi: None,
        psi: t.psi.unwrap_or([0.0, 0.0]),
        m_fim: t.m_fim.unwrap_or(0.0),
        energy_per_spin: t.energy / lat.n_spins() as f64,
        local_entropy: 0.0,
        broken_chain_fraction: 0.0,
        meta,
        snapshot: None,
    })
}

const EQ_TAG: u64 = 1;
const HYST_TAG: u64 = 2;

/// Equilibrium curves `M(H)`, `χ(H)`, `m_FIM(H)` for every `(Γ, β)` in the plan.
pub fn run_equilibrium_scan(plan: &ExperimentPlan) -> Result<ScanResult> {
    plan.validate()?;
    let lat = build_lattice(&plan.lattice)?;
    let mut jobs = Vec::new();
    for (gi, &gamma) in plan.gammas.iter().enumerate() {
        for (bi, &beta) in plan.betas.iter().enumerate() {
            for (hi, &h) in plan.h_grid.iter().enumerate() {
                let reps = if plan.engine == Engine::Ed { 1 } else { plan.replicas };
                for r in 0..reps {
                    let seed = job_seed(plan.seed, &[EQ_TAG, gi as u64, bi as u64, hi as u64, r as u64]);
                    jobs.push((gi, bi, hi, r, seed, gamma, beta, h));
                }
            }
        }
    }
    let results: Vec<Vec<ObservableRecord>> = jobs
        .par_iter()
        .map(|&(_, _, _, r, seed, gamma, beta, h)| match plan.engine {
            Engine::Ed => ed_point(&lat, h, gamma, beta, seed).map(|x| vec![x]),
            _ => equilibrium_job(plan, &lat, h, gamma, beta, r, seed),
        })
        .collect::<Result<_>>()?;
    let mut curves = Vec::new();
    for (gi, &gamma) in plan.gammas.iter().enumerate() {
        for (bi, &beta) in plan.betas.iter().enumerate() {
            let mut points: Vec<CurvePoint> = plan
                .h_grid
                .iter()
                .enumerate()
                .map(|(hi, &h)| {
                    let per_replica: Vec<Vec<&ObservableRecord>> = jobs
                        .iter()
                        .zip(&results)
                        .filter(|(j, _)| j.0 == gi && j.1 == bi && j.2 == hi)
                        .map(|(_, recs)| recs.iter().collect())
                        .collect();
                    aggregate(h, &per_replica)
                })
                .collect();
            attach_chi(&mut points);
            curves.push(Curve {
                engine: plan.engine,
                gamma,
                beta_j1: beta,
                rate: None,
                direction: None,
                family: (plan.engine == Engine::Pimc).then_some(plan.pimc.update_family),
                points,
            });
        }
    }
    let mut records: Vec<ObservableRecord> = results.into_iter().flatten().collect();
    for c in &curves {
        for p in &c.points {
            for rec in records
                .iter_mut()
                .filter(|r| r.meta.h == p.h && r.meta.gamma == c.gamma && r.meta.beta_j1 == c.beta_j1)
            {
                rec.chi = p.chi;
            }
        }
    }
    Ok(ScanResult { curves, records })
}

/// Schedule of one field-sweep run ending at `h_final`.
pub fn hysteresis_schedule(
    plan: &ExperimentPlan,
    gamma: f64,
    rate: f64,
    direction: Direction,
    h_final: f64,
) -> Schedule {
    let hs = &plan.hysteresis;
    let pimc = plan.engine == Engine::Pimc;
    Schedule::hysteresis(&SweepProtocol {
        h_start: direction.start_h(),
        h_final,
        gamma,
        rate,
        anneal_sweeps: hs.anneal_sweeps,
        anneal_gamma_start: if pimc {
            hs.anneal_gamma_start.unwrap_or(gamma)
        } else {
            0.0
        },
        quench_sweeps: hs.quench_sweeps,
        gamma_cutoff: if pimc { hs.gamma_cutoff } else { 0.0 },
    })
}

/// Final-state observables after sweeping the field from the saturated
/// (`down`) or zero-field (`up`) start to every `H_f` in the grid.
pub fn run_hysteresis(plan: &ExperimentPlan) -> Result<ScanResult> {
    plan.validate()?;
    if plan.engine == Engine::Ed {
        return Err(Error::param("engine", "hysteresis needs the classical or pimc engine"));
    }
    let lat = build_lattice(&plan.lattice)?;
    struct Job {
        key: (usize, usize, usize, usize),
        hi: usize,
        replica: u32,
        seed: u64,
        gamma: f64,
        beta: f64,
        rate: f64,
        direction: Direction,
        h: f64,
    }
    let mut jobs = Vec::new();
    for (gi, &gamma) in plan.gammas.iter().enumerate() {
        for (bi, &beta) in plan.betas.iter().enumerate() {
            for (ri, &rate) in plan.rates.iter().enumerate() {
                for (di, &direction) in plan.directions.iter().enumerate() {
                    for (hi, &h) in plan.h_grid.iter().enumerate() {
                        for r in 0..plan.replicas {
                            let idx = [
                                HYST_TAG, gi as u64, bi as u64, ri as u64, di as u64, hi as u64, r as u64,
                            ];
                            jobs.push(Job {
                                key: (gi, bi, ri, di),
                                hi,
                                replica: r,
                                seed: job_seed(plan.seed, &idx),
                                gamma,
                                beta,
                                rate,
                                direction,
                                h,
                            });
                        }
                    }
                }
            }
        }
    }
    let results: Vec<ObservableRecord> = jobs
        .par_iter()
        .map(|j| {
            let source = if plan.engine == Engine::Pimc {
                Source::Pimc
            } else {
                Source::Classical
            };
            let mut opts = plan.run_options(j.beta, ProtocolKind::Hysteresis, j.replica, source);
            opts.meta.rate = Some(j.rate);
            opts.meta.direction = Some(j.direction);
            opts.initial = match j.direction {
                Direction::Down => InitialState::Uniform(-1),
                Direction::Up => InitialState::RandomPseudospins,
            };
            let sch = hysteresis_schedule(plan, j.gamma, j.rate, j.direction, j.h);
            let t = match plan.engine {
                Engine::Pimc => run_schedule_pimc::<f64>(&lat, &sch, &plan.pimc, j.seed, &opts)?,
                _ => run_schedule_classical::<f64>(&lat, &sch, j.seed, &opts)?,
            };
            let mut rec = t.records.into_iter().last().expect("final record");
            // label by the protocol Γ, not the quench cutoff the readout ran at
            rec.meta.gamma = j.gamma;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    let mut curves = Vec::new();
    for (gi, &gamma) in plan.gammas.iter().enumerate() {
        for (bi, &beta) in plan.betas.iter().enumerate() {
            for (ri, &rate) in plan.rates.iter().enumerate() {
                for (di, &direction) in plan.directions.iter().enumerate() {
                    let points = plan
                        .h_grid
                        .iter()
                        .enumerate()
                        .map(|(hi, &h)| {
                            let per_replica: Vec<Vec<&ObservableRecord>> = jobs
                                .iter()
                                .zip(&results)
                                .filter(|(j, _)| j.key == (gi, bi, ri, di) && j.hi == hi)
                                .map(|(_, r)| vec![r])
                                .collect();
                            aggregate(h, &per_replica)
                        })
                        .collect();
                    curves.push(Curve {
                        engine: plan.engine,
                        gamma,
                        beta_j1: beta,
                        rate: Some(rate),
                        direction: Some(direction),
                        family: (plan.engine == Engine::Pimc).then_some(plan.pimc.update_family),
                        points,
                    });
                }
            }
        }
    }
    Ok(ScanResult {
        curves,
        records: results,
    })
}

/// Linear interpolation of the highest downward crossing of `level` along a
/// curve sorted by `H`.
pub fn interpolate_crossing(points: &[(f64, f64)], level: f64) -> Option<f64> {
    points.windows(2).rev().find_map(|w| {
        let ((h0, y0), (h1, y1)) = (w[0], w[1]);
        (y0 >= level && y1 < level).then(|| h0 + (h1 - h0) * (y0 - level) / (y0 - y1))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub gamma: f64,
    pub temperature: f64,
    pub h_c: f64,
    /// Bootstrap standard deviation over replicas.
    pub h_c_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub points: Vec<BoundaryPoint>,
    pub criterion: f64,
    /// Curves without a crossing, with the reason.
    pub diagnostics: Vec<String>,
}

/// `H_c` from the `m_FIM = criterion` crossing of each equilibrium curve.
pub fn extract_phase_boundary(curves: &[Curve], criterion: f64, n_bootstrap: usize, seed: u64) -> PhaseBoundary {
    let mut points = Vec::new();
    let mut diagnostics = Vec::new();
    for (ci, c) in curves.iter().enumerate() {
        let mean_curve: Vec<(f64, f64)> = c.points.iter().map(|p| (p.h, p.m_fim)).collect();
        let Some(h_c) = interpolate_crossing(&mean_curve, criterion) else {
            diagnostics.push(format!(
                "Γ/J1 = {}, β·J1 = {}: m_FIM never crosses {criterion} downward on the grid",
                c.gamma, c.beta_j1
            ));
            continue;
        };
        let n_rep = c.points.iter().map(|p| p.replica_m_fim.len()).min().unwrap_or(0);
        let mut rng = stream(seed, Purpose::Bootstrap, ci as u64);
        let mut boot = Vec::with_capacity(n_bootstrap);
        if n_rep > 1 {
            use rand::Rng;
            for _ in 0..n_bootstrap {
                let pick: Vec<usize> = (0..n_rep).map(|_| rng.gen_range(0..n_rep)).collect();
                let resampled: Vec<(f64, f64)> = c
                    .points
                    .iter()
                    .map(|p| {
                        (
                            p.h,
                            pick.iter().map(|&k| p.replica_m_fim[k]).sum::<f64>() / n_rep as f64,
                        )
                    })
                    .collect();
                if let Some(x) = interpolate_crossing(&resampled, criterion) {
                    boot.push(x);
                }
            }
        }
        points.push(BoundaryPoint {
            gamma: c.gamma,
            temperature: 1.0 / c.beta_j1,
            h_c,
            h_c_err: std_dev(&boot),
        });
    }
    PhaseBoundary {
        points,
        criterion,
        diagnostics,
    }
}

/// Fields `H_k = (6 − 2k)/4` at which a chain with `k` anti-aligned neighbours
/// (the rest aligned) becomes unstable to anti-aligning, for every `H_k > 0`.
/// They are evenly spaced by `1/2`.
pub fn molecular_field_thresholds() -> Vec<f64> {
    (0..6)
        .map(|k| (6.0 - 2.0 * k as f64) / 4.0)
        .filter(|&h| h > 0.0)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// `H` at the χ maximum of each step.
    pub steps: Vec<f64>,
    pub threshold: f64,
}

/// Steps of `M(H)`: maximal runs of grid points whose `χ` exceeds
/// `factor × mean χ`, each reported at its χ maximum.
pub fn run_step_structure(curve: &[(f64, f64)], factor: f64) -> Result<StepReport> {
    let chi = susceptibility(curve)?;
    let avg = mean(&chi.iter().map(|c| c.1.abs()).collect::<Vec<_>>());
    let threshold = factor * avg;
    let mut steps = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for &(h, x) in &chi {
        if x.abs() > threshold {
            run = Some(match run {
                Some((bh, bx)) if bx >= x.abs() => (bh, bx),
                _ => (h, x.abs()),
            });
        } else if let Some((bh, _)) = run.take() {
            steps.push(bh);
        }
    }
    if let Some((bh, _)) = run {
        steps.push(bh);
    }
    Ok(StepReport { steps, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShoulderReport {
    /// The two largest χ maxima above `h_min`, in increasing `H`.
    pub peaks: Option<(f64, f64)>,
    pub shoulder_h: Option<f64>,
    /// `M/M_sat` at the χ minimum between the peaks.
    pub shoulder_m: Option<f64>,
}

impl ShoulderReport {
    pub fn double_peaked(&self) -> bool {
        self.peaks.is_some()
    }
}

/// Locate the magnetization shoulder between the two strongest susceptibility
/// peaks above `h_min` (above the 1/3 plateau).
pub fn shoulder_analysis(curve: &Curve, h_min: f64) -> ShoulderReport {
    let pts: Vec<&CurvePoint> = curve
        .points
        .iter()
        .filter(|p| p.h >= h_min && p.chi.is_some())
        .collect();
    let chi: Vec<f64> = pts.iter().map(|p| p.chi.unwrap()).collect();
    let mut maxima = local_maxima(&chi);
    maxima.sort_by(|&a, &b| chi[b].total_cmp(&chi[a]));
    if maxima.len() < 2 {
        return ShoulderReport {
            peaks: None,
            shoulder_h: None,
            shoulder_m: None,
        };
    }
    let (a, b) = (maxima[0].min(maxima[1]), maxima[0].max(maxima[1]));
    let k = (a..=b).min_by(|&x, &y| chi[x].total_cmp(&chi[y])).unwrap();
    ShoulderReport {
        peaks: Some((pts[a].h, pts[b].h)),
        shoulder_h: Some(pts[k].h),
        shoulder_m: Some(pts[k].m),
    }
}

/// Mean local entropy and its spread at every point of a curve.
pub fn entropy_profile(curve: &Curve) -> Vec<(f64, Estimate)> {
    curve
        .points
        .iter()
        .map(|p| {
            (
                p.h,
                Estimate {
                    mean: p.local_entropy,
                    err: p.local_entropy_std,
                },
            )
        })
        .collect()
}

/// Constant-controls schedule helper used by the CLI and tests.
pub fn dwell_schedule(h: f64, gamma: f64, sweeps: u64) -> Schedule {
    let c = Controls::new(1.0, gamma, h);
    Schedule::constant(c).then(SegmentKind::Dwell, sweeps, c)
}
