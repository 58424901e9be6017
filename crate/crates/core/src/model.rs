//! Hamiltonian parameters, energy functionals, the effective triangular-lattice
//! mapping and piecewise-linear annealing schedules.
//!
//! The classical (σᶻ) part of the chain Hamiltonian is
//!
//! ```text
//! E(σ) = B Σ σᵢ + J₁ Σ_AFM σᵢσⱼ − J₀ Σ_FM σᵢσⱼ
//! ```
//!
//! With `B > 0` the field term favours σ = −1. Observables that report
//! magnetization "along the field" therefore use the field frame
//! `−σ` (see [`crate::observables`]).

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::classical_mc::SpinConfiguration;
use crate::error::{Error, Result};
use crate::lattice::{BondKind, Lattice};
use crate::scalar::Real;

/// Default FM/AFM coupling ratio `J₀/J₁ = I₀/I₁`.
pub const FM_RATIO: f64 = 1.8;
/// Default inverse temperature in units of `J₁`.
pub const DEFAULT_BETA_J1: f64 = 4.5;
/// Saturating field `H = B/J₁` of the sweep protocols.
pub const H_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Inter-chain AFM coupling (energy unit).
    pub j1: T,
    /// Intra-chain FM coupling.
    pub j0: T,
    /// Longitudinal field per spin.
    pub b: T,
    pub gamma: T,
    pub temperature: T,
}

impl<T: Num + PartialOrd + Copy> ModelParams<T> {
    /// Reduced field `H = B/J₁`.
    pub fn h(&self) -> T {
        self.b / self.j1
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if self.j1 <= zero {
            return Err(Error::param("j1", "must be positive"));
        }
        if self.j0 <= zero {
            return Err(Error::param("j0", "must be positive"));
        }
        if self.gamma < zero {
            return Err(Error::param("gamma", "must be non-negative"));
        }
        if self.temperature <= zero {
            return Err(Error::param("temperature", "must be positive"));
        }
        Ok(())
    }
}

impl<T: Real> ModelParams<T> {
    /// Standard parameters: `J₁ = 1`, `J₀ = 1.8`, field `H`, transverse field
    /// `Γ/J₁ = gamma`, temperature `1/beta_j1`.
    pub fn reduced(h: f64, gamma: f64, beta_j1: f64) -> Self {
        ModelParams {
            j1: T::one(),
            j0: T::lit(FM_RATIO),
            b: T::lit(h),
            gamma: T::lit(gamma),
            temperature: T::lit(1.0 / beta_j1),
        }
    }

    pub fn beta(&self) -> T {
        T::one() / self.temperature
    }

    /// Coupling constant of a bond of the given kind in `E = Σ Jᵢⱼ σᵢσⱼ` form.
    #[inline]
    pub fn coupling(&self, kind: BondKind) -> T {
        match kind {
            BondKind::Ferro => -self.j0,
            BondKind::Antiferro => self.j1,
        }
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            j1: U::lit(self.j1.as_f64()),
            j0: U::lit(self.j0.as_f64()),
            b: U::lit(self.b.as_f64()),
            gamma: U::lit(self.gamma.as_f64()),
            temperature: U::lit(self.temperature.as_f64()),
        }
    }
}

fn check_config(lat: &Lattice, s: &SpinConfiguration) -> Result<()> {
    if s.len() != lat.n_spins() {
        return Err(Error::SizeMismatch {
            expected: lat.n_spins(),
            got: s.len(),
        });
    }
    if s.lattice_tag() != lat.tag() {
        return Err(Error::LatticeMismatch {
            expected: lat.tag(),
            got: s.lattice_tag(),
        });
    }
    Ok(())
}

/// Classical (Γ = 0) energy of a σᶻ configuration.
pub fn classical_energy<T: Real>(lat: &Lattice, s: &SpinConfiguration, p: &ModelParams<T>) -> Result<T> {
    check_config(lat, s)?;
    let v = s.values();
    let field: i64 = v.iter().map(|&x| x as i64).sum();
    let afm: i64 = lat.afm_bonds().iter().map(|&(a, b)| (v[a] * v[b]) as i64).sum();
    let fm: i64 = lat.fm_bonds().iter().map(|&(a, b)| (v[a] * v[b]) as i64).sum();
    Ok(p.b * T::lit(field as f64) + p.j1 * T::lit(afm as f64) - p.j0 * T::lit(fm as f64))
}

/// Local field `∂E/∂σᵢ = B + Σⱼ Jᵢⱼ σⱼ` acting on spin `i`.
#[inline]
pub(crate) fn local_field<T: Real>(lat: &Lattice, v: &[i8], p: &ModelParams<T>, i: usize) -> T {
    let mut h = p.b;
    for nb in lat.neighbors(i) {
        let j = p.coupling(nb.kind);
        if v[nb.spin] > 0 {
            h = h + j;
        } else {
            h = h - j;
        }
    }
    h
}

/// `E(flip_i(σ)) − E(σ)` in O(degree).
pub fn energy_delta_single_flip<T: Real>(
    lat: &Lattice,
    s: &SpinConfiguration,
    p: &ModelParams<T>,
    spin: usize,
) -> Result<T> {
    check_config(lat, s)?;
    if spin >= lat.n_spins() {
        return Err(Error::UnknownSpin(spin));
    }
    let v = s.values();
    let sigma = T::lit(v[spin] as f64);
    Ok(-(sigma + sigma) * local_field(lat, v, p, spin))
}

/// Parameters of the effective triangular TFIM of chain pseudospins,
/// valid for `Γ/J₀ ≪ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModelParams<T> {
    pub b_eff: T,
    pub j1_eff: T,
    pub gamma_eff: T,
    /// Saturation field `6 J̃₁` of the coordination-6 triangular lattice.
    pub b_sat_eff: T,
    /// Predicted downward shift of the critical field, `δB̃ ≃ Γ̃`.
    pub delta_b_eff: T,
    /// Set when `Γ/J₀ > 0.5`, outside the perturbative regime.
    pub outside_validity: bool,
}

/// Map chain parameters to the effective model: `B̃ = 4B`, `J̃₁ = J₁`,
/// `Γ̃ = Γ⁴/J₀³`. Works for any exact or floating number type.
pub fn map_to_effective<T: Num + Clone + PartialOrd>(p: &ModelParams<T>) -> Result<EffectiveModelParams<T>> {
    if p.j0 == T::zero() {
        return Err(Error::param("j0", "must be non-zero for the effective mapping"));
    }
    let two = T::one() + T::one();
    let four = two.clone() * two.clone();
    let six = four.clone() + two.clone();
    let g2 = p.gamma.clone() * p.gamma.clone();
    let gamma_eff = g2.clone() * g2 / (p.j0.clone() * p.j0.clone() * p.j0.clone());
    let outside_validity = p.gamma.clone() * two > p.j0.clone();
    Ok(EffectiveModelParams {
        b_eff: four * p.b.clone(),
        j1_eff: p.j1.clone(),
        b_sat_eff: six * p.j1.clone(),
        delta_b_eff: gamma_eff.clone(),
        gamma_eff,
        outside_validity,
    })
}

/// Instantaneous control values: Ising scale `𝒥`, transverse field `Γ`
/// (in units of `J₁`) and reduced field `H`, so that `B = 𝒥·H·J₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controls {
    pub ising: f64,
    pub gamma: f64,
    pub h: f64,
}

impl Controls {
    pub fn new(ising: f64, gamma: f64, h: f64) -> Self {
        Controls { ising, gamma, h }
    }

    /// `B/J₁` at full Ising scale.
    pub fn b_over_j1(&self) -> f64 {
        self.h
    }

    fn lerp(&self, other: &Controls, f: f64) -> Controls {
        let mix = |a: f64, b: f64| if f >= 1.0 { b } else { a + (b - a) * f };
        Controls {
            ising: mix(self.ising, other.ising),
            gamma: mix(self.gamma, other.gamma),
            h: mix(self.h, other.h),
        }
    }

    /// Hamiltonian parameters for couplings `(I₀, I₁)` at temperature `temperature`.
    pub fn params<T: Real>(&self, i0: f64, i1: f64, temperature: f64) -> ModelParams<T> {
        ModelParams {
            j1: T::lit(self.ising * i1),
            j0: T::lit(self.ising * i0),
            b: T::lit(self.ising * self.h * i1),
            gamma: T::lit(self.gamma),
            temperature: T::lit(temperature),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Anneal,
    Dwell,
    Sweep,
    Quench,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Duration in Monte Carlo sweeps.
    pub duration: u64,
    /// Controls reached at the end of the segment (linear ramp from the previous end).
    pub target: Controls,
}

/// Continuous piecewise-linear protocol in Monte Carlo sweep time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: Controls,
    pub segments: Vec<Segment>,
}

/// Conversion from the device time unit to sweeps. Qualitative only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMapping {
    pub sweeps_per_microsecond: f64,
}

impl Default for TimeMapping {
    fn default() -> Self {
        TimeMapping {
            sweeps_per_microsecond: 1e4,
        }
    }
}

impl TimeMapping {
    /// Sweeps per unit of `H` for a rate quoted as `dt/d(B/B_MAX)` in µs,
    /// with `B_MAX = 2 J₁`.
    pub fn sweeps_per_unit_h(&self, micros_per_bmax: f64) -> f64 {
        micros_per_bmax * self.sweeps_per_microsecond / H_MAX
    }
}

/// Inputs of the field-sweep (hysteresis) protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub h_start: f64,
    pub h_final: f64,
    pub gamma: f64,
    /// Sweeps per unit change of `H`.
    pub rate: f64,
    pub anneal_sweeps: u64,
    /// Transverse field at the start of the anneal (ignored by the classical engine).
    pub anneal_gamma_start: f64,
    pub quench_sweeps: u64,
    /// Transverse field reached at the end of the quench.
    pub gamma_cutoff: f64,
}

impl Schedule {
    pub fn constant(c: Controls) -> Self {
        Schedule {
            start: c,
            segments: Vec::new(),
        }
    }

    pub fn then(mut self, kind: SegmentKind, duration: u64, target: Controls) -> Self {
        self.segments.push(Segment { kind, duration, target });
        self
    }

    /// Anneal `𝒥: 0 → 1` and `Γ: gamma_start → gamma` at fixed `H = h`, then
    /// dwell for `dwell` sweeps.
    pub fn equilibrium(h: f64, gamma: f64, gamma_start: f64, anneal: u64, dwell: u64) -> Self {
        let target = Controls::new(1.0, gamma, h);
        Schedule::constant(Controls::new(0.0, gamma_start, h))
            .then(SegmentKind::Anneal, anneal, target)
            .then(SegmentKind::Dwell, dwell, target)
    }

    /// Anneal under `h_start`, sweep the field to `h_final`, then quench Γ.
    pub fn hysteresis(p: &SweepProtocol) -> Self {
        let annealed = Controls::new(1.0, p.gamma, p.h_start);
        let swept = Controls::new(1.0, p.gamma, p.h_final);
        let sweep_len = ((p.h_final - p.h_start).abs() * p.rate).round() as u64;
        Schedule::constant(Controls::new(0.0, p.anneal_gamma_start, p.h_start))
            .then(SegmentKind::Anneal, p.anneal_sweeps, annealed)
            .then(SegmentKind::Sweep, sweep_len, swept)
            .then(
                SegmentKind::Quench,
                p.quench_sweeps,
                Controls::new(1.0, p.gamma_cutoff, p.h_final),
            )
    }

    pub fn total_duration(&self) -> u64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Controls at sweep time `t ∈ [0, total]`.
    pub fn at(&self, t: f64) -> Result<Controls> {
        let total = self.total_duration();
        if !(0.0..=total as f64).contains(&t) || t.is_nan() {
            return Err(Error::ScheduleTime { t, total });
        }
        let mut from = self.start;
        let mut t0 = 0.0;
        for seg in &self.segments {
            let t1 = t0 + seg.duration as f64;
            if t < t1 {
                return Ok(from.lerp(&seg.target, (t - t0) / seg.duration as f64));
            }
            from = seg.target;
            t0 = t1;
        }
        Ok(from)
    }

    /// Controls applied during sweep number `n` (0-based): the value at the end of
    /// that sweep, so the last sweep of a ramp runs at its target.
    pub fn at_sweep(&self, n: u64) -> Controls {
        self.at((n + 1) as f64).expect("sweep index inside schedule")
    }

    /// Index of the segment containing sweep `n`.
    pub fn segment_of_sweep(&self, n: u64) -> Option<&Segment> {
        let mut end = 0;
        for seg in &self.segments {
            end += seg.duration;
            if n < end {
                return Some(seg);
            }
        }
        None
    }

    pub fn final_controls(&self) -> Controls {
        self.segments.last().map_or(self.start, |s| s.target)
    }

    pub fn max_gamma(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.target.gamma)
            .fold(self.start.gamma, f64::max)
    }

    pub fn min_gamma(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.target.gamma)
            .fold(self.start.gamma, f64::min)
    }

    /// Durations are unsigned; a zero-length segment must not change any control,
    /// which keeps every control continuous.
    pub fn validate(&self) -> Result<()> {
        let mut prev = self.start;
        for (i, seg) in self.segments.iter().enumerate() {
            let c = seg.target;
            if ![c.ising, c.gamma, c.h].iter().all(|x| x.is_finite()) {
                return Err(Error::Schedule(format!("segment {i} has a non-finite target")));
            }
            if c.ising < 0.0 || c.gamma < 0.0 {
                return Err(Error::Schedule(format!(
                    "segment {i}: Ising scale and transverse field must be non-negative"
                )));
            }
            if seg.duration == 0 && c != prev {
                return Err(Error::Schedule(format!(
                    "segment {i} has zero duration but changes the controls (discontinuity)"
                )));
            }
            prev = c;
        }
        if self.start.ising < 0.0 || self.start.gamma < 0.0 {
            return Err(Error::Schedule("negative start controls".into()));
        }
        Ok(())
    }
}
