//! Run specifications, experiment execution and output files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical_mc::SpinConfiguration;
use crate::ed::{
    enumerate_ground_manifold, perturbative_gap_check, ramp_slope_check, saturation_degeneracy, GapRow,
    GroundManifoldReport, RampReport, TriangularGraph,
};
use crate::error::{Error, Result};
use crate::lattice::build_lattice;
use crate::model::FM_RATIO;
use crate::plot::{render_curves_svg, Observable};
use crate::protocols::{
    entropy_profile, extract_phase_boundary, run_equilibrium_scan, run_hysteresis, Curve, ExperimentPlan, PhaseBoundary,
};
use crate::records::{
    read_jsonl, write_csv, write_csv_header_comments, write_jsonl, Direction, FileHeader, ObservableRecord,
    ProtocolKind, Source,
};
use crate::state_map::render_state_map;

pub const RUNSPEC_SCHEMA_VERSION: u32 = 1;
/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SPINCHAIN_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Equilibrium,
    Hysteresis,
    PhaseDiagram,
    EdSuite,
    EntropyStudy,
    Render,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Equilibrium => "equilibrium",
            ExperimentKind::Hysteresis => "hysteresis",
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::EdSuite => "ed-suite",
            ExperimentKind::EntropyStudy => "entropy-study",
            ExperimentKind::Render => "render",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Output directory; defaults to `$SPINCHAIN_OUT/<kind>-<hash>` or `runs/<kind>-<hash>`.
    pub dir: Option<PathBuf>,
    pub jsonl: bool,
    pub csv: bool,
    /// Write the wall-clock timestamp into file headers.
    pub timestamp: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            jsonl: true,
            csv: true,
            timestamp: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdSuiteSettings {
    /// Effective triangular tori `[l1, l2, shift]`.
    pub toys: Vec<[usize; 3]>,
    pub lifting_gammas: Vec<f64>,
    /// `Γ/J₀` values of the isolated-chain gap check.
    pub gap_gammas: Vec<f64>,
    /// `Γ̃` values of the saturation-ramp check on the first toy.
    pub ramp_gammas: Vec<f64>,
    pub ramp_points: usize,
    /// Side lengths of the periodic tori for ground-manifold enumeration.
    pub enumeration_sizes: Vec<usize>,
}

impl Default for EdSuiteSettings {
    fn default() -> Self {
        EdSuiteSettings {
            toys: vec![[1, 3, 2], [2, 3, 0]],
            lifting_gammas: vec![0.0, 0.01, 0.05, 0.1],
            gap_gammas: vec![0.05, 0.1, 0.2],
            ramp_gammas: vec![0.01, 0.05],
            ramp_points: 9,
            enumeration_sizes: vec![3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySettings {
    pub criterion: f64,
    pub bootstrap: usize,
}

impl Default for BoundarySettings {
    fn default() -> Self {
        BoundarySettings {
            criterion: 0.5,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub plan: ExperimentPlan,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub ed_suite: EdSuiteSettings,
    #[serde(default)]
    pub boundary: BoundarySettings,
    /// Record file to render (`render` only).
    #[serde(default)]
    pub input: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(kind: ExperimentKind, plan: ExperimentPlan) -> Self {
        RunSpec {
            schema_version: RUNSPEC_SCHEMA_VERSION,
            kind,
            plan,
            output: OutputSpec::default(),
            ed_suite: EdSuiteSettings::default(),
            boundary: BoundarySettings::default(),
            input: None,
        }
    }

    /// Parse and validate; errors name the offending path (`plan.betas[0]`).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: RunSpec = serde_path_to_error::deserialize(de).map_err(|e| Error::Spec {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunSpec::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != RUNSPEC_SCHEMA_VERSION {
            return Err(Error::Spec {
                path: "schema_version".into(),
                message: format!("expected {RUNSPEC_SCHEMA_VERSION}, got {}", self.schema_version),
            });
        }
        for (i, &b) in self.plan.betas.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::Spec {
                    path: format!("plan.betas[{i}]"),
                    message: format!("β·J1 must be positive, got {b}"),
                });
            }
        }
        if self.kind == ExperimentKind::Render && self.input.is_none() {
            return Err(Error::Spec {
                path: "input".into(),
                message: "render needs an input record file".into(),
            });
        }
        if matches!(self.kind, ExperimentKind::EdSuite | ExperimentKind::Render) {
            return Ok(());
        }
        self.plan.validate().map_err(|e| match e {
            Error::Param { field, message } => Error::Spec {
                path: format!("plan.{field}"),
                message,
            },
            Error::LatticeSpec(m) => Error::Spec {
                path: "plan.lattice".into(),
                message: m,
            },
            other => other,
        })
    }

    /// Command-line overrides of seed, replica count and output directory.
    pub fn apply_overrides(&mut self, seed: Option<u64>, replicas: Option<u32>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.plan.seed = s;
        }
        if let Some(r) = replicas {
            self.plan.replicas = r;
        }
        if let Some(o) = out {
            self.output.dir = Some(o);
        }
    }

    /// SHA-256 of the canonical JSON of the spec with the output section removed.
    pub fn spec_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSpec::default();
        let text = serde_json::to_string(&canonical).expect("run spec serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn output_dir(&self) -> PathBuf {
        if let Some(d) = &self.output.dir {
            return d.clone();
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(format!("{}-{}", self.kind.label(), &self.spec_hash()[..12]))
    }

    fn header(&self) -> FileHeader {
        let mut seeds = BTreeMap::new();
        seeds.insert("run".to_string(), self.plan.seed);
        let h = FileHeader::new(self.spec_hash(), seeds);
        if self.output.timestamp {
            h.stamped()
        } else {
            h
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyRow {
    pub toy: [usize; 3],
    pub gamma_eff: f64,
    pub degeneracy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdSuiteReport {
    pub degeneracy: Vec<DegeneracyRow>,
    pub gap: Vec<GapRow>,
    pub ramp: Vec<RampReport>,
    pub ground_manifold: Vec<GroundManifoldReport>,
}

pub fn run_ed_suite(s: &EdSuiteSettings) -> Result<EdSuiteReport> {
    let mut degeneracy = Vec::new();
    for &toy in &s.toys {
        let g = TriangularGraph::periodic(toy[0], toy[1], toy[2])?;
        for &gamma_eff in &s.lifting_gammas {
            degeneracy.push(DegeneracyRow {
                toy,
                gamma_eff,
                degeneracy: saturation_degeneracy(&g, 1.0, gamma_eff)?,
            });
        }
    }
    let gap = perturbative_gap_check(FM_RATIO, &s.gap_gammas.iter().map(|g| g * FM_RATIO).collect::<Vec<_>>())?;
    let mut ramp = Vec::new();
    if let Some(&toy) = s.toys.first() {
        let g = TriangularGraph::periodic(toy[0], toy[1], toy[2])?;
        for &gamma_eff in &s.ramp_gammas {
            ramp.push(ramp_slope_check(&g, 1.0, gamma_eff, f64::INFINITY, s.ramp_points)?);
        }
    }
    let ground_manifold = s
        .enumeration_sizes
        .iter()
        .map(|&l| enumerate_ground_manifold(l, l, true))
        .collect::<Result<_>>()?;
    Ok(EdSuiteReport {
        degeneracy,
        gap,
        ramp,
        ground_manifold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CurveRow {
    engine: crate::protocols::Engine,
    gamma: f64,
    beta_j1: f64,
    rate: Option<f64>,
    direction: Option<Direction>,
    h: f64,
    m_over_msat: f64,
    m_err: f64,
    m_fim: f64,
    m_fim_err: f64,
    chi: Option<f64>,
    local_entropy: f64,
    local_entropy_std: f64,
    broken_chain_fraction: f64,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// One row per curve point.
pub fn write_curves_csv(path: &Path, header: &FileHeader, curves: &[Curve]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_header_comments(&mut w, path, header)?;
    let mut csv = csv::Writer::from_writer(w);
    for c in curves {
        for p in &c.points {
            csv.serialize(CurveRow {
                engine: c.engine,
                gamma: c.gamma,
                beta_j1: c.beta_j1,
                rate: c.rate,
                direction: c.direction,
                h: p.h,
                m_over_msat: p.m,
                m_err: p.m_err,
                m_fim: p.m_fim,
                m_fim_err: p.m_fim_err,
                chi: p.chi,
                local_entropy: p.local_entropy,
                local_entropy_std: p.local_entropy_std,
                broken_chain_fraction: p.broken_chain_fraction,
            })
            .map_err(|e| csv_error(path, e))?;
        }
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

/// Records aggregated over replicas and samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub source: Source,
    pub protocol: ProtocolKind,
    pub gamma: f64,
    pub beta_j1: f64,
    pub rate: Option<f64>,
    pub direction: Option<Direction>,
    pub h: f64,
    pub n: usize,
    pub m_over_msat: f64,
    pub m_err: f64,
    pub m_fim: f64,
    pub m_fim_err: f64,
    pub local_entropy: f64,
    pub broken_chain_fraction: f64,
}

/// Group records by `(source, protocol, Γ, β, rate, direction, H)`.
pub fn summarize(records: &[ObservableRecord]) -> Vec<SummaryRow> {
    use crate::stats::{mean, std_err};
    type Key = (u8, u8, u64, u64, Option<u64>, Option<u8>, u64);
    let key = |r: &ObservableRecord| -> Key {
        let m = &r.meta;
        (
            m.source as u8,
            m.protocol as u8,
            m.gamma.to_bits(),
            m.beta_j1.to_bits(),
            m.rate.map(f64::to_bits),
            m.direction.map(|d| d as u8),
            m.h.to_bits(),
        )
    };
    let mut groups: BTreeMap<Key, Vec<&ObservableRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(key(r)).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_values()
        .map(|g| {
            let m = &g[0].meta;
            let ms: Vec<f64> = g.iter().map(|r| r.m_over_msat).collect();
            let fs: Vec<f64> = g.iter().map(|r| r.m_fim).collect();
            SummaryRow {
                source: m.source,
                protocol: m.protocol,
                gamma: m.gamma,
                beta_j1: m.beta_j1,
                rate: m.rate,
                direction: m.direction,
                h: m.h,
                n: g.len(),
                m_over_msat: mean(&ms),
                m_err: std_err(&ms),
                m_fim: mean(&fs),
                m_fim_err: std_err(&fs),
                local_entropy: mean(&g.iter().map(|r| r.local_entropy).collect::<Vec<_>>()),
                broken_chain_fraction: mean(&g.iter().map(|r| r.broken_chain_fraction).collect::<Vec<_>>()),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.source as u8, a.protocol as u8)
            .cmp(&(b.source as u8, b.protocol as u8))
            .then(a.gamma.total_cmp(&b.gamma))
            .then(a.beta_j1.total_cmp(&b.beta_j1))
            .then(a.rate.unwrap_or(0.0).total_cmp(&b.rate.unwrap_or(0.0)))
            .then(a.direction.map(|d| d as u8).cmp(&b.direction.map(|d| d as u8)))
            .then(a.h.total_cmp(&b.h))
    });
    rows
}

pub fn write_summary_csv(w: impl Write, rows: &[SummaryRow]) -> std::result::Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()?;
    Ok(())
}

fn write_plots(dir: &Path, curves: &[Curve], files: &mut Vec<PathBuf>) -> Result<()> {
    for (name, obs) in [
        ("m_curve.svg", Observable::Magnetization),
        ("m_fim_curve.svg", Observable::OrderParameter),
    ] {
        let p = dir.join(name);
        fs::write(&p, render_curves_svg(curves, obs)).map_err(|e| Error::io(&p, e))?;
        files.push(p);
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Render every snapshot in a record file to `snapshot_<k>.svg` in `dir`.
pub fn render_records(input: &Path, dir: &Path) -> Result<Vec<PathBuf>> {
    let (_, records) = read_jsonl(input)?;
    let mut files = Vec::new();
    for (k, r) in records.iter().filter_map(|r| r.snapshot.as_ref()).enumerate() {
        let lat = build_lattice(&r.lattice)?;
        let config = SpinConfiguration::new(&lat, r.spins.clone())?;
        let (_, svg) = render_state_map(&lat, &config);
        let path = dir.join(format!("snapshot_{k:04}.svg"));
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Execute a validated run spec and write its output files.
pub fn execute(spec: &RunSpec) -> Result<RunOutputs> {
    spec.validate()?;
    let dir = spec.output_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let header = spec.header();
    let mut files = Vec::new();
    let records_out = |records: &[ObservableRecord], files: &mut Vec<PathBuf>| -> Result<()> {
        if spec.output.jsonl {
            let p = dir.join("records.jsonl");
            write_jsonl(&p, &header, records)?;
            files.push(p);
        }
        if spec.output.csv {
            let p = dir.join("records.csv");
            write_csv(&p, &header, records)?;
            files.push(p);
        }
        Ok(())
    };
    match spec.kind {
        ExperimentKind::Equilibrium | ExperimentKind::Hysteresis => {
            let scan = if spec.kind == ExperimentKind::Hysteresis {
                run_hysteresis(&spec.plan)?
            } else {
                run_equilibrium_scan(&spec.plan)?
            };
            records_out(&scan.records, &mut files)?;
            let p = dir.join("summary.csv");
            write_curves_csv(&p, &header, &scan.curves)?;
            files.push(p);
            write_plots(&dir, &scan.curves, &mut files)?;
        }
        ExperimentKind::PhaseDiagram => {
            let scan = run_equilibrium_scan(&spec.plan)?;
            records_out(&scan.records, &mut files)?;
            let p = dir.join("summary.csv");
            write_curves_csv(&p, &header, &scan.curves)?;
            files.push(p);
            write_plots(&dir, &scan.curves, &mut files)?;
            let b: PhaseBoundary = extract_phase_boundary(
                &scan.curves,
                spec.boundary.criterion,
                spec.boundary.bootstrap,
                spec.plan.seed,
            );
            let p = dir.join("boundary.json");
            write_json(&p, &b)?;
            files.push(p);
        }
        ExperimentKind::EntropyStudy => {
            let scan = run_equilibrium_scan(&spec.plan)?;
            records_out(&scan.records, &mut files)?;
            let p = dir.join("entropy.csv");
            let file = File::create(&p).map_err(|e| Error::io(&p, e))?;
            let mut w = BufWriter::new(file);
            write_csv_header_comments(&mut w, &p, &header)?;
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["gamma", "beta_j1", "h", "local_entropy", "local_entropy_std"])
                .map_err(|e| csv_error(&p, e))?;
            for c in &scan.curves {
                for (h, e) in entropy_profile(c) {
                    csv.serialize((c.gamma, c.beta_j1, h, e.mean, e.err))
                        .map_err(|e| csv_error(&p, e))?;
                }
            }
            csv.flush().map_err(|e| Error::io(&p, e))?;
            files.push(p);
        }
        ExperimentKind::EdSuite => {
            let report = run_ed_suite(&spec.ed_suite)?;
            let p = dir.join("ed_suite.json");
            write_json(&p, &report)?;
            files.push(p);
        }
        ExperimentKind::Render => {
            let input = spec.input.as_ref().expect("validated");
            files.extend(render_records(input, &dir)?);
        }
    }
    Ok(RunOutputs { dir, files })
}
