//! Observable records and their on-disk formats.
//!
//! JSON-lines files start with one header line `{"header": {...}}` followed by
//! one [`ObservableRecord`] per line. CSV files carry the same header as
//! `# key: value` comment lines. Both are documented in `docs/formats.md`.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::observables::Measurement;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Classical,
    Pimc,
    Ed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Trajectory,
    Equilibrium,
    Hysteresis,
    Qemc,
    Ed,
}

/// Field-sweep direction: up from `H = 0` or down from `H = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn start_h(self) -> f64 {
        match self {
            Direction::Up => 0.0,
            Direction::Down => crate::model::H_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordMeta {
    pub source: Source,
    pub protocol: ProtocolKind,
    pub seed: u64,
    pub replica: u32,
    /// Reduced field `H = B/J₁` at the protocol point.
    pub h: f64,
    pub gamma: f64,
    pub beta_j1: f64,
    pub sweep: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_tau: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_tau: Option<f64>,
    /// How the σᶻ state was read out (`greedy_quench`, `majority_vote`, `none`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<String>,
}

impl RecordMeta {
    pub fn new(source: Source, protocol: ProtocolKind, seed: u64) -> Self {
        RecordMeta {
            source,
            protocol,
            seed,
            replica: 0,
            h: 0.0,
            gamma: 0.0,
            beta_j1: 0.0,
            sweep: 0,
            rate: None,
            direction: None,
            l_tau: None,
            k_tau: None,
            readout: None,
        }
    }
}

/// Spin state attached to a record for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub lattice: LatticeSpec,
    pub spins: Vec<i8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableRecord {
    pub m_over_msat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    /// `[Re ψ, Im ψ]`
    pub psi: [f64; 2],
    pub m_fim: f64,
    pub energy_per_spin: f64,
    pub local_entropy: f64,
    pub broken_chain_fraction: f64,
    pub meta: RecordMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<Snapshot>,
}

impl ObservableRecord {
    pub fn from_measurement(m: &Measurement, meta: RecordMeta) -> Self {
        ObservableRecord {
            m_over_msat: m.m_over_msat,
            chi: None,
            psi: [m.psi.re, m.psi.im],
            m_fim: m.m_fim,
            energy_per_spin: m.energy_per_spin,
            local_entropy: m.local_entropy as f64,
            broken_chain_fraction: m.broken_chain_fraction,
            meta,
            snapshot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    pub schema_version: u32,
    pub spec_hash: String,
    pub code_version: String,
    /// Job label → seed.
    pub seed_map: BTreeMap<String, u64>,
    /// Unix seconds at write time; excluded from reproducibility comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl FileHeader {
    pub fn new(spec_hash: impl Into<String>, seed_map: BTreeMap<String, u64>) -> Self {
        FileHeader {
            schema_version: RECORD_SCHEMA_VERSION,
            spec_hash: spec_hash.into(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed_map,
            timestamp: None,
        }
    }

    pub fn stamped(mut self) -> Self {
        self.timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        self
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: FileHeader,
}

/// Write a JSON-lines file: header line then one record per line.
pub fn write_jsonl(path: &Path, header: &FileHeader, records: &[ObservableRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let line = serde_json::to_string(&HeaderLine { header: header.clone() }).map_err(|e| Error::json(path, e))?;
    writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    write_record_lines(&mut w, path, records)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Append records, writing `header` first if the file does not exist yet.
pub fn append_jsonl(path: &Path, header: &FileHeader, records: &[ObservableRecord]) -> Result<()> {
    if !path.exists() {
        return write_jsonl(path, header, records);
    }
    let file = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_record_lines(&mut w, path, records)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_record_lines(w: &mut impl Write, path: &Path, records: &[ObservableRecord]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::json(path, e))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<(Option<FileHeader>, Vec<ObservableRecord>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.starts_with("{\"header\"") {
            let h: HeaderLine = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
            header = Some(h.header);
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::json(path, e))?);
    }
    Ok((header, records))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    source: Source,
    protocol: ProtocolKind,
    seed: u64,
    replica: u32,
    h: f64,
    gamma: f64,
    beta_j1: f64,
    sweep: u64,
    rate: Option<f64>,
    direction: Option<Direction>,
    l_tau: Option<u32>,
    k_tau: Option<f64>,
    readout: Option<&'a str>,
    m_over_msat: f64,
    chi: Option<f64>,
    psi_re: f64,
    psi_im: f64,
    m_fim: f64,
    energy_per_spin: f64,
    local_entropy: f64,
    broken_chain_fraction: f64,
}

/// Flat CSV view of records with the header as leading `#` comments.
pub fn write_csv(path: &Path, header: &FileHeader, records: &[ObservableRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv_header_comments(&mut w, path, header)?;
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        let m = &r.meta;
        csv.serialize(CsvRow {
            source: m.source,
            protocol: m.protocol,
            seed: m.seed,
            replica: m.replica,
            h: m.h,
            gamma: m.gamma,
            beta_j1: m.beta_j1,
            sweep: m.sweep,
            rate: m.rate,
            direction: m.direction,
            l_tau: m.l_tau,
            k_tau: m.k_tau,
            readout: m.readout.as_deref(),
            m_over_msat: r.m_over_msat,
            chi: r.chi,
            psi_re: r.psi[0],
            psi_im: r.psi[1],
            m_fim: r.m_fim,
            energy_per_spin: r.energy_per_spin,
            local_entropy: r.local_entropy,
            broken_chain_fraction: r.broken_chain_fraction,
        })
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    }
    csv.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn write_csv_header_comments(w: &mut impl Write, path: &Path, header: &FileHeader) -> Result<()> {
    let mut put = |k: &str, v: String| writeln!(w, "# {k}: {v}").map_err(|e| Error::io(path, e));
    put("schema_version", header.schema_version.to_string())?;
    put("spec_hash", header.spec_hash.clone())?;
    put("code_version", header.code_version.clone())?;
    put(
        "seed_map",
        serde_json::to_string(&header.seed_map).map_err(|e| Error::json(path, e))?,
    )?;
    if let Some(t) = header.timestamp {
        put("timestamp", t.to_string())?;
    }
    Ok(())
}
