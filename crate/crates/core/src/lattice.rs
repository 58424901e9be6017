//! The square-octagonal spin-chain lattice.
//!
//! Chains of `chain_length` ferromagnetically coupled spins sit on the sites
//! of a triangular lattice addressed by axial coordinates `(row, col)`. The six
//! chain-neighbour offsets are
//!
//! | direction | offset    | spin used on this chain |
//! |-----------|-----------|-------------------------|
//! | right     | `(0, +1)` | `right_spin` (ν = 3)    |
//! | down      | `(+1, 0)` | last spin (ν = 4)       |
//! | down-left | `(+1, -1)`| last spin (ν = 4)       |
//! | left      | `(0, -1)` | `left_spin` (ν = 2)     |
//! | up        | `(-1, 0)` | first spin (ν = 1)      |
//! | up-right  | `(-1, +1)`| first spin (ν = 1)      |
//!
//! so every adjacent chain pair shares exactly one antiferromagnetic bond,
//! chain ends carry two inter-chain bonds and interior spins one. The map is
//! translation invariant and is the single definition of ν(j, l) used
//! throughout the crate (see [`afm_spin_index`]).
//!
//! Sublattice colour of a chain is `(row - col) mod 3`. Periodic directions
//! must therefore have a length divisible by three.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Both axial directions wrap.
    FullyPeriodic,
    /// Rows wrap (periodic top/bottom), columns are open.
    Cylinder,
    Open,
}

impl Boundary {
    fn wraps_rows(self) -> bool {
        matches!(self, Boundary::FullyPeriodic | Boundary::Cylinder)
    }

    fn wraps_cols(self) -> bool {
        matches!(self, Boundary::FullyPeriodic)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
    pub boundary: Boundary,
    /// Chain-site ids `row * cols + col` left empty.
    #[serde(default)]
    pub vacancies: BTreeSet<usize>,
}

fn default_chain_length() -> usize {
    4
}

impl LatticeSpec {
    pub fn periodic(rows: usize, cols: usize) -> Self {
        LatticeSpec {
            rows,
            cols,
            chain_length: 4,
            boundary: Boundary::FullyPeriodic,
            vacancies: BTreeSet::new(),
        }
    }

    pub fn cylinder(rows: usize, cols: usize) -> Self {
        LatticeSpec {
            boundary: Boundary::Cylinder,
            ..Self::periodic(rows, cols)
        }
    }

    pub fn open(rows: usize, cols: usize) -> Self {
        LatticeSpec {
            boundary: Boundary::Open,
            ..Self::periodic(rows, cols)
        }
    }

    /// Three mutually adjacent chains: an open 2×2 patch with one corner removed.
    pub fn triangle() -> Self {
        LatticeSpec {
            vacancies: [3].into_iter().collect(),
            ..Self::open(2, 2)
        }
    }

    pub fn with_chain_length(mut self, chain_length: usize) -> Self {
        self.chain_length = chain_length;
        self
    }

    pub fn with_vacancies(mut self, vacancies: impl IntoIterator<Item = usize>) -> Self {
        self.vacancies = vacancies.into_iter().collect();
        self
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::LatticeSpec("rows and cols must be positive".into()));
        }
        if self.chain_length == 0 {
            return Err(Error::LatticeSpec("chain_length must be positive".into()));
        }
        for (wraps, len, name) in [
            (self.boundary.wraps_rows(), self.rows, "rows"),
            (self.boundary.wraps_cols(), self.cols, "cols"),
        ] {
            if wraps && len < 3 {
                return Err(Error::LatticeSpec(format!(
                    "periodic dimension {name} = {len} is below 3"
                )));
            }
            if wraps && len % 3 != 0 {
                return Err(Error::LatticeSpec(format!(
                    "periodic dimension {name} = {len} is not a multiple of 3; \
                     the three-sublattice colouring would not close"
                )));
            }
        }
        if let Some(&bad) = self.vacancies.iter().find(|&&v| v >= self.n_sites()) {
            return Err(Error::LatticeSpec(format!(
                "vacancy id {bad} is out of range (0..{})",
                self.n_sites()
            )));
        }
        Ok(())
    }

    /// Neighbour site of `(row, col)` along `offset`, honouring the boundary mode.
    fn neighbor_site(&self, row: usize, col: usize, offset: (isize, isize)) -> Option<usize> {
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        let mut r = row as isize + offset.0;
        let mut c = col as isize + offset.1;
        if self.boundary.wraps_rows() {
            r = r.rem_euclid(rows);
        }
        if self.boundary.wraps_cols() {
            c = c.rem_euclid(cols);
        }
        if r < 0 || r >= rows || c < 0 || c >= cols {
            return None;
        }
        let site = (r * cols + c) as usize;
        if self.vacancies.contains(&site) {
            None
        } else {
            Some(site)
        }
    }
}

/// The six axial offsets, forward half first.
pub const DIRECTIONS: [(isize, isize); 6] = [(0, 1), (1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1)];

/// Position inside a chain (0-based) of the spin that carries the inter-chain
/// bond along `DIRECTIONS[dir]`.
pub fn afm_spin_index(chain_length: usize, dir: usize) -> usize {
    let last = chain_length - 1;
    match dir {
        0 => chain_length.saturating_sub(2).min(last), // right
        1 | 2 => last,                                 // down, down-left
        3 => 1.min(last),                              // left
        4 | 5 => 0,                                    // up, up-right
        _ => unreachable!("direction index out of range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
    C,
}

impl Sublattice {
    pub fn index(self) -> usize {
        self as usize
    }

    fn from_coords(row: usize, col: usize) -> Self {
        match (row + 2 * col) % 3 {
            0 => Sublattice::A,
            1 => Sublattice::B,
            _ => Sublattice::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    /// Chain-site id in the underlying `rows × cols` grid.
    pub site: usize,
    pub row: usize,
    pub col: usize,
    /// Spin ids ν = 1..chain_length in order.
    pub spins: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BondKind {
    Ferro,
    Antiferro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub spin: usize,
    pub kind: BondKind,
}

/// Plain-data form of a lattice, used for JSON export/import and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDocument {
    pub spec: LatticeSpec,
    pub chains: Vec<Chain>,
    pub fm_bonds: Vec<(usize, usize)>,
    pub afm_bonds: Vec<(usize, usize)>,
    pub sublattice: Vec<Sublattice>,
    pub n_spins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Adjacent (or non-adjacent) chain pair sharing the wrong number of AFM bonds.
    ChainPairBonds {
        chains: (usize, usize),
        expected: usize,
        found: usize,
    },
    NeighborCount {
        chain: usize,
        found: usize,
    },
    FmBondCount {
        chain: usize,
        found: usize,
    },
    Coloring {
        chains: (usize, usize),
    },
    SpinDegree {
        spin: usize,
        degree: usize,
    },
    BondEndpoint {
        spin: usize,
    },
    SpinCount {
        declared: usize,
        found: usize,
    },
    ChainGeometry {
        chain: usize,
    },
}

/// Immutable lattice with adjacency caches for the samplers.
#[derive(Debug, Clone)]
pub struct Lattice {
    doc: LatticeDocument,
    tag: u64,
    spin_chain: Vec<usize>,
    spin_neighbors: Vec<Vec<Neighbor>>,
    chain_neighbors: Vec<Vec<usize>>,
    /// Per chain: (own spin, foreign spin) pairs of its AFM bonds.
    chain_afm: Vec<Vec<(usize, usize)>>,
    bulk: Vec<bool>,
}

/// Build the lattice for `spec`. Deterministic: chains are numbered in
/// row-major site order skipping vacancies, spins chain by chain.
pub fn build_lattice(spec: &LatticeSpec) -> Result<Lattice> {
    spec.validate()?;
    let len = spec.chain_length;
    let mut chain_of_site = vec![usize::MAX; spec.n_sites()];
    let mut chains = Vec::new();
    for site in 0..spec.n_sites() {
        if spec.vacancies.contains(&site) {
            continue;
        }
        let first = chains.len() * len;
        chain_of_site[site] = chains.len();
        chains.push(Chain {
            site,
            row: site / spec.cols,
            col: site % spec.cols,
            spins: (first..first + len).collect(),
        });
    }

    let fm_bonds = chains
        .iter()
        .flat_map(|ch| ch.spins.windows(2).map(|w| (w[0], w[1])))
        .collect();

    let mut afm_bonds = Vec::new();
    for ch in &chains {
        for (dir, &offset) in DIRECTIONS.iter().enumerate().take(3) {
            if let Some(other) = spec.neighbor_site(ch.row, ch.col, offset) {
                let other = &chains[chain_of_site[other]];
                let a = ch.spins[afm_spin_index(len, dir)];
                let b = other.spins[afm_spin_index(len, dir + 3)];
                afm_bonds.push((a, b));
            }
        }
    }

    let sublattice = chains
        .iter()
        .map(|ch| Sublattice::from_coords(ch.row, ch.col))
        .collect();
    let n_spins = chains.len() * len;

    Lattice::from_parts(LatticeDocument {
        spec: spec.clone(),
        chains,
        fm_bonds,
        afm_bonds,
        sublattice,
        n_spins,
    })
}

/// Chain-pair adjacency implied by the geometry of `spec`, as sorted chain-index pairs.
fn expected_adjacency(doc: &LatticeDocument) -> BTreeSet<(usize, usize)> {
    let by_site: BTreeMap<usize, usize> = doc.chains.iter().enumerate().map(|(i, ch)| (ch.site, i)).collect();
    let mut pairs = BTreeSet::new();
    for (i, ch) in doc.chains.iter().enumerate() {
        for &offset in &DIRECTIONS {
            if let Some(site) = doc.spec.neighbor_site(ch.row, ch.col, offset) {
                if let Some(&j) = by_site.get(&site) {
                    if i != j {
                        pairs.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
    }
    pairs
}

/// Check every lattice invariant; an empty list means the document is valid.
pub fn validate_lattice(doc: &LatticeDocument) -> Vec<Violation> {
    let mut out = Vec::new();
    let spins_found: usize = doc.chains.iter().map(|c| c.spins.len()).sum();
    if spins_found != doc.n_spins {
        out.push(Violation::SpinCount {
            declared: doc.n_spins,
            found: spins_found,
        });
    }
    let mut spin_chain = vec![usize::MAX; doc.n_spins.max(spins_found)];
    for (i, ch) in doc.chains.iter().enumerate() {
        if ch.row >= doc.spec.rows
            || ch.col >= doc.spec.cols
            || ch.site != ch.row * doc.spec.cols + ch.col
            || ch.spins.len() != doc.spec.chain_length
        {
            out.push(Violation::ChainGeometry { chain: i });
        }
        for &s in &ch.spins {
            if s < spin_chain.len() {
                spin_chain[s] = i;
            } else {
                out.push(Violation::BondEndpoint { spin: s });
            }
        }
    }
    let chain_of = |s: usize| spin_chain.get(s).copied().filter(|&c| c != usize::MAX);

    let mut degree = vec![0usize; spin_chain.len()];
    let mut fm_per_chain = vec![0usize; doc.chains.len()];
    for &(a, b) in &doc.fm_bonds {
        match (chain_of(a), chain_of(b)) {
            (Some(ca), Some(cb)) if ca == cb => {
                fm_per_chain[ca] += 1;
                degree[a] += 1;
                degree[b] += 1;
            }
            (Some(_), Some(_)) => out.push(Violation::BondEndpoint { spin: b }),
            (None, _) => out.push(Violation::BondEndpoint { spin: a }),
            (_, None) => out.push(Violation::BondEndpoint { spin: b }),
        }
    }
    for (chain, &found) in fm_per_chain.iter().enumerate() {
        if found != doc.spec.chain_length.saturating_sub(1) {
            out.push(Violation::FmBondCount { chain, found });
        }
    }

    let mut pair_bonds: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &(a, b) in &doc.afm_bonds {
        match (chain_of(a), chain_of(b)) {
            (Some(ca), Some(cb)) => {
                degree[a] += 1;
                degree[b] += 1;
                *pair_bonds.entry((ca.min(cb), ca.max(cb))).or_default() += 1;
            }
            (None, _) => out.push(Violation::BondEndpoint { spin: a }),
            (_, None) => out.push(Violation::BondEndpoint { spin: b }),
        }
    }
    let adjacency = expected_adjacency(doc);
    for &pair in &adjacency {
        let found = pair_bonds.get(&pair).copied().unwrap_or(0);
        if found != 1 {
            out.push(Violation::ChainPairBonds {
                chains: pair,
                expected: 1,
                found,
            });
        }
    }
    for (&pair, &found) in &pair_bonds {
        if !adjacency.contains(&pair) {
            out.push(Violation::ChainPairBonds {
                chains: pair,
                expected: 0,
                found,
            });
        }
    }

    let mut neighbor_count = vec![0usize; doc.chains.len()];
    for &(a, b) in &adjacency {
        neighbor_count[a] += 1;
        neighbor_count[b] += 1;
        if doc.sublattice.get(a) == doc.sublattice.get(b) {
            out.push(Violation::Coloring { chains: (a, b) });
        }
    }
    if doc.sublattice.len() != doc.chains.len() {
        out.push(Violation::SpinCount {
            declared: doc.chains.len(),
            found: doc.sublattice.len(),
        });
    }
    if doc.spec.boundary == Boundary::FullyPeriodic && doc.spec.vacancies.is_empty() {
        for (chain, &found) in neighbor_count.iter().enumerate() {
            if found != 6 {
                out.push(Violation::NeighborCount { chain, found });
            }
        }
    }
    if doc.spec.chain_length >= 4 {
        for (spin, &d) in degree.iter().enumerate() {
            if d > 3 {
                out.push(Violation::SpinDegree { spin, degree: d });
            }
        }
    }
    out
}

impl Lattice {
    /// Rebuild caches from a document after validating it.
    pub fn from_document(doc: LatticeDocument) -> Result<Self> {
        let violations = validate_lattice(&doc);
        if !violations.is_empty() {
            return Err(Error::LatticeInvalid(format!("{violations:?}")));
        }
        Self::from_parts(doc)
    }

    fn from_parts(doc: LatticeDocument) -> Result<Self> {
        let n = doc.n_spins;
        let mut spin_chain = vec![0; n];
        for (i, ch) in doc.chains.iter().enumerate() {
            for &s in &ch.spins {
                spin_chain[s] = i;
            }
        }
        let mut spin_neighbors = vec![Vec::new(); n];
        for &(a, b) in &doc.fm_bonds {
            spin_neighbors[a].push(Neighbor {
                spin: b,
                kind: BondKind::Ferro,
            });
            spin_neighbors[b].push(Neighbor {
                spin: a,
                kind: BondKind::Ferro,
            });
        }
        let mut chain_neighbors = vec![Vec::new(); doc.chains.len()];
        let mut chain_afm = vec![Vec::new(); doc.chains.len()];
        for &(a, b) in &doc.afm_bonds {
            spin_neighbors[a].push(Neighbor {
                spin: b,
                kind: BondKind::Antiferro,
            });
            spin_neighbors[b].push(Neighbor {
                spin: a,
                kind: BondKind::Antiferro,
            });
            let (ca, cb) = (spin_chain[a], spin_chain[b]);
            chain_neighbors[ca].push(cb);
            chain_neighbors[cb].push(ca);
            chain_afm[ca].push((a, b));
            chain_afm[cb].push((b, a));
        }
        for nb in &mut chain_neighbors {
            nb.sort_unstable();
        }
        let bulk = chain_neighbors.iter().map(|nb| nb.len() == 6).collect();
        let tag = {
            let json = serde_json::to_vec(&doc).expect("lattice document serializes");
            let digest = Sha256::digest(&json);
            u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
        };
        Ok(Lattice {
            doc,
            tag,
            spin_chain,
            spin_neighbors,
            chain_neighbors,
            chain_afm,
            bulk,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.doc.spec
    }

    pub fn document(&self) -> &LatticeDocument {
        &self.doc
    }

    /// Identity tag carried by configurations built on this lattice.
    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn n_spins(&self) -> usize {
        self.doc.n_spins
    }

    pub fn n_chains(&self) -> usize {
        self.doc.chains.len()
    }

    pub fn chain_length(&self) -> usize {
        self.doc.spec.chain_length
    }

    pub fn chains(&self) -> &[Chain] {
        &self.doc.chains
    }

    pub fn fm_bonds(&self) -> &[(usize, usize)] {
        &self.doc.fm_bonds
    }

    pub fn afm_bonds(&self) -> &[(usize, usize)] {
        &self.doc.afm_bonds
    }

    pub fn sublattice(&self, chain: usize) -> Sublattice {
        self.doc.sublattice[chain]
    }

    pub fn chain_of(&self, spin: usize) -> usize {
        self.spin_chain[spin]
    }

    pub fn neighbors(&self, spin: usize) -> &[Neighbor] {
        &self.spin_neighbors[spin]
    }

    /// Neighbouring chains, sorted by index.
    pub fn chain_neighbors(&self, chain: usize) -> &[usize] {
        &self.chain_neighbors[chain]
    }

    /// AFM bonds leaving `chain` as (own spin, foreign spin).
    pub fn chain_afm_bonds(&self, chain: usize) -> &[(usize, usize)] {
        &self.chain_afm[chain]
    }

    /// Chains with all six neighbours present (away from open edges and vacancies).
    pub fn bulk_mask(&self) -> &[bool] {
        &self.bulk
    }

    /// Chain index at grid position `(row, col)`, if not vacant.
    pub fn chain_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.doc.spec.rows || col >= self.doc.spec.cols {
            return None;
        }
        let site = row * self.doc.spec.cols + col;
        self.doc.chains.binary_search_by_key(&site, |c| c.site).ok()
    }

    /// Neighbour chain of `chain` along `DIRECTIONS[dir]`.
    pub fn chain_in_direction(&self, chain: usize, dir: usize) -> Option<usize> {
        let ch = &self.doc.chains[chain];
        let site = self.doc.spec.neighbor_site(ch.row, ch.col, DIRECTIONS[dir])?;
        self.doc.chains.binary_search_by_key(&site, |c| c.site).ok()
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_lattice(&self.doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("lattice document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LatticeDocument =
            serde_json::from_str(text).map_err(|e| Error::LatticeInvalid(format!("malformed lattice JSON: {e}")))?;
        Self::from_document(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_size_lattice_has_1764_spins() {
        let lat = build_lattice(&LatticeSpec::periodic(21, 21)).unwrap();
        assert_eq!(lat.n_spins(), 1764);
        assert_eq!(lat.fm_bonds().len(), 1323);
        assert_eq!(lat.afm_bonds().len(), 1323);
        assert!(lat.validate().is_empty());
    }

    #[test]
    fn smallest_periodic_tiling() {
        let lat = build_lattice(&LatticeSpec::periodic(3, 3)).unwrap();
        let mut colors = [0; 3];
        for c in 0..lat.n_chains() {
            assert_eq!(lat.chain_neighbors(c).len(), 6);
            let mut nb = lat.chain_neighbors(c).to_vec();
            nb.dedup();
            assert_eq!(nb.len(), 6, "neighbours of chain {c} not distinct");
            colors[lat.sublattice(c).index()] += 1;
        }
        assert_eq!(colors, [3, 3, 3]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_lattice(&LatticeSpec::periodic(2, 3)).is_err());
        assert!(build_lattice(&LatticeSpec::periodic(3, 4)).is_err());
        assert!(build_lattice(&LatticeSpec::cylinder(6, 4)).is_ok());
        assert!(build_lattice(&LatticeSpec::periodic(3, 3).with_vacancies([9])).is_err());
        assert!(build_lattice(&LatticeSpec::open(2, 2)).is_ok());
    }

    #[test]
    fn deleted_afm_bond_is_flagged() {
        let lat = build_lattice(&LatticeSpec::periodic(21, 21)).unwrap();
        let mut doc = lat.document().clone();
        let (a, b) = doc.afm_bonds.remove(17);
        let pair = {
            let (ca, cb) = (lat.chain_of(a), lat.chain_of(b));
            (ca.min(cb), ca.max(cb))
        };
        let report = validate_lattice(&doc);
        assert!(report.contains(&Violation::ChainPairBonds {
            chains: pair,
            expected: 1,
            found: 0
        }));
    }

    #[test]
    fn duplicated_afm_bond_is_flagged() {
        let lat = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let mut doc = lat.document().clone();
        let bond = doc.afm_bonds[3];
        doc.afm_bonds.push(bond);
        let (ca, cb) = (lat.chain_of(bond.0), lat.chain_of(bond.1));
        let report = validate_lattice(&doc);
        assert!(report.contains(&Violation::ChainPairBonds {
            chains: (ca.min(cb), ca.max(cb)),
            expected: 1,
            found: 2
        }));
        assert!(Lattice::from_document(doc).is_err());
    }

    #[test]
    fn triangle_toy_is_mutually_adjacent() {
        let lat = build_lattice(&LatticeSpec::triangle()).unwrap();
        assert_eq!(lat.n_chains(), 3);
        assert_eq!(lat.n_spins(), 12);
        assert_eq!(lat.afm_bonds().len(), 3);
        for c in 0..3 {
            assert_eq!(lat.chain_neighbors(c).len(), 2);
        }
        assert!(lat.validate().is_empty());
        assert!(lat.bulk_mask().iter().all(|&b| !b));
    }

    #[test]
    fn spin_degree_structure() {
        let lat = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        for ch in lat.chains() {
            let deg: Vec<_> = ch.spins.iter().map(|&s| lat.neighbors(s).len()).collect();
            assert_eq!(deg, vec![3, 3, 3, 3]);
            let afm: Vec<_> = ch
                .spins
                .iter()
                .map(|&s| {
                    lat.neighbors(s)
                        .iter()
                        .filter(|n| n.kind == BondKind::Antiferro)
                        .count()
                })
                .collect();
            assert_eq!(afm, vec![2, 1, 1, 2]);
        }
    }

    #[test]
    fn vacancy_removes_its_bonds() {
        let full = build_lattice(&LatticeSpec::periodic(6, 6)).unwrap();
        let holed = build_lattice(&LatticeSpec::periodic(6, 6).with_vacancies([14])).unwrap();
        assert_eq!(full.fm_bonds().len() - holed.fm_bonds().len(), 3);
        assert_eq!(full.afm_bonds().len() - holed.afm_bonds().len(), 6);
        assert!(holed.validate().is_empty());
        assert_eq!(holed.bulk_mask().iter().filter(|&&b| !b).count(), 6);
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let spec = LatticeSpec::cylinder(6, 5).with_vacancies([2, 11]);
        let a = build_lattice(&spec).unwrap();
        let b = build_lattice(&spec).unwrap();
        assert_eq!(a.document(), b.document());
        assert_eq!(a.tag(), b.tag());
        let back = Lattice::from_json(&a.to_json()).unwrap();
        assert_eq!(back.document(), a.document());
        assert_eq!(back.tag(), a.tag());
    }

    #[test]
    fn chain_lookup() {
        let lat = build_lattice(&LatticeSpec::open(3, 4).with_vacancies([5])).unwrap();
        assert_eq!(lat.chain_at(1, 1), None);
        let c = lat.chain_at(2, 3).unwrap();
        assert_eq!(lat.chains()[c].site, 11);
        assert_eq!(lat.chain_in_direction(c, 0), None);
        assert_eq!(lat.chain_in_direction(c, 3), lat.chain_at(2, 2));
    }
}
