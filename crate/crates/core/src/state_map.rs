//! Plaquette-resolved state maps and their SVG rendering.
//!
//! Chains sit on the triangular lattice at `x = col + row/2`,
//! `y = row·√3/2`. Every non-wrapping elementary triangle is a plaquette; its
//! three chains belong to the three sublattices, so a plaquette carries its
//! own `ψ`, whose phase sets the hue. Marker and plaquette darkness follow the
//! field-frame magnetization.

use std::fmt::Write;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::classical_mc::SpinConfiguration;
use crate::lattice::Lattice;
use crate::observables::chain_magnetization;

const SCALE: f64 = 40.0;
const MARGIN: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMark {
    pub chain: usize,
    pub x: f64,
    pub y: f64,
    /// Field-frame chain magnetization in `{−1, −½, 0, ½, 1}`.
    pub magnetization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plaquette {
    pub chains: [usize; 3],
    pub magnetization: f64,
    /// `ψ` of the plaquette from its three chain magnetizations.
    pub psi: [f64; 2],
    /// Phase of `ψ` in degrees `[0, 360)`, `None` when `ψ = 0`.
    pub hue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMap {
    pub chains: Vec<ChainMark>,
    pub plaquettes: Vec<Plaquette>,
    pub width: f64,
    pub height: f64,
}

fn position(row: usize, col: usize) -> (f64, f64) {
    (col as f64 + row as f64 / 2.0, row as f64 * 3f64.sqrt() / 2.0)
}

fn plaquette_psi(lat: &Lattice, mags: &[f64], tri: [usize; 3]) -> Complex<f64> {
    let mut m = [0.0; 3];
    for c in tri {
        m[lat.sublattice(c).index()] = mags[c];
    }
    let w = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    (Complex::new(m[0], 0.0) + w * m[1] + w * w * m[2]) / 3f64.sqrt()
}

/// Build the state map of a raw σᶻ configuration.
pub fn state_map(lat: &Lattice, raw: &SpinConfiguration) -> StateMap {
    let s = raw.field_frame();
    let mags: Vec<f64> = (0..lat.n_chains()).map(|c| chain_magnetization(lat, &s, c)).collect();
    let chains: Vec<ChainMark> = lat
        .chains()
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let (x, y) = position(ch.row, ch.col);
            ChainMark {
                chain: i,
                x,
                y,
                magnetization: mags[i],
            }
        })
        .collect();
    let spec = lat.spec();
    let mut plaquettes = Vec::new();
    for r in 0..spec.rows.saturating_sub(1) {
        for c in 0..spec.cols.saturating_sub(1) {
            let at = |rr, cc| lat.chain_at(rr, cc);
            for tri in [
                [at(r, c), at(r, c + 1), at(r + 1, c)],
                [at(r, c + 1), at(r + 1, c), at(r + 1, c + 1)],
            ] {
                if let [Some(a), Some(b), Some(d)] = tri {
                    let psi = plaquette_psi(lat, &mags, [a, b, d]);
                    let hue = (psi.norm() > 1e-9).then(|| psi.arg().to_degrees().rem_euclid(360.0));
                    plaquettes.push(Plaquette {
                        chains: [a, b, d],
                        magnetization: (mags[a] + mags[b] + mags[d]) / 3.0,
                        psi: [psi.re, psi.im],
                        hue,
                    });
                }
            }
        }
    }
    let width = chains.iter().map(|m| m.x).fold(0.0, f64::max);
    let height = chains.iter().map(|m| m.y).fold(0.0, f64::max);
    StateMap {
        chains,
        plaquettes,
        width,
        height,
    }
}

/// Lightness in percent: magnetization +1 is darkest.
fn lightness(m: f64) -> f64 {
    80.0 - 30.0 * (m + 1.0)
}

/// Deterministic SVG document for a state map.
pub fn render_svg(map: &StateMap) -> String {
    let w = map.width * SCALE + 2.0 * MARGIN;
    let h = map.height * SCALE + 2.0 * MARGIN;
    let px = |v: f64| v * SCALE + MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let pos: Vec<(f64, f64)> = map.chains.iter().map(|m| (m.x, m.y)).collect();
    let _ = writeln!(out, r#"<g id="plaquettes" stroke="none">"#);
    for p in &map.plaquettes {
        let pts: Vec<String> = p
            .chains
            .iter()
            .map(|&c| format!("{:.2},{:.2}", px(pos[c].0), px(pos[c].1)))
            .collect();
        let fill = match p.hue {
            Some(hue) => format!("hsl({hue:.1},70%,{:.1}%)", lightness(p.magnetization)),
            None => format!("hsl(0,0%,{:.1}%)", lightness(p.magnetization)),
        };
        let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}"/>"#, pts.join(" "));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g id="chains" stroke="black" stroke-width="1">"#);
    for m in &map.chains {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.1}" fill="hsl(0,0%,{:.1}%)"/>"#,
            px(m.x),
            px(m.y),
            SCALE * 0.18,
            lightness(m.magnetization)
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

/// State map plus its SVG rendering.
pub fn render_state_map(lat: &Lattice, raw: &SpinConfiguration) -> (StateMap, String) {
    let map = state_map(lat, raw);
    let svg = render_svg(&map);
    (map, svg)
}
