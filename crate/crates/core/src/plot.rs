//! Minimal SVG line plots of protocol curves.

use std::fmt::Write;

use crate::protocols::{Curve, CurvePoint};

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Magnetization,
    OrderParameter,
    Susceptibility,
    LocalEntropy,
}

impl Observable {
    fn value(self, p: &CurvePoint) -> Option<f64> {
        match self {
            Observable::Magnetization => Some(p.m),
            Observable::OrderParameter => Some(p.m_fim),
            Observable::Susceptibility => p.chi,
            Observable::LocalEntropy => Some(p.local_entropy),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Observable::Magnetization => "M/M_sat",
            Observable::OrderParameter => "m_FIM",
            Observable::Susceptibility => "chi",
            Observable::LocalEntropy => "local entropy",
        }
    }
}

fn legend(c: &Curve) -> String {
    let mut s = format!("G={} bJ1={}", c.gamma, c.beta_j1);
    if let Some(r) = c.rate {
        let _ = write!(s, " rate={r:e}");
    }
    if let Some(d) = c.direction {
        let _ = write!(s, " {d:?}");
    }
    s.to_lowercase()
}

/// One polyline per curve, `H` on the horizontal axis.
pub fn render_curves_svg(curves: &[Curve], obs: Observable) -> String {
    let series: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| c.points.iter().filter_map(|p| obs.value(p).map(|y| (p.h, y))).collect())
        .collect();
    let all = series.iter().flatten();
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, y)| {
        (a.min(y), b.max(y))
    });
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo, hi) = (lo - 0.5, hi + 0.5);
    }
    let (xlo, xhi) = (0.0, 2.0);
    let px = |x: f64| PAD + (x - xlo) / (xhi - xlo) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{:.1},{:.1} H{:.1} M{:.1},{:.1} V{:.1}" stroke="black" fill="none"/>"#,
        PAD,
        H - PAD,
        W - PAD,
        PAD,
        H - PAD,
        PAD
    );
    for k in 0..=4 {
        let x = xlo + (xhi - xlo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.1}</text>"#,
            px(x),
            H - PAD + 16.0
        );
        let y = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.2}</text>"#,
            PAD - 4.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">H</text>"#,
        W / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.1}" transform="rotate(-90 12 {:.1})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        obs.label()
    );
    for (i, (c, s)) in curves.iter().zip(&series).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="{color}" fill="none"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            PAD + 8.0,
            PAD + 14.0 * i as f64,
            legend(c)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::Engine;

    #[test]
    fn one_polyline_per_curve() {
        let p = |h: f64, m: f64| CurvePoint {
            h,
            m,
            m_err: 0.0,
            m_fim: 0.0,
            m_fim_err: 0.0,
            local_entropy: 0.0,
            local_entropy_std: 0.0,
            broken_chain_fraction: 0.0,
            chi: None,
            replica_m: vec![],
            replica_m_fim: vec![],
        };
        let c = Curve {
            engine: Engine::Classical,
            gamma: 0.0,
            beta_j1: 4.5,
            rate: None,
            direction: None,
            family: None,
            points: vec![p(0.0, 0.0), p(1.0, 1.0 / 3.0), p(2.0, 1.0)],
        };
        let svg = render_curves_svg(&[c.clone(), c], Observable::Magnetization);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.ends_with("</svg>\n"));
    }
}
