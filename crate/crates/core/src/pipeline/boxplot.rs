//! Box plots as standalone SVG: median line, box from the 25th to the 75th
//! percentile, whiskers at the minimum and maximum.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{summary_stats, StdMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGroup {
    pub name: String,
    pub values: Vec<f64>,
}

pub(crate) const PLOT_TOP: f64 = 20.0;
pub(crate) const PLOT_BOTTOM: f64 = 360.0;
const SLOT: f64 = 120.0;
const LEFT: f64 = 60.0;
const BOX_W: f64 = 60.0;

/// Renders one box per group, in input order.
pub fn emit_boxplot(groups: &[BoxGroup]) -> Result<String> {
    if groups.is_empty() {
        return Err(Error::UndefinedMetric("box plot with no groups".into()));
    }
    let stats = groups
        .iter()
        .map(|g| {
            summary_stats(&g.values, StdMode::Sample)
                .map_err(|_| Error::UndefinedMetric(format!("box plot group {:?} has no values", g.name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let lo_v = stats.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let hi_v = stats.iter().map(|s| s.max).fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi_v > lo_v { 0.05 * (hi_v - lo_v) } else { 0.05 * lo_v.abs().max(1.0) };
    let (lo, hi) = (lo_v - pad, hi_v + pad);
    let y = |v: f64| PLOT_TOP + (hi - v) / (hi - lo) * (PLOT_BOTTOM - PLOT_TOP);

    let width = 2.0 * LEFT + SLOT * groups.len() as f64;
    let height = PLOT_BOTTOM + 40.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#);
    let _ = writeln!(
        s,
        r#"<g class="axis" data-lo="{lo}" data-hi="{hi}" data-top="{PLOT_TOP}" data-bottom="{PLOT_BOTTOM}" stroke="black">"#
    );
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{PLOT_TOP}" x2="{LEFT}" y2="{PLOT_BOTTOM}"/>"#);
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let ty = y(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{ty}" x2="{LEFT}" y2="{ty}"/>"#, LEFT - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ty}" font-size="10" text-anchor="end" stroke="none">{v:.3}</text>"#,
            LEFT - 8.0
        );
    }
    let _ = writeln!(s, "</g>");

    for (i, (g, st)) in groups.iter().zip(&stats).enumerate() {
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let (x0, x1) = (cx - BOX_W / 2.0, cx + BOX_W / 2.0);
        let (cap0, cap1) = (cx - BOX_W / 4.0, cx + BOX_W / 4.0);
        let _ = writeln!(s, r#"<g class="group" data-name="{}" stroke="black">"#, escape(&g.name));
        let _ = writeln!(s, r#"<line class="whisker-upper" x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#, y(st.max), y(st.p75));
        let _ = writeln!(s, r#"<line class="whisker-lower" x1="{cx}" y1="{}" x2="{cx}" y2="{}"/>"#, y(st.p25), y(st.min));
        let _ = writeln!(s, r#"<line class="cap-max" x1="{cap0}" y1="{}" x2="{cap1}" y2="{}"/>"#, y(st.max), y(st.max));
        let _ = writeln!(s, r#"<line class="cap-min" x1="{cap0}" y1="{}" x2="{cap1}" y2="{}"/>"#, y(st.min), y(st.min));
        let _ = writeln!(
            s,
            r##"<rect class="box" x="{x0}" y="{}" width="{BOX_W}" height="{}" fill="#9ecae1"/>"##,
            y(st.p75),
            y(st.p25) - y(st.p75)
        );
        let _ = writeln!(s, r#"<line class="median" x1="{x0}" y1="{}" x2="{x1}" y2="{}" stroke-width="2"/>"#, y(st.median), y(st.median));
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" font-size="12" text-anchor="middle" stroke="none">{}</text>"#,
            PLOT_BOTTOM + 20.0,
            escape(&g.name)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
