//! Static SVG rendering of sweep results.
//!
//! One panel per `(p, β)`; each procedure is a polyline of success frequency
//! against `ρ`, and a dashed vertical line marks `ρ = μ_min / μ_ref` for each
//! procedure whose scale is known. Output depends only on the result, so the
//! same result always renders to the same bytes.

use std::fmt::Write as _;

use crate::estimators::Procedure;
use crate::experiment::SweepResult;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const COLUMNS: usize = 2;

fn color(procedure: Procedure) -> &'static str {
    match procedure {
        Procedure::Lasso => "#1f77b4",
        Procedure::GroupL2 => "#d62728",
        Procedure::GroupLinf => "#2ca02c",
        Procedure::Union => "#9467bd",
    }
}

/// The distinct `(p, β)` pairs in first-appearance order.
fn panels(result: &SweepResult) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    let pairs = result
        .lower_bound_mu
        .iter()
        .map(|l| (l.p, l.beta))
        .chain(result.cells.iter().map(|c| (c.p, c.beta)));
    for pair in pairs {
        if !out.contains(&pair) {
            out.push(pair);
        }
    }
    out
}

pub fn render_svg(result: &SweepResult) -> String {
    let panels = panels(result);
    let rows = panels.len().div_ceil(COLUMNS).max(1);
    let width = PANEL_W * COLUMNS as f64;
    let height = PANEL_H * rows as f64 + 30.0;
    let x_max = result.cells.iter().map(|c| c.rho).fold(2.0_f64, f64::max);

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();

    for (idx, &(p, beta)) in panels.iter().enumerate() {
        let ox = (idx % COLUMNS) as f64 * PANEL_W;
        let oy = (idx / COLUMNS) as f64 * PANEL_H;
        let (x0, x1) = (ox + MARGIN_L, ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (oy + PANEL_H - MARGIN_B, oy + MARGIN_T);
        let sx = |rho: f64| x0 + (x1 - x0) * rho / x_max;
        let sy = |ps: f64| y0 + (y1 - y0) * ps;

        writeln!(w, r#"<g id="panel-p{p}-beta{beta}">"#).unwrap();
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">p = {p}, β = {beta}</text>"#,
            (x0 + x1) / 2.0,
            oy + MARGIN_T - 10.0
        )
        .unwrap();
        writeln!(
            w,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        )
        .unwrap();
        for tick in 0..=4 {
            let ps = f64::from(tick) / 4.0;
            writeln!(
                w,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{ps:.2}</text>"#,
                x0 - 4.0,
                sy(ps) + 4.0
            )
            .unwrap();
        }
        let ticks = (x_max / 0.5).floor() as u32;
        for tick in 0..=ticks {
            let rho = f64::from(tick) * 0.5;
            writeln!(
                w,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{rho:.1}</text>"#,
                sx(rho),
                y0 + 14.0
            )
            .unwrap();
        }
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ρ</text>"#,
            (x0 + x1) / 2.0,
            y0 + 30.0
        )
        .unwrap();

        let bound = result.lower_bound_mu.iter().find(|l| l.p == p && l.beta == beta);
        let mut legend_row = 0;
        for procedure in Procedure::ALL {
            let points: Vec<String> = result
                .cells_of(procedure, p, beta)
                .map(|c| format!("{:.2},{:.2}", sx(c.rho), sy(c.p_success)))
                .collect();
            if points.is_empty() {
                continue;
            }
            let col = color(procedure);
            if let (Some(b), Some(scale)) = (bound, result.mu_scale(procedure, p, beta)) {
                let rho = b.mu_min / scale;
                if rho.is_finite() && rho <= x_max {
                    writeln!(
                        w,
                        r#"<line x1="{0:.2}" y1="{y0:.2}" x2="{0:.2}" y2="{y1:.2}" stroke="{col}" stroke-dasharray="4 3"/>"#,
                        sx(rho)
                    )
                    .unwrap();
                }
            }
            writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"/>"#,
                points.join(" ")
            )
            .unwrap();
            let ly = y1 + 12.0 + 13.0 * f64::from(legend_row);
            writeln!(
                w,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{col}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{procedure}</text>"#,
                x0 + 6.0,
                x0 + 22.0,
                x0 + 26.0,
                ly + 4.0
            )
            .unwrap();
            legend_row += 1;
        }
        writeln!(w, "</g>").unwrap();
    }
    if !result.skipped.is_empty() {
        let names: Vec<String> = result
            .skipped
            .iter()
            .map(|s| format!("{} (p = {}, β = {})", s.procedure, s.p, s.beta))
            .collect();
        writeln!(
            w,
            r#"<text x="10" y="{:.2}">skipped: {}</text>"#,
            height - 10.0,
            names.join("; ")
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{run_sweep, SweepConfig};

    #[test]
    fn rendering_is_deterministic_and_has_one_panel_per_pair() {
        let mut cfg = SweepConfig::new(vec![16], vec![0.0, 0.5]).unwrap();
        cfg.n_runs = 5;
        cfg.rho_grid = vec![0.5, 1.0, 2.0];
        let r = run_sweep(&cfg).unwrap();
        let a = render_svg(&r);
        assert_eq!(a, render_svg(&r));
        assert_eq!(a.matches("<g id=\"panel-").count(), 2);
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_result_renders() {
        let r = SweepResult::empty(crate::experiment::SignalScale::PerProcedure);
        let svg = render_svg(&r);
        assert!(svg.contains("</svg>"));
        assert!(!svg.contains("<polyline"));
    }
}
