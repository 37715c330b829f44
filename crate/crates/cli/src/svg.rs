use std::fmt::Write;

use qforge_qec::{Counts, DemoReport};

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 180.0;
const LEFT: f64 = 40.0;
const TOP: f64 = 40.0;
const GAP: f64 = 30.0;

/// Three side-by-side outcome histograms: ideal, noisy, corrected. Bars show
/// the fraction of shots for every n-bit outcome.
pub fn demo_histograms(report: &DemoReport) -> String {
    let width = report
        .ideal
        .keys()
        .chain(report.noisy.keys())
        .chain(report.corrected.keys())
        .map(String::len)
        .max()
        .unwrap_or(1);
    let outcomes: Vec<String> = (0..1usize << width).map(|v| format!("{v:0width$b}")).collect();
    let panels: [(String, &Counts); 3] = [
        ("ideal".into(), &report.ideal),
        (format!("noisy p={}", report.p_noisy), &report.noisy),
        (format!("corrected p={}", report.p_corrected), &report.corrected),
    ];
    let total_w = LEFT + 3.0 * PANEL_W + 2.0 * GAP + 20.0;
    let total_h = TOP + PANEL_H + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" font-family="sans-serif" font-size="11">"#
    );
    for (p, (title, counts)) in panels.iter().enumerate() {
        let x0 = LEFT + p as f64 * (PANEL_W + GAP);
        let shots: u64 = counts.values().sum::<u64>().max(1);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{title}</text>"#, x0 + PANEL_W / 2.0, TOP - 16.0);
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y}" x2="{x2}" y2="{y}" stroke="#333"/>"##,
            y = TOP + PANEL_H,
            x2 = x0 + PANEL_W
        );
        let slot = PANEL_W / outcomes.len() as f64;
        for (i, o) in outcomes.iter().enumerate() {
            let frac = counts.get(o).copied().unwrap_or(0) as f64 / shots as f64;
            let h = frac * PANEL_H;
            let x = x0 + i as f64 * slot + slot * 0.15;
            let _ = writeln!(
                s,
                r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4c72b0"><title>{o}: {frac:.4}</title></rect>"##,
                TOP + PANEL_H - h,
                slot * 0.7
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="9">{o}</text>"#,
                x + slot * 0.35,
                TOP + PANEL_H + 14.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
