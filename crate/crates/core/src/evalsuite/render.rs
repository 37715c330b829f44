use std::fmt::Write;

use super::SuiteReport;
use crate::orchestrator::BatchEntry;

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

pub fn render_table(report: &SuiteReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "strategy {}  samples_n {}  seed {}", report.strategy, report.samples_n, report.seed);
    let _ = writeln!(out, "{:<14}{:>7}{:>9}{:>11}{:>10}", "category", "cases", "samples", "syntactic", "semantic");
    for (cat, s) in &report.categories {
        let f = |x: usize| if s.samples == 0 { "-".to_string() } else { pct(x as f64 / s.samples as f64) };
        let _ = writeln!(
            out,
            "{:<14}{:>7}{:>9}{:>11}{:>10}",
            cat.as_str(),
            s.cases,
            s.samples,
            f(s.syntactic_ok),
            f(s.semantic_ok)
        );
    }
    let _ = writeln!(
        out,
        "{:<14}{:>7}{:>9}{:>11}{:>10}",
        "total",
        report.cases.len(),
        report.total_samples,
        pct(report.syntactic_accuracy),
        pct(report.semantic_accuracy)
    );
    for (k, v) in &report.pass_at_k {
        let _ = writeln!(out, "pass@{k}: {:.4}", v);
    }
    for e in &report.errors {
        let _ = writeln!(out, "error in {}: {} ({})", e.task_id, e.error.message, e.error.kind);
    }
    out
}

/// One line per task of a run report.
pub fn render_run_table(entries: &[BatchEntry]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<36}{:>8}  verdict", "task", "passes");
    for e in entries {
        match e {
            BatchEntry::Report(r) => {
                let v = serde_json::to_value(r.final_verdict).expect("verdict serializes");
                let _ = writeln!(out, "{:<36}{:>8}  {}", r.task_id, r.passes_used, v.as_str().unwrap_or_default());
            }
            BatchEntry::Failed(f) => {
                let _ = writeln!(out, "{:<36}{:>8}  failed: {}", f.task_id, "-", f.error.kind);
            }
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped bar chart: syntactic and semantic accuracy per report.
pub fn render_svg(reports: &[SuiteReport]) -> String {
    const BAR: f64 = 28.0;
    const GAP: f64 = 24.0;
    const PLOT_H: f64 = 200.0;
    const LEFT: f64 = 48.0;
    const TOP: f64 = 30.0;
    let width = LEFT + reports.len() as f64 * (2.0 * BAR + GAP) + GAP + 120.0;
    let height = TOP + PLOT_H + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let base = TOP + PLOT_H;
    for tick in 0..=4 {
        let y = base - PLOT_H * tick as f64 / 4.0;
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##, width - 120.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}%</text>"#, LEFT - 4.0, y + 4.0, tick * 25);
    }
    for (i, r) in reports.iter().enumerate() {
        let x0 = LEFT + GAP + i as f64 * (2.0 * BAR + GAP);
        for (j, (value, color)) in [(r.syntactic_accuracy, "#4878a8"), (r.semantic_accuracy, "#e0803c")].into_iter().enumerate() {
            let h = PLOT_H * value.clamp(0.0, 1.0);
            let x = x0 + j as f64 * BAR;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{}" width="{}" height="{h}" fill="{color}"><title>{}</title></rect>"#,
                base - h,
                BAR - 2.0,
                pct(value)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, x0 + BAR, base + 16.0, escape(&r.strategy));
    }
    let lx = width - 110.0;
    for (j, (label, color)) in [("syntactic", "#4878a8"), ("semantic", "#e0803c")].into_iter().enumerate() {
        let y = TOP + j as f64 * 18.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{y}" width="12" height="12" fill="{color}"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, lx + 16.0, y + 10.0);
    }
    s.push_str("</svg>\n");
    s
}
