//! Grouped bar charts written directly as SVG text: one group per thread
//! count, one bar per target, heights linear in the metric mean.

use std::fmt::Write;

use super::{format_sig, Metric, ReportDocument, ReportError, ReportFormat};
use crate::harness::BenchReport;

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
];
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PLOT_HEIGHT: f64 = 300.0;
const BAR_WIDTH: f64 = 24.0;
const GROUP_GAP: f64 = 28.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_svg_bars(
    report: &BenchReport,
    metric: Metric,
    model: &str,
) -> Result<ReportDocument, ReportError> {
    let spec = &report.spec;
    if !spec.models.iter().any(|m| m.display_name() == model) {
        return Err(ReportError::ModelNotInReport(model.to_string()));
    }
    let targets = &spec.targets;
    let threads = &spec.thread_counts;
    let value = |target: &str, t: usize| -> Option<f64> {
        report
            .cells
            .iter()
            .find(|c| c.id.model == model && c.id.target == target && c.id.threads == t)
            .and_then(|c| metric.summary(c))
            .map(|s| s.mean)
    };
    let max = targets
        .iter()
        .flat_map(|tg| threads.iter().filter_map(|&t| value(&tg.label, t)))
        .fold(0.0f64, f64::max);

    let group_width = targets.len() as f64 * BAR_WIDTH;
    let plot_width = threads.len() as f64 * group_width + (threads.len() + 1) as f64 * GROUP_GAP;
    let width = MARGIN_LEFT + plot_width + MARGIN_RIGHT;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let base_y = MARGIN_TOP + PLOT_HEIGHT;
    let scale = if max > 0.0 { PLOT_HEIGHT / max } else { 0.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}: {}</text>"#,
        MARGIN_LEFT + plot_width / 2.0,
        metric.title(),
        escape(model)
    );

    // y axis, ticks and gridlines
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT:.1}" y1="{MARGIN_TOP:.1}" x2="{MARGIN_LEFT:.1}" y2="{base_y:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN_LEFT:.1}" y1="{base_y:.1}" x2="{:.1}" y2="{base_y:.1}" stroke="black"/>"#,
        MARGIN_LEFT + plot_width
    );
    for i in 0..=TICKS {
        let v = max * i as f64 / TICKS as f64;
        let y = base_y - v * scale;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{y:.3}" x2="{:.1}" y2="{y:.3}" stroke="black"/>"#,
            MARGIN_LEFT - 4.0,
            MARGIN_LEFT
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.3}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            format_sig(v, 4)
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">{} ({})</text>"#,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        metric.name(),
        escape(metric.unit())
    );

    for (g, &t) in threads.iter().enumerate() {
        let gx = MARGIN_LEFT + GROUP_GAP + g as f64 * (group_width + GROUP_GAP);
        for (i, target) in targets.iter().enumerate() {
            let Some(v) = value(&target.label, t) else {
                continue;
            };
            let h = v * scale;
            let _ = writeln!(
                s,
                r#"<rect class="bar" x="{:.3}" y="{:.3}" width="{BAR_WIDTH:.1}" height="{h:.3}" fill="{}"><title>{}, {t} threads: {}</title></rect>"#,
                gx + i as f64 * BAR_WIDTH,
                base_y - h,
                PALETTE[i % PALETTE.len()],
                escape(&target.label),
                format_sig(v, 6)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t} thread{}</text>"#,
            gx + group_width / 2.0,
            base_y + 18.0,
            if t == 1 { "" } else { "s" }
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">threads</text>"#,
        MARGIN_LEFT + plot_width / 2.0,
        base_y + 42.0
    );

    let lx = MARGIN_LEFT + plot_width + 20.0;
    for (i, target) in targets.iter().enumerate() {
        let ly = MARGIN_TOP + i as f64 * 20.0;
        let _ = writeln!(
            s,
            r#"<rect class="legend" x="{lx:.1}" y="{ly:.1}" width="12" height="12" fill="{}"/>"#,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 18.0,
            ly + 10.0,
            escape(&target.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(ReportDocument {
        format: ReportFormat::Svg,
        payload: s.into_bytes(),
    })
}

/// Heights of the bars in document order, parsed back out of the SVG.
pub fn bar_heights(svg: &str) -> Vec<f64> {
    svg.lines()
        .filter(|l| l.starts_with(r#"<rect class="bar""#))
        .filter_map(|l| {
            let rest = &l[l.find(" height=\"")? + 9..];
            rest[..rest.find('"')?].parse().ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::test_support::{cell, report};

    #[test]
    fn three_targets_one_group() {
        let cells = vec![
            cell("a", "m.bin", 1, 10.0),
            cell("b", "m.bin", 1, 20.0),
            cell("c", "m.bin", 1, 30.0),
        ];
        let r = report(&["a", "b", "c"], &["m.bin"], &[1], cells);
        let doc = render_svg_bars(&r, Metric::TokPerS, "m.bin").unwrap();
        assert_eq!(doc.as_str().matches(r#"class="bar""#).count(), 3);
        assert!(doc.as_str().contains("tok_per_s (tokens/s)"));
    }

    #[test]
    fn equal_means_equal_heights() {
        let cells = vec![
            cell("a", "m.bin", 1, 7.0),
            cell("b", "m.bin", 1, 7.0),
            cell("a", "m.bin", 2, 7.0),
        ];
        let r = report(&["a", "b"], &["m.bin"], &[1, 2], cells);
        let h = bar_heights(render_svg_bars(&r, Metric::TokPerS, "m.bin").unwrap().as_str());
        assert_eq!(h.len(), 3);
        assert!(h.iter().all(|&x| x == h[0]));
    }

    #[test]
    fn doubling_a_mean_doubles_relative_height() {
        let base = vec![
            cell("a", "m.bin", 1, 10.0),
            cell("b", "m.bin", 1, 40.0),
            cell("c", "m.bin", 1, 20.0),
        ];
        let mut doubled = base.clone();
        doubled[0] = cell("a", "m.bin", 1, 20.0);
        let render = |cells| {
            let r = report(&["a", "b", "c"], &["m.bin"], &[1], cells);
            bar_heights(render_svg_bars(&r, Metric::TokPerS, "m.bin").unwrap().as_str())
        };
        let (h0, h1) = (render(base), render(doubled));
        let ratio = |h: &[f64]| h[0] / h[2];
        assert!((ratio(&h1) / ratio(&h0) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn unknown_model() {
        let r = report(&["a"], &["m.bin"], &[1], vec![]);
        assert!(matches!(
            render_svg_bars(&r, Metric::TokPerS, "other.bin"),
            Err(ReportError::ModelNotInReport(_))
        ));
    }

    #[test]
    fn labels_are_escaped() {
        let r = report(&["a<b>&"], &["m.bin"], &[1], vec![cell("a<b>&", "m.bin", 1, 1.0)]);
        let svg = render_svg_bars(&r, Metric::TokPerS, "m.bin").unwrap();
        assert!(svg.as_str().contains("a&lt;b&gt;&amp;"));
    }
}
