use super::{format_sig, Metric, ReportDocument, ReportError, ReportFormat};
use crate::harness::BenchReport;

pub const CSV_HEADER: [&str; 9] = [
    "target", "model", "threads", "metric", "mean", "stddev", "min", "max", "median",
];

/// One row per (cell, metric), sorted by model, target, threads, metric name.
/// Numbers carry 6 significant digits. Failed cells and absent metrics are omitted.
pub fn to_csv(report: &BenchReport) -> Result<ReportDocument, ReportError> {
    let mut rows = Vec::new();
    for cell in &report.cells {
        for metric in Metric::ALL {
            if let Some(s) = metric.summary(cell) {
                rows.push((&cell.id, metric.name(), s));
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.0.model, &a.0.target, a.0.threads, a.1).cmp(&(&b.0.model, &b.0.target, b.0.threads, b.1))
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for (id, metric, s) in rows {
        w.write_record([
            id.target.clone(),
            id.model.clone(),
            id.threads.to_string(),
            metric.to_string(),
            format_sig(s.mean, 6),
            format_sig(s.stddev, 6),
            format_sig(s.min, 6),
            format_sig(s.max, 6),
            format_sig(s.median, 6),
        ])?;
    }
    let payload = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(ReportDocument {
        format: ReportFormat::Csv,
        payload,
    })
}
