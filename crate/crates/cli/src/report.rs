//! Evaluation reports as a text summary plus CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use binsel_core::eval::{fraction_within, CurvePoint, EvalReport, REPORT_MARKS};
use binsel_core::HeuristicKind;

use crate::error::{CliError, CliResult};

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `rows` (header first) as CSV.
pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `rows` as CSV to any sink.
pub fn write_csv_to<W: std::io::Write>(sink: W, rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

pub fn read_csv(path: &Path) -> CliResult<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.records().collect::<Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))
}

fn row<I: IntoIterator<Item = S>, S: ToString>(cells: I) -> Vec<String> {
    cells.into_iter().map(|c| c.to_string()).collect()
}

fn curve_rows(curve: &[CurvePoint]) -> Vec<Vec<String>> {
    let mut rows = vec![row(["threshold", "fraction"])];
    rows.extend(curve.iter().map(|p| row([p.threshold, p.fraction])));
    rows
}

fn join(hs: &[HeuristicKind]) -> String {
    hs.iter().map(|h| h.as_str()).collect::<Vec<_>>().join("|")
}

pub fn summary_text(report: &EvalReport, name: &str) -> String {
    let mut s = String::new();
    let pct = |a: u64, b: u64| 100.0 * (a as f64 - b as f64) / b as f64;
    writeln!(s, "selector: {name}").unwrap();
    writeln!(s, "instances: {}", report.n).unwrap();
    writeln!(s, "accuracy: {:.4}", report.accuracy).unwrap();
    writeln!(s, "sbs: {}", report.sbs).unwrap();
    writeln!(s).unwrap();
    writeln!(s, "{:<10}{:>14}{:>14}{:>16}", "method", "fitness", "bins", "normalized bins").unwrap();
    for (label, f, b, nb) in [
        ("selector", report.total_fitness_selector, report.total_bins_selector, report.total_normalized_bins_selector),
        ("sbs", report.total_fitness_sbs, report.total_bins_sbs, report.total_normalized_bins_sbs),
        ("vbs", report.total_fitness_vbs, report.total_bins_vbs, report.total_normalized_bins_vbs),
    ] {
        writeln!(s, "{label:<10}{f:>14.4}{b:>14}{nb:>16.4}").unwrap();
    }
    writeln!(
        s,
        "bins vs sbs: {:+.2}%  bins vs vbs: {:+.2}%",
        pct(report.total_bins_selector, report.total_bins_sbs),
        pct(report.total_bins_selector, report.total_bins_vbs)
    )
    .unwrap();
    writeln!(s).unwrap();
    writeln!(s, "within x of vbs fitness (d_p):").unwrap();
    for t in REPORT_MARKS {
        writeln!(s, "  {t:.2}: {:.4}", fraction_within(&report.dp_curve, t)).unwrap();
    }
    writeln!(s, "extra bins over vbs (d_b):").unwrap();
    for t in [0.0, 1.0, 2.0] {
        writeln!(s, "  <= {t}: {:.4}", fraction_within(&report.db_curve, t)).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "confusion (rows true, columns predicted):").unwrap();
    writeln!(s, "      BF    FF    NF    WF").unwrap();
    for (h, counts) in HeuristicKind::ALL.iter().zip(&report.confusion) {
        writeln!(s, "{h:<4}{:>6}{:>6}{:>6}{:>6}", counts[0], counts[1], counts[2], counts[3]).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "paired tests (Bonferroni over {}):", report.tests.len()).unwrap();
    for t in &report.tests {
        writeln!(
            s,
            "  {} vs {} [{}]: {} p={:.4e} adjusted={:.4e}",
            t.first,
            t.second,
            t.metric.as_str(),
            t.marker(),
            t.wilcoxon.p_value,
            t.p_adjusted
        )
        .unwrap();
    }
    s
}

/// Writes `summary.txt`, `confusion.csv`, `dp_curve.csv`, `db_curve.csv`,
/// `predictions.csv` and `significance.csv` into `dir`.
pub fn write_report(dir: &Path, report: &EvalReport, name: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let summary = dir.join("summary.txt");
    std::fs::write(&summary, summary_text(report, name)).map_err(|e| CliError::io(&summary, e))?;

    let mut confusion = vec![row(["true", "BF", "FF", "NF", "WF"])];
    for (h, counts) in HeuristicKind::ALL.iter().zip(&report.confusion) {
        let mut r = vec![h.to_string()];
        r.extend(counts.iter().map(|c| c.to_string()));
        confusion.push(r);
    }
    write_csv(&dir.join("confusion.csv"), &confusion)?;
    write_csv(&dir.join("dp_curve.csv"), &curve_rows(&report.dp_curve))?;
    write_csv(&dir.join("db_curve.csv"), &curve_rows(&report.db_curve))?;

    let mut predictions = vec![row([
        "id",
        "predicted",
        "winners",
        "correct",
        "fitness_selector",
        "fitness_sbs",
        "fitness_vbs",
        "bins_selector",
        "bins_sbs",
        "bins_vbs",
        "lower_bound",
        "d_p",
        "d_b",
    ])];
    for i in &report.instances {
        predictions.push(vec![
            i.id.clone(),
            i.predicted.to_string(),
            join(&i.winners),
            i.correct.to_string(),
            i.fitness_selector.to_string(),
            i.fitness_sbs.to_string(),
            i.fitness_vbs.to_string(),
            i.bins_selector.to_string(),
            i.bins_sbs.to_string(),
            i.bins_vbs.to_string(),
            i.lower_bound.to_string(),
            i.d_p.to_string(),
            i.d_b.to_string(),
        ]);
    }
    write_csv(&dir.join("predictions.csv"), &predictions)?;

    let mut significance = vec![row([
        "first",
        "second",
        "metric",
        "median_first",
        "median_second",
        "statistic",
        "n_used",
        "method",
        "p_value",
        "p_adjusted",
        "marker",
    ])];
    for t in &report.tests {
        significance.push(vec![
            t.first.clone(),
            t.second.clone(),
            t.metric.as_str().to_string(),
            t.median_first.to_string(),
            t.median_second.to_string(),
            t.wilcoxon.statistic.to_string(),
            t.wilcoxon.n_used.to_string(),
            format!("{:?}", t.wilcoxon.method).to_lowercase(),
            t.wilcoxon.p_value.to_string(),
            t.p_adjusted.to_string(),
            t.marker(),
        ]);
    }
    write_csv(&dir.join("significance.csv"), &significance)
}
