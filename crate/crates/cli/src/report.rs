use std::io::Write;

use anyhow::Result;

/// CSV column names, in order.
pub const HEADER: [&str; 7] = ["algo", "trial", "relative_error", "fit", "wall_time_s", "compression_ratio_inv", "passes"];

/// Metrics of one decomposition run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub algo: String,
    pub trial: usize,
    pub relative_error: f64,
    pub fit: f64,
    pub wall_time_s: f64,
    pub compression_ratio_inv: f64,
    pub passes: usize,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Writes per-trial rows in trial order, then a `mean` and a `std` row per
/// algorithm (sample standard deviation), algorithms in first-seen order.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    let mut algos: Vec<&str> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algo.as_str()) {
            algos.push(&r.algo);
        }
    }
    for algo in &algos {
        let mut mine: Vec<&MetricsRow> = rows.iter().filter(|r| r.algo == *algo).collect();
        mine.sort_by_key(|r| r.trial);
        for r in &mine {
            w.write_record([
                r.algo.clone(),
                r.trial.to_string(),
                fmt_f64(r.relative_error),
                fmt_f64(r.fit),
                fmt_f64(r.wall_time_s),
                fmt_f64(r.compression_ratio_inv),
                r.passes.to_string(),
            ])?;
        }
        let columns: [Vec<f64>; 5] = [
            mine.iter().map(|r| r.relative_error).collect(),
            mine.iter().map(|r| r.fit).collect(),
            mine.iter().map(|r| r.wall_time_s).collect(),
            mine.iter().map(|r| r.compression_ratio_inv).collect(),
            mine.iter().map(|r| r.passes as f64).collect(),
        ];
        let stats: Vec<(f64, f64)> = columns.iter().map(|c| mean_std(c)).collect();
        for (label, pick) in [("mean", 0usize), ("std", 1)] {
            let mut record = vec![algo.to_string(), label.to_string()];
            record.extend(stats.iter().map(|s| fmt_f64(if pick == 0 { s.0 } else { s.1 })));
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}
