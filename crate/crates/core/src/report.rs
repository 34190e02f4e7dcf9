//! Text summary and plot-ready CSV tables for analysis results.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::analysis::{
    byte_column, diagnostic_timings, AnalysisReport, CaptureAnalysis, Check, OverheadReport,
    StreamIds,
};
use crate::capture::Capture;
use crate::stats::{autocorrelation, density_estimate, DensityEstimate};

fn opt(r: Option<f64>) -> String {
    r.map_or_else(|| "undefined".into(), |v| format!("{v:.6}"))
}

fn csv_opt(r: Option<f64>) -> String {
    r.map_or_else(String::new, |v| format!("{v}"))
}

pub fn render_capture(out: &mut String, label: &str, a: &CaptureAnalysis) {
    let _ = writeln!(out, "[{label}] mode={}", a.mode);
    for (id, s) in &a.intervals {
        let _ = writeln!(
            out,
            "  id 0x{id:03X} intervals: n={} mean={:.6}s std={:.3e}s min={:.6}s max={:.6}s p99={:.6}s",
            s.count, s.mean, s.std, s.min, s.max, s.p99
        );
    }
    for p in &a.byte_profiles {
        let _ = writeln!(
            out,
            "  byte_{}: distinct={} entropy={:.4} bits min={} max={} constant={}",
            p.byte_index, p.distinct_count, p.shannon_entropy_bits, p.min, p.max, p.is_constant
        );
    }
    let _ = writeln!(
        out,
        "  byte_1 runs: max_ascending={} max_descending={} mean={:.3}",
        a.app_runs.max_ascending_run, a.app_runs.max_descending_run, a.app_runs.mean_run
    );
    let _ = writeln!(out, "  byte_1 autocorrelation: {}", opt(a.app_autocorrelation));
    let _ = writeln!(out, "  pearson(byte_1, byte_3): {}", opt(a.correlation(1, 3)));
    let _ = writeln!(out, "  repeated payloads: {}", a.repeated_payloads);
}

pub fn render_overhead(out: &mut String, label: &str, o: &OverheadReport) {
    let _ = writeln!(
        out,
        "[{label} overhead] freshness mean={:.3}us std={:.3} | encrypt mean={:.3}us std={:.3} | combined={:.3}us = {:.4}% of {:.0}us",
        o.freshness_us.mean,
        o.freshness_us.std,
        o.encrypt_us.mean,
        o.encrypt_us.std,
        o.combined_mean_us,
        o.percent_of_period(),
        o.period_us
    );
}

pub fn render_checks(out: &mut String, checks: &[Check]) {
    for c in checks {
        let _ = writeln!(
            out,
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

pub fn render_report(r: &AnalysisReport) -> String {
    let mut out = String::new();
    render_capture(&mut out, "encrypted", &r.encrypted);
    render_capture(&mut out, "plaintext", &r.plaintext);
    let _ = writeln!(
        out,
        "[external] r(shifted_data, byte_1) plaintext={} encrypted={}",
        opt(r.external_vs_plain_app),
        opt(r.external_vs_encrypted_app)
    );
    if let Some(o) = &r.diagnostic_overhead {
        render_overhead(&mut out, "diagnostic", o);
    }
    if let Some(o) = &r.host_overhead {
        render_overhead(&mut out, "host", o);
    }
    let _ = writeln!(out, "[deltas] encrypted - plaintext");
    for d in r.deltas() {
        let _ = writeln!(out, "  {}: {}", d.name, opt(d.value));
    }
    render_checks(&mut out, &r.checks());
    out
}

fn write(dir: &Path, name: &str, body: String) -> io::Result<()> {
    fs::write(dir.join(name), body)
}

fn density_rows(out: &mut String, label: &str, id: u32, d: &DensityEstimate) {
    match d {
        DensityEstimate::Spike { value } => {
            let _ = writeln!(out, "{label},0x{id:03X},{value},spike");
        }
        DensityEstimate::Smooth { grid, .. } => {
            for (x, y) in grid {
                let _ = writeln!(out, "{label},0x{id:03X},{x},{y}");
            }
        }
    }
}

/// Interval, byte-profile, time-series, correlation and overhead tables
/// for a single capture, one CSV per experiment.
pub fn write_capture_tables(
    dir: &Path,
    label: &str,
    capture: &Capture,
    analysis: &CaptureAnalysis,
    ids: StreamIds,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;

    let mut iv = String::from("capture,arb_id,index,interval_s\n");
    for id in capture.ids() {
        for (i, w) in capture.frames(id).windows(2).enumerate() {
            let dt = (w[1].timestamp_us - w[0].timestamp_us) as f64 / 1e6;
            let _ = writeln!(iv, "{label},0x{id:03X},{i},{dt}");
        }
    }
    write(dir, &format!("{label}_intervals.csv"), iv)?;

    let mut kde = String::from("capture,arb_id,interval_s,density\n");
    for (id, d) in &analysis.interval_density {
        density_rows(&mut kde, label, *id, d);
    }
    write(dir, &format!("{label}_interval_kde.csv"), kde)?;

    let mut prof = String::from("capture,byte,samples,distinct,entropy_bits,min,max,is_constant\n");
    for p in &analysis.byte_profiles {
        let _ = writeln!(
            prof,
            "{label},{},{},{},{},{},{},{}",
            p.byte_index, p.samples, p.distinct_count, p.shannon_entropy_bits, p.min, p.max, p.is_constant
        );
    }
    write(dir, &format!("{label}_byte_profiles.csv"), prof)?;

    let mut series = String::from("capture,index,timestamp_s,byte_1,byte_2,byte_3\n");
    let frames = capture.frames(ids.data_id);
    for (i, f) in frames.iter().enumerate() {
        let b = |k: usize| f.byte(k).map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            series,
            "{label},{i},{},{},{},{}",
            f.timestamp_us as f64 / 1e6,
            b(1),
            b(2),
            b(3)
        );
    }
    write(dir, &format!("{label}_byte_series.csv"), series)?;

    let mut pm = String::from("capture,byte_a,byte_b,r\n");
    for (a, row) in analysis.pearson_matrix.iter().enumerate() {
        for (b, r) in row.iter().enumerate() {
            let _ = writeln!(pm, "{label},{a},{b},{}", csv_opt(*r));
        }
    }
    write(dir, &format!("{label}_pearson.csv"), pm)?;

    let app: Vec<f64> = byte_column(capture, ids.data_id, 1)
        .into_iter()
        .map(f64::from)
        .collect();
    let mut acf = String::from("capture,lag,r\n");
    let max_lag = (2 * ids.lag).min(app.len().saturating_sub(2));
    for lag in 1..=max_lag {
        if let Ok(r) = autocorrelation(&app, lag) {
            let _ = writeln!(acf, "{label},{lag},{}", csv_opt(r));
        }
    }
    write(dir, &format!("{label}_autocorrelation.csv"), acf)?;

    if let Ok(t) = diagnostic_timings(capture, ids.diag_id) {
        if !t.is_empty() {
            let mut oh = String::from("capture,index,freshness_us,encrypt_us\n");
            for (i, (f, e)) in t.iter().enumerate() {
                let _ = writeln!(oh, "{label},{i},{f},{e}");
            }
            write(dir, &format!("{label}_overhead.csv"), oh)?;

            let mut ok = String::from("capture,quantity,us,density\n");
            for (name, xs) in [
                ("freshness", t.iter().map(|p| f64::from(p.0)).collect::<Vec<_>>()),
                ("encrypt", t.iter().map(|p| f64::from(p.1)).collect()),
            ] {
                match density_estimate(&xs, None) {
                    Ok(DensityEstimate::Smooth { grid, .. }) => {
                        for (x, y) in grid {
                            let _ = writeln!(ok, "{label},{name},{x},{y}");
                        }
                    }
                    Ok(DensityEstimate::Spike { value }) => {
                        let _ = writeln!(ok, "{label},{name},{value},spike");
                    }
                    Err(_) => {}
                }
            }
            write(dir, &format!("{label}_overhead_kde.csv"), ok)?;
        }
    }
    Ok(())
}

/// Writes `report.txt`, `checks.csv`, the cross-capture table and the
/// per-capture tables for both sides of a comparison.
pub fn write_report(
    dir: &Path,
    report: &AnalysisReport,
    encrypted: &Capture,
    plaintext: &Capture,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write(dir, "report.txt", render_report(report))?;

    let mut checks = String::from("check,passed,detail\n");
    for c in report.checks() {
        let _ = writeln!(checks, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
    }
    write(dir, "checks.csv", checks)?;

    let ids = report.ids;
    let ext = byte_column(plaintext, ids.data_id, 3);
    let enc1 = byte_column(encrypted, ids.data_id, 1);
    let plain1 = byte_column(plaintext, ids.data_id, 1);
    let mut x = String::from("index,measured_shifted_data,plaintext_byte_1,encrypted_byte_1\n");
    for i in 0..ext.len().min(enc1.len()).min(plain1.len()) {
        let _ = writeln!(x, "{i},{},{},{}", ext[i], plain1[i], enc1[i]);
    }
    write(dir, "external_measurement.csv", x)?;

    let mut d = String::from("metric,encrypted_minus_plaintext\n");
    for delta in report.deltas() {
        let _ = writeln!(d, "{},{}", delta.name, csv_opt(delta.value));
    }
    write(dir, "deltas.csv", d)?;

    write_capture_tables(dir, "encrypted", encrypted, &report.encrypted, ids)?;
    write_capture_tables(dir, "plaintext", plaintext, &report.plaintext, ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::semantic_report;
    use crate::node::{run_pair, RunConfig};

    #[test]
    fn report_files_are_written() {
        let cfg = RunConfig {
            duration_s: 6,
            ..RunConfig::default()
        };
        let (e, p) = run_pair(&cfg).unwrap();
        let r = semantic_report(&e, &p, StreamIds::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(dir.path(), &r, &e, &p).unwrap();
        for f in [
            "report.txt",
            "checks.csv",
            "deltas.csv",
            "external_measurement.csv",
            "encrypted_intervals.csv",
            "plaintext_byte_series.csv",
            "encrypted_pearson.csv",
            "plaintext_autocorrelation.csv",
            "encrypted_overhead.csv",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.contains("constant_masking"));
        let series = fs::read_to_string(dir.path().join("plaintext_byte_series.csv")).unwrap();
        assert_eq!(series.lines().count(), 601);
    }
}
