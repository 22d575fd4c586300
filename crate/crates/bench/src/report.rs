//! Machine-readable experiment reports.
//!
//! JSON reports carry a `format` tag, the library version, the selected
//! hyperparameters, a config echo, per-trial test errors in percent and their
//! mean and sample standard deviation. Wall-clock timings live in a separate
//! `timing` object so the rest of the document is reproducible byte for byte.
//!
//! CSV reports start with a `# <format> version=<v> seed=<s>` comment line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const REPORT_FORMAT: &str = "elastic-report/1";
pub const SWEEP_FORMAT: &str = "elastic-sweep/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn summarize(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedParams {
    /// Matrix rows `n`.
    pub rows: usize,
    /// Elasticity `m`.
    pub cols: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
    /// Cross-validation error of the selected point, in percent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cv_error_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub selection_secs: f64,
    pub trials_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub format: String,
    pub version: String,
    pub dataset: String,
    pub classifier: String,
    pub seed: u64,
    pub params: SelectedParams,
    pub config: serde_json::Value,
    /// Test error per trial, in percent.
    pub trials: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Serialize, Deserialize)]
struct Document<R> {
    #[serde(flatten)]
    report: R,
    timing: Timing,
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

impl ErrorReport {
    pub fn new(
        dataset: &str,
        classifier: &str,
        seed: u64,
        params: SelectedParams,
        config: serde_json::Value,
        trials: Vec<f64>,
    ) -> Self {
        let (mean, std) = summarize(&trials);
        Self {
            format: REPORT_FORMAT.into(),
            version: VERSION.into(),
            dataset: dataset.into(),
            classifier: classifier.into(),
            seed,
            params,
            config,
            trials,
            mean,
            std,
        }
    }

    /// The reproducible part of the JSON report.
    pub fn payload_json(&self) -> String {
        pretty(self)
    }

    pub fn to_json(&self, timing: &Timing) -> String {
        pretty(&Document {
            report: self,
            timing: *timing,
        })
    }

    pub fn from_json(text: &str) -> Result<(Self, Timing)> {
        let doc: Document<Self> =
            serde_json::from_str(text).map_err(|e| BenchError::Data(format!("bad report: {e}")))?;
        Ok((doc.report, doc.timing))
    }

    /// One row per trial, then a `mean` row carrying the deviation.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(&self.format, &self.version, self.seed);
        w.write_record(["dataset", "classifier", "trial", "error_pct", "std_pct"])
            .expect("in-memory write");
        for (t, e) in self.trials.iter().enumerate() {
            w.write_record([&self.dataset, &self.classifier, &t.to_string(), &e.to_string(), ""])
                .expect("in-memory write");
        }
        w.write_record([
            &self.dataset,
            &self.classifier,
            "mean",
            &self.mean.to_string(),
            &self.std.to_string(),
        ])
        .expect("in-memory write");
        finish(w)
    }
}

fn csv_writer(format: &str, version: &str, seed: u64) -> csv::Writer<Vec<u8>> {
    let header = format!("# {format} version={version} seed={seed}\n");
    csv::Writer::from_writer(header.into_bytes())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub w: f64,
    pub m: usize,
    pub eta: f64,
    pub mean_error: f64,
    pub std_error: f64,
    /// Test error per repeat, in percent.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub version: String,
    pub dataset: String,
    pub classifier: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(dataset: &str, seed: u64, config: serde_json::Value, rows: Vec<SweepRow>) -> Self {
        Self {
            format: SWEEP_FORMAT.into(),
            version: VERSION.into(),
            dataset: dataset.into(),
            classifier: "ePERC".into(),
            seed,
            config,
            rows,
        }
    }

    pub fn payload_json(&self) -> String {
        pretty(self)
    }

    pub fn to_json(&self, timing: &Timing) -> String {
        pretty(&Document {
            report: self,
            timing: *timing,
        })
    }

    /// Columns `w,m,eta,mean_error,std_error`, one row per ratio.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(&self.format, &self.version, self.seed);
        w.write_record(["w", "m", "eta", "mean_error", "std_error"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.w.to_string(),
                r.m.to_string(),
                r.eta.to_string(),
                r.mean_error.to_string(),
                r.std_error.to_string(),
            ])
            .expect("in-memory write");
        }
        finish(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(BenchError::Usage(format!("unknown format `{s}`, expected json or csv"))),
        }
    }
}

/// Write `text` to `path`, or print it when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| BenchError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ErrorReport {
        ErrorReport::new(
            "Coffee",
            "eLSVM",
            7,
            SelectedParams {
                rows: 286,
                cols: 29,
                eta: Some(0.125),
                margin: None,
                regularization: Some(1.0 / 1024.0),
                cv_error_pct: Some(3.5714285714285716),
                band: None,
            },
            serde_json::json!({"trials": 3}),
            vec![0.0, 1.0 / 3.0 * 100.0, 7.142857142857143],
        )
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(&[4.0]), (4.0, 0.0));
        let (m, s) = summarize(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn json_schema_and_round_trip() {
        let r = report();
        let timing = Timing {
            selection_secs: 1.5,
            trials_secs: 0.25,
            total_secs: 1.75,
        };
        let json = r.to_json(&timing);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["format", "version", "dataset", "classifier", "trials", "mean", "std", "params", "seed", "timing"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["format"], REPORT_FORMAT);
        assert!(v["params"].get("margin").is_none());
        let (back, t) = ErrorReport::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(t, timing);
        assert!(!r.payload_json().contains("timing"));
    }

    #[test]
    fn csv_has_a_row_per_trial_and_a_summary() {
        let csv = report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# elastic-report/1 version="));
        assert_eq!(lines[1], "dataset,classifier,trial,error_pct,std_pct");
        assert_eq!(lines.len(), 2 + 3 + 1);
        assert_eq!(lines[3], "Coffee,eLSVM,1,33.33333333333333,");
        assert!(lines[5].starts_with("Coffee,eLSVM,mean,"));
    }

    #[test]
    fn sweep_csv_columns() {
        let s = SweepReport::new(
            "x",
            1,
            serde_json::Value::Null,
            vec![SweepRow {
                w: 0.0,
                m: 1,
                eta: 0.3,
                mean_error: 12.5,
                std_error: 0.0,
                errors: vec![12.5],
            }],
        );
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# elastic-sweep/1"));
        assert_eq!(lines[1], "w,m,eta,mean_error,std_error");
        assert_eq!(lines[2], "0,1,0.3,12.5,0");
    }

    #[test]
    fn emit_reports_unwritable_paths() {
        let err = emit("x", Some(Path::new("/nonexistent-dir/x/y.json"))).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
