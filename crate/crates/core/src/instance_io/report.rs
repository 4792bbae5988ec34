//! Run reports and their serialisation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::InstanceError;
use crate::engine::IterationLog;
use crate::metrics::MetricsSummary;
use crate::model::{Request, Route, ServiceRecord, SolverConfig, Vehicle};
use crate::scalar::Scalar;

/// Wall-clock seconds; excluded from files unless asked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub iterations: Vec<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RunReport<S> {
    pub instance: String,
    pub config: SolverConfig,
    pub requests: Vec<Request<S>>,
    pub vehicles: Vec<Vehicle<S>>,
    /// One per request, sorted by id.
    pub records: Vec<ServiceRecord>,
    /// Final committed route per vehicle.
    pub routes: Vec<Route<S>>,
    pub iterations: Vec<IterationLog>,
    pub metrics: MetricsSummary,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl<S: Scalar> RunReport<S> {
    /// Drops every wall-clock figure so two runs compare byte for byte.
    pub fn without_timing(mut self) -> Self {
        self.timing = None;
        self.metrics.compute_time_per_request = None;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format '{other}' (json or csv)")),
        }
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn rows_csv<S: Scalar>(report: &RunReport<S>) -> String {
    let mut out = String::from("request_id,served,vehicle_id,desired_pickup_s,pickup_s,earliest_dropoff_s,dropoff_s,wait_s,delay_s\n");
    for rec in &report.records {
        let req = report.requests.iter().find(|r| r.id == rec.request_id);
        let desired = req.map(|r| r.desired_pickup);
        let earliest = req.map(|r| r.earliest_dropoff);
        let wait = rec.pickup_time.zip(desired).map(|(a, b)| a - b);
        let delay = rec.dropoff_time.zip(earliest).map(|(a, b)| a - b);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rec.request_id.0,
            rec.served,
            opt(rec.vehicle_id.map(|v| v.0)),
            opt(desired),
            opt(rec.pickup_time),
            opt(earliest),
            opt(rec.dropoff_time),
            opt(wait),
            opt(delay),
        );
    }
    out
}

fn summary_csv(m: &MetricsSummary) -> String {
    let mut out = String::from("requests,served,service_rate,avg_delay_min,delay_defined,total_vmt\n");
    let _ = writeln!(
        out,
        "{},{},{:.4},{},{},{}",
        m.requests, m.served, m.service_rate, m.avg_delay, m.delay_defined, m.total_vmt
    );
    out
}

/// `<stem>.summary.csv` next to `path`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.summary.csv"))
}

/// The serialised document(s): the main file, and for CSV the summary footer.
pub fn write_report_string<S: Scalar>(report: &RunReport<S>, format: ReportFormat) -> Result<(String, Option<String>), InstanceError> {
    match format {
        ReportFormat::Json => {
            let mut text = serde_json::to_string_pretty(report).map_err(|e| InstanceError::Report(e.to_string()))?;
            text.push('\n');
            Ok((text, None))
        }
        ReportFormat::Csv => Ok((rows_csv(report), Some(summary_csv(&report.metrics)))),
    }
}

pub fn write_report<S: Scalar>(report: &RunReport<S>, path: impl AsRef<Path>, format: ReportFormat) -> Result<(), InstanceError> {
    let path = path.as_ref();
    let (main, footer) = write_report_string(report, format)?;
    std::fs::write(path, main).map_err(|e| InstanceError::io(path, e))?;
    if let Some(footer) = footer {
        let summary = summary_path(path);
        std::fs::write(&summary, footer).map_err(|e| InstanceError::io(&summary, e))?;
    }
    Ok(())
}

pub fn read_report<S: Scalar>(path: impl AsRef<Path>) -> Result<RunReport<S>, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| InstanceError::Report(e.to_string()))
}
