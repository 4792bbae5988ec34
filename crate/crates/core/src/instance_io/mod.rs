//! Problem instances: loading, benchmark adaptation and result reports.

mod csv_requests;
mod lilim;
mod report;
pub mod synthetic;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{minutes, Location, Request, Seconds, SolverConfig, Vehicle, VehicleId};
use crate::scalar::Scalar;
use crate::travel::Travel;

pub use csv_requests::{load_csv_requests, parse_csv_requests, CSV_HEADER};
pub use lilim::{load_lilim, parse_lilim, write_lilim, Benchmark, LilimNode};
pub use report::{read_report, summary_path, write_report, write_report_string, ReportFormat, RunReport, Timing};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("benchmark adaptation: {0}")]
    Adaptation(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("report: {0}")]
    Report(String),
}

impl InstanceError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        InstanceError::Io { path: path.display().to_string(), source }
    }
}

/// Partial configuration carried by an instance (benchmark header, adaptation).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigOverrides {
    pub horizon: Option<Seconds>,
    pub step: Option<Seconds>,
    pub max_wait: Option<Seconds>,
    pub max_delay: Option<Seconds>,
    pub dwell: Option<Seconds>,
    pub fleet_size: Option<usize>,
    pub capacity: Option<u32>,
}

impl ConfigOverrides {
    /// Writes every set field into `config`. The horizon is rounded up to the
    /// step grid.
    pub fn apply(&self, config: &mut SolverConfig) {
        if let Some(v) = self.step {
            config.step = v;
        }
        if let Some(v) = self.max_wait {
            config.max_wait = v;
        }
        if let Some(v) = self.max_delay {
            config.max_delay = v;
        }
        if let Some(v) = self.dwell {
            config.dwell = v;
        }
        if let Some(v) = self.fleet_size {
            config.fleet_size = v;
        }
        if let Some(v) = self.capacity {
            config.capacity = v;
        }
        if let Some(h) = self.horizon {
            config.horizon = round_up(h, config.step);
        }
    }
}

pub(crate) fn round_up(value: Seconds, step: Seconds) -> Seconds {
    if step <= 0 {
        return value;
    }
    let n = (value + step - 1).div_euclid(step);
    n.max(1) * step
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub name: String,
    pub requests: Vec<Request<S>>,
    /// Explicit fleet; when empty the engine builds `fleet_size` vehicles at `depot`.
    pub vehicles: Vec<Vehicle<S>>,
    pub depot: Location<S>,
    pub travel: Travel<S>,
    pub overrides: ConfigOverrides,
    /// Latest time of the native instance (benchmark depot due time).
    pub native_horizon: Option<Seconds>,
    pub benchmark: Option<Benchmark>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(name: impl Into<String>, requests: Vec<Request<S>>, depot: Location<S>, travel: Travel<S>) -> Self {
        Self {
            name: name.into(),
            requests,
            vehicles: Vec::new(),
            depot,
            travel,
            overrides: ConfigOverrides::default(),
            native_horizon: None,
            benchmark: None,
        }
    }

    /// The fleet a run uses under `config`.
    pub fn fleet(&self, config: &SolverConfig) -> Vec<Vehicle<S>> {
        if !self.vehicles.is_empty() {
            return self.vehicles.clone();
        }
        (0..config.fleet_size)
            .map(|i| Vehicle { id: VehicleId(i as u32), capacity: config.capacity, depot: self.depot })
            .collect()
    }

    /// Checks id uniqueness, loads and that every location resolves.
    pub fn check(&self) -> Result<(), InstanceError> {
        let mut ids = BTreeSet::new();
        for r in &self.requests {
            if !ids.insert(r.id) {
                return Err(InstanceError::Invalid(format!("duplicate request id {}", r.id.0)));
            }
            if r.load < 1 {
                return Err(InstanceError::Invalid(format!("request {} has load 0", r.id.0)));
            }
            if r.desired_pickup < 0 {
                return Err(InstanceError::Invalid(format!("request {} has a negative pickup time", r.id.0)));
            }
            if !self.travel.resolves(&r.pickup) || !self.travel.resolves(&r.dropoff) {
                return Err(InstanceError::Invalid(format!("request {} has an unresolvable location", r.id.0)));
            }
        }
        let mut vids = BTreeSet::new();
        for v in &self.vehicles {
            if !vids.insert(v.id) {
                return Err(InstanceError::Invalid(format!("duplicate vehicle id {}", v.id.0)));
            }
            if v.capacity < 1 {
                return Err(InstanceError::Invalid(format!("vehicle {} has capacity 0", v.id.0)));
            }
            if !self.travel.resolves(&v.depot) {
                return Err(InstanceError::Invalid(format!("vehicle {} depot is unresolvable", v.id.0)));
            }
        }
        if self.vehicles.is_empty() && !self.travel.resolves(&self.depot) {
            return Err(InstanceError::Invalid("depot is unresolvable".into()));
        }
        Ok(())
    }
}

/// Horizon the 30 minute windows and 5 minute dwell of the service profiles refer to.
pub const REFERENCE_HORIZON: Seconds = 720 * 60;

fn scale(h: Seconds, amount: Seconds, reference: Seconds) -> Seconds {
    let num = h as i128 * amount as i128;
    let r = reference as i128;
    ((num + r / 2) / r) as Seconds
}

/// Rescales the 12-hour parameter set onto the instance's native horizon `H`:
/// `W_max = D_max = H·30min/ref`, `dwell = t_s = H·5min/ref`, `t_max = H`.
pub fn adapt_benchmark<S: Scalar>(instance: &Instance<S>, horizon_reference: Seconds) -> Result<Instance<S>, InstanceError> {
    let h = instance
        .native_horizon
        .ok_or_else(|| InstanceError::Adaptation("instance has no native horizon".into()))?;
    if h <= 0 {
        return Err(InstanceError::Adaptation("native horizon is zero".into()));
    }
    if horizon_reference <= 0 {
        return Err(InstanceError::Adaptation("reference horizon must be positive".into()));
    }
    let window = scale(h, minutes(30.0), horizon_reference);
    let five = scale(h, minutes(5.0), horizon_reference);
    let mut out = instance.clone();
    out.overrides.max_wait = Some(window);
    out.overrides.max_delay = Some(window);
    out.overrides.dwell = Some(five);
    out.overrides.step = Some(five.max(1));
    out.overrides.horizon = Some(h);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench(h: Seconds) -> Instance<f64> {
        let mut i = Instance::new("t", Vec::new(), Location::new(0.0, 0.0), Travel::euclidean(1.0));
        i.native_horizon = Some(h);
        i
    }

    #[test]
    fn adaptation_of_reference_horizon() {
        let a = adapt_benchmark(&bench(minutes(720.0)), REFERENCE_HORIZON).unwrap();
        assert_eq!(a.overrides.max_wait, Some(minutes(30.0)));
        assert_eq!(a.overrides.max_delay, Some(minutes(30.0)));
        assert_eq!(a.overrides.dwell, Some(minutes(5.0)));
    }

    #[test]
    fn adaptation_scales_with_horizon() {
        let a = adapt_benchmark(&bench(minutes(1236.0)), REFERENCE_HORIZON).unwrap();
        // 1236 / 24 = 51.5 and 1236 / 144 = 8.583 native minutes
        assert_eq!(a.overrides.max_wait, Some(3090));
        assert_eq!(a.overrides.dwell, Some(515));
    }

    #[test]
    fn adaptation_is_idempotent() {
        let once = adapt_benchmark(&bench(minutes(1000.0)), REFERENCE_HORIZON).unwrap();
        let twice = adapt_benchmark(&once, REFERENCE_HORIZON).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        assert!(adapt_benchmark(&bench(0), REFERENCE_HORIZON).is_err());
    }

    #[test]
    fn overrides_round_horizon_to_step() {
        let o = ConfigOverrides { horizon: Some(74160), step: Some(515), ..Default::default() };
        let mut c = SolverConfig::default();
        o.apply(&mut c);
        assert_eq!(c.horizon, 74160);
        let o = ConfigOverrides { horizon: Some(1000), step: Some(300), ..Default::default() };
        o.apply(&mut c);
        assert_eq!(c.horizon, 1200);
    }
}
