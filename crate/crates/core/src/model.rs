//! Domain types shared by every stage of the solver.
//!
//! All times are integer seconds ([`Seconds`]). Parameters quoted in minutes are
//! converted on ingest with [`minutes`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::travel::{Travel, TravelError};

/// Point in time or duration, in whole seconds.
pub type Seconds = i64;

/// Converts minutes to seconds, rounding to the nearest second.
pub fn minutes(value: f64) -> Seconds {
    (value * 60.0).round() as Seconds
}

/// Seconds expressed in (fractional) minutes, for reporting.
pub fn to_minutes(value: Seconds) -> f64 {
    value as f64 / 60.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A planar point, optionally bound to a row of a travel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location<S> {
    pub x: S,
    pub y: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
}

impl<S: Scalar> Location<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y, node: None }
    }

    pub fn at_node(x: S, y: S, node: usize) -> Self {
        Self { x, y, node: Some(node) }
    }

    pub fn node(node: usize) -> Self {
        Self { x: S::zero(), y: S::zero(), node: Some(node) }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite_value() && self.y.is_finite_value()
    }
}

/// A request as read from an input file, before its earliest dropoff is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestSpec<S> {
    pub id: RequestId,
    pub pickup: Location<S>,
    pub dropoff: Location<S>,
    pub desired_pickup: Seconds,
    pub load: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request<S> {
    pub id: RequestId,
    pub pickup: Location<S>,
    pub dropoff: Location<S>,
    pub desired_pickup: Seconds,
    /// Desired pickup plus the direct travel time.
    pub earliest_dropoff: Seconds,
    pub load: u32,
}

impl<S: Scalar> Request<S> {
    /// Latest admissible pickup time under `max_wait`.
    pub fn pickup_deadline(&self, max_wait: Seconds) -> Seconds {
        self.desired_pickup + max_wait
    }

    pub fn dropoff_deadline(&self, max_delay: Seconds) -> Seconds {
        self.earliest_dropoff + max_delay
    }
}

pub fn derive_earliest_dropoff<S: Scalar>(
    spec: RequestSpec<S>,
    travel: &Travel<S>,
) -> Result<Request<S>, TravelError> {
    let direct = travel.travel_time(&spec.pickup, &spec.dropoff)?;
    Ok(Request {
        id: spec.id,
        pickup: spec.pickup,
        dropoff: spec.dropoff,
        desired_pickup: spec.desired_pickup,
        earliest_dropoff: spec.desired_pickup + direct,
        load: spec.load,
    })
}

/// Requests keyed by id.
pub type RequestTable<S> = BTreeMap<RequestId, Request<S>>;

pub fn request_table<S: Scalar>(requests: &[Request<S>]) -> RequestTable<S> {
    requests.iter().map(|r| (r.id, r.clone())).collect()
}

/// Outcome for one request at the end of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub request_id: RequestId,
    pub served: bool,
    pub vehicle_id: Option<VehicleId>,
    pub pickup_time: Option<Seconds>,
    pub dropoff_time: Option<Seconds>,
}

impl ServiceRecord {
    pub fn unserved(request_id: RequestId) -> Self {
        Self { request_id, served: false, vehicle_id: None, pickup_time: None, dropoff_time: None }
    }

    pub fn served(request_id: RequestId, vehicle_id: VehicleId, pickup: Seconds, dropoff: Seconds) -> Self {
        Self {
            request_id,
            served: true,
            vehicle_id: Some(vehicle_id),
            pickup_time: Some(pickup),
            dropoff_time: Some(dropoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle<S> {
    pub id: VehicleId,
    pub capacity: u32,
    pub depot: Location<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StopKind {
    Pickup,
    Dropoff,
}

impl fmt::Display for StopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopKind::Pickup => "pickup",
            StopKind::Dropoff => "dropoff",
        })
    }
}

/// A stop reference without schedule, as used when enumerating orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StopRef {
    pub request_id: RequestId,
    pub kind: StopKind,
}

impl StopRef {
    pub fn pickup(request_id: RequestId) -> Self {
        Self { request_id, kind: StopKind::Pickup }
    }

    pub fn dropoff(request_id: RequestId) -> Self {
        Self { request_id, kind: StopKind::Dropoff }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop<S> {
    pub kind: StopKind,
    pub request_id: RequestId,
    pub location: Location<S>,
    /// Service start: actual pickup or dropoff time.
    pub scheduled_time: Seconds,
    pub onboard_after: u32,
}

impl<S> Stop<S> {
    pub fn stop_ref(&self) -> StopRef {
        StopRef { request_id: self.request_id, kind: self.kind }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route<S> {
    pub vehicle_id: VehicleId,
    pub stops: Vec<Stop<S>>,
    pub committed_prefix_len: usize,
}

impl<S> Route<S> {
    pub fn empty(vehicle_id: VehicleId) -> Self {
        Self { vehicle_id, stops: Vec::new(), committed_prefix_len: 0 }
    }
}

/// How the unserved-request penalty `c_k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PenaltyPolicy {
    /// One plus the sum over vehicles of their most expensive edge.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// `t_max`.
    pub horizon: Seconds,
    /// `t_s`, the committed slice per iteration.
    pub step: Seconds,
    /// `c^RH`; the window spans `(rh_factor + 1) * step`.
    pub rh_factor: u32,
    pub max_wait: Seconds,
    pub max_delay: Seconds,
    pub dwell: Seconds,
    pub fleet_size: usize,
    pub capacity: u32,
    pub penalty: PenaltyPolicy,
    pub exhaustive_route_limit: usize,
    /// Largest trip considered in the RTV graph; vehicle capacity when unset.
    pub trip_size_limit: Option<usize>,
    pub ilp_node_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: minutes(720.0),
            step: minutes(15.0),
            rh_factor: 2,
            max_wait: minutes(30.0),
            max_delay: minutes(30.0),
            dwell: minutes(10.0),
            fleet_size: 5,
            capacity: 8,
            penalty: PenaltyPolicy::Auto,
            exhaustive_route_limit: 4,
            trip_size_limit: None,
            ilp_node_budget: 2_000_000,
        }
    }
}

impl SolverConfig {
    /// `T_w`.
    pub fn window_size(&self) -> Seconds {
        (self.rh_factor as Seconds + 1) * self.step
    }

    /// Lookahead beyond the current iteration time, `c^RH * t_s`.
    pub fn lookahead(&self) -> Seconds {
        self.rh_factor as Seconds * self.step
    }

    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut out = Vec::new();
        if self.step <= 0 {
            out.push(ConfigViolation::StepNotPositive);
        }
        if self.horizon <= 0 {
            out.push(ConfigViolation::HorizonNotPositive);
        } else if self.step > 0 && self.horizon % self.step != 0 {
            out.push(ConfigViolation::HorizonNotMultipleOfStep);
        }
        for (name, value) in [("max_wait", self.max_wait), ("max_delay", self.max_delay), ("dwell", self.dwell)] {
            if value < 0 {
                out.push(ConfigViolation::NegativeDuration(name));
            }
        }
        if self.capacity < 1 {
            out.push(ConfigViolation::CapacityBelowOne);
        }
        if self.exhaustive_route_limit < 1 {
            out.push(ConfigViolation::ExhaustiveLimitBelowOne);
        }
        if self.trip_size_limit == Some(0) {
            out.push(ConfigViolation::TripLimitBelowOne);
        }
        if self.ilp_node_budget == 0 {
            out.push(ConfigViolation::ZeroNodeBudget);
        }
        if let PenaltyPolicy::Fixed(p) = self.penalty {
            if !(p.is_finite() && p > 0.0) {
                out.push(ConfigViolation::BadPenalty);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigViolation {
    StepNotPositive,
    HorizonNotPositive,
    HorizonNotMultipleOfStep,
    NegativeDuration(&'static str),
    CapacityBelowOne,
    ExhaustiveLimitBelowOne,
    TripLimitBelowOne,
    ZeroNodeBudget,
    BadPenalty,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigViolation::StepNotPositive => f.write_str("t_s > 0"),
            ConfigViolation::HorizonNotPositive => f.write_str("t_max > 0"),
            ConfigViolation::HorizonNotMultipleOfStep => f.write_str("t_max multiple of t_s"),
            ConfigViolation::NegativeDuration(name) => write!(f, "{name} >= 0"),
            ConfigViolation::CapacityBelowOne => f.write_str("capacity >= 1"),
            ConfigViolation::ExhaustiveLimitBelowOne => f.write_str("exhaustive_route_limit >= 1"),
            ConfigViolation::TripLimitBelowOne => f.write_str("trip_size_limit >= 1"),
            ConfigViolation::ZeroNodeBudget => f.write_str("ilp_node_budget >= 1"),
            ConfigViolation::BadPenalty => f.write_str("fixed penalty finite and > 0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid solver configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
pub struct ConfigError(pub Vec<ConfigViolation>);

pub fn validate_config(config: &SolverConfig) -> Result<(), ConfigError> {
    let violations = config.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ConfigError(violations))
    }
}
