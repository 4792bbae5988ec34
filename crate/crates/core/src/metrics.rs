//! Evaluation metrics over a finished run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::instance_io::RunReport;
use crate::model::{to_minutes, Location, Request, RequestId, Route, ServiceRecord, Vehicle, VehicleId};
use crate::scalar::Scalar;
use crate::travel::{Travel, TravelError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationBreakdown {
    pub time: i64,
    pub new_requests: usize,
    pub boarded: usize,
    pub completed: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub requests: usize,
    pub served: usize,
    pub service_rate: f64,
    /// Minutes.
    pub avg_delay: f64,
    /// False when nothing was served and `avg_delay` is a placeholder 0.
    pub delay_defined: bool,
    pub total_vmt: f64,
    pub vmt_per_vehicle: Vec<(VehicleId, f64)>,
    /// Wall-clock seconds of the optimisation loop per request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute_time_per_request: Option<f64>,
    pub per_iteration: Vec<IterationBreakdown>,
}

/// Served over total; 1 when there are no requests.
pub fn service_rate(records: &[ServiceRecord]) -> f64 {
    if records.is_empty() {
        return 1.0;
    }
    records.iter().filter(|r| r.served).count() as f64 / records.len() as f64
}

/// Mean dropoff delay in minutes and whether it is defined.
pub fn avg_delay<S: Scalar>(records: &[ServiceRecord], requests: &[Request<S>]) -> (f64, bool) {
    let earliest: BTreeMap<RequestId, i64> = requests.iter().map(|r| (r.id, r.earliest_dropoff)).collect();
    let delays: Vec<i64> = records
        .iter()
        .filter(|r| r.served)
        .filter_map(|r| Some(r.dropoff_time? - earliest.get(&r.request_id)?))
        .collect();
    if delays.is_empty() {
        return (0.0, false);
    }
    (to_minutes(delays.iter().sum::<i64>()) / delays.len() as f64, true)
}

/// Distance from the depot through every stop; no return leg.
pub fn route_vmt<S: Scalar>(depot: &Location<S>, route: &Route<S>, travel: &Travel<S>) -> Result<S, TravelError> {
    let mut total = S::zero();
    let mut at = *depot;
    for stop in &route.stops {
        total = total + travel.distance(&at, &stop.location)?;
        at = stop.location;
    }
    Ok(total)
}

pub fn vmt_per_vehicle<S: Scalar>(
    vehicles: &[Vehicle<S>],
    routes: &[Route<S>],
    travel: &Travel<S>,
) -> Result<Vec<(VehicleId, S)>, TravelError> {
    let depots: BTreeMap<VehicleId, Location<S>> = vehicles.iter().map(|v| (v.id, v.depot)).collect();
    routes
        .iter()
        .map(|r| {
            let depot = depots.get(&r.vehicle_id).copied().unwrap_or_else(|| {
                r.stops.first().map(|s| s.location).unwrap_or_else(|| Location::new(S::zero(), S::zero()))
            });
            Ok((r.vehicle_id, route_vmt(&depot, r, travel)?))
        })
        .collect()
}

pub fn total_vmt<S: Scalar>(report: &RunReport<S>, travel: &Travel<S>) -> Result<S, TravelError> {
    Ok(vmt_per_vehicle(&report.vehicles, &report.routes, travel)?.into_iter().map(|(_, d)| d).sum())
}

pub fn compute_time_per_request(total_seconds: f64, requests: usize) -> Option<f64> {
    if requests == 0 {
        None
    } else {
        Some(total_seconds / requests as f64)
    }
}

pub fn summarize<S: Scalar>(report: &RunReport<S>, travel: &Travel<S>) -> Result<MetricsSummary, TravelError> {
    let per_vehicle = vmt_per_vehicle(&report.vehicles, &report.routes, travel)?;
    let (avg, defined) = avg_delay(&report.records, &report.requests);
    Ok(MetricsSummary {
        requests: report.records.len(),
        served: report.records.iter().filter(|r| r.served).count(),
        service_rate: service_rate(&report.records),
        avg_delay: avg,
        delay_defined: defined,
        total_vmt: per_vehicle.iter().map(|(_, d)| *d).sum::<S>().as_f64(),
        vmt_per_vehicle: per_vehicle.into_iter().map(|(v, d)| (v, d.as_f64())).collect(),
        compute_time_per_request: report
            .timing
            .as_ref()
            .and_then(|t| compute_time_per_request(t.total, report.records.len())),
        per_iteration: report
            .iterations
            .iter()
            .map(|it| IterationBreakdown {
                time: it.time,
                new_requests: it.new_requests,
                boarded: it.boarded,
                completed: it.completed,
                rejected: it.rejected.len(),
            })
            .collect(),
    })
}
