//! Independent checks for routes, service records and whole reports.
//!
//! Nothing here calls into the routing code, so it can be used as an oracle
//! against any stage's output.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::instance_io::RunReport;
use crate::model::{Location, RequestId, RequestTable, Route, Seconds, ServiceRecord, SolverConfig, Stop, StopKind, VehicleId};
use crate::scalar::Scalar;
use crate::travel::Travel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownRequest { vehicle: VehicleId, request: RequestId },
    UnknownVehicle(VehicleId),
    DuplicateStop { vehicle: VehicleId, request: RequestId, kind: StopKind },
    DropoffBeforePickup { vehicle: VehicleId, request: RequestId },
    MissingDropoff { vehicle: VehicleId, request: RequestId },
    WrongLocation { vehicle: VehicleId, request: RequestId, kind: StopKind },
    Capacity { vehicle: VehicleId, index: usize, load: u32, capacity: u32 },
    LoadMismatch { vehicle: VehicleId, index: usize, recorded: u32, actual: u32 },
    TimeOrder { vehicle: VehicleId, index: usize },
    Unreachable { vehicle: VehicleId, index: usize },
    EarlyPickup { request: RequestId, wait: Seconds },
    WaitExceeded { request: RequestId, wait: Seconds, limit: Seconds },
    EarlyDropoff { request: RequestId, delay: Seconds },
    DelayExceeded { request: RequestId, delay: Seconds, limit: Seconds },
    PrefixLength { vehicle: VehicleId },
    MissingRecord(RequestId),
    DuplicateRecord(RequestId),
    RecordMismatch(RequestId),
    ServedTwice(RequestId),
    CommitmentChanged { vehicle: VehicleId, iteration: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            UnknownRequest { vehicle, request } => write!(f, "{vehicle}: stop for unknown request {request}"),
            UnknownVehicle(v) => write!(f, "route for unknown vehicle {v}"),
            DuplicateStop { vehicle, request, kind } => write!(f, "{vehicle}: second {kind} of {request}"),
            DropoffBeforePickup { vehicle, request } => write!(f, "{vehicle}: {request} dropped off before pickup"),
            MissingDropoff { vehicle, request } => write!(f, "{vehicle}: {request} never dropped off"),
            WrongLocation { vehicle, request, kind } => write!(f, "{vehicle}: {kind} of {request} at the wrong location"),
            Capacity { vehicle, index, load, capacity } => {
                write!(f, "{vehicle}: load {load} exceeds capacity {capacity} at stop {index}")
            }
            LoadMismatch { vehicle, index, recorded, actual } => {
                write!(f, "{vehicle}: stop {index} records load {recorded}, actual {actual}")
            }
            TimeOrder { vehicle, index } => write!(f, "{vehicle}: stop {index} starts before the previous stop's dwell ends"),
            Unreachable { vehicle, index } => write!(f, "{vehicle}: stop {index} cannot be reached in time"),
            EarlyPickup { request, wait } => write!(f, "{request}: picked up {}s early", -wait),
            WaitExceeded { request, wait, limit } => write!(f, "{request}: wait {wait}s exceeds {limit}s"),
            EarlyDropoff { request, delay } => write!(f, "{request}: dropped off {}s before earliest", -delay),
            DelayExceeded { request, delay, limit } => write!(f, "{request}: delay {delay}s exceeds {limit}s"),
            PrefixLength { vehicle } => write!(f, "{vehicle}: committed prefix longer than route"),
            MissingRecord(r) => write!(f, "{r}: no service record"),
            DuplicateRecord(r) => write!(f, "{r}: more than one service record"),
            RecordMismatch(r) => write!(f, "{r}: service record disagrees with routes"),
            ServedTwice(r) => write!(f, "{r}: appears on more than one route"),
            CommitmentChanged { vehicle, iteration } => {
                write!(f, "{vehicle}: stops committed in iteration {iteration} were changed later")
            }
        }
    }
}

/// SHA-256 over the `(kind, request, time)` tuples of `stops`.
pub fn commitment_digest<S>(stops: &[Stop<S>]) -> String {
    let mut hasher = Sha256::new();
    for s in stops {
        let kind = match s.kind {
            StopKind::Pickup => 'P',
            StopKind::Dropoff => 'D',
        };
        hasher.update(format!("{kind}:{}:{};", s.request_id.0, s.scheduled_time).as_bytes());
    }
    let mut out = String::with_capacity(64);
    for b in hasher.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Checks one full route (starting empty at the depot at time 0).
///
/// With `travel`, also checks every stop is reachable from the previous one
/// (or from `depot`) given the dwell.
pub fn validate_route<S: Scalar>(
    route: &Route<S>,
    capacity: u32,
    requests: &RequestTable<S>,
    config: &SolverConfig,
    travel: Option<(&Travel<S>, &Location<S>)>,
) -> Vec<Violation> {
    let v = route.vehicle_id;
    let mut out = Vec::new();
    if route.committed_prefix_len > route.stops.len() {
        out.push(Violation::PrefixLength { vehicle: v });
    }
    let mut picked: BTreeSet<RequestId> = BTreeSet::new();
    let mut dropped: BTreeSet<RequestId> = BTreeSet::new();
    let mut load: u32 = 0;
    for (i, stop) in route.stops.iter().enumerate() {
        let r = stop.request_id;
        let Some(req) = requests.get(&r) else {
            out.push(Violation::UnknownRequest { vehicle: v, request: r });
            continue;
        };
        let expected = match stop.kind {
            StopKind::Pickup => req.pickup,
            StopKind::Dropoff => req.dropoff,
        };
        if expected != stop.location {
            out.push(Violation::WrongLocation { vehicle: v, request: r, kind: stop.kind });
        }
        match stop.kind {
            StopKind::Pickup => {
                if !picked.insert(r) {
                    out.push(Violation::DuplicateStop { vehicle: v, request: r, kind: stop.kind });
                }
                load += req.load;
                let wait = stop.scheduled_time - req.desired_pickup;
                if wait < 0 {
                    out.push(Violation::EarlyPickup { request: r, wait });
                } else if wait > config.max_wait {
                    out.push(Violation::WaitExceeded { request: r, wait, limit: config.max_wait });
                }
            }
            StopKind::Dropoff => {
                if !picked.contains(&r) {
                    out.push(Violation::DropoffBeforePickup { vehicle: v, request: r });
                } else if !dropped.insert(r) {
                    out.push(Violation::DuplicateStop { vehicle: v, request: r, kind: stop.kind });
                } else {
                    load = load.saturating_sub(req.load);
                }
                let delay = stop.scheduled_time - req.earliest_dropoff;
                if delay < 0 {
                    out.push(Violation::EarlyDropoff { request: r, delay });
                } else if delay > config.max_delay {
                    out.push(Violation::DelayExceeded { request: r, delay, limit: config.max_delay });
                }
            }
        }
        if load > capacity {
            out.push(Violation::Capacity { vehicle: v, index: i, load, capacity });
        }
        if stop.onboard_after != load {
            out.push(Violation::LoadMismatch { vehicle: v, index: i, recorded: stop.onboard_after, actual: load });
        }
        if i > 0 && stop.scheduled_time < route.stops[i - 1].scheduled_time + config.dwell {
            out.push(Violation::TimeOrder { vehicle: v, index: i });
        }
        if let Some((travel, depot)) = travel {
            let (from, ready) = if i == 0 {
                (*depot, 0)
            } else {
                let prev = &route.stops[i - 1];
                (prev.location, prev.scheduled_time + config.dwell)
            };
            match travel.travel_time(&from, &stop.location) {
                Ok(leg) if stop.scheduled_time >= ready + leg => {}
                _ => out.push(Violation::Unreachable { vehicle: v, index: i }),
            }
        }
    }
    for r in picked.difference(&dropped) {
        out.push(Violation::MissingDropoff { vehicle: v, request: *r });
    }
    out
}

/// Checks that records and routes tell the same story, one record per request.
pub fn validate_records<S: Scalar>(
    records: &[ServiceRecord],
    routes: &[Route<S>],
    requests: &RequestTable<S>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    // request -> (vehicle, pickup time, dropoff time) as seen on routes
    let mut seen: BTreeMap<RequestId, (VehicleId, Option<Seconds>, Option<Seconds>)> = BTreeMap::new();
    for route in routes {
        for stop in &route.stops {
            let entry = seen.entry(stop.request_id).or_insert((route.vehicle_id, None, None));
            if entry.0 != route.vehicle_id {
                out.push(Violation::ServedTwice(stop.request_id));
                continue;
            }
            match stop.kind {
                StopKind::Pickup => entry.1 = Some(stop.scheduled_time),
                StopKind::Dropoff => entry.2 = Some(stop.scheduled_time),
            }
        }
    }
    let mut by_id: BTreeMap<RequestId, &ServiceRecord> = BTreeMap::new();
    for rec in records {
        if by_id.insert(rec.request_id, rec).is_some() {
            out.push(Violation::DuplicateRecord(rec.request_id));
        }
    }
    for id in requests.keys() {
        let Some(rec) = by_id.get(id) else {
            out.push(Violation::MissingRecord(*id));
            continue;
        };
        let consistent = match seen.get(id) {
            Some(&(v, p, d)) => rec.served && rec.vehicle_id == Some(v) && rec.pickup_time == p && rec.dropoff_time == d,
            None => !rec.served,
        };
        if !consistent {
            out.push(Violation::RecordMismatch(*id));
        }
    }
    out
}

/// Every check on a report: routes, records and prefix finality of the
/// per-iteration commitment digests.
pub fn validate_report<S: Scalar>(report: &RunReport<S>, travel: Option<&Travel<S>>) -> Vec<Violation> {
    let table: RequestTable<S> = report.requests.iter().map(|r| (r.id, r.clone())).collect();
    let vehicles: BTreeMap<VehicleId, _> = report.vehicles.iter().map(|v| (v.id, v)).collect();
    let mut out = Vec::new();
    for route in &report.routes {
        let Some(vehicle) = vehicles.get(&route.vehicle_id) else {
            out.push(Violation::UnknownVehicle(route.vehicle_id));
            continue;
        };
        let t = travel.map(|t| (t, &vehicle.depot));
        out.extend(validate_route(route, vehicle.capacity, &table, &report.config, t));
    }
    out.extend(validate_records(&report.records, &report.routes, &table));

    let routes: BTreeMap<VehicleId, &Route<S>> = report.routes.iter().map(|r| (r.vehicle_id, r)).collect();
    let mut last_len: BTreeMap<VehicleId, usize> = BTreeMap::new();
    for it in &report.iterations {
        for c in &it.commitments {
            let ok = routes.get(&c.vehicle_id).is_some_and(|r| {
                c.prefix_len <= r.stops.len() && commitment_digest(&r.stops[..c.prefix_len]) == c.digest
            }) && last_len.get(&c.vehicle_id).map_or(true, |&l| l <= c.prefix_len);
            if !ok {
                out.push(Violation::CommitmentChanged { vehicle: c.vehicle_id, iteration: it.index });
            }
            last_len.insert(c.vehicle_id, c.prefix_len);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{minutes, Request};

    fn setup() -> (RequestTable<f64>, Route<f64>, SolverConfig) {
        let r = Request {
            id: RequestId(1),
            pickup: Location::new(0.0, 3.0),
            dropoff: Location::new(4.0, 3.0),
            desired_pickup: minutes(5.0),
            earliest_dropoff: minutes(9.0),
            load: 1,
        };
        let stops = vec![
            Stop { kind: StopKind::Pickup, request_id: r.id, location: r.pickup, scheduled_time: minutes(5.0), onboard_after: 1 },
            Stop { kind: StopKind::Dropoff, request_id: r.id, location: r.dropoff, scheduled_time: minutes(10.0), onboard_after: 0 },
        ];
        let table = [(r.id, r)].into_iter().collect();
        let config = SolverConfig { dwell: minutes(1.0), max_wait: minutes(2.0), max_delay: minutes(2.0), ..Default::default() };
        (table, Route { vehicle_id: VehicleId(0), stops, committed_prefix_len: 2 }, config)
    }

    #[test]
    fn valid_route_passes() {
        let (table, route, config) = setup();
        let travel = Travel::euclidean(1.0);
        let depot = Location::new(0.0, 0.0);
        assert!(validate_route(&route, 1, &table, &config, Some((&travel, &depot))).is_empty());
    }

    #[test]
    fn each_rule_is_detected() {
        let (table, route, config) = setup();
        let mut late = route.clone();
        late.stops[0].scheduled_time = minutes(8.0);
        late.stops[1].scheduled_time = minutes(13.0);
        let v = validate_route(&late, 1, &table, &config, None);
        assert!(v.iter().any(|x| matches!(x, Violation::WaitExceeded { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::DelayExceeded { .. })));

        let mut swapped = route.clone();
        swapped.stops.swap(0, 1);
        let v = validate_route(&swapped, 1, &table, &config, None);
        assert!(v.iter().any(|x| matches!(x, Violation::DropoffBeforePickup { .. })));

        assert!(validate_route(&route, 0, &table, &config, None)
            .iter()
            .any(|x| matches!(x, Violation::Capacity { .. })));

        let mut rushed = route.clone();
        rushed.stops[1].scheduled_time = minutes(5.5);
        let v = validate_route(&rushed, 1, &table, &config, None);
        assert!(v.iter().any(|x| matches!(x, Violation::TimeOrder { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::EarlyDropoff { .. })));

        let travel = Travel::euclidean(1.0);
        let far = Location::new(100.0, 0.0);
        let v = validate_route(&route, 1, &table, &config, Some((&travel, &far)));
        assert_eq!(v, vec![Violation::Unreachable { vehicle: VehicleId(0), index: 0 }]);
    }

    #[test]
    fn records_must_match_routes() {
        let (table, route, _) = setup();
        let good = vec![ServiceRecord::served(RequestId(1), VehicleId(0), minutes(5.0), minutes(10.0))];
        assert!(validate_records(&good, &[route.clone()], &table).is_empty());
        let bad = vec![ServiceRecord::served(RequestId(1), VehicleId(0), minutes(6.0), minutes(10.0))];
        assert_eq!(validate_records(&bad, &[route.clone()], &table), vec![Violation::RecordMismatch(RequestId(1))]);
        assert_eq!(validate_records(&[], &[route], &table), vec![Violation::MissingRecord(RequestId(1))]);
    }

    #[test]
    fn digest_depends_on_order_and_times() {
        let (_, route, _) = setup();
        let a = commitment_digest(&route.stops);
        let mut b = route.stops.clone();
        b.swap(0, 1);
        assert_ne!(a, commitment_digest(&b));
        let mut c = route.stops.clone();
        c[1].scheduled_time += 1;
        assert_ne!(a, commitment_digest(&c));
        assert_eq!(a.len(), 64);
    }
}
