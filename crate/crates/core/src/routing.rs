//! Per-vehicle route scheduling and search.
//!
//! A route is evaluated from the vehicle's start point and time. At a pickup
//! the vehicle waits for the desired pickup time if it is early; service starts
//! at `max(arrival, desired)` for pickups and at arrival for dropoffs, and the
//! vehicle leaves `dwell` seconds after service starts.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Location, RequestId, RequestTable, Seconds, SolverConfig, Stop, StopKind, StopRef, VehicleId};
use crate::scalar::Scalar;
use crate::simulator::VehicleState;
use crate::travel::{Travel, TravelError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoutingError {
    #[error("dropoff of {0} is scheduled before its pickup")]
    Precedence(RequestId),
    #[error("stop for {0} appears more than once")]
    DuplicateStop(RequestId),
    #[error("pickup of {0} scheduled but the passenger is already on board")]
    PickupOfOnboard(RequestId),
    #[error("request {0} is not known")]
    UnknownRequest(RequestId),
    #[error("vehicle is already travelling to {0:?}; it must be the first stop")]
    EnRouteNotFirst(StopRef),
    #[error("{count} requests exceed the exhaustive search limit of {limit}")]
    TooManyRequests { count: usize, limit: usize },
    #[error(transparent)]
    Travel(#[from] TravelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRoute<S> {
    pub vehicle_id: VehicleId,
    pub stops: Vec<Stop<S>>,
    pub arrivals: Vec<Seconds>,
    pub departures: Vec<Seconds>,
    pub total_distance: S,
    pub feasible: bool,
}

impl<S: Scalar> CandidateRoute<S> {
    pub fn empty(vehicle_id: VehicleId) -> Self {
        Self {
            vehicle_id,
            stops: Vec::new(),
            arrivals: Vec::new(),
            departures: Vec::new(),
            total_distance: S::zero(),
            feasible: true,
        }
    }

    pub fn stop_refs(&self) -> Vec<StopRef> {
        self.stops.iter().map(Stop::stop_ref).collect()
    }

    /// Requests picked up on this route.
    pub fn picked_up(&self) -> BTreeSet<RequestId> {
        self.stops.iter().filter(|s| s.kind == StopKind::Pickup).map(|s| s.request_id).collect()
    }
}

/// Everything the planner needs to know about one passenger.
#[derive(Debug, Clone, Copy)]
struct Job<S> {
    id: RequestId,
    /// `None` for passengers already on board.
    pickup: Option<(Location<S>, Seconds)>,
    dropoff: Location<S>,
    pickup_deadline: Seconds,
    dropoff_deadline: Seconds,
    load: u32,
}

#[derive(Debug, Clone, Copy)]
struct Cursor<S> {
    location: Location<S>,
    departure: Seconds,
    load: u32,
    distance: S,
}

struct Visit<S> {
    cursor: Cursor<S>,
    arrival: Seconds,
    service: Seconds,
    feasible: bool,
}

struct Planner<'a, S> {
    vehicle: &'a VehicleState<S>,
    travel: &'a Travel<S>,
    config: &'a SolverConfig,
    jobs: Vec<Job<S>>,
    index: BTreeMap<RequestId, usize>,
}

impl<'a, S: Scalar> Planner<'a, S> {
    /// Jobs: onboard passengers, the en-route pickup (if any), then `extra`.
    fn new(
        vehicle: &'a VehicleState<S>,
        extra: impl IntoIterator<Item = RequestId>,
        table: &RequestTable<S>,
        travel: &'a Travel<S>,
        config: &'a SolverConfig,
    ) -> Result<Self, RoutingError> {
        let mut planner = Planner { vehicle, travel, config, jobs: Vec::new(), index: BTreeMap::new() };
        for p in &vehicle.onboard {
            planner.push(Job {
                id: p.request_id,
                pickup: None,
                dropoff: p.dropoff,
                pickup_deadline: Seconds::MAX,
                dropoff_deadline: p.earliest_dropoff + config.max_delay,
                load: p.load,
            });
        }
        let forced = vehicle.en_route.filter(|s| s.kind == StopKind::Pickup).map(|s| s.request_id);
        for id in forced.into_iter().chain(extra) {
            if planner.index.contains_key(&id) {
                continue;
            }
            let r = table.get(&id).ok_or(RoutingError::UnknownRequest(id))?;
            planner.push(Job {
                id,
                pickup: Some((r.pickup, r.desired_pickup)),
                dropoff: r.dropoff,
                pickup_deadline: r.desired_pickup + config.max_wait,
                dropoff_deadline: r.earliest_dropoff + config.max_delay,
                load: r.load,
            });
        }
        Ok(planner)
    }

    fn push(&mut self, job: Job<S>) {
        self.index.insert(job.id, self.jobs.len());
        self.jobs.push(job);
    }

    fn start(&self) -> Cursor<S> {
        Cursor {
            location: self.vehicle.location,
            departure: self.vehicle.ready_at,
            load: self.vehicle.onboard.iter().map(|p| p.load).sum(),
            distance: S::zero(),
        }
    }

    fn visit(&self, from: &Cursor<S>, job: &Job<S>, kind: StopKind) -> Result<Visit<S>, TravelError> {
        let target = match kind {
            StopKind::Pickup => job.pickup.map(|p| p.0).unwrap_or(job.dropoff),
            StopKind::Dropoff => job.dropoff,
        };
        let (time, dist) = self.travel.leg(&from.location, &target)?;
        let arrival = from.departure + time;
        let (service, load, feasible) = match kind {
            StopKind::Pickup => {
                let desired = job.pickup.map(|p| p.1).unwrap_or(arrival);
                let service = arrival.max(desired);
                let load = from.load + job.load;
                (service, load, service <= job.pickup_deadline && load <= self.vehicle.capacity)
            }
            StopKind::Dropoff => (arrival, from.load.saturating_sub(job.load), arrival <= job.dropoff_deadline),
        };
        Ok(Visit {
            cursor: Cursor {
                location: target,
                departure: service + self.config.dwell,
                load,
                distance: from.distance + dist,
            },
            arrival,
            service,
            feasible,
        })
    }

    fn check_sequence(&self, sequence: &[StopRef]) -> Result<(), RoutingError> {
        if let Some(en_route) = self.vehicle.en_route {
            if sequence.first() != Some(&en_route) {
                return Err(RoutingError::EnRouteNotFirst(en_route));
            }
        }
        let mut picked = BTreeSet::new();
        let mut dropped = BTreeSet::new();
        for s in sequence {
            let job = &self.jobs[*self.index.get(&s.request_id).ok_or(RoutingError::UnknownRequest(s.request_id))?];
            match s.kind {
                StopKind::Pickup => {
                    if job.pickup.is_none() {
                        return Err(RoutingError::PickupOfOnboard(s.request_id));
                    }
                    if !picked.insert(s.request_id) {
                        return Err(RoutingError::DuplicateStop(s.request_id));
                    }
                }
                StopKind::Dropoff => {
                    if job.pickup.is_some() && !picked.contains(&s.request_id) {
                        return Err(RoutingError::Precedence(s.request_id));
                    }
                    if !dropped.insert(s.request_id) {
                        return Err(RoutingError::DuplicateStop(s.request_id));
                    }
                }
            }
        }
        Ok(())
    }

    fn schedule(&self, sequence: &[StopRef]) -> Result<CandidateRoute<S>, RoutingError> {
        self.check_sequence(sequence)?;
        let mut cursor = self.start();
        let mut route = CandidateRoute::empty(self.vehicle.vehicle_id);
        for s in sequence {
            let job = &self.jobs[self.index[&s.request_id]];
            let visit = self.visit(&cursor, job, s.kind)?;
            route.feasible &= visit.feasible;
            route.stops.push(Stop {
                kind: s.kind,
                request_id: s.request_id,
                location: visit.cursor.location,
                scheduled_time: visit.service,
                onboard_after: visit.cursor.load,
            });
            route.arrivals.push(visit.arrival);
            route.departures.push(visit.cursor.departure);
            cursor = visit.cursor;
        }
        route.total_distance = cursor.distance;
        Ok(route)
    }

    /// Distance of a feasible sequence, `None` as soon as a stop is infeasible.
    fn feasible_distance(&self, sequence: &[StopRef]) -> Result<Option<S>, TravelError> {
        let mut cursor = self.start();
        for s in sequence {
            let visit = self.visit(&cursor, &self.jobs[self.index[&s.request_id]], s.kind)?;
            if !visit.feasible {
                return Ok(None);
            }
            cursor = visit.cursor;
        }
        Ok(Some(cursor.distance))
    }
}

/// Schedules a fixed stop order for `vehicle`.
pub fn schedule_route<S: Scalar>(
    vehicle: &VehicleState<S>,
    sequence: &[StopRef],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<CandidateRoute<S>, RoutingError> {
    let extra = sequence
        .iter()
        .filter(|s| s.kind == StopKind::Pickup)
        .map(|s| s.request_id)
        .filter(|id| !vehicle.is_onboard(*id));
    let planner = Planner::new(vehicle, extra, table, travel, config)?;
    planner.schedule(sequence)
}

struct Search<'p, 'a, S> {
    planner: &'p Planner<'a, S>,
    /// 0 = needs pickup, 1 = needs dropoff, 2 = done.
    progress: Vec<u8>,
    sequence: Vec<StopRef>,
    best: Option<(S, Vec<StopRef>)>,
}

impl<S: Scalar> Search<'_, '_, S> {
    fn run(&mut self, cursor: Cursor<S>, remaining: usize) -> Result<(), TravelError> {
        if let Some((best, _)) = &self.best {
            // Later sequences are lexicographically larger, so equal cost never wins.
            if cursor.distance >= *best {
                return Ok(());
            }
        }
        if remaining == 0 {
            self.best = Some((cursor.distance, self.sequence.clone()));
            return Ok(());
        }
        let forced = if self.sequence.is_empty() { self.planner.vehicle.en_route } else { None };
        // jobs are visited in request-id order so candidates come out lexicographically
        for (&id, &j) in &self.planner.index {
            let kind = match self.progress[j] {
                0 => StopKind::Pickup,
                1 => StopKind::Dropoff,
                _ => continue,
            };
            let stop = StopRef { request_id: id, kind };
            if forced.is_some_and(|f| f != stop) {
                continue;
            }
            let visit = self.planner.visit(&cursor, &self.planner.jobs[j], kind)?;
            if !visit.feasible {
                continue;
            }
            self.progress[j] += 1;
            self.sequence.push(stop);
            self.run(visit.cursor, remaining - 1)?;
            self.sequence.pop();
            self.progress[j] -= 1;
        }
        Ok(())
    }
}

/// Minimum-distance feasible order over all precedence-valid permutations of
/// the vehicle's pending stops plus `requests`. Ties go to the
/// lexicographically smallest `(request id, kind)` sequence.
pub fn best_route_exhaustive<S: Scalar>(
    vehicle: &VehicleState<S>,
    requests: &[RequestId],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<Option<CandidateRoute<S>>, RoutingError> {
    if requests.len() > config.exhaustive_route_limit {
        return Err(RoutingError::TooManyRequests { count: requests.len(), limit: config.exhaustive_route_limit });
    }
    if let Some(id) = requests.iter().find(|id| vehicle.is_onboard(**id)) {
        return Err(RoutingError::PickupOfOnboard(*id));
    }
    let planner = Planner::new(vehicle, requests.iter().copied(), table, travel, config)?;
    let progress: Vec<u8> = planner.jobs.iter().map(|j| if j.pickup.is_some() { 0 } else { 1 }).collect();
    let remaining = progress.iter().map(|&p| 2 - p as usize).sum();
    let mut search = Search { planner: &planner, progress, sequence: Vec::with_capacity(remaining), best: None };
    search.run(planner.start(), remaining)?;
    match search.best {
        None => Ok(None),
        Some((_, sequence)) => planner.schedule(&sequence).map(Some),
    }
}

/// Cheapest feasible insertion of `request` into `base`, keeping the base order.
pub fn best_route_insertion<S: Scalar>(
    vehicle: &VehicleState<S>,
    base: &CandidateRoute<S>,
    request: RequestId,
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<Option<CandidateRoute<S>>, RoutingError> {
    let base_refs = base.stop_refs();
    if base_refs.iter().any(|s| s.request_id == request) || vehicle.is_onboard(request) {
        return Err(RoutingError::DuplicateStop(request));
    }
    let extra = base
        .stops
        .iter()
        .filter(|s| s.kind == StopKind::Pickup)
        .map(|s| s.request_id)
        .chain(std::iter::once(request));
    let planner = Planner::new(vehicle, extra, table, travel, config)?;

    let first_free = usize::from(vehicle.en_route.is_some() && base_refs.first() == vehicle.en_route.as_ref());
    let n = base_refs.len();
    let mut best: Option<(S, Vec<StopRef>)> = None;
    let mut candidate = Vec::with_capacity(n + 2);
    for i in first_free..=n {
        for j in i..=n {
            candidate.clear();
            candidate.extend_from_slice(&base_refs[..i]);
            candidate.push(StopRef::pickup(request));
            candidate.extend_from_slice(&base_refs[i..j]);
            candidate.push(StopRef::dropoff(request));
            candidate.extend_from_slice(&base_refs[j..]);
            if let Some(dist) = planner.feasible_distance(&candidate)? {
                if best.as_ref().map_or(true, |(b, _)| dist < *b) {
                    best = Some((dist, candidate.clone()));
                }
            }
        }
    }
    match best {
        None => Ok(None),
        Some((_, sequence)) => planner.schedule(&sequence).map(Some),
    }
}

/// Route serving only what the vehicle is already committed to: onboard
/// dropoffs and an en-route pickup. Uses exhaustive search while small,
/// otherwise the previously planned order (which stays feasible as the plan
/// executes).
pub fn base_route<S: Scalar>(
    vehicle: &VehicleState<S>,
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<Option<CandidateRoute<S>>, RoutingError> {
    if !vehicle.has_commitments() {
        return Ok(Some(schedule_route(vehicle, &[], table, travel, config)?));
    }
    let committed = vehicle.onboard.len() + usize::from(vehicle.en_route_pickup().is_some());
    let mut best = None;
    if committed <= config.exhaustive_route_limit {
        best = best_route_exhaustive(vehicle, &[], table, travel, config)?;
    }
    let forced: BTreeSet<RequestId> =
        vehicle.onboard.iter().map(|p| p.request_id).chain(vehicle.en_route_pickup()).collect();
    let planned: Vec<StopRef> = vehicle.planned.iter().copied().filter(|s| forced.contains(&s.request_id)).collect();
    if !planned.is_empty() {
        if let Ok(route) = schedule_route(vehicle, &planned, table, travel, config) {
            let covers_all = route.stops.iter().filter(|s| s.kind == StopKind::Dropoff).count() == forced.len();
            let better = best.as_ref().map_or(true, |b: &CandidateRoute<S>| route.total_distance < b.total_distance);
            if route.feasible && covers_all && better {
                best = Some(route);
            }
        }
    }
    Ok(best)
}
