//! Discrete-event execution of assigned routes between iteration times.
//!
//! Vehicles leave a stop as late as their schedule allows, so a vehicle that
//! would arrive early waits at its previous stop instead. A vehicle that has
//! already left for its next stop when a step ends keeps driving there: that
//! stop becomes `en_route` and must stay first in every later plan, but it is
//! not committed until its service starts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    Location, RequestId, RequestTable, Route, Seconds, ServiceRecord, SolverConfig, Stop, StopKind, StopRef, Vehicle,
    VehicleId,
};
use crate::routing::{schedule_route, CandidateRoute, RoutingError};
use crate::scalar::Scalar;
use crate::travel::{Travel, TravelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnboardPassenger<S> {
    pub request_id: RequestId,
    pub dropoff: Location<S>,
    pub earliest_dropoff: Seconds,
    pub load: u32,
    pub pickup_time: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState<S> {
    pub vehicle_id: VehicleId,
    pub capacity: u32,
    /// Last visited stop, or the depot.
    pub location: Location<S>,
    /// Earliest departure from `location`.
    pub ready_at: Seconds,
    /// `P_{v,t}`, sorted by request id.
    pub onboard: Vec<OnboardPassenger<S>>,
    pub en_route: Option<StopRef>,
    /// Executed stops; only ever grows.
    pub committed: Route<S>,
    /// Unexecuted stops of the last assigned route.
    pub planned: Vec<StopRef>,
}

impl<S: Scalar> VehicleState<S> {
    pub fn idle(vehicle_id: VehicleId, capacity: u32, location: Location<S>, ready_at: Seconds) -> Self {
        Self {
            vehicle_id,
            capacity,
            location,
            ready_at,
            onboard: Vec::new(),
            en_route: None,
            committed: Route::empty(vehicle_id),
            planned: Vec::new(),
        }
    }

    pub fn at_depot(vehicle: &Vehicle<S>) -> Self {
        Self::idle(vehicle.id, vehicle.capacity, vehicle.depot, 0)
    }

    pub fn is_onboard(&self, id: RequestId) -> bool {
        self.onboard.binary_search_by_key(&id, |p| p.request_id).is_ok()
    }

    pub fn load(&self) -> u32 {
        self.onboard.iter().map(|p| p.load).sum()
    }

    /// Pickup the vehicle is already driving to, if any.
    pub fn en_route_pickup(&self) -> Option<RequestId> {
        self.en_route.filter(|s| s.kind == StopKind::Pickup).map(|s| s.request_id)
    }

    /// Onboard passengers or an en-route pickup.
    pub fn has_commitments(&self) -> bool {
        !self.onboard.is_empty() || self.en_route.is_some()
    }

    /// Ids the vehicle must serve whatever it is assigned.
    pub fn forced_requests(&self) -> Vec<RequestId> {
        let mut ids: Vec<RequestId> = self.onboard.iter().map(|p| p.request_id).chain(self.en_route_pickup()).collect();
        ids.sort_unstable();
        ids
    }

    /// A copy that cannot start before `t`.
    pub fn available_from(&self, t: Seconds) -> Self {
        let mut state = self.clone();
        if state.en_route.is_none() {
            state.ready_at = state.ready_at.max(t);
        }
        state
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Depart,
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: Seconds,
    pub vehicle_id: VehicleId,
    pub kind: EventKind,
    pub request_id: Option<RequestId>,
}

impl fmt::Display for SimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Depart => "depart",
            EventKind::Pickup => "pickup",
            EventKind::Dropoff => "dropoff",
        };
        match self.request_id {
            Some(r) => write!(f, "{} {} {} {}", self.time, self.vehicle_id.0, kind, r.0),
            None => write!(f, "{} {} {} -", self.time, self.vehicle_id.0, kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{vehicle} has commitments but no route")]
    MissingRoute { vehicle: VehicleId },
    #[error("route for {vehicle} is not executable: {reason}")]
    InvalidRoute { vehicle: VehicleId, reason: String },
    #[error("step must advance time ({from}s -> {to}s)")]
    BadStep { from: Seconds, to: Seconds },
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Travel(#[from] TravelError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    /// Passengers boarded during the step, sorted.
    pub boarded: Vec<RequestId>,
    pub completed: Vec<ServiceRecord>,
    pub events: Vec<SimEvent>,
}

/// Advances every vehicle along its route, executing each stop whose service
/// starts at or before `to`.
pub fn simulate_step<S: Scalar>(
    states: &mut [VehicleState<S>],
    routes: &BTreeMap<VehicleId, CandidateRoute<S>>,
    from: Seconds,
    to: Seconds,
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<StepOutcome, SimError> {
    if to <= from {
        return Err(SimError::BadStep { from, to });
    }
    let mut outcome = StepOutcome::default();
    for state in states.iter_mut() {
        let empty = CandidateRoute::empty(state.vehicle_id);
        let route = match routes.get(&state.vehicle_id) {
            Some(r) => r,
            None if state.has_commitments() => return Err(SimError::MissingRoute { vehicle: state.vehicle_id }),
            None => &empty,
        };
        advance(state, route, to, table, travel, config, &mut outcome)?;
    }
    outcome.boarded.sort_unstable();
    outcome.completed.sort_by_key(|r| r.request_id);
    outcome.events.sort_by_key(|e| (e.time, e.vehicle_id, e.request_id));
    Ok(outcome)
}

fn advance<S: Scalar>(
    state: &mut VehicleState<S>,
    route: &CandidateRoute<S>,
    to: Seconds,
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
    outcome: &mut StepOutcome,
) -> Result<(), SimError> {
    let vehicle = state.vehicle_id;
    let invalid = |reason: String| SimError::InvalidRoute { vehicle, reason };

    let refs = route.stop_refs();
    let check = schedule_route(state, &refs, table, travel, config).map_err(|e| invalid(e.to_string()))?;
    if !check.feasible {
        return Err(invalid("route violates waiting, delay or capacity limits".into()));
    }
    if check.stops.iter().map(|s| s.scheduled_time).ne(route.stops.iter().map(|s| s.scheduled_time)) {
        return Err(invalid("scheduled times do not match the vehicle state".into()));
    }
    let served: usize = check.stops.iter().filter(|s| s.kind == StopKind::Dropoff).count();
    let owed = state.onboard.len() + check.picked_up().len();
    if served != owed {
        return Err(invalid("route leaves passengers on board".into()));
    }

    let mut executed = 0;
    for (i, stop) in check.stops.iter().enumerate() {
        if stop.scheduled_time > to {
            break;
        }
        let departure_from_prev = if i == 0 {
            lazy_departure(state.location, state.ready_at, stop, travel)?
        } else {
            lazy_departure(check.stops[i - 1].location, check.departures[i - 1], stop, travel)?
        };
        if departure_from_prev < stop.scheduled_time {
            outcome.events.push(SimEvent {
                time: departure_from_prev,
                vehicle_id: vehicle,
                kind: EventKind::Depart,
                request_id: None,
            });
        }
        match stop.kind {
            StopKind::Pickup => {
                let r = &table[&stop.request_id];
                let pos = state.onboard.partition_point(|p| p.request_id < r.id);
                state.onboard.insert(
                    pos,
                    OnboardPassenger {
                        request_id: r.id,
                        dropoff: r.dropoff,
                        earliest_dropoff: r.earliest_dropoff,
                        load: r.load,
                        pickup_time: stop.scheduled_time,
                    },
                );
                outcome.boarded.push(r.id);
            }
            StopKind::Dropoff => {
                let pos = state
                    .onboard
                    .binary_search_by_key(&stop.request_id, |p| p.request_id)
                    .map_err(|_| invalid(format!("dropoff of {} who is not on board", stop.request_id)))?;
                let passenger = state.onboard.remove(pos);
                outcome.completed.push(ServiceRecord::served(
                    passenger.request_id,
                    vehicle,
                    passenger.pickup_time,
                    stop.scheduled_time,
                ));
            }
        }
        outcome.events.push(SimEvent {
            time: stop.scheduled_time,
            vehicle_id: vehicle,
            kind: match stop.kind {
                StopKind::Pickup => EventKind::Pickup,
                StopKind::Dropoff => EventKind::Dropoff,
            },
            request_id: Some(stop.request_id),
        });
        state.committed.stops.push(stop.clone());
        state.location = stop.location;
        state.ready_at = check.departures[i];
        executed += 1;
    }
    state.committed.committed_prefix_len = state.committed.stops.len();

    let remaining = &check.stops[executed..];
    state.planned = remaining.iter().map(Stop::stop_ref).collect();
    state.en_route = None;
    if let Some(next) = remaining.first() {
        let leave = lazy_departure(state.location, state.ready_at, next, travel)?;
        if leave < to {
            state.en_route = Some(next.stop_ref());
            return Ok(());
        }
    }
    state.ready_at = state.ready_at.max(to);
    Ok(())
}

/// Latest departure from `from` that still starts service at `stop` on time.
fn lazy_departure<S: Scalar>(
    from: Location<S>,
    ready_at: Seconds,
    stop: &Stop<S>,
    travel: &Travel<S>,
) -> Result<Seconds, TravelError> {
    let leg = travel.travel_time(&from, &stop.location)?;
    Ok(ready_at.max(stop.scheduled_time - leg))
}
