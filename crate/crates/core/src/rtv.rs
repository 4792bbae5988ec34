//! Request–trip–vehicle graph construction.
//!
//! Trips grow one request at a time. A trip of size `k` is only tried when all
//! of its `(k-1)`-subsets are trips, and only for vehicles that can serve every
//! one of those subsets. Routes come from exhaustive search while the vehicle
//! would carry at most `exhaustive_route_limit` requests, and from insertion
//! into a sub-trip's route beyond that.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::{RequestId, RequestTable, SolverConfig, StopKind, VehicleId};
use crate::routing::{base_route, best_route_exhaustive, best_route_insertion, schedule_route, CandidateRoute, RoutingError};
use crate::scalar::Scalar;
use crate::simulator::VehicleState;
use crate::travel::Travel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TripId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trip {
    pub id: TripId,
    /// Sorted, unique, non-empty.
    pub requests: Vec<RequestId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripVehicleEdge<S> {
    /// `None` for the route that only serves the vehicle's existing commitments.
    pub trip: Option<TripId>,
    pub vehicle: VehicleId,
    /// `c_ij`, the route's total distance.
    pub cost: S,
    pub route: CandidateRoute<S>,
    /// Trip requests plus the vehicle's onboard and en-route passengers, sorted.
    pub covers: Vec<RequestId>,
}

impl<S> TripVehicleEdge<S> {
    pub fn key(&self) -> (Option<TripId>, VehicleId) {
        (self.trip, self.vehicle)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtvGraph<S> {
    /// Requests that may be left unserved (`χ_k` exists for each).
    pub requests: Vec<RequestId>,
    pub trips: Vec<Trip>,
    /// Sorted by `(trip, vehicle)`.
    pub edges: Vec<TripVehicleEdge<S>>,
    pub request_index: BTreeMap<RequestId, Vec<TripId>>,
}

impl<S: Scalar> RtvGraph<S> {
    pub fn empty(requests: Vec<RequestId>) -> Self {
        Self { requests, trips: Vec::new(), edges: Vec::new(), request_index: BTreeMap::new() }
    }

    pub fn trip(&self, id: TripId) -> &Trip {
        &self.trips[id.0]
    }

    pub fn trip_requests(&self, id: Option<TripId>) -> &[RequestId] {
        match id {
            Some(id) => &self.trips[id.0].requests,
            None => &[],
        }
    }

    pub fn edge(&self, trip: Option<TripId>, vehicle: VehicleId) -> Option<&TripVehicleEdge<S>> {
        self.edges.binary_search_by_key(&(trip, vehicle), TripVehicleEdge::key).ok().map(|i| &self.edges[i])
    }

    fn find_trip(&self, requests: &[RequestId]) -> Option<TripId> {
        self.trips.iter().find(|t| t.requests == requests).map(|t| t.id)
    }

    fn add_trip(&mut self, requests: Vec<RequestId>) -> TripId {
        let id = TripId(self.trips.len());
        for r in &requests {
            self.request_index.entry(*r).or_default().push(id);
        }
        self.trips.push(Trip { id, requests });
        id
    }

    fn insert_edge(&mut self, edge: TripVehicleEdge<S>) {
        match self.edges.binary_search_by_key(&edge.key(), TripVehicleEdge::key) {
            Ok(i) => self.edges[i] = edge,
            Err(i) => self.edges.insert(i, edge),
        }
    }

    /// Text adjacency listing, one trip per line followed by its edges.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let fmt_ids = |ids: &[RequestId]| ids.iter().map(|r| r.0.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "requests [{}]", fmt_ids(&self.requests));
        let mut trips: Vec<Option<TripId>> = vec![None];
        trips.extend(self.trips.iter().map(|t| Some(t.id)));
        for trip in trips {
            let edges: Vec<&TripVehicleEdge<S>> = self.edges.iter().filter(|e| e.trip == trip).collect();
            if trip.is_none() && edges.is_empty() {
                continue;
            }
            match trip {
                Some(t) => {
                    let _ = writeln!(out, "trip {} [{}]", t.0, fmt_ids(self.trip_requests(trip)));
                }
                None => {
                    let _ = writeln!(out, "trip - []");
                }
            }
            for e in edges {
                let stops: Vec<String> = e
                    .route
                    .stops
                    .iter()
                    .map(|s| format!("{}{}", if s.kind == StopKind::Pickup { 'P' } else { 'D' }, s.request_id.0))
                    .collect();
                let _ = writeln!(out, "  v{} cost {} route {}", e.vehicle.0, e.cost, stops.join(" "));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RtvError {
    #[error("{0} has commitments that no route can serve")]
    NoBaseRoute(VehicleId),
    #[error(transparent)]
    Routing(#[from] RoutingError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairwiseFeasibility {
    /// Sorted request–vehicle pairs whose single-request trip is feasible.
    pub request_vehicle: Vec<(RequestId, VehicleId)>,
    /// Sorted shareable pairs `(a, b)` with `a < b`.
    pub request_request: Vec<(RequestId, RequestId)>,
}

struct Context<'a, S> {
    vehicles: &'a [VehicleState<S>],
    table: &'a RequestTable<S>,
    travel: &'a Travel<S>,
    config: &'a SolverConfig,
}

impl<S: Scalar> Context<'_, S> {
    fn committed_count(&self, v: &VehicleState<S>) -> usize {
        v.onboard.len() + usize::from(v.en_route_pickup().is_some())
    }

    /// Best route found for `trip` on `v`, given routes of its sub-trips.
    fn trip_route(
        &self,
        v: &VehicleState<S>,
        trip: &[RequestId],
        sub_routes: &dyn Fn(&[RequestId]) -> Option<CandidateRoute<S>>,
    ) -> Result<Option<CandidateRoute<S>>, RoutingError> {
        if self.committed_count(v) + trip.len() <= self.config.exhaustive_route_limit {
            return best_route_exhaustive(v, trip, self.table, self.travel, self.config);
        }
        let mut best: Option<CandidateRoute<S>> = None;
        for (i, &r) in trip.iter().enumerate() {
            let sub: Vec<RequestId> = trip.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, id)| *id).collect();
            let Some(base) = sub_routes(&sub) else { continue };
            if let Some(route) = best_route_insertion(v, &base, r, self.table, self.travel, self.config)? {
                if best.as_ref().map_or(true, |b| route.total_distance < b.total_distance) {
                    best = Some(route);
                }
            }
        }
        Ok(best)
    }
}

fn max_capacity<S: Scalar>(vehicles: &[VehicleState<S>], config: &SolverConfig) -> u32 {
    vehicles.iter().map(|v| v.capacity).max().unwrap_or(config.capacity)
}

/// Pairwise feasibility: request–vehicle pairs and shareable request pairs.
///
/// Two requests are shareable when an empty vehicle of the largest capacity,
/// waiting at either pickup at its desired time, can serve both.
pub fn build_rv_edges<S: Scalar>(
    active: &[RequestId],
    vehicles: &[VehicleState<S>],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<PairwiseFeasibility, RoutingError> {
    let mut active = active.to_vec();
    active.sort_unstable();
    active.dedup();
    let ctx = Context { vehicles, table, travel, config };
    let mut out = PairwiseFeasibility::default();
    for &r in &active {
        for v in ctx.vehicles {
            let base = base_route(v, table, travel, config)?;
            let subs = |sub: &[RequestId]| if sub.is_empty() { base.clone() } else { None };
            if ctx.trip_route(v, &[r], &subs)?.is_some() {
                out.request_vehicle.push((r, v.vehicle_id));
            }
        }
    }
    let capacity = max_capacity(vehicles, config);
    for (i, &a) in active.iter().enumerate() {
        for &b in &active[i + 1..] {
            if shareable(a, b, capacity, table, travel, config)? {
                out.request_request.push((a, b));
            }
        }
    }
    Ok(out)
}

fn shareable<S: Scalar>(
    a: RequestId,
    b: RequestId,
    capacity: u32,
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<bool, RoutingError> {
    let limit = SolverConfig { exhaustive_route_limit: config.exhaustive_route_limit.max(2), ..config.clone() };
    for origin in [a, b] {
        let r = table.get(&origin).ok_or(RoutingError::UnknownRequest(origin))?;
        let virtual_vehicle = VehicleState::idle(VehicleId(u32::MAX), capacity, r.pickup, r.desired_pickup);
        if best_route_exhaustive(&virtual_vehicle, &[a, b], table, travel, &limit)?.is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Builds the RTV graph for `active` requests.
///
/// Requests a vehicle is already committed to (onboard or en-route pickup) are
/// not trip members; they ride along in every edge of that vehicle. Every
/// vehicle with commitments gets an edge for its commitments alone.
pub fn build_rtv_graph<S: Scalar>(
    active: &[RequestId],
    vehicles: &[VehicleState<S>],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
    size_limit: Option<usize>,
) -> Result<RtvGraph<S>, RtvError> {
    let forced: BTreeSet<RequestId> = vehicles.iter().flat_map(|v| v.forced_requests()).collect();
    let active: Vec<RequestId> =
        active.iter().copied().filter(|r| !forced.contains(r)).collect::<BTreeSet<_>>().into_iter().collect();
    let size_limit = size_limit
        .or(config.trip_size_limit)
        .unwrap_or(max_capacity(vehicles, config) as usize)
        .max(1);
    let ctx = Context { vehicles, table, travel, config };
    let mut graph = RtvGraph::empty(active.clone());

    let mut bases: BTreeMap<VehicleId, CandidateRoute<S>> = BTreeMap::new();
    for v in vehicles {
        match base_route(v, table, travel, config)? {
            Some(route) => {
                bases.insert(v.vehicle_id, route);
            }
            None => return Err(RtvError::NoBaseRoute(v.vehicle_id)),
        }
    }

    // routes[(trip, vehicle)] for the level below the one being built
    let mut routes: BTreeMap<(Vec<RequestId>, VehicleId), CandidateRoute<S>> = BTreeMap::new();
    for v in vehicles {
        routes.insert((Vec::new(), v.vehicle_id), bases[&v.vehicle_id].clone());
    }
    let pairs = build_rv_edges(&active, vehicles, table, travel, config)?;
    let shareable: BTreeSet<(RequestId, RequestId)> = pairs.request_request.iter().copied().collect();

    let mut level: Vec<Vec<RequestId>> = vec![Vec::new()];
    for k in 1..=size_limit {
        let candidates: Vec<Vec<RequestId>> = if k == 1 {
            active.iter().map(|r| vec![*r]).collect()
        } else {
            extend_level(&level, &shareable)
        };
        let mut next_level = Vec::new();
        let mut next_routes = BTreeMap::new();
        for trip in candidates {
            let mut found = false;
            for v in vehicles {
                let vid = v.vehicle_id;
                let all_subs_served = (0..trip.len()).all(|skip| {
                    let sub: Vec<RequestId> = without(&trip, skip);
                    routes.contains_key(&(sub, vid))
                });
                if !all_subs_served {
                    continue;
                }
                let lookup = |sub: &[RequestId]| routes.get(&(sub.to_vec(), vid)).cloned();
                if let Some(route) = ctx.trip_route(v, &trip, &lookup)? {
                    next_routes.insert((trip.clone(), vid), route);
                    found = true;
                }
            }
            if found {
                next_level.push(trip);
            }
        }
        if next_level.is_empty() {
            break;
        }
        for trip in &next_level {
            graph.add_trip(trip.clone());
        }
        level = next_level;
        routes_into_edges(&mut graph, &next_routes, vehicles);
        routes = next_routes;
    }

    for v in vehicles.iter().filter(|v| v.has_commitments()) {
        let route = bases[&v.vehicle_id].clone();
        graph.insert_edge(TripVehicleEdge {
            trip: None,
            vehicle: v.vehicle_id,
            cost: route.total_distance,
            covers: v.forced_requests(),
            route,
        });
    }
    Ok(graph)
}

fn without(trip: &[RequestId], skip: usize) -> Vec<RequestId> {
    trip.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, r)| *r).collect()
}

/// Size-k candidates from sorted size-(k-1) trips sharing a (k-2)-prefix,
/// kept only when every (k-1)-subset is itself a trip.
fn extend_level(level: &[Vec<RequestId>], shareable: &BTreeSet<(RequestId, RequestId)>) -> Vec<Vec<RequestId>> {
    let known: BTreeSet<&[RequestId]> = level.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        let prefix = &a[..a.len() - 1];
        for b in &level[i + 1..] {
            if &b[..b.len() - 1] != prefix {
                break;
            }
            let (x, y) = (a[a.len() - 1], b[b.len() - 1]);
            if !shareable.contains(&(x.min(y), x.max(y))) {
                continue;
            }
            let mut union = a.clone();
            union.push(y);
            union.sort_unstable();
            if (0..union.len()).all(|skip| known.contains(without(&union, skip).as_slice())) {
                out.push(union);
            }
        }
    }
    out.sort();
    out
}

fn routes_into_edges<S: Scalar>(
    graph: &mut RtvGraph<S>,
    routes: &BTreeMap<(Vec<RequestId>, VehicleId), CandidateRoute<S>>,
    vehicles: &[VehicleState<S>],
) {
    let forced: BTreeMap<VehicleId, Vec<RequestId>> =
        vehicles.iter().map(|v| (v.vehicle_id, v.forced_requests())).collect();
    for ((trip, vid), route) in routes {
        let Some(tid) = graph.find_trip(trip) else { continue };
        let mut covers = trip.clone();
        covers.extend(forced[vid].iter().copied());
        covers.sort_unstable();
        graph.insert_edge(TripVehicleEdge {
            trip: Some(tid),
            vehicle: *vid,
            cost: route.total_distance,
            route: route.clone(),
            covers,
        });
    }
}

/// Keeps each vehicle's previous plan available: the requests it was assigned
/// last iteration (still awaiting pickup) are offered again with the planned
/// order, replacing the searched edge when that order is cheaper or the
/// search missed it.
pub fn add_carry_over_edges<S: Scalar>(
    graph: &mut RtvGraph<S>,
    vehicles: &[VehicleState<S>],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Result<(), RoutingError> {
    let active: BTreeSet<RequestId> = graph.requests.iter().copied().collect();
    for v in vehicles {
        let forced: BTreeSet<RequestId> = v.forced_requests().into_iter().collect();
        let trip: Vec<RequestId> = v
            .planned
            .iter()
            .filter(|s| s.kind == StopKind::Pickup && active.contains(&s.request_id))
            .map(|s| s.request_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if trip.is_empty() {
            continue;
        }
        let keep: Vec<_> = v
            .planned
            .iter()
            .copied()
            .filter(|s| forced.contains(&s.request_id) || trip.binary_search(&s.request_id).is_ok())
            .collect();
        let route = schedule_route(v, &keep, table, travel, config)?;
        if !route.feasible {
            log::warn!("previous plan of {} is no longer feasible", v.vehicle_id);
            continue;
        }
        let tid = match graph.find_trip(&trip) {
            Some(t) => t,
            None => graph.add_trip(trip.clone()),
        };
        if let Some(existing) = graph.edge(Some(tid), v.vehicle_id) {
            if existing.cost <= route.total_distance {
                continue;
            }
        }
        let mut covers = trip;
        covers.extend(forced.iter().copied());
        covers.sort_unstable();
        graph.insert_edge(TripVehicleEdge {
            trip: Some(tid),
            vehicle: v.vehicle_id,
            cost: route.total_distance,
            route,
            covers,
        });
    }
    Ok(())
}
