//! Brute-force oracles and instance builders shared by the integration tests.
//!
//! The oracles only use the travel provider and plain arithmetic; none of them
//! call the routing, RTV or assignment code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollhorizon::model::{RequestTable, StopKind, StopRef};
use rollhorizon::rtv::{RtvGraph, Trip, TripId, TripVehicleEdge};
use rollhorizon::simulator::{OnboardPassenger, VehicleState};
use rollhorizon::{CandidateRoute, Location, Rational, Request, RequestId, Scalar, Seconds, SolverConfig, Travel, VehicleId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cost of serving `seq` from `vehicle`, or `None` if any limit is broken.
pub fn oracle_cost<S: Scalar>(
    vehicle: &VehicleState<S>,
    seq: &[StopRef],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Option<S> {
    let mut at = vehicle.location;
    let mut free_at = vehicle.ready_at;
    let mut load: u32 = vehicle.onboard.iter().map(|p| p.load).sum();
    let mut cost = S::zero();
    let onboard: BTreeMap<RequestId, &OnboardPassenger<S>> =
        vehicle.onboard.iter().map(|p| (p.request_id, p)).collect();
    for s in seq {
        let (target, latest, delta): (Location<S>, Seconds, i64) = match s.kind {
            StopKind::Pickup => {
                let r = &table[&s.request_id];
                (r.pickup, r.desired_pickup + config.max_wait, r.load as i64)
            }
            StopKind::Dropoff => match onboard.get(&s.request_id) {
                Some(p) => (p.dropoff, p.earliest_dropoff + config.max_delay, -(p.load as i64)),
                None => {
                    let r = &table[&s.request_id];
                    (r.dropoff, r.earliest_dropoff + config.max_delay, -(r.load as i64))
                }
            },
        };
        let arrive = free_at + travel.travel_time(&at, &target).ok()?;
        let service = match s.kind {
            StopKind::Pickup => arrive.max(table[&s.request_id].desired_pickup),
            StopKind::Dropoff => arrive,
        };
        if service > latest {
            return None;
        }
        load = (load as i64 + delta) as u32;
        if load > vehicle.capacity {
            return None;
        }
        cost = cost + travel.distance(&at, &target).ok()?;
        at = target;
        free_at = service + config.dwell;
    }
    Some(cost)
}

/// Every precedence-valid order over the onboard dropoffs and `requests`.
pub fn all_sequences<S: Scalar>(vehicle: &VehicleState<S>, requests: &[RequestId]) -> Vec<Vec<StopRef>> {
    let mut pending: Vec<StopRef> = vehicle.onboard.iter().map(|p| StopRef::dropoff(p.request_id)).collect();
    pending.extend(requests.iter().map(|r| StopRef::pickup(*r)));
    let mut out = Vec::new();
    fn rec(pending: &mut Vec<StopRef>, seq: &mut Vec<StopRef>, out: &mut Vec<Vec<StopRef>>) {
        if pending.is_empty() {
            out.push(seq.clone());
            return;
        }
        for i in 0..pending.len() {
            let s = pending.remove(i);
            seq.push(s);
            let follow = s.kind == StopKind::Pickup;
            if follow {
                pending.push(StopRef::dropoff(s.request_id));
            }
            rec(pending, seq, out);
            if follow {
                pending.pop();
            }
            seq.pop();
            pending.insert(i, s);
        }
    }
    rec(&mut pending, &mut Vec::new(), &mut out);
    out
}

/// Cheapest feasible cost over all orders.
pub fn brute_best<S: Scalar>(
    vehicle: &VehicleState<S>,
    requests: &[RequestId],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> Option<S> {
    let mut best: Option<S> = None;
    for seq in all_sequences(vehicle, requests) {
        if let Some(c) = oracle_cost(vehicle, &seq, table, travel, config) {
            if best.map_or(true, |b| c < b) {
                best = Some(c);
            }
        }
    }
    best
}

/// Best `(served, cost)` over every split of `requests` across `vehicles`:
/// most served first, then least distance.
pub fn global_best<S: Scalar>(
    vehicles: &[VehicleState<S>],
    requests: &[RequestId],
    table: &RequestTable<S>,
    travel: &Travel<S>,
    config: &SolverConfig,
) -> (usize, S) {
    let options = vehicles.len() + 1;
    let combos = options.pow(requests.len() as u32);
    let mut best: Option<(usize, S)> = None;
    let mut memo: BTreeMap<(usize, Vec<RequestId>), Option<S>> = BTreeMap::new();
    for mut code in 0..combos {
        let mut per_vehicle: Vec<Vec<RequestId>> = vec![Vec::new(); vehicles.len()];
        let mut served = 0;
        for r in requests {
            let choice = code % options;
            code /= options;
            if choice > 0 {
                per_vehicle[choice - 1].push(*r);
                served += 1;
            }
        }
        let mut total = S::zero();
        let mut ok = true;
        for (v, reqs) in per_vehicle.into_iter().enumerate() {
            let cost = *memo
                .entry((v, reqs.clone()))
                .or_insert_with(|| brute_best(&vehicles[v], &reqs, table, travel, config));
            match cost {
                Some(c) => total = total + c,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let better = match best {
            None => true,
            Some((s, c)) => served > s || (served == s && total < c),
        };
        if better {
            best = Some((served, total));
        }
    }
    best.expect("serving nothing is always feasible")
}

/// Minimum objective and its served count over every subset of edges, or
/// `None` when no subset covers `must_serve`.
pub fn enumerate_assignment<S: Scalar>(
    graph: &RtvGraph<S>,
    must_serve: &BTreeSet<RequestId>,
    penalty: S,
) -> Option<(S, usize)> {
    let mut universe: BTreeSet<RequestId> = graph.requests.iter().copied().collect();
    universe.extend(must_serve.iter().copied());
    for e in &graph.edges {
        universe.extend(e.covers.iter().copied());
    }
    let n = graph.edges.len();
    assert!(n <= 20, "enumeration is exponential");
    let mut best: Option<(S, usize)> = None;
    'subsets: for mask in 0u32..(1 << n) {
        let mut vehicles = BTreeSet::new();
        let mut covered = BTreeSet::new();
        let mut cost = S::zero();
        for (i, e) in graph.edges.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            if !vehicles.insert(e.vehicle) {
                continue 'subsets;
            }
            for r in &e.covers {
                if !covered.insert(*r) {
                    continue 'subsets;
                }
            }
            cost = cost + e.cost;
        }
        if !must_serve.is_subset(&covered) {
            continue;
        }
        let ignored = universe.iter().filter(|r| !covered.contains(r)).count();
        let objective = cost + penalty * S::from_usize(ignored).unwrap();
        if best.as_ref().map_or(true, |(b, _)| objective < *b) {
            best = Some((objective, covered.len()));
        }
    }
    best
}

/// Random assignment graph whose edges carry exact costs and arbitrary covers.
pub fn random_graph(rng: &mut ChaCha8Rng, max_edges: usize) -> RtvGraph<Rational> {
    let n_requests = rng.gen_range(1..=6u64);
    let n_vehicles = rng.gen_range(1..=3u32);
    let requests: Vec<RequestId> = (0..n_requests).map(RequestId).collect();
    let mut graph = RtvGraph::empty(requests.clone());
    let n_edges = rng.gen_range(0..=max_edges);
    let mut keys = BTreeSet::new();
    for _ in 0..n_edges {
        let size = rng.gen_range(1..=3usize.min(n_requests as usize));
        let mut members: BTreeSet<RequestId> = BTreeSet::new();
        while members.len() < size {
            members.insert(requests[rng.gen_range(0..requests.len())]);
        }
        let members: Vec<RequestId> = members.into_iter().collect();
        let trip = match graph.trips.iter().find(|t| t.requests == members) {
            Some(t) => t.id,
            None => {
                let id = TripId(graph.trips.len());
                for r in &members {
                    graph.request_index.entry(*r).or_default().push(id);
                }
                graph.trips.push(Trip { id, requests: members.clone() });
                id
            }
        };
        let vehicle = VehicleId(rng.gen_range(0..n_vehicles));
        if !keys.insert((trip, vehicle)) {
            continue;
        }
        let cost = Rational::new(rng.gen_range(1..=60), rng.gen_range(1..=4));
        let mut route = CandidateRoute::empty(vehicle);
        route.total_distance = cost;
        graph.edges.push(TripVehicleEdge { trip: Some(trip), vehicle, cost, route, covers: members });
    }
    graph.edges.sort_by_key(TripVehicleEdge::key);
    graph
}

/// Asymmetric travel over `nodes` locations: whole-minute times and exact
/// distances.
pub fn random_matrix(rng: &mut ChaCha8Rng, nodes: usize) -> Travel<Rational> {
    let mut times = vec![vec![0.0; nodes]; nodes];
    let mut dist = vec![vec![Rational::from_integer(0); nodes]; nodes];
    for i in 0..nodes {
        for j in 0..nodes {
            if i != j {
                times[i][j] = rng.gen_range(1..=15) as f64;
                dist[i][j] = Rational::new(rng.gen_range(1..=40), rng.gen_range(1..=3));
            }
        }
    }
    Travel::matrix(times, dist).unwrap()
}

/// A request between two matrix nodes; earliest dropoff from the direct time.
pub fn matrix_request(travel: &Travel<Rational>, id: u64, from: usize, to: usize, desired: Seconds, load: u32) -> Request<Rational> {
    let pickup = Location::node(from);
    let dropoff = Location::node(to);
    let direct = travel.travel_time(&pickup, &dropoff).unwrap();
    Request { id: RequestId(id), pickup, dropoff, desired_pickup: desired, earliest_dropoff: desired + direct, load }
}
