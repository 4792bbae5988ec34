//! The rolling-horizon loop.
//!
//! Each iteration at time `t` adds the window's new requests to the active
//! set, builds the RTV graph for all vehicles, solves the assignment, and
//! simulates the chosen routes up to `t + t_s`. After the last grid time the
//! loop keeps running with empty batches until every accepted passenger is
//! delivered.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assignment::{resolve_penalty, solve_assignment, AssignmentError, IlpSolution};
use crate::instance_io::{Instance, InstanceError, RunReport, Timing};
use crate::metrics::summarize;
use crate::model::{
    request_table, validate_config, ConfigError, Request, RequestId, Seconds, ServiceRecord, SolverConfig, VehicleId,
};
use crate::routing::CandidateRoute;
use crate::rtv::{add_carry_over_edges, build_rtv_graph, RtvError, RtvGraph};
use crate::scalar::Scalar;
use crate::simulator::{simulate_step, SimError, SimEvent, VehicleState};
use crate::validate::commitment_digest;
use crate::window::{batch_schedule, window_processing, WindowError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("at t={time}s: {source}")]
    Rtv { time: Seconds, source: RtvError },
    #[error("at t={time}s: {source}")]
    Assignment { time: Seconds, source: AssignmentError },
    #[error("at t={time}s: {source}")]
    Simulation { time: Seconds, source: SimError },
    #[error("no progress by t={0}s: passengers or matched requests remain past every deadline")]
    NoProgress(Seconds),
}

/// Digest of one vehicle's committed stops after an iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub vehicle_id: VehicleId,
    pub prefix_len: usize,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub index: usize,
    pub time: Seconds,
    pub drain: bool,
    pub new_requests: usize,
    pub active: usize,
    pub trips: usize,
    pub edges: usize,
    pub chosen_edges: usize,
    pub ignored: usize,
    pub rejected: Vec<RequestId>,
    pub boarded: usize,
    pub completed: usize,
    pub objective: f64,
    pub penalty: f64,
    pub ilp_nodes: u64,
    pub approximate: bool,
    pub commitments: Vec<Commitment>,
}

/// Loop state between iterations.
#[derive(Debug, Clone)]
pub struct EngineState<S> {
    pub t: Seconds,
    /// `ℛ̂`: batched, not yet picked up, not rejected.
    pub active: BTreeSet<RequestId>,
    pub vehicles: Vec<VehicleState<S>>,
    pub records: BTreeMap<RequestId, ServiceRecord>,
    /// Matched in the last assignment, awaiting pickup.
    pub matched: BTreeMap<RequestId, VehicleId>,
    pub rejected: BTreeSet<RequestId>,
    /// Requests ever matched; never ignored afterwards.
    pub ever_matched: BTreeSet<RequestId>,
}

impl<S: Scalar> EngineState<S> {
    pub fn onboard(&self) -> BTreeSet<RequestId> {
        self.vehicles.iter().flat_map(|v| v.onboard.iter().map(|p| p.request_id)).collect()
    }
}

/// What an observer sees after each iteration.
pub struct IterationView<'a, S> {
    pub log: &'a IterationLog,
    pub state: &'a EngineState<S>,
    pub graph: &'a RtvGraph<S>,
    pub solution: &'a IlpSolution<S>,
    pub routes: &'a BTreeMap<VehicleId, CandidateRoute<S>>,
    pub events: &'a [SimEvent],
    /// Requests never batched so far.
    pub unbatched: &'a BTreeSet<RequestId>,
}

pub trait EngineObserver<S> {
    fn on_iteration(&mut self, view: &IterationView<'_, S>);
}

impl<S, F: FnMut(&IterationView<'_, S>)> EngineObserver<S> for F {
    fn on_iteration(&mut self, view: &IterationView<'_, S>) {
        self(view)
    }
}

struct NoObserver;

impl<S> EngineObserver<S> for NoObserver {
    fn on_iteration(&mut self, _: &IterationView<'_, S>) {}
}

pub fn run<S: Scalar>(instance: &Instance<S>, config: &SolverConfig) -> Result<RunReport<S>, EngineError> {
    run_with_observer(instance, config, &mut NoObserver)
}

/// The online baseline: no lookahead beyond the current step.
pub fn run_baseline_rh0<S: Scalar>(instance: &Instance<S>, config: &SolverConfig) -> Result<RunReport<S>, EngineError> {
    let config = SolverConfig { rh_factor: 0, ..config.clone() };
    run(instance, &config)
}

pub fn run_with_observer<S: Scalar>(
    instance: &Instance<S>,
    config: &SolverConfig,
    observer: &mut dyn EngineObserver<S>,
) -> Result<RunReport<S>, EngineError> {
    validate_config(config)?;
    instance.check()?;
    let fleet = instance.fleet(config);
    let travel = &instance.travel;
    let table = request_table(&instance.requests);
    let mut warnings = Vec::new();

    let (schedulable, late): (Vec<&Request<S>>, Vec<&Request<S>>) =
        instance.requests.iter().partition(|r| r.desired_pickup <= config.horizon);
    for r in &late {
        let msg = format!("request {} has pickup {}s beyond the horizon {}s; rejected", r.id.0, r.desired_pickup, config.horizon);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let schedulable: Vec<Request<S>> = schedulable.into_iter().cloned().collect();

    let mut state = EngineState {
        t: 0,
        active: BTreeSet::new(),
        vehicles: fleet.iter().map(VehicleState::at_depot).collect(),
        records: BTreeMap::new(),
        matched: BTreeMap::new(),
        rejected: late.iter().map(|r| r.id).collect(),
        ever_matched: BTreeSet::new(),
    };
    let mut unbatched: BTreeSet<RequestId> = schedulable.iter().map(|r| r.id).collect();
    let grid = batch_schedule(config);
    let last_deadline = schedulable
        .iter()
        .map(|r| r.dropoff_deadline(config.max_delay).max(r.pickup_deadline(config.max_wait)))
        .max()
        .unwrap_or(0);

    let started = Instant::now();
    let mut iterations = Vec::new();
    let mut timing = Vec::new();
    let mut t = 0;
    let mut index = 0;
    loop {
        let drain = index >= grid.len();
        if drain {
            let pending = !state.active.is_empty() || state.vehicles.iter().any(|v| v.has_commitments());
            if !pending {
                break;
            }
            if t > last_deadline + config.step {
                return Err(EngineError::NoProgress(t));
            }
        } else {
            t = grid[index];
        }
        let iteration_start = Instant::now();
        state.t = t;

        let batch = window_processing(t, &schedulable, config)?;
        for id in &batch.request_ids {
            unbatched.remove(id);
            state.active.insert(*id);
        }

        for v in state.vehicles.iter_mut() {
            *v = v.available_from(t);
        }
        let planning = &state.vehicles;
        let onboard = state.onboard();
        let candidates: Vec<RequestId> = state.active.iter().copied().filter(|r| !onboard.contains(r)).collect();
        let mut graph = build_rtv_graph(&candidates, planning, &table, travel, config, None)
            .map_err(|source| EngineError::Rtv { time: t, source })?;
        add_carry_over_edges(&mut graph, planning, &table, travel, config)
            .map_err(|source| EngineError::Rtv { time: t, source: source.into() })?;

        let mut must_serve: BTreeSet<RequestId> = state.matched.keys().copied().collect();
        must_serve.extend(planning.iter().flat_map(|v| v.forced_requests()));
        must_serve.extend(state.ever_matched.iter().filter(|r| state.active.contains(r)).copied());
        let penalty = resolve_penalty(&graph, config.penalty);
        let solution = solve_assignment(&graph, &must_serve, penalty, config.ilp_node_budget)
            .map_err(|source| EngineError::Assignment { time: t, source })?;
        if solution.approximate {
            let msg = format!("t={t}s: assignment node budget reached, incumbent used");
            log::warn!("{msg}");
            warnings.push(msg);
        }

        let mut routes: BTreeMap<VehicleId, CandidateRoute<S>> = BTreeMap::new();
        let mut assigned: BTreeMap<RequestId, VehicleId> = BTreeMap::new();
        for &(trip, vehicle) in &solution.chosen_edges {
            let edge = graph.edge(trip, vehicle).expect("chosen edge exists");
            routes.insert(vehicle, edge.route.clone());
            for r in edge.route.picked_up() {
                assigned.insert(r, vehicle);
            }
        }

        let to = t + config.step;
        let outcome = simulate_step(&mut state.vehicles, &routes, t, to, &table, travel, config)
            .map_err(|source| EngineError::Simulation { time: t, source })?;

        for id in &outcome.boarded {
            state.active.remove(id);
            assigned.remove(id);
        }
        for record in &outcome.completed {
            state.records.insert(record.request_id, record.clone());
        }
        state.ever_matched.extend(assigned.keys().copied());
        state.matched = assigned;

        let mut rejected = Vec::new();
        for id in &solution.ignored {
            let r = &table[id];
            if state.active.contains(id) && r.pickup_deadline(config.max_wait) < to {
                rejected.push(*id);
            }
        }
        for id in &rejected {
            state.active.remove(id);
            state.rejected.insert(*id);
        }

        let commitments: Vec<Commitment> = state
            .vehicles
            .iter()
            .map(|v| Commitment {
                vehicle_id: v.vehicle_id,
                prefix_len: v.committed.stops.len(),
                digest: commitment_digest(&v.committed.stops),
            })
            .collect();
        let log = IterationLog {
            index,
            time: t,
            drain,
            new_requests: batch.request_ids.len(),
            active: candidates.len(),
            trips: graph.trips.len(),
            edges: graph.edges.len(),
            chosen_edges: solution.chosen_edges.len(),
            ignored: solution.ignored.len(),
            rejected,
            boarded: outcome.boarded.len(),
            completed: outcome.completed.len(),
            objective: solution.objective.as_f64(),
            penalty: penalty.as_f64(),
            ilp_nodes: solution.nodes,
            approximate: solution.approximate,
            commitments,
        };
        timing.push(iteration_start.elapsed().as_secs_f64());
        observer.on_iteration(&IterationView {
            log: &log,
            state: &state,
            graph: &graph,
            solution: &solution,
            routes: &routes,
            events: &outcome.events,
            unbatched: &unbatched,
        });
        iterations.push(log);
        index += 1;
        t = to;
    }
    let total = started.elapsed().as_secs_f64();

    for r in &instance.requests {
        state.records.entry(r.id).or_insert_with(|| ServiceRecord::unserved(r.id));
    }
    let mut report = RunReport {
        instance: instance.name.clone(),
        config: config.clone(),
        requests: instance.requests.clone(),
        vehicles: fleet,
        records: state.records.into_values().collect(),
        routes: state.vehicles.into_iter().map(|v| v.committed).collect(),
        iterations,
        metrics: Default::default(),
        warnings,
        timing: Some(Timing { iterations: timing, total }),
    };
    report.metrics = summarize(&report, travel).map_err(|e| EngineError::Instance(InstanceError::Invalid(e.to_string())))?;
    Ok(report)
}
