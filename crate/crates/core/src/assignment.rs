//! Exact trip–vehicle assignment.
//!
//! Minimises `Σ c_ij ε_ij + Σ c_k χ_k` subject to one edge per vehicle and
//! every request being covered exactly once or ignored. Requests in
//! `must_serve` cannot be ignored.
//!
//! Branch and bound over requests: the most constrained uncovered request is
//! branched on first, trying each compatible edge (cheapest share first) and
//! then the ignore option. The bound charges every uncovered request the
//! cheapest per-request share of any still-usable edge covering it, or its
//! penalty if that is lower.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{PenaltyPolicy, RequestId, VehicleId};
use crate::rtv::{RtvGraph, TripId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution<S> {
    /// `(trip, vehicle)` keys of edges with `ε_ij = 1`, sorted.
    pub chosen_edges: Vec<(Option<TripId>, VehicleId)>,
    /// Requests with `χ_k = 1`, sorted.
    pub ignored: Vec<RequestId>,
    pub objective: S,
    /// The node budget ran out; the incumbent is returned unproven.
    pub approximate: bool,
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    #[error("requests that must be served have no covering edge: {}", fmt_ids(.0))]
    Stranded(Vec<RequestId>),
    #[error("no assignment serves every required request")]
    Infeasible,
    #[error("node budget exhausted before any feasible assignment was found")]
    BudgetExhausted,
}

fn fmt_ids(ids: &[RequestId]) -> String {
    ids.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
}

/// `1 + Σ_v max_i c_iv`: serving one more request always outweighs any
/// difference in routing cost.
pub fn compute_penalty<S: Scalar>(graph: &RtvGraph<S>) -> S {
    let mut per_vehicle: BTreeMap<VehicleId, S> = BTreeMap::new();
    for e in &graph.edges {
        let slot = per_vehicle.entry(e.vehicle).or_insert_with(S::zero);
        *slot = slot.max_of(e.cost);
    }
    S::one() + per_vehicle.into_values().sum()
}

pub fn resolve_penalty<S: Scalar>(graph: &RtvGraph<S>, policy: PenaltyPolicy) -> S {
    match policy {
        PenaltyPolicy::Auto => compute_penalty(graph),
        PenaltyPolicy::Fixed(p) => S::from_f64_lossy(p),
    }
}

struct Problem<S> {
    /// Universe of requests, sorted.
    requests: Vec<RequestId>,
    ignorable: Vec<bool>,
    /// Edge data by edge index into the graph.
    edge_vehicle: Vec<usize>,
    edge_cover: Vec<Vec<usize>>,
    edge_cost: Vec<S>,
    edge_share: Vec<S>,
    /// Edges covering each request, cheapest share first.
    covering: Vec<Vec<usize>>,
    penalty: S,
    slack: S,
}

struct Node<S> {
    covered: Vec<bool>,
    vehicle_used: Vec<bool>,
    chosen: Vec<usize>,
    ignored: Vec<usize>,
    cost: S,
}

struct Best<S> {
    cost: S,
    chosen: Vec<usize>,
    ignored: Vec<usize>,
}

struct Solver<'p, S> {
    problem: &'p Problem<S>,
    best: Option<Best<S>>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
}

impl<S: Scalar> Problem<S> {
    fn usable(&self, node: &Node<S>, e: usize) -> bool {
        !node.vehicle_used[self.edge_vehicle[e]] && self.edge_cover[e].iter().all(|&k| !node.covered[k])
    }

    /// Lower bound on the cost of covering or ignoring request `k`, `None` if impossible.
    fn request_bound(&self, node: &Node<S>, k: usize) -> Option<S> {
        let edge = self.covering[k].iter().copied().find(|&e| self.usable(node, e)).map(|e| self.edge_share[e]);
        match (edge, self.ignorable[k]) {
            (Some(s), true) => Some(s.min_of(self.penalty)),
            (Some(s), false) => Some(s),
            (None, true) => Some(self.penalty),
            (None, false) => None,
        }
    }
}

impl<S: Scalar> Solver<'_, S> {
    fn better(&self, cost: S, chosen: &[usize]) -> bool {
        match &self.best {
            None => true,
            Some(b) => cost < b.cost || (cost == b.cost && sorted(chosen) < sorted(&b.chosen)),
        }
    }

    fn search(&mut self, node: &mut Node<S>) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return;
        }
        let p = self.problem;
        let mut bound = node.cost;
        let mut pick: Option<(usize, usize)> = None;
        for k in 0..p.requests.len() {
            if node.covered[k] {
                continue;
            }
            match p.request_bound(node, k) {
                None => return,
                Some(b) => bound = bound + b,
            }
            let options = p.covering[k].iter().filter(|&&e| p.usable(node, e)).count() + usize::from(p.ignorable[k]);
            if pick.map_or(true, |(_, n)| options < n) {
                pick = Some((k, options));
            }
        }
        if let Some(best) = &self.best {
            if bound > best.cost + p.slack {
                return;
            }
        }
        let Some((k, _)) = pick else {
            if self.better(node.cost, &node.chosen) {
                self.best = Some(Best { cost: node.cost, chosen: node.chosen.clone(), ignored: node.ignored.clone() });
            }
            return;
        };

        for &e in &p.covering[k] {
            if !p.usable(node, e) {
                continue;
            }
            for &c in &p.edge_cover[e] {
                node.covered[c] = true;
            }
            node.vehicle_used[p.edge_vehicle[e]] = true;
            node.chosen.push(e);
            let saved = node.cost;
            node.cost = saved + p.edge_cost[e];
            self.search(node);
            node.cost = saved;
            node.chosen.pop();
            node.vehicle_used[p.edge_vehicle[e]] = false;
            for &c in &p.edge_cover[e] {
                node.covered[c] = false;
            }
        }
        if p.ignorable[k] {
            node.covered[k] = true;
            node.ignored.push(k);
            let saved = node.cost;
            node.cost = saved + p.penalty;
            self.search(node);
            node.cost = saved;
            node.ignored.pop();
            node.covered[k] = false;
        }
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Solves the assignment for `graph`.
///
/// The request universe is `graph.requests ∪ must_serve ∪` every request an
/// edge covers. A vehicle whose onboard passengers are in `must_serve` is
/// therefore forced onto one of its edges.
pub fn solve_assignment<S: Scalar>(
    graph: &RtvGraph<S>,
    must_serve: &BTreeSet<RequestId>,
    penalty: S,
    budget: u64,
) -> Result<IlpSolution<S>, AssignmentError> {
    let mut universe: BTreeSet<RequestId> = graph.requests.iter().copied().collect();
    universe.extend(must_serve.iter().copied());
    for e in &graph.edges {
        universe.extend(e.covers.iter().copied());
    }
    let requests: Vec<RequestId> = universe.into_iter().collect();
    let index: BTreeMap<RequestId, usize> = requests.iter().enumerate().map(|(i, r)| (*r, i)).collect();

    let covered_somewhere: BTreeSet<RequestId> = graph.edges.iter().flat_map(|e| e.covers.iter().copied()).collect();
    let stranded: Vec<RequestId> = must_serve.iter().copied().filter(|r| !covered_somewhere.contains(r)).collect();
    if !stranded.is_empty() {
        return Err(AssignmentError::Stranded(stranded));
    }

    let vehicles: BTreeMap<VehicleId, usize> = graph
        .edges
        .iter()
        .map(|e| e.vehicle)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let edge_vehicle: Vec<usize> = graph.edges.iter().map(|e| vehicles[&e.vehicle]).collect();
    let edge_cover: Vec<Vec<usize>> = graph.edges.iter().map(|e| e.covers.iter().map(|r| index[r]).collect()).collect();
    let edge_cost: Vec<S> = graph.edges.iter().map(|e| e.cost).collect();
    let edge_share: Vec<S> = graph
        .edges
        .iter()
        .map(|e| {
            let n = S::from_usize(e.covers.len().max(1)).unwrap_or_else(S::one);
            e.cost / n
        })
        .collect();

    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); requests.len()];
    for (e, cover) in edge_cover.iter().enumerate() {
        for &k in cover {
            covering[k].push(e);
        }
    }
    for list in &mut covering {
        // edges are already sorted by (trip, vehicle); a stable sort keeps that as the tie-break
        list.sort_by(|&a, &b| edge_share[a].partial_cmp(&edge_share[b]).unwrap_or(std::cmp::Ordering::Equal));
    }

    let total: S = edge_cost.iter().copied().sum::<S>() + penalty * S::from_usize(requests.len()).unwrap_or_else(S::one);
    let slack = S::from_f64_lossy(1e-9) * (S::one() + total);
    let problem = Problem {
        ignorable: requests.iter().map(|r| !must_serve.contains(r)).collect(),
        requests,
        edge_vehicle,
        edge_cover,
        edge_cost,
        edge_share,
        covering,
        penalty,
        slack,
    };
    let mut solver = Solver { problem: &problem, best: None, nodes: 0, budget, exhausted: false };
    let mut node = Node {
        covered: vec![false; problem.requests.len()],
        vehicle_used: vec![false; vehicles.len()],
        chosen: Vec::new(),
        ignored: Vec::new(),
        cost: S::zero(),
    };
    solver.search(&mut node);

    let Some(best) = solver.best else {
        return Err(if solver.exhausted { AssignmentError::BudgetExhausted } else { AssignmentError::Infeasible });
    };
    let mut chosen_edges: Vec<(Option<TripId>, VehicleId)> = best.chosen.iter().map(|&e| graph.edges[e].key()).collect();
    chosen_edges.sort_unstable();
    let mut ignored: Vec<RequestId> = best.ignored.iter().map(|&k| problem.requests[k]).collect();
    ignored.sort_unstable();
    Ok(IlpSolution { chosen_edges, ignored, objective: best.cost, approximate: solver.exhausted, nodes: solver.nodes })
}
