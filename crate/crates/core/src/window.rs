//! Window processing: which requests join the active set at each iteration.

use std::collections::BTreeMap;

use crate::model::{Request, RequestId, Seconds, SolverConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub time: Seconds,
    pub request_ids: Vec<RequestId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("iteration time {time}s is not on the {step}s step grid")]
    OffGrid { time: Seconds, step: Seconds },
    #[error("iteration time {0}s is negative")]
    Negative(Seconds),
}

/// Whether a request with the given desired pickup enters the batch at `t`.
///
/// At `t = 0` every pickup up to the lookahead is taken; afterwards only the
/// newest step-wide slice `(t + (c-1)·t_s, t + c·t_s]` is added.
pub fn in_batch(t: Seconds, desired_pickup: Seconds, config: &SolverConfig) -> bool {
    let upper = t + config.lookahead();
    if t == 0 {
        desired_pickup <= upper
    } else {
        desired_pickup > upper - config.step && desired_pickup <= upper
    }
}

/// Selects the new requests for iteration `t`.
///
/// `t` may lie beyond the horizon: the engine keeps calling this during the
/// drain phase, where it only picks up the tail of the horizon.
pub fn window_processing<S: Scalar>(
    t: Seconds,
    requests: &[Request<S>],
    config: &SolverConfig,
) -> Result<Batch, WindowError> {
    if t < 0 {
        return Err(WindowError::Negative(t));
    }
    if config.step <= 0 || t % config.step != 0 {
        return Err(WindowError::OffGrid { time: t, step: config.step });
    }
    let mut request_ids: Vec<RequestId> = requests
        .iter()
        .filter(|r| in_batch(t, r.desired_pickup, config))
        .map(|r| r.id)
        .collect();
    request_ids.sort_unstable();
    Ok(Batch { time: t, request_ids })
}

/// Iteration times needed for every pickup in `[0, horizon]` to be batched:
/// the regular grid `0, t_s, …, t_max - t_s`, extended while the lookahead
/// still ends before the horizon (only the case for `c^RH = 0`).
pub fn batch_schedule(config: &SolverConfig) -> Vec<Seconds> {
    let mut times = Vec::new();
    if config.step <= 0 {
        return times;
    }
    let mut t = 0;
    while t < config.horizon {
        times.push(t);
        t += config.step;
    }
    while times.last().map_or(true, |&last| last + config.lookahead() < config.horizon) {
        times.push(t);
        t += config.step;
    }
    times
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartitionReport {
    /// Requests found in more than one batch, with the batch times.
    pub duplicated: Vec<(RequestId, Vec<Seconds>)>,
    pub never_batched: Vec<RequestId>,
}

impl PartitionReport {
    pub fn is_ok(&self) -> bool {
        self.duplicated.is_empty() && self.never_batched.is_empty()
    }
}

/// Checks that `batches` are pairwise disjoint and cover every request in `requests`.
pub fn batch_partition_check<S: Scalar>(batches: &[Batch], requests: &[Request<S>]) -> Result<(), PartitionReport> {
    let mut seen: BTreeMap<RequestId, Vec<Seconds>> = BTreeMap::new();
    for batch in batches {
        for id in &batch.request_ids {
            seen.entry(*id).or_default().push(batch.time);
        }
    }
    let mut report = PartitionReport::default();
    for (id, times) in &seen {
        if times.len() > 1 {
            report.duplicated.push((*id, times.clone()));
        }
    }
    for r in requests {
        if !seen.contains_key(&r.id) {
            report.never_batched.push(r.id);
        }
    }
    report.never_batched.sort_unstable();
    if report.is_ok() {
        Ok(())
    } else {
        Err(report)
    }
}
