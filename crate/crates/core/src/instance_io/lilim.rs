//! Li & Lim PDPTW benchmark files.
//!
//! Header `K Q S` (vehicles, capacity, speed), then one line per node:
//! `id x y demand earliest latest service pickup delivery`. Node 0 is the
//! depot. Time units are read as minutes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConfigOverrides, Instance, InstanceError};
use crate::model::{derive_earliest_dropoff, minutes, Location, RequestId, RequestSpec};
use crate::scalar::Scalar;
use crate::travel::Travel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilimNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: i64,
    pub earliest: f64,
    pub latest: f64,
    pub service: f64,
    pub pickup: usize,
    pub delivery: usize,
}

/// Raw benchmark data kept alongside the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub vehicles: usize,
    pub capacity: u32,
    pub speed: f64,
    pub nodes: Vec<LilimNode>,
}

fn parse_err(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, message: message.into() }
}

fn fields<T: std::str::FromStr>(line_no: usize, line: &str, count: usize) -> Result<Vec<T>, InstanceError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != count {
        return Err(parse_err(line_no, format!("expected {count} fields, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| parse_err(line_no, format!("invalid number '{p}'"))))
        .collect()
}

pub fn parse_lilim<S: Scalar>(name: &str, text: &str) -> Result<Instance<S>, InstanceError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (header_no, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let head: Vec<f64> = fields(header_no, header, 3)?;
    if head[0] < 0.0 || head[0].fract() != 0.0 || head[1] < 1.0 || head[1].fract() != 0.0 {
        return Err(parse_err(header_no, "vehicle count and capacity must be whole numbers"));
    }
    if !(head[2] > 0.0 && head[2].is_finite()) {
        return Err(parse_err(header_no, "speed must be positive"));
    }

    let mut nodes: Vec<LilimNode> = Vec::new();
    let mut line_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (no, line) in lines {
        let v: Vec<f64> = fields(no, line, 9)?;
        let int = |x: f64, what: &str| -> Result<i64, InstanceError> {
            if x.fract() != 0.0 {
                return Err(parse_err(no, format!("{what} must be an integer")));
            }
            Ok(x as i64)
        };
        let id = int(v[0], "node id")?;
        let pickup = int(v[7], "pickup index")?;
        let delivery = int(v[8], "delivery index")?;
        if id < 0 || pickup < 0 || delivery < 0 {
            return Err(parse_err(no, "indices must be non-negative"));
        }
        let node = LilimNode {
            id: id as usize,
            x: v[1],
            y: v[2],
            demand: int(v[3], "demand")?,
            earliest: v[4],
            latest: v[5],
            service: v[6],
            pickup: pickup as usize,
            delivery: delivery as usize,
        };
        if line_of.insert(node.id, no).is_some() {
            return Err(parse_err(no, format!("node {} appears twice", node.id)));
        }
        nodes.push(node);
    }
    let depot = nodes
        .iter()
        .find(|n| n.id == 0)
        .ok_or_else(|| parse_err(header_no + 1, "missing depot node 0"))?
        .clone();
    let by_id: BTreeMap<usize, &LilimNode> = nodes.iter().map(|n| (n.id, n)).collect();

    let travel = Travel::euclidean(S::from_f64_lossy(head[2]));
    let loc = |n: &LilimNode| Location::new(S::from_f64_lossy(n.x), S::from_f64_lossy(n.y));
    let mut requests = Vec::new();
    for n in nodes.iter().filter(|n| n.id != 0) {
        let no = line_of[&n.id];
        match (n.pickup, n.delivery) {
            (0, 0) => return Err(parse_err(no, format!("node {} is neither pickup nor delivery", n.id))),
            (p, d) if p > 0 && d > 0 => {
                return Err(parse_err(no, format!("node {} is both pickup and delivery", n.id)));
            }
            (0, d) => {
                let partner = by_id
                    .get(&d)
                    .ok_or_else(|| parse_err(no, format!("pickup {} references missing delivery {d}", n.id)))?;
                if partner.pickup != n.id {
                    return Err(parse_err(no, format!("delivery {d} is not paired with pickup {}", n.id)));
                }
                if n.demand < 1 {
                    return Err(parse_err(no, format!("pickup {} must have positive demand", n.id)));
                }
                let spec = RequestSpec {
                    id: RequestId(n.id as u64),
                    pickup: loc(n),
                    dropoff: loc(partner),
                    desired_pickup: minutes(n.earliest),
                    load: n.demand as u32,
                };
                requests.push(derive_earliest_dropoff(spec, &travel).map_err(|e| parse_err(no, e.to_string()))?);
            }
            (p, _) => {
                let partner = by_id
                    .get(&p)
                    .ok_or_else(|| parse_err(no, format!("delivery {} references missing pickup {p}", n.id)))?;
                if partner.delivery != n.id {
                    return Err(parse_err(no, format!("pickup {p} is not paired with delivery {}", n.id)));
                }
            }
        }
    }
    requests.sort_by_key(|r| r.id);

    let mut instance = Instance::new(name, requests, loc(&depot), travel);
    instance.native_horizon = Some(minutes(depot.latest));
    instance.overrides = ConfigOverrides {
        fleet_size: Some(head[0] as usize),
        capacity: Some(head[1] as u32),
        horizon: Some(minutes(depot.latest)),
        ..Default::default()
    };
    instance.benchmark = Some(Benchmark { vehicles: head[0] as usize, capacity: head[1] as u32, speed: head[2], nodes });
    Ok(instance)
}

pub fn load_lilim<S: Scalar>(path: impl AsRef<Path>) -> Result<Instance<S>, InstanceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_lilim(&name, &text)
}

/// Writes benchmark data back in the Li & Lim layout.
pub fn write_lilim(benchmark: &Benchmark) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}\t{}\t{}", benchmark.vehicles, benchmark.capacity, benchmark.speed);
    for n in &benchmark.nodes {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            n.id, n.x, n.y, n.demand, n.earliest, n.latest, n.service, n.pickup, n.delivery
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "2\t10\t1\n\
        0\t0\t0\t0\t0\t100\t0\t0\t0\n\
        1\t3\t0\t2\t10\t40\t5\t0\t2\n\
        2\t3\t4\t-2\t20\t60\t5\t1\t0\n\
        3\t0\t5\t1\t0\t30\t5\t0\t4\n\
        4\t0\t9\t-1\t0\t80\t5\t3\t0\n";

    #[test]
    fn pairs_become_requests() {
        let inst: Instance<f64> = parse_lilim("small", SMALL).unwrap();
        assert_eq!(inst.requests.len(), 2);
        let r = &inst.requests[0];
        assert_eq!(r.id, RequestId(1));
        assert_eq!(r.load, 2);
        assert_eq!(r.desired_pickup, minutes(10.0));
        assert_eq!(r.earliest_dropoff, minutes(14.0));
        assert_eq!(inst.native_horizon, Some(minutes(100.0)));
        assert_eq!(inst.overrides.fleet_size, Some(2));
        assert_eq!(inst.overrides.capacity, Some(10));
    }

    #[test]
    fn depot_only_file_has_no_requests() {
        let inst: Instance<f64> = parse_lilim("d", "3 5 1\n0 10 10 0 0 500 0 0 0\n").unwrap();
        assert!(inst.requests.is_empty());
        assert_eq!(inst.depot, Location::new(10.0, 10.0));
    }

    #[test]
    fn missing_delivery_is_reported_with_line() {
        let text = "1 5 1\n0 0 0 0 0 100 0 0 0\n1 1 1 1 0 50 0 0 7\n";
        match parse_lilim::<f64>("x", text) {
            Err(InstanceError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("missing delivery"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_pairing_is_rejected() {
        let text = "1 5 1\n0 0 0 0 0 100 0 0 0\n1 1 1 1 0 50 0 0 2\n2 2 2 -1 0 50 0 3 0\n3 1 1 1 0 50 0 0 2\n";
        assert!(parse_lilim::<f64>("x", text).is_err());
    }

    #[test]
    fn malformed_line_is_rejected() {
        let text = "1 5 1\n0 0 0 0 0 100 0 0\n";
        assert!(matches!(parse_lilim::<f64>("x", text), Err(InstanceError::Parse { line: 2, .. })));
    }

    #[test]
    fn writer_round_trips() {
        let inst: Instance<f64> = parse_lilim("small", SMALL).unwrap();
        let text = write_lilim(inst.benchmark.as_ref().unwrap());
        let again: Instance<f64> = parse_lilim("small", &text).unwrap();
        assert_eq!(again.requests, inst.requests);
        assert_eq!(again.benchmark, inst.benchmark);
    }
}
