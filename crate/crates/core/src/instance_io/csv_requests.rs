//! Trip-request lists in CSV form.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use super::{Instance, InstanceError};
use crate::model::{derive_earliest_dropoff, minutes, Location, RequestId, RequestSpec};
use crate::scalar::Scalar;
use crate::travel::Travel;

pub const CSV_HEADER: [&str; 6] = ["id", "pickup_x", "pickup_y", "dropoff_x", "dropoff_y", "desired_pickup_min"];

/// Reads requests from CSV. With a matrix provider the `x` columns hold node ids.
pub fn parse_csv_requests<S: Scalar, R: Read>(
    name: &str,
    reader: R,
    travel: Travel<S>,
    depot: Location<S>,
) -> Result<Instance<S>, InstanceError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| InstanceError::Row { row: 1, message: e.to_string() })?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != CSV_HEADER {
        let missing: Vec<&str> = CSV_HEADER.iter().copied().filter(|h| !found.contains(h)).collect();
        let message = if missing.is_empty() {
            format!("header must be exactly {}", CSV_HEADER.join(","))
        } else {
            format!("missing column(s) {}", missing.join(", "))
        };
        return Err(InstanceError::Row { row: 1, message });
    }

    let mut requests = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, record) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| InstanceError::Row { row, message: e.to_string() })?;
        let err = |message: String| InstanceError::Row { row, message };
        if record.len() != CSV_HEADER.len() {
            return Err(err(format!("expected {} fields, found {}", CSV_HEADER.len(), record.len())));
        }
        let id: u64 = record[0].parse().map_err(|_| err(format!("id '{}' is not a non-negative integer", &record[0])))?;
        let mut nums = [0.0f64; 5];
        for (k, slot) in nums.iter_mut().enumerate() {
            let field = &record[k + 1];
            *slot = field.parse().map_err(|_| err(format!("{} '{field}' is not numeric", CSV_HEADER[k + 1])))?;
            if !slot.is_finite() {
                return Err(err(format!("{} must be finite", CSV_HEADER[k + 1])));
            }
        }
        if nums[4] < 0.0 {
            return Err(err("desired_pickup_min must not be negative".into()));
        }
        if !seen.insert(id) {
            return Err(err(format!("duplicate id {id}")));
        }
        let point = |x: f64, y: f64| -> Result<Location<S>, InstanceError> {
            match &travel {
                Travel::Matrix(_) => {
                    if x < 0.0 || x.fract() != 0.0 {
                        return Err(err(format!("node id {x} must be a non-negative integer")));
                    }
                    Ok(Location::at_node(S::from_f64_lossy(x), S::from_f64_lossy(y), x as usize))
                }
                Travel::Euclidean { .. } => Ok(Location::new(S::from_f64_lossy(x), S::from_f64_lossy(y))),
            }
        };
        let spec = RequestSpec {
            id: RequestId(id),
            pickup: point(nums[0], nums[1])?,
            dropoff: point(nums[2], nums[3])?,
            desired_pickup: minutes(nums[4]),
            load: 1,
        };
        requests.push(derive_earliest_dropoff(spec, &travel).map_err(|e| err(e.to_string()))?);
    }
    Ok(Instance::new(name, requests, depot, travel))
}

pub fn load_csv_requests<S: Scalar>(
    path: impl AsRef<Path>,
    travel: Travel<S>,
    depot: Location<S>,
) -> Result<Instance<S>, InstanceError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| InstanceError::io(path, e))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_csv_requests(&name, file, travel, depot)
}
