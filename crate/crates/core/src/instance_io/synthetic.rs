//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConfigOverrides, Instance};
use crate::model::{derive_earliest_dropoff, Location, RequestId, RequestSpec, Seconds};
use crate::scalar::Scalar;
use crate::travel::Travel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub requests: usize,
    pub fleet_size: usize,
    pub capacity: u32,
    /// Side of the square service area; the depot sits in its centre.
    pub area: f64,
    /// Distance units per minute.
    pub speed: f64,
    /// Pickup times are drawn from `[0, horizon]`.
    pub horizon: Seconds,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { requests: 20, fleet_size: 3, capacity: 4, area: 10.0, speed: 1.0, horizon: 3600 }
    }
}

impl RandomSpec {
    /// The corpus shape used for fleet sweeps: a 12-hour day of 100 requests
    /// for 4 vehicles.
    pub fn bundled() -> Self {
        Self { requests: 100, fleet_size: 4, capacity: 8, area: 20.0, speed: 0.5, horizon: 720 * 60 }
    }
}

pub fn random_instance<S: Scalar>(spec: &RandomSpec, seed: u64) -> Instance<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let travel = Travel::euclidean(S::from_f64_lossy(spec.speed));
    let point = |rng: &mut ChaCha8Rng| {
        // whole hundredths keep rational conversions short
        let x = (rng.gen_range(0.0..spec.area) * 100.0).round() / 100.0;
        let y = (rng.gen_range(0.0..spec.area) * 100.0).round() / 100.0;
        Location::new(S::from_f64_lossy(x), S::from_f64_lossy(y))
    };
    let mut requests = Vec::with_capacity(spec.requests);
    for i in 0..spec.requests {
        let pickup = point(&mut rng);
        let dropoff = point(&mut rng);
        let desired = rng.gen_range(0..=spec.horizon);
        let r = RequestSpec { id: RequestId(i as u64), pickup, dropoff, desired_pickup: desired, load: 1 };
        requests.push(derive_earliest_dropoff(r, &travel).expect("euclidean travel resolves every point"));
    }
    let half = S::from_f64_lossy(spec.area / 2.0);
    let mut instance = Instance::new(format!("random-{seed}"), requests, Location::new(half, half), travel);
    instance.overrides = ConfigOverrides {
        fleet_size: Some(spec.fleet_size),
        capacity: Some(spec.capacity),
        ..Default::default()
    };
    instance
}

/// `count` instances with seeds `base_seed, base_seed + 1, …`.
pub fn corpus<S: Scalar>(spec: &RandomSpec, base_seed: u64, count: usize) -> Vec<Instance<S>> {
    (0..count as u64).map(|i| random_instance(spec, base_seed + i)).collect()
}
