//! Rolling-horizon solver for the offline pickup-and-delivery problem with
//! time windows.
//!
//! The horizon is covered by overlapping windows of `(c^RH + 1)·t_s`. Each
//! window is solved by building a request–trip–vehicle graph and an exact
//! assignment over it; the first `t_s` of the solution is then executed by a
//! vehicle simulator and becomes fixed.
//!
//! Everything that is a length or a cost is generic over [`Scalar`]; the
//! aliases below fix it to `f64`, `f32` or [`Rational`].

pub mod assignment;
pub mod engine;
pub mod instance_io;
pub mod metrics;
pub mod model;
pub mod routing;
pub mod rtv;
pub mod scalar;
pub mod simulator;
pub mod travel;
pub mod validate;
pub mod window;

pub use assignment::{compute_penalty, solve_assignment, AssignmentError, IlpSolution};
pub use engine::{run, run_baseline_rh0, run_with_observer, EngineError, EngineObserver, IterationLog, IterationView};
pub use instance_io::{adapt_benchmark, load_csv_requests, load_lilim, write_report, Instance, InstanceError, ReportFormat, RunReport};
pub use metrics::MetricsSummary;
pub use model::{
    minutes, validate_config, Location, PenaltyPolicy, Request, RequestId, Route, Seconds, ServiceRecord, SolverConfig,
    Stop, StopKind, Vehicle, VehicleId,
};
pub use routing::CandidateRoute;
pub use rtv::RtvGraph;
pub use scalar::{Rational, Scalar};
pub use simulator::VehicleState;
pub use travel::Travel;
pub use validate::{validate_report, Violation};

pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type InstanceQ = Instance<Rational>;

pub type Report64 = RunReport<f64>;
pub type Report32 = RunReport<f32>;
pub type ReportQ = RunReport<Rational>;

pub type Route64 = Route<f64>;
pub type Route32 = Route<f32>;
pub type RouteQ = Route<Rational>;

pub type Travel64 = Travel<f64>;
pub type Travel32 = Travel<f32>;
pub type TravelQ = Travel<Rational>;

pub type RtvGraph64 = RtvGraph<f64>;
pub type RtvGraphQ = RtvGraph<Rational>;
