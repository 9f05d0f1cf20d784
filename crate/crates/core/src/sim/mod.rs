//! Monte-Carlo stochastic-geometry simulator used to validate the closed forms.

mod estimate;
mod realization;
mod request;
pub mod rng;
mod window;

pub use estimate::{estimate_outage, with_workers, McEstimate, MonteCarlo, OutageEstimates};
pub use realization::{realize_network, CacheSet, NetworkRealization};
pub use request::{simulate_request, simulate_request_with, InterferenceField, ServiceOutcome, Tier};
pub use rng::{Stream, Streams};
pub use window::{sample_ppp, thin, Point, SimWindow, WindowShape, DEFAULT_GUARD};
