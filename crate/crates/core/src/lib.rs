//! Outage analysis of cache-enabled small cells underlaying a macro network.
//!
//! Base stations of both tiers are Poisson point processes. Small cells cache
//! part of a content library and transmit on a random fraction of the
//! sub-channels; a request is served by the nearest small cell holding the
//! content, else by the nearest macro cell, and fails when no one is in range
//! or the SIR falls below a threshold.
//!
//! [`analytic`] evaluates the outage probability in closed form, [`sim`]
//! estimates it by simulating the geometry, and [`experiments`] sweeps either
//! engine over parameter grids.
//!
//! ```
//! use hetcache::{analytic, CachePolicy, ContentLibrary, RequestDistribution, SystemParams};
//!
//! let params = SystemParams::default();
//! let library = ContentLibrary::from_normalized(100, 0.3)?;
//! let requests = RequestDistribution::zipf(100, 0.8)?;
//! let p = analytic::average_outage(&params, CachePolicy::Popularity, &library, &requests)?;
//! assert!(p > 0.0 && p < 1.0);
//! # Ok::<(), hetcache::Error>(())
//! ```

pub mod analytic;
pub mod config;
mod error;
pub mod experiments;
pub mod params;
pub mod quadrature;
pub mod sim;
pub mod stats;

pub use analytic::{OutageBreakdown, OutageModel};
pub use config::ModelConfig;
pub use error::{Error, Result};
pub use params::{CachePolicy, ContentLibrary, RequestDistribution, SystemParams};

// Book chapters compile and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/caching.md")]
    mod caching {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/outage.md")]
    mod outage {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
