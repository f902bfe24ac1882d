//! Distributed power allocation for multi-user, multi-channel interference
//! networks.
//!
//! The crate models a Gaussian interference channel game in which every
//! user chooses a power allocation across `K` channels by water-filling
//! against the interference plus noise (IPN) it observes. It provides:
//!
//! * [`network`]: the static network (gains, noise floors, budgets, masks),
//!   SINR, rate and normalized IPN.
//! * [`waterfill`]: exact and noisy water-filling best responses and the
//!   stacked (Jacobi) operator.
//! * [`noise`]: seeded generators for IPN estimation error.
//! * [`algorithms`]: IWF, relaxed IWF and average IWF run loops with traces.
//! * [`analysis`]: the gain matrix, spectral radius, contraction certificate,
//!   weighted block-maximum norms and a convergence detector.
//! * [`experiments`]: canned strong-interference scenarios, random weak
//!   networks, the bias study and the scalar stochastic recursion.
//! * [`config`] and [`cli`]: the scenario file format, CSV output and the
//!   command-line front end.
//!
//! ```
//! use aiwf::experiments::scenario_strong_interference_a;
//! use aiwf::waterfill::stacked_operator;
//!
//! let scenario = scenario_strong_interference_a();
//! let ne = scenario.reference_equilibrium.as_ref().unwrap();
//! let image = stacked_operator(&scenario.network, ne, None).unwrap();
//! assert!((image.get(0, 0) - 20.0 / 3.0).abs() < 1e-9);
//! ```

pub mod algorithms;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod network;
pub mod noise;
pub mod waterfill;

pub use error::{Error, Result};
pub use network::{NetworkModel, PowerProfile};
