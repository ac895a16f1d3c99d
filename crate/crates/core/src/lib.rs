//! Transmit power allocation for a two-user massive-MIMO NOMA downlink.
//!
//! A source with `n_s` antennas superposes signals for a weak user (more
//! power, treats the other signal as noise) and a strong user (cancels the
//! weak user's signal first). [`optimizer::bisect_allocate`] finds the
//! per-antenna split that maximizes the ergodic sum SE subject to a total
//! power budget and a minimum weak-user rate, using either
//!
//! * Monte-Carlo log-det averages over Rayleigh channels ([`channel`]), or
//! * closed-form Marchenko-Pastur capacities ([`asymptotic`]), whose cost
//!   does not depend on the array size.
//!
//! [`bench`] drives parameter sweeps and timing comparisons and writes them
//! as CSV.

pub mod asymptotic;
pub mod bench;
pub mod channel;
pub mod error;
pub mod exec;
pub mod optimizer;
pub mod quadrature;
pub mod validate;

pub use channel::{CapacityEstimate, MonteCarlo, PowerSplit, SeedStream, SystemConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use optimizer::{AllocationProblem, AllocationResult, Method};
