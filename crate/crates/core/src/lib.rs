//! Secrecy rates of parallel relay channels with an eavesdropper.
//!
//! * [`channel`]: channel instances, budgets, allocations, geometry.
//! * [`rates`]: closed-form lower, upper and relay-deaf bounds.
//! * [`optim`]: power-allocation maximization, grid oracle, gradient checks.
//! * [`fading`]: ergodic rates of fading channels and relay-position sweeps.
//! * [`cli`]: the `secrelay` command-line front end.

pub mod channel;
pub mod cli;
pub mod error;
pub mod fading;
pub mod optim;
pub mod rates;

pub use channel::{
    Allocation, GaussianSubchannel, LinkGains, Mode, ModeAssignment, ParallelChannel, PowerBudget,
};
pub use error::{Error, Result};
pub use optim::{BoundKind, SolverOptions};
pub use rates::BoundResult;
