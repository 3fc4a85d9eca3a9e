//! Comparators for the myopic policy: a stochastic DP oracle, the
//! perfect-foresight bound, receding-horizon control and heuristic
//! customer types.

pub mod bound;
pub mod customer;
pub mod dp;
pub mod markov;
pub mod mpc;

pub use bound::{perfect_foresight_bound, solve_relaxed, BoundSolution};
pub use customer::{run_customer_type, CustomerType};
pub use dp::{run_dp_policy, solve_dp, ActionSearch, DpOptions, DpSolution};
pub use markov::{ExactForecast, Forecaster, MarkovRenewable, ProfileForecast, Transitions};
pub use mpc::{run_mpc, MpcOptions, WindowConvention};
