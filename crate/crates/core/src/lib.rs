//! Exact analysis of housing markets with fractional endowments.
//!
//! Agents own doubly stochastic shares of objects and rank objects strictly.
//! Assignments are compared by first-order stochastic dominance. The crate
//! decides blocking and core membership with exact rational linear programs,
//! scripts the two counterexample certifications (empty strong core, weak
//! core incompatible with equal-endowment no envy), and computes weak-core
//! allocations with equal treatment of equals from Walrasian equilibria with
//! slack.
//!
//! Numeric code is generic over [`Scalar`]; every certified result uses
//! [`Rational`], and the equilibrium search runs over `f64`.

pub mod blocking;
pub mod dominance;
pub mod economy;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod lp;
pub mod membership;
pub mod sampling;
pub mod scalar;
pub mod scenario;
pub mod ttc;

pub use economy::{Allocation, Economy, EqualClassPartition, Preference};
pub use error::{BlockingError, CoreError, DominanceError, EconomyError, EquilibriumError, LpError, ScriptError};
pub use lp::{check_certificate, solve, LinearProgram, LpOutcome, Relation, Sense};
pub use scalar::{ratio, Rational, Scalar};

/// Exact economy, the type every certification runs on.
pub type RatEconomy = Economy<Rational>;
/// Floating-point economy used inside the equilibrium search.
pub type FloatEconomy = Economy<f64>;
pub type RatAllocation = Allocation<Rational>;
pub type FloatAllocation = Allocation<f64>;
pub type RatLinearProgram = LinearProgram<Rational>;
pub type FloatLinearProgram = LinearProgram<f64>;
pub type RatLpOutcome = LpOutcome<Rational>;
