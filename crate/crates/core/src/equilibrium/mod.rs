//! Weak-core allocations with equal treatment of equals, reached through
//! Walrasian equilibria with slack on shrinking relaxations of the
//! consumption sets.

mod demand;
mod pipeline;
mod rationalize;
mod support;
mod tatonnement;
mod utility;

pub use demand::{budget_constraint, consumption_constraints, demand, demand_lp, indirect_utility};
pub use tatonnement::{clearing_selection, search_we_slack, solve_we_slack, solve_we_slack_from, SolverOptions, WeSlack};
pub use utility::{default_utilities, parse_utilities, UtilityProfile};
pub use rationalize::{rationalize, symmetrize};
pub use support::{budget_violations, cleared_allocation, exact_we_slack_violation, supporting_prices, PriceSystem};
pub use pipeline::{find_weak_core_ete, Attempt, CandidateSource, EpsilonSchedule, FindCoreOptions, StageTrace, WeakCoreReport};
