//! Rate-splitting planner for the Gaussian multi-access channel.
//!
//! Given user powers, the noise power and a target rate tuple on the dominant
//! face of the capacity region, the planner computes how to split each user
//! into at most two virtual users, what power and NIS each virtual user gets,
//! and the order in which the receiver decodes them. Only single-user codes
//! and successive interference cancellation are needed to realise the plan.
//!
//! ```
//! use rsma::{compute_split_plan, verify_plan, PlannerConfig, RateAllocation};
//!
//! let half = 0.25 * 7f64.log2();
//! let ra = RateAllocation::new(vec![3.0, 3.0], vec![half, half], 1.0)?;
//! let config = PlannerConfig::default();
//! let plan = compute_split_plan(&ra, &config)?;
//! assert_eq!(plan.virtual_users.len(), 3);
//! assert!(verify_plan(&plan, &ra, config.tolerance)?.passed());
//! # Ok::<(), rsma::Error>(())
//! ```

pub mod allocation;
pub mod cli;
pub mod combiner;
mod error;
pub mod shannon;
pub mod splitter;
pub mod verifier;

pub use allocation::{
    classify_pair, compute_nis, polymatroid_membership, vertex_rates, MembershipStatus, MembershipVerdict,
    NisProfile, PairRelation, Permutation, RateAllocation,
};
pub use combiner::{build_combination_tree, combine, find_combinable_pair, CombinationTree, NodeEntry, NodeId};
pub use error::{Error, Result};
pub use shannon::{capacity, nis_for_rate, Nis, Power, Rate, Tolerance, DEFAULT_TOLERANCE};
pub use splitter::{compute_split_plan, epsilon_bisection, Rect, Region, SplitPlan, VirtualUser};
pub use verifier::{dominant_face_point, sample_dominant_face, verify_plan, VerificationReport};

/// Default cap on users for the subset-enumerating membership check.
pub const DEFAULT_MEMBERSHIP_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannerConfig {
    pub tolerance: Tolerance,
    pub membership_cap: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { tolerance: Tolerance::default(), membership_cap: DEFAULT_MEMBERSHIP_CAP }
    }
}

impl PlannerConfig {
    pub fn with_tolerance(tolerance: Tolerance) -> Self {
        Self { tolerance, ..Self::default() }
    }
}
