use thiserror::Error;

use crate::allocation::MembershipVerdict;

/// Errors produced by the planner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar fell outside the domain of the quantity it was meant to be.
    #[error("{quantity} out of domain: {value}")]
    Domain { quantity: &'static str, value: f64 },

    #[error("invalid rate allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// The membership check enumerates every subset of users.
    #[error("{n} users exceeds the membership enumeration cap of {cap}")]
    TooManyUsers { n: usize, cap: usize },

    #[error("rate tuple is not on the dominant face ({})", .0.summary())]
    NotDominantFace(MembershipVerdict),

    /// A caller broke an ordering or shape precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// No adjacent overlapping or contiguous pair exists; the entry set is not tight.
    #[error("no combinable pair among {remaining} entries (input not tight or tolerance too small)")]
    NoCombinablePair { remaining: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    /// A splitting coefficient came out of [0, 1] by more than the tolerance.
    #[error("splitting coefficient {epsilon} outside [0, 1]")]
    EpsilonOutOfRange { epsilon: f64 },

    /// The closed-form coefficient and the bisection search disagree.
    #[error("closed-form placement {closed_form} disagrees with bisection {bisection}")]
    OracleMismatch { closed_form: f64, bisection: f64 },

    /// The target rate cannot be reached by any placement in the pattern family.
    #[error("target rate {target} outside achievable bracket [{min}, {max}]")]
    Infeasible { target: f64, min: f64, max: f64 },

    /// Partition failure at a combination-tree node.
    #[error("partition of node {node} failed: {source}")]
    Partition {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
