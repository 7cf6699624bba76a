//! Rate splitting: walk the combination tree from the root down, dividing
//! each node's region of the power stack between its two children.
//!
//! The root owns one rectangle of height `ΣP` resting on the noise floor.
//! Every split hands each child one or two rectangles; the leaves' rectangles
//! are the virtual users, and reading them from the top of the stack down
//! gives the successive-decoding order.

mod oracle;
mod partition;
mod plan;
mod region;

pub use oracle::{epsilon_bisection, placement_rects, FillingPattern, Placement};
pub use partition::{
    closed_form_placement, partition, partition_double_rect, partition_single_rect, select_case, Partition,
    PartitionKind, SplitCase, CROSS_CHECK_TOLERANCE,
};
pub use plan::{compute_split_plan, plan_from_tree, PlanTrace, SplitPlan, VirtualUser};
pub use region::{Rect, Region};
