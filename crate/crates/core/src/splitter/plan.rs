use serde::{Deserialize, Serialize};

use super::partition::{partition, Partition};
use super::region::{Rect, Region};
use crate::allocation::RateAllocation;
use crate::combiner::{build_combination_tree, CombinationTree, NodeId};
use crate::error::{Error, Result};
use crate::shannon::{capacity, Nis, Power, Rate, Tolerance};
use crate::PlannerConfig;

/// One independently coded stream: a piece of a real user's power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualUser {
    /// 0-based index of the user this piece belongs to.
    pub parent_user: usize,
    pub power: Power,
    pub nis: Nis,
    pub rate: Rate,
}

impl VirtualUser {
    pub fn new(parent_user: usize, power: Power, nis: Nis) -> Self {
        Self { parent_user, power, nis, rate: capacity(power, nis) }
    }

    pub fn top(&self) -> f64 {
        self.nis.get() + self.power.get()
    }
}

/// Splitting coefficients, virtual users and decoding order realising a
/// dominant-face rate tuple with single-user codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    /// Per user, the fraction of power in the upper piece; 1 when unsplit.
    pub epsilon: Vec<f64>,
    /// Grouped by user; a split user's upper piece comes first.
    pub virtual_users: Vec<VirtualUser>,
    /// Indices into `virtual_users`, first decoded first (highest NIS).
    pub decode_order: Vec<usize>,
}

impl SplitPlan {
    /// Assembles a plan from per-user pieces, deriving `ε` and the decode order.
    pub fn from_pieces(mut virtual_users: Vec<VirtualUser>, n: usize) -> Self {
        virtual_users.sort_by(|a, b| a.parent_user.cmp(&b.parent_user).then(b.nis.get().total_cmp(&a.nis.get())));
        let epsilon = (0..n)
            .map(|u| {
                let pieces: Vec<&VirtualUser> = virtual_users.iter().filter(|v| v.parent_user == u).collect();
                match pieces.as_slice() {
                    [upper, lower] => upper.power.get() / (upper.power.get() + lower.power.get()),
                    _ => 1.0,
                }
            })
            .collect();
        let mut decode_order: Vec<usize> = (0..virtual_users.len()).collect();
        decode_order.sort_by(|&a, &b| virtual_users[b].nis.get().total_cmp(&virtual_users[a].nis.get()).then(a.cmp(&b)));
        Self { epsilon, virtual_users, decode_order }
    }

    pub fn user_count(&self) -> usize {
        self.epsilon.len()
    }

    pub fn pieces_of(&self, user: usize) -> impl Iterator<Item = &VirtualUser> {
        self.virtual_users.iter().filter(move |v| v.parent_user == user)
    }

    /// `u3`, or `u3a`/`u3b` for the upper/lower piece of a split user (1-based).
    pub fn label(&self, index: usize) -> String {
        let v = &self.virtual_users[index];
        let siblings: Vec<usize> =
            (0..self.virtual_users.len()).filter(|&k| self.virtual_users[k].parent_user == v.parent_user).collect();
        let user = v.parent_user + 1;
        if siblings.len() < 2 {
            format!("u{user}")
        } else {
            let pos = siblings.iter().position(|&k| k == index).unwrap_or(0);
            format!("u{user}{}", (b'a' + pos as u8) as char)
        }
    }

    /// Virtual users in the order the receiver decodes them.
    pub fn decode_sequence(&self) -> impl Iterator<Item = &VirtualUser> {
        self.decode_order.iter().map(|&k| &self.virtual_users[k])
    }
}

/// The plan together with what happened at each internal node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanTrace {
    pub plan: SplitPlan,
    /// In splitting order (root first).
    pub splits: Vec<(NodeId, Partition)>,
}

/// Builds the combination tree for `ra` and splits it into a plan.
pub fn compute_split_plan(ra: &RateAllocation, config: &PlannerConfig) -> Result<SplitPlan> {
    let tree = build_combination_tree(ra, config)?;
    Ok(plan_from_tree(ra, &tree, config.tolerance)?.plan)
}

/// Splits an existing combination tree.
pub fn plan_from_tree(ra: &RateAllocation, tree: &CombinationTree, tol: Tolerance) -> Result<PlanTrace> {
    let n = ra.n();
    if tree.leaf_count() != n {
        return Err(Error::Contract(format!("tree has {} leaves for {n} users", tree.leaf_count())));
    }
    let root = tree.node(tree.root);
    let mut regions: Vec<Option<Region>> = vec![None; tree.nodes.len()];
    // the root rests at its own NIS, which equals σ² within tolerance for a base
    regions[tree.root.0] = Some(Region::Single(Rect { power: root.power, nis: root.nis }));

    let mut splits = Vec::with_capacity(n.saturating_sub(1));
    for id in tree.splitting_order() {
        let attach = |e: Error| Error::Partition { node: id.0, source: Box::new(e) };
        let region = regions[id.0]
            .take()
            .ok_or_else(|| attach(Error::Invariant("node reached before its parent".into())))?;
        let (low, high) = tree.children[id.0].ok_or_else(|| attach(Error::Invariant("leaf in merge order".into())))?;
        let relation = tree.relation_at_merge[id.0].ok_or_else(|| attach(Error::Invariant("missing relation".into())))?;
        let part = partition(&region, tree.node(low), tree.node(high), relation, tol).map_err(attach)?;
        regions[low.0] = Some(part.low);
        regions[high.0] = Some(part.high);
        splits.push((id, part));
    }

    let mut pieces = Vec::with_capacity(2 * n - 1);
    for user in 0..n {
        let region = regions[user]
            .ok_or_else(|| Error::Invariant(format!("user {} received no region", user + 1)))?;
        let target = ra.powers()[user].get();
        match region {
            Region::Single(r) => pieces.push(VirtualUser::new(user, ra.powers()[user], r.nis)),
            Region::Double { upper, lower } => {
                // keep the user's power exact; the lower piece takes the rounding
                let lower_power = Power::new((target - upper.power.get()).max(0.0))?;
                pieces.push(VirtualUser::new(user, upper.power, upper.nis));
                if lower_power.get() > 0.0 {
                    pieces.push(VirtualUser::new(user, lower_power, lower.nis));
                }
            }
        }
    }
    Ok(PlanTrace { plan: SplitPlan::from_pieces(pieces, n), splits })
}
