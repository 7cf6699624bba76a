//! Combination tree: repeatedly merge an overlapping or contiguous pair of
//! (super)users until a single superuser carries the total power and rate.
//!
//! Splitting later walks the merges in reverse.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::allocation::{classify_pair, polymatroid_membership, PairRelation, RateAllocation};
use crate::error::{Error, Result};
use crate::shannon::{capacity, nis_for_rate, Nis, Power, Rate, Tolerance};
use crate::PlannerConfig;

/// Leaves are `0..n` (user indices); internal nodes follow in creation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

/// A user or superuser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    pub power: Power,
    pub rate: Rate,
    pub nis: Nis,
    pub members: BTreeSet<usize>,
}

impl NodeEntry {
    pub fn leaf(user: usize, power: Power, rate: Rate) -> Result<Self> {
        Ok(Self {
            id: NodeId(user),
            power,
            rate,
            nis: nis_for_rate(rate, power)?,
            members: BTreeSet::from([user]),
        })
    }

    fn key(&self) -> (f64, NodeId) {
        (self.nis.get(), self.id)
    }
}

/// Merges two disjoint entries into a superuser with summed power and rate.
pub fn combine(a: &NodeEntry, b: &NodeEntry, id: NodeId) -> Result<NodeEntry> {
    if a.members.is_empty() || b.members.is_empty() {
        return Err(Error::Contract("cannot combine an entry without members".into()));
    }
    if !a.members.is_disjoint(&b.members) {
        return Err(Error::Contract(format!("nodes {} and {} share members", a.id.0, b.id.0)));
    }
    let power = a.power + b.power;
    let rate = a.rate + b.rate;
    Ok(NodeEntry {
        id,
        power,
        rate,
        nis: nis_for_rate(rate, power)?,
        members: a.members.union(&b.members).copied().collect(),
    })
}

/// Finds the lowest-NIS adjacent pair (in increasing-NIS order) that is
/// overlapping or contiguous.
///
/// Returns `(low, high, relation)` as indices into `entries`, `low` having
/// the smaller NIS (ties: smaller node id).
pub fn find_combinable_pair(entries: &[NodeEntry], tol: Tolerance) -> Result<(usize, usize, PairRelation)> {
    let mut sorted: Vec<usize> = (0..entries.len()).collect();
    sorted.sort_by(|&a, &b| {
        let (ka, kb) = (entries[a].key(), entries[b].key());
        ka.0.total_cmp(&kb.0).then(ka.1.cmp(&kb.1))
    });
    for w in sorted.windows(2) {
        let (lo, hi) = (&entries[w[0]], &entries[w[1]]);
        let relation = classify_pair((lo.power, lo.nis), (hi.power, hi.nis), tol)?;
        if relation != PairRelation::Discontinuous {
            return Ok((w[0], w[1], relation));
        }
    }
    Err(Error::NoCombinablePair { remaining: entries.len() })
}

/// Binary tree of merges; see the module docs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationTree {
    /// Indexed by `NodeId`.
    pub nodes: Vec<NodeEntry>,
    /// `(low, high)` children of internal nodes, low having the smaller NIS.
    pub children: Vec<Option<(NodeId, NodeId)>>,
    pub parent: Vec<Option<NodeId>>,
    pub root: NodeId,
    /// Internal nodes in creation order.
    pub merge_order: Vec<NodeId>,
    /// Relation of the two children when they were merged.
    pub relation_at_merge: Vec<Option<PairRelation>>,
}

impl CombinationTree {
    pub fn node(&self, id: NodeId) -> &NodeEntry {
        &self.nodes[id.0]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len().div_ceil(2)
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children[id.0].is_none()
    }

    /// Internal nodes parent-before-child.
    pub fn splitting_order(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.merge_order.iter().rev().copied()
    }
}

/// Builds the combination tree of a dominant-face allocation.
pub fn build_combination_tree(ra: &RateAllocation, config: &PlannerConfig) -> Result<CombinationTree> {
    let verdict = polymatroid_membership(ra, config)?;
    if !verdict.is_dominant_face() {
        return Err(Error::NotDominantFace(verdict));
    }
    build_unchecked(ra, config.tolerance)
}

fn build_unchecked(ra: &RateAllocation, tol: Tolerance) -> Result<CombinationTree> {
    let n = ra.n();
    let total = 2 * n - 1;
    let mut nodes = Vec::with_capacity(total);
    for (k, (&p, &r)) in ra.powers().iter().zip(ra.rates()).enumerate() {
        nodes.push(NodeEntry::leaf(k, p, r)?);
    }
    let mut children = vec![None; n];
    let mut relation_at_merge = vec![None; n];
    let mut merge_order = Vec::with_capacity(n - 1);
    let mut active: Vec<NodeEntry> = nodes.clone();

    let noise = ra.noise();
    let stack_scale = noise.get() + ra.total_power().get();

    while active.len() > 1 {
        let (lo, hi, relation) = find_combinable_pair(&active, tol)?;
        let id = NodeId(nodes.len());
        let merged = combine(&active[lo], &active[hi], id)?;
        children.push(Some((active[lo].id, active[hi].id)));
        relation_at_merge.push(Some(relation));
        merge_order.push(id);
        nodes.push(merged.clone());

        let (first, second) = if lo > hi { (lo, hi) } else { (hi, lo) };
        active.swap_remove(first);
        active.swap_remove(second);
        active.push(merged);

        // the remaining entries still form a base
        let power: Power = active.iter().map(|e| e.power).sum();
        let rate: Rate = active.iter().map(|e| e.rate).sum();
        let cap = capacity(power, noise).get();
        if !tol.eq(rate.get(), cap, cap) {
            return Err(Error::Invariant(format!(
                "entry set lost tightness after merge {}: sum rate {} vs capacity {cap}",
                id.0,
                rate.get()
            )));
        }
    }

    let root = active[0].id;
    let root_nis = nodes[root.0].nis.get();
    if !tol.eq(root_nis, noise.get(), stack_scale) {
        return Err(Error::Invariant(format!(
            "root NIS {root_nis} does not sit on the noise floor {}",
            noise.get()
        )));
    }

    let mut parent = vec![None; nodes.len()];
    for (id, ch) in children.iter().enumerate() {
        if let Some((a, b)) = ch {
            parent[a.0] = Some(NodeId(id));
            parent[b.0] = Some(NodeId(id));
        }
    }

    Ok(CombinationTree { nodes, children, parent, root, merge_order, relation_at_merge })
}
