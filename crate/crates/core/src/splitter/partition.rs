//! Two-child partition of a parent region.
//!
//! The child with the smaller NIS (`j`, "low") is the one that may be split;
//! the other child (`i`, "high") receives exactly what `j` leaves free.

use serde::{Deserialize, Serialize};

use super::oracle::{epsilon_bisection, Family, FillingPattern, Placement};
use super::region::{absorb_slivers, complement, Rect, Region, Span};
use crate::allocation::PairRelation;
use crate::combiner::NodeEntry;
use crate::error::{Error, Result};
use crate::shannon::{capacity_raw, nis_for_rate_raw, snr_factor, Tolerance};

/// Closed form and bisection must agree to this relative precision.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-6;
/// Relative comparisons of a coefficient treat magnitudes below this as equal scale.
const EPSILON_FLOOR: f64 = 1e-6;

/// Which filling applies when the parent occupies two rectangles, decided by
/// comparing `P_j` with the upper (`P¹`) and lower (`P²`) rectangle heights
/// and, when only one rectangle can hold `j`, by a rate threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitCase {
    /// `P¹ ≥ P_j` and `P² ≥ P_j`.
    BothFit,
    /// `P¹ ≤ P_j` and `P² ≤ P_j`.
    NeitherFits,
    /// Only the upper rectangle holds `j`, and `j` needs a high rate: `j`
    /// fills the lower rectangle and its remainder slides in the upper one.
    UpperFitsSlide,
    /// Only the upper rectangle holds `j`, low rate: top/bottom filling.
    UpperFitsOuter,
    /// Only the lower rectangle holds `j`, high rate: top/bottom filling.
    LowerFitsOuter,
    /// Only the lower rectangle holds `j`, low rate: `j` fills the upper
    /// rectangle and its remainder slides in the lower one.
    LowerFitsSlide,
}

impl SplitCase {
    pub fn pattern(self) -> FillingPattern {
        match self {
            SplitCase::BothFit | SplitCase::UpperFitsOuter | SplitCase::LowerFitsOuter => FillingPattern::Outer,
            SplitCase::NeitherFits => FillingPattern::Inner,
            SplitCase::UpperFitsSlide => FillingPattern::SlideUpper,
            SplitCase::LowerFitsSlide => FillingPattern::SlideLower,
        }
    }
}

/// How a node's region was divided.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PartitionKind {
    /// Contiguous children stacked without splitting.
    Stacked,
    /// Single parent rectangle, `j` split around an unsplit `i`.
    Sandwich,
    /// Two parent rectangles.
    Double(SplitCase),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub low: Region,
    pub high: Region,
    pub kind: PartitionKind,
    /// Fraction of `j`'s power in its upper piece, after snapping.
    pub epsilon: f64,
}

/// Selects the filling for `j = (P_j, R_j)` inside a two-rectangle parent.
///
/// Height comparisons treat differences within `τ·(P¹+P²)` as equal and
/// resolve them toward the case whose coefficient degenerates to 0 or 1.
pub fn select_case(upper: Rect, lower: Rect, pj: f64, rj: f64, tol: Tolerance) -> SplitCase {
    let (p1, d1) = (upper.power.get(), upper.nis.get());
    let (p2, d2) = (lower.power.get(), lower.nis.get());
    let band = tol.band(p1 + p2);
    let upper_fits = p1 >= pj - band;
    let lower_fits = p2 >= pj - band;
    match (upper_fits, lower_fits) {
        (true, true) => SplitCase::BothFit,
        (false, false) => SplitCase::NeitherFits,
        (true, false) => {
            let rest = pj - p2;
            let threshold = capacity_raw(p2, d2) + capacity_raw(rest, p1 + d1 - rest);
            if rj >= threshold {
                SplitCase::UpperFitsSlide
            } else {
                SplitCase::UpperFitsOuter
            }
        }
        (false, true) => {
            let threshold = capacity_raw(p1, d1) + capacity_raw(pj - p1, d2);
            if rj >= threshold {
                SplitCase::LowerFitsOuter
            } else {
                SplitCase::LowerFitsSlide
            }
        }
    }
}

/// Closed-form placement of `j` for a two-rectangle parent.
///
/// The top/bottom filling solves
/// `R_j = g(ε·P_j, P¹+Δ¹−ε·P_j) + g((1−ε)·P_j, Δ²)` for `ε`:
///
/// `ε = (P¹+Δ¹)(Δ²·2^{2R_j} − P_j − Δ²) / (P_j·(Δ²·2^{2R_j} − P¹ − Δ¹))`.
///
/// The returned coefficient is not clamped.
pub fn closed_form_placement(upper: Rect, lower: Rect, pj: f64, rj: f64, case: SplitCase) -> Placement {
    let (p1, d1) = (upper.power.get(), upper.nis.get());
    let (p2, d2) = (lower.power.get(), lower.nis.get());
    let x = snr_factor(rj);
    let top = p1 + d1;
    let lower_top = p2 + d2;
    match case {
        SplitCase::BothFit | SplitCase::UpperFitsOuter | SplitCase::LowerFitsOuter => {
            let epsilon = top * (d2 * x - pj - d2) / (pj * (d2 * x - top));
            Placement { epsilon, upper_nis: top - epsilon * pj, lower_nis: d2 }
        }
        SplitCase::NeitherFits => {
            let epsilon = 1.0 - lower_top * (d1 * x - pj - d1) / (pj * (d1 * x - lower_top));
            Placement { epsilon, upper_nis: d1, lower_nis: lower_top - (1.0 - epsilon) * pj }
        }
        SplitCase::UpperFitsSlide => {
            let epsilon = 1.0 - p2 / pj;
            let piece = epsilon * pj;
            let residual = rj - capacity_raw(p2, d2);
            let upper_nis = if residual > 0.0 { nis_for_rate_raw(residual, piece) } else { top - piece };
            Placement { epsilon, upper_nis, lower_nis: d2 }
        }
        SplitCase::LowerFitsSlide => {
            let epsilon = p1 / pj;
            let piece = pj - p1;
            let residual = rj - capacity_raw(p1, d1);
            let lower_nis = if residual > 0.0 { nis_for_rate_raw(residual, piece) } else { lower_top - piece };
            Placement { epsilon, upper_nis: d1, lower_nis }
        }
    }
}

/// Splits a single parent rectangle between two children.
///
/// Contiguous children are stacked, `j` at the bottom. Otherwise `i` stays
/// whole at its own NIS and `j` takes the power left below and above it:
/// `ε_j = (P + Δ − (P_i + Δ_i)) / P_j`.
pub fn partition_single_rect(
    parent: Rect,
    low: &NodeEntry,
    high: &NodeEntry,
    relation: PairRelation,
    tol: Tolerance,
) -> Result<Partition> {
    let region = Region::Single(parent);
    check_children(&region, low, high, relation, tol)?;
    let (p, d) = (parent.power.get(), parent.nis.get());
    let pj = low.power.get();
    let merge_band = tol.band(parent.top());

    if relation == PairRelation::Contiguous {
        let low_rect = Span::new(d, pj);
        let high_rect = Span::new(d + pj, p - pj);
        return Ok(Partition {
            low: Region::from_spans(vec![low_rect], merge_band)?,
            high: Region::from_spans(vec![high_rect], merge_band)?,
            kind: PartitionKind::Stacked,
            epsilon: 0.0,
        });
    }

    let (pi, di) = (high.power.get(), high.nis.get());
    let raw = (p + d - (pi + di)) / pj;
    check_unit(raw, tol)?;
    let family = Family::new(FillingPattern::Sandwich, &region, pj)?;
    let closed = family.placement(raw);
    let oracle = epsilon_bisection(FillingPattern::Sandwich, &region, low.power, low.rate)?;
    cross_check(&closed, &oracle, FillingPattern::Sandwich)?;

    let epsilon = snap(closed.epsilon, family.range(), tol.band(p) / pj);
    let placement = family.placement(epsilon);
    finish(&region, placement, pj, PartitionKind::Sandwich, tol)
}

/// Splits a two-rectangle parent between two children.
pub fn partition_double_rect(
    upper: Rect,
    lower: Rect,
    low: &NodeEntry,
    high: &NodeEntry,
    relation: PairRelation,
    tol: Tolerance,
) -> Result<Partition> {
    if upper.nis.get() < lower.top() {
        return Err(Error::Contract(format!(
            "upper rectangle at {} overlaps lower rectangle ending at {}",
            upper.nis.get(),
            lower.top()
        )));
    }
    let region = Region::Double { upper, lower };
    check_children(&region, low, high, relation, tol)?;
    let (pj, rj) = (low.power.get(), low.rate.get());

    let case = select_case(upper, lower, pj, rj, tol);
    let pattern = case.pattern();
    let raw = closed_form_placement(upper, lower, pj, rj, case);
    check_unit(raw.epsilon, tol)?;
    let family = Family::new(pattern, &region, pj)?;
    let closed = family.placement(raw.parameter(pattern));
    let oracle = epsilon_bisection(pattern, &region, low.power, low.rate)?;
    cross_check(&closed, &oracle, pattern)?;

    let snap_band = if pattern.slides() { tol.band(region.power()) } else { tol.band(region.power()) / pj };
    let param = snap(closed.parameter(pattern), family.range(), snap_band);
    let placement = family.placement(param);
    finish(&region, placement, pj, PartitionKind::Double(case), tol)
}

/// Dispatches on the parent's shape.
pub fn partition(parent: &Region, low: &NodeEntry, high: &NodeEntry, relation: PairRelation, tol: Tolerance) -> Result<Partition> {
    match *parent {
        Region::Single(rect) => partition_single_rect(rect, low, high, relation, tol),
        Region::Double { upper, lower } => partition_double_rect(upper, lower, low, high, relation, tol),
    }
}

fn check_children(region: &Region, low: &NodeEntry, high: &NodeEntry, relation: PairRelation, tol: Tolerance) -> Result<()> {
    if relation == PairRelation::Discontinuous {
        return Err(Error::Contract("discontinuous children cannot share a parent".into()));
    }
    let scale = region.top();
    if low.nis.get() > high.nis.get() + tol.band(scale) {
        return Err(Error::Contract(format!(
            "low child NIS {} above high child NIS {}",
            low.nis.get(),
            high.nis.get()
        )));
    }
    let power = low.power.get() + high.power.get();
    if !tol.eq(power, region.power(), scale) {
        return Err(Error::Contract(format!("children power {power} vs region power {}", region.power())));
    }
    let rate = low.rate.get() + high.rate.get();
    let region_rate = region.rate();
    if !tol.eq(rate, region_rate, region_rate.max(1.0)) {
        return Err(Error::Contract(format!("children rate {rate} vs region rate {region_rate}")));
    }
    Ok(())
}

fn check_unit(epsilon: f64, tol: Tolerance) -> Result<()> {
    let band = tol.get();
    if !(epsilon >= -band && epsilon <= 1.0 + band) {
        return Err(Error::EpsilonOutOfRange { epsilon });
    }
    Ok(())
}

fn cross_check(closed: &Placement, oracle: &Placement, pattern: FillingPattern) -> Result<()> {
    let (a, b) = (closed.parameter(pattern), oracle.parameter(pattern));
    let floor = if pattern.slides() { 0.0 } else { EPSILON_FLOOR };
    let scale = a.abs().max(b.abs()).max(floor);
    if (a - b).abs() > CROSS_CHECK_TOLERANCE * scale {
        return Err(Error::OracleMismatch { closed_form: a, bisection: b });
    }
    Ok(())
}

/// Pulls `value` onto an end of `range` when it lies within `band` of it.
fn snap(value: f64, (lo, hi): (f64, f64), band: f64) -> f64 {
    let v = value.clamp(lo, hi);
    if v - lo <= band {
        lo
    } else if hi - v <= band {
        hi
    } else {
        v
    }
}

fn finish(region: &Region, placement: Placement, pj: f64, kind: PartitionKind, tol: Tolerance) -> Result<Partition> {
    let up = placement.epsilon * pj;
    let j_spans = vec![Span::new(placement.upper_nis, up), Span::new(placement.lower_nis, pj - up)];
    let i_spans = complement(&region.spans(), &j_spans);

    let sliver = tol.band(region.power());
    let merge_band = tol.band(region.top());
    let low = Region::from_spans(absorb_slivers(j_spans, sliver), merge_band)?;
    let high = Region::from_spans(absorb_slivers(i_spans, sliver), merge_band)?;
    Ok(Partition { low, high, kind, epsilon: placement.epsilon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiner::NodeId;
    use crate::shannon::{Power, Rate};
    use std::collections::BTreeSet;

    fn rect(p: f64, d: f64) -> Rect {
        Rect::new(p, d).unwrap()
    }

    fn node(id: usize, p: f64, r: f64) -> NodeEntry {
        NodeEntry {
            id: NodeId(id),
            power: Power::new(p).unwrap(),
            rate: Rate::new(r).unwrap(),
            nis: crate::shannon::Nis::new(nis_for_rate_raw(r, p)).unwrap(),
            members: BTreeSet::from([id]),
        }
    }

    fn rects(r: &Region) -> Vec<(f64, f64)> {
        r.rects().map(|x| (x.power.get(), x.nis.get())).collect()
    }

    fn close(a: (f64, f64), b: (f64, f64), eps: f64) -> bool {
        (a.0 - b.0).abs() < eps && (a.1 - b.1).abs() < eps
    }

    #[test]
    fn symmetric_two_user_single_rect() {
        let half = 0.25 * 7f64.log2();
        let (j, i) = (node(0, 3.0, half), node(1, 3.0, half));
        let part = partition_single_rect(rect(6.0, 1.0), &j, &i, PairRelation::Overlapping, Tolerance::default()).unwrap();
        assert_eq!(part.kind, PartitionKind::Sandwich);
        let di = 3.0 / (7f64.sqrt() - 1.0);
        let eps = (7.0 - 3.0 - di) / 3.0;
        assert!((part.epsilon - eps).abs() < 1e-12);
        assert!((part.epsilon - 0.72573).abs() < 1e-4);
        let low = rects(&part.low);
        assert!(close(low[0], (3.0 * (1.0 - eps), 1.0), 1e-12));
        assert!(close(low[1], (3.0 * eps, 3.0 + di), 1e-12));
        assert!(close(rects(&part.high)[0], (3.0, di), 1e-12));
        assert!((part.low.rate() - half).abs() < 1e-12);
        assert!((part.high.rate() - half).abs() < 1e-12);
    }

    #[test]
    fn contiguous_single_rect_is_stacked() {
        let (j, i) = (node(0, 3.0, 1.0), node(1, 3.0, 0.5 * 1.75f64.log2()));
        let part = partition_single_rect(rect(6.0, 1.0), &j, &i, PairRelation::Contiguous, Tolerance::default()).unwrap();
        assert_eq!(part.kind, PartitionKind::Stacked);
        assert_eq!(rects(&part.low), vec![(3.0, 1.0)]);
        assert_eq!(rects(&part.high), vec![(3.0, 4.0)]);
    }

    #[test]
    fn three_user_root_split() {
        let third = 7f64.log2() / 6.0;
        let j = node(3, 4.0, 2.0 * third);
        let i = node(2, 2.0, third);
        let part = partition_single_rect(rect(6.0, 1.0), &j, &i, PairRelation::Overlapping, Tolerance::default()).unwrap();
        let d3 = 2.0 / (7f64.cbrt() - 1.0);
        let eps = (7.0 - 2.0 - d3) / 4.0;
        assert!((part.epsilon - eps).abs() < 1e-12);
        assert!((part.epsilon - 0.70233).abs() < 1e-4);
        let low = rects(&part.low);
        assert!(close(low[0], (4.0 * (1.0 - eps), 1.0), 1e-12));
        assert!(close(low[1], (4.0 * eps, 2.0 + d3), 1e-12));
        assert!(close(low[1], (2.80931, 4.19069), 1e-4));
        assert!(close(rects(&part.high)[0], (2.0, d3), 1e-12));
    }

    #[test]
    fn three_user_double_split() {
        let third = 7f64.log2() / 6.0;
        let d3 = 2.0 / (7f64.cbrt() - 1.0);
        let eps_root = (7.0 - 2.0 - d3) / 4.0;
        let upper = rect(4.0 * eps_root, 2.0 + d3);
        let lower = rect(4.0 * (1.0 - eps_root), 1.0);
        let (j, i) = (node(0, 2.0, third), node(1, 2.0, third));
        assert_eq!(select_case(upper, lower, 2.0, third, Tolerance::default()), SplitCase::UpperFitsOuter);
        let part = partition_double_rect(upper, lower, &j, &i, PairRelation::Overlapping, Tolerance::default()).unwrap();
        assert_eq!(part.kind, PartitionKind::Double(SplitCase::UpperFitsOuter));
        assert!((part.epsilon - 0.74793).abs() < 1e-4);
        let low = rects(&part.low);
        assert!(close(low[0], (0.50413, 1.0), 1e-4));
        assert!(close(low[1], (1.49587, 5.50413), 1e-4));
        let high = rects(&part.high);
        assert!(close(high[0], (0.68656, 1.50413), 1e-4));
        assert!(close(high[1], (1.31344, 4.19069), 1e-4));
        assert!((part.low.rate() - third).abs() < 1e-12);
        assert!((part.high.rate() - third).abs() < 1e-12);
    }

    #[test]
    fn j_exactly_fills_lower_rect() {
        // P² = P_j: j fills the lower rectangle, ε = 0
        let upper = rect(2.0, 5.0);
        let lower = rect(1.5, 1.0);
        let rj = capacity_raw(1.5, 1.0);
        let (j, i) = (node(0, 1.5, rj), node(1, 2.0, capacity_raw(2.0, 5.0)));
        let part = partition_double_rect(upper, lower, &j, &i, PairRelation::Contiguous, Tolerance::default()).unwrap();
        assert_eq!(part.epsilon, 0.0);
        assert_eq!(rects(&part.low), vec![(1.5, 1.0)]);
        assert_eq!(rects(&part.high), vec![(2.0, 5.0)]);
    }

    #[test]
    fn slide_boundary_gives_zero_split() {
        // case (iii) with P² = P_j on the nose degenerates gracefully
        let upper = rect(3.0, 6.0);
        let lower = rect(2.0, 1.0);
        let case = select_case(upper, lower, 2.0, 0.4, Tolerance::default());
        assert_eq!(case, SplitCase::BothFit);
        let pl = closed_form_placement(upper, lower, 2.0, 0.4, SplitCase::UpperFitsSlide);
        assert_eq!(pl.epsilon, 0.0);
    }

    #[test]
    fn discontinuous_children_rejected() {
        let (j, i) = (node(0, 1.0, 0.5), node(1, 1.0, 0.1));
        let err = partition_single_rect(rect(2.0, 1.0), &j, &i, PairRelation::Discontinuous, Tolerance::default());
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn misordered_children_rejected() {
        let third = 7f64.log2() / 6.0;
        let j = node(3, 4.0, 2.0 * third);
        let i = node(2, 2.0, third);
        let err = partition_single_rect(rect(6.0, 1.0), &i, &j, PairRelation::Overlapping, Tolerance::default());
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn snap_pulls_to_ends() {
        assert_eq!(snap(1e-12, (0.0, 1.0), 1e-9), 0.0);
        assert_eq!(snap(1.0 - 1e-12, (0.0, 1.0), 1e-9), 1.0);
        assert_eq!(snap(-0.5, (0.0, 1.0), 1e-9), 0.0);
        assert_eq!(snap(0.5, (0.0, 1.0), 1e-9), 0.5);
    }
}
