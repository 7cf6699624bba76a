//! Bisection search for the placement of the split user's pieces.
//!
//! Each [`FillingPattern`] is a one-parameter family of ways to put user
//! `j`'s pieces into the parent region; `j`'s achieved rate decreases
//! monotonically along the parameter because power moves up the stack.
//! The search only evaluates [`capacity`] on candidate rectangles, so it is
//! independent of the closed forms used by the partitioners.

use serde::{Deserialize, Serialize};

use super::region::{Rect, Region};
use crate::error::{Error, Result};
use crate::shannon::{capacity, Nis, Power, Rate};

const MAX_ITERATIONS: usize = 200;
const WIDTH: f64 = 1e-14;
const BRACKET_SLACK: f64 = 1e-9;

/// Families of filling patterns, named by where user `j` goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FillingPattern {
    /// Single rectangle: `j` at the very top and very bottom, the other
    /// child in between. Parameter: `ε`.
    Sandwich,
    /// Two rectangles: `j` at the top of the upper one and the bottom of the
    /// lower one. Parameter: `ε`.
    Outer,
    /// Two rectangles: `j` at the bottom of the upper one and the top of the
    /// lower one. Parameter: `ε`.
    Inner,
    /// `j` fills the lower rectangle; its remainder slides inside the upper
    /// one. Parameter: bottom of the sliding piece.
    SlideUpper,
    /// `j` fills the upper rectangle; its remainder slides inside the lower
    /// one. Parameter: bottom of the sliding piece.
    SlideLower,
}

impl FillingPattern {
    pub fn slides(self) -> bool {
        matches!(self, FillingPattern::SlideUpper | FillingPattern::SlideLower)
    }
}

/// Where user `j`'s two pieces sit: `ε·P_j` at `upper_nis`, `(1−ε)·P_j` at
/// `lower_nis`. A piece with zero power still carries a nominal position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub epsilon: f64,
    pub upper_nis: f64,
    pub lower_nis: f64,
}

impl Placement {
    /// The coordinate the pattern sweeps: `ε`, or the sliding piece's bottom.
    pub fn parameter(&self, pattern: FillingPattern) -> f64 {
        match pattern {
            FillingPattern::SlideUpper => self.upper_nis,
            FillingPattern::SlideLower => self.lower_nis,
            _ => self.epsilon,
        }
    }
}

/// One parameterised pattern over a concrete region.
pub(crate) struct Family {
    pattern: FillingPattern,
    pj: f64,
    lo: f64,
    hi: f64,
    upper: (f64, f64),
    lower: (f64, f64),
}

impl Family {
    pub(crate) fn new(pattern: FillingPattern, parent: &Region, pj: f64) -> Result<Self> {
        let (upper, lower) = match (pattern, parent) {
            (FillingPattern::Sandwich, Region::Single(r)) => {
                let s = (r.power.get(), r.nis.get());
                (s, s)
            }
            (FillingPattern::Sandwich, _) => {
                return Err(Error::Contract("sandwich pattern needs a single rectangle".into()))
            }
            (_, Region::Double { upper, lower }) => {
                ((upper.power.get(), upper.nis.get()), (lower.power.get(), lower.nis.get()))
            }
            (_, Region::Single(_)) => {
                return Err(Error::Contract(format!("{pattern:?} pattern needs two rectangles")))
            }
        };
        let (p1, d1) = upper;
        let (p2, d2) = lower;
        if !(pj > 0.0) {
            return Err(Error::Contract(format!("split user power must be positive, got {pj}")));
        }
        let (lo, hi) = match pattern {
            FillingPattern::Sandwich => {
                if pj > p1 {
                    return Err(Error::Contract("split user exceeds the parent rectangle".into()));
                }
                (0.0, 1.0)
            }
            FillingPattern::Outer | FillingPattern::Inner => {
                let lo = (1.0 - p2 / pj).max(0.0);
                let hi = (p1 / pj).min(1.0);
                (lo, hi)
            }
            FillingPattern::SlideUpper => (d1, d1 + p1 - (pj - p2)),
            FillingPattern::SlideLower => (d2, d2 + p2 - (pj - p1)),
        };
        if !(lo <= hi) {
            return Err(Error::Contract(format!("{pattern:?} pattern cannot hold power {pj} in this region")));
        }
        Ok(Self { pattern, pj, lo, hi, upper, lower })
    }

    pub(crate) fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `j`'s placement at parameter `t` (clamped into range).
    pub(crate) fn placement(&self, t: f64) -> Placement {
        let t = t.clamp(self.lo, self.hi);
        let (p1, d1) = self.upper;
        let (p2, d2) = self.lower;
        let pj = self.pj;
        match self.pattern {
            FillingPattern::Sandwich | FillingPattern::Outer => {
                Placement { epsilon: t, upper_nis: d1 + p1 - t * pj, lower_nis: d2 }
            }
            FillingPattern::Inner => {
                Placement { epsilon: t, upper_nis: d1, lower_nis: d2 + p2 - (1.0 - t) * pj }
            }
            FillingPattern::SlideUpper => Placement { epsilon: 1.0 - p2 / pj, upper_nis: t, lower_nis: d2 },
            FillingPattern::SlideLower => Placement { epsilon: p1 / pj, upper_nis: d1, lower_nis: t },
        }
    }

    /// Rate user `j` collects at parameter `t`.
    pub(crate) fn rate_at(&self, t: f64) -> f64 {
        let pl = self.placement(t);
        let (upper_power, lower_power) = match self.pattern {
            FillingPattern::SlideUpper => (self.pj - self.lower.0, self.lower.0),
            FillingPattern::SlideLower => (self.upper.0, self.pj - self.upper.0),
            _ => (pl.epsilon * self.pj, (1.0 - pl.epsilon) * self.pj),
        };
        piece_rate(upper_power, pl.upper_nis) + piece_rate(lower_power, pl.lower_nis)
    }
}

fn piece_rate(power: f64, nis: f64) -> f64 {
    match (Power::new(power.max(0.0)), Nis::new(nis)) {
        (Ok(p), Ok(d)) => capacity(p, d).get(),
        _ => 0.0,
    }
}

/// Finds the placement in `pattern` at which user `j` (power `j_power`)
/// collects exactly `j_rate`.
///
/// Bisects the pattern parameter until the bracket is narrower than `1e−14`
/// or 200 halvings have been made. A target outside the family's achievable
/// rates (beyond a `1e−9` relative slack) is reported as [`Error::Infeasible`].
pub fn epsilon_bisection(pattern: FillingPattern, parent: &Region, j_power: Power, j_rate: Rate) -> Result<Placement> {
    let family = Family::new(pattern, parent, j_power.get())?;
    let target = j_rate.get();
    let (mut lo, mut hi) = family.range();
    let (max, min) = (family.rate_at(lo), family.rate_at(hi));
    let slack = BRACKET_SLACK * parent.rate().max(target);
    if target > max + slack || target < min - slack {
        return Err(Error::Infeasible { target, min, max });
    }
    if target >= max {
        return Ok(family.placement(lo));
    }
    if target <= min {
        return Ok(family.placement(hi));
    }
    let width = WIDTH * lo.abs().max(hi.abs()).max(1.0);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= width || mid <= lo || mid >= hi {
            break;
        }
        if family.rate_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(family.placement(0.5 * (lo + hi)))
}

/// Rectangles of user `j` for a placement (zero-power pieces omitted).
pub fn placement_rects(placement: &Placement, j_power: Power) -> Vec<Rect> {
    let pj = j_power.get();
    let up = placement.epsilon * pj;
    let down = pj - up;
    [(up, placement.upper_nis), (down, placement.lower_nis)]
        .into_iter()
        .filter_map(|(p, d)| Rect::new(p, d).ok())
        .collect()
}
