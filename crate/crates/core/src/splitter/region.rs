use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shannon::{capacity, Nis, Power, Rate};

/// A power rectangle: height `power`, bottom edge at `nis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub power: Power,
    pub nis: Nis,
}

impl Rect {
    pub fn new(power: f64, nis: f64) -> Result<Self> {
        if !(power > 0.0) {
            return Err(Error::Domain { quantity: "rect power", value: power });
        }
        Ok(Self { power: Power::new(power)?, nis: Nis::new(nis)? })
    }

    pub fn top(&self) -> f64 {
        self.nis.get() + self.power.get()
    }

    pub fn rate(&self) -> Rate {
        capacity(self.power, self.nis)
    }

    pub(crate) fn span(&self) -> Span {
        Span { bottom: self.nis.get(), height: self.power.get() }
    }
}

/// What a tree node occupies in the power stack: one rectangle, or two
/// separated by a gap that other users fill.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Single(Rect),
    Double { upper: Rect, lower: Rect },
}

impl Region {
    pub fn power(&self) -> f64 {
        match self {
            Region::Single(r) => r.power.get(),
            Region::Double { upper, lower } => upper.power.get() + lower.power.get(),
        }
    }

    pub fn rate(&self) -> f64 {
        self.rects().map(|r| r.rate().get()).sum()
    }

    /// Rectangles from the bottom of the stack up.
    pub fn rects(&self) -> impl Iterator<Item = Rect> {
        let (a, b) = match *self {
            Region::Single(r) => (r, None),
            Region::Double { upper, lower } => (lower, Some(upper)),
        };
        std::iter::once(a).chain(b)
    }

    pub fn bottom(&self) -> f64 {
        match self {
            Region::Single(r) => r.nis.get(),
            Region::Double { lower, .. } => lower.nis.get(),
        }
    }

    pub fn top(&self) -> f64 {
        match self {
            Region::Single(r) => r.top(),
            Region::Double { upper, .. } => upper.top(),
        }
    }

    /// Builds a region from a double pair, merging the rectangles when the gap
    /// between them is within `merge_band`.
    pub fn double(upper: Rect, lower: Rect, merge_band: f64) -> Result<Self> {
        Self::from_spans(vec![upper.span(), lower.span()], merge_band)
    }

    pub(crate) fn spans(&self) -> Vec<Span> {
        self.rects().map(|r| r.span()).collect()
    }

    /// Sorts, drops empty spans, and joins spans whose gap is within
    /// `merge_band`. More than two disjoint spans is an invariant violation.
    pub(crate) fn from_spans(mut spans: Vec<Span>, merge_band: f64) -> Result<Self> {
        spans.retain(|s| s.height > 0.0);
        spans.sort_by(|a, b| a.bottom.total_cmp(&b.bottom));
        let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match merged.last_mut() {
                Some(last) if s.bottom - last.top() <= merge_band => {
                    if s.bottom < last.top() - merge_band {
                        return Err(Error::Invariant(format!(
                            "pieces overlap: [{}, {}) and [{}, {})",
                            last.bottom,
                            last.top(),
                            s.bottom,
                            s.top()
                        )));
                    }
                    last.height += s.height;
                }
                _ => merged.push(s),
            }
        }
        match merged.as_slice() {
            [one] => Ok(Region::Single(one.rect()?)),
            [lower, upper] => Ok(Region::Double { upper: upper.rect()?, lower: lower.rect()? }),
            [] => Err(Error::Invariant("empty region".into())),
            more => Err(Error::Invariant(format!("region split into {} pieces", more.len()))),
        }
    }
}

/// Raw interval `[bottom, bottom + height)` on the power axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Span {
    pub bottom: f64,
    pub height: f64,
}

impl Span {
    pub fn new(bottom: f64, height: f64) -> Self {
        Self { bottom, height }
    }

    pub fn top(&self) -> f64 {
        self.bottom + self.height
    }

    fn rect(&self) -> Result<Rect> {
        Rect::new(self.height, self.bottom)
    }
}

/// `outer \ taken`, both given as disjoint spans.
pub(crate) fn complement(outer: &[Span], taken: &[Span]) -> Vec<Span> {
    let mut taken: Vec<Span> = taken.iter().copied().filter(|s| s.height > 0.0).collect();
    taken.sort_by(|a, b| a.bottom.total_cmp(&b.bottom));
    let mut out = Vec::new();
    for o in outer {
        let mut cursor = o.bottom;
        let end = o.top();
        for t in &taken {
            if t.top() <= cursor || t.bottom >= end {
                continue;
            }
            if t.bottom > cursor {
                out.push(Span::new(cursor, t.bottom - cursor));
            }
            cursor = cursor.max(t.top());
        }
        if end > cursor {
            out.push(Span::new(cursor, end - cursor));
        }
    }
    out
}

/// Folds any piece thinner than `band` into the user's other piece so the
/// user's total power is preserved. A lone thin piece is kept.
pub(crate) fn absorb_slivers(mut spans: Vec<Span>, band: f64) -> Vec<Span> {
    spans.retain(|s| s.height > 0.0);
    if spans.len() < 2 {
        return spans;
    }
    spans.sort_by(|a, b| a.bottom.total_cmp(&b.bottom));
    let mut i = 0;
    while spans.len() > 1 && i < spans.len() {
        if spans[i].height < band {
            let thin = spans.remove(i);
            // grow the nearest neighbour toward the sliver's position
            let k = if i == 0 { 0 } else { i - 1 };
            let host = &mut spans[k];
            if thin.bottom < host.bottom {
                host.bottom -= thin.height;
            }
            host.height += thin.height;
            i = 0;
        } else {
            i += 1;
        }
    }
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shannon::capacity_raw;

    #[test]
    fn complement_of_outer_pattern() {
        let outer = [Span::new(1.0, 2.0), Span::new(4.0, 3.0)];
        let taken = [Span::new(1.0, 0.5), Span::new(6.0, 1.0)];
        let rest = complement(&outer, &taken);
        assert_eq!(rest, vec![Span::new(1.5, 1.5), Span::new(4.0, 2.0)]);
    }

    #[test]
    fn complement_inside_one_span() {
        let rest = complement(&[Span::new(0.0, 10.0)], &[Span::new(3.0, 2.0)]);
        assert_eq!(rest, vec![Span::new(0.0, 3.0), Span::new(5.0, 5.0)]);
        assert!(complement(&[Span::new(0.0, 1.0)], &[Span::new(0.0, 1.0)]).is_empty());
    }

    #[test]
    fn from_spans_merges_touching() {
        let r = Region::from_spans(vec![Span::new(2.0, 1.0), Span::new(1.0, 1.0)], 1e-12).unwrap();
        assert_eq!(r, Region::Single(Rect::new(2.0, 1.0).unwrap()));
        let r = Region::from_spans(vec![Span::new(5.0, 1.0), Span::new(1.0, 1.0)], 1e-12).unwrap();
        assert!(matches!(r, Region::Double { .. }));
        assert_eq!(r.bottom(), 1.0);
        assert_eq!(r.top(), 6.0);
        let three = vec![Span::new(1.0, 1.0), Span::new(3.0, 1.0), Span::new(5.0, 1.0)];
        assert!(matches!(Region::from_spans(three, 1e-12), Err(Error::Invariant(_))));
        let overlap = vec![Span::new(1.0, 2.0), Span::new(2.0, 1.0)];
        assert!(matches!(Region::from_spans(overlap, 1e-12), Err(Error::Invariant(_))));
    }

    #[test]
    fn sliver_absorbed_preserving_power() {
        let spans = absorb_slivers(vec![Span::new(1.0, 1e-12), Span::new(5.0, 2.0)], 1e-9);
        assert_eq!(spans.len(), 1);
        assert!((spans[0].height - (2.0 + 1e-12)).abs() < 1e-15);
        let alone = absorb_slivers(vec![Span::new(1.0, 1e-12)], 1e-9);
        assert_eq!(alone.len(), 1);
    }

    #[test]
    fn region_rate_is_additive() {
        let r = Region::Double { upper: Rect::new(1.0, 4.0).unwrap(), lower: Rect::new(2.0, 1.0).unwrap() };
        let expect = capacity_raw(1.0, 4.0) + capacity_raw(2.0, 1.0);
        assert!((r.rate() - expect).abs() < 1e-15);
        assert_eq!(r.power(), 3.0);
    }
}
