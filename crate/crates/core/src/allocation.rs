//! Rate allocations over the multi-access capacity polymatroid.
//!
//! A [`RateAllocation`] is the tuple `(N, P, R, σ²)`. This module computes
//! per-user NIS values, classifies user pairs by how their power rectangles
//! sit relative to each other, tests membership of a rate tuple in the
//! capacity polymatroid, and produces the vertex rates reached by plain
//! successive decoding.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shannon::{capacity, capacity_raw, nis_for_rate, Nis, Power, Rate, Tolerance};
use crate::PlannerConfig;

/// Powers, target rates and noise power of an N-user Gaussian MAC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    powers: Vec<Power>,
    rates: Vec<Rate>,
    noise: Nis,
}

impl RateAllocation {
    pub fn new(powers: Vec<f64>, rates: Vec<f64>, noise: f64) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::InvalidAllocation("at least one user is required".into()));
        }
        if powers.len() != rates.len() {
            return Err(Error::InvalidAllocation(format!(
                "{} powers but {} rates",
                powers.len(),
                rates.len()
            )));
        }
        let positive = |what: &str, k: usize, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::InvalidAllocation(format!("{what} of user {} must be positive, got {v}", k + 1)))
            }
        };
        let powers = powers
            .into_iter()
            .enumerate()
            .map(|(k, v)| positive("power", k, v).and_then(Power::new))
            .collect::<Result<Vec<_>>>()?;
        let rates = rates
            .into_iter()
            .enumerate()
            .map(|(k, v)| positive("rate", k, v).and_then(Rate::new))
            .collect::<Result<Vec<_>>>()?;
        let noise = Nis::new(noise)
            .map_err(|_| Error::InvalidAllocation(format!("noise power must be positive, got {noise}")))?;
        Ok(Self { powers, rates, noise })
    }

    pub fn n(&self) -> usize {
        self.powers.len()
    }

    pub fn powers(&self) -> &[Power] {
        &self.powers
    }

    pub fn rates(&self) -> &[Rate] {
        &self.rates
    }

    pub fn noise(&self) -> Nis {
        self.noise
    }

    pub fn total_power(&self) -> Power {
        self.powers.iter().copied().sum()
    }

    pub fn sum_rate(&self) -> Rate {
        self.rates.iter().copied().sum()
    }

    /// `½·log₂(1 + ΣP/σ²)`, the sum rate every base attains.
    pub fn sum_capacity(&self) -> Rate {
        capacity(self.total_power(), self.noise)
    }
}

/// Per-user NIS values and the users sorted by increasing NIS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NisProfile {
    pub nis: Vec<Nis>,
    /// User indices (0-based) by increasing NIS; ties keep the lower index first.
    pub order: Vec<usize>,
}

pub fn compute_nis(ra: &RateAllocation) -> Result<NisProfile> {
    let nis = ra
        .powers
        .iter()
        .zip(&ra.rates)
        .map(|(&p, &r)| nis_for_rate(r, p))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..nis.len()).collect();
    order.sort_by(|&a, &b| nis[a].get().total_cmp(&nis[b].get()));
    Ok(NisProfile { nis, order })
}

/// How the rectangle of the higher-NIS user `i` sits relative to the
/// rectangle of the lower-NIS user `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairRelation {
    /// `Δ_j ≤ Δ_i < Δ_j + P_j`: the rectangles intersect.
    Overlapping,
    /// `Δ_i > Δ_j + P_j`: a gap separates them.
    Discontinuous,
    /// `Δ_i = Δ_j + P_j`: `i` sits exactly on top of `j`.
    Contiguous,
}

impl fmt::Display for PairRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PairRelation::Overlapping => "overlapping",
            PairRelation::Discontinuous => "discontinuous",
            PairRelation::Contiguous => "contiguous",
        };
        f.write_str(s)
    }
}

/// Classifies `(P_j, Δ_j)` (lower NIS) against `(P_i, Δ_i)` (upper NIS).
///
/// The contiguous band is `τ·max(P_j, Δ_j)` wide.
pub fn classify_pair(lower: (Power, Nis), upper: (Power, Nis), tol: Tolerance) -> Result<PairRelation> {
    let (pj, dj) = (lower.0.get(), lower.1.get());
    let di = upper.1.get();
    let scale = pj.max(dj);
    if di < dj - tol.band(scale) {
        return Err(Error::Contract(format!(
            "classify_pair expects lower NIS first, got {dj} above {di}"
        )));
    }
    let top = dj + pj;
    Ok(if tol.eq(di, top, scale) {
        PairRelation::Contiguous
    } else if di < top {
        PairRelation::Overlapping
    } else {
        PairRelation::Discontinuous
    })
}

/// A bijection on `{0, …, n−1}`; position `k` holds the user placed `k`-th.
///
/// For [`vertex_rates`], position 0 is the user decoded last (it sees only noise).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &u in &order {
            if u >= n || std::mem::replace(&mut seen[u], true) {
                return Err(Error::InvalidPermutation(format!("{order:?} is not a bijection on 0..{n}")));
            }
        }
        Ok(Self(order))
    }

    /// Parses 1-based user labels, as written on the command line.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        let order = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::InvalidPermutation("user labels start at 1".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(order)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (pos, &u) in self.0.iter().enumerate() {
            inv[u] = pos;
        }
        Self(inv)
    }

    /// The same sequence read back to front.
    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MembershipStatus {
    Outside,
    Interior,
    DominantFace,
}

impl fmt::Display for MembershipStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MembershipStatus::Outside => "Outside",
            MembershipStatus::Interior => "Interior",
            MembershipStatus::DominantFace => "DominantFace",
        };
        f.write_str(s)
    }
}

/// Outcome of the polymatroid membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    /// Users (0-based, ascending) of the most violated constraint; set iff `Outside`.
    pub violated_subset: Option<Vec<usize>>,
    /// `R(A) − C(A)` for the most violated subset, `0` otherwise.
    pub violation: f64,
    /// `C(I) − R(I)`: how far the sum rate sits below the dominant face.
    pub sum_rate_gap: f64,
}

impl MembershipVerdict {
    pub fn is_dominant_face(&self) -> bool {
        self.status == MembershipStatus::DominantFace
    }

    pub fn summary(&self) -> String {
        match (&self.status, &self.violated_subset) {
            (MembershipStatus::Outside, Some(subset)) => {
                let labels: Vec<String> = subset.iter().map(|u| (u + 1).to_string()).collect();
                format!("Outside, subset {{{}}}, excess {:.6e}", labels.join(","), self.violation)
            }
            (MembershipStatus::Interior, _) => {
                format!("Interior, sum-rate gap {:.6e}", self.sum_rate_gap)
            }
            (status, _) => status.to_string(),
        }
    }
}

/// Checks `R(A) ≤ ½·log₂(1 + P(A)/σ²)` for every nonempty `A`.
///
/// Each constraint is allowed a slack of `τ·C(I)`; the sum-rate equality that
/// defines the dominant face uses the same band.
pub fn polymatroid_membership(ra: &RateAllocation, config: &PlannerConfig) -> Result<MembershipVerdict> {
    let n = ra.n();
    if n > config.membership_cap {
        return Err(Error::TooManyUsers { n, cap: config.membership_cap });
    }
    let noise = ra.noise.get();
    let band = config.tolerance.band(ra.sum_capacity().get());

    let mut worst: Option<(f64, u64)> = None;
    for mask in 1u64..(1u64 << n) {
        let (mut power, mut rate) = (0.0, 0.0);
        for k in 0..n {
            if mask >> k & 1 == 1 {
                power += ra.powers[k].get();
                rate += ra.rates[k].get();
            }
        }
        let excess = rate - capacity_raw(power, noise);
        if excess > band {
            let better = match worst {
                None => true,
                Some((w, wm)) => match excess.total_cmp(&w) {
                    Ordering::Greater => true,
                    Ordering::Equal => mask.count_ones() < wm.count_ones(),
                    Ordering::Less => false,
                },
            };
            if better {
                worst = Some((excess, mask));
            }
        }
    }

    let sum_rate_gap = ra.sum_capacity().get() - ra.sum_rate().get();
    Ok(match worst {
        Some((violation, mask)) => MembershipVerdict {
            status: MembershipStatus::Outside,
            violated_subset: Some((0..n).filter(|k| mask >> k & 1 == 1).collect()),
            violation,
            sum_rate_gap,
        },
        None => MembershipVerdict {
            status: if sum_rate_gap.abs() <= band {
                MembershipStatus::DominantFace
            } else {
                MembershipStatus::Interior
            },
            violated_subset: None,
            violation: 0.0,
            sum_rate_gap,
        },
    })
}

/// Rates of the polymatroid vertex reached by decoding `pi` back to front.
///
/// `R_{π(k)} = ½·log₂(1 + P_{π(k)} / (σ² + Σ_{l<k} P_{π(l)}))`.
pub fn vertex_rates(powers: &[Power], noise: Nis, pi: &Permutation) -> Result<Vec<Rate>> {
    if pi.len() != powers.len() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of {} users for {} powers",
            pi.len(),
            powers.len()
        )));
    }
    let mut rates = vec![Rate::ZERO; powers.len()];
    let mut floor = noise.get();
    for &u in pi.as_slice() {
        rates[u] = Rate::new(capacity_raw(powers[u].get(), floor))?;
        floor += powers[u].get();
    }
    Ok(rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shannon::nis_for_rate_raw;
    use proptest::prelude::*;

    fn pw(v: &[f64]) -> Vec<Power> {
        v.iter().map(|&x| Power::new(x).unwrap()).collect()
    }
    fn pn(p: f64, d: f64) -> (Power, Nis) {
        (Power::new(p).unwrap(), Nis::new(d).unwrap())
    }

    #[test]
    fn nis_examples() {
        let half_log_175 = 0.5 * 1.75f64.log2();
        let ra = RateAllocation::new(vec![3.0, 3.0], vec![1.0, half_log_175], 1.0).unwrap();
        let prof = compute_nis(&ra).unwrap();
        assert!((prof.nis[0].get() - 1.0).abs() < 1e-12);
        assert!((prof.nis[1].get() - 4.0).abs() < 1e-12);
        assert_eq!(prof.order, vec![0, 1]);

        let ra = RateAllocation::new(vec![3.0, 3.0], vec![0.701838, 0.701838], 1.0).unwrap();
        let prof = compute_nis(&ra).unwrap();
        let expect = 3.0 / (7f64.sqrt() - 1.0);
        for d in &prof.nis {
            assert!((d.get() - expect).abs() < 1e-4);
        }
        // tie keeps index order
        assert_eq!(prof.order, vec![0, 1]);

        let ra = RateAllocation::new(vec![2.0; 3], vec![0.467887; 3], 1.0).unwrap();
        let expect = 2.0 / (7f64.cbrt() - 1.0);
        for d in compute_nis(&ra).unwrap().nis {
            assert!((d.get() - expect).abs() < 1e-4);
        }
    }

    #[test]
    fn allocation_validation() {
        assert!(RateAllocation::new(vec![], vec![], 1.0).is_err());
        assert!(RateAllocation::new(vec![1.0], vec![1.0, 1.0], 1.0).is_err());
        assert!(RateAllocation::new(vec![0.0], vec![1.0], 1.0).is_err());
        assert!(RateAllocation::new(vec![1.0], vec![0.0], 1.0).is_err());
        assert!(RateAllocation::new(vec![1.0], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let tol = Tolerance::default();
        assert_eq!(classify_pair(pn(3.0, 1.0), pn(3.0, 4.0), tol).unwrap(), PairRelation::Contiguous);
        assert_eq!(classify_pair(pn(3.0, 1.0), pn(3.0, 2.0), tol).unwrap(), PairRelation::Overlapping);
        assert_eq!(classify_pair(pn(3.0, 1.0), pn(3.0, 5.0), tol).unwrap(), PairRelation::Discontinuous);
        assert!(matches!(classify_pair(pn(3.0, 4.0), pn(3.0, 1.0), tol), Err(Error::Contract(_))));
        // inside the band counts as contiguous
        assert_eq!(
            classify_pair(pn(3.0, 1.0), pn(3.0, 4.0 - 1e-10), tol).unwrap(),
            PairRelation::Contiguous
        );
    }

    #[test]
    fn membership_examples() {
        let cfg = PlannerConfig::default();
        let vertex = RateAllocation::new(vec![3.0, 3.0], vec![1.0, 0.5 * 1.75f64.log2()], 1.0).unwrap();
        assert_eq!(polymatroid_membership(&vertex, &cfg).unwrap().status, MembershipStatus::DominantFace);

        let out = RateAllocation::new(vec![3.0, 3.0], vec![1.0, 1.0], 1.0).unwrap();
        let v = polymatroid_membership(&out, &cfg).unwrap();
        assert_eq!(v.status, MembershipStatus::Outside);
        assert_eq!(v.violated_subset, Some(vec![0, 1]));
        assert_eq!(v.summary().split(',').take(3).collect::<Vec<_>>(), vec!["Outside", " subset {1", "2}"]);

        let inner = RateAllocation::new(vec![3.0, 3.0], vec![0.3, 0.3], 1.0).unwrap();
        let v = polymatroid_membership(&inner, &cfg).unwrap();
        assert_eq!(v.status, MembershipStatus::Interior);
        assert!((v.sum_rate_gap - (0.5 * 7f64.log2() - 0.6)).abs() < 1e-12);
    }

    #[test]
    fn membership_cap() {
        let cfg = PlannerConfig { membership_cap: 3, ..Default::default() };
        let ra = RateAllocation::new(vec![1.0; 4], vec![0.1; 4], 1.0).unwrap();
        assert_eq!(polymatroid_membership(&ra, &cfg), Err(Error::TooManyUsers { n: 4, cap: 3 }));
    }

    #[test]
    fn vertex_examples() {
        let noise = Nis::new(1.0).unwrap();
        let r = vertex_rates(&pw(&[3.0, 3.0]), noise, &Permutation::identity(2)).unwrap();
        assert!((r[0].get() - 1.0).abs() < 1e-15);
        assert!((r[1].get() - 0.5 * 1.75f64.log2()).abs() < 1e-15);
        assert!((r[1].get() - 0.403677).abs() < 1e-6);

        let r = vertex_rates(&pw(&[3.0, 3.0]), noise, &Permutation::new(vec![1, 0]).unwrap()).unwrap();
        assert!((r[0].get() - 0.403677).abs() < 1e-6);
        assert!((r[1].get() - 1.0).abs() < 1e-15);

        // ½log₂3, ½log₂(5/3), ½log₂(7/5)
        let r = vertex_rates(&pw(&[2.0; 3]), noise, &Permutation::identity(3)).unwrap();
        assert!((r[0].get() - 0.79248).abs() < 1e-5);
        assert!((r[1].get() - 0.36848).abs() < 1e-5);
        assert!((r[2].get() - 0.24271).abs() < 1e-5);
        let sum: f64 = r.iter().map(|x| x.get()).sum();
        assert!((sum - 0.5 * 7f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn permutation_checks() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        let p = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        assert_eq!(p.as_slice(), &[1, 2, 0]);
        assert_eq!(p.inverse().as_slice(), &[2, 0, 1]);
        assert_eq!(p.reversed().as_slice(), &[0, 2, 1]);
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    fn power_vec(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.1f64..10.0, 1..=max_n)
    }

    proptest! {
        #[test]
        fn vertices_lie_on_dominant_face(powers in power_vec(6), seed in any::<u64>(), noise in 0.1f64..5.0) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut order: Vec<usize> = (0..powers.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pi = Permutation::new(order).unwrap();
            let rates = vertex_rates(&pw(&powers), Nis::new(noise).unwrap(), &pi).unwrap();
            let ra = RateAllocation::new(powers, rates.iter().map(|r| r.get()).collect(), noise).unwrap();
            let v = polymatroid_membership(&ra, &PlannerConfig::default()).unwrap();
            prop_assert_eq!(v.status, MembershipStatus::DominantFace);

            // adjacent users in decode position stack exactly
            let prof = compute_nis(&ra).unwrap();
            for w in pi.as_slice().windows(2) {
                let rel = classify_pair(
                    (ra.powers()[w[0]], prof.nis[w[0]]),
                    (ra.powers()[w[1]], prof.nis[w[1]]),
                    Tolerance::default(),
                ).unwrap();
                prop_assert_eq!(rel, PairRelation::Contiguous);
            }
        }

        #[test]
        fn nis_reproduces_rates(powers in power_vec(6), rate_seed in prop::collection::vec(0.01f64..3.0, 6)) {
            let n = powers.len();
            let ra = RateAllocation::new(powers, rate_seed[..n].to_vec(), 1.0).unwrap();
            let prof = compute_nis(&ra).unwrap();
            for k in 0..n {
                let back = capacity(ra.powers()[k], prof.nis[k]).get();
                prop_assert!((back - ra.rates()[k].get()).abs() <= 1e-9 * ra.rates()[k].get());
            }
        }

        #[test]
        fn merging_separated_pair_lands_between(pj in 0.1f64..10.0, pi in 0.1f64..10.0, dj in 0.1f64..10.0, extra in 0.0f64..10.0) {
            // non-overlapping: Δ_i ≥ Δ_j + P_j
            let di = dj + pj + extra;
            let r = capacity_raw(pi, di) + capacity_raw(pj, dj);
            let d = nis_for_rate_raw(r, pi + pj);
            let band = 1e-9 * (dj + pj + pi + extra);
            prop_assert!(dj <= d + band);
            prop_assert!(d <= di - pj + band);
        }

        #[test]
        fn merging_overlapping_pair_lands_below(pj in 0.1f64..10.0, pi in 0.1f64..10.0, dj in 0.1f64..10.0, frac in 0.0f64..1.0) {
            // overlapping: Δ_j ≤ Δ_i < Δ_j + P_j
            let di = dj + frac * pj;
            let r = capacity_raw(pi, di) + capacity_raw(pj, dj);
            let d = nis_for_rate_raw(r, pi + pj);
            let band = 1e-9 * pj.max(dj);
            prop_assert!(di - pj <= d + band);
            prop_assert!(d < dj + band);
        }
    }
}
