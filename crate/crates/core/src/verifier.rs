//! Independent checks on a finished plan, and dominant-face test inputs.
//!
//! Verification looks only at each virtual user's `(power, NIS)` pair and
//! recomputes every rate itself; the rates stored in the plan are ignored.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::allocation::{vertex_rates, Permutation, RateAllocation};
use crate::error::{Error, Result};
use crate::shannon::{capacity, Nis, Power, Tolerance};
use crate::splitter::SplitPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Every piece's NIS equals σ² plus the power still undecoded beneath it.
    pub stacking_ok: bool,
    /// Largest such mismatch, in power units.
    pub max_stack_gap: f64,
    /// `|ρ_k − R_k|` per user.
    pub per_user_rate_error: Vec<f64>,
    /// `ρ_k`: each user's pieces' rates summed.
    pub reconstructed_rates: Vec<f64>,
    pub rates_ok: bool,
    /// Largest `|Σ piece powers − P_k|`.
    pub max_power_error: f64,
    pub virtual_count: usize,
    /// At most `2n − 1` pieces overall and at most two per user.
    pub cardinality_ok: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.stacking_ok && self.rates_ok && self.cardinality_ok
    }

    pub fn max_rate_error(&self) -> f64 {
        self.per_user_rate_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Replays successive decoding of `plan` against the targets in `ra`.
///
/// Stack mismatches are judged against `τ·(σ² + ΣP)`, rate errors against
/// `τ·max(1, C(I))`. Mismatches are recorded, never raised; only a plan that
/// does not describe `ra`'s users is an error.
pub fn verify_plan(plan: &SplitPlan, ra: &RateAllocation, tol: Tolerance) -> Result<VerificationReport> {
    let n = ra.n();
    let vus = &plan.virtual_users;
    if plan.epsilon.len() != n {
        return Err(Error::InvalidPlan(format!("{} coefficients for {n} users", plan.epsilon.len())));
    }
    if let Some(v) = vus.iter().find(|v| v.parent_user >= n) {
        return Err(Error::InvalidPlan(format!("piece refers to unknown user {}", v.parent_user + 1)));
    }
    let mut seen = HashSet::new();
    for v in vus {
        if !seen.insert((v.parent_user, v.power.get().to_bits(), v.nis.get().to_bits())) {
            return Err(Error::InvalidPlan(format!("duplicate piece of user {}", v.parent_user + 1)));
        }
    }
    let mut order_seen = vec![false; vus.len()];
    if plan.decode_order.len() != vus.len() {
        return Err(Error::InvalidPlan("decode order does not list every piece once".into()));
    }
    for &k in &plan.decode_order {
        if k >= vus.len() || std::mem::replace(&mut order_seen[k], true) {
            return Err(Error::InvalidPlan(format!("decode order entry {k} unknown or repeated")));
        }
    }

    let noise = ra.noise().get();
    let mut undecoded: f64 = vus.iter().map(|v| v.power.get()).sum();
    let mut max_stack_gap: f64 = 0.0;
    for &k in &plan.decode_order {
        let v = &vus[k];
        undecoded -= v.power.get();
        let expected = noise + undecoded.max(0.0);
        max_stack_gap = max_stack_gap.max((v.nis.get() - expected).abs());
    }
    let stack_scale = noise + ra.total_power().get();

    let mut reconstructed = vec![0.0; n];
    let mut powers = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for v in vus {
        reconstructed[v.parent_user] += capacity(v.power, v.nis).get();
        powers[v.parent_user] += v.power.get();
        counts[v.parent_user] += 1;
    }
    let per_user_rate_error: Vec<f64> =
        reconstructed.iter().zip(ra.rates()).map(|(got, want)| (got - want.get()).abs()).collect();
    let rate_scale = ra.sum_capacity().get().max(1.0);
    let max_power_error =
        powers.iter().zip(ra.powers()).map(|(got, want)| (got - want.get()).abs()).fold(0.0, f64::max);

    let rates_ok = per_user_rate_error.iter().all(|&e| tol.eq(e, 0.0, rate_scale))
        && tol.eq(max_power_error, 0.0, stack_scale);
    let cardinality_ok = vus.len() < 2 * n && counts.iter().all(|&c| (1..=2).contains(&c));

    Ok(VerificationReport {
        stacking_ok: max_stack_gap <= tol.band(stack_scale),
        max_stack_gap,
        per_user_rate_error,
        reconstructed_rates: reconstructed,
        rates_ok,
        max_power_error,
        virtual_count: vus.len(),
        cardinality_ok,
    })
}

/// The convex combination `Σ w_k · vertex(π_k)`.
///
/// Weights must be nonnegative and sum to one within `τ`.
pub fn dominant_face_point(
    powers: &[f64],
    noise: f64,
    weighted: &[(Permutation, f64)],
    tol: Tolerance,
) -> Result<RateAllocation> {
    if weighted.iter().any(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    if !tol.eq(total, 1.0, 1.0) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let pw = powers.iter().map(|&p| Power::new(p)).collect::<Result<Vec<_>>>()?;
    let noise_nis = Nis::new(noise)?;
    let mut rates = vec![0.0; powers.len()];
    for (pi, w) in weighted.iter().filter(|(_, w)| *w > 0.0) {
        for (acc, r) in rates.iter_mut().zip(vertex_rates(&pw, noise_nis, pi)?) {
            *acc += w * r.get();
        }
    }
    RateAllocation::new(powers.to_vec(), rates, noise)
}

/// A random point on the dominant face: `vertices` random permutations
/// mixed with flat-Dirichlet weights, all drawn from `seed`.
pub fn sample_dominant_face(powers: &[f64], noise: f64, vertices: usize, seed: u64) -> Result<RateAllocation> {
    if vertices == 0 {
        return Err(Error::InvalidWeights("at least one vertex is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weighted = Vec::with_capacity(vertices);
    for _ in 0..vertices {
        let mut order: Vec<usize> = (0..powers.len()).collect();
        order.shuffle(&mut rng);
        let w = -(1.0 - rng.random::<f64>()).ln();
        weighted.push((Permutation::new(order)?, w));
    }
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut weighted {
        *w /= total;
    }
    dominant_face_point(powers, noise, &weighted, Tolerance::default())
}

/// `n` powers drawn uniformly from `[lo, hi)`.
pub fn random_powers(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
