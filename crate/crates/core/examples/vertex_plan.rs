//! A vertex of the dominant face needs no splitting: plain successive decoding.

use rsma::{compute_split_plan, vertex_rates, Nis, Permutation, PlannerConfig, Power, RateAllocation};

fn main() -> Result<(), rsma::Error> {
    let powers = [1.2, 0.4, 3.3, 2.0];
    let pw = powers.iter().map(|&p| Power::new(p)).collect::<Result<Vec<_>, _>>()?;
    // user 3 sees only noise, user 2 sees user 3, and so on
    let pi = Permutation::from_one_based(&[3, 2, 4, 1])?;
    let rates = vertex_rates(&pw, Nis::new(1.0)?, &pi)?;
    for (u, r) in rates.iter().enumerate() {
        println!("user {}: rate {:.6}", u + 1, r);
    }

    let ra = RateAllocation::new(powers.to_vec(), rates.iter().map(|r| r.get()).collect(), 1.0)?;
    let plan = compute_split_plan(&ra, &PlannerConfig::default())?;
    let order: Vec<usize> = plan.decode_sequence().map(|v| v.parent_user + 1).collect();
    println!("epsilon {:?}, decode order {:?}", plan.epsilon, order);
    Ok(())
}
