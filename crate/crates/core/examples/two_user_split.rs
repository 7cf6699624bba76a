//! The symmetric two-user point: one user is split around the other.

use rsma::{compute_split_plan, verify_plan, PlannerConfig, RateAllocation};

fn main() -> Result<(), rsma::Error> {
    let half = 0.25 * 7f64.log2();
    let ra = RateAllocation::new(vec![3.0, 3.0], vec![half, half], 1.0)?;
    let config = PlannerConfig::default();
    let plan = compute_split_plan(&ra, &config)?;

    println!("epsilon: {:?}", plan.epsilon);
    for (step, &k) in plan.decode_order.iter().enumerate() {
        let v = &plan.virtual_users[k];
        println!("decode {}: {:<4} power {:.6} at NIS {:.6}, rate {:.6}", step + 1, plan.label(k), v.power, v.nis, v.rate);
    }
    let report = verify_plan(&plan, &ra, config.tolerance)?;
    println!("verified: {} (max stack gap {:.1e})", report.passed(), report.max_stack_gap);
    Ok(())
}
