//! Three equal users at equal rates, with the partition made at each tree node.

use rsma::splitter::plan_from_tree;
use rsma::{build_combination_tree, PlannerConfig, RateAllocation, Region};

fn describe(region: &Region) -> String {
    region.rects().map(|r| format!("[{:.5}, {:.5})", r.nis.get(), r.top())).collect::<Vec<_>>().join(" + ")
}

fn main() -> Result<(), rsma::Error> {
    let third = 7f64.log2() / 6.0;
    let ra = RateAllocation::new(vec![2.0; 3], vec![third; 3], 1.0)?;
    let config = PlannerConfig::default();
    let tree = build_combination_tree(&ra, &config)?;
    let trace = plan_from_tree(&ra, &tree, config.tolerance)?;

    for (node, part) in &trace.splits {
        let (low, high) = tree.children[node.0].expect("internal node");
        println!("node {}: {:?}, epsilon {:.6}", node.0 + 1, part.kind, part.epsilon);
        println!("  node {} gets {}", low.0 + 1, describe(&part.low));
        println!("  node {} gets {}", high.0 + 1, describe(&part.high));
    }
    println!("{} virtual users:", trace.plan.virtual_users.len());
    for k in trace.plan.decode_order.iter().copied() {
        let v = &trace.plan.virtual_users[k];
        println!("  {:<4} [{:.5}, {:.5})", trace.plan.label(k), v.nis.get(), v.top());
    }
    Ok(())
}
