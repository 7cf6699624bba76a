//! Merging users into superusers until one block rests on the noise floor.

use rsma::verifier::random_powers;
use rsma::{build_combination_tree, compute_nis, sample_dominant_face, PlannerConfig};

fn main() -> Result<(), rsma::Error> {
    let powers = random_powers(5, 0.5, 5.0, 42);
    let ra = sample_dominant_face(&powers, 1.0, 5, 42)?;
    let profile = compute_nis(&ra)?;
    for u in profile.order.iter().copied() {
        println!("user {}: power {:.4}, rate {:.4}, NIS {:.4}", u + 1, ra.powers()[u], ra.rates()[u], profile.nis[u]);
    }

    let tree = build_combination_tree(&ra, &PlannerConfig::default())?;
    for id in &tree.merge_order {
        let (low, high) = tree.children[id.0].expect("merged node");
        let node = tree.node(*id);
        let members: Vec<usize> = node.members.iter().map(|u| u + 1).collect();
        let relation = tree.relation_at_merge[id.0].expect("merged node");
        println!(
            "node {} = {} + {} ({relation}): users {members:?}, NIS {:.6}",
            id.0 + 1,
            low.0 + 1,
            high.0 + 1,
            node.nis
        );
    }
    Ok(())
}
