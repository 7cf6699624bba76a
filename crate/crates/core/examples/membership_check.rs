//! Classifying rate tuples against the capacity region.

use rsma::{polymatroid_membership, PlannerConfig, RateAllocation};

fn main() -> Result<(), rsma::Error> {
    let config = PlannerConfig::default();
    let half = 0.25 * 7f64.log2();
    let cases = [
        ("too fast", vec![1.0, 1.0]),
        ("slack left", vec![0.5, 0.5]),
        ("on the face", vec![half, half]),
        ("a vertex", vec![1.0, 0.5 * 1.75f64.log2()]),
    ];
    for (name, rates) in cases {
        let ra = RateAllocation::new(vec![3.0, 3.0], rates, 1.0)?;
        let verdict = polymatroid_membership(&ra, &config)?;
        println!("{name:<12} {}", verdict.summary());
    }
    Ok(())
}
