//! Random dominant-face points, planned and independently verified.

use rsma::verifier::random_powers;
use rsma::{compute_split_plan, sample_dominant_face, verify_plan, PlannerConfig};

fn main() -> Result<(), rsma::Error> {
    let config = PlannerConfig::default();
    for n in 2..=8 {
        let mut worst = 0.0f64;
        let mut pieces = 0;
        for seed in 0..100 {
            let powers = random_powers(n, 0.1, 10.0, seed);
            let ra = sample_dominant_face(&powers, 1.0, n, seed)?;
            let plan = compute_split_plan(&ra, &config)?;
            let report = verify_plan(&plan, &ra, config.tolerance)?;
            assert!(report.passed(), "n={n} seed={seed}: {report:?}");
            worst = worst.max(report.max_rate_error());
            pieces = pieces.max(report.virtual_count);
        }
        println!("n={n}: 100 plans verified, at most {pieces} virtual users, worst rate error {worst:.1e}");
    }
    Ok(())
}
