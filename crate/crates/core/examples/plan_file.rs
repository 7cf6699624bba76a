//! Writing a plan file and checking it again from the file alone.

use rsma::cli::{to_json, PlanFile, ProblemFile};
use rsma::{compute_split_plan, verify_plan, PlannerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let third = 7f64.log2() / 6.0;
    let problem = ProblemFile { powers: vec![2.0; 3], rates: Some(vec![third; 3]), noise: 1.0, tolerance: None };
    let ra = problem.allocation()?;
    let config = PlannerConfig::default();
    let plan = compute_split_plan(&ra, &config)?;
    let report = verify_plan(&plan, &ra, config.tolerance)?;
    let json = to_json(&PlanFile::new(problem, &plan, report));

    let dir = std::env::temp_dir().join("rsma-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("plan.json");
    std::fs::write(&path, &json)?;
    println!("wrote {} ({} bytes)", path.display(), json.len());

    let back: PlanFile = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
    let again = verify_plan(&back.to_plan()?, &back.problem.allocation()?, config.tolerance)?;
    println!("re-verified from file: {}", again.passed());
    println!("lossless: {}", to_json(&back) == json);
    Ok(())
}
