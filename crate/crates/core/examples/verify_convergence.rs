//! ECF distances between the oscillating process and its homogenized limit.

use homog::config::{ExperimentConfig, Preset};
use homog::homogenizer::{homogenize, HomogenizerOptions};
use homog::verify::{convergence_report, VerifyOptions};
use homog::EmpiricalMeasure;

fn main() -> homog::Result<()> {
    let model = ExperimentConfig::from_preset(Preset::Su18).model_spec()?;
    let triplet = homogenize(&model, &EmpiricalMeasure::uniform(1, 32)?, None, &HomogenizerOptions::default())?;
    let opts = VerifyOptions { n_paths: 4000, ..VerifyOptions::default() };
    for (label, t) in [("homogenized", triplet.clone()), ("perturbed +0.3", triplet.perturbed(0.3))] {
        let r = convergence_report(&model, &t, None, &opts, 5)?;
        println!("{label}: verdict {}", r.verdict);
        for e in &r.entries {
            println!("  ε = {:<6} D = {:.4} floor = {:.4}", e.eps, e.distance, e.floor);
        }
    }
    Ok(())
}
