//! Assumption checks for every preset jump kernel.

use homog::config::{ExperimentConfig, Preset};

fn main() -> homog::Result<()> {
    let eps: Vec<f64> = (1..=12).map(|k| 2f64.powi(-k)).collect();
    for preset in [Preset::Su18, Preset::SdeDiffeo, Preset::VariableOrder, Preset::Onedim] {
        let model = ExperimentConfig::from_preset(preset).model_spec()?;
        let k = &model.kernel;
        println!("{preset:?}: family {}, κ1 = {:.3}, κ2 = {:.3}, κ3 = {:.3}", k.family_name(), k.kappa1, k.kappa2, k.kappa3);
        let report = k.validate_assumptions(&model.levy, 1000, &eps, false, 7)?;
        for c in &report.checks {
            println!("  {:<26} {:>10.3e} (threshold {:.1e}) {}", c.name, c.value, c.threshold, if c.pass { "ok" } else { "FAIL" });
        }
    }
    Ok(())
}
