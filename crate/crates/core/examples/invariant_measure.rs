//! Mixing rate and invariant measure of the cell process.

use homog::config::{ExperimentConfig, Preset};
use homog::ergodic::{estimate_invariant_measure, mixing_rate_estimate};
use homog::model::ViewKind;
use homog::sim::SimOptions;

fn main() -> homog::Result<()> {
    let model = ExperimentConfig::from_preset(Preset::SdeDiffeo).model_spec()?;
    let opts = SimOptions::default();
    let mix = mixing_rate_estimate(&model, &[0.02, 0.04, 0.06, 0.08, 0.1], 2000, None, &opts, 1)?;
    println!("mixing rate ρ̂ = {:.2} (prefactor {:.2}); burn-in {:?}", mix.rate, mix.prefactor, mix.burn_in());
    let inv = estimate_invariant_measure(&model, ViewKind::Cell, mix.burn_in().unwrap_or(1.0), 10.0, 16, 32, &opts, 2)?;
    let mu = inv.measure.normalized()?;
    println!("  cell   weight   chain SE");
    for (i, (w, se)) in mu.weights().iter().zip(&inv.chain_se).enumerate() {
        println!("  {i:>4}   {w:.4}   {se:.4}");
    }
    Ok(())
}
