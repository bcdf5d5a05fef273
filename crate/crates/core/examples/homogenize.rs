//! Homogenized triplets of the presets and their Lévy exponents.

use homog::config::{ExperimentConfig, Preset};
use homog::homogenizer::{homogenize, levy_exponent, HomogenizerOptions};
use homog::EmpiricalMeasure;

fn main() -> homog::Result<()> {
    let opts = HomogenizerOptions::default();
    let mu = EmpiricalMeasure::uniform(1, 64)?;
    for preset in [Preset::Su18, Preset::SdeDiffeo, Preset::VariableOrder, Preset::Onedim] {
        let model = ExperimentConfig::from_preset(preset).model_spec()?;
        // b ≡ 0 for every preset, so no corrector is needed
        let t = homogenize(&model, &mu, None, &opts)?;
        println!("{preset:?}: κ̄(+) = {:.4}, κ̄(−) = {:.4}, b̄ = {:+.4}", t.kappa_bar_at(&[1.0]), t.kappa_bar_at(&[-1.0]), t.b_bar[0]);
        for xi in [1.0, -2.0] {
            let psi = levy_exponent(&t, &[xi], &opts.quad)?;
            println!("  ψ̄({xi:+}) = {:+.4} {:+.4}i", psi.re, psi.im);
        }
    }
    Ok(())
}
