//! The full validate → invariant → corrector → homogenize → verify pipeline on a preset.

use homog::config::{ExperimentConfig, Preset};
use homog::pipeline::{Pipeline, Stage};

fn main() -> homog::Result<()> {
    let mut config = ExperimentConfig::from_preset(Preset::SdeDiffeo);
    config.numerics.verify_paths = 2000;
    config.numerics.invariant.n_chains = 16;
    config.numerics.invariant.t_run = 5.0;
    let out = std::env::temp_dir().join("homog_pipeline");
    let pipeline = Pipeline::new(config, &out, Some(42))?;
    pipeline.write_config()?;
    for stage in [Stage::Validate, Stage::Invariant, Stage::Corrector, Stage::Homogenize, Stage::Verify] {
        let status = pipeline.run(stage)?;
        println!("{:<10} exit {}", stage.name(), status.code());
    }
    println!("artifacts in {} (config hash {})", out.display(), pipeline.config_hash());
    Ok(())
}
