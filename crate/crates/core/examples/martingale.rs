//! Itô-formula consistency: the compensated process has mean zero, a wrong drift does not.

use homog::homogenizer::constant_drift;
use homog::model::ModelSpec;
use homog::sim::SimOptions;
use homog::verify::martingale_test;
use homog::{FourierTerm, JumpKernelSpec, LevyDensity, PeriodicField};

fn main() -> homog::Result<()> {
    let model = ModelSpec::new(
        LevyDensity::symmetric_1d(1.5, 1.0)?,
        JumpKernelSpec::constant(1, 1.0),
        PeriodicField::zero_vector(1),
        constant_drift(&[2.0]),
        false,
    )?;
    let f = PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![1], 0.0, 1.0)])?;
    for scale in [1.0, 2.0] {
        let r = martingale_test(&model, &f, 0.5, 0.1, 5000, scale, &SimOptions::default(), 9)?;
        println!("drift × {scale}: z-scores {:?}, passes |z| < 4: {}", r.z_scores.iter().map(|z| format!("{z:+.2}")).collect::<Vec<_>>(), r.passes(4.0));
    }
    Ok(())
}
