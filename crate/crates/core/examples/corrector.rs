//! Corrector for a manufactured drift with a known solution.

use homog::corrector::{manufactured_drift, manufactured_target, solve_corrector, CorrectorOptions};
use homog::ergodic::estimate_invariant_measure;
use homog::model::{ModelSpec, ViewKind};
use homog::quadrature::RadialQuadrature;
use homog::sim::SimOptions;
use homog::{JumpKernelSpec, LevyDensity, PeriodicField};

fn main() -> homog::Result<()> {
    let base = ModelSpec::driftless(LevyDensity::symmetric_1d(1.5, 1.0)?, JumpKernelSpec::constant(1, 1.0))?;
    let phi = manufactured_target();
    let b = manufactured_drift(&base, &phi, &RadialQuadrature::default())?;
    let model = base.with_drift(b, PeriodicField::zero_vector(1))?;
    let inv = estimate_invariant_measure(&model, ViewKind::Cell, 1.0, 10.0, 32, 32, &SimOptions::default(), 3)?;
    let mu = inv.measure.normalized()?;
    let c = solve_corrector(&model, &mu, &CorrectorOptions::default())?;
    println!("residual {:.2e} (tolerance {:.0e}), pass = {}", c.residual, c.residual_tol, c.pass);
    let shift = c.field.eval_component(0, &[0.0]) - phi.eval_component(0, &[0.0]);
    for x in [0.125, 0.25, 0.5, 0.75] {
        println!("b̂({x}) − shift = {:+.6}, target {:+.6}", c.field.eval_component(0, &[x]) - shift, phi.eval_component(0, &[x]));
    }
    Ok(())
}
