//! Periodic fields on the torus: evaluation, gradients, integrals and centering.

use homog::torus::{check_centering, Measure};
use homog::{EmpiricalMeasure, FourierTerm, PeriodicField};

fn main() -> homog::Result<()> {
    // b(x) = 0.5 cos(2πx) + 0.2 sin(4πx) on T¹
    let b = PeriodicField::fourier_vector(1, vec![vec![FourierTerm::new(vec![1], 0.5, 0.0), FourierTerm::new(vec![2], 0.0, 0.2)]])?;
    for x in [0.0, 0.25, 0.8, 1.8] {
        println!("b({x}) = {:+.6}, b'({x}) = {:+.6}", b.eval_component(0, &[x]), b.gradient_component(0, &[x])[0]);
    }
    println!("sup|b| = {:.6}", b.sup_norm(256));

    let uniform = EmpiricalMeasure::uniform(1, 64)?;
    let r = check_centering(&b, &Measure::Empirical(&uniform), 1e-10)?;
    println!("∫ b dx = {:+.2e} (centred: {})", r.max_residual(), r.pass);

    let point = EmpiricalMeasure::point_mass(1, 64, &[0.0])?;
    let r = check_centering(&b, &Measure::Empirical(&point), 1e-10)?;
    println!("∫ b dδ_0 = {:+.4} (centred: {})", r.max_residual(), r.pass);
    Ok(())
}
