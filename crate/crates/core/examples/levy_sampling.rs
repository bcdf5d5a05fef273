//! Sampling jumps from a stable Lévy density and checking the tail against the closed form.

use homog::levy::Spherical;
use homog::rng::stream_rng;
use homog::LevyDensity;

fn main() -> homog::Result<()> {
    let alpha = 1.5;
    let levy = LevyDensity::new(1, alpha, Spherical::OneDim { jplus: 1.0, jminus: 0.5 })?;
    let mut rng = stream_rng(1, "example/levy", 0);
    let n = 100_000;
    let (rmin, rmax) = (0.1, f64::INFINITY);
    let jumps: Vec<f64> = (0..n).map(|_| levy.sample_jump(rmin, rmax, &mut rng).map(|z| z[0])).collect::<homog::Result<_>>()?;
    let positive = jumps.iter().filter(|z| **z > 0.0).count() as f64 / n as f64;
    println!("fraction of positive jumps: {positive:.4} (expected {:.4})", 1.0 / 1.5);
    println!("mass of {{|z| ≥ {rmin}}}: {:.4}", levy.annulus_mass(rmin, rmax));
    for r in [0.2, 1.0, 5.0] {
        let tail = jumps.iter().filter(|z| z.abs() > r).count() as f64 / n as f64;
        println!("P(|Z| > {r}) = {tail:.4} (closed form {:.4})", (r / rmin).powf(-alpha));
    }
    Ok(())
}
