use homog::levy::{compensator_integral, sphere_area, Spherical};
use homog::quadrature::{integrate_interval, RadialQuadrature};
use homog::stats::ks_one_sample;
use homog::{JumpKernelSpec, LevyDensity};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn table_density(alpha: f64) -> LevyDensity {
    let table: Vec<f64> = (0..8).map(|k| 1.0 + 0.5 * (k as f64 * std::f64::consts::PI / 4.0).cos()).collect();
    LevyDensity::new(2, alpha, Spherical::Table { angular_table: table }).unwrap()
}

proptest! {
    #[test]
    fn density_is_homogeneous(alpha in 0.1f64..1.9, r in 0.1f64..10.0, th in 0.0f64..6.283) {
        let j = table_density(alpha);
        let z = [th.cos() * 0.7, th.sin() * 0.7];
        let rz = [r * z[0], r * z[1]];
        let lhs = j.eval_density(&rz).unwrap();
        let rhs = r.powf(-(2.0 + alpha)) * j.eval_density(&z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn density_respects_spherical_bounds(alpha in 0.1f64..1.9, z in -5.0f64..5.0, jp in 0.1f64..3.0, jm in 0.1f64..3.0) {
        prop_assume!(z.abs() > 1e-3);
        let j = LevyDensity::new(1, alpha, Spherical::OneDim { jplus: jp, jminus: jm }).unwrap();
        let v = j.eval_density(&[z]).unwrap();
        let base = z.abs().powf(-(1.0 + alpha));
        prop_assert!(j.j1() * base <= v * (1.0 + 1e-14) && v <= j.j2() * base * (1.0 + 1e-14));
    }
}

#[test]
fn isotropic_tail_matches_power_law() {
    let alpha = 1.3;
    let j = LevyDensity::new(2, alpha, Spherical::Isotropic { isotropic: 1.0 / sphere_area(2) }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rmin = 0.5;
    let radii: Vec<f64> = (0..100_000)
        .map(|_| {
            let z = j.sample_jump(rmin, f64::INFINITY, &mut rng).unwrap();
            (z[0] * z[0] + z[1] * z[1]).sqrt()
        })
        .collect();
    let ks = ks_one_sample(&radii, |r| if r < rmin { 0.0 } else { 1.0 - (r / rmin).powf(-alpha) }).unwrap();
    assert!(ks.statistic < 0.01, "{ks:?}");
}

#[test]
fn sampler_mean_matches_quadrature() {
    let alpha = 0.8;
    let j = LevyDensity::new(1, alpha, Spherical::OneDim { jplus: 1.0, jminus: 0.4 }).unwrap();
    let (rmin, rmax) = (0.1, 20.0);
    let g = |r: f64| r.min(1.0);
    let mass = integrate_interval(|r| r.powf(-1.0 - alpha), rmin, rmax, 400, 16);
    let expect = integrate_interval(|r| g(r) * r.powf(-1.0 - alpha), rmin, rmax, 400, 16) / mass;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 100_000;
    let v: Vec<f64> = (0..n).map(|_| g(j.sample_jump(rmin, rmax, &mut rng).unwrap()[0].abs())).collect();
    let m = v.iter().sum::<f64>() / n as f64;
    let se = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 * (n - 1) as f64)).sqrt();
    assert!((m - expect).abs() < 4.0 * se, "{m} vs {expect} (se {se})");
    // direction frequencies follow j⁺ : j⁻
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pos = (0..n).filter(|_| j.sample_jump(rmin, rmax, &mut rng).unwrap()[0] > 0.0).count() as f64 / n as f64;
    let p = 1.0 / 1.4;
    assert!((pos - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
}

#[test]
fn one_sided_density_samples_positive_jumps_only() {
    let j = LevyDensity::new(1, 1.5, Spherical::OneDim { jplus: 1.0, jminus: 0.0 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((0..10_000).all(|_| j.sample_jump(0.01, f64::INFINITY, &mut rng).unwrap()[0] > 0.0));
}

#[test]
fn symmetric_compensator_vanishes_in_two_dimensions() {
    let j = LevyDensity::new(2, 1.5, Spherical::Isotropic { isotropic: 1.0 }).unwrap();
    let v = compensator_integral(&j, &JumpKernelSpec::constant(2, 1.0), &[0.1, 0.2], 0.5, 0.3, 4.0, &RadialQuadrature::default()).unwrap();
    assert!(v.iter().all(|c| c.abs() < 1e-10), "{v:?}");
}
