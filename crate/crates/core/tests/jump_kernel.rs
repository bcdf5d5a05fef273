use homog::config::{ExperimentConfig, Preset};
use homog::quadrature::integrate_interval;
use homog::{JumpKernelSpec, KernelFamily, LevyDensity, PeriodicField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn preset_kernel(p: Preset) -> JumpKernelSpec {
    ExperimentConfig::from_preset(p).model_spec().unwrap().kernel
}

fn kernels() -> Vec<JumpKernelSpec> {
    vec![preset_kernel(Preset::Su18), preset_kernel(Preset::SdeDiffeo), preset_kernel(Preset::Onedim), JumpKernelSpec::constant(1, 0.8)]
}

proptest! {
    #[test]
    fn kernels_are_periodic_in_x_and_u(x in -1.0f64..1.0, z in 0.05f64..3.0, sign in prop::bool::ANY, u in 0.01f64..0.99, k in -4i64..4, l in -4i64..4) {
        let z = if sign { z } else { -z };
        for spec in kernels() {
            // κ*(x, z, u, v) is periodic in x and u; v is the unscaled jump slot
            let a = spec.kappa_star(&[x], &[z], &[u], &[3.0 * z]);
            let b = spec.kappa_star(&[x + k as f64], &[z], &[u + l as f64], &[3.0 * z]);
            prop_assert!((a - b).abs() <= 1e-12, "{} {a} {b}", spec.family_name());
        }
    }

    #[test]
    fn kernels_stay_in_their_band(x in 0.0f64..1.0, z in 0.01f64..10.0, sign in prop::bool::ANY, u in 0.01f64..2.99) {
        let z = if sign { z } else { -z };
        for spec in kernels() {
            let v = spec.eval_kappa(&[x], &[z], &[u]).unwrap();
            prop_assert!(spec.kappa1 <= v + 1e-12 && v <= spec.kappa2 + 1e-12, "{} {v}", spec.family_name());
        }
    }
}

#[test]
fn diffeo_change_of_variables_on_annuli() {
    // σ(x, y) = a(x) y: ∫_A κ(x, z) J(z) dz = ∫ 1_A(a(x) y) J(y) dy
    let alpha = 1.5;
    let a = PeriodicField::fourier_scalar(1, vec![homog::FourierTerm::new(vec![0], 2.0, 0.0), homog::FourierTerm::new(vec![1], 0.0, 1.0)]).unwrap();
    let spec = JumpKernelSpec::new(1, KernelFamily::Diffeo { a: a.clone(), alpha }).unwrap();
    let j = LevyDensity::symmetric_1d(alpha, 1.0).unwrap();
    let (r1, r2) = (0.5, 2.0);
    for x in [0.1, 0.4, 0.8] {
        let ax = a.eval_scalar(&[x]).unwrap();
        let lhs: f64 = [1.0, -1.0]
            .iter()
            .map(|s| integrate_interval(|r| spec.eval_kappa(&[x], &[s * r], &[s * r]).unwrap() * j.eval_density(&[s * r]).unwrap(), r1, r2, 64, 16))
            .sum();
        // quadrature over y, split at the pre-images of the annulus edges
        let rhs: f64 = 2.0 * integrate_interval(|y| j.eval_density(&[y]).unwrap(), r1 / ax, r2 / ax, 64, 16);
        assert!((lhs - rhs).abs() <= 1e-4 * rhs, "x={x}: {lhs} vs {rhs}");
        // Monte Carlo over y from J restricted to |y| ≥ r1/a_max
        let rmin = r1 / 3.0;
        let mass = j.annulus_mass(rmin, f64::INFINITY);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| {
                let y = j.sample_jump(rmin, f64::INFINITY, &mut rng).unwrap()[0];
                (r1..r2).contains(&(ax * y).abs())
            })
            .count() as f64;
        let p = hits / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt() * mass;
        assert!((p * mass - lhs).abs() <= 4.0 * se, "x={x}: MC {} vs {lhs} (se {se})", p * mass);
    }
}

#[test]
fn onedim_limit_is_the_cesaro_mean() {
    let spec = preset_kernel(Preset::Onedim);
    let y = 1e4;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let x: f64 = rng.random();
        for s in [1.0, -1.0] {
            let mean = integrate_interval(|v| spec.kappa_star(&[x], &[s], &[s], &[s * v]), 0.0, y, 2000, 8) / y;
            let k0 = spec.eval_kappa0(&[x], &[s], &[s]).unwrap();
            assert!((mean - k0).abs() <= 1e-2, "x={x} s={s}: {mean} vs {k0}");
        }
    }
}

#[test]
fn validation_reports_per_family() {
    let eps: Vec<f64> = (1..=20).map(|k| 2f64.powi(-k)).collect();
    let j = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
    let r = JumpKernelSpec::constant(1, 2.0).validate_assumptions(&j, 300, &eps, true, 1).unwrap();
    assert!(r.pass);
    assert!(r.checks.iter().filter(|c| !c.name.starts_with("kappa_")).all(|c| c.value == 0.0), "{r:?}");
    let r = preset_kernel(Preset::Su18).validate_assumptions(&j, 300, &eps, false, 1).unwrap();
    assert!(r.pass);
    assert_eq!(r.get("holder").unwrap().value, 0.0);
    assert_eq!(r.get("small_scale_limit").unwrap().value, 0.0);
    let r = preset_kernel(Preset::SdeDiffeo).validate_assumptions(&j, 300, &eps, true, 1).unwrap();
    assert!(r.pass, "{r:?}");
}
