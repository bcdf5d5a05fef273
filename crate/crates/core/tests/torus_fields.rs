use homog::torus::{check_centering, Arity, Measure};
use homog::{EmpiricalMeasure, FourierTerm, PeriodicField};
use proptest::prelude::*;

fn terms(d: usize) -> impl Strategy<Value = Vec<FourierTerm>> {
    prop::collection::vec((prop::collection::vec(-3i64..=3, d), -1.0f64..1.0, -1.0f64..1.0), 1..6)
        .prop_map(|v| v.into_iter().map(|(k, a, b)| FourierTerm::new(k, a, b)).collect())
}

fn mean_zero_terms(d: usize) -> impl Strategy<Value = Vec<FourierTerm>> {
    terms(d).prop_map(|v| v.into_iter().filter(|t| t.frequency.iter().any(|k| *k != 0)).collect())
}

proptest! {
    #[test]
    fn fourier_fields_are_periodic(t in terms(2), x in prop::collection::vec(-2.0f64..2.0, 2), k in prop::collection::vec(-5i64..=5, 2)) {
        let f = PeriodicField::fourier_scalar(2, t).unwrap();
        let y: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a + *b as f64).collect();
        prop_assert!((f.eval_scalar(&x).unwrap() - f.eval_scalar(&y).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences(t in terms(1), x in 0.0f64..1.0) {
        let f = PeriodicField::fourier_scalar(1, t).unwrap();
        let h = 1e-5;
        let fd = (f.eval_scalar(&[x + h]).unwrap() - f.eval_scalar(&[x - h]).unwrap()) / (2.0 * h);
        let g = f.gradient(&[x]).unwrap()[0][0];
        prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences_2d(t in terms(2), x in prop::collection::vec(0.0f64..1.0, 2)) {
        let f = PeriodicField::fourier_scalar(2, t).unwrap();
        let h = 1e-5;
        let g = f.gradient(&x).unwrap()[0].clone();
        for j in 0..2 {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (f.eval_scalar(&a).unwrap() - f.eval_scalar(&b).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0));
        }
    }

    #[test]
    fn mean_zero_series_integrate_to_zero(t in mean_zero_terms(2)) {
        let f = PeriodicField::fourier_scalar(2, t).unwrap();
        let uniform = Measure::Uniform { n: 16 };
        prop_assert!(f.integrate(&uniform).unwrap()[0].abs() <= 1e-12);
    }

    #[test]
    fn normalized_measures_sum_to_one(w in prop::collection::vec(0.0f64..5.0, 16)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let m = EmpiricalMeasure::from_weights(1, 16, w).unwrap().normalized().unwrap();
        prop_assert!((m.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(m.weights().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn grid_gradient_of_sampled_sine() {
    let f = PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![1], 0.0, 1.0)]).unwrap();
    let g = f.sample_to_grid(256);
    let d = g.gradient(&[0.0]).unwrap()[0][0];
    assert!((d - 2.0 * std::f64::consts::PI).abs() < 1e-3, "{d}");
}

#[test]
fn grid_fields_are_periodic_at_nodes() {
    let vals: Vec<f64> = (0..8).map(|j| (j as f64).sqrt()).collect();
    let g = PeriodicField::from_grid(1, 8, Arity::Scalar, vec![vals.clone()]).unwrap();
    for (j, v) in vals.iter().enumerate() {
        let x = j as f64 / 8.0;
        assert!((g.eval_scalar(&[x + 3.0]).unwrap() - v).abs() <= 1e-12);
        assert!((g.eval_scalar(&[x - 2.0]).unwrap() - v).abs() <= 1e-12);
    }
}

#[test]
fn point_mass_integral_samples_the_field() {
    let f = PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![1], 0.0, 1.0)]).unwrap();
    let mu = EmpiricalMeasure::point_mass(1, 1024, &[0.25]).unwrap();
    let v = f.integrate(&Measure::Empirical(&mu)).unwrap()[0];
    assert!((v - 1.0).abs() < 1e-5, "{v}");
}

#[test]
fn centering_against_a_measure() {
    let b = PeriodicField::fourier_vector(1, vec![vec![FourierTerm::new(vec![1], 0.0, 1.0)]]).unwrap();
    let mu = EmpiricalMeasure::uniform(1, 64).unwrap();
    let r = check_centering(&b, &Measure::Empirical(&mu), 1e-10).unwrap();
    assert!(r.pass && r.max_residual() < 1e-10);
    let one = PeriodicField::constant_vector(&[1.0]);
    let r = check_centering(&one, &Measure::Uniform { n: 8 }, 1e-6).unwrap();
    assert!(!r.pass && (r.max_residual() - 1.0).abs() < 1e-12);
}
