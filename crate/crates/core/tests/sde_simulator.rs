use homog::config::{ExperimentConfig, Preset};
use homog::homogenizer::{levy_exponent, simulate_limit_levy, HomogenizedTriplet};
use homog::model::{GeneratorView, JumpGenerator, ModelSpec, ViewKind};
use homog::quadrature::RadialQuadrature;
use homog::rng::stream_rng;
use homog::sim::{check_rescaling_law, simulate_cell_path, simulate_eps_path, SimOptions, Simulator};
use homog::stats::{ks_one_sample, mean_se};
use homog::torus::FourierTerm;
use homog::verify::EcfAccumulator;
use homog::{JumpKernelSpec, KernelFamily, LevyDensity, PeriodicField};

fn stable_model() -> ModelSpec {
    ModelSpec::driftless(LevyDensity::symmetric_1d(1.5, 1.0).unwrap(), JumpKernelSpec::constant(1, 1.0)).unwrap()
}

/// ECF of `X_t` at ξ from `n` paths of the view.
fn ecf(gen: &dyn JumpGenerator, opts: &SimOptions, t: f64, xi: f64, n: usize, seed: u64) -> (f64, f64, f64) {
    let sim = Simulator::new(gen, opts).unwrap();
    let paths = sim.simulate_batch(&[0.0], t, &[t], n, seed, "test/ecf").unwrap();
    let mut acc = EcfAccumulator::new(vec![vec![xi]]);
    for p in &paths {
        acc.push(&p.unwrapped[0]);
    }
    let e = acc.estimate().unwrap().remove(0);
    (e.re, e.im, e.se)
}

#[test]
fn constant_kernel_ecf_matches_the_stable_exponent() {
    let m = stable_model();
    let view = GeneratorView::new(&m, ViewKind::Eps(0.25)).unwrap();
    let (re, im, se) = ecf(&view, &SimOptions::default(), 1.0, 1.0, 10_000, 1);
    let t = HomogenizedTriplet::constant(m.levy.clone(), 1.0, vec![0.0]).unwrap();
    let phi = levy_exponent(&t, &[1.0], &RadialQuadrature::default()).unwrap().exp();
    let gap = ((re - phi.re).powi(2) + (im - phi.im).powi(2)).sqrt();
    assert!(gap < 4.0 * se, "{re} {im} vs {phi} (se {se})");
}

#[test]
fn constant_kernel_accepts_every_proposal() {
    let m = stable_model();
    let p = simulate_eps_path(&m, 0.3, 1.0, &[0.0], &SimOptions::default(), &mut stream_rng(1, "t", 0)).unwrap();
    assert!(p.n_proposals > 0);
    assert_eq!(p.n_proposals, p.n_accepted);
}

#[test]
fn cell_process_equilibrates_to_uniform_with_centred_increments() {
    let m = stable_model();
    let view = GeneratorView::new(&m, ViewKind::Cell).unwrap();
    let sim = Simulator::new(&view, &SimOptions::default()).unwrap();
    let paths = sim.simulate_batch(&[0.3], 1.0, &[1.0], 10_000, 3, "test/cell").unwrap();
    let wrapped: Vec<f64> = paths.iter().map(|p| p.samples[0][0]).collect();
    let ks = ks_one_sample(&wrapped, |x| x.clamp(0.0, 1.0)).unwrap();
    assert!(ks.statistic < 0.02, "{ks:?}");
    // increments are heavy-tailed: test the mean of a symmetric clamp
    let inc: Vec<f64> = paths.iter().map(|p| (p.unwrapped[0][0] - 0.3).clamp(-5.0, 5.0)).collect();
    let (mean, se) = mean_se(&inc).unwrap();
    assert!(mean.abs() < 4.0 * se, "{mean} ± {se}");
    let again = simulate_cell_path(&m, 1.0, &[0.3], &SimOptions::default(), &mut stream_rng(3, "x", 9)).unwrap();
    let twice = simulate_cell_path(&m, 1.0, &[0.3], &SimOptions::default(), &mut stream_rng(3, "x", 9)).unwrap();
    assert_eq!(again, twice);
}

#[test]
fn limit_process_matches_its_exponent() {
    let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
    let t = HomogenizedTriplet::constant(levy, 0.7, vec![0.4]).unwrap();
    let opts = SimOptions::default();
    let n = 10_000;
    let mut acc = EcfAccumulator::new(vec![vec![1.5]]);
    for i in 0..n {
        let p = simulate_limit_levy(&t, 1.0, &opts, &mut stream_rng(4, "limit", i)).unwrap();
        acc.push(&p.end);
    }
    let e = acc.estimate().unwrap().remove(0);
    let phi = levy_exponent(&t, &[1.5], &opts.quad).unwrap().exp();
    assert!((e.value() - phi).norm() < 4.0 * e.se, "{:?} vs {phi}", e);
    let a = simulate_limit_levy(&t, 1.0, &opts, &mut stream_rng(4, "limit", 0)).unwrap();
    let b = simulate_limit_levy(&t, 1.0, &opts, &mut stream_rng(4, "limit", 0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn thinning_accepts_with_the_kernel_ratio() {
    // acceptance count per phase cell against Σ κ(y, z)/envelope over the recorded proposals
    let kernel = JumpKernelSpec::new(
        1,
        KernelFamily::Product {
            x_factor: PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![0], 1.0, 0.0), FourierTerm::new(vec![1], 0.6, 0.0)]).unwrap(),
            u_factor: PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![0], 1.0, 0.0), FourierTerm::new(vec![1], 0.0, 0.3)]).unwrap(),
            v_factor: PeriodicField::constant(1, 1.0),
        },
    )
    .unwrap();
    let m = ModelSpec::driftless(LevyDensity::symmetric_1d(1.5, 1.0).unwrap(), kernel).unwrap();
    let view = GeneratorView::new(&m, ViewKind::Cell).unwrap();
    let opts = SimOptions { delta: 0.1, record_events: true, ..Default::default() };
    let sim = Simulator::new(&view, &opts).unwrap();
    let env = view.dominating();
    let mut observed = [0.0f64; 2];
    let mut expected = [0.0f64; 2];
    let mut variance = [0.0f64; 2];
    // jump-size histogram of accepted jumps in |z| ∈ [0.1, 1), conditioned on the cell
    let mut hist = vec![[0.0f64; 6]; 2];
    let mut hist_expect = vec![[0.0f64; 6]; 2];
    for i in 0..400 {
        let p = sim.simulate(&[0.0], 5.0, &[], &mut stream_rng(5, "thin", i), &mut homog::sim::NoObserver).unwrap();
        for e in &p.events {
            let cell = usize::from(homog::torus::wrap(e.pre[0]) >= 0.5);
            let pr = view.kernel_value(&e.pre, &e.jump) / env.value(e.jump[0].abs());
            expected[cell] += pr;
            variance[cell] += pr * (1.0 - pr);
            let r = e.jump[0].abs();
            if r < 1.0 {
                let b = 3 * usize::from(e.jump[0] < 0.0) + (((r - 0.1) / 0.3) as usize).min(2);
                hist_expect[cell][b] += pr;
                if e.accepted {
                    hist[cell][b] += 1.0;
                }
            }
            if e.accepted {
                observed[cell] += 1.0;
            }
        }
    }
    for c in 0..2 {
        let z = (observed[c] - expected[c]) / variance[c].sqrt();
        assert!(z.abs() < 4.0, "cell {c}: {} vs {} (z = {z})", observed[c], expected[c]);
        let chi2: f64 = hist[c].iter().zip(&hist_expect[c]).map(|(o, e)| (o - e).powi(2) / e).sum();
        // 6 bins: P(χ²_6 > 22.46) = 0.001
        assert!(chi2 < 22.46, "cell {c}: χ² = {chi2}");
    }
}

#[test]
fn proposal_counts_are_poisson() {
    let m = stable_model();
    let view = GeneratorView::new(&m, ViewKind::Eps(0.5)).unwrap();
    let opts = SimOptions { delta: 0.05, ..Default::default() };
    let sim = Simulator::new(&view, &opts).unwrap();
    let (alpha, t) = (1.5, 0.5);
    let rate = 1.0 * 2.0 * opts.delta.powf(-alpha) / alpha;
    assert!((sim.proposal_rate() - rate).abs() < 1e-9 * rate);
    let counts: Vec<f64> = (0..4000).map(|i| sim.simulate(&[0.0], t, &[], &mut stream_rng(6, "pois", i), &mut homog::sim::NoObserver).unwrap().n_proposals as f64).collect();
    let (mean, se) = mean_se(&counts).unwrap();
    assert!((mean - rate * t).abs() < 4.0 * se, "{mean} vs {} (se {se})", rate * t);
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
    assert!((var / mean - 1.0).abs() < 0.1, "dispersion {}", var / mean);
}

#[test]
fn halving_the_cutoff_stays_within_noise() {
    let m = stable_model();
    let view = GeneratorView::new(&m, ViewKind::Eps(0.5)).unwrap();
    for gaussian in [true, false] {
        let a = ecf(&view, &SimOptions { delta: 0.05, gaussian_small_jumps: gaussian, ..Default::default() }, 1.0, 1.0, 10_000, 7);
        let b = ecf(&view, &SimOptions { delta: 0.025, gaussian_small_jumps: gaussian, ..Default::default() }, 1.0, 1.0, 10_000, 8);
        let gap = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        assert!(gap < 4.0 * (a.2 * a.2 + b.2 * b.2).sqrt(), "gaussian={gaussian}: {a:?} vs {b:?}");
    }
}

#[test]
fn rescaling_law_identities() {
    let opts = SimOptions::default();
    let r = check_rescaling_law(&stable_model(), 0.25, &[0.5, 1.0], 4000, &opts, 9).unwrap();
    assert!(r.pass, "{r:?}");
    let su18 = ExperimentConfig::from_preset(Preset::Su18).model_spec().unwrap();
    let r = check_rescaling_law(&su18, 1.0, &[0.5, 1.0], 4000, &opts, 10).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn path_csv_round_trip_counts() {
    let m = stable_model();
    let o = SimOptions { delta: 0.2, record_events: true, ..Default::default() };
    let p = simulate_eps_path(&m, 0.5, 0.3, &[0.0], &o, &mut stream_rng(2, "t", 0)).unwrap();
    assert!(p.events.windows(2).all(|w| w[0].time < w[1].time));
    let mut buf = Vec::new();
    p.write_csv(&mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    let jumps = rd.records().filter(|r| r.as_ref().unwrap().get(2) == Some("1")).count();
    assert_eq!(jumps as u64, p.n_accepted);
}
