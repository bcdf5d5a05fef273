//! Statistical verification of `X^ε ⇒ X̄`: empirical characteristic functions against
//! `exp(tψ̄)`, marginal KS distances, the drift and jump characteristics, and the
//! martingale (Itô formula) consistency test.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::corrector::{mode_integral, Corrector, ModeIntegrals};
use crate::error::{check_dim, invalid, Error, Result};
use crate::homogenizer::{levy_exponent, HomogenizedTriplet, LimitGenerator};
use crate::levy::{norm, radial_moment};
use crate::model::{GeneratorView, JumpGenerator, ModelSpec, ViewKind};
use crate::quadrature::{integrate_interval, power_integral, RadialQuadrature};
use crate::rng::par_streams;
use crate::sim::{NoObserver, PathObserver, SimOptions, Simulator};
use crate::stats::{ks_two_sample, mean_se, KsResult};
use crate::torus::{grid_node, Arity, PeriodicField};

/// One value of an empirical characteristic function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcfPoint {
    pub xi: Vec<f64>,
    pub re: f64,
    pub im: f64,
    /// `sqrt((Var cos + Var sin)/n)`.
    pub se: f64,
}

impl EcfPoint {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Mergeable sums for an empirical characteristic function on a fixed ξ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EcfAccumulator {
    xi: Vec<Vec<f64>>,
    sum_c: Vec<f64>,
    sum_s: Vec<f64>,
    sum_c2: Vec<f64>,
    sum_s2: Vec<f64>,
    n: u64,
}

impl EcfAccumulator {
    pub fn new(xi: Vec<Vec<f64>>) -> Self {
        let m = xi.len();
        Self { xi, sum_c: vec![0.0; m], sum_s: vec![0.0; m], sum_c2: vec![0.0; m], sum_s2: vec![0.0; m], n: 0 }
    }

    pub fn push(&mut self, x: &[f64]) {
        for (j, xi) in self.xi.iter().enumerate() {
            let p: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            let (s, c) = p.sin_cos();
            self.sum_c[j] += c;
            self.sum_s[j] += s;
            self.sum_c2[j] += c * c;
            self.sum_s2[j] += s * s;
        }
        self.n += 1;
    }

    pub fn merge(&mut self, other: &EcfAccumulator) -> Result<()> {
        if self.xi != other.xi {
            return Err(invalid("xi", "accumulators use different grids"));
        }
        for j in 0..self.xi.len() {
            self.sum_c[j] += other.sum_c[j];
            self.sum_s[j] += other.sum_s[j];
            self.sum_c2[j] += other.sum_c2[j];
            self.sum_s2[j] += other.sum_s2[j];
        }
        self.n += other.n;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn estimate(&self) -> Result<Vec<EcfPoint>> {
        if self.n == 0 {
            return Err(Error::EmptySamples);
        }
        let n = self.n as f64;
        Ok(self
            .xi
            .iter()
            .enumerate()
            .map(|(j, xi)| {
                let (mc, ms) = (self.sum_c[j] / n, self.sum_s[j] / n);
                let se = if self.n > 1 {
                    let vc = (self.sum_c2[j] - n * mc * mc).max(0.0) / (n - 1.0);
                    let vs = (self.sum_s2[j] - n * ms * ms).max(0.0) / (n - 1.0);
                    ((vc + vs) / n).sqrt()
                } else {
                    0.0
                };
                if xi.iter().all(|v| *v == 0.0) {
                    EcfPoint { xi: xi.clone(), re: 1.0, im: 0.0, se: 0.0 }
                } else {
                    EcfPoint { xi: xi.clone(), re: mc, im: ms, se }
                }
            })
            .collect())
    }
}

/// `φ̂(ξ) = mean of e^{iξ·X}` with standard errors.
pub fn empirical_char_fn(samples: &[Vec<f64>], xi_grid: &[Vec<f64>]) -> Result<Vec<EcfPoint>> {
    let first = samples.first().ok_or(Error::EmptySamples)?;
    let d = first.len();
    for xi in xi_grid {
        check_dim(d, xi.len())?;
    }
    let mut acc = EcfAccumulator::new(xi_grid.to_vec());
    for s in samples {
        check_dim(d, s.len())?;
        acc.push(s);
    }
    acc.estimate()
}

/// Default ξ grid: `per_axis` equispaced points per axis in `[−r, r]^d`.
pub fn default_xi_grid(d: usize, per_axis: usize, r: f64) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_axis).map(|i| -r + 2.0 * r * i as f64 / (per_axis - 1).max(1) as f64).collect();
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let v = axis[idx % per_axis];
                    idx /= per_axis;
                    v
                })
                .collect()
        })
        .collect()
}

/// Smooth bump supported in `1 ≤ |z| ≤ 2`, equal to 1 at `|z| = 1.5`.
pub fn annulus_bump(z: &[f64]) -> f64 {
    bump_radial(norm(z))
}

fn bump_radial(r: f64) -> f64 {
    let s = (r - 1.5) / 0.5;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// `∫ f dν̄` for the annulus bump, by radial quadrature per angular node.
pub fn limit_jump_functional(triplet: &HomogenizedTriplet, quad: &RadialQuadrature) -> Result<f64> {
    let alpha = triplet.alpha;
    let radial = integrate_interval(|r| bump_radial(r) * r.powf(-1.0 - alpha), 1.0, 2.0, 64, 8);
    let nodes = triplet.levy.angular_nodes(quad.angular_nodes)?;
    Ok(nodes.iter().map(|n| n.weight * triplet.kappa_bar_at(&n.dir) * radial).sum())
}

/// Controls of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub eps_list: Vec<f64>,
    pub t_list: Vec<f64>,
    /// Empty selects the default grid (17 points per axis in `[−5, 5]^d`).
    pub xi_grid: Vec<Vec<f64>>,
    pub n_paths: usize,
    /// Draw limit-process samples for the KS distances (d = 1 only).
    pub ks: bool,
    /// Phase-grid resolution for the drift characteristic (0 = automatic).
    pub drift_table_n: usize,
    pub sim: SimOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            eps_list: vec![0.5, 0.25, 0.125],
            t_list: vec![1.0],
            xi_grid: Vec::new(),
            n_paths: 10_000,
            ks: true,
            drift_table_n: 0,
            sim: SimOptions::default(),
        }
    }
}

/// ECF distance at one `(ε, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub eps: f64,
    pub t: f64,
    /// `D = max_ξ |φ̂_ε(ξ) − e^{tψ̄(ξ)}|`.
    pub distance: f64,
    /// Monte Carlo noise floor: the largest ECF standard error on the grid.
    pub floor: f64,
    pub argmax_xi: Vec<f64>,
    pub ks: Option<KsResult>,
    pub ecf: Vec<EcfPoint>,
    pub limit: Vec<[f64; 2]>,
}

/// Estimate of a characteristic functional at one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub eps: f64,
    pub estimate: Vec<f64>,
    pub se: Vec<f64>,
    pub reference: Vec<f64>,
}

impl FunctionalEstimate {
    /// Largest `|estimate − reference| / se` over components (∞ if a se vanishes with a gap).
    pub fn max_z(&self) -> f64 {
        self.estimate
            .iter()
            .zip(&self.se)
            .zip(&self.reference)
            .map(|((e, s), r)| {
                let gap = (e - r).abs();
                if gap == 0.0 {
                    0.0
                } else if *s > 0.0 {
                    gap / s
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Outcome of `convergence_report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eps_list: Vec<f64>,
    pub t_list: Vec<f64>,
    pub n_paths: usize,
    pub entries: Vec<DistanceEntry>,
    pub drift_functional: Vec<FunctionalEstimate>,
    pub jump_functional: Vec<FunctionalEstimate>,
    pub monotone: bool,
    pub final_within_floor: bool,
    pub verdict: String,
    /// Total jump proposals and accepted jumps (deterministic run metadata).
    pub n_proposals: u64,
    pub n_accepted: u64,
    pub delta: f64,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    pub fn entry(&self, eps: f64, t: f64) -> Option<&DistanceEntry> {
        self.entries.iter().find(|e| e.eps == eps && e.t == t)
    }

    /// Companion table `eps,t,xi_1..,re,im,se`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let d = self.entries.first().map(|e| e.argmax_xi.len()).unwrap_or(1);
        let mut header = vec!["eps".to_string(), "t".to_string()];
        header.extend((1..=d).map(|i| format!("xi_{i}")));
        header.extend(["re", "im", "se", "limit_re", "limit_im"].map(String::from));
        wr.write_record(&header)?;
        for e in &self.entries {
            for (p, l) in e.ecf.iter().zip(&e.limit) {
                let mut row = vec![e.eps.to_string(), e.t.to_string()];
                row.extend(p.xi.iter().map(|v| v.to_string()));
                row.extend([p.re, p.im, p.se, l[0], l[1]].map(|v| v.to_string()));
                wr.write_record(&row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// The drift characteristic whose time average should converge to `b̄`, as a field of the phase `x/ε`.
fn drift_characteristic(
    model: &ModelSpec,
    view: &GeneratorView<'_>,
    corrector: Option<&Corrector>,
    eps: f64,
    n: usize,
    quad: &RadialQuadrature,
) -> Result<PeriodicField> {
    let d = model.dim();
    let alpha = model.alpha();
    if alpha == 1.0 {
        return Ok(PeriodicField::zero_vector(d));
    }
    if alpha < 1.0 {
        if !model.kernel.is_state_dependent() && model.kernel.is_jump_independent() {
            let m = radial_moment(&model.levy, &view.bound_kernel(&vec![0.0; d]), 0.0, 1.0, quad)?;
            return Ok(PeriodicField::constant_vector(&m));
        }
        return tabulate(d, n, |y| {
            let x: Vec<f64> = y.iter().map(|v| v * eps).collect();
            radial_moment(&model.levy, &view.bound_kernel(&x), 0.0, 1.0, quad)
        });
    }
    let zero;
    let corr = match corrector {
        Some(c) => c,
        None => {
            if !model.b.is_zero() {
                return Err(invalid("corrector", "required when α ∈ (1,2) and b ≠ 0"));
            }
            zero = Corrector::zero(d, 4);
            &zero
        }
    };
    if corr.field.is_zero() && model.c.is_constant() {
        let c: Vec<f64> = (0..d).map(|i| model.c.eval_component(i, &vec![0.0; d])).collect();
        return Ok(PeriodicField::constant_vector(&c));
    }
    let nodes = model.levy.angular_nodes(quad.angular_nodes)?;
    let radial = power_integral(1.0, f64::INFINITY, -alpha);
    let u_nodes = if d == 1 { 64 } else { 16 };
    tabulate(d, n, |y| {
        let c: Vec<f64> = (0..d).map(|i| model.c.eval_component(i, y)).collect();
        let g: Vec<Vec<f64>> = (0..d).map(|i| corr.field.gradient_component(i, y)).collect();
        let mut out: Vec<f64> = (0..d).map(|i| c[i] + g[i].iter().zip(&c).map(|(a, b)| a * b).sum::<f64>()).collect();
        for node in &nodes {
            let k = model.kernel.u_average_kappa0(y, &node.dir, u_nodes);
            for i in 0..d {
                out[i] += node.weight * radial * k * g[i].iter().zip(&node.dir).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(out)
    })
}

fn tabulate(d: usize, n: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<PeriodicField> {
    let cells = n.pow(d as u32);
    let mut comps = vec![vec![0.0; cells]; d];
    let mut y = vec![0.0; d];
    for idx in 0..cells {
        grid_node(idx, n, d, &mut y);
        for (c, v) in comps.iter_mut().zip(f(&y)?) {
            c[idx] = v;
        }
    }
    PeriodicField::from_grid(d, n, Arity::Vector, comps)
}

/// Time integral of a phase field along the path plus the jump functional.
struct CharacteristicObserver<'a> {
    field: &'a PeriodicField,
    eps: f64,
    drift: Vec<f64>,
    jumps: f64,
    buf: Vec<f64>,
}

impl CharacteristicObserver<'_> {
    fn add(&mut self, x: &[f64], w: f64) {
        for (b, v) in self.buf.iter_mut().zip(x) {
            *b = v / self.eps;
        }
        for i in 0..self.drift.len() {
            self.drift[i] += w * self.field.eval_component(i, &self.buf);
        }
    }
}

impl PathObserver for CharacteristicObserver<'_> {
    fn segment(&mut self, t0: f64, t1: f64, x0: &[f64], x1: &[f64]) {
        let h = t1 - t0;
        if self.field.is_constant() {
            self.add(x0, h);
            return;
        }
        let mid: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| 0.5 * (a + b)).collect();
        self.add(x0, h / 6.0);
        self.add(&mid, 4.0 * h / 6.0);
        self.add(x1, h / 6.0);
    }
    fn jump(&mut self, _t: f64, pre: &[f64], post: &[f64], accepted: bool) {
        if accepted {
            let z: Vec<f64> = post.iter().zip(pre).map(|(a, b)| a - b).collect();
            self.jumps += annulus_bump(&z);
        }
    }
}

fn monotone_and_final(entries: &[DistanceEntry], eps_list: &[f64], t_list: &[f64]) -> (bool, bool) {
    let mut monotone = true;
    let mut fin = true;
    for t in t_list {
        let seq: Vec<&DistanceEntry> = eps_list.iter().filter_map(|e| entries.iter().find(|x| x.eps == *e && x.t == *t)).collect();
        for w in seq.windows(2) {
            let combined = (w[0].floor.powi(2) + w[1].floor.powi(2)).sqrt();
            if w[1].distance > w[0].distance + 2.0 * combined {
                monotone = false;
            }
        }
        if let Some(last) = seq.last() {
            if last.distance > last.floor + 4.0 * last.floor {
                fin = false;
            }
        }
    }
    (monotone, fin)
}

/// Simulate `X^ε` for every ε and compare with the homogenized limit.
pub fn convergence_report(
    model: &ModelSpec,
    triplet: &HomogenizedTriplet,
    corrector: Option<&Corrector>,
    opts: &VerifyOptions,
    seed_base: u64,
) -> Result<ConvergenceReport> {
    let d = model.dim();
    if triplet.dim() != d || triplet.alpha != model.alpha() || triplet.levy != model.levy {
        return Err(invalid("triplet", "does not belong to the model (dimension, α or J differ)"));
    }
    if opts.eps_list.is_empty() || opts.t_list.is_empty() || opts.n_paths < 2 {
        return Err(invalid("verify", "needs ε values, times and at least two paths"));
    }
    if opts.eps_list.windows(2).any(|w| w[1] >= w[0]) || opts.eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("eps_list", "must be positive and strictly decreasing"));
    }
    let mut times = opts.t_list.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("t_list", "must be positive and distinct"));
    }
    let horizon = *times.last().unwrap();
    let xi = if opts.xi_grid.is_empty() { default_xi_grid(d, 17, 5.0) } else { opts.xi_grid.clone() };
    let quad = &opts.sim.quad;
    let exps: Vec<Complex64> = xi.iter().map(|x| levy_exponent(triplet, x, quad)).collect::<Result<_>>()?;
    let nu_ref = limit_jump_functional(triplet, quad)?;

    // limit samples for the KS distances
    let limit_samples = if opts.ks && d == 1 {
        let gen = LimitGenerator::new(triplet)?;
        let sim = Simulator::new(&gen, &opts.sim)?;
        let paths = par_streams(opts.n_paths, seed_base, "verify/limit", |_, rng| {
            Ok(sim.simulate(&[0.0], horizon, &times, rng, &mut NoObserver)?.unwrapped)
        })?;
        Some(paths)
    } else {
        None
    };

    let table_n = if opts.drift_table_n > 0 { opts.drift_table_n } else if d == 1 { 64 } else { 16 };
    let mut entries = Vec::new();
    let mut drift_functional = Vec::new();
    let mut jump_functional = Vec::new();
    let (mut n_prop, mut n_acc) = (0u64, 0u64);
    for &eps in &opts.eps_list {
        let view = GeneratorView::new(model, ViewKind::Eps(eps))?;
        let sim = Simulator::new(&view, &opts.sim)?;
        let field = drift_characteristic(model, &view, corrector, eps, table_n, quad)?;
        let stage = format!("verify/eps={eps}");
        let start = vec![0.0; d];
        let per_path = par_streams(opts.n_paths, seed_base, &stage, |_, rng| {
            let mut obs = CharacteristicObserver { field: &field, eps, drift: vec![0.0; d], jumps: 0.0, buf: vec![0.0; d] };
            let p = sim.simulate(&start, horizon, &times, rng, &mut obs)?;
            Ok((p.unwrapped, obs.drift, obs.jumps, p.n_proposals, p.n_accepted))
        })?;
        for (it, &t) in times.iter().enumerate() {
            let mut acc = EcfAccumulator::new(xi.clone());
            for p in &per_path {
                acc.push(&p.0[it]);
            }
            let ecf = acc.estimate()?;
            let limit: Vec<Complex64> = exps.iter().map(|p| (p * t).exp()).collect();
            let (mut dist, mut arg) = (0.0, xi[0].clone());
            for (p, l) in ecf.iter().zip(&limit) {
                let gap = (p.value() - l).norm();
                if gap > dist {
                    dist = gap;
                    arg = p.xi.clone();
                }
            }
            let floor = ecf.iter().map(|p| p.se).fold(0.0, f64::max);
            let ks = match &limit_samples {
                Some(ls) => {
                    let a: Vec<f64> = per_path.iter().map(|p| p.0[it][0]).collect();
                    let b: Vec<f64> = ls.iter().map(|p| p[it][0]).collect();
                    Some(ks_two_sample(&a, &b)?)
                }
                None => None,
            };
            entries.push(DistanceEntry { eps, t, distance: dist, floor, argmax_xi: arg, ks, ecf, limit: limit.iter().map(|c| [c.re, c.im]).collect() });
        }
        let mut est = Vec::with_capacity(d);
        let mut se = Vec::with_capacity(d);
        for i in 0..d {
            let v: Vec<f64> = per_path.iter().map(|p| p.1[i] / horizon).collect();
            let (m, s) = mean_se(&v)?;
            est.push(m);
            se.push(s);
        }
        drift_functional.push(FunctionalEstimate { eps, estimate: est, se, reference: triplet.b_bar.clone() });
        let v: Vec<f64> = per_path.iter().map(|p| p.2 / horizon).collect();
        let (m, s) = mean_se(&v)?;
        jump_functional.push(FunctionalEstimate { eps, estimate: vec![m], se: vec![s], reference: vec![nu_ref] });
        n_prop += per_path.iter().map(|p| p.3).sum::<u64>();
        n_acc += per_path.iter().map(|p| p.4).sum::<u64>();
    }
    let (monotone, final_within_floor) = monotone_and_final(&entries, &opts.eps_list, &times);
    Ok(ConvergenceReport {
        eps_list: opts.eps_list.clone(),
        t_list: times,
        n_paths: opts.n_paths,
        entries,
        drift_functional,
        jump_functional,
        monotone,
        final_within_floor,
        verdict: if monotone && final_within_floor { "pass" } else { "fail" }.into(),
        n_proposals: n_prop,
        n_accepted: n_acc,
        delta: opts.sim.delta,
    })
}

/// z-scores of the compensated process at `T/3`, `2T/3` and `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub eps: f64,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub drift_scale: f64,
    pub n_paths: usize,
}

impl MartingaleReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z_scores.iter().map(|z| z.abs()).fold(0.0, f64::max)
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.max_abs_z() < threshold
    }
}

/// Jump part of the simulated generator on the Fourier modes of `f`, tabulated on the phase grid.
struct ModeTable {
    terms: Vec<(Vec<f64>, f64, f64)>,
    constant: Option<Vec<Complex64>>,
    table: Option<Vec<PeriodicField>>,
    eps: f64,
}

impl ModeTable {
    fn new(view: &GeneratorView<'_>, f: &PeriodicField, eps: f64, n: usize, delta: f64, quad: &RadialQuadrature) -> Result<Self> {
        let d = view.dim();
        let terms: Vec<(Vec<f64>, f64, f64)> = f
            .fourier_terms(0)
            .ok_or_else(|| invalid("f", "must be Fourier-backed"))?
            .iter()
            .map(|t| (t.frequency.iter().map(|k| *k as f64).collect(), t.cos_coeff, t.sin_coeff))
            .collect();
        let integral = |x: &[f64]| -> Result<Vec<Complex64>> {
            terms
                .iter()
                .map(|(k, _, _)| {
                    if k.iter().all(|v| *v == 0.0) {
                        return Ok(Complex64::new(0.0, 0.0));
                    }
                    let ki: Vec<i64> = k.iter().map(|v| *v as i64).collect();
                    mode_integral(view, &ki, x, ModeIntegrals::Truncated { delta }, quad)
                })
                .collect()
        };
        if !view.kernel_is_state_dependent() {
            return Ok(Self { constant: Some(integral(&vec![0.0; d])?), table: None, terms, eps });
        }
        let cells = n.pow(d as u32);
        let mut comps = vec![vec![0.0; cells]; 2 * terms.len()];
        let mut y = vec![0.0; d];
        for idx in 0..cells {
            grid_node(idx, n, d, &mut y);
            let x: Vec<f64> = y.iter().map(|v| v * eps).collect();
            for (j, v) in integral(&x)?.into_iter().enumerate() {
                comps[2 * j][idx] = v.re;
                comps[2 * j + 1][idx] = v.im;
            }
        }
        let table = comps.into_iter().map(|c| PeriodicField::from_grid(d, n, Arity::Scalar, vec![c])).collect::<Result<Vec<_>>>()?;
        Ok(Self { constant: None, table: Some(table), terms, eps })
    }

    /// `∫_{|z|≥δ} (f(x+z) − f(x)) k(x,z) J dz`.
    fn apply(&self, x: &[f64], buf: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (j, (k, a, b)) in self.terms.iter().enumerate() {
            let m = match (&self.constant, &self.table) {
                (Some(c), _) => c[j],
                (None, Some(t)) => {
                    for (o, v) in buf.iter_mut().zip(x) {
                        *o = v / self.eps;
                    }
                    Complex64::new(t[2 * j].eval_component(0, buf), t[2 * j + 1].eval_component(0, buf))
                }
                _ => unreachable!(),
            };
            let phase = 2.0 * PI * k.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
            let e = Complex64::new(0.0, phase).exp();
            total += (Complex64::new(*a, -*b) * e * m).re;
        }
        total
    }
}

struct MartingaleObserver<'a> {
    sim: &'a Simulator<'a>,
    modes: &'a ModeTable,
    f: &'a PeriodicField,
    drift_scale: f64,
    integral: f64,
    checkpoints: &'a [f64],
    snapshots: Vec<f64>,
    buf: Vec<f64>,
    v: Vec<f64>,
    jd: Vec<f64>,
    cov: Vec<f64>,
}

impl MartingaleObserver<'_> {
    fn generator(&mut self, x: &[f64]) -> f64 {
        let jump = self.modes.apply(x, &mut self.buf);
        self.sim.generator().drift(x, &mut self.v);
        self.sim.jump_drift(x, &mut self.jd);
        let g = self.f.gradient_component(0, x);
        let drift: f64 = (0..x.len()).map(|i| (self.drift_scale * self.v[i] + self.jd[i]) * g[i]).sum();
        self.sim.small_jump_cov(x, &mut self.cov);
        let diffusion = if self.cov.iter().any(|c| *c != 0.0) {
            let h = self.f.hessian_component(0, x);
            0.5 * self.cov.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
        } else {
            0.0
        };
        jump + drift + diffusion
    }
}

impl PathObserver for MartingaleObserver<'_> {
    fn segment(&mut self, t0: f64, t1: f64, x0: &[f64], x1: &[f64]) {
        let h = t1 - t0;
        let mid: Vec<f64> = x0.iter().zip(x1).map(|(a, b)| 0.5 * (a + b)).collect();
        let s = self.generator(x0) + 4.0 * self.generator(&mid) + self.generator(x1);
        self.integral += h * s / 6.0;
        while let Some(&tc) = self.checkpoints.get(self.snapshots.len()) {
            if tc <= t1 * (1.0 + 1e-12) {
                self.snapshots.push(self.integral);
            } else {
                break;
            }
        }
    }
}

/// `M_t = f(X_t) − f(X_0) − ∫_0^t A_δ f(X_s) ds` along paths of `X^ε` from 0, where `A_δ` is
/// the generator the simulator realises (jumps of size ≥ δ, the induced drift and the
/// small-jump Gaussian).
/// `drift_scale ≠ 1` multiplies the model drift inside the generator (negative control).
pub fn martingale_test(
    model: &ModelSpec,
    f: &PeriodicField,
    eps: f64,
    horizon: f64,
    n_paths: usize,
    drift_scale: f64,
    opts: &SimOptions,
    seed_base: u64,
) -> Result<MartingaleReport> {
    let d = model.dim();
    check_dim(d, f.dim())?;
    if f.n_components() != 1 || !f.is_fourier() {
        return Err(invalid("f", "must be a scalar Fourier-backed field"));
    }
    if n_paths < 2 {
        return Err(invalid("n_paths", "at least two paths are needed"));
    }
    let view = GeneratorView::new(model, ViewKind::Eps(eps))?;
    let sim = Simulator::new(&view, opts)?;
    let modes = ModeTable::new(&view, f, eps, if d == 1 { 128 } else { 24 }, opts.delta, &opts.quad)?;
    let times = vec![horizon / 3.0, 2.0 * horizon / 3.0, horizon];
    let start = vec![0.0; d];
    let f0 = f.eval_component(0, &start);
    let values = par_streams(n_paths, seed_base, "martingale", |_, rng| {
        let mut obs = MartingaleObserver {
            sim: &sim,
            modes: &modes,
            f,
            drift_scale,
            integral: 0.0,
            checkpoints: &times,
            snapshots: Vec::new(),
            buf: vec![0.0; d],
            v: vec![0.0; d],
            jd: vec![0.0; d],
            cov: vec![0.0; d * d],
        };
        let p = sim.simulate(&start, horizon, &times, rng, &mut obs)?;
        Ok(p.unwrapped.iter().zip(&obs.snapshots).map(|(x, i)| f.eval_component(0, x) - f0 - i).collect::<Vec<f64>>())
    })?;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    let mut zs = Vec::new();
    for k in 0..times.len() {
        let v: Vec<f64> = values.iter().map(|p| p[k]).collect();
        let (m, s) = mean_se(&v)?;
        means.push(m);
        ses.push(s);
        zs.push(if s > 0.0 { m / s } else if m.abs() < 1e-12 { 0.0 } else { f64::INFINITY });
    }
    Ok(MartingaleReport { eps, times, means, standard_errors: ses, z_scores: zs, drift_scale, n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpKernelSpec;
    use crate::levy::LevyDensity;
    use crate::torus::FourierTerm;
    use approx::assert_relative_eq;

    #[test]
    fn ecf_normalization_and_point_mass() {
        let s = vec![vec![0.7]; 5];
        let e = empirical_char_fn(&s, &[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!((e[0].re, e[0].im), (1.0, 0.0));
        assert_relative_eq!(e[1].re, (1.4f64).cos(), epsilon = 1e-14);
        assert_relative_eq!(e[1].im, (1.4f64).sin(), epsilon = 1e-14);
        assert!(empirical_char_fn(&[], &[vec![1.0]]).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_xi_grid(1, 17, 5.0);
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], vec![-5.0]);
        assert_eq!(g[8], vec![0.0]);
        assert_eq!(default_xi_grid(2, 17, 5.0).len(), 289);
    }

    #[test]
    fn bump_support() {
        assert_eq!(annulus_bump(&[0.99]), 0.0);
        assert_eq!(annulus_bump(&[-2.01]), 0.0);
        assert_relative_eq!(annulus_bump(&[1.5]), 1.0);
    }

    #[test]
    fn constant_test_function_has_zero_martingale() {
        let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let m = ModelSpec::driftless(levy, JumpKernelSpec::constant(1, 1.0)).unwrap();
        let f = PeriodicField::fourier_scalar(1, vec![FourierTerm::constant(1, 2.0)]).unwrap();
        let r = martingale_test(&m, &f, 0.5, 0.1, 20, 1.0, &SimOptions::default(), 3).unwrap();
        assert!(r.means.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(r.max_abs_z(), 0.0);
    }
}
