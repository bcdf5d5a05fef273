//! Path simulation by thinning a dominating Poisson random measure.
//!
//! Jumps with `|z| ≥ δ` are proposed from `K·max(1, (|z|/r_b)^{−γ}) J(z) dz` and accepted
//! with probability `k(x, z)/envelope`; smaller jumps are dropped and their compensated
//! contribution is folded into the drift together with the compensator of the
//! simulated jumps. Optionally the dropped jumps are replaced by a Gaussian with their
//! covariance `Σ(x) = ∫_{|z|<δ} z zᵀ k J dz`, so the simulated generator is
//! `A_δ f = ∫_{|z|≥δ} [f(x+z) − f(x)] k J dz + (drift + jump_drift)·∇f + ½ tr(Σ ∇²f)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::DominatingProfile;
use crate::levy::{radial_moment, Compensation};
use crate::model::{GeneratorView, JumpGenerator, ModelSpec, ViewKind};
use crate::quadrature::RadialQuadrature;
use crate::rng::par_streams;
use crate::stats::{ks_two_sample, KsResult};
use crate::torus::{grid_node, wrap, Arity, PeriodicField};

/// Simulation controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Small-jump cutoff δ.
    pub delta: f64,
    /// Maximum expected number of proposals per path.
    pub jump_cap: f64,
    /// Keep the event list (costly for long paths).
    pub record_events: bool,
    /// Phase-grid resolution per axis of the tabulated jump drift.
    pub drift_table_n: usize,
    /// Drift substep: `h = min(0.1·s^α, substep_factor·s/|v|_max)` with `s` the period.
    pub substep_factor: f64,
    /// Replace the dropped small jumps by a Gaussian with the same covariance.
    pub gaussian_small_jumps: bool,
    pub quad: RadialQuadrature,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            delta: 0.02,
            jump_cap: 1e7,
            record_events: false,
            drift_table_n: 64,
            substep_factor: 0.02,
            gaussian_small_jumps: true,
            quad: RadialQuadrature::default(),
        }
    }
}

/// One proposed jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEvent {
    pub time: f64,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    pub jump: Vec<f64>,
    pub accepted: bool,
}

/// A simulated trajectory. Event states and `unwrapped` samples live in `R^d`;
/// `samples` are wrapped onto `[0,1)^d` for torus-valued processes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub tag: String,
    pub start: Vec<f64>,
    pub horizon: f64,
    pub events: Vec<PathEvent>,
    pub sample_times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub unwrapped: Vec<Vec<f64>>,
    pub end: Vec<f64>,
    pub n_proposals: u64,
    pub n_accepted: u64,
}

impl PathRecord {
    /// CSV with columns `t, x_1..x_d, jump`: the start, every accepted jump (post-jump
    /// state, flag 1) and every dense-output sample (flag 0), ordered by time.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let d = self.start.len();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|i| format!("x_{i}")));
        header.push("jump".into());
        wr.write_record(&header)?;
        let mut rows: Vec<(f64, u8, &Vec<f64>)> = vec![(0.0, 0, &self.start)];
        rows.extend(self.events.iter().filter(|e| e.accepted).map(|e| (e.time, 1u8, &e.post)));
        rows.extend(self.sample_times.iter().zip(&self.samples).map(|(t, x)| (*t, 0u8, x)));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (t, flag, x) in rows {
            let mut rec = vec![format!("{t:.17e}")];
            rec.extend(x.iter().map(|v| format!("{v:.17e}")));
            rec.push(flag.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Receives the piecewise description of a path as it is generated (unwrapped
/// coordinates): linear motion segments and proposed jumps.
pub trait PathObserver {
    fn segment(&mut self, _t0: f64, _t1: f64, _x0: &[f64], _x1: &[f64]) {}
    fn jump(&mut self, _t: f64, _pre: &[f64], _post: &[f64], _accepted: bool) {}
}

/// Observer that ignores everything.
pub struct NoObserver;
impl PathObserver for NoObserver {}

enum JumpDrift {
    Constant(Vec<f64>),
    Table { field: PeriodicField, period: f64 },
}

/// A generator prepared for simulation: envelope, proposal rate, tabulated jump
/// drift and substep size. Build once, simulate many paths.
pub struct Simulator<'g> {
    gen: &'g dyn JumpGenerator,
    opts: SimOptions,
    dom: DominatingProfile,
    rate: f64,
    inner_mass: f64,
    jump_drift: JumpDrift,
    small_cov: SmallCov,
    state_dependent_motion: bool,
    substep: f64,
}

/// Covariance of the Gaussian that replaces jumps below δ.
enum SmallCov {
    None,
    /// Lower Cholesky factor, row-major `d×d`.
    Constant(Vec<f64>),
    /// Upper-triangle covariance entries tabulated on the phase grid.
    Table { entries: Vec<PeriodicField>, period: f64 },
}

/// `Σ(x) = ∫_{|z|<δ} z zᵀ k(x,z) J(z) dz`, row-major `d×d`.
pub fn small_jump_covariance(gen: &dyn JumpGenerator, x: &[f64], delta: f64, quad: &RadialQuadrature) -> Result<Vec<f64>> {
    let d = gen.dim();
    let levy = gen.levy();
    let alpha = levy.alpha();
    let k = gen.ray_kernel(x);
    let nodes = levy.angular_nodes(quad.angular_nodes)?;
    // r = δ s^{1/(2−α)} turns ∫_0^δ r^{1−α} g(r) dr into δ^{2−α}/(2−α) ∫_0^1 g ds
    let (gx, gw) = crate::quadrature::gauss_legendre(32);
    let scale = delta.powf(2.0 - alpha) / (2.0 - alpha);
    let mut out = vec![0.0; d * d];
    let mut z = vec![0.0; d];
    for node in &nodes {
        if node.weight == 0.0 {
            continue;
        }
        let mut radial = 0.0;
        for (t, w) in gx.iter().zip(&gw) {
            let s = 0.5 * (t + 1.0);
            let r = delta * s.powf(1.0 / (2.0 - alpha));
            for (zi, di) in z.iter_mut().zip(&node.dir) {
                *zi = r * di;
            }
            radial += 0.5 * w * k.value(&z);
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += node.weight * scale * radial * node.dir[i] * node.dir[j];
            }
        }
    }
    Ok(out)
}

fn cholesky(d: usize, cov: &[f64], out: &mut [f64]) {
    match d {
        1 => out[0] = cov[0].max(0.0).sqrt(),
        2 => {
            let l00 = cov[0].max(0.0).sqrt();
            let l10 = if l00 > 0.0 { cov[2] / l00 } else { 0.0 };
            out[0] = l00;
            out[1] = 0.0;
            out[2] = l10;
            out[3] = (cov[3] - l10 * l10).max(0.0).sqrt();
        }
        _ => {
            let m = nalgebra::DMatrix::from_row_slice(d, d, cov);
            let l = nalgebra::linalg::Cholesky::new(m).map(|c| c.l()).unwrap_or_else(|| nalgebra::DMatrix::zeros(d, d));
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = l[(i, j)];
                }
            }
        }
    }
}

/// Drift induced by the cutoff `δ` and the compensation convention.
pub fn cutoff_drift(gen: &dyn JumpGenerator, x: &[f64], delta: f64, quad: &RadialQuadrature) -> Result<Vec<f64>> {
    let levy = gen.levy();
    let k = gen.ray_kernel(x);
    let neg = |v: Vec<f64>| v.into_iter().map(|c| -c).collect::<Vec<_>>();
    match gen.compensation() {
        Compensation::None => radial_moment(levy, k.as_ref(), 0.0, delta, quad),
        Compensation::All => Ok(neg(radial_moment(levy, k.as_ref(), delta, f64::INFINITY, quad)?)),
        Compensation::Ball(r) => {
            if r > delta {
                Ok(neg(radial_moment(levy, k.as_ref(), delta, r, quad)?))
            } else if r < delta {
                radial_moment(levy, k.as_ref(), r, delta, quad)
            } else {
                Ok(vec![0.0; gen.dim()])
            }
        }
    }
}

fn inverse_power(lo: f64, hi: f64, a: f64, u: f64) -> f64 {
    let l = lo.powf(-a);
    let h = if hi.is_finite() { hi.powf(-a) } else { 0.0 };
    (l - u * (l - h)).powf(-1.0 / a)
}

impl<'g> Simulator<'g> {
    pub fn new(gen: &'g dyn JumpGenerator, opts: &SimOptions) -> Result<Self> {
        let delta = opts.delta;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        let d = gen.dim();
        let levy = gen.levy();
        let alpha = levy.alpha();
        let dom = gen.dominating();
        let omega = levy.sphere_mass();
        let (inner, outer) = if dom.gamma > 0.0 && dom.r_b > delta {
            let a = alpha + dom.gamma;
            let inner = dom.k * dom.r_b.powf(dom.gamma) * (delta.powf(-a) - dom.r_b.powf(-a)) / a;
            (inner, dom.k * dom.r_b.powf(-alpha) / alpha)
        } else {
            (0.0, dom.k * delta.powf(-alpha) / alpha)
        };
        let rate = omega * (inner + outer);
        let inner_mass = if inner + outer > 0.0 { inner / (inner + outer) } else { 0.0 };
        let period = gen.period();
        let n = opts.drift_table_n.max(2);
        let jump_drift = if gen.kernel_is_state_dependent() {
            let cells = n.pow(d as u32);
            let mut comps = vec![vec![0.0; cells]; d];
            let mut y = vec![0.0; d];
            for idx in 0..cells {
                grid_node(idx, n, d, &mut y);
                let x: Vec<f64> = y.iter().map(|v| v * period).collect();
                let m = cutoff_drift(gen, &x, delta, &opts.quad)?;
                for (c, v) in comps.iter_mut().zip(m) {
                    c[idx] = v;
                }
            }
            JumpDrift::Table { field: PeriodicField::from_grid(d, n, Arity::Vector, comps)?, period }
        } else {
            JumpDrift::Constant(cutoff_drift(gen, &vec![0.0; d], delta, &opts.quad)?)
        };
        let small_cov = if !opts.gaussian_small_jumps {
            SmallCov::None
        } else if gen.kernel_is_state_dependent() {
            let cells = n.pow(d as u32);
            let mut entries = vec![vec![0.0; cells]; d * (d + 1) / 2];
            let mut y = vec![0.0; d];
            for idx in 0..cells {
                grid_node(idx, n, d, &mut y);
                let x: Vec<f64> = y.iter().map(|v| v * period).collect();
                let c = small_jump_covariance(gen, &x, delta, &opts.quad)?;
                let mut e = 0;
                for i in 0..d {
                    for j in i..d {
                        entries[e][idx] = c[i * d + j];
                        e += 1;
                    }
                }
            }
            let entries = entries.into_iter().map(|c| PeriodicField::from_grid(d, n, Arity::Scalar, vec![c])).collect::<Result<Vec<_>>>()?;
            SmallCov::Table { entries, period }
        } else {
            let c = small_jump_covariance(gen, &vec![0.0; d], delta, &opts.quad)?;
            let mut l = vec![0.0; d * d];
            cholesky(d, &c, &mut l);
            if l.iter().all(|v| *v == 0.0) {
                SmallCov::None
            } else {
                SmallCov::Constant(l)
            }
        };
        let state_dependent_motion = gen.drift_is_state_dependent() || gen.kernel_is_state_dependent();
        let mut sim = Self { gen, opts: opts.clone(), dom, rate, inner_mass, jump_drift, small_cov, state_dependent_motion, substep: f64::INFINITY };
        if state_dependent_motion {
            let m: usize = if d == 1 { 256 } else { 32 };
            let cells = m.pow(d as u32);
            let mut y = vec![0.0; d];
            let mut v = vec![0.0; d];
            let mut vmax: f64 = 0.0;
            for idx in 0..cells {
                grid_node(idx, m, d, &mut y);
                let x: Vec<f64> = y.iter().map(|c| c * period).collect();
                sim.velocity(&x, &mut v);
                vmax = vmax.max(crate::levy::norm(&v));
            }
            let h1 = 0.1 * period.powf(alpha);
            let h2 = if vmax > 0.0 { opts.substep_factor * period / (1.1 * vmax) } else { f64::INFINITY };
            sim.substep = h1.min(h2);
        }
        Ok(sim)
    }

    /// Expected number of proposals per unit time.
    pub fn proposal_rate(&self) -> f64 {
        self.rate
    }

    pub fn options(&self) -> &SimOptions {
        &self.opts
    }

    pub fn generator(&self) -> &dyn JumpGenerator {
        self.gen
    }

    /// Jump drift at state `x`.
    pub fn jump_drift(&self, x: &[f64], out: &mut [f64]) {
        match &self.jump_drift {
            JumpDrift::Constant(v) => out.copy_from_slice(v),
            JumpDrift::Table { field, period } => {
                let mut y = [0.0; 8];
                let y = &mut y[..x.len()];
                for (o, v) in y.iter_mut().zip(x) {
                    *o = v / period;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    *o = field.eval_component(i, y);
                }
            }
        }
    }

    /// Total velocity of the deterministic motion between jumps.
    pub fn velocity(&self, x: &[f64], out: &mut [f64]) {
        let mut jd = [0.0; 8];
        let jd = &mut jd[..x.len()];
        self.gen.drift(x, out);
        self.jump_drift(x, jd);
        for (o, j) in out.iter_mut().zip(jd.iter()) {
            *o += j;
        }
    }

    pub fn substep(&self) -> f64 {
        self.substep
    }

    fn propose_radius(&self, rng: &mut ChaCha8Rng) -> f64 {
        let alpha = self.gen.levy().alpha();
        let delta = self.opts.delta;
        let u: f64 = rng.random();
        if self.inner_mass > 0.0 {
            if u < self.inner_mass {
                inverse_power(delta, self.dom.r_b, alpha + self.dom.gamma, u / self.inner_mass)
            } else {
                inverse_power(self.dom.r_b, f64::INFINITY, alpha, (u - self.inner_mass) / (1.0 - self.inner_mass))
            }
        } else {
            inverse_power(delta, f64::INFINITY, alpha, u)
        }
    }

    /// Covariance `Σ(x)` of the Gaussian replacing the small jumps (row-major, zero if disabled).
    pub fn small_jump_cov(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        match &self.small_cov {
            SmallCov::None => out.iter_mut().for_each(|v| *v = 0.0),
            SmallCov::Constant(l) => {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = (0..d).map(|k| l[i * d + k] * l[j * d + k]).sum();
                    }
                }
            }
            SmallCov::Table { entries, period } => {
                let mut y = [0.0; 8];
                let y = &mut y[..d];
                for (o, v) in y.iter_mut().zip(x) {
                    *o = v / period;
                }
                let mut e = 0;
                for i in 0..d {
                    for j in i..d {
                        let v = entries[e].eval_component(0, y);
                        out[i * d + j] = v;
                        out[j * d + i] = v;
                        e += 1;
                    }
                }
            }
        }
    }

    /// Add `L(x)·N(0, h I)` to `x`.
    fn diffuse(&self, x: &mut [f64], h: f64, rng: &mut ChaCha8Rng) {
        let d = x.len();
        let mut l = [0.0; 64];
        let lref: &[f64] = match &self.small_cov {
            SmallCov::None => return,
            SmallCov::Constant(l) => l,
            SmallCov::Table { .. } => {
                let mut c = [0.0; 64];
                self.small_jump_cov(x, &mut c[..d * d]);
                cholesky(d, &c[..d * d], &mut l[..d * d]);
                &l[..d * d]
            }
        };
        let sh = h.sqrt();
        let mut g = [0.0; 8];
        for gi in g[..d].iter_mut() {
            *gi = rng.sample::<f64, _>(StandardNormal) * sh;
        }
        for i in 0..d {
            x[i] += (0..=i).map(|k| lref[i * d + k] * g[k]).sum::<f64>();
        }
    }

    /// Move from `t0` to `t1` (drift plus the optional small-jump Gaussian), reporting segments.
    fn advance(&self, x: &mut [f64], t0: f64, t1: f64, rng: &mut ChaCha8Rng, obs: &mut dyn PathObserver) {
        let d = x.len();
        if t1 <= t0 {
            return;
        }
        let mut v = [0.0; 8];
        let mut v2 = [0.0; 8];
        let mut mid = [0.0; 8];
        let mut prev = [0.0; 8];
        if !self.state_dependent_motion {
            self.velocity(x, &mut v[..d]);
            prev[..d].copy_from_slice(x);
            for i in 0..d {
                x[i] += v[i] * (t1 - t0);
            }
            self.diffuse(x, t1 - t0, rng);
            obs.segment(t0, t1, &prev[..d], x);
            return;
        }
        let mut t = t0;
        while t < t1 {
            let h = self.substep.min(t1 - t);
            let h = if t1 - (t + h) < 1e-12 * self.substep { t1 - t } else { h };
            prev[..d].copy_from_slice(x);
            self.velocity(x, &mut v[..d]);
            for i in 0..d {
                mid[i] = x[i] + 0.5 * h * v[i];
            }
            self.velocity(&mid[..d], &mut v2[..d]);
            for i in 0..d {
                x[i] += h * v2[i];
            }
            self.diffuse(x, h, rng);
            obs.segment(t, t + h, &prev[..d], x);
            t += h;
        }
    }

    /// Simulate one path on `[0, horizon]` with dense output at `sample_times`.
    pub fn simulate(
        &self,
        start: &[f64],
        horizon: f64,
        sample_times: &[f64],
        rng: &mut ChaCha8Rng,
        obs: &mut dyn PathObserver,
    ) -> Result<PathRecord> {
        let d = self.gen.dim();
        crate::error::check_dim(d, start.len())?;
        if d > 8 {
            return Err(Error::Unsupported(format!("simulation in dimension {d}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(invalid("horizon", "must be positive and finite"));
        }
        if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.iter().any(|s| *s < 0.0 || *s > horizon) {
            return Err(invalid("sample_times", "must be sorted and lie in [0, horizon]"));
        }
        let expected = self.rate * horizon;
        if expected > self.opts.jump_cap {
            return Err(Error::BudgetExceeded { expected, cap: self.opts.jump_cap });
        }
        let torus = self.gen.on_torus();
        let mut x = start.to_vec();
        let mut t = 0.0;
        let mut events = Vec::new();
        let mut samples = Vec::with_capacity(sample_times.len());
        let mut next_sample = 0usize;
        let mut n_prop = 0u64;
        let mut n_acc = 0u64;
        let mut next_jump = if self.rate > 0.0 { -rng.random::<f64>().ln_1p_neg() / self.rate } else { f64::INFINITY };
        let mut z = vec![0.0; d];
        let mut dir = vec![0.0; d];
        loop {
            let ts = sample_times.get(next_sample).cloned().unwrap_or(f64::INFINITY);
            let stop = next_jump.min(ts).min(horizon);
            self.advance(&mut x, t, stop, rng, obs);
            t = stop;
            if ts <= next_jump && ts <= horizon && next_sample < sample_times.len() {
                samples.push(x.clone());
                next_sample += 1;
                continue;
            }
            if next_jump > horizon {
                break;
            }
            // proposal at t = next_jump
            n_prop += 1;
            let r = self.propose_radius(rng);
            self.gen.levy().sample_direction(rng, &mut dir);
            for (zi, di) in z.iter_mut().zip(&dir) {
                *zi = r * di;
            }
            let k = self.gen.kernel_value(&x, &z);
            let env = self.dom.value(r);
            if !(k >= 0.0) || k > env * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::KernelOutOfBand { value: k, lo: 0.0, hi: env });
            }
            let accepted = rng.random::<f64>() * env < k;
            let mut pre = [0.0; 8];
            pre[..d].copy_from_slice(&x);
            if accepted {
                n_acc += 1;
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += zi;
                }
            }
            obs.jump(t, &pre[..d], &x, accepted);
            if self.opts.record_events {
                events.push(PathEvent { time: t, pre: pre[..d].to_vec(), post: x.clone(), jump: z.clone(), accepted });
            }
            next_jump = t - rng.random::<f64>().ln_1p_neg() / self.rate;
        }
        let wrapped = |v: &Vec<f64>| if torus { v.iter().map(|c| wrap(*c)).collect() } else { v.clone() };
        Ok(PathRecord {
            tag: self.gen.tag(),
            start: start.to_vec(),
            horizon,
            events,
            sample_times: sample_times.to_vec(),
            samples: samples.iter().map(wrapped).collect(),
            unwrapped: samples,
            end: x,
            n_proposals: n_prop,
            n_accepted: n_acc,
        })
    }

    /// `n_paths` independent paths from a common start, streams keyed by `(seed_base, stage)`.
    pub fn simulate_batch(
        &self,
        start: &[f64],
        horizon: f64,
        sample_times: &[f64],
        n_paths: usize,
        seed_base: u64,
        stage: &str,
    ) -> Result<Vec<PathRecord>> {
        par_streams(n_paths, seed_base, stage, |_, rng| self.simulate(start, horizon, sample_times, rng, &mut NoObserver))
    }
}

trait Ln1pNeg {
    fn ln_1p_neg(self) -> f64;
}

impl Ln1pNeg for f64 {
    /// `ln(1 − u)` for `u ∈ [0, 1)`, never `−∞`.
    #[inline]
    fn ln_1p_neg(self) -> f64 {
        (-self).ln_1p()
    }
}

/// One path of `X^ε` started at `start`.
pub fn simulate_eps_path(model: &ModelSpec, eps: f64, horizon: f64, start: &[f64], opts: &SimOptions, rng: &mut ChaCha8Rng) -> Result<PathRecord> {
    let view = GeneratorView::new(model, ViewKind::Eps(eps))?;
    Simulator::new(&view, opts)?.simulate(start, horizon, &[horizon], rng, &mut NoObserver)
}

/// One path of the cell process `X̃` started at `start`.
pub fn simulate_cell_path(model: &ModelSpec, horizon: f64, start: &[f64], opts: &SimOptions, rng: &mut ChaCha8Rng) -> Result<PathRecord> {
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    Simulator::new(&view, opts)?.simulate(start, horizon, &[horizon], rng, &mut NoObserver)
}

/// Two-sample comparison of `X̃^ε_t` and `(1/ε) X^ε_{ε^α t}` (unwrapped, started at 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingReport {
    pub eps: f64,
    pub times: Vec<f64>,
    pub ks: Vec<KsResult>,
    pub level: f64,
    pub pass: bool,
}

pub fn check_rescaling_law(model: &ModelSpec, eps: f64, times: &[f64], n_paths: usize, opts: &SimOptions, seed_base: u64) -> Result<RescalingReport> {
    let d = model.dim();
    let alpha = model.alpha();
    let start = vec![0.0; d];
    let cell = GeneratorView::new(model, ViewKind::CellEps(eps))?;
    let direct = Simulator::new(&cell, opts)?.simulate_batch(&start, times[times.len() - 1], times, n_paths, seed_base, "rescaling/cell_eps")?;
    let eps_view = GeneratorView::new(model, ViewKind::Eps(eps))?;
    let scaled_opts = SimOptions { delta: opts.delta * eps, ..opts.clone() };
    let scaled_times: Vec<f64> = times.iter().map(|t| eps.powf(alpha) * t).collect();
    let rescaled = Simulator::new(&eps_view, &scaled_opts)?.simulate_batch(
        &start,
        scaled_times[scaled_times.len() - 1],
        &scaled_times,
        n_paths,
        seed_base,
        "rescaling/eps",
    )?;
    let level = 0.01;
    let mut ks = Vec::new();
    for k in 0..times.len() {
        for c in 0..d {
            let a: Vec<f64> = direct.iter().map(|p| p.unwrapped[k][c]).collect();
            let b: Vec<f64> = rescaled.iter().map(|p| p.unwrapped[k][c] / eps).collect();
            ks.push(ks_two_sample(&a, &b)?);
        }
    }
    let pass = ks.iter().all(|r| r.passes(level));
    Ok(RescalingReport { eps, times: times.to_vec(), ks, level, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpKernelSpec;
    use crate::levy::LevyDensity;
    use crate::rng::stream_rng;

    fn stable_model() -> ModelSpec {
        ModelSpec::driftless(LevyDensity::symmetric_1d(1.5, 1.0).unwrap(), JumpKernelSpec::constant(1, 1.0)).unwrap()
    }

    #[test]
    fn same_seed_same_path() {
        let m = stable_model();
        let o = SimOptions { delta: 0.02, record_events: true, ..Default::default() };
        let a = simulate_eps_path(&m, 0.5, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0)).unwrap();
        let b = simulate_eps_path(&m, 0.5, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(a.events.iter().all(|e| e.accepted && e.post[0] == e.pre[0] + e.jump[0]));
    }

    #[test]
    fn constant_kernel_path_is_eps_free() {
        let m = stable_model();
        let o = SimOptions { delta: 0.02, ..Default::default() };
        let a = simulate_eps_path(&m, 0.5, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0)).unwrap();
        let b = simulate_eps_path(&m, 0.125, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0)).unwrap();
        assert_eq!(a.end, b.end);
    }

    #[test]
    fn budget_overflow_is_reported() {
        let m = stable_model();
        let o = SimOptions { delta: 0.001, jump_cap: 100.0, ..Default::default() };
        let r = simulate_eps_path(&m, 0.5, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0));
        assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
        let o = SimOptions { delta: 1.5, ..Default::default() };
        assert!(simulate_eps_path(&m, 0.5, 1.0, &[0.0], &o, &mut stream_rng(3, "t", 0)).is_err());
    }

    #[test]
    fn cell_path_is_wrapped_with_unwrapped_companion() {
        let m = stable_model();
        let o = SimOptions { delta: 0.02, ..Default::default() };
        let p = simulate_cell_path(&m, 2.0, &[0.3], &o, &mut stream_rng(1, "c", 0)).unwrap();
        assert!((0.0..1.0).contains(&p.samples[0][0]));
        assert!((p.samples[0][0] - wrap(p.unwrapped[0][0])).abs() < 1e-15);
    }

    #[test]
    fn csv_dump_has_expected_columns() {
        let m = stable_model();
        let o = SimOptions { delta: 0.1, record_events: true, ..Default::default() };
        let p = simulate_eps_path(&m, 0.5, 0.5, &[0.0], &o, &mut stream_rng(2, "t", 0)).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x_1,jump\n"));
        assert_eq!(s.lines().count(), 1 + 1 + p.n_accepted as usize + 1);
    }
}
