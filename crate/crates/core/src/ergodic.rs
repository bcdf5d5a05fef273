//! Invariant measure of the cell process, mixing rate, and ergodic averages.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{GeneratorView, ModelSpec, ViewKind};
use crate::rng::par_streams;
use crate::sim::{NoObserver, PathObserver, SimOptions, Simulator};
use crate::stats::mean_se;
use crate::torus::{EmpiricalMeasure, FourierTerm, PeriodicField};

/// Occupation-time histogram of the wrapped path over a time window.
pub struct OccupationObserver {
    pub hist: EmpiricalMeasure,
    pub window: (f64, f64),
    cell: Vec<f64>,
}

impl OccupationObserver {
    pub fn new(d: usize, n: usize, window: (f64, f64)) -> Result<Self> {
        Ok(Self { hist: EmpiricalMeasure::new(d, n)?, window, cell: vec![0.0; d] })
    }
}

impl PathObserver for OccupationObserver {
    fn segment(&mut self, t0: f64, t1: f64, x0: &[f64], x1: &[f64]) {
        let (a, b) = (t0.max(self.window.0), t1.min(self.window.1));
        if b <= a || t1 <= t0 {
            return;
        }
        let lerp = |t: f64, i: usize| x0[i] + (x1[i] - x0[i]) * (t - t0) / (t1 - t0);
        if x0.len() == 1 {
            // exact apportionment of the linear motion over the crossed cells
            let n = self.hist.resolution() as f64;
            let (p, q) = (lerp(a, 0) * n, lerp(b, 0) * n);
            let dt = b - a;
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            if hi - lo < 1e-14 {
                self.cell[0] = 0.5 * (lo + hi) / n;
                self.hist.add_at(&self.cell, dt);
                return;
            }
            let mut s = lo;
            while s < hi {
                let e = (s.floor() + 1.0).min(hi);
                self.cell[0] = 0.5 * (s + e) / n;
                self.hist.add_at(&self.cell, dt * (e - s) / (hi - lo));
                s = e;
            }
        } else {
            let tm = 0.5 * (a + b);
            for i in 0..x0.len() {
                self.cell[i] = lerp(tm, i);
            }
            self.hist.add_at(&self.cell, b - a);
        }
    }
}

/// Estimated invariant measure with per-cell uncertainties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantEstimate {
    pub measure: EmpiricalMeasure,
    /// Standard error of each cell weight from the spread across chains.
    pub chain_se: Vec<f64>,
    /// Binomial standard error `sqrt(w(1−w)/n_chains)` of each cell weight.
    pub binomial_se: Vec<f64>,
    pub n_chains: usize,
    pub t_burn: f64,
    pub t_run: f64,
}

impl InvariantEstimate {
    /// Largest ratio `|w_i − w_ref| / binomial_se_i` against the uniform law.
    pub fn max_uniform_deviation_ratio(&self) -> f64 {
        let p = 1.0 / self.measure.n_cells() as f64;
        let se = (p * (1.0 - p) / self.n_chains as f64).sqrt();
        if se == 0.0 {
            return 0.0;
        }
        self.measure.weights().iter().map(|w| (w - p).abs() / se).fold(0.0, f64::max)
    }

    /// CSV `cell, center_1..center_d, weight`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let d = self.measure.dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["cell".to_string()];
        header.extend((1..=d).map(|i| format!("center_{i}")));
        header.push("weight".into());
        wr.write_record(&header)?;
        for (idx, weight) in self.measure.weights().iter().enumerate() {
            let mut rec = vec![idx.to_string()];
            rec.extend(self.measure.center(idx).iter().map(|v| format!("{v:.17e}")));
            rec.push(format!("{weight:.17e}"));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Occupation-time estimate of the invariant law of the cell process (`Cell` view, or
/// `CellEps(ε)` for the rescaled process), pooled over independent chains started
/// uniformly at random.
#[allow(clippy::too_many_arguments)]
pub fn estimate_invariant_measure(
    model: &ModelSpec,
    kind: ViewKind,
    t_burn: f64,
    t_run: f64,
    grid_n: usize,
    n_chains: usize,
    opts: &SimOptions,
    seed_base: u64,
) -> Result<InvariantEstimate> {
    if !(t_burn >= 0.0) || !(t_run > 0.0) {
        return Err(invalid("t_run", "burn-in must be nonnegative and the run positive"));
    }
    if n_chains == 0 {
        return Err(Error::EmptySamples);
    }
    if matches!(kind, ViewKind::Eps(_)) {
        return Err(invalid("kind", "the invariant measure is defined for torus-valued views"));
    }
    let d = model.dim();
    let view = GeneratorView::new(model, kind)?;
    let sim = Simulator::new(&view, opts)?;
    let horizon = t_burn + t_run;
    let chains = par_streams(n_chains, seed_base, "invariant", |_, rng| {
        let start: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let mut obs = OccupationObserver::new(d, grid_n, (t_burn, horizon))?;
        sim.simulate(&start, horizon, &[], rng, &mut obs)?;
        obs.hist.normalized()
    })?;
    let mut pooled = EmpiricalMeasure::new(d, grid_n)?;
    for c in &chains {
        pooled.merge(c)?;
    }
    let measure = pooled.normalized()?;
    let cells = measure.n_cells();
    let n = n_chains as f64;
    let chain_se = (0..cells)
        .map(|i| {
            if n_chains < 2 {
                return 0.0;
            }
            let m = measure.weights()[i];
            let v = chains.iter().map(|c| (c.weights()[i] - m).powi(2)).sum::<f64>() / (n - 1.0);
            (v / n).sqrt()
        })
        .collect();
    let binomial_se = measure.weights().iter().map(|w| (w * (1.0 - w) / n).sqrt()).collect();
    Ok(InvariantEstimate { measure, chain_se, binomial_se, n_chains, t_burn, t_run })
}

/// Running time integral of `f(X/ε) − ref` along a path, with its running sup.
struct AverageObserver<'a> {
    f: &'a PeriodicField,
    inv_eps: f64,
    reference: f64,
    integral: f64,
    sup: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    y: Vec<f64>,
    freq: f64,
}

impl PathObserver for AverageObserver<'_> {
    fn segment(&mut self, t0: f64, t1: f64, x0: &[f64], x1: &[f64]) {
        let dt = t1 - t0;
        if dt <= 0.0 {
            return;
        }
        let len: f64 = x0.iter().zip(x1).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt() * self.inv_eps;
        let pieces = (len * self.freq * 4.0).ceil().max(1.0) as usize;
        let mut acc = 0.0;
        for p in 0..pieces {
            for (s, w) in self.nodes.iter().zip(&self.weights) {
                let u = (p as f64 + s) / pieces as f64;
                for (i, yi) in self.y.iter_mut().enumerate() {
                    *yi = (x0[i] + (x1[i] - x0[i]) * u) * self.inv_eps;
                }
                acc += w * self.f.eval_component(0, &self.y);
            }
        }
        let start = self.integral;
        self.integral += dt * acc / pieces as f64 - self.reference * dt;
        self.sup = self.sup.max(start.abs()).max(self.integral.abs());
    }
}

/// Ergodic-average estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicAverage {
    /// Mean over paths of `(1/T)∫_0^T f(X_s/ε) ds`.
    pub mean: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    pub reference: f64,
    /// Mean over paths of `sup_{t≤T} |∫_0^t f(X_s/ε) ds − t·reference|`.
    pub sup_deviation: f64,
    pub sup_deviation_se: f64,
    pub n_paths: usize,
}

/// Time averages of `f(X^ε/ε)` over `[0, T]` from `X^ε_0 = 0`.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_average(
    model: &ModelSpec,
    f: &PeriodicField,
    eps: f64,
    horizon: f64,
    n_paths: usize,
    reference: f64,
    opts: &SimOptions,
    seed_base: u64,
) -> Result<ErgodicAverage> {
    let d = model.dim();
    crate::error::check_dim(d, f.dim())?;
    if n_paths == 0 {
        return Err(Error::EmptySamples);
    }
    let view = GeneratorView::new(model, ViewKind::Eps(eps))?;
    let sim = Simulator::new(&view, opts)?;
    let (gl_nodes, gl_weights) = crate::quadrature::gauss_legendre(4);
    let nodes: Vec<f64> = gl_nodes.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = gl_weights.iter().map(|w| 0.5 * w).collect();
    let freq = (f.max_frequency().max(1) as f64) * (d as f64).sqrt();
    let start = vec![0.0; d];
    let per_path = par_streams(n_paths, seed_base, &format!("ergodic/eps={eps}"), |_, rng| {
        let mut obs = AverageObserver {
            f,
            inv_eps: 1.0 / eps,
            reference,
            integral: 0.0,
            sup: 0.0,
            nodes: nodes.clone(),
            weights: weights.clone(),
            y: vec![0.0; d],
            freq,
        };
        sim.simulate(&start, horizon, &[], rng, &mut obs)?;
        Ok(((obs.integral + reference * horizon) / horizon, obs.sup))
    })?;
    let avgs: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let sups: Vec<f64> = per_path.iter().map(|p| p.1).collect();
    let (mean, se) = mean_se(&avgs)?;
    let (sup_deviation, sup_deviation_se) = mean_se(&sups)?;
    Ok(ErgodicAverage {
        mean,
        se,
        ci95: (mean - 1.96 * se, mean + 1.96 * se),
        reference,
        sup_deviation,
        sup_deviation_se,
        n_paths,
    })
}

/// Exponential-decay fit of `D(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub rate: f64,
    pub prefactor: f64,
    pub t_grid: Vec<f64>,
    pub distances: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Indices of the grid points used in the fit.
    pub fitted: Vec<usize>,
    pub residuals: Vec<f64>,
    pub failed: bool,
}

impl MixingEstimate {
    /// Burn-in `5/ρ̂`.
    pub fn burn_in(&self) -> Option<f64> {
        if self.failed {
            None
        } else {
            Some(5.0 / self.rate)
        }
    }
}

/// Default probes `cos(2π x_j)`, `sin(2π x_j)`.
pub fn low_mode_probes(d: usize) -> Vec<PeriodicField> {
    let mut out = Vec::new();
    for j in 0..d {
        let mut k = vec![0i64; d];
        k[j] = 1;
        for (a, b) in [(1.0, 0.0), (0.0, 1.0)] {
            out.push(PeriodicField::fourier_scalar(d, vec![FourierTerm::new(k.clone(), a, b)]).expect("valid probe"));
        }
    }
    out
}

/// Decay of `D(t) = max_f |Ê_0 f(X̃_t) − Ê_{(½,…,½)} f(X̃_t)|` fitted by weighted
/// log-linear regression over the points where `D` exceeds four standard errors.
pub fn mixing_rate_estimate(
    model: &ModelSpec,
    t_grid: &[f64],
    n_paths: usize,
    probes: Option<&[PeriodicField]>,
    opts: &SimOptions,
    seed_base: u64,
) -> Result<MixingEstimate> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid[0] <= 0.0 {
        return Err(invalid("t_grid", "must be positive and strictly increasing"));
    }
    let d = model.dim();
    let default;
    let probes = match probes {
        Some(p) => p,
        None => {
            default = low_mode_probes(d);
            &default[..]
        }
    };
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    let sim = Simulator::new(&view, opts)?;
    let horizon = t_grid[t_grid.len() - 1];
    let mut stats = Vec::new();
    for (s, start) in [vec![0.0; d], vec![0.5; d]].iter().enumerate() {
        let paths = par_streams(n_paths, seed_base, &format!("mixing/start={s}"), |_, rng| {
            sim.simulate(start, horizon, t_grid, rng, &mut NoObserver).map(|p| p.samples)
        })?;
        let mut per = Vec::new();
        for f in probes {
            let mut row = Vec::new();
            for k in 0..t_grid.len() {
                let v: Vec<f64> = paths.iter().map(|p| f.eval_component(0, &p[k])).collect();
                row.push(mean_se(&v)?);
            }
            per.push(row);
        }
        stats.push(per);
    }
    let mut distances = Vec::new();
    let mut ses = Vec::new();
    for k in 0..t_grid.len() {
        let (mut best, mut best_se) = (0.0, 0.0);
        for p in 0..probes.len() {
            let (m0, s0) = stats[0][p][k];
            let (m1, s1) = stats[1][p][k];
            let dist = (m0 - m1).abs();
            if dist > best || p == 0 {
                best = dist;
                best_se = (s0 * s0 + s1 * s1).sqrt();
            }
        }
        distances.push(best);
        ses.push(best_se);
    }
    let fitted: Vec<usize> = (0..t_grid.len()).filter(|&k| distances[k] > 4.0 * ses[k] && distances[k] > 0.0).collect();
    let mut est = MixingEstimate {
        rate: 0.0,
        prefactor: 0.0,
        t_grid: t_grid.to_vec(),
        distances: distances.clone(),
        standard_errors: ses.clone(),
        fitted: fitted.clone(),
        residuals: vec![],
        failed: true,
    };
    if fitted.len() < 2 {
        return Ok(est);
    }
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &k in &fitted {
        let w = (distances[k] / ses[k].max(1e-300)).powi(2);
        let (t, y) = (t_grid[k], distances[k].ln());
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
    }
    let den = sw * stt - st * st;
    if den <= 0.0 {
        return Ok(est);
    }
    let slope = (sw * sty - st * sy) / den;
    let intercept = (sy - slope * st) / sw;
    est.residuals = fitted.iter().map(|&k| distances[k].ln() - (intercept + slope * t_grid[k])).collect();
    if slope < 0.0 {
        est.rate = -slope;
        est.prefactor = intercept.exp();
        est.failed = false;
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::JumpKernelSpec;
    use crate::levy::LevyDensity;

    fn stable_model() -> ModelSpec {
        ModelSpec::driftless(LevyDensity::symmetric_1d(1.5, 1.0).unwrap(), JumpKernelSpec::constant(1, 1.0)).unwrap()
    }

    #[test]
    fn occupation_apportions_linear_motion_exactly() {
        let mut o = OccupationObserver::new(1, 4, (0.0, 10.0)).unwrap();
        o.segment(0.0, 1.0, &[0.0], &[1.5]);
        let w = o.hist.weights();
        let third = 1.0 / 6.0;
        for (i, v) in w.iter().enumerate() {
            let expect = if i < 2 { 2.0 * third } else { third };
            assert!((v - expect).abs() < 1e-12, "{i}: {v}");
        }
    }

    #[test]
    fn single_cell_grid_has_unit_weight() {
        let m = stable_model();
        let o = SimOptions { delta: 0.05, ..Default::default() };
        let e = estimate_invariant_measure(&m, ViewKind::Cell, 0.1, 0.2, 1, 4, &o, 1).unwrap();
        assert_eq!(e.measure.weights(), &[1.0]);
    }

    #[test]
    fn constant_integrand_averages_exactly() {
        let m = stable_model();
        let o = SimOptions { delta: 0.05, ..Default::default() };
        let f = PeriodicField::constant(1, 0.7);
        let a = ergodic_average(&m, &f, 0.1, 1.0, 20, 0.7, &o, 3).unwrap();
        assert!((a.mean - 0.7).abs() < 1e-12);
        assert!(a.se < 1e-12);
    }

    #[test]
    fn constant_probe_gives_zero_distance_and_failure_flag() {
        let m = stable_model();
        let o = SimOptions { delta: 0.05, ..Default::default() };
        let probes = [PeriodicField::constant(1, 2.0)];
        let e = mixing_rate_estimate(&m, &[0.01, 0.02, 0.04], 50, Some(&probes), &o, 1).unwrap();
        assert!(e.distances.iter().all(|d| *d == 0.0));
        assert!(e.failed);
    }
}
