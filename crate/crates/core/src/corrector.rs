//! The cell-problem corrector `Ã b̂ + b = 0`, the nonlocal generator applied by
//! quadrature, and resolvents `(λ − Ã)^{-1}`.
//!
//! The corrector is computed by Fourier collocation: the jump part of `Ã` acts on
//! `e^{2πik·x}` through the mode integrals
//! `I_k(x) = ∫ (e^{2πik·z} − 1 − 2πik·z 1_comp(z)) κ(x,z,z) J(z) dz`, so a truncated
//! real Fourier series is fitted to the equation at collocation nodes by least
//! squares. A Monte Carlo semigroup integral and a Monte Carlo resolvent are
//! provided as independent routes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::levy::{generator_integral, levy_integral, Compensation};
use crate::model::{GeneratorView, JumpGenerator, ModelSpec, ViewKind};
use crate::quadrature::RadialQuadrature;
use crate::rng::par_streams;
use crate::sim::{PathObserver, SimOptions, Simulator};
use crate::stats::mean_se;
use crate::torus::{
    cell_center, check_centering, grid_node, half_space_modes, Arity, EmpiricalMeasure, FourierTerm, Measure,
    PeriodicField,
};

/// `Ãf(x)` for a scalar component of `f`, with the cell view's kernel, compensation and drift.
pub fn apply_generator(model: &ModelSpec, f: &PeriodicField, component: usize, x: &[f64], quad: &RadialQuadrature) -> Result<f64> {
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    apply_view_generator(&view, f, component, x, quad)
}

/// Generator of any view applied to `f` at `x` (jump integral plus drift term).
pub fn apply_view_generator(view: &GeneratorView<'_>, f: &PeriodicField, component: usize, x: &[f64], quad: &RadialQuadrature) -> Result<f64> {
    let d = view.dim();
    check_dim(d, x.len())?;
    let kernel = view.bound_kernel(x);
    let mut jump = generator_integral(view.levy(), &kernel, view.compensation(), f, component, x, quad)?;
    let mut b = vec![0.0; d];
    view.drift(x, &mut b);
    if b.iter().any(|v| *v != 0.0) {
        let g = f.gradient_component(component, x);
        jump += b.iter().zip(&g).map(|(u, v)| u * v).sum::<f64>();
    }
    Ok(jump)
}

/// `apply_generator` with a refinement check: the value is recomputed with twice the
/// radial and angular resolution and an error is returned if the two differ by more
/// than `tol` (absolute, relative to `1 + |value|`).
pub fn apply_generator_checked(
    model: &ModelSpec,
    f: &PeriodicField,
    component: usize,
    x: &[f64],
    quad: &RadialQuadrature,
    tol: f64,
) -> Result<f64> {
    let coarse = apply_generator(model, f, component, x, quad)?;
    let fine_quad = RadialQuadrature {
        per_decade: quad.per_decade * 2,
        panels_per_period: quad.panels_per_period * 2,
        oscillation_cap: quad.oscillation_cap * 2,
        angular_nodes: quad.angular_nodes * 2,
        ..quad.clone()
    };
    let fine = apply_generator(model, f, component, x, &fine_quad)?;
    if (fine - coarse).abs() > tol * (1.0 + fine.abs()) {
        return Err(Error::QuadratureNonconvergence(format!("generator at {x:?}: {coarse} vs refined {fine}")));
    }
    Ok(fine)
}

/// Which part of the jump generator the mode integrals represent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModeIntegrals {
    /// Full compensated jump part of the view.
    Full,
    /// `∫_{|z|≥δ} (e^{2πik·z} − 1) k J dz` only (compensation then lives in the drift).
    Truncated { delta: f64 },
}

/// `I_k(x)` for the mode `k` at the state `x` of a view.
pub fn mode_integral(view: &GeneratorView<'_>, k: &[i64], x: &[f64], which: ModeIntegrals, quad: &RadialQuadrature) -> Result<Complex64> {
    let xi: Vec<f64> = k.iter().map(|v| 2.0 * PI * *v as f64).collect();
    let kernel = view.bound_kernel(x);
    match which {
        ModeIntegrals::Full => levy_integral(view.levy(), &kernel, view.compensation(), &xi, None, quad),
        ModeIntegrals::Truncated { delta } => levy_integral(view.levy(), &kernel, Compensation::Ball(delta), &xi, Some(delta), quad),
    }
}

/// Controls of the spectral corrector / resolvent solves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrectorOptions {
    /// Largest `|k|_∞` of the Fourier basis.
    pub max_mode: usize,
    /// Collocation nodes per axis (`0` selects `4·max_mode`).
    pub collocation_n: usize,
    /// Resolution of the stored grid samples and gradient table.
    pub grid_n: usize,
    /// Tolerance on `‖Ãb̂ + b‖_∞` over the probe nodes.
    pub residual_tol: f64,
    /// Centering tolerance relative to `sup|b|`.
    pub centering_tol: f64,
    /// Probe nodes per axis for the residual.
    pub probe_nodes: usize,
    pub quad: RadialQuadrature,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        Self { max_mode: 16, collocation_n: 0, grid_n: 64, residual_tol: 0.02, centering_tol: 0.05, probe_nodes: 16, quad: RadialQuadrature::default() }
    }
}

impl CorrectorOptions {
    /// Defaults adapted to the dimension (`M = 16, n = 64` in d = 1; `M = 4, n = 32` in d = 2).
    pub fn for_dim(d: usize) -> Self {
        if d == 1 {
            Self::default()
        } else {
            Self { max_mode: 4, grid_n: 32, probe_nodes: 4, quad: RadialQuadrature { angular_nodes: 32, ..Default::default() }, ..Self::default() }
        }
    }

    fn nodes_per_axis(&self) -> usize {
        if self.collocation_n > 0 {
            self.collocation_n
        } else {
            4 * self.max_mode.max(1)
        }
    }
}

/// Collocation operator of `λ − Ã` on the real Fourier basis
/// `[1?] ∪ {cos 2πk·x, sin 2πk·x : k ∈ half-space, |k|_∞ ≤ M}`.
struct Collocation {
    modes: Vec<Vec<i64>>,
    nodes: Vec<Vec<f64>>,
    matrix: DMatrix<f64>,
    constant: bool,
}

fn build_collocation(view: &GeneratorView<'_>, lambda: f64, opts: &CorrectorOptions) -> Result<Collocation> {
    let d = view.dim();
    let modes = half_space_modes(d, opts.max_mode);
    let n = opts.nodes_per_axis();
    let cells = n.pow(d as u32);
    let mut nodes = Vec::with_capacity(cells);
    let mut x = vec![0.0; d];
    for idx in 0..cells {
        cell_center(idx, n, d, &mut x);
        nodes.push(x.clone());
    }
    let constant = lambda != 0.0;
    let cols = 2 * modes.len() + usize::from(constant);
    let mut matrix = DMatrix::zeros(cells, cols);
    let state_dependent = view.kernel_is_state_dependent();
    let shared: Option<Vec<Complex64>> = if state_dependent {
        None
    } else {
        Some(modes.iter().map(|k| mode_integral(view, k, &nodes[0], ModeIntegrals::Full, &opts.quad)).collect::<Result<_>>()?)
    };
    let mut b = vec![0.0; d];
    for (j, xj) in nodes.iter().enumerate() {
        let ints: Vec<Complex64> = match &shared {
            Some(v) => v.clone(),
            None => modes.iter().map(|k| mode_integral(view, k, xj, ModeIntegrals::Full, &opts.quad)).collect::<Result<_>>()?,
        };
        view.drift(xj, &mut b);
        for (m, k) in modes.iter().enumerate() {
            let th = 2.0 * PI * k.iter().zip(xj).map(|(a, c)| *a as f64 * c).sum::<f64>();
            let kb = 2.0 * PI * k.iter().zip(&b).map(|(a, c)| *a as f64 * c).sum::<f64>();
            let (c, s) = (th.cos(), th.sin());
            let i = ints[m];
            let lc = c * i.re - s * i.im - kb * s;
            let ls = s * i.re + c * i.im + kb * c;
            matrix[(j, 2 * m)] = lambda * c - lc;
            matrix[(j, 2 * m + 1)] = lambda * s - ls;
        }
        if constant {
            matrix[(j, cols - 1)] = lambda;
        }
    }
    Ok(Collocation { modes, nodes, matrix, constant })
}

impl Collocation {
    /// Least-squares solution of `(λ − Ã)u = rhs` at the nodes, one field per rhs column.
    fn solve(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<FourierTerm>>> {
        let svd = self.matrix.clone().svd(true, true);
        let mut out = Vec::new();
        for r in rhs {
            let v = DVector::from_column_slice(r);
            let sol = svd.solve(&v, 1e-12).map_err(|e| Error::LinearAlgebra(e.to_string()))?;
            let mut terms: Vec<FourierTerm> = self
                .modes
                .iter()
                .enumerate()
                .map(|(m, k)| FourierTerm::new(k.clone(), sol[2 * m], sol[2 * m + 1]))
                .collect();
            if self.constant {
                terms.push(FourierTerm::new(vec![0; self.modes.first().map_or(1, |k| k.len())], sol[sol.len() - 1], 0.0));
            }
            out.push(terms);
        }
        Ok(out)
    }
}

/// The corrector `b̂` with grid samples, gradient table and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corrector {
    /// Fourier representation (μ-centred).
    pub field: PeriodicField,
    /// Samples at the grid nodes `j/n`.
    pub grid: PeriodicField,
    /// `∂_j b̂_i` at every grid node, row-major `d×d`.
    pub gradient: Vec<Vec<f64>>,
    /// `max |Ãb̂ + b|` over probe nodes and components.
    pub residual: f64,
    pub residual_tol: f64,
    pub probe_nodes: Vec<Vec<f64>>,
    /// `max_i |∫ b̂_i dμ|`.
    pub centering_residual: f64,
    pub pass: bool,
}

impl Corrector {
    /// CSV `x_1..x_d, bhat_1..bhat_d, grad_i_j...` over the grid nodes.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let d = self.field.dim();
        let Some(n) = grid_resolution(&self.grid) else { return Err(invalid("grid", "corrector grid must be grid-backed")) };
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        header.extend((1..=d).map(|i| format!("bhat_{i}")));
        for i in 1..=d {
            for j in 1..=d {
                header.push(format!("grad_{i}_{j}"));
            }
        }
        wr.write_record(&header)?;
        let mut x = vec![0.0; d];
        for (idx, g) in self.gradient.iter().enumerate() {
            grid_node(idx, n, d, &mut x);
            let mut rec: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            rec.extend((0..d).map(|c| format!("{:.17e}", self.grid.eval_component(c, &x))));
            rec.extend(g.iter().map(|v| format!("{v:.17e}")));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Zero corrector (used when `b ≡ 0`).
    pub fn zero(d: usize, grid_n: usize) -> Self {
        let cells = grid_n.pow(d as u32);
        Self {
            field: PeriodicField::zero_vector(d),
            grid: PeriodicField::from_grid(d, grid_n, Arity::Vector, vec![vec![0.0; cells]; d]).expect("valid grid"),
            gradient: vec![vec![0.0; d * d]; cells],
            residual: 0.0,
            residual_tol: 0.0,
            probe_nodes: vec![],
            centering_residual: 0.0,
            pass: true,
        }
    }
}

fn grid_resolution(f: &PeriodicField) -> Option<usize> {
    match f.backing() {
        crate::torus::Backing::Grid { n, .. } => Some(*n),
        _ => None,
    }
}

/// Probe nodes `(j + 0.37)/m` per axis, away from the collocation nodes.
pub fn probe_nodes(d: usize, m: usize) -> Vec<Vec<f64>> {
    let cells = m.pow(d as u32);
    let mut out = Vec::with_capacity(cells);
    let mut x = vec![0.0; d];
    for idx in 0..cells {
        grid_node(idx, m, d, &mut x);
        out.push(x.iter().map(|v| v + 0.37 / m as f64).collect());
    }
    out
}

/// Solve `Ã b̂ + b = 0` with `∫ b̂ dμ = 0`.
///
/// Errors with `CenteringViolated` when `|∫ b dμ| > centering_tol·sup|b|`. The residual
/// `‖Ãb̂ + b‖_∞` at the probe nodes is evaluated by real-space quadrature and recorded;
/// `pass` is false when it exceeds `residual_tol`.
pub fn solve_corrector(model: &ModelSpec, mu: &EmpiricalMeasure, opts: &CorrectorOptions) -> Result<Corrector> {
    let d = model.dim();
    if !model.drift_active() {
        return Err(invalid("alpha", "the corrector equation requires α ∈ (1, 2)"));
    }
    check_dim(d, mu.dim())?;
    let measure = if mu.is_normalized() { Measure::Empirical(mu) } else { Measure::EmpiricalNormalizing(mu) };
    let bsup = model.b.sup_norm(if d == 1 { 256 } else { 32 });
    if model.b.is_zero() || bsup == 0.0 {
        return Ok(Corrector::zero(d, opts.grid_n));
    }
    let tol = opts.centering_tol * bsup;
    let report = check_centering(&model.b, &measure, tol)?;
    if !report.pass {
        return Err(Error::CenteringViolated { residual: report.max_residual(), tol });
    }
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    let col = build_collocation(&view, 0.0, opts)?;
    let rhs: Vec<Vec<f64>> = (0..d).map(|i| col.nodes.iter().map(|x| model.b.eval_component(i, x)).collect()).collect();
    let mut comps = col.solve(&rhs)?;
    let raw = PeriodicField::fourier_vector(d, comps.clone())?;
    let means = raw.integrate(&measure)?;
    for (terms, m) in comps.iter_mut().zip(&means) {
        terms.push(FourierTerm::new(vec![0; d], -m, 0.0));
    }
    let field = PeriodicField::fourier_vector(d, comps)?;
    finish_corrector(model, field, &measure, opts)
}

fn finish_corrector(model: &ModelSpec, field: PeriodicField, measure: &Measure<'_>, opts: &CorrectorOptions) -> Result<Corrector> {
    let d = model.dim();
    let centering_residual = field.integrate(measure)?.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let grid = field.sample_to_grid(opts.grid_n);
    let cells = opts.grid_n.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut gradient = Vec::with_capacity(cells);
    for idx in 0..cells {
        grid_node(idx, opts.grid_n, d, &mut x);
        let mut row = Vec::with_capacity(d * d);
        for i in 0..d {
            row.extend(field.gradient_component(i, &x));
        }
        gradient.push(row);
    }
    let probes = probe_nodes(d, opts.probe_nodes);
    let mut residual: f64 = 0.0;
    for p in &probes {
        for i in 0..d {
            let r = apply_generator(model, &field, i, p, &opts.quad)? + model.b.eval_component(i, p);
            residual = residual.max(r.abs());
        }
    }
    Ok(Corrector {
        field,
        grid,
        gradient,
        residual,
        residual_tol: opts.residual_tol,
        probe_nodes: probes,
        centering_residual,
        pass: residual <= opts.residual_tol,
    })
}

/// Spectral resolvent `u = (λ − Ã)^{-1} f` of a scalar field.
pub fn resolvent_spectral(model: &ModelSpec, f: &PeriodicField, lambda: f64, opts: &CorrectorOptions) -> Result<PeriodicField> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    let d = model.dim();
    check_dim(d, f.dim())?;
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    let col = build_collocation(&view, lambda, opts)?;
    let rhs = vec![col.nodes.iter().map(|x| f.eval_component(0, x)).collect::<Vec<_>>()];
    let terms = col.solve(&rhs)?.remove(0);
    PeriodicField::fourier_scalar(d, terms)
}

/// Poisson solution `−Ã u = f` (mean-zero `f`) by Richardson extrapolation of
/// spectral resolvents at `λ` and `λ/2`: `u ≈ 2u_{λ/2} − u_λ`, then uniform-mean removal.
pub fn poisson_via_resolvent(model: &ModelSpec, f: &PeriodicField, lambda: f64, opts: &CorrectorOptions) -> Result<PeriodicField> {
    let a = resolvent_spectral(model, f, lambda, opts)?;
    let b = resolvent_spectral(model, f, 0.5 * lambda, opts)?;
    let d = model.dim();
    let n = if d == 1 { 256 } else { 32 };
    let ga = a.sample_to_grid(n);
    let gb = b.sample_to_grid(n);
    let (crate::torus::Backing::Grid { components: ca, .. }, crate::torus::Backing::Grid { components: cb, .. }) = (ga.backing(), gb.backing()) else {
        unreachable!()
    };
    let mut v: Vec<f64> = ca[0].iter().zip(&cb[0]).map(|(x, y)| 2.0 * y - x).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    PeriodicField::fit_fourier(d, n, &v, (n / 2 - 1).min(4 * opts.max_mode))
}

/// `max_x |λu(x) − Ãu(x) − f(x)|` over `nodes`. Grid-backed `u` is first projected on
/// Fourier modes up to `max_freq`.
pub fn verify_poisson_identity(
    model: &ModelSpec,
    u: &PeriodicField,
    f: &PeriodicField,
    lambda: f64,
    nodes: &[Vec<f64>],
    max_freq: usize,
    quad: &RadialQuadrature,
) -> Result<f64> {
    let d = model.dim();
    let u = match u.backing() {
        crate::torus::Backing::Grid { n, components } => PeriodicField::fit_fourier(d, *n, &components[0], max_freq.min((n - 1) / 2))?,
        _ => u.clone(),
    };
    let mut worst: f64 = 0.0;
    for x in nodes {
        let r = lambda * u.eval_component(0, x) - apply_generator(model, &u, 0, x, quad)? - f.eval_component(0, x);
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Time integral `∫ e^{−λt} g(X_t) dt` of a (vector) periodic field along a path.
struct IntegralObserver<'a> {
    g: &'a PeriodicField,
    lambda: f64,
    acc: Vec<f64>,
    nodes: [f64; 3],
    weights: [f64; 3],
    y: Vec<f64>,
}

impl<'a> IntegralObserver<'a> {
    fn new(g: &'a PeriodicField, lambda: f64) -> Self {
        let s = (0.6f64).sqrt();
        Self {
            g,
            lambda,
            acc: vec![0.0; g.n_components()],
            nodes: [0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)],
            weights: [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            y: vec![0.0; g.dim()],
        }
    }
}

impl PathObserver for IntegralObserver<'_> {
    fn segment(&mut self, t0: f64, t1: f64, x0: &[f64], x1: &[f64]) {
        let dt = t1 - t0;
        if dt <= 0.0 {
            return;
        }
        if x0 == x1 {
            let w = if self.lambda == 0.0 { dt } else { ((-self.lambda * t0).exp() - (-self.lambda * t1).exp()) / self.lambda };
            for (c, a) in self.acc.iter_mut().enumerate() {
                *a += w * self.g.eval_component(c, x0);
            }
            return;
        }
        for (s, w) in self.nodes.iter().zip(&self.weights) {
            for (i, yi) in self.y.iter_mut().enumerate() {
                *yi = x0[i] + (x1[i] - x0[i]) * s;
            }
            let disc = if self.lambda == 0.0 { 1.0 } else { (-self.lambda * (t0 + s * dt)).exp() };
            for (c, a) in self.acc.iter_mut().enumerate() {
                *a += w * dt * disc * self.g.eval_component(c, &self.y);
            }
        }
    }
}

/// Monte Carlo estimate on the grid nodes with per-node standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEstimate {
    pub field: PeriodicField,
    pub se: Vec<Vec<f64>>,
    pub horizon: f64,
    pub n_paths: usize,
}

impl GridEstimate {
    /// Sup-norm Monte Carlo error: largest node SE times the Bonferroni two-sided 95%
    /// quantile over all nodes and components.
    pub fn sup_error(&self) -> f64 {
        let m: usize = self.se.iter().map(|v| v.len()).sum();
        let z = normal_quantile(1.0 - 0.025 / m.max(1) as f64);
        z * self.se.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

/// Standard normal quantile (Acklam's rational approximation, |rel err| < 1.2e-9).
pub fn normal_quantile(p: f64) -> f64 {
    let a = [-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2, 1.383577518672690e2, -3.066479806614716e1, 2.506628277459239];
    let b = [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    let c = [-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838, -2.549732539343734, 4.374664141464968, 2.938163982698783];
    let e = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let pl = 0.02425;
    if p < pl {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / ((((e[0] * q + e[1]) * q + e[2]) * q + e[3]) * q + 1.0)
    } else if p <= 1.0 - pl {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

fn grid_mc(
    model: &ModelSpec,
    g: &PeriodicField,
    lambda: f64,
    horizon: f64,
    grid_n: usize,
    n_paths: usize,
    opts: &SimOptions,
    seed_base: u64,
    stage: &str,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let d = model.dim();
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    let sim = Simulator::new(&view, opts)?;
    let cells = grid_n.pow(d as u32);
    let comps = g.n_components();
    let mut means = vec![vec![0.0; cells]; comps];
    let mut ses = vec![vec![0.0; cells]; comps];
    let mut x = vec![0.0; d];
    for idx in 0..cells {
        grid_node(idx, grid_n, d, &mut x);
        let start = x.clone();
        let vals = par_streams(n_paths, seed_base, &format!("{stage}/node={idx}"), |_, rng: &mut ChaCha8Rng| {
            let mut obs = IntegralObserver::new(g, lambda);
            sim.simulate(&start, horizon, &[], rng, &mut obs)?;
            Ok(obs.acc)
        })?;
        for c in 0..comps {
            let v: Vec<f64> = vals.iter().map(|a| a[c]).collect();
            let (m, s) = mean_se(&v)?;
            means[c][idx] = m;
            ses[c][idx] = s;
        }
    }
    Ok((means, ses))
}

/// Monte Carlo resolvent `u_λ(x) = ∫_0^H e^{−λt} E_x f(X̃_t) dt` on the grid nodes, with
/// `H = ln(10^6)/λ`.
pub fn resolvent(model: &ModelSpec, f: &PeriodicField, lambda: f64, grid_n: usize, n_paths: usize, opts: &SimOptions, seed_base: u64) -> Result<GridEstimate> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "must be positive"));
    }
    let d = model.dim();
    check_dim(d, f.dim())?;
    let horizon = (1e6f64).ln() / lambda;
    let (means, se) = grid_mc(model, f, lambda, horizon, grid_n, n_paths, opts, seed_base, "resolvent")?;
    let field = PeriodicField::from_grid(d, grid_n, f.arity(), means)?;
    Ok(GridEstimate { field, se, horizon, n_paths })
}

/// Horizon `T*` with `Ĉ e^{−ρ̂ T*} ≤ 0.1·tol`.
pub fn semigroup_horizon(rate: f64, prefactor: f64, tol: f64) -> f64 {
    ((10.0 * prefactor.max(1.0) / tol).ln() / rate).max(0.0)
}

/// Semigroup corrector `b̂(x) ≈ ∫_0^{T*} E_x b(X̃_t) dt` on the grid nodes, μ-centred.
#[allow(clippy::too_many_arguments)]
pub fn solve_corrector_semigroup(
    model: &ModelSpec,
    mu: &EmpiricalMeasure,
    grid_n: usize,
    horizon: f64,
    n_paths: usize,
    centering_tol: f64,
    opts: &SimOptions,
    seed_base: u64,
) -> Result<GridEstimate> {
    let d = model.dim();
    if !model.drift_active() {
        return Err(invalid("alpha", "the corrector equation requires α ∈ (1, 2)"));
    }
    let measure = if mu.is_normalized() { Measure::Empirical(mu) } else { Measure::EmpiricalNormalizing(mu) };
    let tol = centering_tol * model.b.sup_norm(if d == 1 { 256 } else { 32 });
    let report = check_centering(&model.b, &measure, tol)?;
    if !report.pass {
        return Err(Error::CenteringViolated { residual: report.max_residual(), tol });
    }
    let (mut means, se) = grid_mc(model, &model.b, 0.0, horizon, grid_n, n_paths, opts, seed_base, "corrector_semigroup")?;
    let raw = PeriodicField::from_grid(d, grid_n, Arity::Vector, means.clone())?;
    let m = raw.integrate(&measure)?;
    for (c, mc) in means.iter_mut().zip(&m) {
        c.iter_mut().for_each(|v| *v -= mc);
    }
    let field = PeriodicField::from_grid(d, grid_n, Arity::Vector, means)?;
    Ok(GridEstimate { field, se, horizon, n_paths })
}

/// Jump part `L^η φ` of the cell generator (kernel and compensation, no drift), as a field.
pub fn jump_part(model: &ModelSpec, phi: &PeriodicField, grid_n: usize, max_freq: usize, quad: &RadialQuadrature) -> Result<PeriodicField> {
    let d = model.dim();
    let view = GeneratorView::new(model, ViewKind::Cell)?;
    let cells = grid_n.pow(d as u32);
    let mut comps = Vec::new();
    let mut x = vec![0.0; d];
    for c in 0..phi.n_components() {
        let mut vals = Vec::with_capacity(cells);
        for idx in 0..cells {
            grid_node(idx, grid_n, d, &mut x);
            vals.push(generator_integral(view.levy(), &view.bound_kernel(&x), view.compensation(), phi, c, &x, quad)?);
        }
        comps.push(vals);
    }
    let fitted: Vec<PeriodicField> =
        comps.iter().map(|v| PeriodicField::fit_fourier(d, grid_n, v, max_freq)).collect::<Result<_>>()?;
    if fitted.len() == 1 {
        Ok(fitted.into_iter().next().unwrap())
    } else {
        PeriodicField::stack(&fitted)
    }
}

/// Drift `b = −L^η φ/(1 + φ')` for which `φ` solves `Ãφ + b = 0` exactly (d = 1).
pub fn manufactured_drift(model: &ModelSpec, phi: &PeriodicField, quad: &RadialQuadrature) -> Result<PeriodicField> {
    if model.dim() != 1 {
        return Err(Error::Unsupported("manufactured drift is defined in d = 1".into()));
    }
    let n = 256;
    let lphi = jump_part(model, phi, n, 100, quad)?;
    let mut vals = Vec::with_capacity(n);
    for j in 0..n {
        let x = [j as f64 / n as f64];
        let den = 1.0 + phi.gradient_component(0, &x)[0];
        if den <= 0.0 {
            return Err(invalid("phi", "requires 1 + φ' > 0"));
        }
        vals.push(-lphi.eval_component(0, &x) / den);
    }
    let fit = PeriodicField::fit_fourier(1, n, &vals, 64)?;
    PeriodicField::stack(&[fit])
}

/// Target of the manufactured corrector: `φ(x) = 0.1 sin(2πx)`.
pub fn manufactured_target() -> PeriodicField {
    PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![1], 0.0, 0.1)]).expect("valid")
}
