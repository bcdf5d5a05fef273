//! Periodic fields on the d-torus and grid-based empirical measures.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

const TAU: f64 = 2.0 * PI;

/// One term `cos_coeff·cos(2π k·x) + sin_coeff·sin(2π k·x)` of a real Fourier series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub frequency: Vec<i64>,
    #[serde(default)]
    pub cos_coeff: f64,
    #[serde(default)]
    pub sin_coeff: f64,
}

impl FourierTerm {
    pub fn new(frequency: Vec<i64>, cos_coeff: f64, sin_coeff: f64) -> Self {
        Self { frequency, cos_coeff, sin_coeff }
    }

    pub fn constant(d: usize, value: f64) -> Self {
        Self { frequency: vec![0; d], cos_coeff: value, sin_coeff: 0.0 }
    }

    #[inline]
    fn phase(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, xi) in self.frequency.iter().zip(x) {
            if *k != 0 {
                s += *k as f64 * (xi - xi.floor());
            }
        }
        TAU * (s - s.floor())
    }

    fn is_zero_frequency(&self) -> bool {
        self.frequency.iter().all(|k| *k == 0)
    }
}

/// Whether a field carries one value or a d-vector per point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Scalar,
    Vector,
}

/// Storage behind a [`PeriodicField`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backing", rename_all = "snake_case")]
pub enum Backing {
    /// Truncated Fourier series, one term list per component.
    Fourier { components: Vec<Vec<FourierTerm>> },
    /// Samples at the nodes `j/n` of a uniform grid, one array per component
    /// (axis 0 varies fastest).
    Grid { n: usize, components: Vec<Vec<f64>> },
}

/// A real scalar or vector field on `T^d = R^d / Z^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicField {
    d: usize,
    arity: Arity,
    backing: Backing,
}

/// Integration measure over the torus.
#[derive(Clone, Copy, Debug)]
pub enum Measure<'a> {
    /// Lebesgue measure, tensor-product midpoint rule with `n` points per axis.
    Uniform { n: usize },
    /// Empirical measure which must already be normalized.
    Empirical(&'a EmpiricalMeasure),
    /// Empirical measure normalized on the fly.
    EmpiricalNormalizing(&'a EmpiricalMeasure),
}

/// Outcome of a centering check `|∫ b dμ| ≤ tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenteringReport {
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl CenteringReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

impl PeriodicField {
    pub fn constant(d: usize, value: f64) -> Self {
        Self {
            d,
            arity: Arity::Scalar,
            backing: Backing::Fourier { components: vec![vec![FourierTerm::constant(d, value)]] },
        }
    }

    pub fn constant_vector(values: &[f64]) -> Self {
        let d = values.len();
        Self {
            d,
            arity: Arity::Vector,
            backing: Backing::Fourier {
                components: values.iter().map(|v| vec![FourierTerm::constant(d, *v)]).collect(),
            },
        }
    }

    pub fn zero_vector(d: usize) -> Self {
        Self::constant_vector(&vec![0.0; d])
    }

    pub fn fourier_scalar(d: usize, terms: Vec<FourierTerm>) -> Result<Self> {
        Self::fourier(d, Arity::Scalar, vec![terms])
    }

    pub fn fourier_vector(d: usize, components: Vec<Vec<FourierTerm>>) -> Result<Self> {
        Self::fourier(d, Arity::Vector, components)
    }

    fn fourier(d: usize, arity: Arity, components: Vec<Vec<FourierTerm>>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be positive"));
        }
        let expected = match arity {
            Arity::Scalar => 1,
            Arity::Vector => d,
        };
        check_dim(expected, components.len())?;
        for comp in &components {
            for t in comp {
                check_dim(d, t.frequency.len())?;
                if !t.cos_coeff.is_finite() || !t.sin_coeff.is_finite() {
                    return Err(invalid("fourier", "non-finite coefficient"));
                }
            }
        }
        Ok(Self { d, arity, backing: Backing::Fourier { components } })
    }

    /// Grid-backed field from samples at the nodes `j/n`.
    pub fn from_grid(d: usize, n: usize, arity: Arity, components: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(invalid("grid", "dimension and resolution must be positive"));
        }
        let expected = match arity {
            Arity::Scalar => 1,
            Arity::Vector => d,
        };
        check_dim(expected, components.len())?;
        let cells = n.pow(d as u32);
        for c in &components {
            check_dim(cells, c.len())?;
        }
        Ok(Self { d, arity, backing: Backing::Grid { n, components } })
    }

    /// Sample every component at the grid nodes `j/n` and return a grid-backed copy.
    pub fn sample_to_grid(&self, n: usize) -> Self {
        let cells = n.pow(self.d as u32);
        let mut comps = vec![vec![0.0; cells]; self.n_components()];
        let mut x = vec![0.0; self.d];
        for idx in 0..cells {
            grid_node(idx, n, self.d, &mut x);
            for (c, comp) in comps.iter_mut().enumerate() {
                comp[idx] = self.eval_component(c, &x);
            }
        }
        Self { d: self.d, arity: self.arity, backing: Backing::Grid { n, components: comps } }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn n_components(&self) -> usize {
        match &self.backing {
            Backing::Fourier { components } => components.len(),
            Backing::Grid { components, .. } => components.len(),
        }
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self.backing, Backing::Fourier { .. })
    }

    pub fn fourier_terms(&self, component: usize) -> Option<&[FourierTerm]> {
        match &self.backing {
            Backing::Fourier { components } => components.get(component).map(|c| c.as_slice()),
            Backing::Grid { .. } => None,
        }
    }

    /// Largest `|k|∞` present (Nyquist index for grid backing).
    pub fn max_frequency(&self) -> usize {
        match &self.backing {
            Backing::Fourier { components } => components
                .iter()
                .flatten()
                .filter(|t| t.cos_coeff != 0.0 || t.sin_coeff != 0.0)
                .flat_map(|t| t.frequency.iter().map(|k| k.unsigned_abs() as usize))
                .max()
                .unwrap_or(0),
            Backing::Grid { n, .. } => n / 2,
        }
    }

    /// True when every component is constant.
    pub fn is_constant(&self) -> bool {
        match &self.backing {
            Backing::Fourier { components } => components
                .iter()
                .flatten()
                .all(|t| t.is_zero_frequency() || (t.cos_coeff == 0.0 && t.sin_coeff == 0.0)),
            Backing::Grid { components, .. } => components
                .iter()
                .all(|c| c.iter().all(|v| (v - c[0]).abs() == 0.0)),
        }
    }

    /// True when every component vanishes identically.
    pub fn is_zero(&self) -> bool {
        match &self.backing {
            Backing::Fourier { components } => {
                components.iter().flatten().all(|t| t.cos_coeff == 0.0 && (t.sin_coeff == 0.0 || t.is_zero_frequency()))
            }
            Backing::Grid { components, .. } => components.iter().flatten().all(|v| *v == 0.0),
        }
    }

    /// Value (scalar: length 1, vector: length d) of the periodic extension at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        Ok((0..self.n_components()).map(|c| self.eval_component(c, x)).collect())
    }

    /// Scalar value; for vector fields this is the first component.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.d, x.len())?;
        Ok(self.eval_component(0, x))
    }

    /// Unchecked evaluation of one component (`x.len()` must equal `d`).
    #[inline]
    pub fn eval_component(&self, c: usize, x: &[f64]) -> f64 {
        match &self.backing {
            Backing::Fourier { components } => components[c]
                .iter()
                .map(|t| {
                    if t.is_zero_frequency() {
                        t.cos_coeff
                    } else {
                        let th = t.phase(x);
                        t.cos_coeff * th.cos() + t.sin_coeff * th.sin()
                    }
                })
                .sum(),
            Backing::Grid { n, components } => interpolate(&components[c], *n, self.d, x),
        }
    }

    /// Gradient of each component: `result[c][a] = ∂_a f_c(x)`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.d, x.len())?;
        Ok((0..self.n_components()).map(|c| self.gradient_component(c, x)).collect())
    }

    /// Unchecked gradient of one component.
    pub fn gradient_component(&self, c: usize, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        match &self.backing {
            Backing::Fourier { components } => {
                let mut g = vec![0.0; d];
                for t in &components[c] {
                    if t.is_zero_frequency() {
                        continue;
                    }
                    let th = t.phase(x);
                    let s = TAU * (-t.cos_coeff * th.sin() + t.sin_coeff * th.cos());
                    for (ga, k) in g.iter_mut().zip(&t.frequency) {
                        *ga += s * *k as f64;
                    }
                }
                g
            }
            Backing::Grid { n, components } => {
                let h = 1.0 / *n as f64;
                let mut g = vec![0.0; d];
                let mut xp = x.to_vec();
                for a in 0..d {
                    xp[a] = x[a] + h;
                    let fp = interpolate(&components[c], *n, d, &xp);
                    xp[a] = x[a] - h;
                    let fm = interpolate(&components[c], *n, d, &xp);
                    xp[a] = x[a];
                    g[a] = (fp - fm) / (2.0 * h);
                }
                g
            }
        }
    }

    /// Hessian of one component, row-major `d×d`.
    pub fn hessian_component(&self, c: usize, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut hess = vec![0.0; d * d];
        match &self.backing {
            Backing::Fourier { components } => {
                for t in &components[c] {
                    if t.is_zero_frequency() {
                        continue;
                    }
                    let th = t.phase(x);
                    let v = -TAU * TAU * (t.cos_coeff * th.cos() + t.sin_coeff * th.sin());
                    for a in 0..d {
                        for b in 0..d {
                            hess[a * d + b] += v * (t.frequency[a] * t.frequency[b]) as f64;
                        }
                    }
                }
            }
            Backing::Grid { n, .. } => {
                let h = 1.0 / *n as f64;
                let mut xp = x.to_vec();
                for a in 0..d {
                    xp[a] = x[a] + h;
                    let gp = self.gradient_component(c, &xp);
                    xp[a] = x[a] - h;
                    let gm = self.gradient_component(c, &xp);
                    xp[a] = x[a];
                    for b in 0..d {
                        hess[a * d + b] = (gp[b] - gm[b]) / (2.0 * h);
                    }
                }
            }
        }
        hess
    }

    /// Integral of every component against `measure`.
    pub fn integrate(&self, measure: &Measure<'_>) -> Result<Vec<f64>> {
        let nc = self.n_components();
        let mut out = vec![0.0; nc];
        match measure {
            Measure::Uniform { n } => {
                let n = (*n).max(1);
                let cells = n.pow(self.d as u32);
                let mut x = vec![0.0; self.d];
                for idx in 0..cells {
                    cell_center(idx, n, self.d, &mut x);
                    for (c, o) in out.iter_mut().enumerate() {
                        *o += self.eval_component(c, &x);
                    }
                }
                for o in &mut out {
                    *o /= cells as f64;
                }
            }
            Measure::Empirical(m) | Measure::EmpiricalNormalizing(m) => {
                check_dim(self.d, m.d)?;
                let total = m.total();
                let normalizing = matches!(measure, Measure::EmpiricalNormalizing(_));
                if !normalizing && !m.is_normalized() {
                    return Err(Error::UnnormalizedMeasure { total });
                }
                if total <= 0.0 {
                    return Err(Error::EmptySamples);
                }
                let mut x = vec![0.0; self.d];
                for (idx, w) in m.weights.iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    cell_center(idx, m.n, self.d, &mut x);
                    for (c, o) in out.iter_mut().enumerate() {
                        *o += w * self.eval_component(c, &x);
                    }
                }
                for o in &mut out {
                    *o /= total;
                }
            }
        }
        Ok(out)
    }

    /// Maximum absolute component value over a uniform grid of `n` points per axis.
    pub fn sup_norm(&self, n: usize) -> f64 {
        let cells = n.pow(self.d as u32);
        let mut x = vec![0.0; self.d];
        let mut best: f64 = 0.0;
        for idx in 0..cells {
            grid_node(idx, n, self.d, &mut x);
            for c in 0..self.n_components() {
                best = best.max(self.eval_component(c, &x).abs());
            }
        }
        best
    }

    /// Empirical Hölder ratio `sup |f(x1) − f(x2)| / |x1 − x2|^β` over random pairs at
    /// torus distances in `[1e-3, 0.5]`.
    pub fn holder_estimate<R: Rng + ?Sized>(&self, beta: f64, pairs: usize, rng: &mut R) -> f64 {
        let mut best: f64 = 0.0;
        let mut x1 = vec![0.0; self.d];
        let mut x2 = vec![0.0; self.d];
        for _ in 0..pairs {
            let dist = 10f64.powf(rng.random_range(-3.0..(0.5f64).log10()));
            let mut dir: Vec<f64> = (0..self.d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nrm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            dir.iter_mut().for_each(|v| *v /= nrm);
            for a in 0..self.d {
                x1[a] = rng.random::<f64>();
                x2[a] = x1[a] + dist * dir[a];
            }
            for c in 0..self.n_components() {
                let diff = (self.eval_component(c, &x1) - self.eval_component(c, &x2)).abs();
                best = best.max(diff / dist.powf(beta));
            }
        }
        best
    }

    /// Least-squares projection of grid samples (`n` nodes per axis, at `j/n`) onto the
    /// real trigonometric basis with `|k|∞ ≤ max_freq`; exact for band-limited data when
    /// `2·max_freq < n`.
    pub fn fit_fourier(d: usize, n: usize, samples: &[f64], max_freq: usize) -> Result<Self> {
        let cells = n.pow(d as u32);
        check_dim(cells, samples.len())?;
        if 2 * max_freq >= n {
            return Err(invalid("max_freq", "must be below the Nyquist index n/2"));
        }
        let mut terms = Vec::new();
        let mut x = vec![0.0; d];
        let mean = samples.iter().sum::<f64>() / cells as f64;
        terms.push(FourierTerm::constant(d, mean));
        for k in half_space_modes(d, max_freq) {
            let t = FourierTerm::new(k.clone(), 0.0, 0.0);
            let (mut a, mut b) = (0.0, 0.0);
            for (idx, s) in samples.iter().enumerate() {
                grid_node(idx, n, d, &mut x);
                let th = t.phase(&x);
                a += s * th.cos();
                b += s * th.sin();
            }
            terms.push(FourierTerm::new(k, 2.0 * a / cells as f64, 2.0 * b / cells as f64));
        }
        Self::fourier_scalar(d, terms)
    }

    /// Combine scalar fields into a vector field (Fourier backing required).
    pub fn stack(fields: &[PeriodicField]) -> Result<Self> {
        let d = fields.len();
        let mut comps = Vec::with_capacity(d);
        for f in fields {
            check_dim(d, f.d)?;
            match &f.backing {
                Backing::Fourier { components } if components.len() == 1 => comps.push(components[0].clone()),
                _ => return Err(invalid("fields", "stack requires scalar Fourier fields")),
            }
        }
        Self::fourier_vector(d, comps)
    }

    /// Scalar field holding component `c`.
    pub fn component(&self, c: usize) -> Result<Self> {
        if c >= self.n_components() {
            return Err(invalid("component", format!("index {c} out of range")));
        }
        let backing = match &self.backing {
            Backing::Fourier { components } => Backing::Fourier { components: vec![components[c].clone()] },
            Backing::Grid { n, components } => Backing::Grid { n: *n, components: vec![components[c].clone()] },
        };
        Ok(Self { d: self.d, arity: Arity::Scalar, backing })
    }

    /// Field with every coefficient (or sample) multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let backing = match &self.backing {
            Backing::Fourier { components } => Backing::Fourier {
                components: components
                    .iter()
                    .map(|c| {
                        c.iter()
                            .map(|t| FourierTerm::new(t.frequency.clone(), s * t.cos_coeff, s * t.sin_coeff))
                            .collect()
                    })
                    .collect(),
            },
            Backing::Grid { n, components } => Backing::Grid {
                n: *n,
                components: components.iter().map(|c| c.iter().map(|v| s * v).collect()).collect(),
            },
        };
        Self { d: self.d, arity: self.arity, backing }
    }

    /// Subtract a constant from each component.
    pub fn shifted_by(&self, offsets: &[f64]) -> Result<Self> {
        check_dim(self.n_components(), offsets.len())?;
        let backing = match &self.backing {
            Backing::Fourier { components } => Backing::Fourier {
                components: components
                    .iter()
                    .zip(offsets)
                    .map(|(c, o)| {
                        let mut c = c.clone();
                        c.push(FourierTerm::constant(self.d, -o));
                        c
                    })
                    .collect(),
            },
            Backing::Grid { n, components } => Backing::Grid {
                n: *n,
                components: components
                    .iter()
                    .zip(offsets)
                    .map(|(c, o)| c.iter().map(|v| v - o).collect())
                    .collect(),
            },
        };
        Ok(Self { d: self.d, arity: self.arity, backing })
    }
}

/// Frequencies `k ≠ 0` with `|k|∞ ≤ m`, one representative of each `±k` pair
/// (first nonzero entry positive), in a deterministic order.
pub fn half_space_modes(d: usize, m: usize) -> Vec<Vec<i64>> {
    let m = m as i64;
    let side = (2 * m + 1) as usize;
    let mut out = Vec::new();
    let mut k = vec![0i64; d];
    for idx in 0..side.pow(d as u32) {
        let mut r = idx;
        for ka in k.iter_mut() {
            *ka = (r % side) as i64 - m;
            r /= side;
        }
        let first = k.iter().find(|v| **v != 0);
        if let Some(f) = first {
            if *f > 0 {
                out.push(k.clone());
            }
        }
    }
    out.sort_by_key(|k| (k.iter().map(|v| v.abs()).max().unwrap_or(0), k.clone()));
    out
}

/// Cell center `((i_a + 1/2)/n)_a` of flat index `idx` (axis 0 fastest).
pub fn cell_center(idx: usize, n: usize, d: usize, out: &mut [f64]) {
    let mut r = idx;
    for o in out.iter_mut().take(d) {
        *o = ((r % n) as f64 + 0.5) / n as f64;
        r /= n;
    }
}

/// Grid node `(i_a/n)_a` of flat index `idx` (axis 0 fastest).
pub fn grid_node(idx: usize, n: usize, d: usize, out: &mut [f64]) {
    let mut r = idx;
    for o in out.iter_mut().take(d) {
        *o = (r % n) as f64 / n as f64;
        r /= n;
    }
}

/// Wrap a coordinate into `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let w = x - x.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn interpolate(values: &[f64], n: usize, d: usize, x: &[f64]) -> f64 {
    let mut base = [0usize; 8];
    let mut frac = [0f64; 8];
    debug_assert!(d <= 8);
    for a in 0..d {
        let s = wrap(x[a]) * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        base[a] = i;
        frac[a] = s - i as f64;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << d) {
        let mut w = 1.0;
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..d {
            let up = (corner >> a) & 1 == 1;
            let i = if up { (base[a] + 1) % n } else { base[a] };
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            idx += i * stride;
            stride *= n;
        }
        if w != 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

/// Nonnegative cell weights on a uniform grid over `T^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    d: usize,
    n: usize,
    weights: Vec<f64>,
    normalized: bool,
}

impl EmpiricalMeasure {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(invalid("grid", "dimension and resolution must be positive"));
        }
        Ok(Self { d, n, weights: vec![0.0; n.pow(d as u32)], normalized: false })
    }

    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        let mut m = Self::new(d, n)?;
        let w = 1.0 / m.weights.len() as f64;
        m.weights.iter_mut().for_each(|v| *v = w);
        m.normalized = true;
        Ok(m)
    }

    /// All mass in the cell containing `x`.
    pub fn point_mass(d: usize, n: usize, x: &[f64]) -> Result<Self> {
        check_dim(d, x.len())?;
        let mut m = Self::new(d, n)?;
        let c = m.cell_of(x);
        m.weights[c] = 1.0;
        m.normalized = true;
        Ok(m)
    }

    pub fn from_weights(d: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        check_dim(n.pow(d as u32), weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights", "must be finite and nonnegative"));
        }
        Ok(Self { d, n, weights, normalized: false })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn n_cells(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn cell_of(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for xa in x.iter().take(self.d) {
            let i = ((wrap(*xa) * self.n as f64).floor() as usize).min(self.n - 1);
            idx += i * stride;
            stride *= self.n;
        }
        idx
    }

    pub fn center(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.d];
        cell_center(idx, self.n, self.d, &mut x);
        x
    }

    pub fn add(&mut self, idx: usize, w: f64) {
        self.weights[idx] += w;
        self.normalized = false;
    }

    pub fn add_at(&mut self, x: &[f64], w: f64) {
        let c = self.cell_of(x);
        self.add(c, w);
    }

    /// Associative merge of raw weights.
    pub fn merge(&mut self, other: &EmpiricalMeasure) -> Result<()> {
        check_dim(self.weights.len(), other.weights.len())?;
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.normalized = false;
        Ok(())
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if !(total > 0.0) {
            return Err(Error::EmptySamples);
        }
        self.weights.iter_mut().for_each(|w| *w /= total);
        self.normalized = true;
        Ok(())
    }

    pub fn normalized(&self) -> Result<Self> {
        let mut m = self.clone();
        m.normalize()?;
        Ok(m)
    }

    /// Total-variation distance `½ Σ |p_i − q_i|` of the normalized weights.
    pub fn tv_distance(&self, other: &EmpiricalMeasure) -> Result<f64> {
        check_dim(self.weights.len(), other.weights.len())?;
        let (ta, tb) = (self.total(), other.total());
        if !(ta > 0.0 && tb > 0.0) {
            return Err(Error::EmptySamples);
        }
        Ok(0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a / ta - b / tb).abs()).sum::<f64>())
    }
}

/// Check `|∫ b dμ| ≤ tol` componentwise.
pub fn check_centering(b: &PeriodicField, mu: &Measure<'_>, tol: f64) -> Result<CenteringReport> {
    let residuals: Vec<f64> = b.integrate(mu)?.into_iter().map(f64::abs).collect();
    let pass = residuals.iter().all(|r| *r <= tol);
    Ok(CenteringReport { residuals, tol, pass })
}
