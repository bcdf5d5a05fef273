//! α-stable Lévy densities `J(z) = |z|^{-(d+α)} J(z/|z|)` and the jump integrals built on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::kernel::{JumpKernelSpec, KernelArgs};
use crate::quadrature::{power_integral, RadialQuadrature};
use crate::torus::PeriodicField;

/// Values of `J` on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spherical {
    /// One dimension: `J(+1) = jplus`, `J(-1) = jminus`.
    OneDim { jplus: f64, jminus: f64 },
    /// Two dimensions: values at the angles `2πk/m`, linearly interpolated.
    Table { angular_table: Vec<f64> },
    /// Constant spherical density in any dimension.
    Isotropic { isotropic: f64 },
}

/// An α-stable Lévy density with its spherical part and bounds `j1 ≤ J ≤ j2` on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevyDensity {
    d: usize,
    alpha: f64,
    spherical: Spherical,
    j1: f64,
    j2: f64,
}

/// A direction on the sphere together with its quadrature weight `J(ξ)dξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularNode {
    pub dir: Vec<f64>,
    pub weight: f64,
}

/// How the small-jump compensator `z·∇f` is truncated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// No compensation (`α < 1`).
    None,
    /// Compensate jumps with `|z| < R`.
    Ball(f64),
    /// Compensate all jumps.
    All,
}

impl Compensation {
    /// Radius below which jumps are compensated (`0` for none, `∞` for all).
    pub fn radius(&self) -> f64 {
        match self {
            Compensation::None => 0.0,
            Compensation::Ball(r) => *r,
            Compensation::All => f64::INFINITY,
        }
    }
}

/// Behaviour of a jump kernel along rays `r ↦ k(rξ)`, used to build quadratures with
/// analytic inner and outer pieces.
pub trait RayKernel {
    /// Kernel value at the jump `z`.
    fn value(&self, z: &[f64]) -> f64;
    /// Near the origin `k(rξ) ≈ v·(r/r0)^{-γ}`; returns `(v, γ)`.
    fn head(&self, dir: &[f64], r0: f64) -> (f64, f64) {
        let z: Vec<f64> = dir.iter().map(|v| v * r0).collect();
        (self.value(&z), 0.0)
    }
    /// Far from the origin the ray average behaves like `v·(r/r)^{-γ}`; returns `(v, γ)`.
    fn tail(&self, dir: &[f64], r: f64) -> (f64, f64) {
        let z: Vec<f64> = dir.iter().map(|v| v * r).collect();
        (self.value(&z), 0.0)
    }
    /// Upper bound on the radial oscillation frequency of `k` along rays.
    fn frequency(&self) -> f64 {
        0.0
    }
    /// Radii where `k` changes character.
    fn breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Kernel that depends on the direction through a closure only.
pub struct DirectionalKernel<F: Fn(&[f64]) -> f64>(pub F);

impl<F: Fn(&[f64]) -> f64> RayKernel for DirectionalKernel<F> {
    fn value(&self, z: &[f64]) -> f64 {
        let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = z.iter().map(|v| v / n).collect();
        (self.0)(&dir)
    }
}

impl LevyDensity {
    pub fn new(d: usize, alpha: f64, spherical: Spherical) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be positive"));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("alpha", format!("{alpha} not in (0, 2)")));
        }
        let values: Vec<f64> = match &spherical {
            Spherical::OneDim { jplus, jminus } => {
                if d != 1 {
                    return Err(invalid("spherical", "jplus/jminus requires d = 1"));
                }
                vec![*jplus, *jminus]
            }
            Spherical::Table { angular_table } => {
                if d != 2 {
                    return Err(invalid("spherical", "angular_table requires d = 2"));
                }
                if angular_table.len() < 3 {
                    return Err(invalid("angular_table", "need at least 3 entries"));
                }
                angular_table.clone()
            }
            Spherical::Isotropic { isotropic } => vec![*isotropic],
        };
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("spherical", "values must be finite and nonnegative"));
        }
        let j1 = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let j2 = values.iter().cloned().fold(0.0, f64::max);
        if j2 <= 0.0 {
            return Err(invalid("spherical", "density vanishes identically"));
        }
        Ok(Self { d, alpha, spherical, j1, j2 })
    }

    /// Symmetric one-dimensional density `j(|z|^{-1-α})`.
    pub fn symmetric_1d(alpha: f64, j: f64) -> Result<Self> {
        Self::new(1, alpha, Spherical::OneDim { jplus: j, jminus: j })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spherical(&self) -> &Spherical {
        &self.spherical
    }

    pub fn j1(&self) -> f64 {
        self.j1
    }

    pub fn j2(&self) -> f64 {
        self.j2
    }

    /// Same spherical part with a different stability index.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.d, alpha, self.spherical.clone())
    }

    /// `J(−ξ) = J(ξ)` for every direction.
    pub fn is_symmetric(&self) -> bool {
        match &self.spherical {
            Spherical::OneDim { jplus, jminus } => jplus == jminus,
            Spherical::Table { angular_table } => {
                let m = angular_table.len();
                m % 2 == 0 && (0..m).all(|k| angular_table[k] == angular_table[(k + m / 2) % m])
            }
            Spherical::Isotropic { .. } => true,
        }
    }

    /// Spherical value `J(ξ)` at a unit vector.
    #[inline]
    pub fn spherical_value(&self, dir: &[f64]) -> f64 {
        match &self.spherical {
            Spherical::OneDim { jplus, jminus } => {
                if dir[0] > 0.0 {
                    *jplus
                } else {
                    *jminus
                }
            }
            Spherical::Table { angular_table } => {
                let m = angular_table.len();
                let s = direction_fraction(dir) * m as f64;
                let i = (s.floor() as usize).min(m - 1);
                let t = s - i as f64;
                (1.0 - t) * angular_table[i] + t * angular_table[(i + 1) % m]
            }
            Spherical::Isotropic { isotropic } => *isotropic,
        }
    }

    /// `J(z) = |z|^{-(d+α)} J(z/|z|)`.
    pub fn eval_density(&self, z: &[f64]) -> Result<f64> {
        check_dim(self.d, z.len())?;
        let r = norm(z);
        if r == 0.0 {
            return Err(invalid("z", "density is undefined at the origin"));
        }
        let dir: Vec<f64> = z.iter().map(|v| v / r).collect();
        Ok(r.powf(-(self.d as f64 + self.alpha)) * self.spherical_value(&dir))
    }

    /// `ω = ∫_S J(ξ) dξ`.
    pub fn sphere_mass(&self) -> f64 {
        match &self.spherical {
            Spherical::OneDim { jplus, jminus } => jplus + jminus,
            Spherical::Table { angular_table } => {
                2.0 * PI * angular_table.iter().sum::<f64>() / angular_table.len() as f64
            }
            Spherical::Isotropic { isotropic } => isotropic * sphere_area(self.d),
        }
    }

    /// `∫_{rmin ≤ |z| < rmax} J(z) dz`.
    pub fn annulus_mass(&self, rmin: f64, rmax: f64) -> f64 {
        self.sphere_mass() * power_integral(rmin, rmax, -1.0 - self.alpha)
    }

    /// Angular quadrature (exact two-point sphere in d = 1, `m` equispaced angles in d = 2).
    pub fn angular_nodes(&self, m: usize) -> Result<Vec<AngularNode>> {
        match self.d {
            1 => Ok(vec![
                AngularNode { dir: vec![1.0], weight: self.spherical_value(&[1.0]) },
                AngularNode { dir: vec![-1.0], weight: self.spherical_value(&[-1.0]) },
            ]),
            2 => {
                let m = match &self.spherical {
                    Spherical::Table { angular_table } => lcm_at_least(angular_table.len(), m),
                    _ => m.max(4),
                };
                Ok((0..m)
                    .map(|k| {
                        let th = 2.0 * PI * k as f64 / m as f64;
                        let dir = vec![th.cos(), th.sin()];
                        let weight = self.spherical_value(&dir) * 2.0 * PI / m as f64;
                        AngularNode { dir, weight }
                    })
                    .collect())
            }
            d => Err(Error::Unsupported(format!("angular quadrature in dimension {d}"))),
        }
    }

    /// Inverse-CDF radius for the measure `r^{-1-α} dr` on `[rmin, rmax)`.
    #[inline]
    pub fn radius_from_uniform(&self, rmin: f64, rmax: f64, u: f64) -> f64 {
        let a = self.alpha;
        let lo = rmin.powf(-a);
        let hi = if rmax.is_finite() { rmax.powf(-a) } else { 0.0 };
        (lo - u * (lo - hi)).powf(-1.0 / a)
    }

    /// Direction drawn from `J(ξ)dξ / ω` by rejection against the envelope `j2`.
    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        loop {
            match self.d {
                1 => out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 },
                2 => {
                    let th = 2.0 * PI * rng.random::<f64>();
                    out[0] = th.cos();
                    out[1] = th.sin();
                }
                _ => {
                    let mut n = 0.0;
                    while n == 0.0 {
                        for o in out.iter_mut() {
                            *o = StandardNormal.sample(rng);
                        }
                        n = norm(out);
                    }
                    out.iter_mut().for_each(|v| *v /= n);
                }
            }
            if matches!(self.spherical, Spherical::Isotropic { .. }) {
                return;
            }
            if rng.random::<f64>() * self.j2 < self.spherical_value(out) {
                return;
            }
        }
    }

    /// One jump from `J(z)dz` restricted to `rmin ≤ |z| < rmax`.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rmin: f64, rmax: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !(rmin > 0.0) {
            return Err(invalid("rmin", "must be positive"));
        }
        if !(rmax > rmin) {
            return Err(invalid("rmax", "must exceed rmin"));
        }
        let mut dir = vec![0.0; self.d];
        self.sample_direction(rng, &mut dir);
        let r = self.radius_from_uniform(rmin, rmax, rng.random::<f64>());
        Ok(dir.into_iter().map(|v| v * r).collect())
    }
}

fn lcm_at_least(table: usize, m: usize) -> usize {
    let mut k = table;
    while k < m {
        k += table;
    }
    k
}

/// Surface area `2π^{d/2}/Γ(d/2)` of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d)
}

/// `Γ(d/2)` for integer `d ≥ 1`.
fn gamma_half_integer(d: usize) -> f64 {
    if d % 2 == 0 {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < d as f64 / 2.0 - 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Fraction `atan2(ξ₂, ξ₁)/(2π) ∈ [0, 1)` of a direction (d = 1: 0 for +, ½ for −).
#[inline]
pub fn direction_fraction(dir: &[f64]) -> f64 {
    if dir.len() == 1 {
        return if dir[0] > 0.0 { 0.0 } else { 0.5 };
    }
    let s = dir[1].atan2(dir[0]) / (2.0 * PI);
    let s = if s < 0.0 { s + 1.0 } else { s };
    if s >= 1.0 {
        0.0
    } else {
        s
    }
}

#[inline]
pub(crate) fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scaled(dir: &[f64], r: f64, out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(dir) {
        *o = v * r;
    }
}

/// `∫_0^{r0} r^n k(rξ) r^{-1-α} dr` with `k ≈ v (r/r0)^{-γ}`.
fn head_moment(v: f64, gamma: f64, r0: f64, n: f64, alpha: f64) -> Result<f64> {
    let p = n - 1.0 - alpha - gamma;
    if p <= -1.0 {
        return Err(Error::Divergent(format!("inner moment of order {n} with α = {alpha}, γ = {gamma}")));
    }
    Ok(v * r0.powf(n - alpha) / (p + 1.0))
}

/// `∫_{r}^∞ r'^n k r'^{-1-α} dr'` with `k ≈ v (r'/r)^{-γ}`.
fn tail_moment(v: f64, gamma: f64, r: f64, n: f64, alpha: f64) -> Result<f64> {
    let p = n - 1.0 - alpha - gamma;
    if v == 0.0 {
        return Ok(0.0);
    }
    if p >= -1.0 {
        return Err(Error::Divergent(format!("tail moment of order {n} with α = {alpha}, γ = {gamma}")));
    }
    Ok(v * r.powf(gamma) * power_integral(r, f64::INFINITY, p))
}

/// `∫_{rmin ≤ |z| < rmax} z k(z) J(z) dz` for a kernel described along rays.
///
/// `rmin = 0` is allowed for `α < 1`, or for symmetric integrands where the inner
/// principal value vanishes; `rmax = ∞` requires an integrable tail.
pub fn radial_moment(
    levy: &LevyDensity,
    kernel: &dyn RayKernel,
    rmin: f64,
    rmax: f64,
    quad: &RadialQuadrature,
) -> Result<Vec<f64>> {
    let d = levy.dim();
    let alpha = levy.alpha();
    let mut out = vec![0.0; d];
    if !(rmax > rmin) {
        return Ok(out);
    }
    let nodes = levy.angular_nodes(quad.angular_nodes)?;
    let r0 = quad.r0;
    let lower = if rmin > 0.0 { rmin } else { r0.min(rmax) };
    let upper = if rmax.is_finite() { rmax } else { quad.r_outer.max(lower) };
    let mut breaks = kernel.breaks();
    breaks.push(1.0);
    let (rule, reached) = quad.rule(lower, upper, kernel.frequency(), &breaks);
    let (smooth, _) = quad.rule(reached, upper, 0.0, &breaks);
    let mut z = vec![0.0; d];
    let symmetric = rmin == 0.0 && alpha >= 1.0 && moment_is_odd(levy, kernel, &nodes, lower);
    if rmin == 0.0 && alpha >= 1.0 && !symmetric {
        return Err(Error::Divergent("compensator integral from 0 with α ≥ 1 and asymmetric integrand".into()));
    }
    for node in &nodes {
        if node.weight == 0.0 {
            continue;
        }
        let mut radial = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            scaled(&node.dir, *r, &mut z);
            radial += w * kernel.value(&z) * r.powf(-alpha);
        }
        for (r, w) in smooth.nodes.iter().zip(&smooth.weights) {
            let (v, g) = kernel.tail(&node.dir, *r);
            radial += w * v * r.powf(-alpha);
            let _ = g;
        }
        if rmin == 0.0 && !symmetric {
            let (v, g) = kernel.head(&node.dir, lower);
            radial += head_moment(v, g, lower, 1.0, alpha)?;
        }
        if rmax.is_infinite() {
            let (v, g) = kernel.tail(&node.dir, upper);
            radial += tail_moment(v, g, upper, 1.0, alpha)?;
        }
        for (o, xi) in out.iter_mut().zip(&node.dir) {
            *o += node.weight * xi * radial;
        }
    }
    Ok(out)
}

fn moment_is_odd(levy: &LevyDensity, kernel: &dyn RayKernel, nodes: &[AngularNode], r: f64) -> bool {
    let d = levy.dim();
    let mut z = vec![0.0; d];
    let mut zm = vec![0.0; d];
    for node in nodes {
        let minus: Vec<f64> = node.dir.iter().map(|v| -v).collect();
        for s in [0.37, 1.0, 2.9] {
            scaled(&node.dir, r * s, &mut z);
            scaled(&minus, r * s, &mut zm);
            let a = kernel.value(&z) * levy.spherical_value(&node.dir);
            let b = kernel.value(&zm) * levy.spherical_value(&minus);
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return false;
            }
        }
    }
    true
}

/// `∫ k(z) J(z) dz` over `rmin ≤ |z| < rmax` with `rmin > 0`.
pub fn radial_mass(
    levy: &LevyDensity,
    kernel: &dyn RayKernel,
    rmin: f64,
    rmax: f64,
    quad: &RadialQuadrature,
) -> Result<f64> {
    if !(rmin > 0.0) {
        return Err(invalid("rmin", "must be positive"));
    }
    let alpha = levy.alpha();
    let nodes = levy.angular_nodes(quad.angular_nodes)?;
    let upper = if rmax.is_finite() { rmax } else { quad.r_outer.max(rmin) };
    let mut breaks = kernel.breaks();
    breaks.push(1.0);
    let (rule, reached) = quad.rule(rmin, upper, kernel.frequency(), &breaks);
    let (smooth, _) = quad.rule(reached, upper, 0.0, &breaks);
    let mut z = vec![0.0; levy.dim()];
    let mut total = 0.0;
    for node in &nodes {
        let mut radial = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            scaled(&node.dir, *r, &mut z);
            radial += w * kernel.value(&z) * r.powf(-1.0 - alpha);
        }
        for (r, w) in smooth.nodes.iter().zip(&smooth.weights) {
            radial += w * kernel.tail(&node.dir, *r).0 * r.powf(-1.0 - alpha);
        }
        if rmax.is_infinite() && upper > rmin {
            let (v, g) = kernel.tail(&node.dir, upper);
            radial += tail_moment(v, g, upper, 0.0, alpha)?;
        }
        total += node.weight * radial;
    }
    Ok(total)
}

/// `∫ (e^{iξ·z} − 1 − iξ·z 1_{|z|<R}) k(z) J(z) dz`.
///
/// With `cutoff = Some(δ)` the integral is that of the generator with jumps below `δ`
/// removed and their compensator kept as drift:
/// `∫_{|z|≥δ}(e^{iξ·z} − 1 − iξ·z 1_{|z|<R}) kJ + iξ·∫_{|z|<δ} z (1 − 1_{|z|<R}) kJ`.
pub fn levy_integral(
    levy: &LevyDensity,
    kernel: &dyn RayKernel,
    comp: Compensation,
    xi: &[f64],
    cutoff: Option<f64>,
    quad: &RadialQuadrature,
) -> Result<Complex64> {
    check_dim(levy.dim(), xi.len())?;
    let alpha = levy.alpha();
    let big_r = comp.radius();
    if big_r == 0.0 && alpha >= 1.0 {
        return Err(Error::Divergent("uncompensated integral with α ≥ 1".into()));
    }
    if big_r.is_infinite() && alpha <= 1.0 {
        return Err(Error::Divergent("fully compensated integral with α ≤ 1".into()));
    }
    let nodes = levy.angular_nodes(quad.angular_nodes)?;
    let kfreq = kernel.frequency();
    let mut breaks = kernel.breaks();
    breaks.push(1.0);
    if big_r.is_finite() && big_r > 0.0 {
        breaks.push(big_r);
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut z = vec![0.0; levy.dim()];
    let r_outer = quad.r_outer;
    for node in &nodes {
        if node.weight == 0.0 {
            continue;
        }
        let s: f64 = node.dir.iter().zip(xi).map(|(a, b)| a * b).sum();
        let omega = s.abs() + kfreq;
        let (lower, mut acc) = match cutoff {
            None => {
                let r0 = quad.inner_radius(omega).min(r_outer);
                let (v, g) = kernel.head(&node.dir, r0);
                let mut acc = Complex64::new(0.0, 0.0);
                if big_r == 0.0 {
                    acc += Complex64::new(0.0, s) * head_moment(v, g, r0, 1.0, alpha)?;
                } else if big_r < r0 {
                    return Err(invalid("compensation", "ball radius below the inner Taylor radius"));
                }
                acc += Complex64::new(-0.5 * s * s, 0.0) * head_moment(v, g, r0, 2.0, alpha)?;
                acc += Complex64::new(0.0, -s * s * s / 6.0) * head_moment(v, g, r0, 3.0, alpha)?;
                acc += Complex64::new(s.powi(4) / 24.0, 0.0) * head_moment(v, g, r0, 4.0, alpha)?;
                (r0, acc)
            }
            Some(delta) => {
                let mut acc = Complex64::new(0.0, 0.0);
                // drift left behind by removed jumps that the generator does not compensate
                let lo = big_r.min(delta);
                if lo < delta {
                    let m = ray_moment(levy, kernel, &node.dir, lo, delta, quad)?;
                    acc += Complex64::new(0.0, s * m);
                }
                (delta, acc)
            }
        };
        // oscillatory part e^{isr} k over the resolved range
        let (orule, reached) = quad.rule(lower, r_outer, omega, &breaks);
        for (r, w) in orule.nodes.iter().zip(&orule.weights) {
            scaled(&node.dir, *r, &mut z);
            let k = kernel.value(&z) * r.powf(-1.0 - alpha);
            acc += w * k * Complex64::from_polar(1.0, s * r);
        }
        // non-oscillatory part −(1 + i s r 1_{r<R}) k
        let (srule, sreached) = quad.rule(lower, r_outer, kfreq, &breaks);
        for (r, w) in srule.nodes.iter().zip(&srule.weights) {
            scaled(&node.dir, *r, &mut z);
            let k = kernel.value(&z) * r.powf(-1.0 - alpha);
            let lin = if *r < big_r { s * r } else { 0.0 };
            acc -= w * k * Complex64::new(1.0, lin);
        }
        let (mrule, _) = quad.rule(sreached, r_outer, 0.0, &breaks);
        for (r, w) in mrule.nodes.iter().zip(&mrule.weights) {
            let (v, _) = kernel.tail(&node.dir, *r);
            let k = v * r.powf(-1.0 - alpha);
            let lin = if *r < big_r { s * r } else { 0.0 };
            acc -= w * k * Complex64::new(1.0, lin);
        }
        let _ = reached;
        // analytic tail beyond the outer radius (the oscillatory part averages out)
        let (v, g) = kernel.tail(&node.dir, r_outer);
        acc -= Complex64::new(tail_moment(v, g, r_outer, 0.0, alpha)?, 0.0);
        if big_r > r_outer {
            if big_r.is_infinite() {
                acc -= Complex64::new(0.0, s * tail_moment(v, g, r_outer, 1.0, alpha)?);
            } else {
                acc -= Complex64::new(0.0, s * v * r_outer.powf(g) * power_integral(r_outer, big_r, -alpha - g));
            }
        }
        total += node.weight * acc;
    }
    Ok(total)
}

/// `∫_a^b r k(rξ) r^{-1-α} dr` along a single ray (`a = 0` allowed when the head converges).
fn ray_moment(
    levy: &LevyDensity,
    kernel: &dyn RayKernel,
    dir: &[f64],
    a: f64,
    b: f64,
    quad: &RadialQuadrature,
) -> Result<f64> {
    let alpha = levy.alpha();
    let mut acc = 0.0;
    let lower = if a > 0.0 { a } else { quad.r0.min(b) };
    if a == 0.0 {
        let (v, g) = kernel.head(dir, lower);
        acc += head_moment(v, g, lower, 1.0, alpha)?;
    }
    let mut breaks = kernel.breaks();
    breaks.push(1.0);
    let (rule, _) = quad.rule(lower, b, kernel.frequency(), &breaks);
    let mut z = vec![0.0; dir.len()];
    for (r, w) in rule.nodes.iter().zip(&rule.weights) {
        scaled(dir, *r, &mut z);
        acc += w * kernel.value(&z) * r.powf(-alpha);
    }
    Ok(acc)
}

/// `∫ (f(x+z) − f(x) − z·∇f(x) 1_{|z|<R}) k(z) J(z) dz` for a scalar periodic field.
pub fn generator_integral(
    levy: &LevyDensity,
    kernel: &dyn RayKernel,
    comp: Compensation,
    f: &PeriodicField,
    component: usize,
    x: &[f64],
    quad: &RadialQuadrature,
) -> Result<f64> {
    let d = levy.dim();
    check_dim(d, x.len())?;
    check_dim(d, f.dim())?;
    let alpha = levy.alpha();
    let big_r = comp.radius();
    if big_r == 0.0 && alpha >= 1.0 {
        return Err(Error::Divergent("uncompensated generator with α ≥ 1".into()));
    }
    let nodes = levy.angular_nodes(quad.angular_nodes)?;
    let fx = f.eval_component(component, x);
    let grad = f.gradient_component(component, x);
    let hess = f.hessian_component(component, x);
    let fmean = f.component(component)?.integrate(&crate::torus::Measure::Uniform { n: 64.max(4 * f.max_frequency() + 1) })?[0];
    let ffreq = 2.0 * PI * f.max_frequency() as f64 * (d as f64).sqrt();
    let kfreq = kernel.frequency();
    let omega = ffreq + kfreq;
    let r_outer = quad.r_outer;
    let mut breaks = kernel.breaks();
    breaks.push(1.0);
    if big_r.is_finite() && big_r > 0.0 {
        breaks.push(big_r);
    }
    let r0 = quad.inner_radius(omega).min(r_outer);
    let mut total = 0.0;
    let mut z = vec![0.0; d];
    let mut xz = vec![0.0; d];
    for node in &nodes {
        if node.weight == 0.0 {
            continue;
        }
        let slope: f64 = node.dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let mut curv = 0.0;
        for a in 0..d {
            for b in 0..d {
                curv += node.dir[a] * hess[a * d + b] * node.dir[b];
            }
        }
        let (v, g) = kernel.head(&node.dir, r0);
        let mut acc = 0.5 * curv * head_moment(v, g, r0, 2.0, alpha)?;
        if big_r == 0.0 {
            acc += slope * head_moment(v, g, r0, 1.0, alpha)?;
        }
        let (orule, reached) = quad.rule(r0, r_outer, omega, &breaks);
        for (r, w) in orule.nodes.iter().zip(&orule.weights) {
            scaled(&node.dir, *r, &mut z);
            for a in 0..d {
                xz[a] = x[a] + z[a];
            }
            let k = kernel.value(&z) * r.powf(-1.0 - alpha);
            let lin = if *r < big_r { slope * r } else { 0.0 };
            acc += w * k * (f.eval_component(component, &xz) - fx - lin);
        }
        // beyond the resolved range f(x+z) is replaced by its mean along the torus
        let (srule, sreached) = quad.rule(reached, r_outer, kfreq, &breaks);
        for (r, w) in srule.nodes.iter().zip(&srule.weights) {
            scaled(&node.dir, *r, &mut z);
            let k = kernel.value(&z) * r.powf(-1.0 - alpha);
            let lin = if *r < big_r { slope * r } else { 0.0 };
            acc += w * k * (fmean - fx - lin);
        }
        let (mrule, _) = quad.rule(sreached, r_outer, 0.0, &breaks);
        for (r, w) in mrule.nodes.iter().zip(&mrule.weights) {
            let k = kernel.tail(&node.dir, *r).0 * r.powf(-1.0 - alpha);
            let lin = if *r < big_r { slope * r } else { 0.0 };
            acc += w * k * (fmean - fx - lin);
        }
        let (tv, tg) = kernel.tail(&node.dir, r_outer);
        acc += (fmean - fx) * tail_moment(tv, tg, r_outer, 0.0, alpha)?;
        if big_r > r_outer {
            acc -= slope
                * if big_r.is_infinite() {
                    tail_moment(tv, tg, r_outer, 1.0, alpha)?
                } else {
                    tv * r_outer.powf(tg) * power_integral(r_outer, big_r, -alpha - tg)
                };
        }
        total += node.weight * acc;
    }
    Ok(total)
}

/// Compensator integral `∫_{rmin ≤ |z| < rmax} z κ(x, z, z/ε) J(z) dz`.
pub fn compensator_integral(
    levy: &LevyDensity,
    kernel: &JumpKernelSpec,
    x: &[f64],
    eps: f64,
    rmin: f64,
    rmax: f64,
    quad: &RadialQuadrature,
) -> Result<Vec<f64>> {
    check_dim(levy.dim(), x.len())?;
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if rmax <= rmin {
        return Ok(vec![0.0; levy.dim()]);
    }
    let args = KernelArgs { z_scale: 1.0, u_scale: 1.0 / eps, v_scale: 1.0 / eps };
    let bound = kernel.bind(args, x);
    radial_moment(levy, &bound, rmin, rmax, quad)
}

/// Residual norm of `∫_S ξ κ(x, r1 ξ, r2 ξ) J(ξ) dξ` (only meaningful for α = 1).
pub fn check_sphere_centering(
    levy: &LevyDensity,
    kernel: &JumpKernelSpec,
    x: &[f64],
    r1: f64,
    r2: f64,
    angular_nodes: usize,
) -> Result<f64> {
    if levy.alpha() != 1.0 {
        return Err(invalid("alpha", "sphere centering applies only to α = 1"));
    }
    check_dim(levy.dim(), x.len())?;
    let nodes = levy.angular_nodes(angular_nodes)?;
    let mut acc = vec![0.0; levy.dim()];
    for node in &nodes {
        let z: Vec<f64> = node.dir.iter().map(|v| v * r1).collect();
        let u: Vec<f64> = node.dir.iter().map(|v| v * r2).collect();
        let k = kernel.kappa(x, &z, &u);
        for (a, xi) in acc.iter_mut().zip(&node.dir) {
            *a += node.weight * xi * k;
        }
    }
    Ok(norm(&acc))
}
