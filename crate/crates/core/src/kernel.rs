//! State-dependent jump kernels `κ*(x, z, u, v)`, their limits `κ0`, and assumption checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};
use crate::levy::{direction_fraction, norm, LevyDensity, RayKernel};
use crate::torus::{cell_center, Backing, PeriodicField};

/// Kernel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// `κ* ≡ value`.
    Constant { value: f64 },
    /// `κ*(x,z,u,v) = f(x)·g(u)·h(v/|v|)`, with `h` a one-dimensional periodic field of the
    /// direction fraction `atan2(v₂,v₁)/2π` (in d = 1: 0 for `v > 0`, ½ for `v < 0`).
    Product { x_factor: PeriodicField, u_factor: PeriodicField, v_factor: PeriodicField },
    /// Jump map `σ(x,y) = a(x)·y` of an SDE driven by stable noise: `κ(x,z) = a(x)^α`.
    Diffeo { a: PeriodicField, alpha: f64 },
    /// `κ*(x,v) = ρ(x, v/|v|)/J0(v/|v|)·|v|^{α0−α(x)}` with `ρ(x,ξ) = ρ_x(x)ρ_dir(ξ)` and
    /// `α(x) = max(F(x), α0)`.
    VariableOrder {
        alpha_field: PeriodicField,
        alpha0: f64,
        rho_x: PeriodicField,
        rho_dir: PeriodicField,
        j0: LevyDensity,
        tol: f64,
    },
    /// One-dimensional `κ*(x,v) = κ0^±(x) + (core(x) − κ0^±(x)) e^{−|v|/λ}`, sign of `v`.
    OneDim { core: PeriodicField, kappa0_plus: PeriodicField, kappa0_minus: PeriodicField, length: f64 },
}

/// A jump kernel with its declared constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpKernelSpec {
    d: usize,
    family: KernelFamily,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub beta: f64,
}

/// Multipliers of the jump `z` in the arguments `(z, u, v)` of `κ*` for one generator
/// view: `κ*(y, z_scale·z, u_scale·z, v_scale·z)` at the phase `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelArgs {
    pub z_scale: f64,
    pub u_scale: f64,
    pub v_scale: f64,
}

/// Piecewise power-law envelope `K·max(1, (r/r_b)^{−γ})` of a kernel, used as the
/// dominating intensity for thinning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominatingProfile {
    pub k: f64,
    pub r_b: f64,
    pub gamma: f64,
}

impl DominatingProfile {
    pub fn constant(k: f64) -> Self {
        Self { k, r_b: 1.0, gamma: 0.0 }
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        if self.gamma > 0.0 && r < self.r_b {
            self.k * (r / self.r_b).powf(-self.gamma)
        } else {
            self.k
        }
    }
}

/// One line of an assumption-validation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequence: Vec<f64>,
}

/// Pass/fail per assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    pub pass: bool,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Sup over `[0,1)^d` of a field sampled on a grid, padded by its Lipschitz bound so that
/// the returned interval encloses the true range (Fourier backing).
pub fn field_range(f: &PeriodicField, n: usize) -> (f64, f64) {
    let d = f.dim();
    let g = f.sample_to_grid(n);
    let Backing::Grid { components, .. } = g.backing() else { unreachable!() };
    let lo = components[0].iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = components[0].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = lipschitz_bound(f) * (d as f64).sqrt() / (2.0 * n as f64);
    (lo - pad, hi + pad)
}

/// `Σ 2π|k|(|a_k| + |b_k|)`, a Lipschitz bound for a scalar Fourier field.
pub fn lipschitz_bound(f: &PeriodicField) -> f64 {
    match f.fourier_terms(0) {
        Some(terms) => terms
            .iter()
            .map(|t| {
                let k = norm(&t.frequency.iter().map(|v| *v as f64).collect::<Vec<_>>());
                2.0 * PI * k * (t.cos_coeff.abs() + t.sin_coeff.abs())
            })
            .sum(),
        None => f64::INFINITY,
    }
}

fn field_mean(f: &PeriodicField) -> f64 {
    match f.fourier_terms(0) {
        Some(terms) => terms.iter().filter(|t| t.frequency.iter().all(|k| *k == 0)).map(|t| t.cos_coeff).sum(),
        None => f.integrate(&crate::torus::Measure::Uniform { n: 256 }).map(|v| v[0]).unwrap_or(0.0),
    }
}

#[inline]
fn dir_value(h: &PeriodicField, dir: &[f64]) -> f64 {
    h.eval_component(0, &[direction_fraction(dir)])
}

/// Even under `ξ ↦ −ξ` (shift of the direction fraction by ½).
fn dir_field_is_even(h: &PeriodicField) -> bool {
    match h.fourier_terms(0) {
        Some(terms) => terms.iter().all(|t| t.frequency[0] % 2 == 0 || (t.cos_coeff == 0.0 && t.sin_coeff == 0.0)),
        None => false,
    }
}

fn field_is_even(g: &PeriodicField) -> bool {
    match g.fourier_terms(0) {
        Some(terms) => terms.iter().all(|t| t.sin_coeff == 0.0 || t.frequency.iter().all(|k| *k == 0)),
        None => false,
    }
}

fn check_scalar(f: &PeriodicField, d: usize, name: &'static str) -> Result<()> {
    check_dim(d, f.dim())?;
    if f.n_components() != 1 {
        return Err(invalid(name, "must be a scalar field"));
    }
    Ok(())
}

impl JumpKernelSpec {
    /// Build a kernel with constants derived from the family (`β = 1`).
    pub fn new(d: usize, family: KernelFamily) -> Result<Self> {
        match &family {
            KernelFamily::Constant { value } => {
                if !(*value >= 0.0) {
                    return Err(invalid("value", "must be nonnegative"));
                }
            }
            KernelFamily::Product { x_factor, u_factor, v_factor } => {
                check_scalar(x_factor, d, "x_factor")?;
                check_scalar(u_factor, d, "u_factor")?;
                check_scalar(v_factor, 1, "v_factor")?;
            }
            KernelFamily::Diffeo { a, alpha } => {
                check_scalar(a, d, "a")?;
                if field_range(a, 256).0 <= 0.0 {
                    return Err(invalid("a", "must be strictly positive"));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid("alpha", "must lie in (0, 2)"));
                }
            }
            KernelFamily::VariableOrder { alpha_field, alpha0, rho_x, rho_dir, j0, .. } => {
                check_scalar(alpha_field, d, "alpha_field")?;
                check_scalar(rho_x, d, "rho_x")?;
                check_scalar(rho_dir, 1, "rho_dir")?;
                check_dim(d, j0.dim())?;
                if j0.alpha() != *alpha0 {
                    return Err(invalid("alpha0", "reference density must have index α0"));
                }
                if j0.j1() <= 0.0 {
                    return Err(invalid("j0", "reference density must be positive on the sphere"));
                }
            }
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, length } => {
                if d != 1 {
                    return Err(invalid("family", "onedim kernels require d = 1"));
                }
                check_scalar(core, 1, "core")?;
                check_scalar(kappa0_plus, 1, "kappa0_plus")?;
                check_scalar(kappa0_minus, 1, "kappa0_minus")?;
                if !(*length > 0.0) {
                    return Err(invalid("length", "must be positive"));
                }
            }
        }
        let mut spec = Self { d, family, kappa1: 0.0, kappa2: 0.0, kappa3: 0.0, beta: 1.0 };
        let (k1, k2) = spec.natural_bounds();
        spec.kappa1 = k1;
        spec.kappa2 = k2;
        spec.kappa3 = spec.natural_lipschitz();
        Ok(spec)
    }

    pub fn constant(d: usize, value: f64) -> Self {
        Self::new(d, KernelFamily::Constant { value }).expect("valid constant kernel")
    }

    /// Override the declared constants.
    pub fn with_constants(mut self, kappa1: Option<f64>, kappa2: Option<f64>, kappa3: Option<f64>, beta: Option<f64>) -> Self {
        if let Some(v) = kappa1 {
            self.kappa1 = v;
        }
        if let Some(v) = kappa2 {
            self.kappa2 = v;
        }
        if let Some(v) = kappa3 {
            self.kappa3 = v;
        }
        if let Some(v) = beta {
            self.beta = v;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::Constant { .. } => "constant",
            KernelFamily::Product { .. } => "product",
            KernelFamily::Diffeo { .. } => "diffeo",
            KernelFamily::VariableOrder { .. } => "variable_order",
            KernelFamily::OneDim { .. } => "onedim",
        }
    }

    fn natural_bounds(&self) -> (f64, f64) {
        let n = if self.d == 1 { 512 } else { 64 };
        match &self.family {
            KernelFamily::Constant { value } => (*value, *value),
            KernelFamily::Product { x_factor, u_factor, v_factor } => {
                let (a, b) = field_range(x_factor, n);
                let (c, e) = field_range(u_factor, n);
                let (g, h) = field_range(v_factor, 512);
                let lo = if a > 0.0 && c > 0.0 && g > 0.0 { a * c * g } else { 0.0 };
                (lo, b.abs().max(a.abs()) * e.abs().max(c.abs()) * h.abs().max(g.abs()))
            }
            KernelFamily::Diffeo { a, alpha } => {
                let (lo, hi) = field_range(a, n);
                (lo.max(0.0).powf(*alpha), hi.powf(*alpha))
            }
            KernelFamily::VariableOrder { rho_x, rho_dir, j0, .. } => {
                let (a, b) = field_range(rho_x, n);
                let (c, e) = field_range(rho_dir, 512);
                let (j1, j2) = (j0.j1(), j0.j2());
                (a.max(0.0) * c.max(0.0) / j2, b * e / j1)
            }
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, .. } => {
                let (a, b) = field_range(core, n);
                let (c, e) = field_range(kappa0_plus, n);
                let (g, h) = field_range(kappa0_minus, n);
                (a.min(c).min(g), b.max(e).max(h))
            }
        }
    }

    fn natural_lipschitz(&self) -> f64 {
        match &self.family {
            KernelFamily::Constant { .. } => 0.0,
            KernelFamily::Product { x_factor, u_factor, v_factor } => {
                let (c, e) = field_range(u_factor, 256);
                let (g, h) = field_range(v_factor, 256);
                lipschitz_bound(x_factor) * c.abs().max(e.abs()) * g.abs().max(h.abs())
            }
            KernelFamily::Diffeo { a, alpha } => {
                let (lo, hi) = field_range(a, 256);
                alpha * lo.max(1e-300).powf(alpha - 1.0).max(hi.powf(alpha - 1.0)) * lipschitz_bound(a)
            }
            KernelFamily::VariableOrder { alpha_field, rho_x, .. } => {
                if alpha_field.is_constant() {
                    let (_, hi) = self.natural_bounds();
                    lipschitz_bound(rho_x) * hi / field_range(rho_x, 256).0.max(1e-300)
                } else {
                    f64::INFINITY
                }
            }
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, .. } => {
                lipschitz_bound(core) + lipschitz_bound(kappa0_plus).max(lipschitz_bound(kappa0_minus))
            }
        }
    }

    /// `α(x) = max(F(x), α0)` for the variable-order family.
    fn local_alpha(alpha_field: &PeriodicField, alpha0: f64, x: &[f64]) -> f64 {
        alpha_field.eval_component(0, x).max(alpha0)
    }

    /// `κ*(x, z, u, v)`, unchecked.
    pub fn kappa_star(&self, x: &[f64], z: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let _ = z;
        match &self.family {
            KernelFamily::Constant { value } => *value,
            KernelFamily::Product { x_factor, u_factor, v_factor } => {
                let r = norm(v);
                let dir: Vec<f64> = v.iter().map(|c| c / r).collect();
                x_factor.eval_component(0, x) * u_factor.eval_component(0, u) * dir_value(v_factor, &dir)
            }
            KernelFamily::Diffeo { a, alpha } => a.eval_component(0, x).powf(*alpha),
            KernelFamily::VariableOrder { alpha_field, alpha0, rho_x, rho_dir, j0, .. } => {
                let r = norm(v);
                let dir: Vec<f64> = v.iter().map(|c| c / r).collect();
                let a = Self::local_alpha(alpha_field, *alpha0, x);
                rho_x.eval_component(0, x) * dir_value(rho_dir, &dir) / j0.spherical_value(&dir) * r.powf(alpha0 - a)
            }
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, length } => {
                let lim = if v[0] > 0.0 { kappa0_plus.eval_component(0, x) } else { kappa0_minus.eval_component(0, x) };
                lim + (core.eval_component(0, x) - lim) * (-v[0].abs() / length).exp()
            }
        }
    }

    /// Diagonal `κ(x, z, u) = κ*(x, z, u, u)`, unchecked.
    pub fn kappa(&self, x: &[f64], z: &[f64], u: &[f64]) -> f64 {
        self.kappa_star(x, z, u, u)
    }

    /// `κ(x, z, u)` with the band check `κ1 ≤ κ ≤ κ2`.
    pub fn eval_kappa(&self, x: &[f64], z: &[f64], u: &[f64]) -> Result<f64> {
        check_dim(self.d, x.len())?;
        check_dim(self.d, z.len())?;
        check_dim(self.d, u.len())?;
        if norm(z) == 0.0 || norm(u) == 0.0 {
            return Err(invalid("z", "kernel arguments must be nonzero"));
        }
        let v = self.kappa(x, z, u);
        let slack = 1e-12 * (1.0 + self.kappa2.abs());
        if v < self.kappa1 - slack || v > self.kappa2 + slack {
            return Err(Error::KernelOutOfBand { value: v, lo: self.kappa1, hi: self.kappa2 });
        }
        Ok(v)
    }

    /// Closed-form limit `κ0(x, z, u)` of `κ*(x, z, u, z/ε)` as `ε → 0`.
    pub fn eval_kappa0(&self, x: &[f64], z: &[f64], u: &[f64]) -> Result<f64> {
        check_dim(self.d, x.len())?;
        check_dim(self.d, z.len())?;
        check_dim(self.d, u.len())?;
        let r = norm(z);
        if r == 0.0 {
            return Err(invalid("z", "kernel arguments must be nonzero"));
        }
        Ok(self.kappa0(x, z, u))
    }

    pub(crate) fn kappa0(&self, x: &[f64], z: &[f64], u: &[f64]) -> f64 {
        let r = norm(z);
        let dir: Vec<f64> = z.iter().map(|c| c / r).collect();
        match &self.family {
            KernelFamily::Constant { value } => *value,
            KernelFamily::Product { x_factor, u_factor, v_factor } => {
                x_factor.eval_component(0, x) * u_factor.eval_component(0, u) * dir_value(v_factor, &dir)
            }
            KernelFamily::Diffeo { a, alpha } => a.eval_component(0, x).powf(*alpha),
            KernelFamily::VariableOrder { alpha_field, alpha0, rho_x, rho_dir, j0, tol } => {
                let a = Self::local_alpha(alpha_field, *alpha0, x);
                if (a - alpha0).abs() <= *tol {
                    rho_x.eval_component(0, x) * dir_value(rho_dir, &dir) / j0.spherical_value(&dir)
                } else {
                    0.0
                }
            }
            KernelFamily::OneDim { kappa0_plus, kappa0_minus, .. } => {
                if z[0] > 0.0 {
                    kappa0_plus.eval_component(0, x)
                } else {
                    kappa0_minus.eval_component(0, x)
                }
            }
        }
    }

    /// `κ(x, z, u) = κ(x, −z, −u)` for all arguments.
    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            KernelFamily::Constant { .. } | KernelFamily::Diffeo { .. } => true,
            KernelFamily::Product { u_factor, v_factor, .. } => field_is_even(u_factor) && dir_field_is_even(v_factor),
            KernelFamily::VariableOrder { rho_dir, j0, .. } => dir_field_is_even(rho_dir) && j0.is_symmetric(),
            KernelFamily::OneDim { kappa0_plus, kappa0_minus, .. } => kappa0_plus == kappa0_minus,
        }
    }

    /// Whether the kernel depends on the state variable.
    pub fn is_state_dependent(&self) -> bool {
        match &self.family {
            KernelFamily::Constant { .. } => false,
            KernelFamily::Product { x_factor, .. } => !x_factor.is_constant(),
            KernelFamily::Diffeo { a, .. } => !a.is_constant(),
            KernelFamily::VariableOrder { alpha_field, rho_x, .. } => !(alpha_field.is_constant() && rho_x.is_constant()),
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, .. } => {
                !(core.is_constant() && kappa0_plus.is_constant() && kappa0_minus.is_constant())
            }
        }
    }

    /// Whether the kernel depends on the jump at all (beyond a constant).
    pub fn is_jump_independent(&self) -> bool {
        match &self.family {
            KernelFamily::Constant { .. } | KernelFamily::Diffeo { .. } => true,
            KernelFamily::Product { u_factor, v_factor, .. } => u_factor.is_constant() && v_factor.is_constant(),
            KernelFamily::VariableOrder { .. } => false,
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, .. } => core == kappa0_plus && core == kappa0_minus,
        }
    }

    /// Envelope of `z ↦ κ*(y, ·, ·, v_scale z)` uniformly in the state.
    pub fn dominating(&self, args: KernelArgs) -> DominatingProfile {
        match &self.family {
            KernelFamily::VariableOrder { alpha_field, alpha0, rho_x, rho_dir, j0, .. } => {
                let (_, bx) = field_range(rho_x, if self.d == 1 { 512 } else { 64 });
                let (_, bd) = field_range(rho_dir, 512);
                let (_, amax) = field_range(alpha_field, if self.d == 1 { 512 } else { 64 });
                let gamma = (amax - alpha0).max(0.0);
                DominatingProfile { k: bx * bd / j0.j1(), r_b: 1.0 / args.v_scale, gamma }
            }
            _ => DominatingProfile::constant(self.kappa2),
        }
    }

    /// Bind the state phase `y` and the argument scaling of a view.
    pub fn bind(&self, args: KernelArgs, y: &[f64]) -> BoundKernel<'_> {
        let cache = match &self.family {
            KernelFamily::Constant { value } => [*value, 0.0, 0.0],
            KernelFamily::Product { x_factor, .. } => [x_factor.eval_component(0, y), 0.0, 0.0],
            KernelFamily::Diffeo { a, alpha } => [a.eval_component(0, y).powf(*alpha), 0.0, 0.0],
            KernelFamily::VariableOrder { alpha_field, alpha0, rho_x, .. } => {
                [rho_x.eval_component(0, y), Self::local_alpha(alpha_field, *alpha0, y), 0.0]
            }
            KernelFamily::OneDim { core, kappa0_plus, kappa0_minus, .. } => {
                [core.eval_component(0, y), kappa0_plus.eval_component(0, y), kappa0_minus.eval_component(0, y)]
            }
        };
        BoundKernel { spec: self, args, cache }
    }

    /// Numerical validation of the kernel assumptions: band, Hölder continuity, the
    /// small-scale limits along `eps_sequence`, convergence to `κ0`, and periodicity.
    pub fn validate_assumptions(
        &self,
        levy: &LevyDensity,
        sample_budget: usize,
        eps_sequence: &[f64],
        drift_nonzero: bool,
        seed: u64,
    ) -> Result<AssumptionReport> {
        check_dim(self.d, levy.dim())?;
        let d = self.d;
        let n = sample_budget.max(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw_dir = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            if d == 1 {
                vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]
            } else {
                let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = norm(&v).max(1e-12);
                v.iter_mut().for_each(|c| *c /= r);
                v
            }
        };
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let rz = 10f64.powf(rng.random_range(-1.0..1.0));
            let z: Vec<f64> = draw_dir(&mut rng).into_iter().map(|c| c * rz).collect();
            let ru = 10f64.powf(rng.random_range(-1.0..1.0));
            let u: Vec<f64> = draw_dir(&mut rng).into_iter().map(|c| c * ru + rng.random_range(-1.0..1.0)).collect();
            samples.push((x, z, u));
        }
        let mut checks = Vec::new();
        // (a) band
        let mut kmin = f64::INFINITY;
        let mut kmax = f64::NEG_INFINITY;
        for (x, z, u) in &samples {
            let v = self.kappa(x, z, u);
            kmin = kmin.min(v);
            kmax = kmax.max(v);
        }
        let slack = 1e-12 * (1.0 + self.kappa2.abs());
        checks.push(AssumptionCheck {
            name: "kappa_lower".into(),
            value: kmin,
            threshold: self.kappa1,
            pass: kmin >= self.kappa1 - slack && self.kappa1 > 0.0,
            sequence: vec![],
        });
        checks.push(AssumptionCheck {
            name: "kappa_upper".into(),
            value: kmax,
            threshold: self.kappa2,
            pass: kmax <= self.kappa2 + slack,
            sequence: vec![],
        });
        // (b) Hölder ratio in x at distances in [1e-3, 0.5]
        let mut ratio: f64 = 0.0;
        for (x, z, u) in &samples {
            let dist = 10f64.powf(rng.random_range(-3.0..0.5f64.log10()));
            let dir = draw_dir(&mut rng);
            let x2: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + dist * b).collect();
            let diff = (self.kappa(x, z, u) - self.kappa(&x2, z, u)).abs();
            ratio = ratio.max(diff / dist.powf(self.beta));
        }
        checks.push(AssumptionCheck {
            name: "holder".into(),
            value: ratio,
            threshold: self.kappa3,
            pass: ratio <= self.kappa3 * (1.0 + 1e-9) + 1e-12,
            sequence: vec![],
        });
        // (c) |κ(x, εz, z) − κ(x, z, z)| along ε
        let tol = 1e-6;
        let mut ez = Vec::new();
        let mut ez1 = Vec::new();
        for eps in eps_sequence {
            let mut worst: f64 = 0.0;
            for (x, z, _) in &samples {
                let ezv: Vec<f64> = z.iter().map(|c| c * eps).collect();
                worst = worst.max((self.kappa(x, &ezv, z) - self.kappa(x, z, z)).abs());
            }
            ez.push(worst);
            ez1.push(worst * eps.powf(1.0 - levy.alpha()));
        }
        checks.push(sequence_check("small_scale_limit", ez, tol));
        // (d) ε^{1−α}-scaled version when the singular drift is present
        if levy.alpha() > 1.0 && drift_nonzero {
            checks.push(sequence_check("small_scale_limit_scaled", ez1, tol));
        }
        // (e) κ*(x, z, u, z/ε) → κ0(x, z, u)
        let mut lim = Vec::new();
        for eps in eps_sequence {
            let mut worst: f64 = 0.0;
            for (x, z, u) in &samples {
                let v: Vec<f64> = z.iter().map(|c| c / eps).collect();
                worst = worst.max((self.kappa_star(x, z, u, &v) - self.kappa0(x, z, u)).abs());
            }
            lim.push(worst);
        }
        checks.push(sequence_check("kappa0_limit", lim, 1e-2));
        // periodicity in x and u
        let mut per: f64 = 0.0;
        for (x, z, u) in samples.iter().take(100) {
            let k: Vec<f64> = (0..d).map(|_| rng.random_range(-5i64..=5) as f64).collect();
            let k2: Vec<f64> = (0..d).map(|_| rng.random_range(-5i64..=5) as f64).collect();
            let xs: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a + b).collect();
            let us: Vec<f64> = u.iter().zip(&k2).map(|(a, b)| a + b).collect();
            per = per.max((self.kappa_star(x, z, u, u) - self.kappa_star(&xs, z, &us, u)).abs());
        }
        checks.push(AssumptionCheck { name: "periodicity".into(), value: per, threshold: 1e-10, pass: per <= 1e-10, sequence: vec![] });
        let pass = checks.iter().all(|c| c.pass);
        Ok(AssumptionReport { checks, pass })
    }

    /// Mean of `κ0(x, z, u)` over `u ∈ T^d` (midpoint rule, `n` points per axis).
    pub fn u_average_kappa0(&self, x: &[f64], z: &[f64], n: usize) -> f64 {
        let cells = n.pow(self.d as u32);
        let mut u = vec![0.0; self.d];
        let mut acc = 0.0;
        for idx in 0..cells {
            cell_center(idx, n, self.d, &mut u);
            acc += self.kappa0(x, z, &u);
        }
        acc / cells as f64
    }
}

fn sequence_check(name: &str, seq: Vec<f64>, tol: f64) -> AssumptionCheck {
    let last = seq.last().cloned().unwrap_or(0.0);
    let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    AssumptionCheck { name: name.into(), value: last, threshold: tol, pass: last <= tol && monotone, sequence: seq }
}

/// A kernel with the state phase fixed, seen as a function of the jump `z`.
#[derive(Clone, Debug)]
pub struct BoundKernel<'a> {
    spec: &'a JumpKernelSpec,
    args: KernelArgs,
    cache: [f64; 3],
}

impl BoundKernel<'_> {
    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        let a = &self.args;
        match &self.spec.family {
            KernelFamily::Constant { .. } | KernelFamily::Diffeo { .. } => self.cache[0],
            KernelFamily::Product { u_factor, v_factor, .. } => {
                let r = norm(z);
                let g = if u_factor.is_constant() {
                    u_factor.eval_component(0, z)
                } else {
                    let mut u = [0.0; 8];
                    for (ui, zi) in u.iter_mut().zip(z) {
                        *ui = a.u_scale * zi;
                    }
                    u_factor.eval_component(0, &u[..z.len()])
                };
                let mut dir = [0.0; 8];
                let sgn = a.v_scale.signum();
                for (di, zi) in dir.iter_mut().zip(z) {
                    *di = sgn * zi / r;
                }
                self.cache[0] * g * dir_value(v_factor, &dir[..z.len()])
            }
            KernelFamily::VariableOrder { alpha0, rho_dir, j0, .. } => {
                let r = norm(z);
                let mut dir = [0.0; 8];
                for (di, zi) in dir.iter_mut().zip(z) {
                    *di = zi / r;
                }
                let dir = &dir[..z.len()];
                self.cache[0] * dir_value(rho_dir, dir) / j0.spherical_value(dir) * (a.v_scale * r).powf(alpha0 - self.cache[1])
            }
            KernelFamily::OneDim { length, .. } => {
                let lim = if z[0] > 0.0 { self.cache[1] } else { self.cache[2] };
                lim + (self.cache[0] - lim) * (-(a.v_scale * z[0]).abs() / length).exp()
            }
        }
    }

    fn power(&self) -> f64 {
        match &self.spec.family {
            KernelFamily::VariableOrder { alpha0, .. } => self.cache[1] - alpha0,
            _ => 0.0,
        }
    }
}

impl RayKernel for BoundKernel<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        self.eval(z)
    }

    fn head(&self, dir: &[f64], r0: f64) -> (f64, f64) {
        let z: Vec<f64> = dir.iter().map(|v| v * r0).collect();
        (self.eval(&z), self.power())
    }

    fn tail(&self, dir: &[f64], r: f64) -> (f64, f64) {
        match &self.spec.family {
            KernelFamily::Product { u_factor, v_factor, .. } if !u_factor.is_constant() => {
                (self.cache[0] * field_mean(u_factor) * dir_value(v_factor, dir), 0.0)
            }
            _ => {
                let z: Vec<f64> = dir.iter().map(|v| v * r).collect();
                (self.eval(&z), self.power())
            }
        }
    }

    fn frequency(&self) -> f64 {
        match &self.spec.family {
            KernelFamily::Product { u_factor, .. } if !u_factor.is_constant() => {
                2.0 * PI * u_factor.max_frequency() as f64 * self.args.u_scale * (self.spec.d as f64).sqrt()
            }
            _ => 0.0,
        }
    }

    fn breaks(&self) -> Vec<f64> {
        match &self.spec.family {
            KernelFamily::OneDim { length, .. } => vec![length / self.args.v_scale],
            KernelFamily::VariableOrder { .. } => vec![1.0 / self.args.v_scale],
            _ => vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::FourierTerm;
    use approx::assert_relative_eq;

    fn scalar(d: usize, terms: Vec<(Vec<i64>, f64, f64)>) -> PeriodicField {
        PeriodicField::fourier_scalar(d, terms.into_iter().map(|(k, a, b)| FourierTerm::new(k, a, b)).collect()).unwrap()
    }

    fn su18() -> JumpKernelSpec {
        JumpKernelSpec::new(
            1,
            KernelFamily::Product {
                x_factor: PeriodicField::constant(1, 1.0),
                u_factor: scalar(1, vec![(vec![0], 1.0, 0.0), (vec![1], 0.0, 0.5)]),
                v_factor: PeriodicField::constant(1, 1.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn constant_family() {
        let k = JumpKernelSpec::constant(1, 0.7);
        assert_eq!(k.eval_kappa(&[0.3], &[1.0], &[2.0]).unwrap(), 0.7);
        assert_eq!(k.eval_kappa0(&[0.3], &[1.0], &[2.0]).unwrap(), 0.7);
    }

    #[test]
    fn diffeo_family_is_a_power_of_the_scale() {
        let alpha = 1.5;
        let k = JumpKernelSpec::new(1, KernelFamily::Diffeo { a: PeriodicField::constant(1, 2.0), alpha }).unwrap();
        assert_relative_eq!(k.eval_kappa(&[0.1], &[0.3], &[0.3]).unwrap(), 2f64.powf(alpha), max_relative = 1e-14);
        // direct evaluation of |det ∇τ| |z|^{1+α}/|τ|^{1+α} with τ = z/a
        let (a, z) = (2.0f64, 0.3f64);
        let direct = (1.0 / a).abs() * z.abs().powf(1.0 + alpha) / (z / a).abs().powf(1.0 + alpha);
        assert_relative_eq!(direct, 2f64.powf(alpha), max_relative = 1e-14);
    }

    #[test]
    fn product_family_value() {
        assert_relative_eq!(su18().eval_kappa(&[0.9], &[0.25], &[0.25]).unwrap(), 1.5, max_relative = 1e-14);
        assert_relative_eq!(su18().kappa1, 0.5, max_relative = 1e-2);
        assert_relative_eq!(su18().kappa2, 1.5, max_relative = 1e-2);
    }

    #[test]
    fn onedim_limit_and_variable_order_limit() {
        let k = JumpKernelSpec::new(
            1,
            KernelFamily::OneDim {
                core: PeriodicField::constant(1, 1.0),
                kappa0_plus: scalar(1, vec![(vec![0], 1.5, 0.0), (vec![1], 0.2, 0.0)]),
                kappa0_minus: PeriodicField::constant(1, 0.8),
                length: 1.0,
            },
        )
        .unwrap();
        assert_relative_eq!(k.eval_kappa0(&[0.0], &[2.0], &[1.0]).unwrap(), 1.7, max_relative = 1e-14);
        assert_relative_eq!(k.eval_kappa0(&[0.0], &[-2.0], &[1.0]).unwrap(), 0.8, max_relative = 1e-14);

        let j0 = LevyDensity::symmetric_1d(1.2, 1.0).unwrap();
        let v = JumpKernelSpec::new(
            1,
            KernelFamily::VariableOrder {
                alpha_field: scalar(1, vec![(vec![0], 1.3, 0.0), (vec![1], 0.2, 0.0)]),
                alpha0: 1.2,
                rho_x: PeriodicField::constant(1, 1.0),
                rho_dir: PeriodicField::constant(1, 1.0),
                j0,
                tol: 1e-9,
            },
        )
        .unwrap();
        // α(0) = 1.5 > α0
        assert_eq!(v.eval_kappa0(&[0.0], &[1.0], &[1.0]).unwrap(), 0.0);
        // α(0.5) = max(1.1, 1.2) = α0
        assert_eq!(v.eval_kappa0(&[0.5], &[1.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn validation_of_simple_families() {
        let j = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let eps: Vec<f64> = (1..=20).map(|k| 2f64.powi(-k)).collect();
        let r = JumpKernelSpec::constant(1, 1.0).validate_assumptions(&j, 500, &eps, true, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.get("holder").unwrap().value, 0.0);
        assert_eq!(r.get("small_scale_limit").unwrap().value, 0.0);
        let r = su18().validate_assumptions(&j, 500, &eps, false, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.get("holder").unwrap().value, 0.0);
        let a = scalar(1, vec![(vec![0], 2.0, 0.0), (vec![1], 0.0, 1.0)]);
        let k = JumpKernelSpec::new(1, KernelFamily::Diffeo { a, alpha: 1.5 }).unwrap();
        let r = k.validate_assumptions(&j, 500, &eps, true, 3).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.get("small_scale_limit").unwrap().value < 1e-6);
    }
}
