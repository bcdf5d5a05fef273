//! Generator data `(J, κ, b, c)` and the three generator views used throughout:
//! the ε-scale process on `R^d`, the cell process on the torus, and the rescaled
//! cell process at scale ε.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::kernel::{BoundKernel, DominatingProfile, JumpKernelSpec, KernelArgs};
use crate::levy::{check_sphere_centering, Compensation, LevyDensity, RayKernel};
use crate::torus::{cell_center, Arity, PeriodicField};

/// Generator data of the ε-scale process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub levy: LevyDensity,
    pub kernel: JumpKernelSpec,
    pub b: PeriodicField,
    pub c: PeriodicField,
}

impl ModelSpec {
    /// Validate and assemble a model. Nonzero drift fields with `α ≤ 1` are rejected
    /// unless `allow_inactive_drift` is set (they are then ignored); for `α = 1` the
    /// kernel must be centred on spheres.
    pub fn new(levy: LevyDensity, kernel: JumpKernelSpec, b: PeriodicField, c: PeriodicField, allow_inactive_drift: bool) -> Result<Self> {
        let d = levy.dim();
        check_dim(d, kernel.dim())?;
        for (f, name) in [(&b, "b"), (&c, "c")] {
            check_dim(d, f.dim())?;
            if f.arity() != Arity::Vector || f.n_components() != d {
                return Err(invalid(name, "must be a d-component vector field"));
            }
        }
        let alpha = levy.alpha();
        if alpha <= 1.0 && !allow_inactive_drift && !(b.is_zero() && c.is_zero()) {
            return Err(invalid("b", "drift fields are inactive for α ≤ 1; set allow_inactive_drift to ignore them"));
        }
        if alpha == 1.0 {
            let n: usize = if d == 1 { 16 } else { 6 };
            let mut x = vec![0.0; d];
            for idx in 0..n.pow(d as u32) {
                cell_center(idx, n, d, &mut x);
                for (r1, r2) in [(0.3, 0.3), (1.0, 2.5), (2.0, 0.7)] {
                    let res = check_sphere_centering(&levy, &kernel, &x, r1, r2, 64)?;
                    if res > 1e-8 {
                        return Err(invalid("kernel", format!("sphere centering fails for α = 1 (residual {res:.3e})")));
                    }
                }
            }
        }
        Ok(Self { levy, kernel, b, c })
    }

    /// Model with zero drift fields.
    pub fn driftless(levy: LevyDensity, kernel: JumpKernelSpec) -> Result<Self> {
        let d = levy.dim();
        Self::new(levy, kernel, PeriodicField::zero_vector(d), PeriodicField::zero_vector(d), false)
    }

    pub fn dim(&self) -> usize {
        self.levy.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.levy.alpha()
    }

    /// `1_{(1,2)}(α)`.
    pub fn drift_active(&self) -> bool {
        self.alpha() > 1.0 && self.alpha() < 2.0
    }

    pub fn with_drift(&self, b: PeriodicField, c: PeriodicField) -> Result<Self> {
        Self::new(self.levy.clone(), self.kernel.clone(), b, c, false)
    }

    pub fn view(&self, kind: ViewKind) -> Result<GeneratorView<'_>> {
        GeneratorView::new(self, kind)
    }
}

/// Which generator of the model is simulated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    /// `A^ε` on `R^d`: kernel `κ(x/ε, z, z/ε)`, drift `ε^{1−α} b(x/ε) + c(x/ε)`, 1_B compensation.
    Eps(f64),
    /// `Ã` on the torus: kernel `κ(x, z, z)`, drift `b(x)`, full compensation for α ∈ (1,2).
    Cell,
    /// `Ã^ε` on the torus: kernel `κ(x, εz, z)`, drift `b + ε^{α−1}c`, compensation on `|z| < 1/ε`.
    CellEps(f64),
}

/// Everything the path simulator needs to know about a generator.
pub trait JumpGenerator: Sync {
    fn dim(&self) -> usize;
    fn levy(&self) -> &LevyDensity;
    /// Wrapped state on `[0,1)^d` (with an unwrapped companion).
    fn on_torus(&self) -> bool;
    fn compensation(&self) -> Compensation;
    /// Spatial period of the coefficients.
    fn period(&self) -> f64;
    /// Kernel value `k(x, z)` of the jump `z` from state `x`.
    fn kernel_value(&self, x: &[f64], z: &[f64]) -> f64;
    /// The kernel at state `x` along rays.
    fn ray_kernel(&self, x: &[f64]) -> Box<dyn RayKernel + '_>;
    /// Uniform envelope of the kernel.
    fn dominating(&self) -> DominatingProfile;
    /// Drift field (without any jump compensation), written into `out`.
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn drift_is_state_dependent(&self) -> bool;
    fn kernel_is_state_dependent(&self) -> bool;
    /// Label stored in path records.
    fn tag(&self) -> String;
}

/// A view of a [`ModelSpec`] as one specific generator.
#[derive(Clone, Debug)]
pub struct GeneratorView<'a> {
    model: &'a ModelSpec,
    kind: ViewKind,
    args: KernelArgs,
    comp: Compensation,
    b_scale: f64,
    c_scale: f64,
}

impl<'a> GeneratorView<'a> {
    pub fn new(model: &'a ModelSpec, kind: ViewKind) -> Result<Self> {
        let alpha = model.alpha();
        let active = model.drift_active();
        let (args, comp, b_scale, c_scale) = match kind {
            ViewKind::Eps(eps) => {
                if !(eps > 0.0) {
                    return Err(invalid("eps", "must be positive"));
                }
                let comp = if alpha >= 1.0 { Compensation::Ball(1.0) } else { Compensation::None };
                let (bs, cs) = if active { (eps.powf(1.0 - alpha), 1.0) } else { (0.0, 0.0) };
                (KernelArgs { z_scale: 1.0, u_scale: 1.0 / eps, v_scale: 1.0 / eps }, comp, bs, cs)
            }
            ViewKind::Cell => {
                let comp = if active {
                    Compensation::All
                } else if alpha == 1.0 {
                    Compensation::Ball(1.0)
                } else {
                    Compensation::None
                };
                let bs = if active { 1.0 } else { 0.0 };
                (KernelArgs { z_scale: 1.0, u_scale: 1.0, v_scale: 1.0 }, comp, bs, 0.0)
            }
            ViewKind::CellEps(eps) => {
                if !(eps > 0.0) {
                    return Err(invalid("eps", "must be positive"));
                }
                let comp = if alpha >= 1.0 { Compensation::Ball(1.0 / eps) } else { Compensation::None };
                let (bs, cs) = if active { (1.0, eps.powf(alpha - 1.0)) } else { (0.0, 0.0) };
                (KernelArgs { z_scale: eps, u_scale: 1.0, v_scale: 1.0 }, comp, bs, cs)
            }
        };
        Ok(Self { model, kind, args, comp, b_scale, c_scale })
    }

    pub fn model(&self) -> &ModelSpec {
        self.model
    }

    pub fn kind(&self) -> ViewKind {
        self.kind
    }

    pub fn kernel_args(&self) -> KernelArgs {
        self.args
    }

    /// Phase of the coefficients at state `x` (`x/ε` for the ε-scale view).
    #[inline]
    pub fn phase(&self, x: &[f64], out: &mut [f64]) {
        let s = match self.kind {
            ViewKind::Eps(eps) => 1.0 / eps,
            _ => 1.0,
        };
        for (o, v) in out.iter_mut().zip(x) {
            *o = v * s;
        }
    }

    pub fn bound_kernel(&self, x: &[f64]) -> BoundKernel<'a> {
        let mut y = vec![0.0; x.len()];
        self.phase(x, &mut y);
        self.model.kernel.bind(self.args, &y)
    }
}

impl JumpGenerator for GeneratorView<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn levy(&self) -> &LevyDensity {
        &self.model.levy
    }

    fn on_torus(&self) -> bool {
        !matches!(self.kind, ViewKind::Eps(_))
    }

    fn compensation(&self) -> Compensation {
        self.comp
    }

    fn period(&self) -> f64 {
        match self.kind {
            ViewKind::Eps(eps) => eps,
            _ => 1.0,
        }
    }

    #[inline]
    fn kernel_value(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut y = [0.0; 8];
        let y = &mut y[..x.len()];
        self.phase(x, y);
        self.model.kernel.bind(self.args, y).eval(z)
    }

    fn ray_kernel(&self, x: &[f64]) -> Box<dyn RayKernel + '_> {
        Box::new(self.bound_kernel(x))
    }

    fn dominating(&self) -> DominatingProfile {
        self.model.kernel.dominating(self.args)
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if self.b_scale == 0.0 && self.c_scale == 0.0 {
            return;
        }
        let mut y = [0.0; 8];
        let y = &mut y[..x.len()];
        self.phase(x, y);
        for (i, o) in out.iter_mut().enumerate() {
            if self.b_scale != 0.0 {
                *o += self.b_scale * self.model.b.eval_component(i, y);
            }
            if self.c_scale != 0.0 {
                *o += self.c_scale * self.model.c.eval_component(i, y);
            }
        }
    }

    fn drift_is_state_dependent(&self) -> bool {
        (self.b_scale != 0.0 && !self.model.b.is_constant()) || (self.c_scale != 0.0 && !self.model.c.is_constant())
    }

    fn kernel_is_state_dependent(&self) -> bool {
        self.model.kernel.is_state_dependent()
    }

    fn tag(&self) -> String {
        match self.kind {
            ViewKind::Eps(eps) => format!("eps={eps}"),
            ViewKind::Cell => "cell".into(),
            ViewKind::CellEps(eps) => format!("cell_eps={eps}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::FourierTerm;

    fn sine_vector(a: f64) -> PeriodicField {
        PeriodicField::fourier_vector(1, vec![vec![FourierTerm::new(vec![1], 0.0, a)]]).unwrap()
    }

    #[test]
    fn inactive_drift_is_rejected_without_override() {
        let levy = LevyDensity::symmetric_1d(0.8, 1.0).unwrap();
        let k = JumpKernelSpec::constant(1, 1.0);
        assert!(ModelSpec::new(levy.clone(), k.clone(), sine_vector(1.0), PeriodicField::zero_vector(1), false).is_err());
        let m = ModelSpec::new(levy, k, sine_vector(1.0), PeriodicField::zero_vector(1), true).unwrap();
        let v = m.view(ViewKind::Eps(0.5)).unwrap();
        let mut out = [1.0];
        v.drift(&[0.1], &mut out);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn view_drifts_follow_the_scalings() {
        let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let m = ModelSpec::new(levy, JumpKernelSpec::constant(1, 1.0), sine_vector(1.0), sine_vector(2.0), false).unwrap();
        let mut out = [0.0];
        m.view(ViewKind::Eps(0.25)).unwrap().drift(&[0.25 * 0.25], &mut out);
        assert!((out[0] - (0.25f64.powf(-0.5) + 2.0)).abs() < 1e-12);
        m.view(ViewKind::Cell).unwrap().drift(&[0.25], &mut out);
        assert!((out[0] - 1.0).abs() < 1e-12);
        m.view(ViewKind::CellEps(0.25)).unwrap().drift(&[0.25], &mut out);
        assert!((out[0] - (1.0 + 2.0 * 0.25f64.powf(0.5))).abs() < 1e-12);
        assert_eq!(m.view(ViewKind::Cell).unwrap().compensation(), Compensation::All);
        assert_eq!(m.view(ViewKind::Eps(0.5)).unwrap().compensation(), Compensation::Ball(1.0));
        assert_eq!(m.view(ViewKind::CellEps(0.5)).unwrap().compensation(), Compensation::Ball(2.0));
    }

    #[test]
    fn alpha_one_requires_sphere_centering() {
        let levy = LevyDensity::new(1, 1.0, crate::levy::Spherical::OneDim { jplus: 1.0, jminus: 0.5 }).unwrap();
        assert!(ModelSpec::driftless(levy.clone(), JumpKernelSpec::constant(1, 1.0)).is_err());
        let sym = LevyDensity::symmetric_1d(1.0, 1.0).unwrap();
        assert!(ModelSpec::driftless(sym, JumpKernelSpec::constant(1, 1.0)).is_ok());
    }
}
