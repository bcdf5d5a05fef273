//! The homogenized Lévy triplet `(b̄, 0, κ̄·J)` and its Lévy–Khintchine exponent.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corrector::Corrector;
use crate::error::{check_dim, invalid, Error, Result};
use crate::kernel::{DominatingProfile, JumpKernelSpec};
use crate::levy::{direction_fraction, levy_integral, norm, radial_moment, Compensation, DirectionalKernel, LevyDensity, RayKernel};
use crate::model::{JumpGenerator, ModelSpec};
use crate::quadrature::{power_integral, RadialQuadrature};
use crate::sim::{NoObserver, PathRecord, SimOptions, Simulator};
use crate::torus::{cell_center, EmpiricalMeasure, Measure, PeriodicField};

/// Homogenized triplet. `kappa_bar` is tabulated at `directions` (d = 1: `+1, −1`;
/// d = 2: equispaced angles `2πj/m`) and interpolated between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTriplet {
    pub alpha: f64,
    pub b_bar: Vec<f64>,
    pub c_bar: Option<Vec<f64>>,
    pub kappa_bar: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub truncation: String,
    pub levy: LevyDensity,
}

impl HomogenizedTriplet {
    pub fn dim(&self) -> usize {
        self.levy.dim()
    }

    /// Triplet with a constant `κ̄ = value` and drift `b̄`.
    pub fn constant(levy: LevyDensity, value: f64, b_bar: Vec<f64>) -> Result<Self> {
        check_dim(levy.dim(), b_bar.len())?;
        let directions = table_directions(levy.dim(), 64)?;
        Ok(Self {
            alpha: levy.alpha(),
            b_bar,
            c_bar: None,
            kappa_bar: vec![value; directions.len()],
            directions,
            truncation: "unit_ball".into(),
            levy,
        })
    }

    /// `κ̄(z)` (depends on the direction only).
    pub fn kappa_bar_at(&self, z: &[f64]) -> f64 {
        let r = norm(z);
        if self.dim() == 1 {
            return if z[0] > 0.0 { self.kappa_bar[0] } else { self.kappa_bar[1] };
        }
        let m = self.kappa_bar.len();
        let dir: Vec<f64> = z.iter().map(|v| v / r).collect();
        let s = direction_fraction(&dir) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        let t = s - i as f64;
        (1.0 - t) * self.kappa_bar[i] + t * self.kappa_bar[(i + 1) % m]
    }

    /// Triplet with every `κ̄` value shifted by `delta` (negative controls).
    pub fn perturbed(&self, delta: f64) -> Self {
        let mut t = self.clone();
        t.kappa_bar.iter_mut().for_each(|k| *k += delta);
        t
    }

    /// `κ1 ≤ κ̄ ≤ κ2` at every tabulated direction.
    pub fn check_bounds(&self, kappa1: f64, kappa2: f64) -> Result<()> {
        let slack = 1e-9 * (1.0 + kappa2.abs());
        for k in &self.kappa_bar {
            if *k < kappa1 - slack || *k > kappa2 + slack {
                return Err(Error::KernelOutOfBand { value: *k, lo: kappa1, hi: kappa2 });
            }
        }
        Ok(())
    }

    /// The limit kernel along rays.
    pub fn kernel(&self) -> DirectionalKernel<impl Fn(&[f64]) -> f64 + '_> {
        DirectionalKernel(move |dir: &[f64]| self.kappa_bar_at(dir))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn table_directions(d: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    match d {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..m)
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()),
        _ => Err(Error::Unsupported(format!("homogenization in dimension {d}"))),
    }
}

/// Controls of the homogenizer quadratures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomogenizerOptions {
    /// Midpoint nodes per axis for the `u` average.
    pub u_nodes: usize,
    /// Number of tabulated directions in d = 2.
    pub directions: usize,
    pub quad: RadialQuadrature,
}

impl Default for HomogenizerOptions {
    fn default() -> Self {
        Self { u_nodes: 64, directions: 64, quad: RadialQuadrature::default() }
    }
}

fn mu_cells(mu: &EmpiricalMeasure) -> Result<Vec<(Vec<f64>, f64)>> {
    let total = mu.total();
    if !(total > 0.0) {
        return Err(Error::EmptySamples);
    }
    if !mu.is_normalized() && (total - 1.0).abs() > 1e-9 {
        return Err(Error::UnnormalizedMeasure { total });
    }
    let d = mu.dim();
    let n = mu.resolution();
    let mut x = vec![0.0; d];
    Ok(mu
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| {
            cell_center(i, n, d, &mut x);
            (x.clone(), w / total)
        })
        .collect())
}

/// `κ̄(z) = ∫∫ κ0(x, z, u) du μ(dx)`: midpoint rule in `u`, μ-weighted cell centres in `x`.
pub fn homogenized_kappa(spec: &JumpKernelSpec, mu: &EmpiricalMeasure, z: &[f64], u_nodes: usize) -> Result<f64> {
    check_dim(spec.dim(), z.len())?;
    check_dim(spec.dim(), mu.dim())?;
    if norm(z) == 0.0 {
        return Err(invalid("z", "must be nonzero"));
    }
    let cells = mu_cells(mu)?;
    Ok(cells.iter().map(|(x, w)| w * spec.u_average_kappa0(x, z, u_nodes)).sum())
}

/// `(b̄, c̄)`: for α < 1 `b̄ = ∫_B κ̄ z J dz`; for α = 1 `b̄ = 0`; for α ∈ (1,2)
/// `b̄ = c̄ = ∫ (I + ∇b̂) c dμ + ∫_{B^c} (∫∫ ∇b̂(x) κ0(x,z,u) du μ(dx)) z J(z) dz`.
pub fn homogenized_drift(
    model: &ModelSpec,
    mu: &EmpiricalMeasure,
    corrector: Option<&Corrector>,
    kappa_bar: &HomogenizedTriplet,
    opts: &HomogenizerOptions,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let d = model.dim();
    let alpha = model.alpha();
    if alpha < 1.0 {
        let b = radial_moment(&model.levy, &kappa_bar.kernel(), 0.0, 1.0, &opts.quad)?;
        return Ok((b, None));
    }
    if alpha == 1.0 {
        return Ok((vec![0.0; d], None));
    }
    let zero_corrector;
    let corr = match corrector {
        Some(c) => c,
        None => {
            if !model.b.is_zero() {
                return Err(invalid("corrector", "required when α ∈ (1,2) and b ≠ 0"));
            }
            zero_corrector = Corrector::zero(d, 4);
            &zero_corrector
        }
    };
    let cells = mu_cells(mu)?;
    let mut cbar = vec![0.0; d];
    // ∫ (I + ∇b̂) c dμ
    for (x, w) in &cells {
        let c: Vec<f64> = (0..d).map(|i| model.c.eval_component(i, x)).collect();
        for i in 0..d {
            let g = corr.field.gradient_component(i, x);
            cbar[i] += w * (c[i] + g.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    // large-jump term; κ0 depends on z through its direction only
    let nodes = model.levy.angular_nodes(opts.quad.angular_nodes)?;
    let radial = power_integral(1.0, f64::INFINITY, -alpha);
    let grads: Vec<Vec<Vec<f64>>> = cells.iter().map(|(x, _)| (0..d).map(|i| corr.field.gradient_component(i, x)).collect()).collect();
    for node in &nodes {
        if node.weight == 0.0 {
            continue;
        }
        let mut m = vec![0.0; d];
        for ((x, w), g) in cells.iter().zip(&grads) {
            let k = model.kernel.u_average_kappa0(x, &node.dir, opts.u_nodes);
            for i in 0..d {
                m[i] += w * k * g[i].iter().zip(&node.dir).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        for i in 0..d {
            cbar[i] += node.weight * m[i] * radial;
        }
    }
    Ok((cbar.clone(), Some(cbar)))
}

/// Assemble the triplet from the model, the invariant measure and the corrector.
pub fn homogenize(model: &ModelSpec, mu: &EmpiricalMeasure, corrector: Option<&Corrector>, opts: &HomogenizerOptions) -> Result<HomogenizedTriplet> {
    let d = model.dim();
    let directions = table_directions(d, opts.directions)?;
    let mut kappa_bar = Vec::with_capacity(directions.len());
    for dir in &directions {
        let k1 = homogenized_kappa(&model.kernel, mu, dir, opts.u_nodes)?;
        let far: Vec<f64> = dir.iter().map(|v| 3.7 * v).collect();
        let k2 = homogenized_kappa(&model.kernel, mu, &far, opts.u_nodes)?;
        if (k1 - k2).abs() > 1e-10 * (1.0 + k1.abs()) {
            return Err(Error::Unsupported("κ0 depends on |z|; radial tabulation of κ̄ is not implemented".into()));
        }
        kappa_bar.push(k1);
    }
    let mut triplet = HomogenizedTriplet {
        alpha: model.alpha(),
        b_bar: vec![0.0; d],
        c_bar: None,
        kappa_bar,
        directions,
        truncation: "unit_ball".into(),
        levy: model.levy.clone(),
    };
    let (b, c) = homogenized_drift(model, mu, corrector, &triplet, opts)?;
    triplet.b_bar = b;
    triplet.c_bar = c;
    Ok(triplet)
}

/// `ψ̄(ξ) = i b̄·ξ + ∫ (e^{iξ·z} − 1 − iξ·z 1_B(z)) κ̄(z) J(z) dz`.
pub fn levy_exponent(triplet: &HomogenizedTriplet, xi: &[f64], quad: &RadialQuadrature) -> Result<Complex64> {
    check_dim(triplet.dim(), xi.len())?;
    if xi.iter().all(|v| *v == 0.0) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let jump = levy_integral(&triplet.levy, &triplet.kernel(), Compensation::Ball(1.0), xi, None, quad)?;
    let drift: f64 = triplet.b_bar.iter().zip(xi).map(|(a, b)| a * b).sum();
    Ok(jump + Complex64::new(0.0, drift))
}

/// The limit Lévy process as a simulator input: drift `b̄`, kernel `κ̄`, 1_B compensation.
pub struct LimitGenerator<'a> {
    triplet: &'a HomogenizedTriplet,
    kmax: f64,
}

impl<'a> LimitGenerator<'a> {
    pub fn new(triplet: &'a HomogenizedTriplet) -> Result<Self> {
        if triplet.kappa_bar.iter().any(|k| !(*k >= 0.0)) {
            return Err(invalid("kappa_bar", "must be nonnegative"));
        }
        Ok(Self { triplet, kmax: triplet.kappa_bar.iter().cloned().fold(0.0, f64::max) })
    }
}

struct LimitRay<'a>(&'a HomogenizedTriplet);

impl RayKernel for LimitRay<'_> {
    fn value(&self, z: &[f64]) -> f64 {
        self.0.kappa_bar_at(z)
    }
}

impl JumpGenerator for LimitGenerator<'_> {
    fn dim(&self) -> usize {
        self.triplet.dim()
    }
    fn levy(&self) -> &LevyDensity {
        &self.triplet.levy
    }
    fn on_torus(&self) -> bool {
        false
    }
    fn compensation(&self) -> Compensation {
        Compensation::Ball(1.0)
    }
    fn period(&self) -> f64 {
        1.0
    }
    fn kernel_value(&self, _x: &[f64], z: &[f64]) -> f64 {
        self.triplet.kappa_bar_at(z)
    }
    fn ray_kernel(&self, _x: &[f64]) -> Box<dyn RayKernel + '_> {
        Box::new(LimitRay(self.triplet))
    }
    fn dominating(&self) -> DominatingProfile {
        DominatingProfile::constant(self.kmax)
    }
    fn drift(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.triplet.b_bar);
    }
    fn drift_is_state_dependent(&self) -> bool {
        false
    }
    fn kernel_is_state_dependent(&self) -> bool {
        false
    }
    fn tag(&self) -> String {
        "limit".into()
    }
}

/// One path of the limit Lévy process from 0.
pub fn simulate_limit_levy(triplet: &HomogenizedTriplet, horizon: f64, opts: &SimOptions, rng: &mut ChaCha8Rng) -> Result<PathRecord> {
    let gen = LimitGenerator::new(triplet)?;
    let sim = Simulator::new(&gen, opts)?;
    sim.simulate(&vec![0.0; triplet.dim()], horizon, &[horizon], rng, &mut NoObserver)
}

/// Check of `∫ b dμ` for a measure, as used before the corrector stage.
pub fn drift_centering(model: &ModelSpec, mu: &EmpiricalMeasure) -> Result<Vec<f64>> {
    let m = if mu.is_normalized() { Measure::Empirical(mu) } else { Measure::EmpiricalNormalizing(mu) };
    model.b.integrate(&m)
}

/// Zero-order helper: a vector field `c ≡ value`.
pub fn constant_drift(values: &[f64]) -> PeriodicField {
    PeriodicField::constant_vector(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelFamily;
    use crate::rng::stream_rng;
    use crate::torus::FourierTerm;
    use approx::assert_relative_eq;

    fn su18_kernel() -> JumpKernelSpec {
        JumpKernelSpec::new(
            1,
            KernelFamily::Product {
                x_factor: PeriodicField::constant(1, 1.0),
                u_factor: PeriodicField::fourier_scalar(1, vec![FourierTerm::new(vec![0], 1.0, 0.0), FourierTerm::new(vec![1], 0.0, 0.5)]).unwrap(),
                v_factor: PeriodicField::constant(1, 1.0),
            },
        )
        .unwrap()
    }

    #[test]
    fn pure_kernel_example_averages_to_one() {
        let mu = EmpiricalMeasure::uniform(1, 16).unwrap();
        for z in [0.3, -2.0, 17.0] {
            assert_relative_eq!(homogenized_kappa(&su18_kernel(), &mu, &[z], 64).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_kernel_and_drift_give_constant_triplet() {
        let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let m = ModelSpec::new(levy, JumpKernelSpec::constant(1, 0.7), PeriodicField::zero_vector(1), constant_drift(&[0.4]), false).unwrap();
        let mu = EmpiricalMeasure::uniform(1, 8).unwrap();
        let t = homogenize(&m, &mu, None, &HomogenizerOptions::default()).unwrap();
        assert_relative_eq!(t.kappa_bar[0], 0.7, epsilon = 1e-14);
        assert_relative_eq!(t.b_bar[0], 0.4, epsilon = 1e-14);
        assert_relative_eq!(t.c_bar.unwrap()[0], 0.4, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_small_alpha_has_zero_drift() {
        let levy = LevyDensity::symmetric_1d(0.7, 1.0).unwrap();
        let m = ModelSpec::driftless(levy, JumpKernelSpec::constant(1, 1.0)).unwrap();
        let mu = EmpiricalMeasure::uniform(1, 8).unwrap();
        let t = homogenize(&m, &mu, None, &HomogenizerOptions::default()).unwrap();
        assert!(t.b_bar[0].abs() < 1e-12);
    }

    #[test]
    fn exponent_closed_form_and_hermitian() {
        let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let t = HomogenizedTriplet::constant(levy, 1.0, vec![0.0]).unwrap();
        let q = RadialQuadrature::default();
        assert_eq!(levy_exponent(&t, &[0.0], &q).unwrap(), Complex64::new(0.0, 0.0));
        let c = 2.0 * 4.0 * std::f64::consts::PI.sqrt() / 3.0 * 0.5f64.sqrt();
        let p = levy_exponent(&t, &[1.0], &q).unwrap();
        assert_relative_eq!(p.re, -c, max_relative = 1e-6);
        assert!(p.im.abs() < 1e-10);
        let t2 = HomogenizedTriplet::constant(LevyDensity::new(1, 1.5, crate::levy::Spherical::OneDim { jplus: 1.0, jminus: 0.3 }).unwrap(), 1.0, vec![0.2]).unwrap();
        let a = levy_exponent(&t2, &[1.3], &q).unwrap();
        let b = levy_exponent(&t2, &[-1.3], &q).unwrap();
        assert!((a - b.conj()).norm() < 1e-10);
    }

    #[test]
    fn degenerate_triplet_gives_constant_path() {
        let levy = LevyDensity::symmetric_1d(1.5, 1.0).unwrap();
        let t = HomogenizedTriplet::constant(levy, 0.0, vec![0.0]).unwrap();
        let p = simulate_limit_levy(&t, 1.0, &SimOptions::default(), &mut stream_rng(1, "l", 0)).unwrap();
        assert_eq!(p.end, vec![0.0]);
        assert_eq!(p.n_proposals, 0);
    }
}
