//! Experiment configuration: model, numerics and run blocks, plus canned presets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corrector::CorrectorOptions;
use crate::error::{Error, Result};
use crate::homogenizer::HomogenizerOptions;
use crate::kernel::{JumpKernelSpec, KernelFamily};
use crate::levy::{LevyDensity, Spherical};
use crate::model::ModelSpec;
use crate::quadrature::RadialQuadrature;
use crate::sim::SimOptions;
use crate::torus::{FourierTerm, PeriodicField};
use crate::verify::VerifyOptions;

/// Canned model presets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    None,
    /// Pure-jump process with kernel `κ*(u) = 1 + 0.5 sin(2πu)`.
    Su18,
    /// SDE `dX = a(X/ε) dZ` driven by symmetric stable noise.
    SdeDiffeo,
    /// Stable-like process whose order varies in space.
    VariableOrder,
    /// One-dimensional stable-like process with one-sided limits `κ0^±`.
    Onedim,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| Error::Config(format!("unknown preset `{name}` (none, su18, sde_diffeo, variable_order, onedim)")))
    }
}

/// Optional overrides of the kernel constants `κ1, κ2, κ3, β`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// Model block: dimension, order, `J`, kernel family and drift fields as Fourier terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    pub alpha: f64,
    pub levy: Spherical,
    pub kernel: KernelFamily,
    /// Per-component Fourier terms of `b` (empty = zero field).
    #[serde(default)]
    pub b: Vec<Vec<FourierTerm>>,
    /// Per-component Fourier terms of `c` (empty = zero field).
    #[serde(default)]
    pub c: Vec<Vec<FourierTerm>>,
    #[serde(default)]
    pub kernel_constants: KernelConstants,
    #[serde(default)]
    pub allow_inactive_drift: bool,
}

impl ModelBlock {
    pub fn build(&self) -> Result<ModelSpec> {
        let levy = LevyDensity::new(self.d, self.alpha, self.levy.clone())?;
        let k = &self.kernel_constants;
        let kernel = JumpKernelSpec::new(self.d, self.kernel.clone())?.with_constants(k.kappa1, k.kappa2, k.kappa3, k.beta);
        let field = |terms: &Vec<Vec<FourierTerm>>| {
            if terms.is_empty() {
                Ok(PeriodicField::zero_vector(self.d))
            } else {
                PeriodicField::fourier_vector(self.d, terms.clone())
            }
        };
        ModelSpec::new(levy, kernel, field(&self.b)?, field(&self.c)?, self.allow_inactive_drift)
    }
}

/// Invariant-measure stage controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantNumerics {
    pub grid_n: usize,
    pub n_chains: usize,
    /// Burn-in; `None` selects `5/ρ̂` from a pilot mixing run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_burn: Option<f64>,
    pub t_run: f64,
    pub pilot_paths: usize,
    pub pilot_t_grid: Vec<f64>,
}

impl Default for InvariantNumerics {
    fn default() -> Self {
        Self { grid_n: 32, n_chains: 64, t_burn: None, t_run: 20.0, pilot_paths: 2000, pilot_t_grid: vec![0.02, 0.04, 0.06, 0.08, 0.1] }
    }
}

/// Numerics block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub sim: SimOptions,
    pub invariant: InvariantNumerics,
    /// `None` selects the dimension-dependent defaults.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrector: Option<CorrectorOptions>,
    pub homogenizer: HomogenizerOptions,
    /// Sample budget of the assumption checks.
    pub validation_samples: usize,
    /// ε sequence of the small-scale-limit checks (empty = `2^{-k}`, k = 1..20).
    pub validation_eps: Vec<f64>,
    pub verify_paths: usize,
    pub ks: bool,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            sim: SimOptions::default(),
            invariant: InvariantNumerics::default(),
            corrector: None,
            homogenizer: HomogenizerOptions::default(),
            validation_samples: 2000,
            validation_eps: Vec::new(),
            verify_paths: 10_000,
            ks: true,
        }
    }
}

/// Run block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    pub eps_list: Vec<f64>,
    pub t_list: Vec<f64>,
    /// Empty selects 17 points per axis in `[−5, 5]^d`.
    pub xi_grid: Vec<Vec<f64>>,
    pub seed_base: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self { eps_list: vec![0.5, 0.25, 0.125], t_list: vec![1.0], xi_grid: Vec::new(), seed_base: 0, output_dir: None }
    }
}

/// A complete experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub run: RunBlock,
}

fn terms(list: &[(i64, f64, f64)]) -> Vec<FourierTerm> {
    list.iter().map(|(k, a, b)| FourierTerm::new(vec![*k], *a, *b)).collect()
}

fn scalar(list: &[(i64, f64, f64)]) -> PeriodicField {
    PeriodicField::fourier_scalar(1, terms(list)).expect("preset field")
}

/// The model block of a preset (`None` has no model).
pub fn preset_model(preset: Preset) -> Option<ModelBlock> {
    let sym = Spherical::OneDim { jplus: 1.0, jminus: 1.0 };
    let block = |alpha: f64, levy: Spherical, kernel: KernelFamily, c: Vec<Vec<FourierTerm>>| ModelBlock {
        d: 1,
        alpha,
        levy,
        kernel,
        b: Vec::new(),
        c,
        kernel_constants: KernelConstants::default(),
        allow_inactive_drift: false,
    };
    match preset {
        Preset::None => None,
        Preset::Su18 => Some(block(
            1.5,
            sym,
            KernelFamily::Product {
                x_factor: scalar(&[(0, 1.0, 0.0)]),
                u_factor: scalar(&[(0, 1.0, 0.0), (1, 0.0, 0.5)]),
                v_factor: scalar(&[(0, 1.0, 0.0)]),
            },
            Vec::new(),
        )),
        Preset::SdeDiffeo => Some(block(
            1.5,
            sym,
            KernelFamily::Diffeo { a: scalar(&[(0, 1.0, 0.0), (1, 0.3, 0.0)]), alpha: 1.5 },
            vec![terms(&[(0, 0.5, 0.0), (1, 0.25, 0.0)])],
        )),
        Preset::VariableOrder => Some(block(
            1.2,
            sym,
            KernelFamily::VariableOrder {
                alpha_field: scalar(&[(0, 1.3, 0.0), (1, 0.2, 0.0)]),
                alpha0: 1.2,
                rho_x: scalar(&[(0, 1.0, 0.0), (1, 0.0, 0.2)]),
                rho_dir: scalar(&[(0, 1.0, 0.0)]),
                j0: LevyDensity::symmetric_1d(1.2, 1.0).expect("preset density"),
                tol: 1e-9,
            },
            Vec::new(),
        )),
        Preset::Onedim => Some(block(
            1.5,
            Spherical::OneDim { jplus: 1.0, jminus: 0.6 },
            KernelFamily::OneDim {
                core: scalar(&[(0, 1.0, 0.0), (1, 0.3, 0.0)]),
                kappa0_plus: scalar(&[(0, 1.2, 0.0), (1, 0.0, 0.2)]),
                kappa0_minus: scalar(&[(0, 0.8, 0.0)]),
                length: 0.5,
            },
            Vec::new(),
        )),
    }
}

impl ExperimentConfig {
    /// A preset with default numerics and run settings.
    pub fn from_preset(preset: Preset) -> Self {
        Self { preset, model: None, numerics: Numerics::default(), run: RunBlock::default() }.expand()
    }

    /// Fill the model block from the preset when the config does not give one.
    /// Expansion is idempotent and touches nothing else.
    pub fn expand(&self) -> Self {
        let mut out = self.clone();
        if out.model.is_none() {
            out.model = preset_model(self.preset);
        }
        out
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        let c = c.expand();
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Schema-level checks beyond what deserialization enforces.
    pub fn check(&self) -> Result<()> {
        let m = self.model.as_ref().ok_or_else(|| Error::Config("no model block and preset `none`".into()))?;
        if !(m.alpha > 0.0 && m.alpha < 2.0) {
            return Err(Error::Config(format!("alpha = {} outside (0, 2)", m.alpha)));
        }
        if m.d == 0 || m.d > 2 {
            return Err(Error::Config(format!("d = {} (supported: 1, 2)", m.d)));
        }
        let eps = &self.run.eps_list;
        if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("eps_list must be nonempty, positive and strictly decreasing".into()));
        }
        if self.run.t_list.is_empty() || self.run.t_list.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("t_list must be nonempty and positive".into()));
        }
        if self.run.xi_grid.iter().any(|x| x.len() != m.d) {
            return Err(Error::Config("xi_grid points must have length d".into()));
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.model.as_ref().ok_or_else(|| Error::Config("no model block".into()))?.build()
    }

    pub fn corrector_options(&self) -> CorrectorOptions {
        let d = self.model.as_ref().map(|m| m.d).unwrap_or(1);
        self.numerics.corrector.clone().unwrap_or_else(|| CorrectorOptions::for_dim(d))
    }

    pub fn quad(&self) -> &RadialQuadrature {
        &self.numerics.sim.quad
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            eps_list: self.run.eps_list.clone(),
            t_list: self.run.t_list.clone(),
            xi_grid: self.run.xi_grid.clone(),
            n_paths: self.numerics.verify_paths,
            ks: self.numerics.ks,
            drift_table_n: 0,
            sim: self.numerics.sim.clone(),
        }
    }

    /// Hex SHA-256 of the canonical (compact) JSON of the expanded config.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(&self.expand()).expect("config serializes");
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_build_and_expand_purely() {
        for p in [Preset::Su18, Preset::SdeDiffeo, Preset::VariableOrder, Preset::Onedim] {
            let c = ExperimentConfig::from_preset(p);
            c.check().unwrap();
            c.model_spec().unwrap();
            let s1 = c.to_json().unwrap();
            let back = ExperimentConfig::from_json(&s1).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.expand().to_json().unwrap(), s1);
        }
    }

    #[test]
    fn schema_errors() {
        assert!(ExperimentConfig::from_json("{}").is_err());
        assert!(ExperimentConfig::from_json(r#"{"preset":"su18","bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"preset":"su18","run":{"eps_list":[0.1,0.2]}}"#).is_err());
        let mut c = ExperimentConfig::from_preset(Preset::Su18);
        c.model.as_mut().unwrap().alpha = 2.5;
        assert!(c.check().is_err());
        assert!(Preset::parse("nope").is_err());
        assert_eq!(Preset::parse("sde_diffeo").unwrap(), Preset::SdeDiffeo);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_preset(Preset::Su18);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.run.seed_base = 7;
        assert_ne!(a.hash(), b.hash());
    }
}
