//! Stage orchestration with artifact reuse: validate → invariant → corrector →
//! homogenize → verify. Every artifact carries the config hash and the seed base.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::corrector::{solve_corrector, Corrector};
use crate::ergodic::{estimate_invariant_measure, mixing_rate_estimate, InvariantEstimate, MixingEstimate};
use crate::error::{Error, Result};
use crate::homogenizer::{homogenize, HomogenizedTriplet};
use crate::kernel::AssumptionReport;
use crate::model::{ModelSpec, ViewKind};
use crate::torus::{check_centering, CenteringReport, EmpiricalMeasure, Measure};
use crate::verify::{convergence_report, ConvergenceReport};

/// Pipeline stages (the CLI subcommands).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Validate,
    Invariant,
    Corrector,
    Homogenize,
    Verify,
    All,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Invariant => "invariant",
            Stage::Corrector => "corrector",
            Stage::Homogenize => "homogenize",
            Stage::Verify => "verify",
            Stage::All => "all",
        }
    }
}

/// Process exit status of a stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    ConfigError = 1,
    AssumptionFailure = 2,
    ToleranceFailure = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Exit status for an error escaping a stage.
    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::CenteringViolated { .. } | Error::UnnormalizedMeasure { .. } => ExitStatus::AssumptionFailure,
            Error::QuadratureNonconvergence(_)
            | Error::BudgetExceeded { .. }
            | Error::KernelOutOfBand { .. }
            | Error::LinearAlgebra(_)
            | Error::Divergent(_)
            | Error::EmptySamples => ExitStatus::ToleranceFailure,
            _ => ExitStatus::ConfigError,
        }
    }
}

/// A stage output together with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub config_hash: String,
    pub seed_base: u64,
    pub stage: String,
    pub data: T,
}

/// Output of the `validate` stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub assumptions: AssumptionReport,
    /// Centering of `b` against the estimated invariant measure (drift-active models only).
    pub centering: Option<CenteringReport>,
    pub pass: bool,
}

/// Output of the `invariant` stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantStage {
    pub mixing: Option<MixingEstimate>,
    pub estimate: InvariantEstimate,
}

/// Default burn-in when the pilot mixing fit fails.
const FALLBACK_BURN_IN: f64 = 1.0;

/// A configured run rooted in an output directory.
pub struct Pipeline {
    config: ExperimentConfig,
    model: ModelSpec,
    out: PathBuf,
    hash: String,
}

impl Pipeline {
    /// `seed` overrides `run.seed_base`; the hash covers the effective config.
    pub fn new(config: ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<Self> {
        let mut config = config.expand();
        if let Some(s) = seed {
            config.run.seed_base = s;
        }
        config.check()?;
        let model = config.model_spec()?;
        fs::create_dir_all(out)?;
        let hash = config.hash();
        Ok(Self { config, model, out: out.to_path_buf(), hash })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn seed_base(&self) -> u64 {
        self.config.run.seed_base
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    fn header(&self) -> String {
        format!("# config_hash={}, seed_base={}\n", self.hash, self.seed_base())
    }

    fn write_json<T: Serialize>(&self, name: &str, stage: &str, data: &T) -> Result<()> {
        let a = Artifact { config_hash: self.hash.clone(), seed_base: self.seed_base(), stage: stage.to_string(), data };
        let mut s = serde_json::to_string_pretty(&a)?;
        s.push('\n');
        fs::write(self.out.join(name), s)?;
        Ok(())
    }

    fn write_csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = self.header().into_bytes();
        body(&mut buf)?;
        fs::write(self.out.join(name), buf)?;
        Ok(())
    }

    /// A previously written artifact, if it exists and belongs to this config and seed.
    pub fn load<T: DeserializeOwned>(&self, name: &str) -> Option<T> {
        let s = fs::read_to_string(self.out.join(name)).ok()?;
        let a: Artifact<T> = serde_json::from_str(&s).ok()?;
        (a.config_hash == self.hash && a.seed_base == self.seed_base()).then_some(a.data)
    }

    fn reuse_or<T: DeserializeOwned>(&self, name: &str, compute: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        match self.load(name) {
            Some(v) => Ok(v),
            None => compute(self),
        }
    }

    fn centering_tol(&self) -> f64 {
        self.config.corrector_options().centering_tol * self.model.b.sup_norm(64)
    }

    /// Kernel assumptions plus, for drift-active models, `∫ b dμ ≈ 0`.
    pub fn validate(&self) -> Result<ValidationReport> {
        let n = &self.config.numerics;
        let eps: Vec<f64> = if n.validation_eps.is_empty() { (1..=20).map(|k| 2f64.powi(-k)).collect() } else { n.validation_eps.clone() };
        let drift = self.model.drift_active() && !self.model.b.is_zero();
        let assumptions = self.model.kernel.validate_assumptions(&self.model.levy, n.validation_samples, &eps, drift, self.seed_base())?;
        let centering = if drift {
            let inv = self.reuse_or("invariant.json", |p| p.invariant())?;
            let mu = inv.estimate.measure.normalized()?;
            Some(check_centering(&self.model.b, &Measure::Empirical(&mu), self.centering_tol())?)
        } else {
            None
        };
        let pass = assumptions.pass && centering.as_ref().map(|c| c.pass).unwrap_or(true);
        let r = ValidationReport { assumptions, centering, pass };
        self.write_json("validation.json", "validate", &r)?;
        Ok(r)
    }

    /// Pilot mixing run (unless `t_burn` is given) and the occupation-measure histogram.
    pub fn invariant(&self) -> Result<InvariantStage> {
        let inv = &self.config.numerics.invariant;
        let sim = &self.config.numerics.sim;
        let seed = self.seed_base();
        let (mixing, t_burn) = match inv.t_burn {
            Some(t) => (None, t),
            None => {
                let m = mixing_rate_estimate(&self.model, &inv.pilot_t_grid, inv.pilot_paths, None, sim, seed)?;
                let t = m.burn_in().unwrap_or(FALLBACK_BURN_IN);
                (Some(m), t)
            }
        };
        let estimate = estimate_invariant_measure(&self.model, ViewKind::Cell, t_burn, inv.t_run, inv.grid_n, inv.n_chains, sim, seed)?;
        let stage = InvariantStage { mixing, estimate };
        self.write_json("invariant.json", "invariant", &stage)?;
        self.write_csv("invariant.csv", |b| stage.estimate.write_csv(b))?;
        Ok(stage)
    }

    fn mu(&self) -> Result<EmpiricalMeasure> {
        let inv = self.reuse_or("invariant.json", |p| p.invariant())?;
        inv.estimate.measure.normalized()
    }

    /// The corrector (zero when the drift is inactive or `b ≡ 0`).
    pub fn corrector(&self) -> Result<Corrector> {
        let opts = self.config.corrector_options();
        let d = self.model.dim();
        let c = if self.model.drift_active() && !self.model.b.is_zero() {
            let mu = self.mu()?;
            solve_corrector(&self.model, &mu, &opts)?
        } else {
            Corrector::zero(d, opts.grid_n)
        };
        self.write_json("corrector.json", "corrector", &c)?;
        self.write_csv("corrector.csv", |b| c.write_csv(b))?;
        Ok(c)
    }

    pub fn homogenize(&self) -> Result<HomogenizedTriplet> {
        let mu = self.mu()?;
        let corr: Corrector = self.reuse_or("corrector.json", |p| p.corrector())?;
        let t = homogenize(&self.model, &mu, Some(&corr), &self.config.numerics.homogenizer)?;
        self.write_json("triplet.json", "homogenize", &t)?;
        Ok(t)
    }

    pub fn verify(&self) -> Result<ConvergenceReport> {
        let triplet: HomogenizedTriplet = self.reuse_or("triplet.json", |p| p.homogenize())?;
        let corr: Corrector = self.reuse_or("corrector.json", |p| p.corrector())?;
        let r = convergence_report(&self.model, &triplet, Some(&corr), &self.config.verify_options(), self.seed_base())?;
        self.write_json("report.json", "verify", &r)?;
        self.write_csv("report.csv", |b| r.write_csv(b))?;
        Ok(r)
    }

    /// Run one stage; `Err` carries configuration-level problems, numerical outcomes map to the status.
    pub fn run(&self, stage: Stage) -> Result<ExitStatus> {
        let status = |r: Result<ExitStatus>| r.or_else(|e| Ok::<_, Error>(ExitStatus::from_error(&e)));
        match stage {
            Stage::Validate => status(self.validate().map(|r| if r.pass { ExitStatus::Pass } else { ExitStatus::AssumptionFailure })),
            Stage::Invariant => status(self.invariant().map(|_| ExitStatus::Pass)),
            Stage::Corrector => status(self.corrector().map(|c| if c.pass { ExitStatus::Pass } else { ExitStatus::ToleranceFailure })),
            Stage::Homogenize => status(self.homogenize().and_then(|t| {
                let k = &self.model.kernel;
                t.check_bounds(k.kappa1, k.kappa2).map(|_| ExitStatus::Pass)
            })),
            Stage::Verify => status(self.verify().map(|r| if r.passed() { ExitStatus::Pass } else { ExitStatus::ToleranceFailure })),
            Stage::All => {
                for s in [Stage::Validate, Stage::Invariant, Stage::Corrector, Stage::Homogenize, Stage::Verify] {
                    let st = self.run(s)?;
                    if st != ExitStatus::Pass {
                        return Ok(st);
                    }
                }
                Ok(ExitStatus::Pass)
            }
        }
    }

    /// Write the effective config next to the artifacts.
    pub fn write_config(&self) -> Result<()> {
        let mut s = self.config.to_json()?;
        s.push('\n');
        fs::write(self.out.join("config.json"), s)?;
        Ok(())
    }
}
