//! Run configuration loaded from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cross_section::{CrossSectionModel, CrossSectionSpec};
use crate::energy_law::EnergyLaw;
use crate::equilibrium::{Maxwellian, MaxwellianSpec};
use crate::error::{Error, Result};
use crate::linearized_op::{LinearizedContext, QuadratureSettings};
use crate::mc::MonteCarloConfig;

/// Environment variable naming the directory searched for relative config paths.
pub const CONFIG_DIR_VAR: &str = "RESONANT_CONFIG_DIR";

/// Everything a verification run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "EnergyLaw::lebesgue")]
    pub law: EnergyLaw,
    #[serde(default)]
    pub cross_section: CrossSectionSpec,
    #[serde(default)]
    pub maxwellian: MaxwellianSpec,
    #[serde(default)]
    pub mc: MonteCarloConfig,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default)]
    pub suite: SuiteSettings,
    /// Directory for the JSON report and CSV tables; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            law: EnergyLaw::lebesgue(),
            cross_section: CrossSectionSpec::default(),
            maxwellian: MaxwellianSpec::default(),
            mc: MonteCarloConfig::default(),
            quadrature: QuadratureSettings::default(),
            suite: SuiteSettings::default(),
            out: None,
        }
    }
}

/// Suite selection and the sizes of the individual suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSettings {
    /// Restricts a subcommand to one of its parts (see `--suite`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Random collisions in the conservation check.
    pub collisions: u64,
    /// Evaluation points per model in the kernel-equivalence suite.
    pub evaluation_points: usize,
    /// Energy-law exponents of the polyatomic equivalence models.
    pub equivalence_alphas: Vec<f64>,
    /// `γ` values of the polyatomic equivalence models.
    pub equivalence_gammas: Vec<f64>,
    /// Random positive densities in the H-theorem suite.
    pub densities: usize,
    /// Tuples in the tensor-bound check.
    pub tensor_tuples: usize,
    pub tail_radii: Vec<f64>,
    /// Galerkin basis `(velocity modes, energy modes)` and its enrichment.
    pub basis: (usize, usize),
    pub enlarged_basis: (usize, usize),
    pub a_exponent: f64,
    pub alpha_exponent: f64,
    /// Rejection threshold for the combined-error comparisons, in standard errors.
    pub sigma_level: f64,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        SuiteSettings {
            name: None,
            collisions: 100_000,
            evaluation_points: 20,
            equivalence_alphas: vec![0.0, 1.0],
            equivalence_gammas: vec![0.0, 1.0],
            densities: 5,
            tensor_tuples: 10_000,
            tail_radii: vec![2.0, 4.0, 8.0, 16.0],
            basis: (6, 4),
            enlarged_basis: (8, 6),
            a_exponent: 0.25,
            alpha_exponent: 0.2,
            sigma_level: 3.0,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read `path`; a relative path that does not exist is retried inside
    /// the directory named by [`CONFIG_DIR_VAR`].
    pub fn load(path: &Path) -> Result<Self> {
        let resolved = resolve(path);
        let text = std::fs::read_to_string(&resolved).map_err(|e| config_error(format!("cannot read {}: {e}", resolved.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => config_error(format!("{}: {msg}", resolved.display())),
            other => config_error(format!("{}: {other}", resolved.display())),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.mc.validate().map_err(|e| config_error(e.to_string()))?;
        self.context().map_err(|e| config_error(e.to_string()))?;
        let s = &self.suite;
        if s.collisions == 0 || s.evaluation_points == 0 || s.densities == 0 || s.tensor_tuples == 0 {
            return Err(config_error("suite sizes must be positive"));
        }
        if s.equivalence_alphas.is_empty() || s.equivalence_alphas.iter().any(|a| !(*a >= 0.0)) {
            return Err(config_error("equivalence_alphas must be nonempty and nonnegative"));
        }
        if s.equivalence_gammas.is_empty() || s.equivalence_gammas.iter().any(|g| !(0.0..=2.0).contains(g)) {
            return Err(config_error("equivalence_gammas must be nonempty and lie in [0, 2]"));
        }
        if s.tail_radii.len() < 2 || s.tail_radii.windows(2).any(|w| !(w[1] > w[0])) || s.tail_radii[0] <= 0.0 {
            return Err(config_error("tail_radii must be at least two increasing positive radii"));
        }
        let (nv, ne) = s.basis;
        let (mv, me) = s.enlarged_basis;
        if nv == 0 || ne == 0 || mv < nv || me < ne || mv > 24 || me > 24 {
            return Err(config_error(
                "basis sizes must be positive, at most 24, and the enlarged basis must contain the base",
            ));
        }
        if !(s.sigma_level > 0.0) {
            return Err(config_error("sigma_level must be positive"));
        }
        if let Some(name) = &s.name {
            if name.is_empty() {
                return Err(config_error("suite name must not be empty"));
            }
        }
        Ok(())
    }

    pub fn maxwellian(&self) -> Result<Maxwellian> {
        Maxwellian::from_spec(&self.maxwellian, 1.0, self.law.clone())
    }

    pub fn model(&self) -> Result<CrossSectionModel> {
        self.cross_section.build(self.law.clone())
    }

    pub fn context(&self) -> Result<LinearizedContext> {
        LinearizedContext::with_exponents(self.maxwellian()?, self.model()?, self.suite.a_exponent, self.suite.alpha_exponent)?
            .with_quadrature(self.quadrature)
    }

    /// The same configuration with a different law and `γ`.
    pub fn with_model(&self, law: EnergyLaw, gamma: f64) -> RunConfig {
        let mut c = self.clone();
        c.law = law;
        c.cross_section.gamma = gamma;
        c
    }
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(CONFIG_DIR_VAR) {
            return Path::new(&dir).join(path);
        }
    }
    path.to_path_buf()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(RunConfig::from_json(r#"{"lawz": {}}"#), Err(Error::Config(_))));
        assert!(matches!(
            RunConfig::from_json(r#"{"mc": {"samples": 10, "sed": 1}}"#),
            Err(Error::Config(_))
        ));
        assert!(matches!(RunConfig::from_json(r#"{"suite": {"bogus": 1}}"#), Err(Error::Config(_))));
    }

    #[test]
    fn ranges_are_validated() {
        assert!(RunConfig::from_json(r#"{"maxwellian": {"n": 1, "t_k": -1, "t_i": 1}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"law": {"kind": "power", "alpha": -0.5}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"mc": {"samples": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"suite": {"basis": [6, 4], "enlarged_basis": [4, 4]}}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let c = RunConfig {
            law: EnergyLaw::power(1.0, 2.0).unwrap(),
            out: Some("reports".into()),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }
}
