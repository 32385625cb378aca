//! Scenario definitions and the builtin suite.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::likelihood::Method;
use crate::models::{ModelKind, ModelParams};
use crate::simulate::{squared_process_params, SimConfig, DEFAULT_PAD_FACTOR};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    #[default]
    None,
    Square,
}

fn default_gen_oversample() -> usize {
    1
}

fn default_pad() -> usize {
    DEFAULT_PAD_FACTOR
}

fn default_level() -> f64 {
    crate::uncertainty::DEFAULT_LEVEL
}

fn default_methods() -> Vec<Method> {
    vec![Method::Wls, Method::Mle, Method::Whittle]
}

/// One Monte Carlo study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(rename = "model")]
    pub kind: ModelKind,
    /// Parameters of the simulated Gaussian process.
    pub truth: ModelParams,
    /// Sampling interval in units of `truth.tau`.
    pub dt_over_tau: f64,
    /// Observations per replicate.
    pub n: usize,
    /// Generation grid is refined by this factor, then subsampled.
    #[serde(default = "default_gen_oversample")]
    pub oversample: usize,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    #[serde(default)]
    pub transform: Transform,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Nominal confidence level of the Wald intervals.
    #[serde(default = "default_level")]
    pub level: f64,
}

impl Scenario {
    pub fn dt(&self) -> f64 {
        self.dt_over_tau * self.truth.tau()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("invalid scenario name `{}`", self.name)));
        }
        if self.replicates == 0 {
            return Err(Error::Config(format!("{}: replicates must be at least 1", self.name)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config(format!("{}: no estimators selected", self.name)));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("{}: level must be in (0, 1)", self.name)));
        }
        if self.n < 3 {
            return Err(Error::Config(format!("{}: need n >= 3", self.name)));
        }
        self.sim_config(0).validate()?;
        self.fit_truth()?;
        Ok(())
    }

    /// Simulation recipe for replicate `index`.
    pub fn sim_config(&self, index: u64) -> SimConfig {
        SimConfig::new(self.kind, self.truth, self.dt(), self.n)
            .oversample(self.oversample)
            .pad_factor(self.pad_factor)
            .seed(self.seed)
            .stream(index)
    }

    /// Parameters the estimators should recover: the simulated process, or the
    /// squared process's own moments when the data are squared.
    pub fn fit_truth(&self) -> Result<ModelParams> {
        match self.transform {
            Transform::None => Ok(self.truth),
            Transform::Square => squared_process_params(self.kind, &self.truth).ok_or_else(|| {
                Error::Config(format!(
                    "{}: squaring a {} process with mu = {} leaves the model family",
                    self.name,
                    self.kind,
                    self.truth.mu()
                ))
            }),
        }
    }

    /// SHA-256 of the scenario's canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Vec<Scenario>,
}

/// Parses a TOML config holding one or more `[[scenario]]` blocks.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    for s in &file.scenario {
        s.validate()?;
    }
    Ok(file.scenario)
}

pub fn load_config(path: &Path) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub const BUILTIN_SEED: u64 = 20_140_917;
pub const BUILTIN_REPLICATES: usize = 1000;

/// Gaussian-ACF sampling designs in units of `tau`: `(dt, span)`.
/// Small: dt = tau over 16 tau; Medium: dt = tau/2 over 32 tau; Large doubles
/// both the rate and the span of Medium.
const SMALL: (f64, f64) = (1.0, 16.0);
const MEDIUM: (f64, f64) = (0.5, 32.0);
const LARGE: (f64, f64) = (0.25, 64.0);

/// Every design is generated on a `tau / 8` grid and subsampled.
const GEN_DT_OVER_TAU: f64 = 0.125;

fn design(name: &str, kind: ModelKind, (dt, span): (f64, f64), transform: Transform) -> Scenario {
    Scenario {
        name: name.to_string(),
        kind,
        truth: ModelParams::new(0.0, 1.0, 1.0).expect("unit parameters"),
        dt_over_tau: dt,
        n: (span / dt).round() as usize,
        oversample: (dt / GEN_DT_OVER_TAU).round() as usize,
        pad_factor: DEFAULT_PAD_FACTOR,
        transform,
        replicates: BUILTIN_REPLICATES,
        seed: BUILTIN_SEED,
        methods: default_methods(),
        level: default_level(),
    }
}

/// The figure suite: distributional, sample-size, continuity, interval
/// reliability and limiting-behavior studies.
pub fn builtin_scenarios() -> Vec<Scenario> {
    use ModelKind::{Gaussian, Rational};
    vec![
        design("fig1-normal", Gaussian, MEDIUM, Transform::None),
        design("fig1-chi2", Gaussian, MEDIUM, Transform::Square),
        design("fig2-S", Gaussian, SMALL, Transform::None),
        design("fig2-M", Gaussian, MEDIUM, Transform::None),
        design("fig3-d0", Rational { d: 0 }, MEDIUM, Transform::None),
        design("fig3-d2", Rational { d: 2 }, MEDIUM, Transform::None),
        design("fig4", Gaussian, MEDIUM, Transform::None),
        design("fig5-L", Gaussian, LARGE, Transform::None),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_inventory() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["fig1-normal", "fig1-chi2", "fig2-S", "fig2-M", "fig3-d0", "fig3-d2", "fig4", "fig5-L"]
        );
        for s in builtin_scenarios() {
            s.validate().unwrap();
            assert_eq!(s.replicates, 1000);
        }
    }

    #[test]
    fn sample_sizes() {
        assert_eq!(builtin_scenario("fig2-S").unwrap().n, 16);
        assert_eq!(builtin_scenario("fig2-M").unwrap().n, 64);
        assert_eq!(builtin_scenario("fig5-L").unwrap().n, 256);
        let m = builtin_scenario("fig2-M").unwrap();
        assert_eq!(m.oversample, 4);
        assert_eq!(m.sim_config(0).fine_dt(), 0.125);
    }

    #[test]
    fn chi2_arm_truth() {
        let s = builtin_scenario("fig1-chi2").unwrap();
        let t = s.fit_truth().unwrap();
        assert_eq!((t.mu(), t.sigma2()), (1.0, 2.0));
        assert!((t.tau() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn square_outside_family_rejected() {
        let mut s = builtin_scenario("fig3-d2").unwrap();
        s.transform = Transform::Square;
        assert!(s.validate().is_err());
    }

    #[test]
    fn toml_config() {
        let text = r#"
            [[scenario]]
            name = "smooth"
            model = { kind = "rational", d = 2 }
            dt_over_tau = 0.5
            n = 32
            replicates = 10
            seed = 3
            methods = ["wls", "mle"]

            [scenario.truth]
            mu = 1.0
            sigma2 = 2.0
            tau = 3.0
        "#;
        let s = parse_config(text).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].kind, ModelKind::Rational { d: 2 });
        assert_eq!(s[0].methods, vec![Method::Wls, Method::Mle]);
        assert_eq!(s[0].dt(), 1.5);
        assert_eq!(s[0].transform, Transform::None);
        assert!(parse_config("[[scenario]]\nname = 'x'").is_err());
        assert!(parse_config(&text.replace("seed = 3", "seed = 3\nsede = 4")).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = builtin_scenario("fig2-M").unwrap();
        let mut b = a.clone();
        assert_eq!(a.config_hash(), b.config_hash());
        b.seed += 1;
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }
}
