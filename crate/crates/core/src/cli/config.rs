use crate::bath::quadrature::QuadratureOptions;
use crate::bath::{BathError, BathParams};
use crate::cam::{CamOptions, EstimateParams};
use crate::lattice::LatticeSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("config field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config describes experiment `{found}` but `{requested}` was requested")]
    ExperimentMismatch { found: Experiment, requested: Experiment },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(alias = "fidelity-sweep")]
    Fidelity,
    Cam,
    Correlators,
    Pmap,
    Validate,
    Estimate,
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Fidelity => "fidelity",
            Self::Cam => "cam",
            Self::Correlators => "correlators",
            Self::Pmap => "pmap",
            Self::Validate => "validate",
            Self::Estimate => "estimate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn linear(start: f64, stop: f64, count: usize) -> Self {
        Self {
            start,
            stop,
            count,
            spacing: Spacing::Linear,
        }
    }

    fn validate(&self, field: &'static str) -> Result<(), ConfigError> {
        if self.count < 1 {
            return Err(invalid(field, "count must be at least 1"));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start <= self.stop) {
            return Err(invalid(field, "need finite start <= stop"));
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return Err(invalid(field, "log spacing needs start > 0"));
        }
        Ok(())
    }

    /// Grid points; the endpoints are hit exactly.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.stop;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * t,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnCoupling {
    pub re_j: f64,
    #[serde(default)]
    pub im_j: f64,
}

impl NnCoupling {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re_j, self.im_j)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub quad_abs: f64,
    pub quad_rel: f64,
    pub cam_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let q = QuadratureOptions::default();
        Self {
            quad_abs: q.abs_tol,
            quad_rel: q.rel_tol,
            cam_rel: CamOptions::default().rel_tol,
        }
    }
}

impl Tolerances {
    pub fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions {
            abs_tol: self.quad_abs,
            rel_tol: self.quad_rel,
            ..QuadratureOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CamSection {
    #[serde(default = "default_cam_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub options: CamOptions,
}

fn default_cam_sizes() -> Vec<usize> {
    vec![2, 3, 4]
}

impl Default for CamSection {
    fn default() -> Self {
        Self {
            sizes: default_cam_sizes(),
            options: CamOptions::default(),
        }
    }
}

/// Validated run description. Absent sections fall back to the defaults of
/// the chosen experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub lattice: Option<LatticeSpec>,
    #[serde(default)]
    pub bath: Option<BathParams>,
    #[serde(default)]
    pub nn: Option<NnCoupling>,
    /// β grid (fidelity, pmap) or distance grid in units of `vΔ` (correlators).
    #[serde(default)]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub cam: Option<CamSection>,
    #[serde(default)]
    pub estimate: Option<EstimateParams>,
}

impl RunConfig {
    pub fn empty() -> Self {
        Self {
            experiment: None,
            lattice: None,
            bath: None,
            nn: None,
            grid: None,
            output: OutputSpec::default(),
            workers: None,
            tolerances: Tolerances::default(),
            cam: None,
            estimate: None,
        }
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment.unwrap_or(Experiment::Validate)
    }

    /// Fills in per-experiment defaults and checks every precondition.
    pub fn finalize(mut self, requested: Option<Experiment>) -> Result<Self, ConfigError> {
        match (self.experiment, requested) {
            (Some(found), Some(requested)) if found != requested => {
                return Err(ConfigError::ExperimentMismatch { found, requested })
            }
            (None, Some(r)) => self.experiment = Some(r),
            (None, None) => return Err(invalid("experiment", "missing")),
            _ => {}
        }
        let kind = self.experiment();
        if self.bath.is_some() && self.nn.is_some() {
            return Err(invalid("nn", "give either `bath` or `nn`, not both"));
        }
        if let Some(b) = &self.bath {
            b.validate().map_err(|e: BathError| invalid("bath", e.to_string()))?;
        }
        if let Some(nn) = &self.nn {
            if !(nn.re_j.is_finite() && nn.im_j.is_finite()) {
                return Err(invalid("nn", "coupling must be finite"));
            }
        }
        if let Some(l) = &self.lattice {
            l.validate().map_err(|e| invalid("lattice", e.to_string()))?;
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        let t = &self.tolerances;
        if !(t.quad_abs > 0.0 && t.quad_rel > 0.0 && t.cam_rel > 0.0) {
            return Err(invalid("tolerances", "all tolerances must be positive"));
        }
        match kind {
            Experiment::Fidelity => {
                self.lattice.get_or_insert(LatticeSpec::square(3));
                if self.bath.is_none() && self.nn.is_none() {
                    self.nn = Some(NnCoupling { re_j: -1.0, im_j: 0.0 });
                }
                let grid = *self.grid.get_or_insert(Grid::linear(0.0, 0.5, 51));
                if grid.start < 0.0 {
                    return Err(invalid("grid", "β must be non-negative"));
                }
            }
            Experiment::Cam => {
                if self.bath.is_some() {
                    return Err(invalid("bath", "cam uses a real nearest-neighbour coupling"));
                }
                let nn = *self.nn.get_or_insert(NnCoupling { re_j: -1.0, im_j: 0.0 });
                if nn.im_j != 0.0 || nn.re_j == 0.0 {
                    return Err(invalid("nn", "cam needs a real, non-zero J"));
                }
                let section = self.cam.get_or_insert_with(CamSection::default);
                section.options.rel_tol = self.tolerances.cam_rel;
                if section.sizes.len() < 3 || section.sizes.contains(&0) {
                    return Err(invalid("cam.sizes", "need at least three positive sizes"));
                }
            }
            Experiment::Correlators => {
                if self.bath.is_none() {
                    return Err(invalid("bath", "required for correlators"));
                }
                let grid = *self.grid.get_or_insert(Grid::linear(0.1, 3.0, 12));
                if grid.start < 0.0 {
                    return Err(invalid("grid", "distances must be non-negative"));
                }
            }
            Experiment::Pmap => {
                if self.bath.is_none() {
                    return Err(invalid("bath", "required for pmap"));
                }
                let grid = *self.grid.get_or_insert(Grid::linear(0.0, 5.0, 51));
                if grid.start < 0.0 {
                    return Err(invalid("grid", "β must be non-negative"));
                }
            }
            Experiment::Estimate => {
                self.estimate.get_or_insert_with(EstimateParams::default);
            }
            Experiment::Validate => {}
        }
        if let Some(g) = &self.grid {
            g.validate("grid")?;
        }
        if let Some(e) = &self.estimate {
            e.validate().map_err(|e| invalid("estimate", e.to_string()))?;
        }
        Ok(self)
    }
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str, requested: Option<Experiment>) -> Result<RunConfig, ConfigError> {
    let raw: RunConfig = serde_json::from_str(text)?;
    raw.finalize(requested)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fidelity_config() {
        let text = r#"{"experiment": "fidelity", "lattice": {"n": 3, "m": 3},
            "nn": {"re_j": -1}, "grid": {"start": 0, "stop": 0.5, "count": 51}}"#;
        let c = parse_config(text, None).unwrap();
        assert_eq!(c.lattice.unwrap().a, 1.0);
        let pts = c.grid.unwrap().points();
        assert_eq!(pts.len(), 51);
        assert_eq!(pts[50], 0.5);
        assert!((pts[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn rejects_two_coupling_sources() {
        let text = r#"{"nn": {"re_j": -1}, "bath": {"s": 0, "delta": 1, "lambda": 1}}"#;
        let e = parse_config(text, Some(Experiment::Fidelity)).unwrap_err();
        assert!(e.to_string().contains("nn"));
    }

    #[test]
    fn rejects_bad_exponent_and_unknown_keys() {
        let text = r#"{"bath": {"s": 0.3, "delta": 1, "lambda": 1}}"#;
        assert!(parse_config(text, Some(Experiment::Pmap)).is_err());
        let text = r#"{"experiment": "fidelity", "latice": {"n": 3, "m": 3}}"#;
        let e = parse_config(text, None).unwrap_err();
        assert!(e.to_string().contains("latice"));
    }

    #[test]
    fn experiment_must_agree() {
        let text = r#"{"experiment": "cam"}"#;
        assert!(matches!(
            parse_config(text, Some(Experiment::Fidelity)),
            Err(ConfigError::ExperimentMismatch { .. })
        ));
        assert!(parse_config("{}", None).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(Grid::linear(1.0, 2.0, 1).points(), vec![1.0]);
        let log = Grid {
            start: 0.1,
            stop: 10.0,
            count: 3,
            spacing: Spacing::Log,
        };
        let p = log.points();
        assert!((p[1] - 1.0).abs() < 1e-14);
        let bad = r#"{"grid": {"start": 0, "stop": 1, "count": 0}}"#;
        assert!(parse_config(bad, Some(Experiment::Fidelity)).is_err());
    }
}
