//! JSON run configuration.
//!
//! ```json
//! {
//!   "geometry": { "focal": 1.0, "rho_i": 0.5, "rho_e": 0.8 },
//!   "source": { "type": "dipole", "location": { "rho": 0.88, "omega": 0.7 }, "moment": [1.0, 0.5] },
//!   "sweep": { "deltas": [1e-2, 1e-4, 1e-6, 1e-8], "n_max": "adaptive" },
//!   "output": { "dir": "out" }
//! }
//! ```
//!
//! Only `geometry` is required. Every other block falls back to defaults.

use std::path::{Path, PathBuf};

use calr_core::geometry::{ConfocalGeometry, EllipticPoint};
use calr_core::solver::{Truncation, DEFAULT_DELTAS};
use calr_core::source::SourceSpec;
use calr_core::spectrum::critical_radius;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    #[serde(default = "SourceSpec::zero")]
    pub source: SourceSpec,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    pub field: Option<FieldBlock>,
    #[serde(default)]
    pub validate: ValidateBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    /// Focal half-distance `R`.
    #[serde(default = "one", alias = "R")]
    pub focal: f64,
    pub rho_i: f64,
    pub rho_e: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Far-field probes; defaults to four points just beyond the bounded-field radius.
    pub probes: Option<Vec<EllipticPoint>>,
    #[serde(default = "adaptive")]
    pub n_max: Truncation,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            deltas: default_deltas(),
            probes: None,
            n_max: Truncation::Adaptive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default = "default_spectrum_modes")]
    pub n_max: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self {
            n_max: default_spectrum_modes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            k => (0..k)
                .map(|j| self.min + (self.max - self.min) * j as f64 / (k - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldBlock {
    pub delta: f64,
    pub x1: Axis,
    pub x2: Axis,
    #[serde(default = "adaptive")]
    pub n_max: Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    /// Nodes per interface for the Nyström oracle.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Modes `n = 1..=modes` checked against the oracle.
    #[serde(default = "default_oracle_modes")]
    pub modes: usize,
    /// Loss value for the transmission and energy checks.
    #[serde(default = "default_validate_delta")]
    pub delta: f64,
    /// Source radius for the resonant sweep; defaults to 55% of the way from `ρₑ` to `ρ*`.
    pub inside_rho0: Option<f64>,
    /// Source radius for the bounded sweep; defaults to `ρ* + 0.15`.
    pub outside_rho0: Option<f64>,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        Self {
            nodes: default_nodes(),
            modes: default_oracle_modes(),
            delta: default_validate_delta(),
            inside_rho0: None,
            outside_rho0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn adaptive() -> Truncation {
    Truncation::Adaptive
}

fn default_deltas() -> Vec<f64> {
    DEFAULT_DELTAS.to_vec()
}

fn default_spectrum_modes() -> usize {
    20
}

fn default_nodes() -> usize {
    512
}

fn default_oracle_modes() -> usize {
    4
}

fn default_validate_delta() -> f64 {
    1e-3
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parses and checks the geometry block.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        config.geometry()?;
        Ok(config)
    }

    pub fn geometry(&self) -> Result<ConfocalGeometry, CliError> {
        let g = self.geometry;
        ConfocalGeometry::new(g.focal, g.rho_i, g.rho_e).map_err(|e| CliError::Config(format!("field `geometry`: {e}")))
    }

    /// Checks the source and sweep blocks against the geometry.
    pub fn check_sweep(&self) -> Result<(), CliError> {
        let g = self.geometry()?;
        self.check_source()?;
        let deltas = &self.sweep.deltas;
        if deltas.is_empty() {
            return Err(CliError::Config("field `sweep.deltas`: empty loss list".into()));
        }
        if let Some(k) = deltas.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(CliError::Config(format!(
                "field `sweep.deltas[{k}]`: loss must be positive and finite"
            )));
        }
        if let Some(k) = deltas.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(CliError::Config(format!(
                "field `sweep.deltas[{}]`: loss values must be strictly descending",
                k + 1
            )));
        }
        if let Some(probes) = &self.sweep.probes {
            if let Some(k) = probes.iter().position(|p| !(p.rho > g.rho_e())) {
                return Err(CliError::Config(format!(
                    "field `sweep.probes[{k}]`: probe must lie outside the shell (rho > {})",
                    g.rho_e()
                )));
            }
        }
        check_truncation(self.sweep.n_max, "sweep.n_max")
    }

    pub fn check_source(&self) -> Result<(), CliError> {
        let g = self.geometry()?;
        self.source
            .check_outside(&g)
            .map_err(|e| CliError::Config(format!("field `source`: {e}")))
    }

    /// Configured probes, or four points at `far_bound_rho + 0.1`.
    pub fn probes(&self) -> Result<Vec<EllipticPoint>, CliError> {
        if let Some(p) = &self.sweep.probes {
            return Ok(p.clone());
        }
        let g = self.geometry()?;
        let regime = critical_radius(g.rho_i(), g.rho_e()).map_err(|e| CliError::Config(e.to_string()))?;
        (0..4)
            .map(|k| {
                EllipticPoint::new(regime.far_bound_rho + 0.1, std::f64::consts::FRAC_PI_2 * k as f64)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect()
    }

    pub fn field_block(&self) -> Result<FieldBlock, CliError> {
        let f = self
            .field
            .ok_or_else(|| CliError::Config("missing `field` block".into()))?;
        if !(f.delta.is_finite() && f.delta > 0.0) {
            return Err(CliError::Config(
                "field `field.delta`: loss must be positive and finite".into(),
            ));
        }
        for (name, axis) in [("x1", f.x1), ("x2", f.x2)] {
            if !(axis.min.is_finite() && axis.max.is_finite()) {
                return Err(CliError::Config(format!("field `field.{name}`: bounds must be finite")));
            }
        }
        check_truncation(f.n_max, "field.n_max")?;
        self.check_source()?;
        Ok(f)
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

fn check_truncation(t: Truncation, field: &str) -> Result<(), CliError> {
    match t {
        Truncation::Fixed(0) => Err(CliError::Config(format!(
            "field `{field}`: fixed n_max must be at least 1"
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{ "geometry": { "rho_i": 0.5, "rho_e": 0.8 } }"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.geometry.focal, 1.0);
        assert_eq!(c.source, SourceSpec::zero());
        assert_eq!(c.sweep.deltas, DEFAULT_DELTAS.to_vec());
        assert_eq!(c.sweep.n_max, Truncation::Adaptive);
        assert_eq!(c.spectrum.n_max, 20);
        assert!(c.field.is_none());
    }

    #[test]
    fn truncation_policies_parse() {
        let fixed = r#"{ "geometry": { "rho_i": 0.5, "rho_e": 0.8 }, "sweep": { "n_max": { "fixed": 64 } } }"#;
        assert_eq!(RunConfig::from_json(fixed).unwrap().sweep.n_max, Truncation::Fixed(64));
    }

    #[test]
    fn errors_name_the_field_and_line() {
        let bad = "{\n  \"geometry\": { \"rho_i\": \"half\", \"rho_e\": 0.8 }\n}";
        let CliError::Config(msg) = RunConfig::from_json(bad).unwrap_err() else {
            panic!("expected a config error");
        };
        assert!(msg.contains("geometry.rho_i"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{ "geometry": { "rho_i": 0.5, "rho_e": 0.8, "rho_x": 1.0 } }"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Config(_))));
    }

    #[test]
    fn inverted_shell_is_a_config_error() {
        let bad = r#"{ "geometry": { "rho_i": 0.8, "rho_e": 0.5 } }"#;
        assert!(matches!(RunConfig::from_json(bad), Err(CliError::Config(_))));
    }

    #[test]
    fn sweep_checks() {
        let with = |sweep: &str| {
            let text = format!(r#"{{ "geometry": {{ "rho_i": 0.5, "rho_e": 0.8 }}, "sweep": {sweep} }}"#);
            RunConfig::from_json(&text).unwrap().check_sweep()
        };
        assert!(with(r#"{ "deltas": [] }"#).is_err());
        assert!(with(r#"{ "deltas": [1e-2, 1e-2] }"#).is_err());
        assert!(with(r#"{ "deltas": [1e-2, -1e-3] }"#).is_err());
        assert!(with(r#"{ "probes": [{ "rho": 0.7, "omega": 0.0 }] }"#).is_err());
        assert!(with(r#"{ "n_max": { "fixed": 0 } }"#).is_err());
        assert!(with(r#"{ "deltas": [1e-2, 1e-3] }"#).is_ok());
    }

    #[test]
    fn source_inside_the_shell_is_rejected() {
        let text = r#"{
            "geometry": { "rho_i": 0.5, "rho_e": 0.8 },
            "source": { "type": "dipole", "location": { "rho": 0.7, "omega": 0.0 }, "moment": [1.0, 0.0] }
        }"#;
        assert!(RunConfig::from_json(text).unwrap().check_source().is_err());
    }

    #[test]
    fn axis_values_include_both_ends() {
        let a = Axis {
            min: -1.0,
            max: 1.0,
            count: 5,
        };
        assert_eq!(a.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(Axis {
            min: 0.0,
            max: 1.0,
            count: 0
        }
        .values()
        .is_empty());
    }
}
