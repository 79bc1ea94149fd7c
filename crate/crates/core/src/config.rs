//! Run configuration: a sectioned TOML file plus `--section.key value`
//! overrides applied after parsing.
//!
//! ```toml
//! [geometry]
//! a = 2.0
//! b = 2.2
//! half_width = 60
//!
//! [drive]
//! j0 = 1.0
//! delta_j = 0.8
//! e0 = 30.0
//! omega = 30.0
//! m = 2
//! phi = 0.0
//! ```
//!
//! Only `drive.j0` and `drive.omega` are required. Unknown sections and keys
//! are rejected.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::ConditionKind;
use crate::dynamics::IntegratorConfig;
use crate::effective::Modulation;
use crate::lattice::{DriveParams, LatticeGeometry, DEFAULT_HALF_WIDTH};
use crate::specfun::BesselOrder;
use crate::transport::{Leading, RatchetOptions, SegmentTiming};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("bad override {key}: {reason}")]
    Override { key: String, reason: String },
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    pub b: f64,
    /// The window holds sites `-half_width..=half_width`.
    pub half_width: i64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { a: 2.0, b: 2.2, half_width: DEFAULT_HALF_WIDTH }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub j0: f64,
    pub omega: f64,
    #[serde(default)]
    pub delta_j: f64,
    #[serde(default)]
    pub e0: f64,
    #[serde(default = "default_order")]
    pub m: u32,
    #[serde(default)]
    pub phi: f64,
}

fn default_order() -> u32 {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_end: f64,
    pub start_site: i64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { t_end: 100.0, start_site: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub phi_min: f64,
    pub phi_max: f64,
    pub steps: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { phi_min: 0.0, phi_max: PI, steps: 1000 }
    }
}

/// What `solve` looks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolveKind {
    #[default]
    Cdt,
    /// Keep `Δ_a`, search `Δ_b` so that a CDT phase exists.
    CdtPair,
    DlForward,
    DlBackward,
    Instability,
}

impl SolveKind {
    pub fn condition(self) -> Option<ConditionKind> {
        match self {
            SolveKind::Cdt => Some(ConditionKind::Cdt),
            SolveKind::CdtPair => None,
            SolveKind::DlForward => Some(ConditionKind::DlForward),
            SolveKind::DlBackward => Some(ConditionKind::DlBackward),
            SolveKind::Instability => Some(ConditionKind::Instability),
        }
    }
}

impl std::str::FromStr for SolveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cdt" => Ok(SolveKind::Cdt),
            "cdt-pair" => Ok(SolveKind::CdtPair),
            "dl-forward" => Ok(SolveKind::DlForward),
            "dl-backward" => Ok(SolveKind::DlBackward),
            "instability" => Ok(SolveKind::Instability),
            other => {
                Err(format!("unknown kind '{other}' (expected cdt, cdt-pair, dl-forward, dl-backward or instability)"))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub kind: SolveKind,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub delta_b_lo: f64,
    pub delta_b_hi: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { kind: SolveKind::Cdt, phi_lo: 0.0, phi_hi: PI, delta_b_lo: 4.5, delta_b_hi: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub cycles: usize,
    pub start_site: i64,
    pub leading: Leading,
    pub timing: SegmentTiming,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { cycles: 3, start_site: 0, leading: Leading::default(), timing: SegmentTiming::default() }
    }
}

impl TransportConfig {
    pub fn options(&self) -> RatchetOptions {
        RatchetOptions { timing: self.timing, leading: self.leading }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    pub drive: DriveConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub transport: TransportConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Sets `section.key` to `value`, which is read as a TOML literal when
    /// possible and as a bare string otherwise.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let fail = |reason: String| ConfigError::Override { key: key.to_string(), reason };
        let (section, field) = key.split_once('.').ok_or_else(|| fail("expected section.key".to_string()))?;
        let mut doc = toml::Table::try_from(&*self).map_err(|e| fail(e.to_string()))?;
        let table = doc
            .get_mut(section)
            .and_then(|v| v.as_table_mut())
            .ok_or_else(|| fail(format!("unknown section [{section}]")))?;
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(field.to_string(), parsed);
        *self = RunConfig::deserialize(doc).map_err(|e| fail(e.to_string()))?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<LatticeGeometry, ConfigError> {
        let g = &self.geometry;
        LatticeGeometry::symmetric(g.a, g.b, g.half_width).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn drive(&self) -> Result<DriveParams, ConfigError> {
        let d = &self.drive;
        DriveParams::new(d.j0, d.delta_j, d.e0, d.omega, BesselOrder::new(d.m), d.phi)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn modulation(&self) -> Modulation {
        Modulation::new(self.drive.j0, self.drive.delta_j, BesselOrder::new(self.drive.m))
    }

    /// Checks every section that a command might read.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.geometry()?;
        self.drive()?;
        self.integrator.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.simulate.t_end.is_finite() && self.simulate.t_end >= 0.0) {
            return Err(ConfigError::Invalid(format!("simulate.t_end = {} must be >= 0", self.simulate.t_end)));
        }
        if self.scan.steps < 2 {
            return Err(ConfigError::Invalid(format!("scan.steps = {} must be at least 2", self.scan.steps)));
        }
        if !(self.scan.phi_min.is_finite() && self.scan.phi_max.is_finite()) {
            return Err(ConfigError::Invalid("scan range must be finite".into()));
        }
        if self.solve.phi_lo.partial_cmp(&self.solve.phi_hi) != Some(Ordering::Less) {
            return Err(ConfigError::Invalid("solve.phi_lo must be below solve.phi_hi".into()));
        }
        if self.solve.delta_b_lo.partial_cmp(&self.solve.delta_b_hi) != Some(Ordering::Less) {
            return Err(ConfigError::Invalid("solve.delta_b_lo must be below solve.delta_b_hi".into()));
        }
        Ok(())
    }
}
