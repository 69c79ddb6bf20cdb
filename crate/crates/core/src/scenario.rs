//! Scenario files: what to simulate and with which approximation knobs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::{Background, Calibration};
use crate::error::{CoefficientError, ScenarioError};
use crate::gas::{FlowState, GasModel};
use crate::geometry::{approximate_inflow, build_inflow, jump_budget, InflowProfile, Perturbation, Wall};
use crate::riemann::Riemann;

/// Variation bound used for both the wall and the inflow perturbation.
pub const EPS_CONFIG: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    /// State below the strong contact; must be horizontal.
    pub below: FlowState,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Height of the strong contact at the inlet.
    pub contact_y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WallSpec {
    Vertices(Vec<(f64, f64)>),
    Random { seed: u64, count: usize, tv: f64, length: f64 },
}

impl Default for WallSpec {
    fn default() -> Self {
        WallSpec::Vertices(vec![(0.0, 0.0)])
    }
}

impl WallSpec {
    pub fn build(&self) -> Result<Wall, ScenarioError> {
        Ok(match self {
            WallSpec::Vertices(v) => Wall::build(v)?,
            WallSpec::Random { seed, count, tv, length } => Wall::random(*seed, *count, *tv, *length)?,
        })
    }
}

/// Approximation parameter and the quantities tied to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaParams {
    pub theta: f64,
    /// Rarefaction fan spacing; defaults to `theta`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Threshold for the accurate solver and for wall vertices; defaults
    /// to `theta`.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_margin")]
    pub lambda_hat_margin: f64,
    /// Inflow jump budget is `ceil(jump_factor / theta)`.
    #[serde(default = "default_jump_factor")]
    pub jump_factor: f64,
}

fn default_margin() -> f64 {
    0.5
}
fn default_jump_factor() -> f64 {
    0.05
}

impl Default for ThetaParams {
    fn default() -> Self {
        Self::with_theta(1e-3)
    }
}

impl ThetaParams {
    pub fn with_theta(theta: f64) -> Self {
        Self { theta, delta: None, omega: None, lambda_hat_margin: default_margin(), jump_factor: default_jump_factor() }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.theta)
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(self.theta)
    }

    pub fn jump_budget(&self) -> usize {
        jump_budget(self.theta, self.jump_factor)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in [("theta", self.theta), ("delta", self.delta()), ("omega", self.omega()), ("jump_factor", self.jump_factor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScenarioError::Invalid(format!("theta.{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda_hat_margin > 0.0) {
            return Err(ScenarioError::Invalid("theta.lambda_hat_margin must be positive".into()));
        }
        Ok(())
    }
}

fn default_window() -> f64 {
    10.0
}
fn default_budget() -> usize {
    2_000_000
}
fn default_tv_bound() -> f64 {
    EPS_CONFIG
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub gas: GasModel,
    pub background: BackgroundSpec,
    #[serde(default)]
    pub wall: WallSpec,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub theta: ThetaParams,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub event_budget: usize,
    #[serde(default = "default_tv_bound")]
    pub tv_bound: f64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// The unperturbed flow over a flat wall.
    pub fn background_only(below: FlowState, sigma2: f64, sigma3: f64, contact_y: f64) -> Self {
        Self {
            name: Some("background".into()),
            gas: GasModel::default(),
            background: BackgroundSpec { below, sigma2, sigma3, contact_y },
            wall: WallSpec::default(),
            perturbation: Perturbation::None,
            theta: ThetaParams::default(),
            window: default_window(),
            seed: 0,
            event_budget: default_budget(),
            tv_bound: default_tv_bound(),
        }
    }

    /// Validate and build everything a run needs.
    pub fn prepare(&self) -> Result<Setup, ScenarioError> {
        self.gas.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.theta.validate()?;
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(ScenarioError::Invalid(format!("window must be positive, got {}", self.window)));
        }
        if self.event_budget == 0 {
            return Err(ScenarioError::Invalid("event_budget must be positive".into()));
        }
        let b = &self.background;
        let bg = Background::new(&self.gas, b.below, b.sigma2, b.sigma3)?;
        let wall = self.wall.build()?;
        wall.validate(self.tv_bound)?;
        let lambda_hat = Riemann::lambda_hat_for(&self.gas, &bg, self.theta.lambda_hat_margin)
            .map_err(|e| ScenarioError::Coefficient(CoefficientError::Solver(e)))?;
        let solver = Riemann::new(self.gas, lambda_hat);
        let source = build_inflow(&self.gas, &bg, b.contact_y, &self.perturbation, self.tv_bound, solver.trust_radius)?;
        let inflow = approximate_inflow(&source, self.theta.theta, self.theta.jump_budget());
        let calibration = Calibration::compute(&solver, &bg)?;
        Ok(Setup { scenario: self.clone(), bg, wall, source, inflow, solver, calibration })
    }

    /// Same scenario at another approximation level.
    pub fn at_theta(&self, theta: f64) -> Self {
        let mut s = self.clone();
        s.theta.theta = theta;
        s
    }
}

/// A validated scenario with its derived objects.
#[derive(Clone, Debug)]
pub struct Setup {
    pub scenario: Scenario,
    pub bg: Background,
    pub wall: Wall,
    /// Inflow before coarsening.
    pub source: InflowProfile,
    /// Inflow actually tracked.
    pub inflow: InflowProfile,
    pub solver: Riemann,
    pub calibration: Calibration,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"background":{"below":{"u":2,"v":0,"p":1,"rho":1.4},"sigma2":0.1,"sigma3":0.05,"contact_y":1},"bogus":1}"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
