//! Polytropic ideal gas closure and the characteristic structure of the
//! steady system `W(U)_x + H(U)_y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::GasError;

/// Primitive state `(u, v, p, rho)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub rho: f64,
}

impl FlowState {
    pub const fn new(u: f64, v: f64, p: f64, rho: f64) -> Self {
        Self { u, v, p, rho }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.u, self.v, self.p, self.rho]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Sup norm of the primitive difference.
    pub fn sup_dist(&self, other: &FlowState) -> f64 {
        (self.u - other.u)
            .abs()
            .max((self.v - other.v).abs())
            .max((self.p - other.p).abs())
            .max((self.rho - other.rho).abs())
    }

    pub fn speed(&self) -> f64 {
        self.u.hypot(self.v)
    }

    /// Flow angle `atan2(v, u)`.
    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }

    /// Mirror image under `y -> -y`.
    pub fn mirrored(&self) -> FlowState {
        FlowState::new(self.u, -self.v, self.p, self.rho)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.p.is_finite() && self.rho.is_finite()
    }
}

/// Closure constants. `R = c_v (gamma - 1)` is derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasModel {
    pub gamma: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub cv: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for GasModel {
    fn default() -> Self {
        Self { gamma: 1.4, kappa: 1.0, cv: 1.0 }
    }
}

/// Characteristic slopes, right eigenvectors and the renormalisation factors
/// of the two genuinely nonlinear fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenData {
    pub slopes: [f64; 4],
    pub vectors: [[f64; 4]; 4],
    pub renorm: [f64; 2],
}

impl GasModel {
    pub fn new(gamma: f64) -> Result<Self, GasError> {
        let gas = Self { gamma, ..Self::default() };
        gas.validate()?;
        Ok(gas)
    }

    pub fn validate(&self) -> Result<(), GasError> {
        if !(self.gamma > 1.0) || !(self.kappa > 0.0) || !(self.cv > 0.0) {
            return Err(GasError::Closure { gamma: self.gamma, kappa: self.kappa, cv: self.cv });
        }
        Ok(())
    }

    pub fn gas_constant(&self) -> f64 {
        self.cv * (self.gamma - 1.0)
    }

    pub fn check(&self, s: &FlowState) -> Result<(), GasError> {
        if !s.is_finite() || !(s.p > 0.0) || !(s.rho > 0.0) {
            return Err(GasError::NonPositive { p: s.p, rho: s.rho });
        }
        Ok(())
    }

    pub fn sound_speed(&self, s: &FlowState) -> Result<f64, GasError> {
        self.check(s)?;
        Ok(self.sound_speed_unchecked(s))
    }

    pub(crate) fn sound_speed_unchecked(&self, s: &FlowState) -> f64 {
        (self.gamma * s.p / s.rho).sqrt()
    }

    pub fn mach(&self, s: &FlowState) -> Result<f64, GasError> {
        Ok(s.speed() / self.sound_speed(s)?)
    }

    pub fn enthalpy(&self, s: &FlowState) -> f64 {
        self.gamma * s.p / ((self.gamma - 1.0) * s.rho)
    }

    pub fn entropy(&self, s: &FlowState) -> Result<f64, GasError> {
        self.check(s)?;
        Ok(self.cv * (s.p / (self.kappa * s.rho.powf(self.gamma))).ln())
    }

    /// Pressure from density and entropy, `p = kappa rho^gamma exp(S / c_v)`.
    pub fn pressure(&self, rho: f64, entropy: f64) -> f64 {
        self.kappa * rho.powf(self.gamma) * (entropy / self.cv).exp()
    }

    pub fn fluxes(&self, s: &FlowState) -> Result<([f64; 4], [f64; 4]), GasError> {
        self.check(s)?;
        let e = self.enthalpy(s) + 0.5 * (s.u * s.u + s.v * s.v);
        let w = [s.rho * s.u, s.rho * s.u * s.u + s.p, s.rho * s.u * s.v, s.rho * s.u * e];
        let h = [s.rho * s.v, s.rho * s.u * s.v, s.rho * s.v * s.v + s.p, s.rho * s.v * e];
        Ok((w, h))
    }

    fn require_supersonic(&self, s: &FlowState) -> Result<f64, GasError> {
        let c = self.sound_speed(s)?;
        if s.u * s.u + s.v * s.v <= c * c {
            return Err(GasError::Subsonic { speed: s.speed(), c });
        }
        if s.u <= c {
            return Err(GasError::NotHyperbolic { u: s.u, c });
        }
        Ok(c)
    }

    /// Slopes `dy/dx` of the four characteristic fields.
    pub fn slopes(&self, s: &FlowState) -> Result<[f64; 4], GasError> {
        let c = self.require_supersonic(s)?;
        let l1 = slope_formula(s.u, s.v, c, -1.0);
        let l4 = slope_formula(s.u, s.v, c, 1.0);
        let l23 = s.v / s.u;
        Ok([l1, l23, l23, l4])
    }

    /// Slope of field 1 (`sign = -1`) or 4 (`sign = +1`).
    pub fn nonlinear_slope(&self, s: &FlowState, sign: f64) -> Result<f64, GasError> {
        let c = self.require_supersonic(s)?;
        Ok(slope_formula(s.u, s.v, c, sign))
    }

    /// Analytic gradient of a nonlinear slope in `(u, v, p, rho)`.
    pub fn slope_gradient(&self, s: &FlowState, sign: f64) -> Result<[f64; 4], GasError> {
        let c = self.require_supersonic(s)?;
        let (u, v) = (s.u, s.v);
        let d = (u * u + v * v - c * c).sqrt();
        let n = u * v + sign * c * d;
        let m = u * u - c * c;
        let du = ((v + sign * c * u / d) * m - 2.0 * u * n) / (m * m);
        let dv = (u + sign * c * v / d) / m;
        let dc = (sign * (d - c * c / d) * m + 2.0 * c * n) / (m * m);
        let c_p = self.gamma / (2.0 * c * s.rho);
        let c_rho = -c / (2.0 * s.rho);
        Ok([du, dv, dc * c_p, dc * c_rho])
    }

    /// Unnormalised direction `(-l, 1, rho (l u - v), rho (l u - v) / c^2)`.
    fn raw_direction(s: &FlowState, slope: f64, c: f64) -> [f64; 4] {
        let m = s.rho * (slope * s.u - s.v);
        [-slope, 1.0, m, m / (c * c)]
    }

    /// Renormalisation factor making `r . grad(lambda) = 1`.
    pub fn renorm(&self, s: &FlowState, sign: f64) -> Result<f64, GasError> {
        let c = self.require_supersonic(s)?;
        let slope = slope_formula(s.u, s.v, c, sign);
        let dir = Self::raw_direction(s, slope, c);
        let grad = self.slope_gradient(s, sign)?;
        let dot: f64 = dir.iter().zip(grad.iter()).map(|(a, b)| a * b).sum();
        if dot.abs() < 1e-12 || !dot.is_finite() {
            return Err(GasError::Degenerate { dot });
        }
        Ok(1.0 / dot)
    }

    /// Ratio between the log-density coordinate and the normalised strength
    /// along a nonlinear curve: `t = mu * alpha` with `t = ln(rho / rho_0)`.
    pub fn log_density_rate(&self, s: &FlowState, sign: f64) -> Result<f64, GasError> {
        let c = self.require_supersonic(s)?;
        let slope = slope_formula(s.u, s.v, c, sign);
        let k = self.renorm(s, sign)?;
        Ok(k * (slope * s.u - s.v) / (c * c))
    }

    pub fn eigen(&self, s: &FlowState) -> Result<EigenData, GasError> {
        let c = self.require_supersonic(s)?;
        let slopes = self.slopes(s)?;
        let k1 = self.renorm(s, -1.0)?;
        let k4 = self.renorm(s, 1.0)?;
        let scale = |d: [f64; 4], k: f64| d.map(|x| k * x);
        let r1 = scale(Self::raw_direction(s, slopes[0], c), k1);
        let r4 = scale(Self::raw_direction(s, slopes[3], c), k4);
        Ok(EigenData {
            slopes,
            vectors: [r1, [s.u, s.v, 0.0, 0.0], [0.0, 0.0, 0.0, s.rho], r4],
            renorm: [k1, k4],
        })
    }
}

/// Raw slope formula without hyperbolicity checks. The discriminant is
/// clamped at zero so a sonic state gives the double root, not NaN.
pub fn slope_formula(u: f64, v: f64, c: f64, sign: f64) -> f64 {
    (u * v + sign * c * (u * u + v * v - c * c).max(0.0).sqrt()) / (u * u - c * c)
}
