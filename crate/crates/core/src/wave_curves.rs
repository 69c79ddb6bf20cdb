//! Elementary wave curves: Hugoniot branches, rarefaction integral curves
//! and the two linearly degenerate contact maps.
//!
//! Strengths of the genuinely nonlinear families use the renormalised
//! parameter `alpha` for which `dU/dalpha = r_d` at `alpha = 0`. Positive
//! strength is a rarefaction, negative a shock. Internally the curves are
//! traced in `t = ln(rho_above / rho_below) = mu_d(U_below) * alpha`.
//! Contact strengths are logarithms: `C2` scales the velocity by `e^s`,
//! `C3` scales the density by `e^s`.
//!
//! Every wave is stored in `y`-order: `back` is the state below, `front`
//! the state above.

use serde::{Deserialize, Serialize};

use crate::error::CurveError;
use crate::gas::{FlowState, GasModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveFamily {
    F1,
    Contact2,
    Contact3,
    F4,
    NonPhysical,
    StrongContact,
}

impl WaveFamily {
    pub fn is_nonlinear(self) -> bool {
        matches!(self, WaveFamily::F1 | WaveFamily::F4)
    }

    /// Characteristic index 1..=4, `None` for bookkeeping fronts.
    pub fn index(self) -> Option<usize> {
        match self {
            WaveFamily::F1 => Some(1),
            WaveFamily::Contact2 => Some(2),
            WaveFamily::Contact3 => Some(3),
            WaveFamily::F4 => Some(4),
            _ => None,
        }
    }

    pub fn from_index(j: usize) -> Option<WaveFamily> {
        match j {
            1 => Some(WaveFamily::F1),
            2 => Some(WaveFamily::Contact2),
            3 => Some(WaveFamily::Contact3),
            4 => Some(WaveFamily::F4),
            _ => None,
        }
    }

    pub(crate) fn sign(self) -> f64 {
        if self == WaveFamily::F1 {
            -1.0
        } else {
            1.0
        }
    }

    fn name(self) -> &'static str {
        match self {
            WaveFamily::F1 => "1-wave",
            WaveFamily::Contact2 => "vortex sheet",
            WaveFamily::Contact3 => "entropy wave",
            WaveFamily::F4 => "4-wave",
            WaveFamily::NonPhysical => "non-physical front",
            WaveFamily::StrongContact => "strong contact",
        }
    }
}

/// One elementary wave of a fan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub family: WaveFamily,
    /// Signed strength. For the strong contact this is `sigma2 + sigma3`;
    /// the pair itself lives in `pair`.
    pub strength: f64,
    pub pair: Option<(f64, f64)>,
    pub back: FlowState,
    pub front: FlowState,
    pub speed_lo: f64,
    pub speed_hi: f64,
}

impl Wave {
    pub fn is_rarefaction(&self) -> bool {
        self.family.is_nonlinear() && self.strength > 0.0
    }

    pub fn is_shock(&self) -> bool {
        self.family.is_nonlinear() && self.strength < 0.0
    }

    pub fn speed(&self) -> f64 {
        0.5 * (self.speed_lo + self.speed_hi)
    }
}

/// Ordering used to read the Lax inequalities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaxOrdering {
    /// `lambda_d(above) < sigma < lambda_d(below)`, which is what
    /// characteristics impinging on the shock from both sides give.
    Characteristic,
    /// `lambda_d(below) < sigma < lambda_d(above)`, taken literally with
    /// below as the back state.
    AsPrinted,
}

/// Outcome of the admissibility test with its margins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    /// Density grows across the shock in the flow direction.
    pub compressive: bool,
    pub lax_characteristic: bool,
    pub lax_as_printed: bool,
    /// Shock separated from the contact speed on both sides.
    pub separated: bool,
    /// `min(sigma - lambda(above), lambda(below) - sigma)`.
    pub lax_margin: f64,
    pub density_jump: f64,
}

impl EntropyCheck {
    pub fn admissible(&self, ordering: LaxOrdering) -> bool {
        let lax = match ordering {
            LaxOrdering::Characteristic => self.lax_characteristic,
            LaxOrdering::AsPrinted => self.lax_as_printed,
        };
        self.compressive && lax && self.separated
    }
}

/// `G(s3, s2; U) = C3(s3) o C2(s2) (U)`.
pub fn contact_map(state: &FlowState, sigma2: f64, sigma3: f64) -> FlowState {
    let e2 = sigma2.exp();
    FlowState::new(state.u * e2, state.v * e2, state.p, state.rho * sigma3.exp())
}

/// Jacobian of [`contact_map`] in the state argument (diagonal).
pub fn contact_jacobian(sigma2: f64, sigma3: f64) -> [f64; 4] {
    let e2 = sigma2.exp();
    [e2, e2, 1.0, sigma3.exp()]
}

/// Point on the Hugoniot locus through `below` at `t = ln(rho / rho_below)`,
/// together with the shock slope. Valid for both signs of `t`.
pub fn hugoniot_log(
    gas: &GasModel,
    below: &FlowState,
    family: WaveFamily,
    t: f64,
) -> Result<(FlowState, f64), CurveError> {
    if !family.is_nonlinear() {
        return Err(CurveError::NotAShock(family.name()));
    }
    let sign = family.sign();
    if t == 0.0 {
        return Ok((*below, gas.nonlinear_slope(below, sign)?));
    }
    gas.nonlinear_slope(below, sign)?;
    let g = gas.gamma;
    let r = t.exp();
    let b = 0.5 * ((g + 1.0) - (g - 1.0) * r);
    if !(b > 0.0) || !r.is_finite() {
        return Err(CurveError::OutOfRange { strength: t });
    }
    let p = below.p * ((g + 1.0) * r - (g - 1.0)) / (2.0 * b);
    let c0sq = g * below.p / below.rho;
    let cbar = (c0sq * r / b).sqrt();
    let q0 = below.speed();
    if !(cbar < q0) || !(p > 0.0) {
        return Err(CurveError::OutOfRange { strength: t });
    }
    let psi = below.angle();
    let ratio = cbar / q0;
    let phi = psi + sign * ratio.asin();
    let along = q0 * (1.0 - ratio * ratio).sqrt();
    let normal = -sign * cbar / r;
    let (sp, cp) = phi.sin_cos();
    let state = FlowState::new(along * cp - normal * sp, along * sp + normal * cp, p, below.rho * r);
    gas.check(&state)?;
    Ok((state, phi.tan()))
}

/// Rarefaction integral curve traced in `t`, classical RK4.
pub fn rarefaction_log(
    gas: &GasModel,
    below: &FlowState,
    family: WaveFamily,
    t: f64,
) -> Result<FlowState, CurveError> {
    if !family.is_nonlinear() {
        return Err(CurveError::NoCurve(family.name()));
    }
    let sign = family.sign();
    gas.nonlinear_slope(below, sign)?;
    if t == 0.0 {
        return Ok(*below);
    }
    let s0 = gas.entropy(below)?;
    let mut n = ((t.abs() / 1e-3).ceil() as usize).max(1);
    let mut drift = f64::INFINITY;
    for _ in 0..8 {
        let end = integrate(gas, below, sign, t, n)?;
        drift = (gas.entropy(&end)? - s0).abs();
        if drift <= 1e-9 {
            gas.nonlinear_slope(&end, sign)?;
            return Ok(end);
        }
        n *= 2;
    }
    Err(CurveError::Integration { drift })
}

fn rhs(gas: &GasModel, y: [f64; 3], rho: f64, sign: f64) -> Result<[f64; 3], CurveError> {
    let s = FlowState::new(y[0], y[1], y[2], rho);
    let c = gas.sound_speed(&s)?;
    let disc = s.u * s.u + s.v * s.v - c * c;
    if !(disc > 0.0) || !(s.u > c) {
        return Err(CurveError::OutOfRange { strength: rho });
    }
    let l = crate::gas::slope_formula(s.u, s.v, c, sign);
    let m = l * s.u - s.v;
    let dv = c * c / m;
    Ok([-l * dv, dv, c * c * rho])
}

fn integrate(
    gas: &GasModel,
    below: &FlowState,
    sign: f64,
    t: f64,
    n: usize,
) -> Result<FlowState, CurveError> {
    let h = t / n as f64;
    let mut y = [below.u, below.v, below.p];
    let axpy = |y: [f64; 3], k: [f64; 3], a: f64| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];
    for i in 0..n {
        let tau = i as f64 * h;
        let rho = |s: f64| below.rho * (tau + s).exp();
        let k1 = rhs(gas, y, rho(0.0), sign)?;
        let k2 = rhs(gas, axpy(y, k1, 0.5 * h), rho(0.5 * h), sign)?;
        let k3 = rhs(gas, axpy(y, k2, 0.5 * h), rho(0.5 * h), sign)?;
        let k4 = rhs(gas, axpy(y, k3, h), rho(h), sign)?;
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    let out = FlowState::new(y[0], y[1], y[2], below.rho * t.exp());
    gas.check(&out)?;
    Ok(out)
}

/// Log-density increment produced by strength `alpha` from `below`.
pub fn log_increment(gas: &GasModel, below: &FlowState, family: WaveFamily, alpha: f64) -> Result<f64, CurveError> {
    Ok(gas.log_density_rate(below, family.sign())? * alpha)
}

/// Composite curve: shock branch for `alpha < 0`, rarefaction for
/// `alpha > 0`; contact maps for families 2 and 3.
pub fn wave_map(gas: &GasModel, state: &FlowState, family: WaveFamily, alpha: f64) -> Result<FlowState, CurveError> {
    match family {
        WaveFamily::Contact2 => Ok(contact_map(state, alpha, 0.0)),
        WaveFamily::Contact3 => Ok(contact_map(state, 0.0, alpha)),
        WaveFamily::F1 | WaveFamily::F4 => {
            if alpha == 0.0 {
                gas.check(state)?;
                return Ok(*state);
            }
            let t = log_increment(gas, state, family, alpha)?;
            if alpha < 0.0 {
                Ok(hugoniot_log(gas, state, family, t)?.0)
            } else {
                rarefaction_log(gas, state, family, t)
            }
        }
        other => Err(CurveError::NoCurve(other.name())),
    }
}

/// Hugoniot branch for both signs, in the same normalised parameter.
pub fn hugoniot_map(gas: &GasModel, state: &FlowState, family: WaveFamily, h: f64) -> Result<(FlowState, f64), CurveError> {
    match family {
        WaveFamily::Contact2 | WaveFamily::Contact3 => {
            let s = wave_map(gas, state, family, h)?;
            Ok((s, state.v / state.u))
        }
        _ => {
            let t = log_increment(gas, state, family, h)?;
            hugoniot_log(gas, state, family, t)
        }
    }
}

/// Build the wave record for `alpha` in `family` from `back`.
pub fn make_wave(gas: &GasModel, back: &FlowState, family: WaveFamily, alpha: f64) -> Result<Wave, CurveError> {
    let (front, lo, hi) = match family {
        WaveFamily::Contact2 | WaveFamily::Contact3 => {
            let f = wave_map(gas, back, family, alpha)?;
            let l = back.v / back.u;
            (f, l, l)
        }
        WaveFamily::F1 | WaveFamily::F4 => {
            let sign = family.sign();
            if alpha < 0.0 {
                let t = log_increment(gas, back, family, alpha)?;
                let (f, sigma) = hugoniot_log(gas, back, family, t)?;
                (f, sigma, sigma)
            } else {
                let f = wave_map(gas, back, family, alpha)?;
                (f, gas.nonlinear_slope(back, sign)?, gas.nonlinear_slope(&f, sign)?)
            }
        }
        other => return Err(CurveError::NoCurve(other.name())),
    };
    Ok(Wave { family, strength: alpha, pair: None, back: *back, front, speed_lo: lo, speed_hi: hi })
}

/// Admissible shock of normalised size `magnitude > 0` in `y`-order from
/// the state below.
pub fn shock_state(gas: &GasModel, back: &FlowState, family: WaveFamily, magnitude: f64) -> Result<Wave, CurveError> {
    if !family.is_nonlinear() {
        return Err(CurveError::NotAShock(family.name()));
    }
    make_wave(gas, back, family, -magnitude.abs())
}

/// Rarefaction of normalised size `magnitude >= 0` from the state below.
pub fn rarefaction_state(gas: &GasModel, back: &FlowState, family: WaveFamily, magnitude: f64) -> Result<Wave, CurveError> {
    if !family.is_nonlinear() {
        return Err(CurveError::NoCurve(family.name()));
    }
    make_wave(gas, back, family, magnitude.abs())
}

/// Oblique shock from its upstream state with the given density ratio
/// (downstream over upstream). The returned wave is in `y`-order, so for
/// a 4-shock the computed downstream state is `back`.
pub fn oblique_shock(gas: &GasModel, upstream: &FlowState, family: WaveFamily, density_ratio: f64) -> Result<Wave, CurveError> {
    if !family.is_nonlinear() {
        return Err(CurveError::NotAShock(family.name()));
    }
    if !(density_ratio > 1.0) {
        return Err(CurveError::OutOfRange { strength: density_ratio });
    }
    let t = density_ratio.ln();
    if family == WaveFamily::F1 {
        let (down, sigma) = hugoniot_log(gas, upstream, WaveFamily::F1, t)?;
        let alpha = t / gas.log_density_rate(upstream, -1.0)?;
        Ok(Wave { family, strength: alpha, pair: None, back: *upstream, front: down, speed_lo: sigma, speed_hi: sigma })
    } else {
        let m = upstream.mirrored();
        let (down, sigma) = hugoniot_log(gas, &m, WaveFamily::F1, t)?;
        let back = down.mirrored();
        let alpha = -t / gas.log_density_rate(&back, 1.0)?;
        Ok(Wave { family, strength: alpha, pair: None, back, front: *upstream, speed_lo: -sigma, speed_hi: -sigma })
    }
}

/// Slope of the discontinuity joining `back` and `front` read off the
/// first mass-flux component of the jump condition.
pub fn jump_slope(gas: &GasModel, back: &FlowState, front: &FlowState) -> Result<f64, CurveError> {
    let (wb, hb) = gas.fluxes(back)?;
    let (wf, hf) = gas.fluxes(front)?;
    let dw = wf[0] - wb[0];
    let dh = hf[0] - hb[0];
    if dw.abs() < 1e-300 {
        return Err(CurveError::NotAShock("degenerate jump"));
    }
    Ok(dh / dw)
}

/// Sup norm of `sigma [W] - [H]`.
pub fn rankine_hugoniot_residual(gas: &GasModel, back: &FlowState, front: &FlowState, slope: f64) -> Result<f64, CurveError> {
    let (wb, hb) = gas.fluxes(back)?;
    let (wf, hf) = gas.fluxes(front)?;
    Ok((0..4)
        .map(|i| (slope * (wf[i] - wb[i]) - (hf[i] - hb[i])).abs())
        .fold(0.0, f64::max))
}

/// Entropy admissibility of a nonlinear discontinuity.
pub fn check_entropy(gas: &GasModel, wave: &Wave) -> Result<EntropyCheck, CurveError> {
    if !wave.family.is_nonlinear() {
        return Err(CurveError::NotAShock(wave.family.name()));
    }
    let sign = wave.family.sign();
    let sigma = wave.speed();
    let lb = gas.nonlinear_slope(&wave.back, sign)?;
    let la = gas.nonlinear_slope(&wave.front, sign)?;
    // Upstream is below for the 1-family and above for the 4-family.
    let (up, down) = if wave.family == WaveFamily::F1 { (wave.back, wave.front) } else { (wave.front, wave.back) };
    let contact_b = wave.back.v / wave.back.u;
    let contact_f = wave.front.v / wave.front.u;
    let separated = if wave.family == WaveFamily::F1 {
        sigma < contact_b && sigma < contact_f
    } else {
        contact_b < sigma && contact_f < sigma
    };
    Ok(EntropyCheck {
        compressive: up.rho < down.rho,
        lax_characteristic: la < sigma && sigma < lb,
        lax_as_printed: lb < sigma && sigma < la,
        separated,
        lax_margin: (sigma - la).min(lb - sigma),
        density_jump: down.rho - up.rho,
    })
}
