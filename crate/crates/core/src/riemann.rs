//! Riemann solvers: weak waves, the strong contact, the lateral (wall)
//! problem and the simplified solver that lumps its error into a single
//! non-physical front.

use serde::{Deserialize, Serialize};

use crate::coefficients::Background;
use crate::error::{CurveError, SolverError};
use crate::gas::{FlowState, GasModel};
use crate::numerics::{newton4, NewtonOptions, Vec4};
use crate::wave_curves::{contact_map, make_wave, wave_map, Wave, WaveFamily};

/// Waves weaker than this are dropped from fans.
pub const DROP_BELOW: f64 = 1e-12;

/// A wall edge: direction angle, outward normal, and the turning angle at
/// the vertex where the edge starts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub angle: f64,
    pub normal: [f64; 2],
    pub turning: f64,
}

impl BoundaryEdge {
    pub fn new(angle: f64, turning: f64) -> Self {
        Self { angle, normal: [angle.sin(), -angle.cos()], turning }
    }

    pub fn flat() -> Self {
        Self::new(0.0, 0.0)
    }

    /// `(u, v) . n`.
    pub fn tangency(&self, s: &FlowState) -> f64 {
        s.u * self.normal[0] + s.v * self.normal[1]
    }
}

/// Self-similar solution of a Riemann problem, waves in increasing speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFan {
    pub below: FlowState,
    pub above: FlowState,
    pub waves: Vec<Wave>,
    pub residual: f64,
    pub contains_strong: bool,
    pub nonphysical_strength: f64,
}

impl WaveFan {
    fn from_waves(below: FlowState, above: FlowState, waves: Vec<Wave>, residual: f64) -> Self {
        let contains_strong = waves.iter().any(|w| w.family == WaveFamily::StrongContact);
        let nonphysical_strength = waves
            .iter()
            .filter(|w| w.family == WaveFamily::NonPhysical)
            .map(|w| w.strength.abs())
            .sum();
        Self { below, above, waves, residual, contains_strong, nonphysical_strength }
    }

    /// Signed strength per characteristic family (0 when absent).
    pub fn strengths(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for w in &self.waves {
            if let Some(j) = w.family.index() {
                out[j - 1] += w.strength;
            }
        }
        out
    }

    /// State on the ray `dy/dx = xi`. On a discontinuity ray the state
    /// above is returned.
    pub fn sample(&self, gas: &GasModel, xi: f64) -> Result<FlowState, CurveError> {
        let mut current = self.below;
        for w in &self.waves {
            if xi < w.speed_lo {
                return Ok(current);
            }
            if w.is_rarefaction() && xi < w.speed_hi {
                return rarefaction_at(gas, w, xi);
            }
            current = w.front;
        }
        Ok(current)
    }
}

fn rarefaction_at(gas: &GasModel, w: &Wave, xi: f64) -> Result<FlowState, CurveError> {
    let sign = w.family.sign();
    let f = |a: f64| -> Result<f64, CurveError> {
        let s = wave_map(gas, &w.back, w.family, a)?;
        Ok(gas.nonlinear_slope(&s, sign)? - xi)
    };
    let (mut lo, mut hi) = (0.0, w.strength);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo >= 0.0 {
        return Ok(w.back);
    }
    if fhi <= 0.0 {
        return Ok(w.front);
    }
    for _ in 0..200 {
        // Regula falsi with bisection fallback.
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() < 1e-14 || (hi - lo) < 1e-15 {
            return wave_map(gas, &w.back, w.family, mid);
        }
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let _ = flo;
    wave_map(gas, &w.back, w.family, 0.5 * (lo + hi))
}

/// Descriptor of a front entering a collision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Incoming {
    /// Genuinely nonlinear wave of family 1 or 4.
    Nonlinear { family: WaveFamily, strength: f64 },
    /// Weak vortex sheet and entropy wave travelling together.
    Contact { sigma2: f64, sigma3: f64 },
    Strong { sigma2: f64, sigma3: f64 },
    NonPhysical,
}

impl Incoming {
    pub fn is_weak_physical(&self) -> bool {
        matches!(self, Incoming::Nonlinear { .. } | Incoming::Contact { .. })
    }

    /// State produced by this front from `below`; the non-physical front
    /// has no curve of its own.
    pub fn apply(&self, gas: &GasModel, below: &FlowState) -> Result<Option<FlowState>, CurveError> {
        Ok(match *self {
            Incoming::Nonlinear { family, strength } => Some(wave_map(gas, below, family, strength)?),
            Incoming::Contact { sigma2, sigma3 } | Incoming::Strong { sigma2, sigma3 } => {
                Some(contact_map(below, sigma2, sigma3))
            }
            Incoming::NonPhysical => None,
        })
    }

    /// Scalar size used for thresholds: `|alpha|` or `|s2| + |s3|`.
    pub fn size(&self) -> f64 {
        match *self {
            Incoming::Nonlinear { strength, .. } => strength.abs(),
            Incoming::Contact { sigma2, sigma3 } | Incoming::Strong { sigma2, sigma3 } => sigma2.abs() + sigma3.abs(),
            Incoming::NonPhysical => 0.0,
        }
    }
}

/// Solver configuration shared by a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Riemann {
    pub gas: GasModel,
    pub newton: NewtonOptions,
    /// Admissible sup distance of inputs from their background state.
    pub trust_radius: f64,
    /// Speed of non-physical fronts.
    pub lambda_hat: f64,
}

impl Riemann {
    pub fn new(gas: GasModel, lambda_hat: f64) -> Self {
        Self { gas, newton: NewtonOptions::default(), trust_radius: 0.3, lambda_hat }
    }

    /// `lambda_hat` for a background: the largest 4-speed plus a margin.
    pub fn lambda_hat_for(gas: &GasModel, bg: &Background, margin: f64) -> Result<f64, SolverError> {
        let l = gas.nonlinear_slope(&bg.minus, 1.0)?.max(gas.nonlinear_slope(&bg.plus, 1.0)?);
        Ok(l + margin)
    }

    fn compose(&self, below: &FlowState, a: &Vec4) -> Result<FlowState, CurveError> {
        let mut s = *below;
        for (k, fam) in [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3, WaveFamily::F4].iter().enumerate() {
            s = wave_map(&self.gas, &s, *fam, a[k])?;
        }
        Ok(s)
    }

    fn chain(&self, below: &FlowState, parts: &[(WaveFamily, f64)]) -> Result<Vec<Wave>, CurveError> {
        let mut waves = Vec::new();
        let mut s = *below;
        for &(fam, a) in parts {
            if a.abs() <= DROP_BELOW {
                continue;
            }
            let w = make_wave(&self.gas, &s, fam, a)?;
            s = w.front;
            waves.push(w);
        }
        Ok(waves)
    }

    fn close(&self, waves: &mut [Wave], below: &FlowState, above: &FlowState) -> f64 {
        // Pin the last state exactly to the target so neighbours chain.
        let end = waves.last().map(|w| w.front).unwrap_or(*below);
        let residual = end.sup_dist(above);
        if let Some(w) = waves.last_mut() {
            w.front = *above;
        }
        residual
    }

    /// Weak-wave solver. Both states must lie near a common background,
    /// checked as `|above - below| <= 2 * trust_radius`.
    pub fn solve_weak(&self, below: &FlowState, above: &FlowState) -> Result<WaveFan, SolverError> {
        self.gas.slopes(below)?;
        self.gas.slopes(above)?;
        let distance = below.sup_dist(above);
        if distance > 2.0 * self.trust_radius {
            return Err(SolverError::TrustRegion { distance, radius: 2.0 * self.trust_radius });
        }
        let target = Vec4::from(above.to_array());
        let out = newton4(
            |a: &Vec4| -> Result<Vec4, CurveError> { Ok(Vec4::from(self.compose(below, a)?.to_array()) - target) },
            Vec4::zeros(),
            &self.newton,
        )?;
        let a = out.root;
        let mut waves = self.chain(
            below,
            &[(WaveFamily::F1, a[0]), (WaveFamily::Contact2, a[1]), (WaveFamily::Contact3, a[2]), (WaveFamily::F4, a[3])],
        )?;
        let residual = self.close(&mut waves, below, above);
        Ok(WaveFan::from_waves(*below, *above, waves, residual))
    }

    /// Strengths only, without assembling waves.
    pub fn weak_strengths(&self, below: &FlowState, above: &FlowState) -> Result<[f64; 4], SolverError> {
        let fan = self.solve_weak(below, above)?;
        Ok(fan.strengths())
    }

    /// Strong contact interaction: `below` near `U_-`, `above` near `U_+`.
    pub fn solve_strong(&self, bg: &Background, below: &FlowState, above: &FlowState) -> Result<WaveFan, SolverError> {
        self.gas.slopes(below)?;
        self.gas.slopes(above)?;
        for (s, b) in [(below, &bg.minus), (above, &bg.plus)] {
            let distance = s.sup_dist(b);
            if distance > self.trust_radius {
                return Err(SolverError::TrustRegion { distance, radius: self.trust_radius });
            }
        }
        let target = Vec4::from(above.to_array());
        let guess = Vec4::new(0.0, (above.speed() / below.speed()).ln(), (above.rho / below.rho).ln(), 0.0);
        let gas = self.gas;
        let out = newton4(
            |x: &Vec4| -> Result<Vec4, CurveError> {
                let s1 = wave_map(&gas, below, WaveFamily::F1, x[0])?;
                let s2 = contact_map(&s1, x[1], x[2]);
                let s3 = wave_map(&gas, &s2, WaveFamily::F4, x[3])?;
                Ok(Vec4::from(s3.to_array()) - target)
            },
            guess,
            &self.newton,
        )?;
        let x = out.root;
        self.strong_fan(below, above, x[0], (x[1], x[2]), x[3])
    }

    fn strong_fan(&self, below: &FlowState, above: &FlowState, d1: f64, pair: (f64, f64), d4: f64) -> Result<WaveFan, SolverError> {
        let mut waves = self.chain(below, &[(WaveFamily::F1, d1)])?;
        let s1 = waves.last().map(|w| w.front).unwrap_or(*below);
        let s2 = contact_map(&s1, pair.0, pair.1);
        let slope = s1.v / s1.u;
        waves.push(Wave {
            family: WaveFamily::StrongContact,
            strength: pair.0 + pair.1,
            pair: Some(pair),
            back: s1,
            front: s2,
            speed_lo: slope,
            speed_hi: slope,
        });
        waves.extend(self.chain(&s2, &[(WaveFamily::F4, d4)])?);
        let residual = self.close(&mut waves, below, above);
        Ok(WaveFan::from_waves(*below, *above, waves, residual))
    }

    /// Lateral problem at a wall edge: a single 4-wave from a state tangent
    /// to the edge up to `above`.
    pub fn solve_lateral(&self, above: &FlowState, edge: &BoundaryEdge) -> Result<WaveFan, SolverError> {
        self.gas.slopes(above)?;
        let tan = edge.angle.tan();
        let target = Vec4::from(above.to_array());
        let gas = self.gas;
        let result = newton4(
            |x: &Vec4| -> Result<Vec4, CurveError> {
                let wall = FlowState::new(x[1], x[1] * tan, x[2], x[3]);
                let s = wave_map(&gas, &wall, WaveFamily::F4, x[0])?;
                Ok(Vec4::from(s.to_array()) - target)
            },
            Vec4::new(0.0, above.u, above.p, above.rho),
            &self.newton,
        );
        let out = match result {
            Ok(o) => o,
            Err(e) => {
                let turn = (edge.angle - above.angle()).abs();
                return Err(if turn > 0.2 { SolverError::Detached { angle: turn } } else { e });
            }
        };
        let x = out.root;
        let wall = FlowState::new(x[1], x[1] * tan, x[2], x[3]);
        let mut waves = self.chain(&wall, &[(WaveFamily::F4, x[0])])?;
        let residual = self.close(&mut waves, &wall, above);
        Ok(WaveFan::from_waves(wall, *above, waves, residual))
    }

    /// State `U_b` with `wave_map(U_b, family, alpha) = above`.
    pub fn inverse_wave_map(&self, above: &FlowState, family: WaveFamily, alpha: f64) -> Result<FlowState, SolverError> {
        let target = Vec4::from(above.to_array());
        let gas = self.gas;
        let out = newton4(
            |x: &Vec4| -> Result<Vec4, CurveError> {
                let s = wave_map(&gas, &FlowState::from_array([x[0], x[1], x[2], x[3]]), family, alpha)?;
                Ok(Vec4::from(s.to_array()) - target)
            },
            target,
            &self.newton,
        )?;
        let r = out.root;
        Ok(FlowState::new(r[0], r[1], r[2], r[3]))
    }

    fn nonphysical(&self, back: FlowState, front: FlowState) -> Wave {
        Wave {
            family: WaveFamily::NonPhysical,
            strength: back.sup_dist(&front),
            pair: None,
            back,
            front,
            speed_lo: self.lambda_hat,
            speed_hi: self.lambda_hat,
        }
    }

    fn incoming_wave(&self, inc: &Incoming, below: &FlowState) -> Result<Vec<Wave>, SolverError> {
        Ok(match *inc {
            Incoming::Nonlinear { family, strength } => self.chain(below, &[(family, strength)])?,
            Incoming::Contact { sigma2, sigma3 } => {
                self.chain(below, &[(WaveFamily::Contact2, sigma2), (WaveFamily::Contact3, sigma3)])?
            }
            Incoming::Strong { sigma2, sigma3 } => {
                let front = contact_map(below, sigma2, sigma3);
                let slope = below.v / below.u;
                vec![Wave {
                    family: WaveFamily::StrongContact,
                    strength: sigma2 + sigma3,
                    pair: Some((sigma2, sigma3)),
                    back: *below,
                    front,
                    speed_lo: slope,
                    speed_hi: slope,
                }]
            }
            Incoming::NonPhysical => Vec::new(),
        })
    }

    /// Simplified solver for the collision of `lower` (between `states[0]`
    /// and `states[1]`) with `upper` (between `states[1]` and `states[2]`).
    ///
    /// Physical structure is carried through with unchanged strengths; the
    /// mismatch with `states[2]` goes into one non-physical front on top.
    pub fn solve_simplified(&self, lower: &Incoming, upper: &Incoming, states: [FlowState; 3]) -> Result<WaveFan, SolverError> {
        let [below, _, above] = states;
        let physical: Vec<Incoming> = match (*lower, *upper) {
            // The weak wave is absorbed; the strong contact keeps its pair.
            (Incoming::Strong { .. }, w) | (w, Incoming::Strong { .. }) if w.is_weak_physical() => {
                let strong = if matches!(lower, Incoming::Strong { .. }) { *lower } else { *upper };
                match (strong, w) {
                    (Incoming::Strong { sigma2, sigma3 }, Incoming::Contact { sigma2: c2, sigma3: c3 }) => {
                        vec![Incoming::Strong { sigma2: sigma2 + c2, sigma3: sigma3 + c3 }]
                    }
                    _ => vec![strong],
                }
            }
            (Incoming::Nonlinear { family: f, strength: a }, Incoming::Nonlinear { family: g, strength: b }) if f == g => {
                vec![Incoming::Nonlinear { family: f, strength: a + b }]
            }
            (Incoming::Contact { sigma2: a2, sigma3: a3 }, Incoming::Contact { sigma2: b2, sigma3: b3 }) => {
                vec![Incoming::Contact { sigma2: a2 + b2, sigma3: a3 + b3 }]
            }
            (Incoming::NonPhysical, Incoming::NonPhysical) => Vec::new(),
            (Incoming::NonPhysical, p) | (p, Incoming::NonPhysical) => vec![p],
            (l, u) => vec![u, l],
        };
        let mut waves = Vec::new();
        let mut s = below;
        for inc in &physical {
            for w in self.incoming_wave(inc, &s)? {
                s = w.front;
                waves.push(w);
            }
        }
        if s.sup_dist(&above) > 0.0 {
            waves.push(self.nonphysical(s, above));
        }
        Ok(WaveFan::from_waves(below, above, waves, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_edge_normal_points_down() {
        let e = BoundaryEdge::flat();
        assert_eq!(e.normal, [0.0, -1.0]);
    }

    #[test]
    fn identical_states_give_an_empty_fan() {
        let r = Riemann::new(GasModel::default(), 2.0);
        let u = FlowState::new(2.0, 0.0, 1.0, 1.4);
        let fan = r.solve_weak(&u, &u).unwrap();
        assert!(fan.waves.is_empty());
    }
}
