//! Reflection and transmission coefficients at the strong contact and at
//! the wall, and the choice of every weight entering the Glimm and
//! Lyapunov functionals.

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoefficientError, SolverError};
use crate::gas::{FlowState, GasModel};
use crate::riemann::{BoundaryEdge, Riemann};
use crate::wave_curves::{contact_map, WaveFamily};

/// The two background states separated by the strong contact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub minus: FlowState,
    pub plus: FlowState,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl Background {
    pub fn new(gas: &GasModel, minus: FlowState, sigma2: f64, sigma3: f64) -> Result<Self, CoefficientError> {
        let bg = Self { minus, plus: contact_map(&minus, sigma2, sigma3), sigma2, sigma3 };
        bg.validate(gas)?;
        Ok(bg)
    }

    pub fn validate(&self, gas: &GasModel) -> Result<(), CoefficientError> {
        for (name, s) in [("below", &self.minus), ("above", &self.plus)] {
            if s.v != 0.0 {
                return Err(CoefficientError::Background(format!("{name} state must be horizontal")));
            }
            gas.slopes(s).map_err(|e| CoefficientError::Background(format!("{name} state: {e}")))?;
        }
        let expect = contact_map(&self.minus, self.sigma2, self.sigma3);
        if expect.sup_dist(&self.plus) > 1e-12 * (1.0 + expect.u.abs() + expect.rho.abs()) {
            return Err(CoefficientError::Background("above state is not the contact image of the state below".into()));
        }
        Ok(())
    }

    /// Both slopes `(lambda_1, lambda_4)` on each side, below first.
    pub fn slopes(&self, gas: &GasModel) -> Result<([f64; 4], [f64; 4]), CoefficientError> {
        Ok((gas.slopes(&self.minus)?, gas.slopes(&self.plus)?))
    }
}

/// Interaction coefficients: `k1` for a 4-wave hitting the strong contact
/// from below, `k2` for a 1-wave hitting it from above, `kb` for the wall
/// (`[theta, beta1, beta2, beta3]`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub k1: [f64; 4],
    pub k2: [f64; 4],
    pub kb: [f64; 4],
}

impl CoefficientSet {
    pub fn k11(&self) -> f64 {
        self.k1[0]
    }
    pub fn k14(&self) -> f64 {
        self.k1[3]
    }
    pub fn k21(&self) -> f64 {
        self.k2[0]
    }
    pub fn k24(&self) -> f64 {
        self.k2[3]
    }
    pub fn kb0(&self) -> f64 {
        self.kb[0]
    }
    pub fn kb1(&self) -> f64 {
        self.kb[1]
    }
}

/// Closed-form magnitudes `(|K11|, |K14|, |K21|, |K24|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedForms {
    pub k11: f64,
    pub k14: f64,
    pub k21: f64,
    pub k24: f64,
}

pub fn k11_closed_form(gas: &GasModel, bg: &Background) -> Result<f64, CoefficientError> {
    Ok(closed_forms(gas, bg)?.k11)
}

pub fn closed_forms(gas: &GasModel, bg: &Background) -> Result<ClosedForms, CoefficientError> {
    let l4m = gas.nonlinear_slope(&bg.minus, 1.0)?;
    let l4p = gas.nonlinear_slope(&bg.plus, 1.0)?;
    let k4m = gas.renorm(&bg.minus, 1.0)?;
    let k4p = gas.renorm(&bg.plus, 1.0)?;
    let k1m = gas.renorm(&bg.minus, -1.0)?;
    let k1p = gas.renorm(&bg.plus, -1.0)?;
    let (s2, s3) = (bg.sigma2, bg.sigma3);
    let e = (2.0 * s2 + s3).exp();
    let den = l4p * e + l4m;
    Ok(ClosedForms {
        k11: ((l4p * e - l4m) / den).abs(),
        k14: (2.0 * k4m * s2.exp() * l4m / (k4p * den)).abs(),
        k21: (2.0 * k1p * l4p * (s2 + s3).exp() / (k1m * den)).abs(),
        k24: ((-l4p * e + l4m) / den).abs(),
    })
}

/// `det(r4(U+), G_s3, G_s2, dG r1(U-))` at the background.
pub fn contact_determinant(gas: &GasModel, bg: &Background) -> Result<f64, CoefficientError> {
    let r4 = gas.eigen(&bg.plus)?.vectors[3];
    let r1 = gas.eigen(&bg.minus)?.vectors[0];
    let m = &bg.minus;
    let e2 = bg.sigma2.exp();
    let e3 = bg.sigma3.exp();
    let gs3 = [0.0, 0.0, 0.0, m.rho * e3];
    let gs2 = [m.u * e2, m.v * e2, 0.0, 0.0];
    let jr1 = [e2 * r1[0], e2 * r1[1], r1[2], e3 * r1[3]];
    let mat = Matrix4::from_columns(&[r4.into(), gs3.into(), gs2.into(), jr1.into()]);
    Ok(mat.determinant())
}

/// Central differences with one Richardson correction when the two
/// step sizes disagree.
fn central<F>(mut f: F, h: f64, name: &'static str) -> Result<f64, CoefficientError>
where
    F: FnMut(f64) -> Result<f64, SolverError>,
{
    let mut d = |step: f64| -> Result<f64, CoefficientError> {
        let v = (f(step)? - f(-step)?) / (2.0 * step);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CoefficientError::NonFinite(name))
        }
    };
    let full = d(h)?;
    let half = d(0.5 * h)?;
    if (full - half).abs() > 1e-6 {
        Ok((4.0 * half - full) / 3.0)
    } else {
        Ok(half)
    }
}

const FD_STEP: f64 = 1e-5;

fn strong_outcome(solver: &Riemann, bg: &Background, below: &FlowState, above: &FlowState) -> Result<[f64; 4], SolverError> {
    let fan = solver.solve_strong(bg, below, above)?;
    let mut out = [0.0, -bg.sigma2, -bg.sigma3, 0.0];
    for w in &fan.waves {
        match w.family {
            WaveFamily::F1 => out[0] += w.strength,
            WaveFamily::F4 => out[3] += w.strength,
            WaveFamily::StrongContact => {
                let (a, b) = w.pair.unwrap_or((0.0, 0.0));
                out[1] += a;
                out[2] += b;
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Signed coefficients by differentiating the strong and lateral solvers
/// at the background.
pub fn finite_difference_coefficients(solver: &Riemann, bg: &Background) -> Result<CoefficientSet, CoefficientError> {
    let mut k1 = [0.0; 4];
    let mut k2 = [0.0; 4];
    let mut kb = [0.0; 4];
    for j in 0..4 {
        k1[j] = central(
            |a| {
                let below = solver.inverse_wave_map(&bg.minus, WaveFamily::F4, a)?;
                Ok(strong_outcome(solver, bg, &below, &bg.plus)?[j])
            },
            FD_STEP,
            "below incidence",
        )?;
        k2[j] = central(
            |b| {
                let above = crate::wave_curves::wave_map(&solver.gas, &bg.plus, WaveFamily::F1, b)?;
                Ok(strong_outcome(solver, bg, &bg.minus, &above)?[j])
            },
            FD_STEP,
            "above incidence",
        )?;
    }
    kb[0] = central(|t| lateral_delta(solver, &bg.minus, [0.0; 3], t), FD_STEP, "wall angle")?;
    for j in 0..3 {
        kb[j + 1] = central(
            |b| {
                let mut beta = [0.0; 3];
                beta[j] = b;
                lateral_delta(solver, &bg.minus, beta, 0.0)
            },
            FD_STEP,
            "wall incidence",
        )?;
    }
    Ok(CoefficientSet { k1, k2, kb })
}

fn lateral_delta(solver: &Riemann, wall_state: &FlowState, beta: [f64; 3], theta: f64) -> Result<f64, SolverError> {
    let gas = &solver.gas;
    let mut s = *wall_state;
    for (fam, b) in [(WaveFamily::F1, beta[0]), (WaveFamily::Contact2, beta[1]), (WaveFamily::Contact3, beta[2])] {
        s = crate::wave_curves::wave_map(gas, &s, fam, b)?;
    }
    let fan = solver.solve_lateral(&s, &BoundaryEdge::new(theta, theta))?;
    Ok(fan.strengths()[3])
}

/// Wall coefficients `(Kb0, Kb1, Kb2, Kb3)` at `state` on a wall of
/// direction `edge.angle`.
pub fn boundary_coefficients(solver: &Riemann, bg: &Background, edge: &BoundaryEdge) -> Result<[f64; 4], CoefficientError> {
    let base = if edge.angle == 0.0 {
        bg.minus
    } else {
        // Rotate the background state onto the edge direction.
        let q = bg.minus.speed();
        FlowState::new(q * edge.angle.cos(), q * edge.angle.sin(), bg.minus.p, bg.minus.rho)
    };
    let mut kb = [0.0; 4];
    kb[0] = central(
        |t| {
            let fan = solver.solve_lateral(&base, &BoundaryEdge::new(edge.angle + t, t))?;
            Ok(fan.strengths()[3])
        },
        FD_STEP,
        "wall angle",
    )?;
    for j in 0..3 {
        kb[j + 1] = central(
            |b| {
                let mut s = base;
                let fam = [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3][j];
                s = crate::wave_curves::wave_map(&solver.gas, &s, fam, b)?;
                let fan = solver.solve_lateral(&s, &BoundaryEdge::new(edge.angle, 0.0))?;
                Ok(fan.strengths()[3])
            },
            FD_STEP,
            "wall incidence",
        )?;
    }
    Ok(kb)
}

/// Quadratic interaction measure between two consecutive weak fans.
pub fn interaction_measure(alpha: &[f64; 4], beta: &[f64; 4]) -> f64 {
    let a = |i: usize| alpha[i].abs();
    let b = |i: usize| beta[i].abs();
    let mut d = (a(3) + a(2) + a(1)) * b(0) + a(3) * (b(1) + b(2));
    for j in [0, 3] {
        if !(alpha[j] >= 0.0 && beta[j] >= 0.0) {
            d += a(j) * b(j);
        }
    }
    d
}

/// Empirical constant in `gamma = alpha + beta + O(1) Delta(alpha, beta)`
/// from seeded weak interactions near both background states. Pairs whose
/// measure is below `MEASURE_FLOOR * |alpha|_1 |beta|_1` are skipped: there
/// the error is the non-additivity of renormalised strengths along one
/// curve, which no multiple of the measure bounds.
pub fn weak_interaction_constant(solver: &Riemann, bg: &Background, samples: usize, seed: u64) -> Result<f64, CoefficientError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fams = [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3, WaveFamily::F4];
    let mut worst: f64 = 0.0;
    let mut done = 0;
    let mut tries = 0;
    while done < samples && tries < samples * 20 {
        tries += 1;
        let base = if rng.gen_bool(0.5) { bg.minus } else { bg.plus };
        let alpha: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.04..0.04));
        let beta: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.04..0.04));
        let d = interaction_measure(&alpha, &beta);
        let size = alpha.iter().map(|a| a.abs()).sum::<f64>() * beta.iter().map(|b| b.abs()).sum::<f64>();
        if d < 1e-6 || d < MEASURE_FLOOR * size {
            continue;
        }
        let compose = |s: FlowState, a: &[f64; 4]| -> Result<FlowState, SolverError> {
            let mut s = s;
            for (k, f) in fams.iter().enumerate() {
                s = crate::wave_curves::wave_map(&solver.gas, &s, *f, a[k])?;
            }
            Ok(s)
        };
        let mid = compose(base, &alpha)?;
        let top = compose(mid, &beta)?;
        let gamma = solver.weak_strengths(&base, &top)?;
        let err = (0..4).map(|i| (gamma[i] - alpha[i] - beta[i]).abs()).fold(0.0, f64::max);
        worst = worst.max(err / d);
        done += 1;
    }
    Ok(worst)
}

/// Every weight and constant of the two functionals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    /// Empirical weak-interaction constant the potential is built on.
    pub interaction_constant: f64,
    pub k_star: f64,
    pub k_plus: f64,
    pub c_star: f64,
    pub kappa: f64,
    pub kb0_tilde: f64,
    pub w_b: [f64; 4],
    pub w_m: [f64; 4],
    pub w_a: [f64; 4],
    pub gamma_b: f64,
    pub gamma_a: f64,
    pub big: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl WeightSet {
    pub fn w_min(&self) -> f64 {
        self.w_b.iter().chain(&self.w_m).chain(&self.w_a).cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn w_max(&self) -> f64 {
        self.w_b.iter().chain(&self.w_m).chain(&self.w_a).cloned().fold(0.0, f64::max)
    }
}

/// Knobs of the selector that are not fixed by the coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorScales {
    /// Empirical weak-interaction constant.
    pub interaction_constant: f64,
    /// `C* = c_star_factor * interaction_constant`.
    pub c_star_factor: f64,
    pub kappa: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub big: f64,
}

impl Default for SelectorScales {
    fn default() -> Self {
        Self { interaction_constant: 1.0, c_star_factor: 2.0, kappa: 100.0, kappa1: 100.0, kappa2: 100.0, big: 1.0 }
    }
}

/// One inequality of the selection problem with its two sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl Constraint {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), lhs, rhs }
    }

    /// `lhs < rhs`.
    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }
}

/// Slopes needed by the selection, read off the background states.
#[derive(Clone, Copy, Debug)]
struct Speeds {
    l1m: f64,
    l4m: f64,
    l1p: f64,
    l4p: f64,
    l23: f64,
}

impl Speeds {
    fn new(gas: &GasModel, bg: &Background) -> Result<Self, CoefficientError> {
        let (m, p) = bg.slopes(gas)?;
        Ok(Self { l1m: m[0], l4m: m[3], l1p: p[0], l4p: p[3], l23: m[1] })
    }
}

/// Every inequality the weights must satisfy, evaluated at `w`.
pub fn weight_constraints(gas: &GasModel, bg: &Background, c: &CoefficientSet, w: &WeightSet) -> Result<Vec<Constraint>, CoefficientError> {
    let s = Speeds::new(gas, bg)?;
    let k11 = c.k11().abs();
    let k14 = c.k14().abs();
    let k21 = c.k21().abs();
    let k24 = c.k24().abs();
    let big = w.big * w.kappa1;
    let (two, four) = (1.0 + 2.0 * big, 1.0 + 4.0 * big);
    let r1 = ((s.l1m - s.l23) / (s.l4m - s.l23)).abs();
    let r4 = ((s.l4p - s.l23) / (s.l1p - s.l23)).abs();
    Ok(vec![
        Constraint::new("|K11| < K*", k11, w.k_star),
        Constraint::new("K* < 1", w.k_star, 1.0),
        Constraint::new("K* Kb1 < 1", w.k_star * c.kb1(), 1.0),
        Constraint::new("|Kb0| < Kb0~", c.kb0().abs(), w.kb0_tilde),
        // Weak-weak events: quadratic growth of V and of the strong/wall
        // parts must be paid by the pair term.
        Constraint::new(
            "weak interactions paid by C*",
            w.interaction_constant * (1.0 / w.kappa + w.k_star + 1.0),
            w.c_star,
        ),
        Constraint::new("w_b4 / w_b1 < 1", w.w_b[3] / w.w_b[0], 1.0),
        Constraint::new("lower bound < gamma_b", w.w_b[0] / w.w_b[3] * k11 * r1, w.gamma_b),
        Constraint::new("gamma_b < 1", w.gamma_b, 1.0),
        Constraint::new("lower bound < gamma_a", w.w_a[3] / w.w_a[0] * r4 * k24, w.gamma_a),
        Constraint::new("gamma_a < 1", w.gamma_a, 1.0),
        // Leading-order balance of the decay terms when the first strong
        // contact is crossed: pure 1-wave and pure 4-wave differences.
        Constraint::new("first crossing, 1-part", w.w_b[0] * four * s.l1m.abs(), w.w_m[0] * two * s.l1m.abs().min(s.l1p.abs())),
        Constraint::new(
            "first crossing, 4-part",
            w.w_b[0] * four * s.l1m.abs() * k11 + w.w_m[3] * two * k14 * s.l4p,
            w.w_b[3] * four * s.l4m,
        ),
        // Second strong contact.
        Constraint::new("second crossing, 4-part", w.w_a[3] * two * s.l4p, w.w_m[3] * two * s.l4m),
        Constraint::new(
            "second crossing, 1-part",
            w.w_m[0] * two * k21 * s.l1m.abs() + w.w_a[3] * two * k24 * s.l4p,
            w.w_a[0] * four * s.l1p.abs(),
        ),
        // Wall: reflected 4-part against the incident 1-part.
        Constraint::new("wall balance", w.w_b[3] * s.l4m, w.w_b[0] * s.l1m.abs()),
    ])
}

/// Deterministic weight selection with maximal margins.
pub fn select_weights(gas: &GasModel, bg: &Background, c: &CoefficientSet, scales: &SelectorScales) -> Result<WeightSet, CoefficientError> {
    let k11 = c.k11().abs();
    let k14 = c.k14().abs();
    let k21 = c.k21().abs();
    let k24 = c.k24().abs();
    if !(k11 < 1.0) {
        return Err(CoefficientError::Infeasible(format!("|K11| = {k11} is not below 1")));
    }
    if !(k24 < 1.0) {
        return Err(CoefficientError::Infeasible(format!("|K24| = {k24} is not below 1")));
    }
    let s = Speeds::new(gas, bg)?;
    let k_star = 0.5 * (k11 + 1.0);
    if !(k_star * c.kb1() < 1.0) {
        return Err(CoefficientError::Infeasible("K* Kb1 >= 1".into()));
    }
    let big = scales.big * scales.kappa1;
    let (two, four) = (1.0 + 2.0 * big, 1.0 + 4.0 * big);

    let wb1 = 0.25;
    let wm1 = 1.0;
    // Upper limit for w_b4 / w_b1 from the wall, lower one from the first
    // crossing; w_m4 takes half of the room left between them.
    let upper = s.l1m.abs() / s.l4m;
    let k11_part = k11 * s.l1m.abs() / s.l4m;
    if !(k11_part < upper) {
        return Err(CoefficientError::Infeasible("first crossing: no room for w_b4".into()));
    }
    let m4_max = (upper - k11_part) * wb1 * four * s.l4m / (k14.max(1e-12) * two * s.l4p);
    let wm4 = (0.5 * m4_max).min(1.0);
    let lower = k11_part + wm4 * k14 * two * s.l4p / (wb1 * four * s.l4m);
    let ratio_b = 0.5 * (lower + upper);
    let wb4 = ratio_b * wb1;

    let wa4 = 0.5 * wm4 * s.l4m / s.l4p;
    let wa1_min = (wm1 * two * k21 * s.l1m.abs() + wa4 * two * k24 * s.l4p) / (four * s.l1p.abs());
    let wa1 = (2.0 * wa1_min).max(0.25);

    let r1 = ((s.l1m - s.l23) / (s.l4m - s.l23)).abs();
    let r4 = ((s.l4p - s.l23) / (s.l1p - s.l23)).abs();
    let gb_lo = wb1 / wb4 * k11 * r1;
    let ga_lo = wa4 / wa1 * r4 * k24;
    let w = WeightSet {
        interaction_constant: scales.interaction_constant,
        k_star,
        k_plus: 2.0 * k21 / k_star,
        c_star: scales.c_star_factor * scales.interaction_constant,
        kappa: scales.kappa,
        kb0_tilde: 2.0 * c.kb0().abs(),
        w_b: [wb1, 1.0, 1.0, wb4],
        w_m: [wm1, 1.0, 1.0, wm4],
        w_a: [wa1, 1.0, 1.0, wa4],
        gamma_b: 0.5 * (gb_lo + 1.0),
        gamma_a: 0.5 * (ga_lo + 1.0),
        big: scales.big,
        kappa1: scales.kappa1,
        kappa2: scales.kappa2,
    };
    let failed: Vec<String> = weight_constraints(gas, bg, c, &w)?
        .into_iter()
        .filter(|k| !k.holds())
        .map(|k| k.name)
        .collect();
    if !failed.is_empty() {
        return Err(CoefficientError::Infeasible(failed.join(", ")));
    }
    Ok(w)
}

/// Relative floor on the interaction measure used by the fit.
pub const MEASURE_FLOOR: f64 = 0.2;

/// Sample size and seed of the interaction fit. Fixed so the weights
/// depend only on the background, never on a run's seed.
pub const CALIBRATION_SAMPLES: usize = 512;
pub const CALIBRATION_SEED: u64 = 0;

/// Coefficients plus weights for a background, computed once per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub coefficients: CoefficientSet,
    pub closed: ClosedForms,
    pub weights: WeightSet,
    pub interaction_constant: f64,
}

impl Calibration {
    pub fn compute(solver: &Riemann, bg: &Background) -> Result<Self, CoefficientError> {
        let coefficients = finite_difference_coefficients(solver, bg)?;
        let closed = closed_forms(&solver.gas, bg)?;
        let interaction_constant = weak_interaction_constant(solver, bg, CALIBRATION_SAMPLES, CALIBRATION_SEED)?;
        let scales = SelectorScales { interaction_constant, ..SelectorScales::default() };
        let weights = select_weights(&solver.gas, bg, &coefficients, &scales)?;
        Ok(Self { coefficients, closed, weights, interaction_constant })
    }
}
