//! Monitors: the Glimm functional with its interaction potential, the
//! pointwise Hugoniot decomposition between two solutions, the weighted
//! L1 Lyapunov functional and its decay terms.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Background, WeightSet};
use crate::error::{CurveError, FunctionalError, SolverError};
use crate::gas::{FlowState, GasModel};
use crate::geometry::Profile;
use crate::numerics::{newton4, NewtonOptions, Vec4};
use crate::tracker::{FrontKind, Side, SliceSnapshot, TANGENCY_TOL};
use crate::wave_curves::{hugoniot_map, WaveFamily};

/// Glimm functional and its parts at one `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlimmSnapshot {
    pub x: f64,
    pub v: f64,
    pub q_a: f64,
    pub q_ve: f64,
    pub q_b: f64,
    pub q_theta: f64,
    pub q_total: f64,
    pub g: f64,
    pub u_below: FlowState,
    pub u_above: FlowState,
}

/// `(family index, signed strength)` parts of a weak front; contacts carry
/// two parts at the same position.
pub(crate) fn parts(kind: &FrontKind) -> [(usize, f64); 2] {
    match *kind {
        FrontKind::Nonlinear { family, strength } => [(family.index().unwrap_or(0), strength), (0, 0.0)],
        FrontKind::Contact { sigma2, sigma3 } => [(2, sigma2), (3, sigma3)],
        _ => [(0, 0.0), (0, 0.0)],
    }
}

/// Weighted strength `|b|`: 1-waves above the strong contact count
/// `k_plus` times.
pub fn weighted(j: usize, strength: f64, side: Side, w: &WeightSet) -> f64 {
    if j == 1 && side == Side::Plus {
        w.k_plus * strength.abs()
    } else {
        strength.abs()
    }
}

/// Whether a part `(ja, sa)` lying below a part `(jb, sb)` approaches it.
pub fn approaching(ja: usize, sa: f64, jb: usize, sb: f64) -> bool {
    if ja == 0 || jb == 0 {
        return false;
    }
    ja > jb || (ja == jb && (ja == 1 || ja == 4) && (sa < 0.0 || sb < 0.0))
}

/// Sum of `|b_a b_b|` over approaching parts of `lower` below `upper`.
pub fn pair_measure(lower: &FrontKind, upper: &FrontKind, side: Side, w: &WeightSet) -> f64 {
    let mut m = 0.0;
    for (ja, sa) in parts(lower) {
        for (jb, sb) in parts(upper) {
            if approaching(ja, sa, jb, sb) {
                m += weighted(ja, sa, side, w) * weighted(jb, sb, side, w);
            }
        }
    }
    m
}

/// Inputs of the Glimm functional that are not fronts.
#[derive(Clone, Copy, Debug)]
pub struct GlimmContext {
    pub x: f64,
    /// States adjacent to the strong contact, below and above.
    pub strong_states: (FlowState, FlowState),
    /// The same states at the inlet.
    pub inlet_states: (FlowState, FlowState),
    /// Sum of `|turning|` over wall vertices still ahead.
    pub remaining_turning: f64,
}

/// `G = V + kappa Q + |U^ - U0+| + |U_ - U0-|` over fronts given bottom
/// to top. Non-physical fronts and the strong contact carry no `V` or `Q`.
pub fn glimm_snapshot<'a, I>(fronts: I, ctx: &GlimmContext, w: &WeightSet) -> GlimmSnapshot
where
    I: IntoIterator<Item = (&'a FrontKind, Side)>,
{
    let mut v = 0.0;
    let mut pairs = 0.0;
    let mut ve = 0.0;
    let mut qb = 0.0;
    // Sums over waves already passed (below), per family, and of shocks.
    let mut below = [0.0f64; 5];
    let mut shocks = [0.0f64; 5];
    let mut current = Side::Minus;
    for (kind, side) in fronts {
        if matches!(kind, FrontKind::Strong { .. }) {
            below = [0.0; 5];
            shocks = [0.0; 5];
            current = Side::Plus;
            continue;
        }
        if !kind.is_weak() {
            continue;
        }
        if side != current {
            below = [0.0; 5];
            shocks = [0.0; 5];
            current = side;
        }
        let ps = parts(kind);
        for &(j, s) in &ps {
            if j == 0 || s == 0.0 {
                continue;
            }
            let b = weighted(j, s, side, w);
            v += b;
            let mut partner: f64 = below[j + 1..].iter().sum();
            if j == 1 || j == 4 {
                partner += if s < 0.0 { below[j] } else { shocks[j] };
            }
            pairs += b * partner;
            match (j, side) {
                (4, Side::Minus) | (1, Side::Plus) => ve += b,
                (1, Side::Minus) => qb += b,
                _ => {}
            }
        }
        for &(j, s) in &ps {
            if j == 0 || s == 0.0 {
                continue;
            }
            let b = weighted(j, s, side, w);
            below[j] += b;
            if s < 0.0 {
                shocks[j] += b;
            }
        }
    }
    let q_a = w.c_star * pairs;
    let q_ve = w.k_star * ve;
    let q_theta = w.kb0_tilde * ctx.remaining_turning;
    let q_total = q_a + q_ve + qb + q_theta;
    let (ub, ua) = ctx.strong_states;
    let (u0m, u0p) = ctx.inlet_states;
    let g = v + w.kappa * q_total + ua.sup_dist(&u0p) + ub.sup_dist(&u0m);
    GlimmSnapshot { x: ctx.x, v, q_a, q_ve, q_b: qb, q_theta, q_total, g, u_below: ub, u_above: ua }
}

/// Where the two states of a pointwise comparison sit relative to their
/// strong contacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    BothBelow,
    Mixed,
    BothAbove,
}

impl Region {
    pub fn of(u: Side, v: Side) -> Self {
        match (u, v) {
            (Side::Minus, Side::Minus) => Region::BothBelow,
            (Side::Plus, Side::Plus) => Region::BothAbove,
            _ => Region::Mixed,
        }
    }

    fn weights(self, w: &WeightSet) -> [f64; 4] {
        match self {
            Region::BothBelow => w.w_b,
            Region::Mixed => w.w_m,
            Region::BothAbove => w.w_a,
        }
    }

    /// Global weight `G_j` in units of `B`.
    fn global(self, j: usize) -> f64 {
        match (j, self) {
            (1, Region::Mixed) | (4, Region::Mixed) | (4, Region::BothAbove) => 2.0,
            (1, _) | (4, _) => 4.0,
            _ => 0.0,
        }
    }
}

/// `U(y)` and `V(y)` joined along the four Hugoniot curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HugoniotDecomposition {
    pub region: Region,
    pub h: [f64; 4],
    pub q: [f64; 4],
    /// Slope of each Hugoniot wave.
    pub lambda: [f64; 4],
    /// Sup distance between the chained end state and the target.
    pub residual: f64,
}

const FAMILIES: [WaveFamily; 4] = [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3, WaveFamily::F4];

/// Chain the four Hugoniot waves from `start`; returns the end state and
/// the wave slopes.
pub fn hugoniot_chain(gas: &GasModel, start: &FlowState, h: &[f64; 4]) -> Result<(FlowState, [f64; 4]), CurveError> {
    let mut s = *start;
    let mut lambda = [0.0; 4];
    for (k, fam) in FAMILIES.iter().enumerate() {
        let (next, slope) = hugoniot_map(gas, &s, *fam, h[k])?;
        lambda[k] = slope;
        s = next;
    }
    Ok((s, lambda))
}

/// Decompose the jump between `uy` (side `su`) and `vy` (side `sv`). The
/// chain runs from `uy` to `vy`, except when `vy` is the state below the
/// strong contact and `uy` the one above, where it runs from `vy`.
pub fn hugoniot_decompose(
    gas: &GasModel,
    uy: &FlowState,
    vy: &FlowState,
    su: Side,
    sv: Side,
    w: &WeightSet,
) -> Result<HugoniotDecomposition, FunctionalError> {
    decompose_from(gas, uy, vy, su, sv, w, None)
}

/// As [`hugoniot_decompose`], starting Newton from `guess` when given.
fn decompose_from(
    gas: &GasModel,
    uy: &FlowState,
    vy: &FlowState,
    su: Side,
    sv: Side,
    w: &WeightSet,
    guess: Option<[f64; 4]>,
) -> Result<HugoniotDecomposition, FunctionalError> {
    let region = Region::of(su, sv);
    let (start, end) = if su == Side::Plus && sv == Side::Minus { (vy, uy) } else { (uy, vy) };
    let (h, lambda, residual) = if start == end {
        let (_, lambda) = hugoniot_chain(gas, start, &[0.0; 4]).map_err(SolverError::from)?;
        ([0.0; 4], lambda, 0.0)
    } else {
        let guess = match (guess, region) {
            (Some(g), _) => Vec4::from(g),
            (None, Region::Mixed) => Vec4::new(0.0, (end.speed() / start.speed()).ln(), (end.rho / start.rho).ln(), 0.0),
            (None, _) => Vec4::zeros(),
        };
        let target = Vec4::from(end.to_array());
        let out = newton4(
            |x: &Vec4| -> Result<Vec4, CurveError> {
                let (s, _) = hugoniot_chain(gas, start, &[x[0], x[1], x[2], x[3]])?;
                Ok(Vec4::from(s.to_array()) - target)
            },
            guess,
            &NewtonOptions::default(),
        )?;
        let h = [out.root[0], out.root[1], out.root[2], out.root[3]];
        let (s, lambda) = hugoniot_chain(gas, start, &h).map_err(SolverError::from)?;
        (h, lambda, s.sup_dist(end))
    };
    let wr = region.weights(w);
    let q = [wr[0] * h[0], wr[1] * h[1], wr[2] * h[2], wr[3] * h[3]];
    Ok(HugoniotDecomposition { region, h, q, lambda, residual })
}

/// One interval of constant `U` and `V` in a Lyapunov evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiInterval {
    pub y0: f64,
    pub y1: f64,
    pub decomposition: HugoniotDecomposition,
    /// `A_j`, and the three parts it is assembled from.
    pub a: [f64; 4],
    pub f: [f64; 4],
    pub g: [f64; 4],
    pub h: [f64; 4],
    pub weights: [f64; 4],
    /// The 2/3 parts join states on both sides of the strong contacts.
    pub large: bool,
    /// `|U - V|` in the sup norm.
    pub distance: f64,
}

impl PhiInterval {
    pub fn width(&self) -> f64 {
        self.y1 - self.y0
    }

    /// `sum_j |q_j| W_j`.
    pub fn density(&self) -> f64 {
        (0..4).map(|j| self.decomposition.q[j].abs() * self.weights[j]).sum()
    }
}

/// Lyapunov functional between two slices at the same `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSnapshot {
    pub x: f64,
    pub phi: f64,
    /// Exact `int |U - V| dy` on the same breakpoints.
    pub l1: f64,
    /// `1 + kappa2 (Q(U) + Q(V))`.
    pub m: f64,
    /// A priori upper bound of every `W_j` at this `x`.
    pub m_bound: f64,
    pub min_weight: f64,
    pub max_weight: f64,
    /// Largest chaining residual over the intervals.
    pub max_residual: f64,
    /// Strong contact heights in `U` and `V`.
    pub strong_y: (f64, f64),
    pub intervals: Vec<PhiInterval>,
}

impl PhiSnapshot {
    /// Index of the interval just below the breakpoint `y`.
    pub fn below(&self, y: f64) -> Option<usize> {
        let k = self.intervals.partition_point(|i| i.y1 < y);
        (k + 1 < self.intervals.len() && self.intervals[k].y1 == y).then_some(k)
    }
}

/// A weak front seen by the weight sums: height, family, `|strength|`.
struct Part {
    y: f64,
    in_u: bool,
    j: usize,
    size: f64,
}

fn weak_parts(profile: &Profile, slice: &SliceSnapshot, in_u: bool, out: &mut Vec<Part>) -> f64 {
    let mut total = 0.0;
    for (k, (front, _)) in slice.fronts.iter().enumerate() {
        if !front.kind.is_weak() {
            continue;
        }
        for (j, s) in parts(&front.kind) {
            if j != 0 && s != 0.0 {
                out.push(Part { y: profile.breaks[k], in_u, j, size: s.abs() });
                total += s.abs();
            }
        }
    }
    total
}

fn strong_height(profile: &Profile, slice: &SliceSnapshot) -> Result<f64, FunctionalError> {
    slice
        .fronts
        .iter()
        .position(|(f, _)| matches!(f.kind, FrontKind::Strong { .. }))
        .map(|k| profile.breaks[k])
        .ok_or_else(|| FunctionalError::Slices("slice has no strong contact".into()))
}

/// `Phi(U, V) = sum_j int |q_j| W_j dy` on the merged breakpoints of two
/// slices. `q_u` and `q_v` are the interaction potentials `Q` of the two
/// solutions at this `x`.
pub fn lyapunov_phi(
    gas: &GasModel,
    u: &SliceSnapshot,
    v: &SliceSnapshot,
    q_u: f64,
    q_v: f64,
    w: &WeightSet,
) -> Result<PhiSnapshot, FunctionalError> {
    if u.x != v.x {
        return Err(FunctionalError::Slices(format!("slices at different x ({} and {})", u.x, v.x)));
    }
    let (pu, pv) = (u.profile(), v.profile());
    let top = pu.states.last().unwrap().sup_dist(pv.states.last().unwrap());
    if top > 0.0 {
        return Err(FunctionalError::Slices(format!("far-field states differ by {top}")));
    }
    let yu = strong_height(&pu, u)?;
    let yv = strong_height(&pv, v)?;

    let mut waves = Vec::new();
    let total_u = weak_parts(&pu, u, true, &mut waves);
    let total_v = weak_parts(&pv, v, false, &mut waves);
    waves.sort_by(|a, b| a.y.total_cmp(&b.y));
    // [owner][family]: all waves, and those already passed.
    let mut all = [[0.0f64; 5]; 2];
    for p in &waves {
        all[p.in_u as usize][p.j] += p.size;
    }
    let mut below = [[0.0f64; 5]; 2];
    let mut next_wave = 0;

    let base = pu.base.max(pv.base);
    let mut cuts: Vec<f64> = pu.breaks.iter().chain(pv.breaks.iter()).cloned().filter(|&y| y > base).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.push(f64::INFINITY);

    let m = 1.0 + w.kappa2 * (q_u + q_v);
    let m_bound = m + w.kappa1 * (total_u + total_v + 4.0 * w.big);
    let mut snap = PhiSnapshot {
        x: u.x,
        phi: 0.0,
        l1: 0.0,
        m,
        m_bound,
        min_weight: f64::INFINITY,
        max_weight: 0.0,
        max_residual: 0.0,
        strong_y: (yu, yv),
        intervals: Vec::with_capacity(cuts.len()),
    };
    let mut lo = base;
    for &hi in &cuts {
        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        while next_wave < waves.len() && waves[next_wave].y < mid {
            let p = &waves[next_wave];
            below[p.in_u as usize][p.j] += p.size;
            next_wave += 1;
        }
        let (su_state, sv_state) = (pu.state_at(mid), pv.state_at(mid));
        let su = if mid < yu { Side::Minus } else { Side::Plus };
        let sv = if mid < yv { Side::Minus } else { Side::Plus };
        // Neighbouring intervals differ by one wave: warm start from the
        // previous decomposition when the region is unchanged.
        let guess = snap
            .intervals
            .last()
            .filter(|p| p.decomposition.region == Region::of(su, sv))
            .map(|p| p.decomposition.h);
        let d = match decompose_from(gas, &su_state, &sv_state, su, sv, w, guess) {
            Ok(d) => d,
            Err(_) if guess.is_some() => hugoniot_decompose(gas, &su_state, &sv_state, su, sv, w)?,
            Err(e) => return Err(e),
        };
        let large = d.region == Region::Mixed;
        let (mut f, mut g, mut hh, mut a, mut weights) = ([0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4], [0.0; 4]);
        for j in 1..=4 {
            let under: f64 = (j + 1..=4).map(|k| below[0][k] + below[1][k]).sum();
            let over: f64 = (1..j).map(|k| all[0][k] - below[0][k] + all[1][k] - below[1][k]).sum();
            f[j - 1] = under + over;
            g[j - 1] = d.region.global(j) * w.big;
            if j == 1 || j == 4 {
                let (bu, bv) = (below[1][j], below[0][j]);
                let (au, av) = (all[1][j] - bu, all[0][j] - bv);
                let qj = d.q[j - 1];
                hh[j - 1] = if qj < 0.0 {
                    bu + av
                } else if qj > 0.0 {
                    bv + au
                } else {
                    0.0
                };
            }
            a[j - 1] = f[j - 1] + g[j - 1] + hh[j - 1];
            weights[j - 1] = 1.0 + w.kappa1 * a[j - 1] + w.kappa2 * (q_u + q_v);
            snap.min_weight = snap.min_weight.min(weights[j - 1]);
            snap.max_weight = snap.max_weight.max(weights[j - 1]);
        }
        let interval = PhiInterval {
            y0: lo,
            y1: hi,
            decomposition: d,
            a,
            f,
            g,
            h: hh,
            weights,
            large,
            distance: su_state.sup_dist(&sv_state),
        };
        if hi.is_finite() {
            snap.phi += interval.width() * interval.density();
            snap.l1 += interval.width() * interval.distance;
        }
        snap.max_residual = snap.max_residual.max(d.residual);
        snap.intervals.push(interval);
        lo = hi;
    }
    Ok(snap)
}

/// Per-family decay terms and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayTerms {
    pub per_family: [f64; 4],
    pub sum: f64,
}

impl DecayTerms {
    fn new(per_family: [f64; 4]) -> Self {
        Self { per_family, sum: per_family.iter().sum() }
    }
}

/// `E_{alpha,j} = |q+| W+ (lambda+ - s) - |q-| W- (lambda- - s)` across a
/// front of slope `s` separating `minus` (below) and `plus` (above).
pub fn phi_decay_terms(minus: &PhiInterval, plus: &PhiInterval, slope: f64) -> DecayTerms {
    let term = |i: &PhiInterval, j: usize| i.decomposition.q[j].abs() * i.weights[j] * (i.decomposition.lambda[j] - slope);
    DecayTerms::new(std::array::from_fn(|j| term(plus, j) - term(minus, j)))
}

/// Decay terms at the wall for the interval next to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDecay {
    /// `|q_j| W_j (lambda_j - wall slope)`, from transporting the lower
    /// limit of the integral.
    pub transport: DecayTerms,
    /// `|q_j| W_j (wall slope + lambda_j)`.
    pub as_printed: DecayTerms,
}

pub fn boundary_decay_terms(bottom: &PhiInterval, wall_slope: f64) -> BoundaryDecay {
    let d = &bottom.decomposition;
    let mass = |j: usize| d.q[j].abs() * bottom.weights[j];
    BoundaryDecay {
        transport: DecayTerms::new(std::array::from_fn(|j| mass(j) * (d.lambda[j] - wall_slope))),
        as_printed: DecayTerms::new(std::array::from_fn(|j| mass(j) * (wall_slope + d.lambda[j]))),
    }
}

/// Structure of the Hugoniot decomposition between two states tangent to
/// the same wall edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRelations {
    pub h: [f64; 4],
    pub lambda: [f64; 4],
    /// `max_{j=2,3} |lambda_j - wall slope|`.
    pub contact_gap: f64,
    /// `contact_gap / |h1|` (0 when both vanish).
    pub contact_gap_ratio: f64,
    /// `|h4| - |h1|`, the slack of the reflection estimate's leading term.
    pub reflection_excess: f64,
    /// `|h1| / |h4|` when `h4 != 0`.
    pub ratio: Option<f64>,
    pub ratio_in_range: bool,
}

pub fn boundary_relations(
    gas: &GasModel,
    ub: &FlowState,
    vb: &FlowState,
    wall_slope: f64,
    w: &WeightSet,
) -> Result<BoundaryRelations, FunctionalError> {
    let residual = (ub.v / ub.u - wall_slope).abs().max((vb.v / vb.u - wall_slope).abs());
    if residual > TANGENCY_TOL {
        return Err(FunctionalError::NotTangent { residual });
    }
    let d = hugoniot_decompose(gas, ub, vb, Side::Minus, Side::Minus, w)?;
    let gap = (d.lambda[1] - wall_slope).abs().max((d.lambda[2] - wall_slope).abs());
    let h1 = d.h[0].abs();
    let h4 = d.h[3].abs();
    let ratio = (h4 > 0.0).then(|| h1 / h4);
    Ok(BoundaryRelations {
        h: d.h,
        lambda: d.lambda,
        contact_gap: gap,
        contact_gap_ratio: if gap == 0.0 { 0.0 } else { gap / h1 },
        reflection_excess: h4 - h1,
        ratio,
        ratio_in_range: ratio.is_none_or(|r| r > 0.5 && r < 1.5),
    })
}

/// Constant relating `sum_j |h_j|` and `|U - V|` in both directions,
/// from the linearised chain at the three reference configurations,
/// doubled for the nonlinear range.
pub fn hugoniot_norm_constant(gas: &GasModel, bg: &Background) -> Result<f64, FunctionalError> {
    let refs = [
        (bg.minus, [0.0; 4]),
        (bg.plus, [0.0; 4]),
        (bg.minus, [0.0, bg.sigma2, bg.sigma3, 0.0]),
    ];
    let mut c: f64 = 1.0;
    for (start, h0) in refs {
        let mut jac = Matrix4::zeros();
        for k in 0..4 {
            let step = 1e-6;
            let mut hp = h0;
            let mut hm = h0;
            hp[k] += step;
            hm[k] -= step;
            let (sp, _) = hugoniot_chain(gas, &start, &hp).map_err(SolverError::from)?;
            let (sm, _) = hugoniot_chain(gas, &start, &hm).map_err(SolverError::from)?;
            let col = (Vec4::from(sp.to_array()) - Vec4::from(sm.to_array())) / (2.0 * step);
            jac.set_column(k, &col);
        }
        let inv = jac.try_inverse().ok_or(FunctionalError::Decomposition(SolverError::Singular))?;
        c = c.max(jac.amax()).max(inv.abs().sum());
    }
    Ok(2.0 * c)
}

/// `C` with `C^-1 |U - V|_L1 <= Phi <= C |U - V|_L1`.
pub fn equivalence_constant(norm_constant: f64, w: &WeightSet, m_bound: f64) -> f64 {
    norm_constant * (w.w_max() * m_bound).max(1.0 / w.w_min())
}
