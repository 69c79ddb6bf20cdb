//! Polyline walls, piecewise-constant profiles in `y`, inflow data and its
//! coarsening.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::Background;
use crate::error::GeometryError;
use crate::gas::{FlowState, GasModel};
use crate::riemann::BoundaryEdge;

/// Wall `y = g(x)` through `(a_l, b_l)`. Before the origin and after the
/// last vertex the wall is horizontal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub vertices: Vec<(f64, f64)>,
    /// Direction of the edge leaving vertex `l`.
    pub edge_angles: Vec<f64>,
    /// Turning at vertex `l`: `edge_angles[l] - edge_angles[l - 1]`.
    pub turning: Vec<f64>,
    /// Outward normals `(sin, -cos)` of the edges.
    pub normals: Vec<[f64; 2]>,
    pub tv_gprime: f64,
}

impl Wall {
    pub fn build(vertices: &[(f64, f64)]) -> Result<Self, GeometryError> {
        match vertices.first() {
            Some(&(a, b)) if a == 0.0 && b == 0.0 => {}
            _ => return Err(GeometryError::Origin),
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) || !w[1].1.is_finite() {
                return Err(GeometryError::NonMonotone { index: i + 1 });
            }
        }
        let n = vertices.len();
        let mut edge_angles = Vec::with_capacity(n);
        for l in 0..n {
            edge_angles.push(if l + 1 < n {
                let (a0, b0) = vertices[l];
                let (a1, b1) = vertices[l + 1];
                ((b1 - b0) / (a1 - a0)).atan()
            } else {
                0.0
            });
        }
        let turning: Vec<f64> = (0..n).map(|l| edge_angles[l] - if l == 0 { 0.0 } else { edge_angles[l - 1] }).collect();
        let normals = edge_angles.iter().map(|t| [t.sin(), -t.cos()]).collect();
        let tv_gprime = turning.iter().map(|t| t.abs()).sum();
        Ok(Self { vertices: vertices.to_vec(), edge_angles, turning, normals, tv_gprime })
    }

    pub fn flat() -> Self {
        Self::build(&[(0.0, 0.0)]).expect("origin is a valid wall")
    }

    pub fn validate(&self, bound: f64) -> Result<(), GeometryError> {
        if !(self.tv_gprime < bound) {
            return Err(GeometryError::WallVariation { tv: self.tv_gprime, bound });
        }
        Ok(())
    }

    /// Index of the edge containing `x` (the vertex it starts from).
    pub fn edge_index(&self, x: f64) -> usize {
        self.vertices.iter().rposition(|&(a, _)| a <= x).unwrap_or_default()
    }

    pub fn g(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let l = self.edge_index(x);
        let (a, b) = self.vertices[l];
        b + (x - a) * self.edge_angles[l].tan()
    }

    pub fn edge(&self, l: usize) -> BoundaryEdge {
        BoundaryEdge::new(self.edge_angles[l], self.turning[l])
    }

    /// Seeded wall with `count` vertices on `[0, length]` and total turning
    /// exactly `tv`, ending horizontal.
    pub fn random(seed: u64, count: usize, tv: f64, length: f64) -> Result<Self, GeometryError> {
        let count = count.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (1..count).map(|_| rng.gen_range(0.02..0.98) * length).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * length);
        let turns: Vec<f64> = (0..xs.len() + 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Angles of the finite edges; the closing turn brings the wall back
        // to horizontal after the last vertex.
        let mut angles = Vec::new();
        let mut acc = 0.0;
        for t in turns.iter().take(xs.len()) {
            acc += t;
            angles.push(acc);
        }
        let raw_tv: f64 = turns.iter().take(xs.len()).map(|t| t.abs()).sum::<f64>() + acc.abs();
        let scale = if raw_tv > 0.0 { tv / raw_tv } else { 0.0 };
        let mut vertices = vec![(0.0, 0.0)];
        let mut prev = (0.0, 0.0);
        for (i, &x) in xs.iter().enumerate() {
            let ang: f64 = angles[i] * scale;
            let y = prev.1 + (x - prev.0) * ang.tan();
            vertices.push((x, y));
            prev = (x, y);
        }
        if xs.is_empty() {
            return Self::build(&vertices);
        }
        // The last listed vertex carries the closing turn.
        let wall = Self::build(&vertices)?;
        Ok(wall)
    }
}

/// Piecewise-constant function of `y` on `[base, inf)`: `states[0]` on
/// `[base, breaks[0])`, `states[i]` on `[breaks[i-1], breaks[i])`, the last
/// state extends to infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub base: f64,
    pub breaks: Vec<f64>,
    pub states: Vec<FlowState>,
}

impl Profile {
    pub fn constant(base: f64, state: FlowState) -> Self {
        Self { base, breaks: Vec::new(), states: vec![state] }
    }

    pub fn state_at(&self, y: f64) -> FlowState {
        let i = self.breaks.partition_point(|&b| b <= y);
        self.states[i]
    }

    /// Total variation in the sup norm.
    pub fn total_variation(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].sup_dist(&w[1])).sum()
    }

    pub fn jump_count(&self) -> usize {
        self.breaks.len()
    }

    /// Exact `int |a - b|_inf dy` over the common domain; infinite if the
    /// far-field states differ.
    pub fn l1_distance(&self, other: &Profile) -> f64 {
        let base = self.base.max(other.base);
        let tail = self.states.last().unwrap().sup_dist(other.states.last().unwrap());
        if tail > 0.0 {
            return f64::INFINITY;
        }
        let mut cuts: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.breaks.iter())
            .cloned()
            .filter(|&y| y > base)
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        let mut lo = base;
        for &hi in &cuts {
            let mid = 0.5 * (lo + hi);
            total += (hi - lo) * self.state_at(mid).sup_dist(&other.state_at(mid));
            lo = hi;
        }
        total
    }

    /// Drop breakpoints across which nothing jumps.
    pub fn compact(&mut self) {
        let mut breaks = Vec::with_capacity(self.breaks.len());
        let mut states = vec![self.states[0]];
        for (i, &b) in self.breaks.iter().enumerate() {
            let next = self.states[i + 1];
            if next != *states.last().unwrap() {
                breaks.push(b);
                states.push(next);
            }
        }
        self.breaks = breaks;
        self.states = states;
    }
}

/// Additive offset on `[y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub y0: f64,
    pub y1: f64,
    #[serde(default)]
    pub du: f64,
    #[serde(default)]
    pub dv: f64,
    #[serde(default)]
    pub dp: f64,
    #[serde(default)]
    pub drho: f64,
}

/// How the inflow deviates from the two-state background.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Perturbation {
    #[default]
    None,
    Intervals(Vec<Bump>),
    Random {
        seed: u64,
        jumps: usize,
        tv: f64,
        support: (f64, f64),
    },
}

impl Perturbation {
    /// Expand a seeded description into explicit intervals whose
    /// breakpoints number `jumps` and whose total variation is `tv`.
    pub fn expand(&self, avoid: f64) -> Vec<Bump> {
        match self {
            Perturbation::None => Vec::new(),
            Perturbation::Intervals(b) => b.clone(),
            Perturbation::Random { seed, jumps, tv, support } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let n = (*jumps).max(2);
                let mut ys: Vec<f64> = Vec::with_capacity(n);
                while ys.len() < n {
                    let y = rng.gen_range(support.0..support.1);
                    if (y - avoid).abs() > 1e-3 && ys.iter().all(|z| (z - y).abs() > 1e-4) {
                        ys.push(y);
                    }
                }
                ys.sort_by(f64::total_cmp);
                let mut levels: Vec<[f64; 4]> = (0..n - 1)
                    .map(|_| {
                        let mut d = [0.0; 4];
                        let k = rng.gen_range(0..4);
                        d[k] = rng.gen_range(-1.0..1.0);
                        if rng.gen_bool(0.3) {
                            let k2 = rng.gen_range(0..4);
                            d[k2] += rng.gen_range(-0.5..0.5);
                        }
                        d
                    })
                    .collect();
                let sup = |a: &[f64; 4], b: &[f64; 4]| (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
                let zero = [0.0; 4];
                let mut raw = sup(&zero, &levels[0]) + sup(levels.last().unwrap(), &zero);
                for w in levels.windows(2) {
                    raw += sup(&w[0], &w[1]);
                }
                let scale = if raw > 0.0 { tv / raw } else { 0.0 };
                for l in &mut levels {
                    for c in l.iter_mut() {
                        *c *= scale;
                    }
                }
                // Telescoping bumps: each interval carries its own level.
                ys.windows(2)
                    .zip(levels)
                    .map(|(w, d)| Bump { y0: w[0], y1: w[1], du: d[0], dv: d[1], dp: d[2], drho: d[3] })
                    .collect()
            }
        }
    }
}

/// Inflow at `x = 0` with the strong contact at `strong_jump_y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflowProfile {
    pub profile: Profile,
    pub strong_jump_y: f64,
    /// Total variation of the perturbation, sup norm.
    pub tv_perturbation: f64,
    /// Upper bound on the L1 distance to the profile this was coarsened
    /// from (zero when built directly).
    pub coarsening_error: f64,
    /// Jump budget used by the last coarsening, if any.
    pub jump_budget: Option<usize>,
}

impl InflowProfile {
    pub fn strong_index(&self) -> usize {
        self.profile
            .breaks
            .iter()
            .position(|&y| y == self.strong_jump_y)
            .expect("strong jump is a breakpoint")
    }
}

/// Background plus perturbation, validated against the trust region and
/// the variation bound.
pub fn build_inflow(
    gas: &GasModel,
    bg: &Background,
    strong_jump_y: f64,
    perturbation: &Perturbation,
    tv_bound: f64,
    trust_radius: f64,
) -> Result<InflowProfile, GeometryError> {
    if !(strong_jump_y > 0.0) {
        return Err(GeometryError::Inflow(format!("strong jump must lie above the wall, got {strong_jump_y}")));
    }
    let bumps = perturbation.expand(strong_jump_y);
    let mut cuts = vec![strong_jump_y];
    for b in &bumps {
        if !(b.y1 > b.y0) || b.y0 < 0.0 {
            return Err(GeometryError::Inflow(format!("bad interval [{}, {})", b.y0, b.y1)));
        }
        for y in [b.y0, b.y1] {
            if y > 0.0 {
                cuts.push(y);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let offset_at = |y: f64| -> [f64; 4] {
        let mut d = [0.0; 4];
        for b in &bumps {
            if b.y0 <= y && y < b.y1 {
                d[0] += b.du;
                d[1] += b.dv;
                d[2] += b.dp;
                d[3] += b.drho;
            }
        }
        d
    };
    let mut states = Vec::with_capacity(cuts.len() + 1);
    let mut offsets = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0.0;
    for i in 0..=cuts.len() {
        let mid = if i < cuts.len() { 0.5 * (lo + cuts[i]) } else { lo + 1.0 };
        let base = if mid < strong_jump_y { bg.minus } else { bg.plus };
        let d = offset_at(mid);
        let s = FlowState::new(base.u + d[0], base.v + d[1], base.p + d[2], base.rho + d[3]);
        gas.check(&s)?;
        let distance = s.sup_dist(&base);
        if distance > trust_radius {
            return Err(GeometryError::TrustRegion { y: mid, distance, radius: trust_radius });
        }
        states.push(s);
        offsets.push(d);
        if i < cuts.len() {
            lo = cuts[i];
        }
    }
    let sup = |a: &[f64; 4], b: &[f64; 4]| (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    let tv: f64 = offsets.windows(2).map(|w| sup(&w[0], &w[1])).sum();
    if tv > tv_bound {
        return Err(GeometryError::InflowVariation { tv, bound: tv_bound });
    }
    let mut profile = Profile { base: 0.0, breaks: cuts, states };
    // Keep the strong jump even if it had no effect (it always does).
    let strong = strong_jump_y;
    let mut breaks = Vec::new();
    let mut kept = vec![profile.states[0]];
    for (i, &b) in profile.breaks.iter().enumerate() {
        let next = profile.states[i + 1];
        if next != *kept.last().unwrap() || b == strong {
            breaks.push(b);
            kept.push(next);
        }
    }
    profile.breaks = breaks;
    profile.states = kept;
    Ok(InflowProfile { profile, strong_jump_y, tv_perturbation: tv, coarsening_error: 0.0, jump_budget: None })
}

/// Jump budget `Z` for a given approximation parameter.
pub fn jump_budget(theta: f64, factor: f64) -> usize {
    ((factor / theta).ceil() as usize).max(1)
}

/// Greedy coarsening: merge the cheapest jump (never the strong one) while
/// the jump count exceeds `budget` and the accumulated L1 error stays
/// within `theta`.
pub fn approximate_inflow(inflow: &InflowProfile, theta: f64, budget: usize) -> InflowProfile {
    let mut out = inflow.clone();
    out.jump_budget = Some(budget);
    let p = &mut out.profile;
    loop {
        if p.breaks.len() <= budget {
            break;
        }
        let width = |p: &Profile, i: usize| -> f64 {
            let lo = if i == 0 { p.base } else { p.breaks[i - 1] };
            let hi = if i < p.breaks.len() { p.breaks[i] } else { f64::INFINITY };
            hi - lo
        };
        let mut best: Option<(usize, f64)> = None;
        for k in 0..p.breaks.len() {
            if p.breaks[k] == out.strong_jump_y {
                continue;
            }
            let cost = width(p, k).min(width(p, k + 1)) * p.states[k].sup_dist(&p.states[k + 1]);
            if best.is_none_or(|(_, c)| cost < c) {
                best = Some((k, cost));
            }
        }
        let Some((k, cost)) = best else { break };
        if out.coarsening_error + cost > theta {
            break;
        }
        out.coarsening_error += cost;
        let keep = if width(p, k) >= width(p, k + 1) { p.states[k] } else { p.states[k + 1] };
        p.states[k] = keep;
        p.states.remove(k + 1);
        p.breaks.remove(k);
    }
    out
}
