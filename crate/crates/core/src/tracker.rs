//! Wave-front tracking in `x`: straight fronts between constant states,
//! an event queue of collisions, wall hits and wall vertices, and the
//! solver dispatch for each event.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Background, WeightSet};
use crate::error::{SolverError, TrackerError};
use crate::functionals::{glimm_snapshot, pair_measure, weighted, GlimmContext, GlimmSnapshot};
use crate::gas::{FlowState, GasModel};
use crate::geometry::{InflowProfile, Profile, Wall};
use crate::riemann::{BoundaryEdge, Incoming, Riemann, WaveFan};
use crate::scenario::{Setup, ThetaParams};
use crate::wave_curves::{wave_map, WaveFamily};

/// Tie window for collision abscissae.
const TIE: f64 = 1e-12;
/// Largest slope perturbation used to split ties.
const JITTER: f64 = 1e-9;
/// Wall tangency tolerance for the state next to the wall.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

/// What a front carries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FrontKind {
    Nonlinear { family: WaveFamily, strength: f64 },
    /// Weak vortex sheet and entropy wave travelling together.
    Contact { sigma2: f64, sigma3: f64 },
    Strong { sigma2: f64, sigma3: f64 },
    NonPhysical { strength: f64 },
}

impl FrontKind {
    pub fn family(&self) -> WaveFamily {
        match *self {
            FrontKind::Nonlinear { family, .. } => family,
            FrontKind::Contact { sigma3, sigma2 } => {
                if sigma2 == 0.0 && sigma3 != 0.0 {
                    WaveFamily::Contact3
                } else {
                    WaveFamily::Contact2
                }
            }
            FrontKind::Strong { .. } => WaveFamily::StrongContact,
            FrontKind::NonPhysical { .. } => WaveFamily::NonPhysical,
        }
    }

    pub fn is_physical(&self) -> bool {
        !matches!(self, FrontKind::NonPhysical { .. })
    }

    pub fn is_weak(&self) -> bool {
        matches!(self, FrontKind::Nonlinear { .. } | FrontKind::Contact { .. })
    }

    pub fn incoming(&self) -> Incoming {
        match *self {
            FrontKind::Nonlinear { family, strength } => Incoming::Nonlinear { family, strength },
            FrontKind::Contact { sigma2, sigma3 } => Incoming::Contact { sigma2, sigma3 },
            FrontKind::Strong { sigma2, sigma3 } => Incoming::Strong { sigma2, sigma3 },
            FrontKind::NonPhysical { .. } => Incoming::NonPhysical,
        }
    }

    /// `|alpha|`, `|s2| + |s3|`, or the non-physical jump.
    pub fn size(&self) -> f64 {
        match *self {
            FrontKind::NonPhysical { strength } => strength,
            other => other.incoming().size(),
        }
    }
}

/// A straight front `y = y0 + slope (x - x0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub id: u64,
    pub kind: FrontKind,
    pub x0: f64,
    pub y0: f64,
    pub slope: f64,
    pub generation: u32,
    pub side: Side,
}

impl Front {
    pub fn y_at(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }
}

/// Wall seen by the tracker: vertices turning by at most `omega` are
/// replaced by a straight continuation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveWall {
    pub omega: f64,
    pub vertices: Vec<EffectiveVertex>,
    /// Largest `|g_eff - g|` on the window.
    pub max_offset: f64,
    /// Sum of the ignored turning angles.
    pub ignored_turning: f64,
    /// `suffix[l]`: sum of `|turn|` over processed vertices `>= l`.
    suffix: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveVertex {
    pub x: f64,
    /// Height on the effective wall.
    pub y: f64,
    /// Turning relative to the effective direction before the vertex.
    pub turn: f64,
    pub processed: bool,
    /// Effective direction after the vertex.
    pub angle: f64,
}

impl EffectiveWall {
    pub fn build(wall: &Wall, omega: f64, window: f64) -> Self {
        let mut vertices = Vec::with_capacity(wall.vertices.len());
        let mut angle = 0.0;
        let (mut px, mut py) = (0.0, 0.0);
        let mut ignored = 0.0;
        for (l, &(a, _)) in wall.vertices.iter().enumerate() {
            let y = py + (a - px) * f64::tan(angle);
            let turn = wall.edge_angles[l] - angle;
            let processed = turn.abs() > omega;
            if processed {
                angle = wall.edge_angles[l];
            } else {
                ignored += turn.abs();
            }
            vertices.push(EffectiveVertex { x: a, y, turn: if processed { turn } else { 0.0 }, processed, angle });
            px = a;
            py = y;
        }
        let mut suffix = vec![0.0; vertices.len() + 1];
        for l in (0..vertices.len()).rev() {
            suffix[l] = suffix[l + 1] + vertices[l].turn.abs();
        }
        let mut out = Self { omega, vertices, max_offset: 0.0, ignored_turning: ignored, suffix };
        let mut probes: Vec<f64> = wall.vertices.iter().map(|v| v.0).filter(|&a| a <= window).collect();
        probes.push(window);
        out.max_offset = probes.iter().map(|&x| (out.g(x) - wall.g(x)).abs()).fold(0.0, f64::max);
        out
    }

    /// Index of the last vertex at or before `x`.
    pub fn vertex_index(&self, x: f64) -> usize {
        self.vertices.iter().rposition(|v| v.x <= x).unwrap_or(0)
    }

    pub fn g(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let v = &self.vertices[self.vertex_index(x)];
        v.y + (x - v.x) * v.angle.tan()
    }

    pub fn angle_at(&self, x: f64) -> f64 {
        self.vertices[self.vertex_index(x)].angle
    }

    /// Sum of `|turn|` over processed vertices with index `>= l`.
    pub fn remaining_turning(&self, l: usize) -> f64 {
        self.suffix[l.min(self.vertices.len())]
    }
}

/// Kinds of events in the log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Collision,
    WallHit,
    Vertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverUsed {
    Accurate,
    Simplified,
    Lateral,
    Ignored,
}

/// One processed event (non-physical crossings of weak fronts are only
/// counted, see `RunStats::np_crossings`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub x: f64,
    pub y: f64,
    pub kind: EventKind,
    pub solver: SolverUsed,
    pub incoming: [Option<WaveFamily>; 2],
    pub outgoing: usize,
    /// Non-physical strength entering plus leaving the event.
    pub defect: f64,
    pub delta_g: f64,
    pub delta_q: f64,
    /// Size the decrease of `Q` is compared against, 0 if none applies.
    pub measure: f64,
}

/// Functional trace row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub x: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "Q_A")]
    pub q_a: f64,
    #[serde(rename = "Q_ve")]
    pub q_ve: f64,
    #[serde(rename = "Q_b")]
    pub q_b: f64,
    #[serde(rename = "Q_Theta")]
    pub q_theta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub front_count: usize,
    pub nonphysical_mass: f64,
}

impl TraceRow {
    pub fn q_total(&self) -> f64 {
        self.q_a + self.q_ve + self.q_b + self.q_theta
    }
}

/// Fronts and states at one `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSnapshot {
    pub x: f64,
    /// True wall height.
    pub base: f64,
    pub bottom: FlowState,
    /// Fronts bottom to top with the state above each.
    pub fronts: Vec<(Front, FlowState)>,
}

impl SliceSnapshot {
    pub fn profile(&self) -> Profile {
        let mut breaks = Vec::with_capacity(self.fronts.len());
        let mut states = Vec::with_capacity(self.fronts.len() + 1);
        states.push(self.bottom);
        let mut last = f64::NEG_INFINITY;
        for (f, above) in &self.fronts {
            // Keep breakpoints sorted even where fronts touch.
            let y = f.y_at(self.x).max(last);
            last = y;
            breaks.push(y);
            states.push(*above);
        }
        Profile { base: self.base, breaks, states }
    }

    pub fn strong_y(&self) -> Option<f64> {
        self.fronts
            .iter()
            .find(|(f, _)| matches!(f.kind, FrontKind::Strong { .. }))
            .map(|(f, _)| f.y_at(self.x))
    }

    pub fn nonphysical_mass(&self) -> f64 {
        self.fronts
            .iter()
            .filter_map(|(f, _)| match f.kind {
                FrontKind::NonPhysical { strength } => Some(strength),
                _ => None,
            })
            .sum()
    }
}

/// Counters and monitor results of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub events: usize,
    pub collisions: usize,
    pub accurate: usize,
    pub simplified: usize,
    /// Non-physical front crossing a weak front: no change in `G`.
    pub np_crossings: usize,
    pub wall_hits: usize,
    pub vertices_processed: usize,
    pub vertices_ignored: usize,
    pub jitters: usize,
    pub max_fronts: usize,
    pub max_physical_fronts: usize,
    pub final_fronts: usize,
    pub max_nonphysical_mass: f64,
    pub exited_mass: f64,
    pub ignored_turning: f64,
    pub geometric_defect: f64,
    /// Smallest `-dQ / measure` over events where a decrease is owed.
    pub nu: Option<f64>,
    pub nu_events: usize,
    /// Largest `dG - (1e-12 + defect)`; positive means a violation.
    pub max_glimm_excess: f64,
    pub glimm_violations: usize,
    pub first_glimm_violation: Option<f64>,
    pub max_tangency: f64,
    pub max_tv: f64,
    pub initial_tv: f64,
}

/// Run switches.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    /// Keep every front with its lifetime so any slice can be rebuilt.
    pub keep_history: bool,
    /// Abscissae where full snapshots are stored.
    pub sample_xs: Vec<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { keep_history: true, sample_xs: Vec::new() }
    }
}

/// A front with its lifetime `[born, died)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRecord {
    pub front: Front,
    pub above: FlowState,
    pub born: f64,
    pub died: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub fronts: Vec<FrontRecord>,
    /// `(x, state)` each time the state next to the wall changes.
    pub bottom: Vec<(f64, FlowState)>,
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub window: f64,
    pub theta: ThetaParams,
    pub wall: Wall,
    pub effective_wall: EffectiveWall,
    pub inflow: InflowProfile,
    pub weights: WeightSet,
    pub events: Vec<EventRecord>,
    pub trace: Vec<TraceRow>,
    pub snapshots: Vec<SliceSnapshot>,
    pub initial: SliceSnapshot,
    pub last: SliceSnapshot,
    pub history: Option<History>,
    pub stats: RunStats,
}

impl Solution {
    /// Fronts and states at `x`.
    pub fn snapshot_at(&self, x: f64) -> Result<SliceSnapshot, TrackerError> {
        if !(0.0..=self.window).contains(&x) {
            return Err(TrackerError::Window { x, window: self.window });
        }
        if let Some(s) = self.snapshots.iter().find(|s| s.x == x) {
            return Ok(s.clone());
        }
        if x == 0.0 {
            return Ok(self.initial.clone());
        }
        if x == self.window {
            return Ok(self.last.clone());
        }
        let h = self.history.as_ref().ok_or(TrackerError::Window { x, window: self.window })?;
        let k = h.bottom.partition_point(|(bx, _)| *bx <= x);
        let bottom = h.bottom[k.saturating_sub(1)].1;
        let mut fronts: Vec<(Front, FlowState)> = h
            .fronts
            .iter()
            .take_while(|r| r.born <= x)
            .filter(|r| r.died > x)
            .map(|r| (r.front, r.above))
            .collect();
        // The list order at the previous event is the y-order; sort stably
        // by height with the creation order breaking ties.
        fronts.sort_by(|a, b| a.0.y_at(x).total_cmp(&b.0.y_at(x)).then(a.0.id.cmp(&b.0.id)));
        Ok(SliceSnapshot { x, base: self.wall.g(x), bottom, fronts })
    }

    pub fn solution_slice(&self, x: f64) -> Result<Profile, TrackerError> {
        Ok(self.snapshot_at(x)?.profile())
    }

    /// Functional values in force at `x` (the last traced event at or
    /// before it).
    pub fn trace_at(&self, x: f64) -> &TraceRow {
        let k = self.trace.partition_point(|r| r.x <= x);
        &self.trace[k.saturating_sub(1)]
    }

    pub fn glimm_nonincreasing(&self) -> bool {
        self.stats.glimm_violations == 0
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    front: Front,
    above: FlowState,
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
    born: f64,
}

#[derive(Clone, Copy, Debug)]
enum Pending {
    Pair { lo: usize, lo_id: u64, hi: usize, hi_id: u64 },
    Wall { slot: usize, id: u64, vertex: usize },
}

#[derive(Clone, Copy, Debug)]
struct Queued {
    x: f64,
    y: f64,
    seq: u64,
    what: Pending,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Reversed: the heap pops the smallest x, then the lowest y.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .x
            .total_cmp(&self.x)
            .then(other.y.total_cmp(&self.y))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Outgoing front before insertion.
#[derive(Clone, Copy, Debug)]
struct Outgoing {
    kind: FrontKind,
    slope: f64,
    above: FlowState,
    side: Side,
}

/// The tracking engine. Use [`run`] unless stepping by hand.
pub struct Tracker {
    gas: GasModel,
    solver: Riemann,
    bg: Background,
    weights: WeightSet,
    theta: ThetaParams,
    window: f64,
    budget: usize,
    wall: Wall,
    eff: EffectiveWall,
    inflow: InflowProfile,
    x: f64,
    nodes: Vec<Node>,
    free: Vec<usize>,
    head: Option<usize>,
    bottom: FlowState,
    heap: BinaryHeap<Queued>,
    seq: u64,
    next_id: u64,
    /// Next wall vertex to reach.
    cursor: usize,
    /// Last processed vertex: the current effective edge.
    edge: usize,
    rng: ChaCha8Rng,
    inlet: (FlowState, FlowState),
    glimm: GlimmSnapshot,
    tv: f64,
    np_mass: f64,
    count: usize,
    physical: usize,
    stats: RunStats,
    events: Vec<EventRecord>,
    trace: Vec<TraceRow>,
    history: Option<History>,
    samples: Vec<f64>,
    snapshots: Vec<SliceSnapshot>,
}

fn event_err(x: f64, kind: &'static str) -> impl Fn(SolverError) -> TrackerError {
    move |source| TrackerError::Event { x, kind, source }
}

impl Tracker {
    /// Solve every Riemann problem of the inflow at `x = 0`.
    pub fn initialize(setup: &Setup, options: &RunOptions) -> Result<Self, TrackerError> {
        let sc = &setup.scenario;
        let eff = EffectiveWall::build(&setup.wall, sc.theta.omega(), sc.window);
        let mut samples: Vec<f64> = options.sample_xs.iter().cloned().filter(|&x| x > 0.0 && x < sc.window).collect();
        samples.sort_by(f64::total_cmp);
        samples.dedup();
        let mut t = Tracker {
            gas: setup.solver.gas,
            solver: setup.solver,
            bg: setup.bg,
            weights: setup.calibration.weights,
            theta: sc.theta,
            window: sc.window,
            budget: sc.event_budget,
            wall: setup.wall.clone(),
            eff,
            inflow: setup.inflow.clone(),
            x: 0.0,
            nodes: Vec::new(),
            free: Vec::new(),
            head: None,
            bottom: setup.inflow.profile.states[0],
            heap: BinaryHeap::new(),
            seq: 0,
            next_id: 0,
            cursor: 1,
            edge: 0,
            rng: ChaCha8Rng::seed_from_u64(sc.seed ^ 0x5eed_f00d),
            inlet: (setup.bg.minus, setup.bg.plus),
            glimm: GlimmSnapshot {
                x: 0.0,
                v: 0.0,
                q_a: 0.0,
                q_ve: 0.0,
                q_b: 0.0,
                q_theta: 0.0,
                q_total: 0.0,
                g: 0.0,
                u_below: setup.bg.minus,
                u_above: setup.bg.plus,
            },
            tv: 0.0,
            np_mass: 0.0,
            count: 0,
            physical: 0,
            stats: RunStats::default(),
            events: Vec::new(),
            trace: Vec::new(),
            history: if options.keep_history { Some(History { fronts: Vec::new(), bottom: Vec::new() }) } else { None },
            samples,
            snapshots: Vec::new(),
        };
        t.stats.ignored_turning = t.eff.ignored_turning;
        t.stats.max_glimm_excess = f64::NEG_INFINITY;
        t.stats.geometric_defect = t.eff.max_offset;
        t.init_fronts()?;
        Ok(t)
    }

    fn init_fronts(&mut self) -> Result<(), TrackerError> {
        let profile = self.inflow.profile.clone();
        let strong_y = self.inflow.strong_jump_y;
        let mut outs: Vec<(f64, Vec<Outgoing>)> = Vec::new();
        for (k, &y) in profile.breaks.iter().enumerate() {
            let (l, r) = (profile.states[k], profile.states[k + 1]);
            let side = if y < strong_y { Side::Minus } else { Side::Plus };
            let fan = if y == strong_y {
                self.solver.solve_strong(&self.bg, &l, &r)
            } else {
                self.solver.solve_weak(&l, &r)
            }
            .map_err(|source| TrackerError::Init { y, source })?;
            outs.push((y, self.fan_fronts(&fan, side).map_err(|source| TrackerError::Init { y, source })?));
        }
        // Lateral problem at the origin.
        let edge0 = self.eff.vertices[0];
        let edge = BoundaryEdge::new(edge0.angle, edge0.turn);
        let mut bottom_out = Vec::new();
        if edge.tangency(&self.bottom).abs() > 1e-13 {
            let fan = self.solver.solve_lateral(&self.bottom, &edge).map_err(|source| TrackerError::Init { y: 0.0, source })?;
            self.bottom = fan.below;
            bottom_out = self.fan_fronts(&fan, Side::Minus).map_err(|source| TrackerError::Init { y: 0.0, source })?;
        }
        if let Some(h) = self.history.as_mut() {
            h.bottom.push((0.0, self.bottom));
        }
        let mut prev: Option<usize> = None;
        let mut all: Vec<(f64, Outgoing)> = bottom_out.into_iter().map(|o| (0.0, o)).collect();
        for (y, list) in outs {
            all.extend(list.into_iter().map(|o| (y, o)));
        }
        for (y, o) in all {
            let slot = self.alloc(o, 0.0, y, 0, prev, None);
            if let Some(p) = prev {
                self.nodes[p].next = Some(slot);
            } else {
                self.head = Some(slot);
            }
            prev = Some(slot);
        }
        self.tv = self.recount_tv();
        self.stats.initial_tv = self.tv;
        self.stats.max_tv = self.tv;
        self.inlet = self.strong_states();
        self.glimm = self.compute_glimm();
        self.push_trace();
        let mut cur = self.head;
        while let Some(c) = cur {
            let n = self.nodes[c].next;
            if let Some(nx) = n {
                self.schedule_pair(c, nx);
            }
            cur = n;
        }
        self.schedule_wall();
        self.stats.max_fronts = self.count;
        self.stats.max_physical_fronts = self.physical;
        Ok(())
    }

    fn alloc(&mut self, o: Outgoing, x: f64, y: f64, generation: u32, prev: Option<usize>, next: Option<usize>) -> usize {
        let front = Front { id: self.next_id, kind: o.kind, x0: x, y0: y, slope: o.slope, generation, side: o.side };
        self.next_id += 1;
        let node = Node { front, above: o.above, prev, next, alive: true, born: x };
        self.count += 1;
        if o.kind.is_physical() {
            self.physical += 1;
        }
        if let FrontKind::NonPhysical { strength } = o.kind {
            self.np_mass += strength;
        }
        match self.free.pop() {
            Some(s) => {
                self.nodes[s] = node;
                s
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    fn kill(&mut self, slot: usize) {
        let n = self.nodes[slot];
        self.nodes[slot].alive = false;
        self.count -= 1;
        if n.front.kind.is_physical() {
            self.physical -= 1;
        }
        if let FrontKind::NonPhysical { strength } = n.front.kind {
            self.np_mass -= strength;
        }
        if let Some(h) = self.history.as_mut() {
            h.fronts.push(FrontRecord { front: n.front, above: n.above, born: n.born, died: self.x });
        }
        self.free.push(slot);
    }

    fn below_state(&self, slot: usize) -> FlowState {
        match self.nodes[slot].prev {
            Some(p) => self.nodes[p].above,
            None => self.bottom,
        }
    }

    fn iter_slots(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.head, move |&s| self.nodes[s].next)
    }

    fn recount_tv(&self) -> f64 {
        self.iter_slots().map(|s| self.below_state(s).sup_dist(&self.nodes[s].above)).sum()
    }

    fn strong_states(&self) -> (FlowState, FlowState) {
        for s in self.iter_slots() {
            if matches!(self.nodes[s].front.kind, FrontKind::Strong { .. }) {
                return (self.below_state(s), self.nodes[s].above);
            }
        }
        (self.bg.minus, self.bg.plus)
    }

    fn compute_glimm(&self) -> GlimmSnapshot {
        let ctx = GlimmContext {
            x: self.x,
            strong_states: self.strong_states(),
            inlet_states: self.inlet,
            remaining_turning: self.eff.remaining_turning(self.cursor),
        };
        glimm_snapshot(self.iter_slots().map(|s| (&self.nodes[s].front.kind, self.nodes[s].front.side)), &ctx, &self.weights)
    }

    fn push_trace(&mut self) {
        let g = &self.glimm;
        self.trace.push(TraceRow {
            x: self.x,
            v: g.v,
            q_a: g.q_a,
            q_ve: g.q_ve,
            q_b: g.q_b,
            q_theta: g.q_theta,
            g: g.g,
            front_count: self.count,
            nonphysical_mass: self.np_mass.max(0.0),
        });
    }

    /// Convert a fan into fronts in increasing slope.
    fn fan_fronts(&self, fan: &WaveFan, side: Side) -> Result<Vec<Outgoing>, SolverError> {
        let mut out: Vec<Outgoing> = Vec::new();
        let mut side = side;
        let delta = self.theta.delta();
        let mut i = 0;
        while i < fan.waves.len() {
            let w = &fan.waves[i];
            match w.family {
                WaveFamily::F1 | WaveFamily::F4 => {
                    if w.is_rarefaction() {
                        let n = ((w.strength / delta - 1e-9).ceil() as usize).max(1);
                        let sign = w.family.sign();
                        let mut back = w.back;
                        let mut lb = self.gas.nonlinear_slope(&back, sign)?;
                        for k in 1..=n {
                            let front = if k == n {
                                w.front
                            } else {
                                wave_map(&self.gas, &w.back, w.family, w.strength * k as f64 / n as f64)?
                            };
                            let lf = self.gas.nonlinear_slope(&front, sign)?;
                            out.push(Outgoing {
                                kind: FrontKind::Nonlinear { family: w.family, strength: w.strength / n as f64 },
                                slope: 0.5 * (lb + lf),
                                above: front,
                                side,
                            });
                            back = front;
                            lb = lf;
                        }
                        let _ = back;
                    } else {
                        out.push(Outgoing {
                            kind: FrontKind::Nonlinear { family: w.family, strength: w.strength },
                            slope: w.speed(),
                            above: w.front,
                            side,
                        });
                    }
                }
                WaveFamily::Contact2 | WaveFamily::Contact3 => {
                    let (mut s2, mut s3) = (0.0, 0.0);
                    let mut above = w.front;
                    if w.family == WaveFamily::Contact2 {
                        s2 = w.strength;
                        if let Some(nx) = fan.waves.get(i + 1) {
                            if nx.family == WaveFamily::Contact3 {
                                s3 = nx.strength;
                                above = nx.front;
                                i += 1;
                            }
                        }
                    } else {
                        s3 = w.strength;
                    }
                    out.push(Outgoing { kind: FrontKind::Contact { sigma2: s2, sigma3: s3 }, slope: w.back.v / w.back.u, above, side });
                }
                WaveFamily::StrongContact => {
                    let (s2, s3) = w.pair.unwrap_or((w.strength, 0.0));
                    out.push(Outgoing { kind: FrontKind::Strong { sigma2: s2, sigma3: s3 }, slope: w.back.v / w.back.u, above: w.front, side });
                    side = Side::Plus;
                }
                WaveFamily::NonPhysical => {
                    out.push(Outgoing {
                        kind: FrontKind::NonPhysical { strength: w.strength },
                        slope: self.solver.lambda_hat,
                        above: w.front,
                        side,
                    });
                }
            }
            i += 1;
        }
        // Fronts leave the interaction point diverging.
        for k in 1..out.len() {
            if out[k].slope < out[k - 1].slope {
                out[k].slope = out[k - 1].slope;
            }
        }
        Ok(out)
    }

    fn collision_x(&self, lo: usize, hi: usize) -> Option<(f64, f64)> {
        let a = &self.nodes[lo].front;
        let b = &self.nodes[hi].front;
        if !(a.slope > b.slope) {
            return None;
        }
        let xc = (b.y0 - a.y0 + a.slope * a.x0 - b.slope * b.x0) / (a.slope - b.slope);
        let xc = if xc < self.x { self.x } else { xc };
        if !(xc <= self.window) {
            return None;
        }
        Some((xc, 0.5 * (a.y_at(xc) + b.y_at(xc))))
    }

    fn push(&mut self, x: f64, y: f64, what: Pending) {
        self.seq += 1;
        self.heap.push(Queued { x, y, seq: self.seq, what });
    }

    fn schedule_pair(&mut self, lo: usize, hi: usize) {
        let Some((mut xc, mut yc)) = self.collision_x(lo, hi) else { return };
        // Split near-simultaneous collisions sharing a front.
        for _ in 0..3 {
            if xc - self.x <= TIE {
                break;
            }
            let mut conflict = None;
            if let Some(nx) = self.nodes[hi].next {
                if let Some((x2, _)) = self.collision_x(hi, nx) {
                    if (x2 - xc).abs() <= TIE {
                        conflict = Some(hi);
                    }
                }
            }
            if conflict.is_none() {
                if let Some(pv) = self.nodes[lo].prev {
                    if let Some((x2, _)) = self.collision_x(pv, lo) {
                        if (x2 - xc).abs() <= TIE {
                            conflict = Some(lo);
                        }
                    }
                }
            }
            let Some(mid) = conflict else { break };
            let eps = JITTER * self.rng.gen_range(0.5..1.0) * if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let f = &mut self.nodes[mid].front;
            let y = f.y_at(self.x);
            f.x0 = self.x;
            f.y0 = y;
            f.slope += eps;
            self.stats.jitters += 1;
            // The other pair of the jittered front is rescheduled too.
            let other = if mid == hi { self.nodes[hi].next.map(|n| (hi, n)) } else { self.nodes[lo].prev.map(|p| (p, lo)) };
            if let Some((a, b)) = other {
                if let Some((x2, y2)) = self.collision_x(a, b) {
                    let what = Pending::Pair { lo: a, lo_id: self.nodes[a].front.id, hi: b, hi_id: self.nodes[b].front.id };
                    self.push(x2, y2, what);
                }
            }
            if mid == lo && self.nodes[lo].prev.is_none() {
                self.schedule_wall();
            }
            match self.collision_x(lo, hi) {
                Some((a, b)) => {
                    xc = a;
                    yc = b;
                }
                None => return,
            }
        }
        let what = Pending::Pair { lo, lo_id: self.nodes[lo].front.id, hi, hi_id: self.nodes[hi].front.id };
        self.push(xc, yc, what);
    }

    fn schedule_wall(&mut self) {
        let Some(h) = self.head else { return };
        let f = self.nodes[h].front;
        let v = self.eff.vertices[self.edge];
        let sw = v.angle.tan();
        if !(sw - f.slope > TANGENCY_TOL) {
            return;
        }
        let xc = (f.y0 - f.slope * f.x0 - v.y + sw * v.x) / (sw - f.slope);
        let xc = xc.max(self.x);
        if xc <= self.window {
            let what = Pending::Wall { slot: h, id: f.id, vertex: self.edge };
            self.push(xc, f.y_at(xc), what);
        }
    }

    fn valid(&self, q: &Queued) -> bool {
        match q.what {
            Pending::Pair { lo, lo_id, hi, hi_id } => {
                let a = &self.nodes[lo];
                let b = &self.nodes[hi];
                a.alive && b.alive && a.front.id == lo_id && b.front.id == hi_id && a.next == Some(hi)
            }
            Pending::Wall { slot, id, vertex } => {
                let a = &self.nodes[slot];
                a.alive && a.front.id == id && a.prev.is_none() && vertex == self.edge
            }
        }
    }

    fn take_samples(&mut self, upto: f64) {
        while let Some(&sx) = self.samples.first() {
            if sx > upto {
                break;
            }
            self.samples.remove(0);
            let snap = self.snapshot(sx);
            self.snapshots.push(snap);
        }
    }

    fn snapshot(&self, x: f64) -> SliceSnapshot {
        SliceSnapshot {
            x,
            base: self.wall.g(x),
            bottom: self.bottom,
            fronts: self.iter_slots().map(|s| (self.nodes[s].front, self.nodes[s].above)).collect(),
        }
    }

    /// Process events up to the window end.
    pub fn run_to_end(mut self) -> Result<Solution, TrackerError> {
        let initial = self.snapshot(0.0);
        loop {
            let next_vertex = self.eff.vertices.get(self.cursor).map(|v| v.x).filter(|&x| x <= self.window);
            while let Some(q) = self.heap.peek() {
                if self.valid(q) {
                    break;
                }
                self.heap.pop();
            }
            let heap_x = self.heap.peek().map(|q| q.x);
            let (ex, is_vertex) = match (heap_x, next_vertex) {
                (Some(h), Some(v)) => {
                    if h <= v {
                        (h, false)
                    } else {
                        (v, true)
                    }
                }
                (Some(h), None) => (h, false),
                (None, Some(v)) => (v, true),
                (None, None) => break,
            };
            if ex > self.window {
                break;
            }
            self.take_samples(ex);
            self.x = ex;
            self.stats.events += 1;
            if self.stats.events > self.budget {
                return Err(TrackerError::Budget { budget: self.budget, x: self.x });
            }
            if is_vertex {
                self.process_vertex()?;
            } else {
                let q = self.heap.pop().expect("peeked");
                match q.what {
                    Pending::Pair { lo, hi, .. } => self.process_collision(lo, hi, q.y)?,
                    Pending::Wall { slot, .. } => self.process_wall(slot)?,
                }
            }
            self.stats.max_fronts = self.stats.max_fronts.max(self.count);
            self.stats.max_physical_fronts = self.stats.max_physical_fronts.max(self.physical);
            self.stats.max_nonphysical_mass = self.stats.max_nonphysical_mass.max(self.np_mass);
            self.stats.max_tv = self.stats.max_tv.max(self.tv);
        }
        self.take_samples(self.window);
        self.x = self.window;
        let last = self.snapshot(self.window);
        self.stats.final_fronts = self.count;
        // Glimm at the window end.
        if self.trace.last().map(|r| r.x) != Some(self.window) {
            self.push_trace();
            self.trace.last_mut().unwrap().x = self.window;
        }
        if let Some(h) = self.history.as_mut() {
            let mut cur = self.head;
            while let Some(c) = cur {
                let n = self.nodes[c];
                h.fronts.push(FrontRecord { front: n.front, above: n.above, born: n.born, died: f64::INFINITY });
                cur = n.next;
            }
            h.fronts.sort_by(|a, b| a.born.total_cmp(&b.born).then(a.front.id.cmp(&b.front.id)));
        }
        Ok(Solution {
            window: self.window,
            theta: self.theta,
            wall: self.wall,
            effective_wall: self.eff,
            inflow: self.inflow,
            weights: self.weights,
            events: self.events,
            trace: self.trace,
            snapshots: self.snapshots,
            initial,
            last,
            history: self.history,
            stats: self.stats,
        })
    }

    /// Replace the fronts `first..=last` (consecutive) by `outs` anchored
    /// at `(x, y)`; returns the new slots.
    fn splice(&mut self, first: Option<usize>, last: Option<usize>, outs: &[Outgoing], y: f64, generation: u32) -> Vec<usize> {
        let (prev, next) = match (first, last) {
            (Some(f), Some(l)) => (self.nodes[f].prev, self.nodes[l].next),
            _ => (None, self.head),
        };
        // Remove old fronts.
        if let (Some(f), Some(l)) = (first, last) {
            let mut cur = Some(f);
            while let Some(c) = cur {
                let n = self.nodes[c].next;
                self.tv -= self.below_state(c).sup_dist(&self.nodes[c].above);
                self.kill(c);
                if c == l {
                    break;
                }
                cur = n;
            }
        }
        let mut slots = Vec::with_capacity(outs.len());
        let mut p = prev;
        for o in outs {
            let s = self.alloc(*o, self.x, y, generation, p, None);
            match p {
                Some(pp) => self.nodes[pp].next = Some(s),
                None => self.head = Some(s),
            }
            p = Some(s);
            slots.push(s);
        }
        match p {
            Some(pp) => self.nodes[pp].next = next,
            None => self.head = next,
        }
        if let Some(n) = next {
            self.nodes[n].prev = p;
        }
        for &s in &slots {
            self.tv += self.below_state(s).sup_dist(&self.nodes[s].above);
        }
        // New neighbours.
        let mut chain: Vec<usize> = Vec::new();
        if let Some(pp) = prev {
            chain.push(pp);
        }
        chain.extend(&slots);
        if let Some(n) = next {
            chain.push(n);
        }
        for w in chain.windows(2) {
            self.schedule_pair(w[0], w[1]);
        }
        slots
    }

    fn record(&mut self, rec: EventRecord) {
        let tol = 1e-12 + rec.defect;
        let excess = rec.delta_g - tol;
        self.stats.max_glimm_excess = self.stats.max_glimm_excess.max(excess);
        if excess > 0.0 {
            self.stats.glimm_violations += 1;
            self.stats.first_glimm_violation.get_or_insert(rec.x);
        }
        if rec.measure > 0.0 {
            let ratio = -rec.delta_q / rec.measure;
            self.stats.nu = Some(self.stats.nu.map_or(ratio, |n: f64| n.min(ratio)));
            self.stats.nu_events += 1;
        }
        self.events.push(rec);
        self.push_trace();
    }

    fn refresh_glimm(&mut self) -> (f64, f64) {
        let before = self.glimm;
        self.glimm = self.compute_glimm();
        (self.glimm.g - before.g, self.glimm.q_total - before.q_total)
    }

    fn process_collision(&mut self, lo: usize, hi: usize, y: f64) -> Result<(), TrackerError> {
        self.stats.collisions += 1;
        let a = self.nodes[lo];
        let b = self.nodes[hi];
        let ul = self.below_state(lo);
        let (um, ur) = (a.above, b.above);
        let (ka, kb) = (a.front.kind, b.front.kind);
        let omega = self.theta.omega();
        let generation = a.front.generation.max(b.front.generation) + 1;
        let defect_in = match ka {
            FrontKind::NonPhysical { strength } => strength,
            _ => 0.0,
        } + match kb {
            FrontKind::NonPhysical { strength } => strength,
            _ => 0.0,
        };
        let np_involved = !ka.is_physical() || !kb.is_physical();
        let strong_involved = matches!(ka, FrontKind::Strong { .. }) || matches!(kb, FrontKind::Strong { .. });
        let err = event_err(self.x, "collision");
        let side = if ka.is_weak() { a.front.side } else { b.front.side };
        let (fan, solver_used) = if np_involved {
            (self.solver.solve_simplified(&ka.incoming(), &kb.incoming(), [ul, um, ur]).map_err(&err)?, SolverUsed::Simplified)
        } else if strong_involved {
            let weak = if matches!(ka, FrontKind::Strong { .. }) { kb } else { ka };
            if weak.size() > omega {
                (self.solver.solve_strong(&self.bg, &ul, &ur).map_err(&err)?, SolverUsed::Accurate)
            } else {
                (self.solver.solve_simplified(&ka.incoming(), &kb.incoming(), [ul, um, ur]).map_err(&err)?, SolverUsed::Simplified)
            }
        } else if ka.size() * kb.size() > omega {
            (self.solver.solve_weak(&ul, &ur).map_err(&err)?, SolverUsed::Accurate)
        } else {
            (self.solver.solve_simplified(&ka.incoming(), &kb.incoming(), [ul, um, ur]).map_err(&err)?, SolverUsed::Simplified)
        };
        let outs = self.fan_fronts(&fan, if fan.contains_strong { Side::Minus } else { side }).map_err(&err)?;
        let defect_out: f64 = outs
            .iter()
            .filter_map(|o| match o.kind {
                FrontKind::NonPhysical { strength } => Some(strength),
                _ => None,
            })
            .sum();
        match solver_used {
            SolverUsed::Accurate => self.stats.accurate += 1,
            _ => self.stats.simplified += 1,
        }
        let new = self.splice(Some(lo), Some(hi), &outs, y, generation);
        if new.first().map_or(self.head.is_some(), |&s| self.nodes[s].prev.is_none()) {
            self.schedule_wall();
        }
        // A non-physical front crossing a weak one changes nothing the
        // Glimm functional sees.
        if np_involved && !strong_involved {
            self.stats.np_crossings += 1;
            return Ok(());
        }
        let (dg, dq) = self.refresh_glimm();
        let measure = if np_involved {
            0.0
        } else if strong_involved {
            // Weak waves moving toward the strong contact owe a decrease.
            match (ka, kb) {
                (FrontKind::Nonlinear { family: WaveFamily::F4, strength }, FrontKind::Strong { .. }) => {
                    weighted(4, strength, Side::Minus, &self.weights)
                }
                (FrontKind::Strong { .. }, FrontKind::Nonlinear { family: WaveFamily::F1, strength }) => {
                    weighted(1, strength, Side::Plus, &self.weights)
                }
                _ => 0.0,
            }
        } else {
            pair_measure(&ka, &kb, side, &self.weights)
        };
        self.record(EventRecord {
            x: self.x,
            y,
            kind: EventKind::Collision,
            solver: solver_used,
            incoming: [Some(ka.family()), Some(kb.family())],
            outgoing: outs.len(),
            defect: defect_in + defect_out,
            delta_g: dg,
            delta_q: dq,
            measure,
        });
        Ok(())
    }

    fn current_edge(&self) -> BoundaryEdge {
        let v = self.eff.vertices[self.edge];
        BoundaryEdge::new(v.angle, v.turn)
    }

    fn check_tangency(&mut self) {
        let t = self.current_edge().tangency(&self.bottom).abs();
        self.stats.max_tangency = self.stats.max_tangency.max(t);
    }

    fn set_bottom(&mut self, s: FlowState) {
        self.bottom = s;
        if let Some(h) = self.history.as_mut() {
            h.bottom.push((self.x, s));
        }
    }

    fn process_wall(&mut self, slot: usize) -> Result<(), TrackerError> {
        self.stats.wall_hits += 1;
        let a = self.nodes[slot];
        let y = self.eff.g(self.x);
        let edge = self.current_edge();
        let err = event_err(self.x, "wall hit");
        let fan = self.solver.solve_lateral(&a.above, &edge).map_err(&err)?;
        let outs = self.fan_fronts(&fan, Side::Minus).map_err(&err)?;
        let mut defect = 0.0;
        if let FrontKind::NonPhysical { strength } = a.front.kind {
            self.stats.exited_mass += strength;
            defect += strength;
        }
        self.splice(Some(slot), Some(slot), &outs, y, a.front.generation + 1);
        self.set_bottom(fan.below);
        self.tv = self.recount_tv();
        self.schedule_wall();
        self.check_tangency();
        let (dg, dq) = self.refresh_glimm();
        let measure = match a.front.kind {
            FrontKind::Nonlinear { family: WaveFamily::F1, strength } if a.front.side == Side::Minus => {
                weighted(1, strength, Side::Minus, &self.weights)
            }
            _ => 0.0,
        };
        self.record(EventRecord {
            x: self.x,
            y,
            kind: EventKind::WallHit,
            solver: SolverUsed::Lateral,
            incoming: [Some(a.front.kind.family()), None],
            outgoing: outs.len(),
            defect,
            delta_g: dg,
            delta_q: dq,
            measure,
        });
        Ok(())
    }

    fn process_vertex(&mut self) -> Result<(), TrackerError> {
        let l = self.cursor;
        self.cursor += 1;
        let v = self.eff.vertices[l];
        if !v.processed {
            self.stats.vertices_ignored += 1;
            self.events.push(EventRecord {
                x: self.x,
                y: v.y,
                kind: EventKind::Vertex,
                solver: SolverUsed::Ignored,
                incoming: [None, None],
                outgoing: 0,
                defect: 0.0,
                delta_g: 0.0,
                delta_q: 0.0,
                measure: 0.0,
            });
            return Ok(());
        }
        self.stats.vertices_processed += 1;
        self.edge = l;
        let edge = self.current_edge();
        let err = event_err(self.x, "wall vertex");
        let old_bottom = self.bottom;
        let fan = self.solver.solve_lateral(&old_bottom, &edge).map_err(&err)?;
        let outs = self.fan_fronts(&fan, Side::Minus).map_err(&err)?;
        self.set_bottom(fan.below);
        self.splice(None, None, &outs, v.y, 0);
        self.tv = self.recount_tv();
        self.schedule_wall();
        self.check_tangency();
        let (dg, dq) = self.refresh_glimm();
        self.record(EventRecord {
            x: self.x,
            y: v.y,
            kind: EventKind::Vertex,
            solver: SolverUsed::Lateral,
            incoming: [None, None],
            outgoing: outs.len(),
            defect: 0.0,
            delta_g: dg,
            delta_q: dq,
            measure: v.turn.abs(),
        });
        Ok(())
    }
}

/// Track a prepared scenario to the end of its window.
pub fn run(setup: &Setup, options: &RunOptions) -> Result<Solution, TrackerError> {
    Tracker::initialize(setup, options)?.run_to_end()
}
