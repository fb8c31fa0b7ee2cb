//! Orbit integration for the stationary system.
//!
//! Trajectories are computed with the Dormand-Prince 5(4) pair and its
//! fourth-order continuous extension. Event surfaces (axis crossings,
//! nullcline crossings, barrier exits) are located by bisection on the
//! continuous extension, so that every recorded event point satisfies its
//! defining equation to [`EVENT_TOL`].

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{field_unchecked, nullcline_unchecked, ModelParams, PhasePoint};

/// Residual to which event points are refined.
pub const EVENT_TOL: f64 = 1e-10;

/// Integration direction: the system itself or its time-reversed copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Curve `v = coefficient * |u|^exponent + offset` used as a barrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierCurve {
    pub coefficient: f64,
    pub exponent: f64,
    pub offset: f64,
}

impl BarrierCurve {
    pub fn eval(&self, u: f64) -> f64 {
        self.coefficient * u.abs().powf(self.exponent) + self.offset
    }
}

/// Relative margin applied to barrier-exit detection.
pub const BARRIER_MARGIN: f64 = 1e-8;

/// A surface whose crossings are recorded as events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "kebab-case")]
pub enum EventSurface {
    /// `v = 0`.
    UAxis,
    /// `u = 0`.
    VAxis,
    /// `v = |u|^(p-1) - lambda`.
    Nullcline,
    /// Leaving the region above a barrier curve (with a small margin).
    Barrier { curve: BarrierCurve },
    /// Entering a disc around a point.
    Proximity { center: PhasePoint, radius: f64 },
}

impl EventSurface {
    pub fn kind(&self) -> EventKind {
        match self {
            Self::UAxis => EventKind::UAxis,
            Self::VAxis => EventKind::VAxis,
            Self::Nullcline => EventKind::Nullcline,
            Self::Barrier { .. } => EventKind::BarrierExit,
            Self::Proximity { .. } => EventKind::Proximity,
        }
    }

    /// Signed distance-like function whose zero set is the surface.
    pub fn value(&self, s: PhasePoint, m: &ModelParams) -> f64 {
        match self {
            Self::UAxis => s.v,
            Self::VAxis => s.u,
            Self::Nullcline => s.v - nullcline_unchecked(s.u, m),
            Self::Barrier { curve } => {
                let b = curve.eval(s.u);
                s.v - b + BARRIER_MARGIN * (1.0 + b.abs())
            }
            Self::Proximity { center, radius } => s.distance(*center) - radius,
        }
    }
}

/// Event categories; the declaration order breaks ties between events
/// located at the same parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    UAxis,
    VAxis,
    Nullcline,
    BarrierExit,
    Proximity,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::UAxis => "u-axis",
            Self::VAxis => "v-axis",
            Self::Nullcline => "nullcline",
            Self::BarrierExit => "barrier-exit",
            Self::Proximity => "proximity",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            Self::UAxis,
            Self::VAxis,
            Self::Nullcline,
            Self::BarrierExit,
            Self::Proximity,
        ]
        .into_iter()
        .find(|k| k.label() == label)
    }
}

/// Which sign changes of the surface function count as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossing {
    Any,
    /// From negative to positive.
    Rising,
    /// From positive to negative.
    Falling,
}

/// A surface to watch, and whether reaching it ends the integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub surface: EventSurface,
    pub crossing: Crossing,
    pub terminal: bool,
}

impl EventSpec {
    pub fn record(surface: EventSurface, crossing: Crossing) -> Self {
        Self {
            surface,
            crossing,
            terminal: false,
        }
    }

    pub fn stop(surface: EventSurface, crossing: Crossing) -> Self {
        Self {
            surface,
            crossing,
            terminal: true,
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Orbits with `|u| + |v|` above this value are declared escaping.
    pub escape_cap: f64,
    pub max_steps: usize,
    /// Upper bound on a single step.
    pub max_step: f64,
    /// Integration stops once the parameter has advanced by this much.
    pub max_parameter: Option<f64>,
    pub direction: Direction,
    pub events: Vec<EventSpec>,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            escape_cap: 1e6,
            max_steps: 200_000,
            max_step: 0.25,
            max_parameter: None,
            direction: Direction::Forward,
            events: Vec::new(),
        }
    }
}

impl IntegrationOptions {
    pub fn with_events(mut self, events: Vec<EventSpec>) -> Self {
        self.events = events;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_max_parameter(mut self, max_parameter: f64) -> Self {
        self.max_parameter = Some(max_parameter);
        self
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && !x.is_nan() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {x}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("escape_cap", self.escape_cap)?;
        positive("max_step", self.max_step)?;
        if let Some(limit) = self.max_parameter {
            positive("max_parameter", limit)?;
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One sampled state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    pub point: PhasePoint,
}

/// A located crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub crossing: Crossing,
    pub s: f64,
    pub point: PhasePoint,
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Terminal {
    EventStop,
    Escape,
    MaxSteps,
    EquilibriumApproach,
    ParameterLimit,
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    s0: f64,
    h: f64,
    coeffs: [[f64; 2]; 5],
    mirrored: bool,
}

impl DenseSegment {
    pub fn start(&self) -> f64 {
        self.s0
    }

    pub fn end(&self) -> f64 {
        self.s0 + self.h
    }

    fn eval_theta(&self, theta: f64) -> PhasePoint {
        let t = if self.mirrored { 1.0 - theta } else { theta };
        let c = &self.coeffs;
        let comp = |i: usize| c[0][i] + t * (c[1][i] + (1.0 - t) * (c[2][i] + t * (c[3][i] + (1.0 - t) * c[4][i])));
        let p = PhasePoint::new(comp(0), comp(1));
        if self.mirrored {
            p.mirrored()
        } else {
            p
        }
    }

    /// Interpolated state at parameter `s` (clamped to the segment).
    pub fn eval(&self, s: f64) -> PhasePoint {
        let theta = ((s - self.s0) / self.h).clamp(0.0, 1.0);
        self.eval_theta(theta)
    }

    fn mirror(&self) -> Self {
        Self {
            s0: -(self.s0 + self.h),
            h: self.h,
            coeffs: self.coeffs,
            mirrored: !self.mirrored,
        }
    }
}

/// A sampled orbit with its events and stopping reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub terminal: Terminal,
    pub direction: Direction,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn first(&self) -> Sample {
        self.samples[0]
    }

    pub fn last(&self) -> Sample {
        *self.samples.last().expect("trajectories are never empty")
    }

    /// Events of the given kind, in parameter order.
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn first_event(&self, kind: EventKind) -> Option<Event> {
        self.events_of(kind).next().copied()
    }

    /// Parameter range covered by the continuous extension.
    pub fn span(&self) -> (f64, f64) {
        (self.first().s, self.last().s)
    }

    /// Interpolated state at `s` using the continuous extension.
    pub fn interpolate(&self, s: f64) -> Option<PhasePoint> {
        if self.segments.is_empty() {
            return (s == self.first().s).then(|| self.first().point);
        }
        let (lo, hi) = self.span();
        if s < lo - 1e-12 * (1.0 + lo.abs()) || s > hi + 1e-12 * (1.0 + hi.abs()) {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|seg| seg.end() < s)
            .min(self.segments.len() - 1);
        Some(self.segments[idx].eval(s))
    }

    /// Dense resampling: each accepted step is split into `per_step` equal parts.
    pub fn refined_samples(&self, per_step: usize, from: f64, to: f64) -> Vec<Sample> {
        let per_step = per_step.max(1);
        let mut out = Vec::new();
        for seg in &self.segments {
            if seg.end() < from || seg.start() > to {
                continue;
            }
            let a = seg.start().max(from);
            let b = seg.end().min(to);
            let start_k = if out.is_empty() { 0 } else { 1 };
            for k in start_k..=per_step {
                let s = a + (b - a) * k as f64 / per_step as f64;
                out.push(Sample { s, point: seg.eval(s) });
            }
        }
        out
    }

    /// Largest value of `|u| + |v|` over the samples.
    pub fn max_l1(&self) -> f64 {
        self.samples.iter().map(|s| s.point.l1_norm()).fold(0.0, f64::max)
    }
}

/// Reflects an orbit through the ordinate axis with parameter reversal.
///
/// If `s -> (u, v)` solves the system then so does `s -> (-u(-s), v(-s))`.
pub fn mirror(t: &Trajectory) -> Trajectory {
    let samples = t
        .samples
        .iter()
        .rev()
        .map(|s| Sample {
            s: -s.s,
            point: s.point.mirrored(),
        })
        .collect();
    let events = t
        .events
        .iter()
        .rev()
        .map(|e| Event {
            kind: e.kind,
            crossing: e.crossing,
            s: -e.s,
            point: e.point.mirrored(),
        })
        .collect();
    let segments = t.segments.iter().rev().map(DenseSegment::mirror).collect();
    Trajectory {
        samples,
        events,
        terminal: t.terminal,
        direction: t.direction,
        segments,
    }
}

// Dormand-Prince 5(4) coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

type Vec2 = [f64; 2];

fn axpy(y: Vec2, terms: &[(f64, Vec2)], h: f64) -> Vec2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct StepResult {
    y_new: Vec2,
    k_new: Vec2,
    err: f64,
    dense: [[f64; 2]; 5],
}

fn dp_step<F: Fn(Vec2) -> Vec2>(f: &F, y: Vec2, k1: Vec2, h: f64, opts: &IntegrationOptions) -> StepResult {
    let k2 = f(axpy(y, &[(A21, k1)], h));
    let k3 = f(axpy(y, &[(A31, k1), (A32, k2)], h));
    let k4 = f(axpy(y, &[(A41, k1), (A42, k2), (A43, k3)], h));
    let k5 = f(axpy(y, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)], h));
    let k6 = f(axpy(y, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)], h));
    let y_new = axpy(y, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)], h);
    let k7 = f(y_new);
    let mut err: f64 = 0.0;
    let mut dense = [[0.0; 2]; 5];
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        let ratio = e.abs() / scale;
        err = if ratio.is_nan() { f64::INFINITY } else { err.max(ratio) };
        let r2 = y_new[i] - y[i];
        let r3 = h * k1[i] - r2;
        dense[0][i] = y[i];
        dense[1][i] = r2;
        dense[2][i] = r3;
        dense[3][i] = r2 - h * k7[i] - r3;
        dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    if !(y_new[0].is_finite() && y_new[1].is_finite() && k7[0].is_finite() && k7[1].is_finite()) {
        err = f64::INFINITY;
    }
    StepResult {
        y_new,
        k_new: k7,
        err,
        dense,
    }
}

fn crossing_matches(wanted: Crossing, previous_sign: f64) -> bool {
    match wanted {
        Crossing::Any => true,
        Crossing::Rising => previous_sign < 0.0,
        Crossing::Falling => previous_sign > 0.0,
    }
}

/// Bisection on the continuous extension for the zero of `g` in `(0, 1]`.
fn refine_event(seg: &DenseSegment, spec: &EventSpec, m: &ModelParams, g0: f64) -> (f64, PhasePoint) {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut g_lo = g0;
    let mut best = (1.0, seg.eval_theta(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = seg.eval_theta(mid);
        let g = spec.surface.value(p, m);
        best = (mid, p);
        if g.abs() <= 0.25 * EVENT_TOL || hi - lo <= f64::EPSILON {
            break;
        }
        if (g < 0.0) == (g_lo < 0.0) && g != 0.0 {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
        }
    }
    let (theta, mut point) = best;
    // Snap the coordinate that defines an axis so the event lies exactly on it.
    match spec.surface {
        EventSurface::UAxis => point.v = 0.0,
        EventSurface::VAxis => point.u = 0.0,
        _ => {}
    }
    (seg.s0 + theta * seg.h, point)
}

/// Error-estimate multiplier on the steps that end or start at a crossing
/// of `u = 0`, where the solution has limited smoothness.
const KINK_SAFETY: f64 = 10.0;

/// Fraction of a step at which the dense interpolant of `u` changes sign.
fn sign_change_theta(seg: &DenseSegment, u_start: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (seg.eval_theta(mid).u < 0.0) == (u_start < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Integrates the stationary system from `start`.
///
/// Unless `p` is an odd integer the nonlinearity `u|u|^(p-1)` is not smooth
/// at `u = 0`, and the embedded error estimate is unreliable on a step that
/// straddles it; such a step is redone once, shortened to end at the
/// crossing, and the steps on either side of the crossing are held to a
/// tighter error estimate.
pub fn integrate(start: PhasePoint, m: &ModelParams, opts: &IntegrationOptions) -> Result<Trajectory> {
    if !start.is_finite() {
        return Err(Error::Domain(format!("start point must be finite, got {start:?}")));
    }
    opts.validate()?;
    let sign = match opts.direction {
        Direction::Forward => 1.0,
        Direction::Reverse => -1.0,
    };
    let f = |y: Vec2| {
        let (du, dv) = field_unchecked(y[0], y[1], m);
        [sign * du, sign * dv]
    };
    let field_norm = |k: Vec2| k[0].hypot(k[1]);

    let mut y = [start.u, start.v];
    let mut k1 = f(y);
    let mut s = 0.0_f64;
    let mut samples = vec![Sample { s, point: start }];
    let mut events: Vec<Event> = Vec::new();
    let mut segments = Vec::new();

    let finish = |samples, events, segments, terminal| Trajectory {
        samples,
        events,
        terminal,
        direction: opts.direction,
        segments,
    };

    if field_norm(k1) < 1e-12 {
        return Ok(finish(samples, events, segments, Terminal::EquilibriumApproach));
    }

    let mut last_signs: Vec<f64> = opts
        .events
        .iter()
        .map(|e| e.surface.value(start, m))
        .map(|g| if g == 0.0 { 0.0 } else { g.signum() })
        .collect();
    let mut last_values: Vec<f64> = opts.events.iter().map(|e| e.surface.value(start, m)).collect();

    let scale = 1.0 + start.l1_norm();
    let mut h = (1e-3 * scale / field_norm(k1).max(1e-300)).min(opts.max_step).min(0.01);
    let mut quiet_steps = 0usize;
    let mut steps = 0usize;
    let kinked = !(m.p().fract() == 0.0 && m.p() % 2.0 == 1.0);
    let mut kink_cut = false;
    let mut after_kink = false;

    loop {
        if steps >= opts.max_steps {
            return Ok(finish(samples, events, segments, Terminal::MaxSteps));
        }
        let remaining = opts.max_parameter.map_or(f64::INFINITY, |limit| limit - s);
        let mut clipped = false;
        if h >= remaining {
            h = remaining;
            clipped = true;
        }
        let mut step = dp_step(&f, y, k1, h, opts);
        if kink_cut || after_kink {
            step.err *= KINK_SAFETY;
        }
        if step.err > 1.0 {
            let factor = if step.err.is_finite() {
                (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= factor;
            if h < 1e-14 * (1.0 + s.abs()) {
                return Err(Error::Numerical(format!(
                    "step-size underflow at s = {s}, point = ({}, {}), field norm = {}",
                    y[0],
                    y[1],
                    field_norm(k1)
                )));
            }
            continue;
        }
        let seg = DenseSegment {
            s0: s,
            h,
            coeffs: step.dense,
            mirrored: false,
        };
        if kinked && !kink_cut && y[0] != 0.0 && (step.y_new[0] < 0.0) != (y[0] < 0.0) {
            let cut = sign_change_theta(&seg, y[0]) * h;
            if cut > 1e-8 * (1.0 + s.abs()) && cut < h {
                h = cut;
                kink_cut = true;
                continue;
            }
        }
        after_kink = kink_cut;
        kink_cut = false;
        steps += 1;
        let new_point = PhasePoint::new(step.y_new[0], step.y_new[1]);

        // Event detection on this step.
        let mut found: Vec<(Event, bool)> = Vec::new();
        for (i, spec) in opts.events.iter().enumerate() {
            let g_new = spec.surface.value(new_point, m);
            let prev = last_signs[i];
            let crossed = prev != 0.0 && (g_new == 0.0 || g_new.signum() != prev);
            if crossed && crossing_matches(spec.crossing, prev) {
                let (se, pe) = refine_event(&seg, spec, m, last_values[i]);
                found.push((
                    Event {
                        kind: spec.surface.kind(),
                        crossing: if prev < 0.0 {
                            Crossing::Rising
                        } else {
                            Crossing::Falling
                        },
                        s: se,
                        point: pe,
                    },
                    spec.terminal,
                ));
            }
            last_signs[i] = if g_new == 0.0 { 0.0 } else { g_new.signum() };
            last_values[i] = g_new;
        }
        found.sort_by(|a, b| a.0.s.total_cmp(&b.0.s).then(a.0.kind.cmp(&b.0.kind)));
        if let Some(stop_idx) = found.iter().position(|(_, terminal)| *terminal) {
            let stop = found[stop_idx].0;
            events.extend(found[..=stop_idx].iter().map(|(e, _)| *e));
            segments.push(seg);
            samples.push(Sample {
                s: stop.s,
                point: stop.point,
            });
            return Ok(finish(samples, events, segments, Terminal::EventStop));
        }
        events.extend(found.into_iter().map(|(e, _)| e));

        s += h;
        y = step.y_new;
        k1 = step.k_new;
        segments.push(seg);
        samples.push(Sample { s, point: new_point });

        if new_point.l1_norm() > opts.escape_cap {
            return Ok(finish(samples, events, segments, Terminal::Escape));
        }
        if clipped {
            return Ok(finish(samples, events, segments, Terminal::ParameterLimit));
        }
        if field_norm(k1) < 1e-12 {
            quiet_steps += 1;
            if quiet_steps >= 50 {
                return Ok(finish(samples, events, segments, Terminal::EquilibriumApproach));
            }
        } else {
            quiet_steps = 0;
        }
        let factor = if step.err == 0.0 {
            5.0
        } else {
            (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(opts.max_step);
    }
}

/// Integrates a batch of seeds; results keep the order of `seeds`.
pub fn portrait(m: &ModelParams, seeds: &[PhasePoint], opts: &IntegrationOptions) -> Vec<Result<Trajectory>> {
    seeds.par_iter().map(|&seed| integrate(seed, m, opts)).collect()
}

/// Writes samples as CSV with columns `s,u,v`.
pub fn write_samples_csv<W: Write>(samples: &[Sample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["s", "u", "v"])?;
    for s in samples {
        w.write_record([s.s.to_string(), s.point.u.to_string(), s.point.v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `s,u,v` CSV produced by [`write_samples_csv`].
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.deserialize() {
        let (s, u, v): (f64, f64, f64) = record?;
        out.push(Sample {
            s,
            point: PhasePoint::new(u, v),
        });
    }
    Ok(out)
}

/// Writes events as CSV with columns `kind,s,u,v`.
pub fn write_events_csv<W: Write>(events: &[Event], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "s", "u", "v"])?;
    for e in events {
        w.write_record([
            e.kind.label().to_string(),
            e.s.to_string(),
            e.point.u.to_string(),
            e.point.v.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `kind,s,u,v` CSV; crossing directions are not stored and are
/// reported as [`Crossing::Any`].
pub fn read_events_csv<R: Read>(reader: R) -> Result<Vec<Event>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.deserialize() {
        let (kind, s, u, v): (String, f64, f64, f64) = record?;
        let kind = EventKind::from_label(&kind).ok_or_else(|| Error::Domain(format!("unknown event kind {kind:?}")))?;
        out.push(Event {
            kind,
            crossing: Crossing::Any,
            s,
            point: PhasePoint::new(u, v),
        });
    }
    Ok(out)
}
