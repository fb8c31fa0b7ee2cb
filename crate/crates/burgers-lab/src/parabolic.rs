//! Method-of-lines solver for `u_t = u_xx - u u_x + u|u|^(p-1) - lambda u`.
//!
//! Space is discretized on a uniform vertex-centred grid. Interior nodes use
//! the central second difference for diffusion and a conservative face flux
//! for `(u^2/2)_x`: the central average `(u_i^2 + u_{i+1}^2)/4` while the cell
//! Peclet number `|u| h / 2` stays at most one, first-order upwinding by the
//! sign of the face velocity beyond that. End nodes that are not pinned by a
//! Dirichlet condition own a half cell; integrating the equation over it gives
//!
//! ```text
//! (h/2 + sigma) u_t = inward difference / h + d_nu u - convective flux jump + (h/2) reaction
//! ```
//!
//! where `d_nu` is the outward normal derivative (`-d/dx` on the left end,
//! `+d/dx` on the right end). Neumann, Robin and quadratic-flux ends all
//! prescribe `d_nu u = c2 u^2 + c1 u` with `sigma = 0`; a dynamical end has
//! `sigma >= 0` and `d_nu u = -sigma u_t`, which moves into the left side.
//!
//! Time stepping is Heun's second-order Runge-Kutta method with the step
//! recomputed from diffusion, convection, reaction and boundary-flux limits.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::{signed_power, ModelParams};

/// Minimum number of interior nodes.
pub const MIN_INTERIOR_NODES: usize = 8;

/// Uniform grid on `[left, right]` with `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    left: f64,
    right: f64,
    cells: usize,
}

impl Grid {
    pub fn new(left: f64, right: f64, cells: usize) -> Result<Self> {
        ensure_finite("left end", left)?;
        ensure_finite("right end", right)?;
        if right <= left {
            return Err(Error::Config(format!("empty interval [{left}, {right}]")));
        }
        if cells < MIN_INTERIOR_NODES + 1 {
            return Err(Error::Config(format!(
                "grid needs at least {} cells, got {cells}",
                MIN_INTERIOR_NODES + 1
            )));
        }
        Ok(Self { left, right, cells })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.right - self.left) / self.cells as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.cells {
            self.right
        } else {
            self.left + (self.right - self.left) * i as f64 / self.cells as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// The same interval with twice as many cells.
    pub fn refined(&self) -> Self {
        Self {
            cells: 2 * self.cells,
            ..*self
        }
    }
}

/// Nodal values of `u` at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
    /// Set when the sup-norm exceeded the blow-up cap.
    #[serde(default)]
    pub blown_up: bool,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("field value {bad} is not finite")));
        }
        Ok(Self {
            grid,
            values,
            time,
            blown_up: false,
        })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().into_iter().map(f).collect(), time)
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::from_fn(grid, 0.0, |_| value)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Trapezoid approximation of the integral of `u`.
    pub fn mass(&self) -> f64 {
        let h = self.grid.spacing();
        let n = self.values.len();
        h * (self.values.iter().sum::<f64>() - 0.5 * (self.values[0] + self.values[n - 1]))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn sup_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Condition imposed at one end of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EndCondition {
    /// `u = 0`.
    Dirichlet,
    /// `d_nu u = 0`.
    Neumann,
    /// `d_nu u + a u = 0` with `a >= 0`.
    Robin { a: f64 },
    /// `sigma u_t + d_nu u = 0` with `sigma >= 0`.
    Dynamical { sigma: f64 },
    /// `d_nu u = c2 u^2 + c1 u`.
    NonlinearFlux { c2: f64, c1: f64 },
}

impl EndCondition {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Robin { a } => {
                ensure_finite("Robin coefficient", a)?;
                if a < 0.0 {
                    return Err(Error::Config(format!("Robin coefficient must be >= 0, got {a}")));
                }
            }
            Self::Dynamical { sigma } => {
                ensure_finite("sigma", sigma)?;
                if sigma < 0.0 {
                    return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
                }
            }
            Self::NonlinearFlux { c2, c1 } => {
                ensure_finite("c2", c2)?;
                ensure_finite("c1", c1)?;
            }
            Self::Dirichlet | Self::Neumann => {}
        }
        Ok(())
    }

    /// `(sigma, c2, c1)` for the half-cell balance, `None` for a pinned end.
    fn cell_law(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::Dirichlet => None,
            Self::Neumann => Some((0.0, 0.0, 0.0)),
            Self::Robin { a } => Some((0.0, 0.0, 0.0 - a)),
            Self::Dynamical { sigma } => Some((sigma, 0.0, 0.0)),
            Self::NonlinearFlux { c2, c1 } => Some((0.0, c2, c1)),
        }
    }
}

/// Conditions at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub left: EndCondition,
    pub right: EndCondition,
}

impl BoundarySpec {
    pub fn both(end: EndCondition) -> Self {
        Self { left: end, right: end }
    }

    pub fn validate(&self) -> Result<()> {
        self.left.validate()?;
        self.right.validate()
    }
}

/// Extra forcing term `S(x, t)` added to the right-hand side.
pub type SourceTerm = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Solver settings.
#[derive(Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveOptions {
    pub final_time: f64,
    /// Snapshots are stored at multiples of this interval and at the end.
    pub snapshot_interval: f64,
    pub blowup_cap: f64,
    pub steady_tolerance: f64,
    pub steady_steps: usize,
    /// Safety factor of the step limits.
    pub cfl: f64,
    /// Fixed time step instead of the adaptive limits.
    pub fixed_dt: Option<f64>,
    pub max_steps: usize,
    /// Rerun the last stretch before a cap crossing with a quarter step.
    pub refine_blowup: bool,
    #[serde(skip)]
    pub source: Option<SourceTerm>,
}

impl std::fmt::Debug for EvolveOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvolveOptions")
            .field("final_time", &self.final_time)
            .field("snapshot_interval", &self.snapshot_interval)
            .field("blowup_cap", &self.blowup_cap)
            .field("steady_tolerance", &self.steady_tolerance)
            .field("steady_steps", &self.steady_steps)
            .field("cfl", &self.cfl)
            .field("fixed_dt", &self.fixed_dt)
            .field("max_steps", &self.max_steps)
            .field("refine_blowup", &self.refine_blowup)
            .field("source", &self.source.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            final_time: 1.0,
            snapshot_interval: 0.1,
            blowup_cap: 1e8,
            steady_tolerance: 1e-10,
            steady_steps: 100,
            cfl: 0.4,
            fixed_dt: None,
            max_steps: 50_000_000,
            refine_blowup: true,
            source: None,
        }
    }
}

impl EvolveOptions {
    pub fn with_final_time(mut self, final_time: f64, snapshot_interval: f64) -> Self {
        self.final_time = final_time;
        self.snapshot_interval = snapshot_interval;
        self
    }

    pub fn with_source(mut self, source: SourceTerm) -> Self {
        self.source = Some(source);
        self
    }

    /// Rejects settings the solver cannot honour on `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("final_time", self.final_time)?;
        positive("snapshot_interval", self.snapshot_interval)?;
        positive("blowup_cap", self.blowup_cap)?;
        positive("steady_tolerance", self.steady_tolerance)?;
        positive("cfl", self.cfl)?;
        if self.cfl > 0.5 {
            return Err(Error::Config(format!("cfl factor {} exceeds the stable 0.5", self.cfl)));
        }
        if let Some(dt) = self.fixed_dt {
            positive("fixed_dt", dt)?;
            let h = grid.spacing();
            if dt > 0.5 * h * h {
                return Err(Error::Config(format!(
                    "time step {dt} violates the diffusion limit h^2/2 = {}",
                    0.5 * h * h
                )));
            }
        }
        if self.steady_steps == 0 || self.max_steps == 0 {
            return Err(Error::Config("step counts must be positive".into()));
        }
        Ok(())
    }
}

/// How an evolution ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    ReachedFinalTime,
    BlowupDetected {
        t_b: f64,
        /// Crossing time of the rerun with a quarter step, if performed.
        t_b_refined: Option<f64>,
    },
    SteadyState {
        time: f64,
        tolerance: f64,
    },
}

impl Outcome {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            Self::BlowupDetected { t_b, .. } => Some(*t_b),
            _ => None,
        }
    }

    /// Relative gap between the coarse and refined crossing times.
    pub fn blowup_agreement(&self) -> Option<f64> {
        match self {
            Self::BlowupDetected {
                t_b,
                t_b_refined: Some(r),
            } => Some((t_b - r).abs() / t_b.abs().max(f64::MIN_POSITIVE)),
            _ => None,
        }
    }
}

/// One entry of the diagnostic history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub t: f64,
    pub sup: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub outcome: Outcome,
    pub snapshots: Vec<Field>,
    pub history: Vec<HistoryPoint>,
    pub params: ModelParams,
    pub bc: BoundarySpec,
    pub steps: usize,
    pub min_dt: f64,
}

impl EvolutionResult {
    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid
    }

    /// Serializable summary: outcome, sup-norm history and configuration.
    pub fn summary(&self, options: &EvolveOptions) -> RunSummary {
        RunSummary {
            outcome: self.outcome,
            t_b: self.outcome.blowup_time(),
            sup_norm_history: self.history.clone(),
            params: self.params,
            bc: self.bc,
            grid: self.grid(),
            options: options.clone(),
            steps: self.steps,
        }
    }
}

/// Run description written as JSON next to the snapshot CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_b: Option<f64>,
    pub sup_norm_history: Vec<HistoryPoint>,
    pub params: ModelParams,
    pub bc: BoundarySpec,
    pub grid: Grid,
    pub options: EvolveOptions,
    pub steps: usize,
}

fn face_flux(a: f64, b: f64, h: f64) -> f64 {
    let speed = 0.5 * (a + b);
    if speed.abs() * h <= 2.0 {
        0.25 * (a * a + b * b)
    } else if speed > 0.0 {
        0.5 * a * a
    } else {
        0.5 * b * b
    }
}

struct Operator<'a> {
    grid: Grid,
    nodes: Vec<f64>,
    bc: &'a BoundarySpec,
    m: &'a ModelParams,
    source: Option<&'a SourceTerm>,
}

impl<'a> Operator<'a> {
    fn reaction(&self, u: f64) -> f64 {
        signed_power(u, self.m.p()) - self.m.lambda() * u
    }

    fn source(&self, x: f64, t: f64) -> f64 {
        self.source.map_or(0.0, |s| s(x, t))
    }

    fn apply(&self, u: &[f64], t: f64, out: &mut [f64]) {
        let n = u.len();
        let h = self.grid.spacing();
        let h2 = h * h;
        let faces: Vec<f64> = u.windows(2).map(|w| face_flux(w[0], w[1], h)).collect();
        for i in 1..n - 1 {
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2 - (faces[i] - faces[i - 1]) / h
                + self.reaction(u[i])
                + self.source(self.nodes[i], t);
        }
        out[0] = match self.bc.left.cell_law() {
            None => 0.0,
            Some((sigma, c2, c1)) => {
                let b = u[0];
                ((u[1] - b) / h + (c2 * b * b + c1 * b) - (faces[0] - 0.5 * b * b)
                    + 0.5 * h * (self.reaction(b) + self.source(self.nodes[0], t)))
                    / (0.5 * h + sigma)
            }
        };
        out[n - 1] = match self.bc.right.cell_law() {
            None => 0.0,
            Some((sigma, c2, c1)) => {
                let b = u[n - 1];
                ((u[n - 2] - b) / h + (c2 * b * b + c1 * b) - (0.5 * b * b - faces[n - 2])
                    + 0.5 * h * (self.reaction(b) + self.source(self.nodes[n - 1], t)))
                    / (0.5 * h + sigma)
            }
        };
    }

    /// Largest stable step for the current state.
    fn step_limit(&self, u: &[f64], cfl: f64) -> f64 {
        let h = self.grid.spacing();
        let sup = sup_norm(u);
        let mut dt = cfl * h * h;
        if sup > 0.0 {
            dt = dt.min(cfl * h / sup);
        }
        let stiffness = self.m.p() * sup.powf(self.m.p() - 1.0) + self.m.lambda().abs();
        if stiffness > 0.0 {
            dt = dt.min(cfl / stiffness);
        }
        for end in [self.bc.left, self.bc.right] {
            if let Some((sigma, c2, c1)) = end.cell_law() {
                let rate = c1.abs() + 2.0 * c2.abs() * sup;
                if rate > 0.0 {
                    dt = dt.min(cfl * (0.5 * h + sigma) / rate);
                }
            }
        }
        dt
    }

    fn pin(&self, u: &mut [f64]) {
        let n = u.len();
        if self.bc.left.cell_law().is_none() {
            u[0] = 0.0;
        }
        if self.bc.right.cell_law().is_none() {
            u[n - 1] = 0.0;
        }
    }
}

/// Nodal time derivatives of a field without forcing.
pub fn assemble_rhs(f: &Field, bc: &BoundarySpec, m: &ModelParams) -> Result<Vec<f64>> {
    assemble_rhs_with_source(f, bc, m, None)
}

/// Nodal time derivatives with an optional forcing term evaluated at `f.time`.
pub fn assemble_rhs_with_source(
    f: &Field,
    bc: &BoundarySpec,
    m: &ModelParams,
    source: Option<&SourceTerm>,
) -> Result<Vec<f64>> {
    bc.validate()?;
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("field contains non-finite values".into()));
    }
    let op = Operator {
        grid: f.grid,
        nodes: f.grid.nodes(),
        bc,
        m,
        source,
    };
    let mut out = vec![0.0; f.values.len()];
    op.apply(&f.values, f.time, &mut out);
    Ok(out)
}

/// One Heun step; returns the new state.
fn heun(op: &Operator, u: &[f64], k1: &[f64], t: f64, dt: f64, scratch: &mut Vec<f64>) -> Vec<f64> {
    let n = u.len();
    let pred: Vec<f64> = (0..n).map(|i| u[i] + dt * k1[i]).collect();
    scratch.resize(n, 0.0);
    op.apply(&pred, t + dt, scratch);
    let mut next: Vec<f64> = (0..n).map(|i| u[i] + 0.5 * dt * (k1[i] + scratch[i])).collect();
    op.pin(&mut next);
    next
}

/// Integrates from `initial` until the final time, a cap crossing or a
/// steady state, whichever comes first.
///
/// Dirichlet ends are set to zero in the initial data.
pub fn evolve(initial: &Field, bc: &BoundarySpec, m: &ModelParams, opts: &EvolveOptions) -> Result<EvolutionResult> {
    bc.validate()?;
    opts.validate(&initial.grid)?;
    let grid = initial.grid;
    let op = Operator {
        grid,
        nodes: grid.nodes(),
        bc,
        m,
        source: opts.source.as_ref(),
    };
    let mut u = initial.values.clone();
    op.pin(&mut u);
    let t0 = initial.time;
    let t_end = t0 + opts.final_time;
    let snapshot_at = |k: usize| (t0 + k as f64 * opts.snapshot_interval).min(t_end);

    let mut t = t0;
    let mut snapshots = vec![Field {
        grid,
        values: u.clone(),
        time: t,
        blown_up: false,
    }];
    let mut history = vec![point(&snapshots[0])];
    let mut next_snap = 1usize;
    let mut quiet = 0usize;
    let mut steps = 0usize;
    let mut min_dt = f64::INFINITY;
    let mut k1 = vec![0.0; u.len()];
    let mut scratch = Vec::new();
    let checkpoint_level = opts.blowup_cap.sqrt();
    let mut checkpoint = (t, u.clone());

    let outcome = loop {
        op.apply(&u, t, &mut k1);
        if k1.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite time derivative at t = {t}")));
        }
        if sup_norm(&k1) < opts.steady_tolerance {
            quiet += 1;
            if quiet >= opts.steady_steps {
                break Outcome::SteadyState {
                    time: t,
                    tolerance: opts.steady_tolerance,
                };
            }
        } else {
            quiet = 0;
        }
        if t >= t_end {
            break Outcome::ReachedFinalTime;
        }
        if steps >= opts.max_steps {
            return Err(Error::Numerical(format!(
                "step budget {} exhausted at t = {t}",
                opts.max_steps
            )));
        }
        let target = snapshot_at(next_snap);
        let mut dt = opts.fixed_dt.unwrap_or_else(|| op.step_limit(&u, opts.cfl));
        let lands = t + dt >= target;
        if lands {
            dt = target - t;
        }
        if !(dt > 0.0) {
            return Err(Error::Numerical(format!("time step underflow at t = {t}")));
        }
        let next = heun(&op, &u, &k1, t, dt, &mut scratch);
        steps += 1;
        min_dt = min_dt.min(dt);
        t = if lands { target } else { t + dt };
        let sup = sup_norm(&next);
        if sup > opts.blowup_cap || (sup.is_nan() && sup_norm(&u) > checkpoint_level) {
            let t_b_refined = if opts.refine_blowup && opts.fixed_dt.is_none() {
                refine_crossing(&op, &checkpoint.1, checkpoint.0, t_end, opts)
            } else {
                None
            };
            let crossing = Field {
                grid,
                values: next,
                time: t,
                blown_up: true,
            };
            history.push(point(&crossing));
            snapshots.push(crossing);
            break Outcome::BlowupDetected { t_b: t, t_b_refined };
        }
        if !sup.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite values at t = {t} below the blow-up cap"
            )));
        }
        u = next;
        if sup <= checkpoint_level {
            checkpoint = (t, u.clone());
        }
        if lands {
            let f = Field {
                grid,
                values: u.clone(),
                time: t,
                blown_up: false,
            };
            history.push(point(&f));
            snapshots.push(f);
            next_snap += 1;
        }
    };
    if let Outcome::SteadyState { .. } = outcome {
        if snapshots.last().map_or(true, |s| s.time < t) {
            let f = Field {
                grid,
                values: u.clone(),
                time: t,
                blown_up: false,
            };
            history.push(point(&f));
            snapshots.push(f);
        }
    }
    Ok(EvolutionResult {
        outcome,
        snapshots,
        history,
        params: *m,
        bc: *bc,
        steps,
        min_dt: if min_dt.is_finite() { min_dt } else { 0.0 },
    })
}

fn point(f: &Field) -> HistoryPoint {
    HistoryPoint {
        t: f.time,
        sup: f.sup_norm(),
        mass: f.mass(),
    }
}

/// Reruns from the checkpoint with a quarter of the step limit and returns
/// the first time the cap is exceeded.
fn refine_crossing(op: &Operator, start: &[f64], t_start: f64, t_end: f64, opts: &EvolveOptions) -> Option<f64> {
    let mut u = start.to_vec();
    let mut t = t_start;
    let mut k1 = vec![0.0; u.len()];
    let mut scratch = Vec::new();
    for _ in 0..opts.max_steps {
        op.apply(&u, t, &mut k1);
        let dt = 0.25 * op.step_limit(&u, opts.cfl);
        u = heun(op, &u, &k1, t, dt, &mut scratch);
        t += dt;
        let sup = sup_norm(&u);
        if sup > opts.blowup_cap || sup.is_nan() {
            return Some(t);
        }
        if t > t_end + (t_end - t_start) {
            return None;
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

/// Outcome of a pointwise ordering check between two evolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// Largest `max(lower - upper, 0)` over the compared snapshots.
    pub violation: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub worst_time: f64,
    pub worst_x: f64,
    pub snapshots_compared: usize,
}

/// Default allowance: `1e-7` plus `h^2` times the largest value seen.
pub fn default_comparison_tolerance(grid: &Grid, scale: f64) -> f64 {
    let h = grid.spacing();
    1e-7 + h * h * scale.abs()
}

/// Field of a run at time `t`: an exact snapshot, or the final field of a
/// run that settled into a steady state before `t`.
fn field_at(r: &EvolutionResult, t: f64) -> Option<&Field> {
    let close = |a: f64| (a - t).abs() <= 1e-12 * (1.0 + t.abs());
    if let Some(f) = r.snapshots.iter().find(|f| close(f.time)) {
        return Some(f);
    }
    match r.outcome {
        Outcome::SteadyState { time, .. } if t >= time => r.snapshots.last(),
        _ => None,
    }
}

/// Checks `lower <= upper` at every snapshot time of `lower` covered by
/// `upper`. A run that reached a steady state counts as constant afterwards.
pub fn compare_fields(
    lower: &EvolutionResult,
    upper: &EvolutionResult,
    tolerance: Option<f64>,
) -> Result<OrderingReport> {
    if lower.grid() != upper.grid() {
        return Err(Error::Contract("evolutions live on different grids".into()));
    }
    let mut report = OrderingReport {
        violation: 0.0,
        tolerance: 0.0,
        holds: true,
        worst_time: lower.snapshots[0].time,
        worst_x: lower.grid().left(),
        snapshots_compared: 0,
    };
    let upper_end = upper.final_field().time;
    let mut scale: f64 = 0.0;
    let times: Vec<f64> = lower.snapshots.iter().map(|f| f.time).collect();
    for t in times {
        let Some(a) = field_at(lower, t) else { continue };
        let b = match field_at(upper, t) {
            Some(b) => b,
            None if t > upper_end => break,
            None if matches!(lower.outcome, Outcome::SteadyState { time, .. } if time == t) => continue,
            None => {
                return Err(Error::Contract(format!(
                    "no snapshot at t = {t} in the upper evolution"
                )))
            }
        };
        if a.blown_up || b.blown_up {
            break;
        }
        scale = scale.max(a.sup_norm()).max(b.sup_norm());
        track(&mut report, a, |i| b.values[i]);
    }
    report.tolerance = tolerance.unwrap_or_else(|| default_comparison_tolerance(&lower.grid(), scale));
    report.holds = report.violation <= report.tolerance;
    Ok(report)
}

/// Checks `lower <= upper(x, t)` at every snapshot of `lower`.
pub fn compare_to_function(
    lower: &EvolutionResult,
    upper: impl Fn(f64, f64) -> f64,
    tolerance: Option<f64>,
) -> OrderingReport {
    let nodes = lower.grid().nodes();
    let mut report = OrderingReport {
        violation: 0.0,
        tolerance: 0.0,
        holds: true,
        worst_time: lower.snapshots[0].time,
        worst_x: lower.grid().left(),
        snapshots_compared: 0,
    };
    let mut scale: f64 = 0.0;
    for a in lower.snapshots.iter().take_while(|s| !s.blown_up) {
        scale = scale.max(a.sup_norm());
        track(&mut report, a, |i| upper(nodes[i], a.time));
    }
    report.tolerance = tolerance.unwrap_or_else(|| default_comparison_tolerance(&lower.grid(), scale));
    report.holds = report.violation <= report.tolerance;
    report
}

fn track(report: &mut OrderingReport, a: &Field, upper: impl Fn(usize) -> f64) {
    let nodes = a.grid.nodes();
    for (i, &lo) in a.values.iter().enumerate() {
        let gap = lo - upper(i);
        if gap > report.violation {
            report.violation = gap;
            report.worst_time = a.time;
            report.worst_x = nodes[i];
        }
    }
    report.snapshots_compared += 1;
}

/// Checks that `phi(L) e^{-L} < 1e-12` at the far end of a truncated
/// half-line, with `L` the distance from the finite end.
pub fn check_growth_condition(initial: &Field, far_end_right: bool) -> Result<()> {
    let g = initial.grid;
    let (value, length) = if far_end_right {
        (initial.values[initial.values.len() - 1], g.right() - g.left())
    } else {
        (initial.values[0], g.right() - g.left())
    };
    let tail = value.abs() * (-length).exp();
    if tail < 1e-12 {
        Ok(())
    } else {
        Err(Error::Truncation(format!(
            "initial data at the truncation point gives phi(L) e^-L = {tail:.3e}; increase L"
        )))
    }
}

// ---------------------------------------------------------------------------
// Snapshot files
// ---------------------------------------------------------------------------

/// Writes snapshots as CSV with columns `t,x,u`.
pub fn write_snapshots_csv<W: Write>(snapshots: &[Field], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "x", "u"])?;
    for f in snapshots {
        for (x, u) in f.grid.nodes().into_iter().zip(&f.values) {
            w.write_record([f.time.to_string(), x.to_string(), u.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads snapshots written by [`write_snapshots_csv`].
pub fn read_snapshots_csv<R: Read>(reader: R) -> Result<Vec<Field>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut groups: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
    for record in r.deserialize() {
        let (t, x, u): (f64, f64, f64) = record?;
        match groups.last_mut() {
            Some(g) if g.0 == t => {
                g.1.push(x);
                g.2.push(u);
            }
            _ => groups.push((t, vec![x], vec![u])),
        }
    }
    groups
        .into_iter()
        .map(|(t, xs, us)| {
            let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len() - 1)?;
            let values_finite = us.iter().all(|v| v.is_finite());
            Ok(Field {
                grid,
                values: us,
                time: t,
                blown_up: !values_finite,
            })
        })
        .collect()
}
