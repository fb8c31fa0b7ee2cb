//! Stationary profiles built by shooting in the phase plane.
//!
//! A stationary solution on `[-alpha, alpha]` is an arc of an orbit of the
//! stationary system between two boundary events: a Dirichlet end sits on the
//! v-axis (`u = 0`), a Neumann end on the u-axis (`u' = 0`). The arc length in
//! the orbit parameter is `2 alpha`, so the interval length is an output.
//!
//! Shooting seeds come in three families, each scanned geometrically:
//!
//! * v-axis seeds `(0, v0)` for Dirichlet and mixed type 1 (zero value on the
//!   left, zero slope on the right);
//! * inner u-axis seeds `(u0, 0)` with `0 < u0 < lambda^(1/(p-1))` for positive
//!   Neumann solutions;
//! * outer u-axis seeds `(u2, 0)` for mixed type 2 (zero slope on the left,
//!   zero value on the right) and sign-changing Neumann solutions.
//!
//! Negative solutions are obtained from positive ones through the reflection
//! `u(x) -> -u(-x)`, which maps the equation to itself and swaps the two mixed
//! boundary conditions.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    bounded_lneg_margin, certify_unbounded_axis_start, certify_unbounded_u_axis_start, u_axis_start_data, Verdict,
};
use crate::error::{ensure_finite, Error, Result};
use crate::flow::{
    integrate, Crossing, Direction, EventKind, EventSpec, EventSurface, IntegrationOptions, Terminal, Trajectory,
};
use crate::model::{signed_power, ModelParams, PhasePoint};

/// Boundary-condition family of a stationary profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    /// `u(-alpha) = 0`, `u'(alpha) = 0`.
    Mixed1,
    /// `u'(-alpha) = 0`, `u(alpha) = 0`.
    Mixed2,
    Periodic,
    /// On `(-inf, 0]` with `u'(-inf) = u'(0) = 0`.
    HalflineNeumann,
    /// On `(-inf, 0]` with `u'(-inf) = 0`, `u(0) = 0`.
    HalflineMixed2,
    /// On the whole line with `u'(+-inf) = 0`.
    FulllineNeumann,
    /// On `[0, inf)` with `u(0) = 0`, `u'(inf) = 0`.
    HalflineMixed1,
    /// Grows without bound at one end.
    BlowupProfile,
}

impl BcKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
            Self::Mixed1 => "mixed1",
            Self::Mixed2 => "mixed2",
            Self::Periodic => "periodic",
            Self::HalflineNeumann => "halfline-neumann",
            Self::HalflineMixed2 => "halfline-mixed2",
            Self::FulllineNeumann => "fullline-neumann",
            Self::HalflineMixed1 => "halfline-mixed1",
            Self::BlowupProfile => "blowup-profile",
        }
    }

    /// The condition obtained after the reflection `x -> -x`.
    fn reflected(self) -> Self {
        match self {
            Self::Mixed1 => Self::Mixed2,
            Self::Mixed2 => Self::Mixed1,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignKind {
    Positive,
    Negative,
    SignChanging,
}

/// One point of a profile: position, value and slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub x: f64,
    pub u: f64,
    pub du: f64,
}

/// How the residual of a profile is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualKind {
    Absolute,
    /// Divided by `1 + |u''| + |u u'| + |u|^p + |lambda u|`; used for
    /// profiles that grow to the escape cap.
    Relative,
}

/// Expected behaviour of the interval length of an unbounded profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaOutlook {
    FiniteExpected,
    PossiblyInfinite,
}

/// A named scalar recorded during the construction (event values, seeds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub value: f64,
}

/// A sampled stationary profile with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub params: ModelParams,
    pub bc: BcKind,
    pub sign: SignKind,
    pub profile: Vec<ProfileSample>,
    /// Half the interval length; for half-line kinds, the truncation length.
    pub half_width: f64,
    pub residual: f64,
    pub residual_kind: ResidualKind,
    pub period: Option<f64>,
    pub alpha_outlook: Option<AlphaOutlook>,
    pub markers: Vec<Marker>,
}

impl StationarySolution {
    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers.iter().find(|m| m.name == name).map(|m| m.value)
    }

    /// Largest `|u|` over the profile.
    pub fn amplitude(&self) -> f64 {
        self.profile.iter().map(|s| s.u.abs()).fold(0.0, f64::max)
    }

    /// Linear interpolation of `u` at `x`, `None` outside the profile.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let first = self.profile.first()?;
        let last = self.profile.last()?;
        if x < first.x || x > last.x {
            return None;
        }
        let i = self.profile.partition_point(|s| s.x < x);
        if i == 0 {
            return Some(first.u);
        }
        let (a, b) = (self.profile[i - 1], self.profile[i]);
        if b.x == a.x {
            return Some(b.u);
        }
        Some(a.u + (b.u - a.u) * (x - a.x) / (b.x - a.x))
    }

    pub fn metadata(&self) -> ProfileMetadata {
        ProfileMetadata {
            bc: self.bc,
            alpha: self.half_width,
            sign: self.sign,
            residual: self.residual,
            residual_kind: self.residual_kind,
            period: self.period,
            alpha_outlook: self.alpha_outlook,
            p: self.params.p(),
            lambda: self.params.lambda(),
            markers: self.markers.clone(),
        }
    }
}

/// JSON sidecar written next to a profile CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub bc: BcKind,
    pub alpha: f64,
    pub sign: SignKind,
    pub residual: f64,
    pub residual_kind: ResidualKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_outlook: Option<AlphaOutlook>,
    pub p: f64,
    pub lambda: f64,
    pub markers: Vec<Marker>,
}

/// Writes a profile as CSV with columns `x,u,du`.
pub fn write_profile_csv<W: Write>(profile: &[ProfileSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "u", "du"])?;
    for s in profile {
        w.write_record([s.x.to_string(), s.u.to_string(), s.du.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a profile CSV written by [`write_profile_csv`].
pub fn read_profile_csv<R: Read>(reader: R) -> Result<Vec<ProfileSample>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in r.deserialize() {
        let (x, u, du): (f64, f64, f64) = record?;
        out.push(ProfileSample { x, u, du });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Existence bookkeeping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Claim {
    Exists,
    NotExists,
    Unknown,
}

/// What the implemented existence results say about a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExistenceClaim {
    pub claim: Claim,
    pub reason: &'static str,
}

impl ExistenceClaim {
    fn exists(reason: &'static str) -> Self {
        Self {
            claim: Claim::Exists,
            reason,
        }
    }

    fn unknown(reason: &'static str) -> Self {
        Self {
            claim: Claim::Unknown,
            reason,
        }
    }
}

const NO_RESULT: &str = "no existence result covers these parameters";

/// Existence status of a bounded-interval stationary solution.
pub fn existence_claim(bc: BcKind, sign: SignKind, m: &ModelParams) -> ExistenceClaim {
    if m.p() <= 1.0 {
        return ExistenceClaim::unknown("the existence results assume p > 1");
    }
    let (p, lambda) = (m.p(), m.lambda());
    let vortex = m.discriminant().is_some_and(|d| d < 0.0);
    match sign {
        SignKind::Negative => {
            // Reflection u(x) -> -u(-x) maps positive solutions to negative ones.
            let mut claim = existence_claim(bc.reflected(), SignKind::Positive, m);
            if claim.claim == Claim::Exists {
                claim.reason = "reflection of a positive solution with the mirrored boundary condition";
            }
            claim
        }
        SignKind::Positive => match (bc, lambda > 0.0) {
            (BcKind::Dirichlet | BcKind::Mixed1, true) if p >= 3.0 => ExistenceClaim::exists(
                "unique positive solution for p >= 3 and lambda > 0",
            ),
            (BcKind::Neumann, true) if p >= 3.0 || vortex => ExistenceClaim::exists(
                "positive Neumann solution around the spiral equilibrium",
            ),
            (BcKind::Mixed2, true) => {
                ExistenceClaim::exists("positive mixed solution for every p > 1 and lambda > 0")
            }
            (BcKind::Dirichlet | BcKind::Mixed1 | BcKind::Mixed2, false) => {
                ExistenceClaim::exists("positive solution in the center regime lambda <= 0")
            }
            (BcKind::Neumann, false) => ExistenceClaim {
                claim: Claim::NotExists,
                reason: "no positive Neumann solution exists for lambda <= 0: an orbit leaving the u-axis must enter u < 0 before returning to it",
            },
            _ => ExistenceClaim::unknown(NO_RESULT),
        },
        SignKind::SignChanging => match bc {
            BcKind::Neumann => {
                ExistenceClaim::exists("sign-changing Neumann solution through the v-axis")
            }
            BcKind::Mixed1 if lambda > 0.0 => ExistenceClaim::exists(
                "non-positive mixed solution between the v-axis and the u-axis",
            ),
            BcKind::Periodic if (p >= 3.0 && lambda > 0.0) || lambda <= 0.0 => {
                ExistenceClaim::exists("periodic sign-changing solution from a closed orbit")
            }
            _ => ExistenceClaim::unknown(NO_RESULT),
        },
    }
}

fn claim_error(claim: ExistenceClaim, bc: BcKind, sign: SignKind, m: &ModelParams) -> Error {
    let what = format!(
        "{} solution with {} conditions at p = {}, lambda = {}",
        match sign {
            SignKind::Positive => "positive",
            SignKind::Negative => "negative",
            SignKind::SignChanging => "sign-changing",
        },
        bc.label(),
        m.p(),
        m.lambda()
    );
    match claim.claim {
        Claim::NotExists => Error::Nonexistence(format!("{what}: {}", claim.reason)),
        _ => Error::Unknown(format!("{what}: {}", claim.reason)),
    }
}

// ---------------------------------------------------------------------------
// Shooting
// ---------------------------------------------------------------------------

/// What the shooting iteration aims for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum ShootingTarget {
    /// The first admissible seed found from the family's canonical start.
    Canonical,
    /// A given seed value.
    Seed(f64),
    /// The seed whose profile has the given maximum of `|u|`, found by a
    /// geometric scan followed by bisection.
    Amplitude(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingOptions {
    pub target: ShootingTarget,
    /// Centre of the geometric scan; `None` selects the family default.
    pub scan_start: Option<f64>,
    pub scan_factor: f64,
    pub scan_count: usize,
    pub integration: IntegrationOptions,
    /// Residual the profile sampling is refined towards.
    pub residual_target: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            target: ShootingTarget::Canonical,
            scan_start: None,
            scan_factor: 1.5,
            scan_count: 64,
            integration: profile_integration(),
            residual_target: 1e-7,
        }
    }
}

/// Integration settings tight enough for finite-difference residual checks.
pub fn profile_integration() -> IntegrationOptions {
    IntegrationOptions {
        rtol: 1e-12,
        atol: 1e-13,
        max_step: 0.05,
        max_parameter: Some(500.0),
        max_steps: 2_000_000,
        ..IntegrationOptions::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SeedFamily {
    VAxis,
    UAxisInner,
    UAxisOuter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArcRule {
    /// From `(0, v0)` to the next v-axis crossing.
    Dirichlet,
    /// From `(0, v0)` to the first u-axis crossing.
    Mixed1,
    /// From `(u2, 0)` to the first v-axis crossing.
    Mixed2,
    /// From `(u0, 0)`, inside the equilibrium, to the first u-axis return.
    NeumannPositive,
    /// From `(u2, 0)` through the v-axis to `(-u2, 0)`.
    NeumannSignChanging,
}

impl ArcRule {
    fn family(self) -> SeedFamily {
        match self {
            Self::Dirichlet | Self::Mixed1 => SeedFamily::VAxis,
            Self::NeumannPositive => SeedFamily::UAxisInner,
            Self::Mixed2 | Self::NeumannSignChanging => SeedFamily::UAxisOuter,
        }
    }

    fn start(self, seed: f64) -> PhasePoint {
        match self.family() {
            SeedFamily::VAxis => PhasePoint::new(0.0, seed),
            _ => PhasePoint::new(seed, 0.0),
        }
    }

    fn events(self) -> Vec<EventSpec> {
        match self {
            Self::Dirichlet => vec![
                EventSpec::record(EventSurface::UAxis, Crossing::Any),
                EventSpec::stop(EventSurface::VAxis, Crossing::Any),
            ],
            Self::Mixed1 => vec![
                EventSpec::stop(EventSurface::UAxis, Crossing::Any),
                EventSpec::stop(EventSurface::VAxis, Crossing::Any),
            ],
            Self::Mixed2 => vec![
                EventSpec::record(EventSurface::UAxis, Crossing::Any),
                EventSpec::stop(EventSurface::VAxis, Crossing::Any),
            ],
            Self::NeumannPositive | Self::NeumannSignChanging => vec![
                EventSpec::stop(EventSurface::UAxis, Crossing::Any),
                EventSpec::record(EventSurface::VAxis, Crossing::Any),
            ],
        }
    }

    /// Parameter value of the closing event when the orbit forms a valid arc.
    fn accept(self, t: &Trajectory) -> Option<f64> {
        if t.terminal != Terminal::EventStop {
            return None;
        }
        let end = *t.events.last()?;
        let crossed_ordinate = t.first_event(EventKind::VAxis);
        match self {
            Self::Dirichlet | Self::Mixed2 => (end.kind == EventKind::VAxis && end.point.v < 0.0).then_some(end.s),
            Self::Mixed1 => (end.kind == EventKind::UAxis && end.point.u > 0.0).then_some(end.s),
            Self::NeumannPositive => {
                (end.kind == EventKind::UAxis && end.point.u > 0.0 && crossed_ordinate.is_none()).then_some(end.s)
            }
            Self::NeumannSignChanging => {
                (end.kind == EventKind::UAxis && end.point.u < 0.0 && crossed_ordinate.is_some()).then_some(end.s)
            }
        }
    }

    fn bc(self) -> BcKind {
        match self {
            Self::Dirichlet => BcKind::Dirichlet,
            Self::Mixed1 => BcKind::Mixed1,
            Self::Mixed2 => BcKind::Mixed2,
            Self::NeumannPositive | Self::NeumannSignChanging => BcKind::Neumann,
        }
    }

    fn sign(self) -> SignKind {
        match self {
            Self::NeumannSignChanging => SignKind::SignChanging,
            _ => SignKind::Positive,
        }
    }
}

struct Shot {
    seed: f64,
    trajectory: Trajectory,
    end: f64,
    amplitude: f64,
}

fn shoot(rule: ArcRule, seed: f64, m: &ModelParams, opts: &IntegrationOptions) -> Option<Shot> {
    if !seed.is_finite() || seed <= 0.0 {
        return None;
    }
    let t = integrate(rule.start(seed), m, &opts.clone().with_events(rule.events())).ok()?;
    let end = rule.accept(&t)?;
    let amplitude = t
        .samples
        .iter()
        .map(|s| s.point)
        .chain(t.events.iter().map(|e| e.point))
        .map(|p| p.u.abs())
        .fold(0.0, f64::max);
    Some(Shot {
        seed,
        trajectory: t,
        end,
        amplitude,
    })
}

/// Maps a scan index offset `k` (centered on zero) to a seed value.
struct SeedScale {
    family: SeedFamily,
    root: Option<f64>,
    lambda: f64,
    start: f64,
    factor: f64,
}

impl SeedScale {
    fn seed(&self, k: f64) -> f64 {
        let g = self.factor.powf(k);
        match (self.family, self.root) {
            (SeedFamily::UAxisInner, Some(r)) => {
                let odds = self.start / (r - self.start) * g;
                r * odds / (1.0 + odds)
            }
            (SeedFamily::UAxisOuter, Some(r)) if self.lambda > 0.0 => r + (self.start - r) * g,
            _ => self.start * g,
        }
    }

    fn describe(&self, count: usize) -> String {
        let half = (count / 2) as f64;
        format!(
            "[{:.6e}, {:.6e}]",
            self.seed(-half),
            self.seed(count as f64 - 1.0 - half)
        )
    }
}

fn default_start(family: SeedFamily, m: &ModelParams) -> f64 {
    let (p, lambda) = (m.p(), m.lambda());
    match family {
        SeedFamily::VAxis => {
            if lambda > 0.0 {
                1.0
            } else if p < 3.0 {
                0.5 * (-lambda + bounded_lneg_margin(p).min(1.0))
            } else {
                -lambda + 0.5
            }
        }
        SeedFamily::UAxisInner => 0.5 * m.equilibrium_abscissa().unwrap_or(1.0),
        SeedFamily::UAxisOuter => m.equilibrium_abscissa().map_or(1.0, |r| 1.25 * r),
    }
}

fn family_scale(rule: ArcRule, m: &ModelParams, opts: &ShootingOptions) -> Result<SeedScale> {
    let family = rule.family();
    let root = m.equilibrium_abscissa();
    let start = opts.scan_start.unwrap_or_else(|| default_start(family, m));
    ensure_finite("scan_start", start)?;
    let valid = match (family, root) {
        (SeedFamily::UAxisInner, Some(r)) => start > 0.0 && start < r,
        (SeedFamily::UAxisOuter, Some(r)) if m.lambda() > 0.0 => start > r,
        _ => start > 0.0,
    };
    if !valid {
        return Err(Error::Config(format!(
            "scan start {start} lies outside the admissible seed range"
        )));
    }
    if !(opts.scan_factor > 1.0) || opts.scan_count < 2 {
        return Err(Error::Config(
            "scan factor must exceed 1 and at least two seeds are required".into(),
        ));
    }
    Ok(SeedScale {
        family,
        root,
        lambda: m.lambda(),
        start,
        factor: opts.scan_factor,
    })
}

fn find_shot(rule: ArcRule, m: &ModelParams, opts: &ShootingOptions) -> Result<Shot> {
    let io = &opts.integration;
    match opts.target {
        ShootingTarget::Seed(seed) => shoot(rule, seed, m, io)
            .ok_or_else(|| Error::Numerical(format!("seed {seed} does not produce an admissible arc"))),
        ShootingTarget::Canonical => {
            let scale = family_scale(rule, m, opts)?;
            let n = opts.scan_count as i64;
            // Start, then alternate outward: +1, -1, +2, -2, ...
            let order = std::iter::once(0).chain((1..=n).flat_map(|k| [k, -k]));
            for k in order.take(opts.scan_count) {
                if let Some(shot) = shoot(rule, scale.seed(k as f64), m, io) {
                    return Ok(shot);
                }
            }
            Err(Error::Numerical(format!(
                "no admissible seed among {} scanned seeds around {}",
                opts.scan_count, scale.start
            )))
        }
        ShootingTarget::Amplitude(target) => {
            ensure_finite("target amplitude", target)?;
            let scale = family_scale(rule, m, opts)?;
            let half = (opts.scan_count / 2) as f64;
            let seeds: Vec<f64> = (0..opts.scan_count).map(|k| scale.seed(k as f64 - half)).collect();
            let amplitudes: Vec<Option<f64>> = seeds
                .par_iter()
                .map(|&s| shoot(rule, s, m, io).map(|shot| shot.amplitude))
                .collect();
            let bracket = (0..seeds.len() - 1).find(|&k| match (amplitudes[k], amplitudes[k + 1]) {
                (Some(a), Some(b)) => (a - target) * (b - target) <= 0.0,
                _ => false,
            });
            let k = bracket.ok_or_else(|| {
                Error::Numerical(format!(
                    "amplitude {target} not bracketed by {} seeds in {}",
                    opts.scan_count,
                    scale.describe(opts.scan_count)
                ))
            })?;
            let (mut lo, mut hi) = (seeds[k], seeds[k + 1]);
            let mut f_lo = amplitudes[k].unwrap() - target;
            if f_lo == 0.0 {
                return shoot(rule, lo, m, io).ok_or_else(|| Error::Numerical("lost bracket".into()));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || (hi - lo) <= 1e-14 * hi.abs() {
                    break;
                }
                let shot = shoot(rule, mid, m, io)
                    .ok_or_else(|| Error::Numerical(format!("seed {mid} inside the bracket lost admissibility")))?;
                let f_mid = shot.amplitude - target;
                if f_mid == 0.0 {
                    return Ok(shot);
                }
                if (f_mid < 0.0) == (f_lo < 0.0) {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                }
            }
            let pick = if f_lo.abs() < 1e-300 { lo } else { 0.5 * (lo + hi) };
            shoot(rule, pick, m, io).ok_or_else(|| Error::Numerical("lost bracket".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// Profiles and residuals
// ---------------------------------------------------------------------------

/// Second-order first derivative on a nonuniform grid at interior index `i`.
fn central_derivative(x: &[f64], f: &[f64], i: usize) -> f64 {
    let h1 = x[i] - x[i - 1];
    let h2 = x[i + 1] - x[i];
    (h1 * h1 * f[i + 1] - h2 * h2 * f[i - 1] + (h2 * h2 - h1 * h1) * f[i]) / (h1 * h2 * (h1 + h2))
}

/// Largest interior residual of `u'' - u u' + u|u|^(p-1) - lambda u` with both
/// derivatives taken by central differences (`u'` from the values, `u''`
/// from the sampled slopes).
pub fn profile_residual(profile: &[ProfileSample], m: &ModelParams, kind: ResidualKind) -> f64 {
    if profile.len() < 3 {
        return 0.0;
    }
    let x: Vec<f64> = profile.iter().map(|s| s.x).collect();
    let u: Vec<f64> = profile.iter().map(|s| s.u).collect();
    let du: Vec<f64> = profile.iter().map(|s| s.du).collect();
    (1..profile.len() - 1)
        .filter(|&i| x[i + 1] > x[i] && x[i] > x[i - 1])
        .map(|i| {
            let d1 = central_derivative(&x, &u, i);
            let d2 = central_derivative(&x, &du, i);
            let reaction = signed_power(u[i], m.p());
            let r = d2 - u[i] * d1 + reaction - m.lambda() * u[i];
            match kind {
                ResidualKind::Absolute => r.abs(),
                ResidualKind::Relative => {
                    r.abs() / (1.0 + d2.abs() + (u[i] * d1).abs() + reaction.abs() + (m.lambda() * u[i]).abs())
                }
            }
        })
        .fold(0.0, f64::max)
}

/// Samples `[from, to]` of each trajectory piece, maps them to profile
/// coordinates and refines the sampling until the residual target is met.
fn sample_profile<F>(
    pieces: &[(&Trajectory, f64, f64, &F)],
    m: &ModelParams,
    kind: ResidualKind,
    target: f64,
) -> (Vec<ProfileSample>, f64)
where
    F: Fn(f64, PhasePoint) -> ProfileSample + ?Sized,
{
    let mut best: Option<(Vec<ProfileSample>, f64)> = None;
    for per_step in [4usize, 8, 16, 32, 64, 128, 256] {
        let mut samples: Vec<ProfileSample> = pieces
            .iter()
            .flat_map(|(t, from, to, map)| {
                t.refined_samples(per_step, *from, *to)
                    .into_iter()
                    .map(|s| map(s.s, s.point))
                    .collect::<Vec<_>>()
            })
            .collect();
        samples.sort_by(|a, b| a.x.total_cmp(&b.x));
        // Merge samples closer than roundoff (a step cut at an axis crossing
        // can leave a sliver segment), keeping the exact end samples.
        let (first, last) = (samples[0], samples[samples.len() - 1]);
        samples.dedup_by(|a, b| (a.x - b.x).abs() <= 1e-9 * (1.0 + a.x.abs()));
        samples[0] = first;
        let n = samples.len();
        samples[n - 1] = last;
        let residual = profile_residual(&samples, m, kind);
        let better = best.as_ref().map_or(true, |(_, r)| residual < *r);
        if better {
            best = Some((samples, residual));
        }
        if residual <= target {
            break;
        }
    }
    best.expect("at least one sampling pass")
}

fn classify_sign(profile: &[ProfileSample]) -> SignKind {
    let interior = &profile[1..profile.len().saturating_sub(1)];
    // Samples within roundoff of the axis (next to an end located on it)
    // carry no sign information.
    let amplitude = profile.iter().fold(0.0f64, |a, s| a.max(s.u.abs()));
    let on_axis = 1e-10 * amplitude;
    if interior.iter().all(|s| s.u > -on_axis) && interior.iter().any(|s| s.u > on_axis) {
        SignKind::Positive
    } else if interior.iter().all(|s| s.u < on_axis) && interior.iter().any(|s| s.u < -on_axis) {
        SignKind::Negative
    } else {
        SignKind::SignChanging
    }
}

fn reflect(mut sol: StationarySolution) -> StationarySolution {
    sol.profile = sol
        .profile
        .iter()
        .rev()
        .map(|s| ProfileSample {
            x: -s.x,
            u: -s.u,
            du: s.du,
        })
        .collect();
    sol.bc = sol.bc.reflected();
    sol.sign = match sol.sign {
        SignKind::Positive => SignKind::Negative,
        SignKind::Negative => SignKind::Positive,
        other => other,
    };
    sol
}

fn marker(name: &str, value: f64) -> Marker {
    Marker {
        name: name.to_string(),
        value,
    }
}

fn arc_solution(rule: ArcRule, shot: Shot, m: &ModelParams, opts: &ShootingOptions) -> Result<StationarySolution> {
    let mid = 0.5 * shot.end;
    let map = |s: f64, p: PhasePoint| ProfileSample {
        x: s - mid,
        u: p.u,
        du: p.v,
    };
    let (profile, residual) = sample_profile(
        &[(&shot.trajectory, 0.0, shot.end, &map)],
        m,
        ResidualKind::Absolute,
        opts.residual_target,
    );
    let sign = classify_sign(&profile);
    if sign != rule.sign() {
        return Err(Error::Numerical(format!(
            "profile sign {sign:?} differs from the requested {:?}",
            rule.sign()
        )));
    }
    let mut markers = vec![marker("seed", shot.seed), marker("amplitude", shot.amplitude)];
    let start = rule.start(shot.seed);
    markers.push(marker("start_u", start.u));
    markers.push(marker("start_v", start.v));
    for e in &shot.trajectory.events {
        if e.s <= shot.end {
            markers.push(marker(&format!("{}_u", e.kind.label()), e.point.u));
            markers.push(marker(&format!("{}_v", e.kind.label()), e.point.v));
        }
    }
    Ok(StationarySolution {
        params: *m,
        bc: rule.bc(),
        sign,
        profile,
        half_width: mid,
        residual,
        residual_kind: ResidualKind::Absolute,
        period: None,
        alpha_outlook: None,
        markers,
    })
}

/// Builds a stationary solution on a bounded interval by shooting.
///
/// Requests outside the implemented existence results fail with
/// [`Error::Nonexistence`] or [`Error::Unknown`]. A sign-changing mixed type 1
/// request for `lambda > 0` is served by the non-positive arc from the
/// v-axis to the negative u-axis and is reported as negative.
pub fn solve_bvp(bc: BcKind, m: &ModelParams, sign: SignKind, opts: &ShootingOptions) -> Result<StationarySolution> {
    let claim = existence_claim(bc, sign, m);
    if claim.claim != Claim::Exists {
        return Err(claim_error(claim, bc, sign, m));
    }
    match (bc, sign) {
        (BcKind::Periodic, _) => {
            let v0 = match opts.target {
                ShootingTarget::Seed(v0) => v0,
                _ => default_start(SeedFamily::VAxis, m),
            };
            find_periodic(m, v0, &opts.integration)
        }
        (BcKind::Mixed1, SignKind::SignChanging) => solve_bvp(BcKind::Mixed1, m, SignKind::Negative, opts),
        (_, SignKind::Negative) => {
            let positive = solve_bvp(bc.reflected(), m, SignKind::Positive, opts)?;
            Ok(reflect(positive))
        }
        (_, SignKind::SignChanging) => {
            let rule = ArcRule::NeumannSignChanging;
            let shot = find_shot(rule, m, opts)?;
            arc_solution(rule, shot, m, opts)
        }
        (_, SignKind::Positive) => {
            let rule = match bc {
                BcKind::Dirichlet => ArcRule::Dirichlet,
                BcKind::Neumann => ArcRule::NeumannPositive,
                BcKind::Mixed1 => ArcRule::Mixed1,
                BcKind::Mixed2 => ArcRule::Mixed2,
                other => {
                    return Err(Error::Contract(format!(
                        "{} is not a bounded-interval condition; use the dedicated constructor",
                        other.label()
                    )))
                }
            };
            let shot = find_shot(rule, m, opts)?;
            arc_solution(rule, shot, m, opts)
        }
    }
}

// ---------------------------------------------------------------------------
// Periodic orbits
// ---------------------------------------------------------------------------

/// Tolerance on the closure and symmetry of a periodic orbit.
pub const PERIODIC_TOL: f64 = 1e-7;

/// Closed orbit through `(0, v0)`, reported over one period.
pub fn find_periodic(m: &ModelParams, seed_v0: f64, opts: &IntegrationOptions) -> Result<StationarySolution> {
    ensure_finite("v0", seed_v0)?;
    m.require_superlinear("find_periodic")?;
    let (p, lambda) = (m.p(), m.lambda());
    if seed_v0 <= 0.0 {
        return Err(Error::Precondition(format!("v0 must be positive, got {seed_v0}")));
    }
    let admissible = if lambda > 0.0 {
        p >= 3.0
    } else {
        p >= 3.0 || seed_v0 <= -lambda + bounded_lneg_margin(p)
    };
    if !admissible {
        return Err(Error::Precondition(format!(
            "closed orbits through (0, {seed_v0}) are guaranteed only for p >= 3, lambda > 0 or within the bounded range for lambda <= 0"
        )));
    }
    let events = vec![
        EventSpec::record(EventSurface::UAxis, Crossing::Any),
        EventSpec::record(EventSurface::VAxis, Crossing::Falling),
        EventSpec::stop(EventSurface::VAxis, Crossing::Rising),
    ];
    let mut io = opts.clone().with_events(events);
    if io.max_parameter.is_none() {
        io.max_parameter = Some(1e4);
    }
    let t = integrate(PhasePoint::new(0.0, seed_v0), m, &io)?;
    if t.terminal != Terminal::EventStop {
        return Err(Error::Numerical(format!(
            "orbit from (0, {seed_v0}) did not return to the v-axis (ended with {:?})",
            t.terminal
        )));
    }
    let period = t.last().s;
    let end = t.last().point;
    let closure = end.distance(PhasePoint::new(0.0, seed_v0));
    let v3 = t
        .events
        .iter()
        .find(|e| e.kind == EventKind::VAxis && e.crossing == Crossing::Falling)
        .map(|e| e.point.v)
        .ok_or_else(|| Error::Numerical("orbit never crossed the lower v-axis".into()))?;
    let u_max = t.samples.iter().map(|s| s.point.u).fold(f64::NEG_INFINITY, f64::max);
    let u_min = t.samples.iter().map(|s| s.point.u).fold(f64::INFINITY, f64::min);
    let crossings: Vec<f64> = t.events_of(EventKind::UAxis).map(|e| e.point.u).collect();
    let right = crossings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let left = crossings.iter().cloned().fold(f64::INFINITY, f64::min);
    let asymmetry = (right + left).abs();
    if closure > PERIODIC_TOL {
        return Err(Error::Numerical(format!(
            "orbit closure error {closure:.3e} exceeds {PERIODIC_TOL:e}"
        )));
    }
    if asymmetry > PERIODIC_TOL {
        return Err(Error::Numerical(format!(
            "u-extremes {right} and {left} are not symmetric (gap {asymmetry:.3e})"
        )));
    }
    let mid = 0.5 * period;
    let map = |s: f64, p: PhasePoint| ProfileSample {
        x: s - mid,
        u: p.u,
        du: p.v,
    };
    let (profile, residual) = sample_profile(&[(&t, 0.0, period, &map)], m, ResidualKind::Absolute, 1e-7);
    Ok(StationarySolution {
        params: *m,
        bc: BcKind::Periodic,
        sign: SignKind::SignChanging,
        profile,
        half_width: mid,
        residual,
        residual_kind: ResidualKind::Absolute,
        period: Some(period),
        alpha_outlook: None,
        markers: vec![
            marker("v0", seed_v0),
            marker("v3", v3),
            marker("u_max", u_max.max(right)),
            marker("u_min", u_min.min(left)),
            marker("u_axis_right", right),
            marker("u_axis_left", left),
            marker("closure_error", closure),
        ],
    })
}

// ---------------------------------------------------------------------------
// Half-line solutions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalflineKind {
    HalflineNeumann,
    HalflineMixed2,
    FulllineNeumann,
    HalflineMixed1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HalflineOptions {
    /// Value at the Neumann end, as a multiple of `lambda^(1/(p-1))`.
    pub peak_ratio: f64,
    /// Backward integration stops within this distance of the equilibrium.
    pub approach_tolerance: f64,
    pub integration: IntegrationOptions,
}

impl Default for HalflineOptions {
    fn default() -> Self {
        Self {
            peak_ratio: 1.25,
            approach_tolerance: 1e-8,
            integration: IntegrationOptions {
                max_parameter: Some(1e4),
                ..profile_integration()
            },
        }
    }
}

/// Solutions on half-lines and on the whole line that tend to the
/// equilibrium `lambda^(1/(p-1))` at infinity.
///
/// The orbit through `(mu0, 0)` with `mu0 = peak_ratio * lambda^(1/(p-1))` is
/// integrated backward until it is within `approach_tolerance` of the
/// equilibrium; the parameter elapsed is the truncation length. The mixed and
/// whole-line kinds continue the orbit forward to the v-axis and use the
/// reflections `w(t) = v(t)` for `t <= 0`, `w(t) = -v(-t)` for `t > 0`, and
/// `z(t) = -v(-t)`.
pub fn find_halfline(m: &ModelParams, kind: HalflineKind, opts: &HalflineOptions) -> Result<StationarySolution> {
    m.require_superlinear("find_halfline")?;
    let root = m.equilibrium_abscissa().ok_or_else(|| {
        Error::Precondition(format!(
            "half-line solutions need lambda > 0 (got lambda = {})",
            m.lambda()
        ))
    })?;
    ensure_finite("peak_ratio", opts.peak_ratio)?;
    if opts.peak_ratio <= 1.0 {
        return Err(Error::Config("peak_ratio must exceed 1".into()));
    }
    let mu0 = opts.peak_ratio * root;
    let start = PhasePoint::new(mu0, 0.0);
    let target = PhasePoint::new(root, 0.0);
    let back_events = vec![EventSpec::stop(
        EventSurface::Proximity {
            center: target,
            radius: opts.approach_tolerance,
        },
        Crossing::Falling,
    )];
    let backward = integrate(
        start,
        m,
        &opts
            .integration
            .clone()
            .with_direction(Direction::Reverse)
            .with_events(back_events),
    )?;
    if backward.terminal != Terminal::EventStop {
        return Err(Error::Numerical(format!(
            "backward orbit from ({mu0}, 0) did not approach the equilibrium (ended with {:?})",
            backward.terminal
        )));
    }
    let truncation = backward.last().s;
    let mut markers = vec![
        marker("peak", mu0),
        marker("asymptote", root),
        marker("truncation_length", truncation),
        marker("approach_tolerance", opts.approach_tolerance),
    ];

    if kind == HalflineKind::HalflineNeumann {
        let map = |s: f64, p: PhasePoint| ProfileSample { x: -s, u: p.u, du: p.v };
        let (profile, residual) =
            sample_profile(&[(&backward, 0.0, truncation, &map)], m, ResidualKind::Absolute, 1e-7);
        return Ok(StationarySolution {
            params: *m,
            bc: BcKind::HalflineNeumann,
            sign: classify_sign(&profile),
            profile,
            half_width: truncation,
            residual,
            residual_kind: ResidualKind::Absolute,
            period: None,
            alpha_outlook: None,
            markers,
        });
    }

    let fwd_events = vec![
        EventSpec::record(EventSurface::UAxis, Crossing::Any),
        EventSpec::stop(EventSurface::VAxis, Crossing::Any),
    ];
    let forward = integrate(start, m, &opts.integration.clone().with_events(fwd_events))?;
    let reach = forward.last();
    if forward.terminal != Terminal::EventStop || reach.point.v >= 0.0 {
        return Err(Error::Numerical(format!(
            "forward orbit from ({mu0}, 0) did not reach the lower v-axis (ended with {:?})",
            forward.terminal
        )));
    }
    let t1 = reach.s;
    markers.push(marker("ordinate_distance", t1));
    markers.push(marker("ordinate_slope", reach.point.v));
    let back_map = |s: f64, p: PhasePoint| ProfileSample {
        x: -s - t1,
        u: p.u,
        du: p.v,
    };
    let fwd_map = |s: f64, p: PhasePoint| ProfileSample {
        x: s - t1,
        u: p.u,
        du: p.v,
    };
    let back_piece = (
        &backward,
        0.0,
        truncation,
        &back_map as &dyn Fn(f64, PhasePoint) -> ProfileSample,
    );
    let fwd_piece = (&forward, 0.0, t1, &fwd_map as &dyn Fn(f64, PhasePoint) -> ProfileSample);
    let (mixed2, _) = sample_profile(&[back_piece, fwd_piece], m, ResidualKind::Absolute, 1e-7);
    let total = truncation + t1;

    let (bc, profile) = match kind {
        HalflineKind::HalflineMixed2 => (BcKind::HalflineMixed2, mixed2),
        HalflineKind::HalflineMixed1 => (
            BcKind::HalflineMixed1,
            mixed2
                .iter()
                .rev()
                .map(|s| ProfileSample {
                    x: -s.x,
                    u: -s.u,
                    du: s.du,
                })
                .collect(),
        ),
        HalflineKind::FulllineNeumann => {
            let mut whole: Vec<ProfileSample> = mixed2.clone();
            whole.extend(mixed2.iter().rev().filter(|s| s.x < 0.0).map(|s| ProfileSample {
                x: -s.x,
                u: -s.u,
                du: s.du,
            }));
            (BcKind::FulllineNeumann, whole)
        }
        HalflineKind::HalflineNeumann => unreachable!("handled above"),
    };
    let residual = profile_residual(&profile, m, ResidualKind::Absolute);
    Ok(StationarySolution {
        params: *m,
        bc,
        sign: classify_sign(&profile),
        profile,
        half_width: total,
        residual,
        residual_kind: ResidualKind::Absolute,
        period: None,
        alpha_outlook: None,
        markers,
    })
}

// ---------------------------------------------------------------------------
// Unbounded profiles
// ---------------------------------------------------------------------------

/// Where an unbounded profile starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "end", rename_all = "kebab-case")]
pub enum BlowupStart {
    /// From `(0, v0)`; `None` picks 1.01 times the unboundedness threshold.
    ZeroDirichletEnd { v0: Option<f64> },
    /// From `(u0, 0)` with `u0` set by `beta`.
    ZeroDerivativeEnd { beta: f64 },
}

/// Profile that grows from a zero (or flat) end to the escape cap.
pub fn find_blowup_profile(
    m: &ModelParams,
    start: BlowupStart,
    opts: &IntegrationOptions,
) -> Result<StationarySolution> {
    m.require_subcubic("find_blowup_profile")?;
    let cert = match start {
        BlowupStart::ZeroDirichletEnd { v0 } => {
            let v0 = match v0 {
                Some(v) => v,
                None => 1.01 * crate::barriers::axis_start_threshold(m)?,
            };
            certify_unbounded_axis_start(v0, m)?
        }
        BlowupStart::ZeroDerivativeEnd { beta } => {
            u_axis_start_data(beta, m)?;
            certify_unbounded_u_axis_start(beta, m)?
        }
    };
    if cert.verdict != Verdict::Unbounded {
        return Err(Error::Precondition(format!(
            "no unboundedness certificate for start ({}, {}): threshold {}",
            cert.start.u, cert.start.v, cert.threshold
        )));
    }
    let mut io = opts.clone();
    io.events.clear();
    let t = integrate(cert.start, m, &io)?;
    if t.terminal != Terminal::Escape {
        return Err(Error::Numerical(format!(
            "certified orbit did not reach the escape cap (ended with {:?})",
            t.terminal
        )));
    }
    let length = t.last().s;
    let mid = 0.5 * length;
    let map = |s: f64, p: PhasePoint| ProfileSample {
        x: s - mid,
        u: p.u,
        du: p.v,
    };
    let (profile, residual) = sample_profile(&[(&t, 0.0, length, &map)], m, ResidualKind::Relative, 1e-8);
    let outlook = if m.p() > 2.0 {
        AlphaOutlook::FiniteExpected
    } else {
        AlphaOutlook::PossiblyInfinite
    };
    Ok(StationarySolution {
        params: *m,
        bc: BcKind::BlowupProfile,
        sign: classify_sign(&profile),
        profile,
        half_width: mid,
        residual,
        residual_kind: ResidualKind::Relative,
        period: None,
        alpha_outlook: Some(outlook),
        markers: vec![
            marker("start_u", cert.start.u),
            marker("start_v", cert.start.v),
            marker("threshold", cert.threshold),
            marker("escape_length", length),
            marker("escape_u", t.last().point.u),
        ],
    })
}

// ---------------------------------------------------------------------------
// Nonexistence scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ScanOutcome {
    /// The orbit reached the v-axis (and so `u < 0`) first.
    EnteredNegativeHalf { s: f64, v: f64 },
    /// The orbit returned to the u-axis with `u > 0`.
    PositiveReturn { s: f64, u: f64 },
    /// Neither happened before the integration stopped.
    Inconclusive { terminal: Terminal },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub u0: f64,
    pub outcome: ScanOutcome,
}

/// Shoots from `(u0, 0)` for `u0 = u_max * factor^(-k)`, `k = 0..count`, and
/// records whether each orbit first returns to the u-axis or first reaches
/// the v-axis.
pub fn scan_positive_neumann(
    m: &ModelParams,
    u_max: f64,
    count: usize,
    factor: f64,
    opts: &IntegrationOptions,
) -> Result<Vec<ScanEntry>> {
    ensure_finite("u_max", u_max)?;
    if u_max <= 0.0 || !(factor > 1.0) {
        return Err(Error::Config("scan needs u_max > 0 and factor > 1".into()));
    }
    let events = vec![
        EventSpec::stop(EventSurface::UAxis, Crossing::Any),
        EventSpec::stop(EventSurface::VAxis, Crossing::Any),
    ];
    let io = opts.clone().with_events(events);
    let seeds: Vec<f64> = (0..count).map(|k| u_max * factor.powi(-(k as i32))).collect();
    seeds
        .par_iter()
        .map(|&u0| {
            let t = integrate(PhasePoint::new(u0, 0.0), m, &io)?;
            let outcome = match (t.terminal, t.events.last()) {
                (Terminal::EventStop, Some(e)) if e.kind == EventKind::VAxis => {
                    ScanOutcome::EnteredNegativeHalf { s: e.s, v: e.point.v }
                }
                (Terminal::EventStop, Some(e)) => ScanOutcome::PositiveReturn { s: e.s, u: e.point.u },
                (terminal, _) => ScanOutcome::Inconclusive { terminal },
            };
            Ok(ScanEntry { u0, outcome })
        })
        .collect()
}

/// Largest pointwise gap between two profiles after centering both on their
/// intervals, evaluated at the samples of `a` by linear interpolation of `b`.
pub fn aligned_sup_distance(a: &StationarySolution, b: &StationarySolution) -> f64 {
    let shift = b.profile[0].x - a.profile[0].x;
    a.profile
        .iter()
        .filter_map(|s| b.value_at(s.x + shift).map(|ub| (s.u - ub).abs()))
        .fold(0.0, f64::max)
}
