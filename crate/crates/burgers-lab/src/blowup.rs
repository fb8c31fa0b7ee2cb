//! Weighted `L^1` blow-up diagnostics on half-lines.
//!
//! On `(0, inf)` the functional is `N(t) = int u(x,t) e^{-alpha x} dx`; on
//! `(-inf, 0)` the weight is `e^{alpha x}`. When the differential inequality
//! `N' >= beta N^p` holds with `beta = alpha^(p-1) / 2`, the functional is
//! bounded below by `(N0^(1-p) - (p-1) beta t)^(-1/(p-1))`, which diverges at
//! `t* = N0^(1-p) / ((p-1) beta)`. The solution must therefore blow up no
//! later than `t*`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::ModelParams;
use crate::parabolic::{EndCondition, EvolutionResult, Field, Outcome};

/// Which half-line the functional lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `(0, inf)` truncated to the grid; weight `e^{-alpha (x - left)}`.
    RightHalfLine,
    /// `(-inf, 0)` truncated to the grid; weight `e^{alpha (x - right)}`.
    LeftHalfLine,
}

/// Quadrature value and an estimate of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedValue {
    pub value: f64,
    /// `|u_far| e^{-alpha L} / alpha`, the tail of a function that stays at
    /// its far-end value.
    pub tail_bound: f64,
}

/// Tail bound relative to the integral above which a truncation error is raised.
pub const TAIL_TOL: f64 = 1e-10;

/// Composite Simpson rule for uniformly spaced samples; an odd number of
/// intervals closes with the 3/8 rule on the last three.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 4 };
            let mut total = 0.0;
            let mut i = 0;
            while i + 2 <= simpson_end {
                total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
                i += 2;
            }
            if intervals % 2 == 1 {
                if intervals == 1 {
                    return 0.5 * h * (values[0] + values[1]);
                }
                let j = n - 4;
                total += 3.0 * h / 8.0 * (values[j] + 3.0 * values[j + 1] + 3.0 * values[j + 2] + values[j + 3]);
            }
            total
        }
    }
}

/// Weighted integral of a field over its grid, measured from the finite end.
pub fn weighted_norm(f: &Field, alpha: f64, side: Side) -> Result<WeightedValue> {
    ensure_finite("alpha", alpha)?;
    if alpha <= 0.0 {
        return Err(Error::Domain(format!("weight exponent must be positive, got {alpha}")));
    }
    let nodes = f.grid.nodes();
    let (left, right) = (f.grid.left(), f.grid.right());
    let weighted: Vec<f64> = nodes
        .iter()
        .zip(&f.values)
        .map(|(&x, &u)| {
            let distance = match side {
                Side::RightHalfLine => x - left,
                Side::LeftHalfLine => right - x,
            };
            u * (-alpha * distance).exp()
        })
        .collect();
    let value = simpson(&weighted, f.grid.spacing());
    let far = match side {
        Side::RightHalfLine => f.values[f.values.len() - 1],
        Side::LeftHalfLine => f.values[0],
    };
    let length = right - left;
    let tail_bound = far.abs() * (-alpha * length).exp() / alpha;
    if tail_bound > TAIL_TOL * value.abs().max(f64::MIN_POSITIVE) && tail_bound > 0.0 {
        return Err(Error::Truncation(format!(
            "tail bound {tail_bound:.3e} is not negligible against {value:.3e}; use a longer interval"
        )));
    }
    Ok(WeightedValue { value, tail_bound })
}

/// An admissible weight exponent with the bounds that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightChoice {
    pub alpha: f64,
    pub side: Side,
    /// Upper bounds on `alpha`, by name.
    pub bounds: Vec<(String, f64)>,
}

impl WeightChoice {
    /// Largest admissible exponent.
    pub fn ceiling(&self) -> f64 {
        self.bounds.iter().map(|(_, b)| *b).fold(f64::INFINITY, f64::min)
    }
}

fn hypotheses_error(detail: String) -> Error {
    Error::Precondition(format!("weight selection hypotheses fail: {detail}"))
}

/// Weight exponent for the blow-up argument matching `bc` on `side`.
///
/// * Neumann on `(0, inf)`, `lambda < 0`, `p >= 2`: `min{c/2, -2 lambda, 1}`
///   with `c` a lower bound of `u(0, t)`.
/// * `d_nu u = c2 u^2 + c1 u` on `(0, inf)` with `delta = c1 > 0` and
///   `epsilon = -c2 <= 1/2`, `lambda < 0`, `p >= 2`: `min{delta, -2 lambda, 1}`.
/// * `d_nu u = c2 u^2 + c1 u` on `(-inf, 0)` with `c2, c1 > 0`, `lambda <= 0`,
///   `p >= 2`: `min{2 c2, c1}`.
///
/// `requested` replaces the ceiling by a smaller exponent.
pub fn choose_weight(
    m: &ModelParams,
    c_bdry: f64,
    bc: EndCondition,
    side: Side,
    requested: Option<f64>,
) -> Result<WeightChoice> {
    let (p, lambda) = (m.p(), m.lambda());
    if p < 2.0 {
        return Err(hypotheses_error(format!("p >= 2 required, got {p}")));
    }
    let bounds: Vec<(String, f64)> = match (side, bc) {
        (Side::RightHalfLine, EndCondition::Neumann) => {
            if lambda >= 0.0 {
                return Err(hypotheses_error(format!("lambda < 0 required, got {lambda}")));
            }
            ensure_finite("c_bdry", c_bdry)?;
            if c_bdry <= 0.0 {
                return Err(hypotheses_error(format!(
                    "boundary lower bound must be positive, got {c_bdry}"
                )));
            }
            vec![
                ("c/2".into(), 0.5 * c_bdry),
                ("-2 lambda".into(), -2.0 * lambda),
                ("1".into(), 1.0),
            ]
        }
        (Side::RightHalfLine, EndCondition::NonlinearFlux { c2, c1 }) => {
            if lambda >= 0.0 {
                return Err(hypotheses_error(format!("lambda < 0 required, got {lambda}")));
            }
            let (delta, epsilon) = (c1, -c2);
            if delta <= 0.0 || epsilon > 0.5 {
                return Err(hypotheses_error(format!(
                    "flux must dominate delta u - epsilon u^2 with delta > 0, epsilon <= 1/2 (delta = {delta}, epsilon = {epsilon})"
                )));
            }
            vec![
                ("delta".into(), delta),
                ("-2 lambda".into(), -2.0 * lambda),
                ("1".into(), 1.0),
            ]
        }
        (Side::LeftHalfLine, EndCondition::NonlinearFlux { c2, c1 }) => {
            if lambda > 0.0 {
                return Err(hypotheses_error(format!("lambda <= 0 required, got {lambda}")));
            }
            if c2 <= 0.0 || c1 <= 0.0 {
                return Err(hypotheses_error(format!(
                    "flux must dominate c u^2 + d u with c, d > 0 (c = {c2}, d = {c1})"
                )));
            }
            vec![("2c".into(), 2.0 * c2), ("d".into(), c1)]
        }
        (side, bc) => {
            return Err(hypotheses_error(format!("no blow-up argument for {bc:?} on {side:?}")));
        }
    };
    let ceiling = bounds.iter().map(|(_, b)| *b).fold(f64::INFINITY, f64::min);
    let alpha = match requested {
        None => ceiling,
        Some(a) => {
            ensure_finite("alpha", a)?;
            if a <= 0.0 || a > ceiling {
                return Err(hypotheses_error(format!("requested alpha {a} outside (0, {ceiling}]")));
            }
            a
        }
    };
    Ok(WeightChoice { alpha, side, bounds })
}

/// Constant of the differential inequality and the horizon of its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupBound {
    /// `alpha^(p-1) / 2`, using the untruncated weight integral `1/alpha`.
    pub beta_h: f64,
    pub t_star: f64,
}

/// `beta_h = alpha^(p-1)/2` and `t* = N0^(1-p) / ((p-1) beta_h)`.
pub fn blowup_bound(n0: f64, m: &ModelParams, alpha: f64) -> Result<BlowupBound> {
    m.require_superlinear("blowup_bound")?;
    ensure_finite("N0", n0)?;
    ensure_finite("alpha", alpha)?;
    if n0 <= 0.0 {
        return Err(Error::Domain(format!("N0 must be positive, got {n0}")));
    }
    if alpha <= 0.0 {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let p = m.p();
    let beta_h = 0.5 * alpha.powf(p - 1.0);
    Ok(BlowupBound {
        beta_h,
        t_star: n0.powf(1.0 - p) / ((p - 1.0) * beta_h),
    })
}

/// Lower envelope `(N0^(1-p) - (p-1) beta t)^(-1/(p-1))`, infinite past the horizon.
pub fn lower_envelope(n0: f64, beta: f64, p: f64, t: f64) -> f64 {
    let base = n0.powf(1.0 - p) - (p - 1.0) * beta * t;
    if base <= 0.0 {
        f64::INFINITY
    } else {
        base.powf(-1.0 / (p - 1.0))
    }
}

// ---------------------------------------------------------------------------
// lambda = 0 conditions
// ---------------------------------------------------------------------------

/// Which blow-up result covers Neumann data at `lambda = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "kebab-case")]
pub enum Lambda0Branch {
    /// `1 < p <= 3`: every positive solution blows up.
    Unconditional,
    /// `p > 3`: data-dependent conditions.
    DataDependent,
    /// `p <= 1` or `lambda != 0`.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub threshold: f64,
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda0Report {
    pub branch: Lambda0Branch,
    /// `phi(0) > 2^((1-p)/(p-3))`.
    pub pointwise: Option<ThresholdCheck>,
    /// `int phi e^{-x} dx` against the mass threshold.
    pub mass: Option<ThresholdCheck>,
    /// `(2p - 4)/(3p - 7)`.
    pub delta: Option<f64>,
    /// Weight exponent of the mass argument in the limit `beta -> 1`.
    pub alpha: Option<f64>,
    /// True when some branch guarantees blow-up.
    pub blowup_guaranteed: bool,
}

/// `2^((1-p)/(p-3))`.
pub fn pointwise_threshold(p: f64) -> f64 {
    2f64.powf((1.0 - p) / (p - 3.0))
}

/// `(3p-7)/(p-3) * 2^((5-3p)/(p-3)) * ((2p-4)/(3p-7))^((4-2p)/(p-3))`.
pub fn mass_threshold(p: f64) -> f64 {
    let delta = (2.0 * p - 4.0) / (3.0 * p - 7.0);
    (3.0 * p - 7.0) / (p - 3.0) * 2f64.powf((5.0 - 3.0 * p) / (p - 3.0)) * delta.powf((4.0 - 2.0 * p) / (p - 3.0))
}

/// `2^((1-p)/(p-3)) beta^(-1/(p-3)) delta^((2-p)/(p-3))`.
pub fn mass_alpha(p: f64, beta: f64, delta: f64) -> f64 {
    2f64.powf((1.0 - p) / (p - 3.0)) * beta.powf(-1.0 / (p - 3.0)) * delta.powf((2.0 - p) / (p - 3.0))
}

/// Evaluates the `lambda = 0` blow-up conditions for Neumann data on `(0, L)`.
pub fn check_lambda0_conditions(m: &ModelParams, phi: &Field) -> Result<Lambda0Report> {
    let p = m.p();
    if m.lambda() != 0.0 || p <= 1.0 {
        return Ok(Lambda0Report {
            branch: Lambda0Branch::NotApplicable,
            pointwise: None,
            mass: None,
            delta: None,
            alpha: None,
            blowup_guaranteed: false,
        });
    }
    if p <= 3.0 {
        return Ok(Lambda0Report {
            branch: Lambda0Branch::Unconditional,
            pointwise: None,
            mass: None,
            delta: None,
            alpha: None,
            blowup_guaranteed: true,
        });
    }
    let at_zero = phi.values[0];
    let pt = pointwise_threshold(p);
    let pointwise = ThresholdCheck {
        threshold: pt,
        value: at_zero,
        holds: at_zero > pt,
    };
    let mass_value = weighted_norm(phi, 1.0, Side::RightHalfLine)?.value;
    let mt = mass_threshold(p);
    let mass = ThresholdCheck {
        threshold: mt,
        value: mass_value,
        holds: mass_value > mt,
    };
    let delta = (2.0 * p - 4.0) / (3.0 * p - 7.0);
    Ok(Lambda0Report {
        branch: Lambda0Branch::DataDependent,
        pointwise: Some(pointwise),
        mass: Some(mass),
        delta: Some(delta),
        alpha: Some(mass_alpha(p, 1.0, delta)),
        blowup_guaranteed: pointwise.holds || mass.holds,
    })
}

// ---------------------------------------------------------------------------
// Monitoring
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorOptions {
    /// Fraction of the run discarded before estimating the boundary bound.
    pub burn_in_fraction: f64,
    /// Replaces the largest admissible weight exponent.
    pub alpha: Option<f64>,
    /// Relative slack allowed when comparing against the lower envelope.
    pub envelope_tolerance: f64,
    /// Allowed overshoot of the horizon, as a fraction.
    pub horizon_slack: f64,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            burn_in_fraction: 0.05,
            alpha: None,
            envelope_tolerance: 1e-6,
            horizon_slack: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPoint {
    pub t: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub alpha: f64,
    pub beta_h: f64,
    /// Functional at the end of the burn-in.
    #[serde(rename = "N0")]
    pub n0: f64,
    /// Start of the window in which the inequality is used.
    pub tau: f64,
    pub burn_in_fraction: f64,
    /// Smallest `u` at the finite end after the burn-in.
    pub c_empirical: f64,
    /// Absolute time at which the lower envelope diverges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_b: Option<f64>,
    pub history: Vec<NormPoint>,
    pub hypotheses: Vec<Hypothesis>,
    /// Smallest `N / envelope` after `tau` (1 when nothing was compared).
    pub envelope_ratio: f64,
    /// `t_b - (1 + slack) t_star - dt`; nonpositive when consistent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_margin: Option<f64>,
    pub consistent: bool,
}

fn hypothesis(name: &str, holds: bool) -> Hypothesis {
    Hypothesis {
        name: name.to_string(),
        holds,
    }
}

/// Post-processes an evolution on a truncated half-line.
///
/// The boundary lower bound `c` is the minimum of `u` at the finite end over
/// the snapshots after the burn-in `tau`. The weight is chosen from `c`, the
/// functional is tracked over all snapshots, and from `tau` on it is compared
/// with the lower envelope started at `N(tau)`. When the hypotheses hold, a
/// detected blow-up time must not exceed `(1 + slack) t* + dt`.
pub fn monitor(evolution: &EvolutionResult, side: Side, opts: &MonitorOptions) -> Result<BlowupReport> {
    let m = evolution.params;
    let (bc, far_bc) = match side {
        Side::RightHalfLine => (evolution.bc.left, evolution.bc.right),
        Side::LeftHalfLine => (evolution.bc.right, evolution.bc.left),
    };
    if !matches!(far_bc, EndCondition::Dirichlet) {
        return Err(Error::Contract(format!(
            "the truncation end of a half-line run must be Dirichlet, found {far_bc:?}"
        )));
    }
    let usable: Vec<&Field> = evolution.snapshots.iter().filter(|f| !f.blown_up).collect();
    let t_first = usable[0].time;
    let t_last = usable[usable.len() - 1].time;
    let tau = t_first + opts.burn_in_fraction * (t_last - t_first);
    let end_value = |f: &Field| match side {
        Side::RightHalfLine => f.values[0],
        Side::LeftHalfLine => f.values[f.values.len() - 1],
    };
    let after: Vec<&&Field> = usable.iter().filter(|f| f.time >= tau).collect();
    let c_empirical = after.iter().map(|f| end_value(f)).fold(f64::INFINITY, f64::min);

    let mut hypotheses = vec![
        hypothesis("p >= 2", m.p() >= 2.0),
        hypothesis("boundary lower bound c > 0 after burn-in", c_empirical > 0.0),
    ];
    let choice = choose_weight(&m, c_empirical, bc, side, opts.alpha);
    hypotheses.push(hypothesis("weight selection hypotheses", choice.is_ok()));
    let alpha = match &choice {
        Ok(c) => c.alpha,
        Err(_) => opts.alpha.unwrap_or(1.0),
    };
    if matches!(bc, EndCondition::Neumann) {
        hypotheses.push(hypothesis(
            "u(0,t) >= 2 alpha after burn-in",
            c_empirical >= 2.0 * alpha,
        ));
    }

    let history: Vec<NormPoint> = usable
        .iter()
        .map(|f| weighted_norm(f, alpha, side).map(|w| NormPoint { t: f.time, n: w.value }))
        .collect::<Result<_>>()?;
    let start = history.iter().position(|h| h.t >= tau).unwrap_or(history.len() - 1);
    let n0 = history[start].n;
    let nondecreasing = history[start..].windows(2).all(|w| w[1].n >= w[0].n * (1.0 - 1e-12));
    hypotheses.push(hypothesis("N nondecreasing after burn-in", nondecreasing));

    let p = m.p();
    let all_hold = hypotheses.iter().all(|h| h.holds);
    let bound = if n0 > 0.0 {
        Some(blowup_bound(n0, &m, alpha)?)
    } else {
        None
    };
    let beta_h = 0.5 * alpha.powf(p - 1.0);
    let t_star = bound.map(|b| history[start].t + b.t_star);

    let mut envelope_ratio: f64 = 1.0;
    if n0 > 0.0 {
        for h in &history[start..] {
            let env = lower_envelope(n0, beta_h, p, h.t - history[start].t);
            if env.is_finite() && env > 0.0 {
                envelope_ratio = envelope_ratio.min(h.n / env);
            }
        }
    }
    let t_b = evolution.outcome.blowup_time();
    let dt = evolution.min_dt.max(0.0);
    let horizon_margin = match (t_b, t_star) {
        (Some(tb), Some(ts)) => Some(tb - ((1.0 + opts.horizon_slack) * ts + dt)),
        _ => None,
    };
    let consistent = match t_star {
        Some(horizon_end) if all_hold => {
            let before_horizon = horizon_margin.map_or(
                matches!(evolution.outcome, Outcome::BlowupDetected { .. }) || t_last < horizon_end,
                |m| m <= 0.0,
            );
            envelope_ratio >= 1.0 - opts.envelope_tolerance && before_horizon
        }
        _ => true,
    };
    Ok(BlowupReport {
        alpha,
        beta_h,
        n0,
        tau,
        burn_in_fraction: opts.burn_in_fraction,
        c_empirical,
        t_star: if all_hold { t_star } else { None },
        t_b,
        history,
        hypotheses,
        envelope_ratio,
        horizon_margin: if all_hold { horizon_margin } else { None },
        consistent,
    })
}
